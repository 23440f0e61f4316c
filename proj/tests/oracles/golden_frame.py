"""Builds tests/fixtures/golden_frame.bin with an independent bitwise CRC.

Frame: node 1, seq 0, ts 0, 3000 mV, 23.00 C, 850 permille, channel 0 at
log10r_milli 6317.
"""
import struct
import sys


def crc16_ccitt_false(data: bytes) -> int:
    crc = 0xFFFF
    for byte in data:
        for bit in range(7, -1, -1):
            top = (crc >> 15) & 1
            crc = (crc << 1) & 0xFFFF
            if top ^ ((byte >> bit) & 1):
                crc ^= 0x1021
    return crc


assert crc16_ccitt_false(b"123456789") == 0x29B1

body = b"XN" + struct.pack("<BIHQHhHB", 1, 1, 0, 0, 3000, 2300, 850, 1)
body += struct.pack("<BH", 0, 6317)
frame = body + struct.pack("<H", crc16_ccitt_false(body))

out = sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures/golden_frame.bin"
with open(out, "wb") as f:
    f.write(frame)
print(len(frame), frame.hex())
