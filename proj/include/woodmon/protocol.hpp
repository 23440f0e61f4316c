#pragma once

// Node-to-service telemetry frame. All multi-byte fields little-endian.
//
//   off  size  field
//     0     2  magic "XN" (0x58 0x4E)
//     2     1  version (1)
//     3     4  node_id
//     7     2  seq (wrapping)
//     9     8  timestamp, Unix seconds
//    17     2  battery_mv
//    19     2  temp_centi_c (signed)
//    21     2  rh_permille (0..1000)
//    23     1  channel_count (1..10)
//    24   3*n  { channel_index u8, log10r_milli u16 }
//  24+3n    2  CRC-16/CCITT-FALSE over bytes [0, 24+3n)

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace woodmon::protocol {

inline constexpr std::uint8_t kMagic0 = 0x58;
inline constexpr std::uint8_t kMagic1 = 0x4E;
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 24;
inline constexpr std::size_t kChannelSize = 3;
inline constexpr std::size_t kCrcSize = 2;
inline constexpr std::size_t kMaxChannels = 10;
inline constexpr std::uint16_t kMaxRhPermille = 1000;
// log10(R) in thousandths: 10 kOhm .. 1 TOhm.
inline constexpr std::uint16_t kMinLog10rMilli = 4000;
inline constexpr std::uint16_t kMaxLog10rMilli = 12000;

struct ChannelReading {
    std::uint8_t channel_index = 0;
    std::uint16_t log10r_milli = kMinLog10rMilli;

    friend bool operator==(const ChannelReading&, const ChannelReading&) = default;
};

struct Frame {
    std::uint32_t node_id = 0;
    std::uint16_t seq = 0;
    std::uint64_t timestamp = 0;
    std::uint16_t battery_mv = 0;
    std::int16_t temp_centi_c = 0;
    std::uint16_t rh_permille = 0;
    std::vector<ChannelReading> channels;

    friend bool operator==(const Frame&, const Frame&) = default;
};

enum class DecodeErrorKind { BadMagic, UnsupportedVersion, TruncatedFrame, TrailingBytes, CrcMismatch, RangeError };

std::string to_string(DecodeErrorKind k);

class DecodeError : public std::runtime_error {
public:
    DecodeError(DecodeErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    DecodeErrorKind kind() const noexcept { return kind_; }

private:
    DecodeErrorKind kind_;
};

class EncodeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor.
std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> data) noexcept;

constexpr std::size_t encoded_size(std::size_t channel_count) noexcept {
    return kHeaderSize + kChannelSize * channel_count + kCrcSize;
}

// First violated frame invariant, or an empty string when the frame is valid.
std::string range_violation(const Frame& frame);

// Throws EncodeError when any field violates the frame invariants.
std::vector<std::uint8_t> encode(const Frame& frame);

// Accepts arbitrary bytes; exactly one frame must be present.
Frame decode(std::span<const std::uint8_t> bytes);

// Length of the frame starting at `bytes` as declared by its header, or 0
// when the header is incomplete or malformed.
std::size_t declared_length(std::span<const std::uint8_t> bytes) noexcept;

// Splits a concatenation of frames. Undecodable regions are skipped up to the
// next magic and counted in `skipped_bytes` if given.
std::vector<std::span<const std::uint8_t>> split_stream(std::span<const std::uint8_t> bytes,
                                                        std::size_t* skipped_bytes = nullptr);

// round(log10(ohms) * 1000) clamped to the wire range.
std::uint16_t to_log10r_milli(double ohms);
double from_log10r_milli(std::uint16_t milli);

}  // namespace woodmon::protocol
