#include "woodmon/protocol.hpp"

#include <array>
#include <bitset>
#include <cmath>

namespace woodmon::protocol {

namespace {

constexpr std::array<std::uint16_t, 256> make_crc_table() {
    std::array<std::uint16_t, 256> table{};
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint16_t c = static_cast<std::uint16_t>(i << 8);
        for (int b = 0; b < 8; ++b)
            c = (c & 0x8000) ? static_cast<std::uint16_t>((c << 1) ^ 0x1021) : static_cast<std::uint16_t>(c << 1);
        table[i] = c;
    }
    return table;
}

constexpr auto kCrcTable = make_crc_table();

class Writer {
public:
    explicit Writer(std::size_t reserve) { out_.reserve(reserve); }

    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) {
        u8(static_cast<std::uint8_t>(v));
        u8(static_cast<std::uint8_t>(v >> 8));
    }
    void u32(std::uint32_t v) {
        u16(static_cast<std::uint16_t>(v));
        u16(static_cast<std::uint16_t>(v >> 16));
    }
    void u64(std::uint64_t v) {
        u32(static_cast<std::uint32_t>(v));
        u32(static_cast<std::uint32_t>(v >> 32));
    }

    std::vector<std::uint8_t> take() { return std::move(out_); }
    std::span<const std::uint8_t> bytes() const { return out_; }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    std::uint8_t u8() { return in_[pos_++]; }
    std::uint16_t u16() {
        const std::uint16_t lo = u8();
        return static_cast<std::uint16_t>(lo | (std::uint16_t{u8()} << 8));
    }
    std::uint32_t u32() {
        const std::uint32_t lo = u16();
        return lo | (std::uint32_t{u16()} << 16);
    }
    std::uint64_t u64() {
        const std::uint64_t lo = u32();
        return lo | (std::uint64_t{u32()} << 32);
    }

private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string range_violation(const Frame& f) {
    if (f.channels.empty() || f.channels.size() > kMaxChannels)
        return "channel_count " + std::to_string(f.channels.size()) + " outside 1..10";
    if (f.rh_permille > kMaxRhPermille)
        return "rh_permille " + std::to_string(f.rh_permille) + " above 1000";
    std::bitset<kMaxChannels> seen;
    for (const auto& ch : f.channels) {
        if (ch.channel_index >= kMaxChannels)
            return "channel_index " + std::to_string(ch.channel_index) + " outside 0..9";
        if (seen.test(ch.channel_index))
            return "duplicate channel_index " + std::to_string(ch.channel_index);
        seen.set(ch.channel_index);
        if (ch.log10r_milli < kMinLog10rMilli || ch.log10r_milli > kMaxLog10rMilli)
            return "log10r_milli " + std::to_string(ch.log10r_milli) + " outside 4000..12000";
    }
    return {};
}

std::string to_string(DecodeErrorKind k) {
    switch (k) {
    case DecodeErrorKind::BadMagic:
        return "BadMagic";
    case DecodeErrorKind::UnsupportedVersion:
        return "UnsupportedVersion";
    case DecodeErrorKind::TruncatedFrame:
        return "TruncatedFrame";
    case DecodeErrorKind::TrailingBytes:
        return "TrailingBytes";
    case DecodeErrorKind::CrcMismatch:
        return "CrcMismatch";
    case DecodeErrorKind::RangeError:
        return "RangeError";
    }
    return "RangeError";
}

std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> data) noexcept {
    std::uint16_t crc = 0xFFFF;
    for (const std::uint8_t b : data)
        crc = static_cast<std::uint16_t>((crc << 8) ^ kCrcTable[((crc >> 8) ^ b) & 0xFF]);
    return crc;
}

std::vector<std::uint8_t> encode(const Frame& frame) {
    if (auto err = range_violation(frame); !err.empty())
        throw EncodeError(err);

    Writer w(encoded_size(frame.channels.size()));
    w.u8(kMagic0);
    w.u8(kMagic1);
    w.u8(kVersion);
    w.u32(frame.node_id);
    w.u16(frame.seq);
    w.u64(frame.timestamp);
    w.u16(frame.battery_mv);
    w.u16(static_cast<std::uint16_t>(frame.temp_centi_c));
    w.u16(frame.rh_permille);
    w.u8(static_cast<std::uint8_t>(frame.channels.size()));
    for (const auto& ch : frame.channels) {
        w.u8(ch.channel_index);
        w.u16(ch.log10r_milli);
    }
    w.u16(crc16_ccitt_false(w.bytes()));
    return w.take();
}

std::size_t declared_length(std::span<const std::uint8_t> bytes) noexcept {
    if (bytes.size() < kHeaderSize || bytes[0] != kMagic0 || bytes[1] != kMagic1 || bytes[2] != kVersion)
        return 0;
    const std::size_t n = bytes[kHeaderSize - 1];
    if (n == 0 || n > kMaxChannels)
        return 0;
    return encoded_size(n);
}

Frame decode(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2)
        throw DecodeError(DecodeErrorKind::TruncatedFrame, "frame shorter than magic");
    if (bytes[0] != kMagic0 || bytes[1] != kMagic1)
        throw DecodeError(DecodeErrorKind::BadMagic, "bad magic");
    if (bytes.size() < 3)
        throw DecodeError(DecodeErrorKind::TruncatedFrame, "frame shorter than version");
    if (bytes[2] != kVersion)
        throw DecodeError(DecodeErrorKind::UnsupportedVersion, "unsupported version " + std::to_string(bytes[2]));
    if (bytes.size() < kHeaderSize)
        throw DecodeError(DecodeErrorKind::TruncatedFrame, "frame shorter than header");

    const std::size_t n = bytes[kHeaderSize - 1];
    if (n == 0 || n > kMaxChannels)
        throw DecodeError(DecodeErrorKind::RangeError, "channel_count " + std::to_string(n) + " outside 1..10");
    const std::size_t total = encoded_size(n);
    if (bytes.size() < total)
        throw DecodeError(DecodeErrorKind::TruncatedFrame,
                          "frame has " + std::to_string(bytes.size()) + " of " + std::to_string(total) + " bytes");
    if (bytes.size() > total)
        throw DecodeError(DecodeErrorKind::TrailingBytes,
                          std::to_string(bytes.size() - total) + " bytes after declared frame end");

    const std::size_t body = total - kCrcSize;
    const std::uint16_t expected = crc16_ccitt_false(bytes.first(body));
    const std::uint16_t actual = static_cast<std::uint16_t>(bytes[body] | (bytes[body + 1] << 8));
    if (expected != actual)
        throw DecodeError(DecodeErrorKind::CrcMismatch, "crc mismatch");

    Reader r(bytes.subspan(3));
    Frame f;
    f.node_id = r.u32();
    f.seq = r.u16();
    f.timestamp = r.u64();
    f.battery_mv = r.u16();
    f.temp_centi_c = static_cast<std::int16_t>(r.u16());
    f.rh_permille = r.u16();
    r.u8();  // channel_count, already read
    f.channels.resize(n);
    for (auto& ch : f.channels) {
        ch.channel_index = r.u8();
        ch.log10r_milli = r.u16();
    }
    if (auto err = range_violation(f); !err.empty())
        throw DecodeError(DecodeErrorKind::RangeError, err);
    return f;
}

std::vector<std::span<const std::uint8_t>> split_stream(std::span<const std::uint8_t> bytes,
                                                        std::size_t* skipped_bytes) {
    std::vector<std::span<const std::uint8_t>> frames;
    std::size_t skipped = 0;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        const auto rest = bytes.subspan(pos);
        const std::size_t len = declared_length(rest);
        if (len != 0 && len <= rest.size()) {
            frames.push_back(rest.first(len));
            pos += len;
            continue;
        }
        ++pos;
        ++skipped;
        while (pos < bytes.size() && bytes[pos] != kMagic0) {
            ++pos;
            ++skipped;
        }
    }
    if (skipped_bytes)
        *skipped_bytes = skipped;
    return frames;
}

std::uint16_t to_log10r_milli(double ohms) {
    if (!(ohms > 0.0))
        return kMinLog10rMilli;
    const double milli = std::round(std::log10(ohms) * 1000.0);
    if (!(milli > kMinLog10rMilli))
        return kMinLog10rMilli;
    if (milli >= kMaxLog10rMilli)
        return kMaxLog10rMilli;
    return static_cast<std::uint16_t>(milli);
}

double from_log10r_milli(std::uint16_t milli) { return std::pow(10.0, milli / 1000.0); }

}  // namespace woodmon::protocol
