#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <iterator>
#include <random>

#include "woodmon/moisture.hpp"
#include "woodmon/protocol.hpp"
#include "protocol_fixtures.hpp"

using namespace woodmon::protocol;
using woodmon::test::golden_frame;
using woodmon::test::random_frame;
using woodmon::test::read_fixture;

namespace {

// Bit-serial CRC-16/CCITT-FALSE, independent of the table-driven one.
std::uint16_t reference_crc(std::span<const std::uint8_t> data) {
    std::uint16_t crc = 0xFFFF;
    for (std::uint8_t byte : data) {
        for (int bit = 7; bit >= 0; --bit) {
            const bool top = (crc & 0x8000) != 0;
            crc = static_cast<std::uint16_t>(crc << 1);
            if (top != (((byte >> bit) & 1) != 0))
                crc ^= 0x1021;
        }
    }
    return crc;
}

DecodeErrorKind decode_error(std::span<const std::uint8_t> bytes) {
    try {
        decode(bytes);
    } catch (const DecodeError& e) {
        return e.kind();
    }
    FAIL("decode unexpectedly succeeded");
    return DecodeErrorKind::RangeError;
}

}  // namespace

TEST_CASE("CRC check value and agreement with a bit-serial reference") {
    const std::string check = "123456789";
    const std::vector<std::uint8_t> bytes(check.begin(), check.end());
    CHECK(crc16_ccitt_false(bytes) == 0x29B1);
    CHECK(crc16_ccitt_false({}) == 0xFFFF);

    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> len(0, 300), byte(0, 255);
    for (int i = 0; i < 1000; ++i) {
        std::vector<std::uint8_t> data(static_cast<std::size_t>(len(rng)));
        for (auto& b : data)
            b = static_cast<std::uint8_t>(byte(rng));
        REQUIRE(crc16_ccitt_false(data) == reference_crc(data));
    }
}

TEST_CASE("encoded sizes") {
    CHECK(encoded_size(1) == 29);
    CHECK(encoded_size(10) == 56);
    Frame f = golden_frame();
    CHECK(encode(f).size() == 29);
    f.channels.clear();
    for (std::uint8_t i = 0; i < 10; ++i)
        f.channels.push_back({i, static_cast<std::uint16_t>(5000 + i)});
    CHECK(encode(f).size() == 56);
}

TEST_CASE("golden frame matches the fixture byte for byte") {
    const auto fixture = read_fixture("golden_frame.bin");
    const auto bytes = encode(golden_frame());
    CHECK(bytes == fixture);
    CHECK(decode(fixture) == golden_frame());
    // Trailer is little-endian.
    const std::uint16_t crc = reference_crc(std::span(fixture).first(fixture.size() - 2));
    CHECK(fixture[fixture.size() - 2] == (crc & 0xFF));
    CHECK(fixture[fixture.size() - 1] == (crc >> 8));
}

TEST_CASE("round trip over randomized frames") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 2000; ++i) {
        const Frame f = random_frame(rng);
        const auto bytes = encode(f);
        REQUIRE(bytes.size() == encoded_size(f.channels.size()));
        REQUIRE(decode(bytes) == f);
    }
}

TEST_CASE("every single-bit flip of the golden frame is rejected") {
    const auto golden = encode(golden_frame());
    for (std::size_t i = 0; i < golden.size() * 8; ++i) {
        auto bytes = golden;
        bytes[i / 8] ^= static_cast<std::uint8_t>(1u << (i % 8));
        CHECK_THROWS_AS(decode(bytes), DecodeError);
    }
}

TEST_CASE("decode error classes are distinct") {
    const auto golden = encode(golden_frame());

    CHECK(decode_error({}) == DecodeErrorKind::TruncatedFrame);
    CHECK(decode_error(std::span(golden).first(1)) == DecodeErrorKind::TruncatedFrame);
    CHECK(decode_error(std::span(golden).first(20)) == DecodeErrorKind::TruncatedFrame);
    CHECK(decode_error(std::span(golden).first(golden.size() - 1)) == DecodeErrorKind::TruncatedFrame);

    auto bytes = golden;
    bytes[0] = 'Y';
    CHECK(decode_error(bytes) == DecodeErrorKind::BadMagic);

    bytes = golden;
    bytes[2] = 2;
    CHECK(decode_error(bytes) == DecodeErrorKind::UnsupportedVersion);

    bytes = golden;
    bytes.back() ^= 0x01;
    CHECK(decode_error(bytes) == DecodeErrorKind::CrcMismatch);

    bytes = golden;
    bytes.push_back(0);
    CHECK(decode_error(bytes) == DecodeErrorKind::TrailingBytes);

    bytes = golden;
    bytes[23] = 11;
    CHECK(decode_error(bytes) == DecodeErrorKind::RangeError);

    // A value-range violation behind a valid CRC.
    Frame f = golden_frame();
    f.rh_permille = 1001;
    CHECK_THROWS_AS(encode(f), EncodeError);
    auto forged = encode(golden_frame());
    forged[21] = static_cast<std::uint8_t>(1001 & 0xFF);
    forged[22] = static_cast<std::uint8_t>(1001 >> 8);
    const auto crc = crc16_ccitt_false(std::span(forged).first(forged.size() - 2));
    forged[forged.size() - 2] = static_cast<std::uint8_t>(crc);
    forged[forged.size() - 1] = static_cast<std::uint8_t>(crc >> 8);
    CHECK(decode_error(forged) == DecodeErrorKind::RangeError);
}

TEST_CASE("encode rejects out-of-range frames") {
    Frame f = golden_frame();
    f.channels.clear();
    CHECK_THROWS_AS(encode(f), EncodeError);
    f = golden_frame();
    f.channels.push_back({0, 5000});
    CHECK_THROWS_AS(encode(f), EncodeError);  // duplicate index
    f = golden_frame();
    f.channels[0].log10r_milli = 3999;
    CHECK_THROWS_AS(encode(f), EncodeError);
    f.channels[0].log10r_milli = 12001;
    CHECK_THROWS_AS(encode(f), EncodeError);
    f = golden_frame();
    f.channels[0].channel_index = 10;
    CHECK_THROWS_AS(encode(f), EncodeError);
    f = golden_frame();
    for (std::uint8_t i = 1; i < 11; ++i)
        f.channels.push_back({static_cast<std::uint8_t>(i % 10), 5000});
    CHECK_THROWS_AS(encode(f), EncodeError);
}

TEST_CASE("log10(R) fixed point") {
    CHECK(to_log10r_milli(std::pow(10.0, 6.317)) == 6317);
    CHECK(to_log10r_milli(1.0) == kMinLog10rMilli);
    CHECK(to_log10r_milli(1.0e13) == kMaxLog10rMilli);
    CHECK(to_log10r_milli(0.0) == kMinLog10rMilli);
    CHECK(from_log10r_milli(6000) == doctest::Approx(1.0e6).epsilon(1e-12));
}

TEST_CASE("6317 millibels decode to 20 % within the quantization bound") {
    using namespace woodmon::moisture;
    const double mc = resistance_to_moisture(Resistance(from_log10r_milli(6317))).percent();
    CHECK(std::abs(mc - 20.0) <= 0.02);
    // Half a step either side stays inside the bound as well.
    const double lo = resistance_to_moisture(Resistance(std::pow(10.0, 6.3165))).percent();
    const double hi = resistance_to_moisture(Resistance(std::pow(10.0, 6.3175))).percent();
    CHECK(std::abs(lo - mc) < 0.0155);
    CHECK(std::abs(hi - mc) < 0.0155);
}

TEST_CASE("split_stream recovers frames around garbage") {
    std::mt19937_64 rng(5);
    std::vector<std::uint8_t> stream;
    std::vector<Frame> frames;
    for (int i = 0; i < 20; ++i) {
        frames.push_back(random_frame(rng));
        const auto b = encode(frames.back());
        stream.insert(stream.end(), b.begin(), b.end());
        if (i == 7) {
            for (std::uint8_t junk : {0x00, 0x11, 0x58, 0x22})
                stream.push_back(junk);
        }
    }
    std::size_t skipped = 0;
    const auto parts = split_stream(stream, &skipped);
    REQUIRE(parts.size() == frames.size());
    CHECK(skipped == 4);
    for (std::size_t i = 0; i < parts.size(); ++i)
        CHECK(decode(parts[i]) == frames[i]);
    CHECK(split_stream({}).empty());
}
