#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "woodmon/moisture.hpp"

using namespace woodmon::moisture;

namespace {

// Reference values from tests/oracles/moisture_values.py (mpmath, 40 digits).
constexpr double kMoistureAt1e5 = 31.335403726708075;
constexpr double kMoistureAt1e9 = 9.6282607349062483;
constexpr double kLog10ResistanceAt20 = 6.3173946499684786;
constexpr double kResistanceAt20 = 2076799.8797238926;
constexpr double kResistanceAt6 = 34941997132.386669;
constexpr double kEmc23_85 = 17.861215965224569;
constexpr double kEmc20_65 = 11.996267219708281;
constexpr double kEmc23_30 = 6.1355064630936073;

// Independent route to M: bisection on the forward curve, no closed-form inverse.
double bisect_moisture(double ohms) {
    const double target = std::log10(std::log10(ohms) - 4.0);
    double lo = -50.0, hi = 100.0;  // forward residual decreases in M
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (1.009 - 0.0322 * mid > target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

bool rel_close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::abs(b); }

}  // namespace

TEST_CASE("resistance_to_moisture spot values") {
    SUBCASE("100 kOhm sits on the curve intercept and is saturated") {
        const auto m = resistance_to_moisture(Resistance(1.0e5));
        CHECK(m.percent() == doctest::Approx(kMoistureAt1e5).epsilon(1e-12));
        CHECK(m.percent() == doctest::Approx(1.009 / 0.0322).epsilon(1e-12));
        CHECK(m.saturated());
    }
    SUBCASE("20 % resistance") {
        const auto m = resistance_to_moisture(Resistance(kResistanceAt20));
        CHECK(m.percent() == doctest::Approx(20.0).epsilon(1e-10));
        CHECK_FALSE(m.saturated());
        CHECK(resistance_to_moisture(Resistance(std::pow(10.0, 6.317))).percent() == doctest::Approx(20.0).epsilon(2e-4));
    }
    SUBCASE("1 GOhm") {
        CHECK(resistance_to_moisture(Resistance(1.0e9)).percent() == doctest::Approx(kMoistureAt1e9).epsilon(1e-12));
    }
}

TEST_CASE("resistance_to_moisture domain errors") {
    CHECK_THROWS_AS(resistance_to_moisture(Resistance(1.0e4)), DomainError);
    CHECK_THROWS_AS(resistance_to_moisture(Resistance(5.0e3)), DomainError);
    // log10(R) - 4 above 10^1.009 puts M below zero: off-scale dry.
    CHECK_THROWS_AS(resistance_to_moisture(Resistance(1.0e15)), DomainError);
    // Just above 10 kOhm maps beyond 60 %.
    CHECK_THROWS_AS(resistance_to_moisture(Resistance(1.01e4)), DomainError);
    CHECK_THROWS_AS(Resistance(0.0), DomainError);
    CHECK_THROWS_AS(Resistance(-1.0), DomainError);
    CHECK_THROWS_AS(Resistance(std::nan("")), DomainError);
}

TEST_CASE("moisture_to_resistance spot values") {
    CHECK(moisture_to_resistance(MoistureContent(20.0)).ohms() == doctest::Approx(kResistanceAt20).epsilon(1e-12));
    CHECK(std::log10(moisture_to_resistance(MoistureContent(20.0)).ohms()) ==
          doctest::Approx(kLog10ResistanceAt20).epsilon(1e-14));
    CHECK(moisture_to_resistance(MoistureContent(6.0)).ohms() == doctest::Approx(kResistanceAt6).epsilon(1e-12));
    CHECK(moisture_to_resistance(MoistureContent(31.34)).ohms() == doctest::Approx(1.0e5).epsilon(2e-3));
    CHECK_THROWS_AS(moisture_to_resistance(MoistureContent(0.0)), DomainError);
    CHECK_THROWS_AS(MoistureContent(60.5), DomainError);
    CHECK_THROWS_AS(MoistureContent(-0.1), DomainError);
}

TEST_CASE("round trip through the curve") {
    for (double m : {6.0, 9.0, 12.0, 20.0, 25.0}) {
        const double back = resistance_to_moisture(moisture_to_resistance(MoistureContent(m))).percent();
        CHECK(rel_close(back, m, 1e-9));
    }
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(5.0, 30.0);
    for (int i = 0; i < 2000; ++i) {
        const double m = dist(rng);
        const double back = resistance_to_moisture(moisture_to_resistance(MoistureContent(m))).percent();
        REQUIRE(rel_close(back, m, 1e-9));
    }
}

TEST_CASE("closed-form inverse agrees with bisection") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> decades(4.2, 12.0);
    for (int i = 0; i < 500; ++i) {
        const double r = std::pow(10.0, decades(rng));
        REQUIRE(resistance_to_moisture(Resistance(r)).percent() == doctest::Approx(bisect_moisture(r)).epsilon(1e-9));
    }
}

TEST_CASE("monotone decreasing in resistance") {
    std::mt19937_64 rng(3);
    // Below ~10^4.12 Ohm the curve exits [0, 60]; sample the representable span.
    std::uniform_real_distribution<double> decades(4.13, 12.0);
    for (int i = 0; i < 5000; ++i) {
        double a = decades(rng), b = decades(rng);
        if (a == b)
            continue;
        if (a > b)
            std::swap(a, b);
        REQUIRE(resistance_to_moisture(Resistance(std::pow(10.0, a))).percent() >
                resistance_to_moisture(Resistance(std::pow(10.0, b))).percent());
    }
}

TEST_CASE("saturation flag tracks the 25 % ceiling exactly") {
    CHECK_FALSE(MoistureContent(25.0).saturated());
    CHECK(MoistureContent(std::nextafter(25.0, 26.0)).saturated());
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> decades(4.13, 12.0);
    for (int i = 0; i < 5000; ++i) {
        const auto m = resistance_to_moisture(Resistance(std::pow(10.0, decades(rng))));
        REQUIRE(m.saturated() == (m.percent() > 25.0));
    }
}

TEST_CASE("equilibrium moisture content") {
    const auto params = EmcParams::wood_handbook();
    CHECK(equilibrium_moisture({23.0, 0.85}, params).percent() == doctest::Approx(kEmc23_85).epsilon(1e-12));
    CHECK(equilibrium_moisture({20.0, 0.65}, params).percent() == doctest::Approx(kEmc20_65).epsilon(1e-12));
    CHECK(equilibrium_moisture({23.0, 0.30}, params).percent() == doctest::Approx(kEmc23_30).epsilon(1e-12));
    CHECK(equilibrium_moisture({23.0, 0.30}, params).percent() < equilibrium_moisture({23.0, 0.85}, params).percent());

    CHECK_THROWS_AS(equilibrium_moisture({23.0, 1.0}, params), DomainError);
    CHECK_THROWS_AS(equilibrium_moisture({23.0, 0.0}, params), DomainError);
    CHECK_THROWS_AS(equilibrium_moisture({61.0, 0.5}, params), DomainError);
    CHECK_THROWS_AS(equilibrium_moisture({-10.5, 0.5}, params), DomainError);
    CHECK_NOTHROW(params.validate());
}

TEST_CASE("EMC is monotone in RH and bounded over the valid grid") {
    const auto params = EmcParams::wood_handbook();
    for (double t = -10.0; t <= 60.0; t += 2.5) {
        double prev = 0.0;
        for (double h = 0.01; h < 0.995; h += 0.01) {
            const double emc = equilibrium_moisture({t, h}, params).percent();
            REQUIRE(emc > prev);
            REQUIRE(emc > 0.0);
            REQUIRE(emc < 35.0);
            prev = emc;
        }
    }
}

TEST_CASE("EmcParams validation rejects unphysical sets") {
    auto p = EmcParams::wood_handbook();
    p.k.c0 = 1.2;
    CHECK_THROWS_AS(p.validate(), DomainError);
    p = EmcParams::wood_handbook();
    p.w = {-1.0, 0.0, 0.0};
    CHECK_THROWS_AS(p.validate(), DomainError);
}

TEST_CASE("tendency") {
    const auto params = EmcParams::wood_handbook();
    SUBCASE("dry parquet in the humid chamber wets") {
        const auto t = tendency(MoistureContent(6.0), {23.0, 0.85}, params);
        CHECK(t.direction == Direction::Wetting);
        CHECK(t.magnitude == doctest::Approx(kEmc23_85 - 6.0).epsilon(1e-12));
        CHECK(t.magnitude == doctest::Approx(11.9).epsilon(0.01));
    }
    SUBCASE("at equilibrium it is stable with zero magnitude") {
        const auto emc = equilibrium_moisture({20.0, 0.65}, params);
        const auto t = tendency(emc, {20.0, 0.65}, params);
        CHECK(t.direction == Direction::Stable);
        CHECK(t.magnitude == 0.0);
    }
    SUBCASE("wet wood in a standard climate dries") {
        const auto t = tendency(MoistureContent(20.0), {20.0, 0.65}, params);
        CHECK(t.direction == Direction::Drying);
        CHECK(t.magnitude == doctest::Approx(kEmc20_65 - 20.0).epsilon(1e-12));
    }
    SUBCASE("values inside the tolerance band are Stable") {
        const double emc = equilibrium_moisture({20.0, 0.65}, params).percent();
        CHECK(tendency(MoistureContent(emc - 0.49), {20.0, 0.65}, params).direction == Direction::Stable);
        CHECK(tendency(MoistureContent(emc + 0.49), {20.0, 0.65}, params).direction == Direction::Stable);
        CHECK(tendency(MoistureContent(emc - 0.51), {20.0, 0.65}, params).direction == Direction::Wetting);
        CHECK(tendency(MoistureContent(emc + 0.51), {20.0, 0.65}, params).direction == Direction::Drying);
    }
}

TEST_CASE("tendency trichotomy follows the sign of magnitude") {
    const auto params = EmcParams::wood_handbook();
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> mc(0.0, 60.0), temp(-10.0, 60.0), rh(0.01, 0.99), tol(0.0, 2.0);
    for (int i = 0; i < 5000; ++i) {
        const double tolerance = tol(rng);
        const auto t = tendency(MoistureContent(mc(rng)), {temp(rng), rh(rng)}, params, tolerance);
        const int holds = (t.direction == Direction::Wetting) + (t.direction == Direction::Drying) +
                          (t.direction == Direction::Stable);
        REQUIRE(holds == 1);
        if (t.direction == Direction::Wetting)
            REQUIRE(t.magnitude > tolerance);
        else if (t.direction == Direction::Drying)
            REQUIRE(t.magnitude < -tolerance);
        else
            REQUIRE(std::abs(t.magnitude) <= tolerance);
    }
}

TEST_CASE("affine correction defaults to identity") {
    const Correction identity;
    const auto r = moisture_to_resistance(MoistureContent(12.0));
    CHECK(convert(r, 35.0, identity).percent() == resistance_to_moisture(r).percent());

    const Correction c{.offset_points = 1.0, .slope_points_per_degc = -0.1, .reference_c = 20.0};
    CHECK(convert(r, 30.0, c).percent() == doctest::Approx(12.0 + 1.0 - 1.0).epsilon(1e-9));
    CHECK(convert(r, 20.0, c).percent() == doctest::Approx(13.0).epsilon(1e-9));
}
