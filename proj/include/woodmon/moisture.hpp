#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace woodmon::moisture {

// Resistance-type hygrometer calibration, base-10 throughout:
//   log10(log10(R) - 4) = kCurveIntercept - kCurveSlope * M
inline constexpr double kCurveIntercept = 1.009;
inline constexpr double kCurveSlope = 0.0322;
inline constexpr double kMinValidOhms = 1.0e4;  // log10(R) must exceed 4

// Above this the meter is reported but flagged as unreliable.
inline constexpr double kSaturationCeiling = 25.0;
inline constexpr double kMaxPercent = 60.0;

inline constexpr double kDefaultStableTolerance = 0.5;

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class Resistance {
public:
    explicit Resistance(double ohms);
    double ohms() const noexcept { return ohms_; }

private:
    double ohms_;
};

// Oven-dry basis moisture content. `saturated` is derived, never set by hand.
class MoistureContent {
public:
    explicit MoistureContent(double percent);
    double percent() const noexcept { return percent_; }
    bool saturated() const noexcept { return percent_ > kSaturationCeiling; }

    friend bool operator==(const MoistureContent&, const MoistureContent&) = default;

private:
    double percent_;
};

struct Environment {
    double temperature_c = 20.0;
    double relative_humidity = 0.5;  // fraction, open interval (0, 1)

    // Throws DomainError when outside [-10, 60] degC or (0, 1) RH.
    void validate() const;
};

struct Quadratic {
    double c0 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;

    double at(double x) const noexcept { return c0 + x * (c1 + x * c2); }
};

// Hailwood-Horrobin sorption isotherm coefficients, each a quadratic in degC.
struct EmcParams {
    Quadratic w;
    Quadratic k;
    Quadratic k1;
    Quadratic k2;

    // Wood Handbook metric coefficients.
    static EmcParams wood_handbook();

    // Throws DomainError unless K in (0,1) and W > 0 across [-10, 60] degC.
    void validate() const;
};

enum class Direction { Wetting, Drying, Stable };

std::string to_string(Direction d);
Direction direction_from_string(const std::string& s);

struct Tendency {
    Direction direction = Direction::Stable;
    double magnitude = 0.0;  // EMC minus current MC, in percentage points
};

// Optional affine species/temperature correction applied after the curve:
//   M' = M + offset + slope * (T - reference)
// Identity by default.
struct Correction {
    double offset_points = 0.0;
    double slope_points_per_degc = 0.0;
    double reference_c = 20.0;

    bool is_identity() const noexcept { return offset_points == 0.0 && slope_points_per_degc == 0.0; }
    double apply(double percent, double temperature_c) const noexcept {
        return percent + offset_points + slope_points_per_degc * (temperature_c - reference_c);
    }
};

// One converted measurement.
struct MoistureSample {
    std::uint64_t timestamp = 0;  // Unix seconds
    MoistureContent moisture{0.0};
};

MoistureContent resistance_to_moisture(Resistance r);
Resistance moisture_to_resistance(MoistureContent m);

// Curve conversion followed by `correction`; throws DomainError like
// resistance_to_moisture, and also when the corrected value leaves [0, 60].
MoistureContent convert(Resistance r, double temperature_c, const Correction& correction);

MoistureContent equilibrium_moisture(const Environment& env, const EmcParams& params);

Tendency tendency(MoistureContent current, const Environment& env, const EmcParams& params,
                  double stable_tolerance = kDefaultStableTolerance);

}  // namespace woodmon::moisture
