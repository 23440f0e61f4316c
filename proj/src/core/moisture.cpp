#include "woodmon/moisture.hpp"

#include <cmath>

namespace woodmon::moisture {

namespace {

constexpr double kMinTemperatureC = -10.0;
constexpr double kMaxTemperatureC = 60.0;

}  // namespace

Resistance::Resistance(double ohms) : ohms_(ohms) {
    if (!std::isfinite(ohms) || ohms <= 0.0)
        throw DomainError("resistance must be finite and positive");
}

MoistureContent::MoistureContent(double percent) : percent_(percent) {
    if (!std::isfinite(percent) || percent < 0.0 || percent > kMaxPercent)
        throw DomainError("moisture content outside [0, 60] %: " + std::to_string(percent));
}

void Environment::validate() const {
    if (!std::isfinite(temperature_c) || temperature_c < kMinTemperatureC || temperature_c > kMaxTemperatureC)
        throw DomainError("temperature outside [-10, 60] degC: " + std::to_string(temperature_c));
    if (!std::isfinite(relative_humidity) || relative_humidity <= 0.0 || relative_humidity >= 1.0)
        throw DomainError("relative humidity outside (0, 1): " + std::to_string(relative_humidity));
}

EmcParams EmcParams::wood_handbook() {
    return EmcParams{
        .w = {349.0, 1.29, 0.0135},
        .k = {0.805, 0.000736, -0.00000273},
        .k1 = {6.27, -0.00938, -0.000303},
        .k2 = {1.91, 0.0407, -0.000293},
    };
}

void EmcParams::validate() const {
    // Quadratics have at most one extremum, so endpoints plus the vertex bound them.
    auto check_at = [this](double t) {
        const double kv = k.at(t);
        if (!(kv > 0.0 && kv < 1.0))
            throw DomainError("EMC parameter K leaves (0,1) at " + std::to_string(t) + " degC");
        if (!(w.at(t) > 0.0))
            throw DomainError("EMC parameter W not positive at " + std::to_string(t) + " degC");
    };
    check_at(kMinTemperatureC);
    check_at(kMaxTemperatureC);
    for (const Quadratic* q : {&w, &k}) {
        if (q->c2 != 0.0) {
            const double vertex = -q->c1 / (2.0 * q->c2);
            if (vertex > kMinTemperatureC && vertex < kMaxTemperatureC)
                check_at(vertex);
        }
    }
}

std::string to_string(Direction d) {
    switch (d) {
    case Direction::Wetting:
        return "Wetting";
    case Direction::Drying:
        return "Drying";
    case Direction::Stable:
        return "Stable";
    }
    return "Stable";
}

Direction direction_from_string(const std::string& s) {
    if (s == "Wetting")
        return Direction::Wetting;
    if (s == "Drying")
        return Direction::Drying;
    if (s == "Stable")
        return Direction::Stable;
    throw std::invalid_argument("unknown tendency direction: " + s);
}

MoistureContent resistance_to_moisture(Resistance r) {
    const double decades = std::log10(r.ohms());
    if (decades <= 4.0)
        throw DomainError("resistance at or below 10 kOhm is off-scale wet (probe short?)");
    const double m = (kCurveIntercept - std::log10(decades - 4.0)) / kCurveSlope;
    if (m < 0.0)
        throw DomainError("resistance beyond the calibrated range is off-scale dry (probe open?)");
    if (m > kMaxPercent)
        throw DomainError("resistance maps above 60 % moisture, off-scale wet");
    return MoistureContent(m);
}

Resistance moisture_to_resistance(MoistureContent m) {
    if (m.percent() <= 0.0 || m.percent() >= kMaxPercent)
        throw DomainError("moisture content must lie in (0, 60) % for the forward curve");
    const double decades = 4.0 + std::pow(10.0, kCurveIntercept - kCurveSlope * m.percent());
    return Resistance(std::pow(10.0, decades));
}

MoistureContent convert(Resistance r, double temperature_c, const Correction& correction) {
    const MoistureContent raw = resistance_to_moisture(r);
    if (correction.is_identity())
        return raw;
    return MoistureContent(correction.apply(raw.percent(), temperature_c));
}

MoistureContent equilibrium_moisture(const Environment& env, const EmcParams& params) {
    env.validate();
    const double t = env.temperature_c;
    const double w = params.w.at(t);
    const double kh = params.k.at(t) * env.relative_humidity;
    const double k1 = params.k1.at(t);
    const double k2 = params.k2.at(t);

    const double hydrate = kh / (1.0 - kh);
    const double dissolved = (k1 * kh + 2.0 * k1 * k2 * kh * kh) / (1.0 + k1 * kh + k1 * k2 * kh * kh);
    return MoistureContent(1800.0 / w * (hydrate + dissolved));
}

Tendency tendency(MoistureContent current, const Environment& env, const EmcParams& params,
                  double stable_tolerance) {
    if (!(stable_tolerance >= 0.0))
        throw DomainError("stable tolerance must be non-negative");
    const double magnitude = equilibrium_moisture(env, params).percent() - current.percent();
    Direction d = Direction::Stable;
    if (magnitude > stable_tolerance)
        d = Direction::Wetting;
    else if (magnitude < -stable_tolerance)
        d = Direction::Drying;
    return Tendency{d, magnitude};
}

}  // namespace woodmon::moisture
