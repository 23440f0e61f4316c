#include "woodmon/stability.hpp"

#include <algorithm>
#include <cmath>

namespace woodmon::stability {

namespace {

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }
bool finite_non_negative(double v) { return std::isfinite(v) && v >= 0.0; }

bool valid_rule_id(const std::string& id) {
    return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
    });
}

}  // namespace

void ParquetSpec::validate() const {
    if (!finite_positive(width_mm) || !finite_positive(length_mm) || !finite_positive(thickness_mm))
        throw ConfigError("parquet dimensions must be positive");
}

void StabilityMeasurement::validate() const {
    if (!finite_non_negative(curl_mm) || !finite_non_negative(face_curvature_mm) ||
        !finite_non_negative(moisture_percent))
        throw ConfigError("stability measurements must be finite and non-negative");
}

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::Pass:
        return "Pass";
    case Verdict::Fail:
        return "Fail";
    case Verdict::NotSpecified:
        return "NotSpecified";
    }
    return "NotSpecified";
}

double curl_limit(const ParquetSpec& spec) {
    spec.validate();
    return kCurlLimitFraction * spec.width_mm;
}

CurlCheck check_curl(const ParquetSpec& spec, const StabilityMeasurement& meas) {
    meas.validate();
    const double limit = curl_limit(spec);
    return CurlCheck{meas.curl_mm > limit ? Verdict::Fail : Verdict::Pass, limit, meas.curl_mm};
}

FaceCurvatureCheck check_face_curvature(const StabilityMeasurement& meas) {
    return FaceCurvatureCheck{Verdict::NotSpecified, meas.face_curvature_mm};
}

Verdict check_installation_window(moisture::MoistureContent mc) {
    const double p = mc.percent();
    return (p >= kInstallationMinPercent && p <= kInstallationMaxPercent) ? Verdict::Pass : Verdict::Fail;
}

std::string to_string(RuleKind k) {
    return k == RuleKind::DeltaFromBaseline ? "DeltaFromBaseline" : "AbsoluteThreshold";
}

RuleKind rule_kind_from_string(const std::string& s) {
    if (s == "DeltaFromBaseline")
        return RuleKind::DeltaFromBaseline;
    if (s == "AbsoluteThreshold")
        return RuleKind::AbsoluteThreshold;
    throw ConfigError("unknown rule kind: " + s);
}

AlarmRule AlarmRule::floor_delta(std::optional<double> baseline) {
    return AlarmRule{"delta", RuleKind::DeltaFromBaseline, baseline, kFloorDeltaPoints, kDefaultConsecutive,
                     kDefaultClearMargin};
}

AlarmRule AlarmRule::structural_absolute() {
    return AlarmRule{"structural", RuleKind::AbsoluteThreshold, std::nullopt, kStructuralLimitPercent,
                     kDefaultConsecutive, kDefaultClearMargin};
}

void AlarmRule::validate_shape() const {
    if (!valid_rule_id(id))
        throw ConfigError("rule id must be non-empty [A-Za-z0-9_]: '" + id + "'");
    if (!finite_positive(threshold_points))
        throw ConfigError("rule '" + id + "': threshold_points must be > 0");
    if (consecutive_required < 1)
        throw ConfigError("rule '" + id + "': consecutive_required must be >= 1");
    if (!finite_non_negative(clear_margin_points))
        throw ConfigError("rule '" + id + "': clear_margin_points must be >= 0");
    if (baseline_percent && !std::isfinite(*baseline_percent))
        throw ConfigError("rule '" + id + "': baseline must be finite");
}

void AlarmRule::validate() const {
    validate_shape();
    if (kind == RuleKind::DeltaFromBaseline && !baseline_percent)
        throw ConfigError("rule '" + id + "': DeltaFromBaseline requires a baseline");
}

double AlarmRule::trip_level() const {
    if (kind == RuleKind::DeltaFromBaseline) {
        if (!baseline_percent)
            throw ConfigError("rule '" + id + "': DeltaFromBaseline requires a baseline");
        return *baseline_percent + threshold_points;
    }
    return threshold_points;
}

bool AlarmRule::trips(double percent) const {
    // "increased over N points" is strict; an absolute limit is itself unsafe.
    if (kind == RuleKind::DeltaFromBaseline)
        return percent - *baseline_percent > threshold_points;
    return percent >= threshold_points;
}

bool AlarmRule::clears(double percent) const { return percent < trip_level() - clear_margin_points; }

std::string to_string(AlarmState s) {
    switch (s) {
    case AlarmState::Raised:
        return "Raised";
    case AlarmState::Acknowledged:
        return "Acknowledged";
    case AlarmState::Cleared:
        return "Cleared";
    }
    return "Raised";
}

AlarmState alarm_state_from_string(const std::string& s) {
    if (s == "Raised")
        return AlarmState::Raised;
    if (s == "Acknowledged")
        return AlarmState::Acknowledged;
    if (s == "Cleared")
        return AlarmState::Cleared;
    throw std::invalid_argument("unknown alarm state: " + s);
}

void AlarmEvent::acknowledge(const std::string& operator_id, std::uint64_t at) {
    if (state != AlarmState::Raised)
        throw InvalidTransition("alarm " + id + " is " + to_string(state) + ", only Raised can be acknowledged");
    if (at < raised_at)
        throw InvalidTransition("acknowledgement precedes alarm " + id);
    state = AlarmState::Acknowledged;
    acknowledged_by = operator_id;
    acknowledged_at = at;
}

void AlarmEvent::clear(std::uint64_t at, double value) {
    if (state == AlarmState::Cleared)
        throw InvalidTransition("alarm " + id + " is already Cleared");
    state = AlarmState::Cleared;
    cleared_at = std::max(at, raised_at);
    clearing_value_percent = value;
}

std::string make_alarm_id(std::uint64_t zone_id, const std::string& rule_id, std::size_t ordinal) {
    return "z" + std::to_string(zone_id) + "-" + rule_id + "-" + std::to_string(ordinal);
}

AlarmTracker::AlarmTracker(AlarmRule rule, std::uint64_t zone_id) : rule_(std::move(rule)), zone_id_(zone_id) {
    rule_.validate();
}

std::optional<AlarmTransition> AlarmTracker::step(const moisture::MoistureSample& sample) {
    const double v = sample.moisture.percent();
    if (!open_) {
        trip_streak_ = rule_.trips(v) ? trip_streak_ + 1 : 0;
        if (trip_streak_ < rule_.consecutive_required)
            return std::nullopt;
        trip_streak_ = 0;
        clear_streak_ = 0;
        AlarmEvent ev;
        ev.id = make_alarm_id(zone_id_, rule_.id, events_.size() + 1);
        ev.rule_id = rule_.id;
        ev.zone_id = zone_id_;
        ev.raised_at = sample.timestamp;
        ev.triggering_value_percent = v;
        events_.push_back(std::move(ev));
        open_ = events_.size() - 1;
        return AlarmTransition{AlarmTransition::Kind::Raised, *open_};
    }

    clear_streak_ = rule_.clears(v) ? clear_streak_ + 1 : 0;
    if (clear_streak_ < rule_.consecutive_required)
        return std::nullopt;
    clear_streak_ = 0;
    const std::size_t idx = *open_;
    events_[idx].clear(sample.timestamp, v);
    open_.reset();
    return AlarmTransition{AlarmTransition::Kind::Cleared, idx};
}

std::vector<AlarmEvent> evaluate_alarm(const AlarmRule& rule, std::uint64_t zone_id,
                                       std::span<const moisture::MoistureSample> history) {
    rule.validate();
    for (std::size_t i = 1; i < history.size(); ++i) {
        if (history[i].timestamp < history[i - 1].timestamp)
            throw std::invalid_argument("alarm history must be ordered by timestamp");
    }
    AlarmTracker tracker(rule, zone_id);
    for (const auto& s : history)
        tracker.step(s);
    return tracker.events();
}

}  // namespace woodmon::stability
