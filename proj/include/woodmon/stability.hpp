#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "woodmon/moisture.hpp"

namespace woodmon::stability {

// Parquet curl limit as a fraction of board width.
inline constexpr double kCurlLimitFraction = 0.002;

// Installation window for parquet, inclusive both ends.
inline constexpr double kInstallationMinPercent = 5.0;
inline constexpr double kInstallationMaxPercent = 9.0;

// Default rule parameters for the two zone kinds.
inline constexpr double kFloorDeltaPoints = 3.0;
inline constexpr double kStructuralLimitPercent = 20.0;
inline constexpr int kDefaultConsecutive = 2;
inline constexpr double kDefaultClearMargin = 0.5;

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class InvalidTransition : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct ParquetSpec {
    double width_mm = 0.0;
    double length_mm = 0.0;
    double thickness_mm = 0.0;

    void validate() const;
};

struct StabilityMeasurement {
    double curl_mm = 0.0;
    double face_curvature_mm = 0.0;
    double moisture_percent = 0.0;

    void validate() const;
};

enum class Verdict { Pass, Fail, NotSpecified };

std::string to_string(Verdict v);

struct CurlCheck {
    Verdict verdict = Verdict::Pass;
    double limit_mm = 0.0;
    double curl_mm = 0.0;
};

struct FaceCurvatureCheck {
    Verdict verdict = Verdict::NotSpecified;
    double measured_mm = 0.0;
};

double curl_limit(const ParquetSpec& spec);
CurlCheck check_curl(const ParquetSpec& spec, const StabilityMeasurement& meas);
// The flooring standard gives no face-curvature limit; the value is only recorded.
FaceCurvatureCheck check_face_curvature(const StabilityMeasurement& meas);
Verdict check_installation_window(moisture::MoistureContent mc);

enum class RuleKind { DeltaFromBaseline, AbsoluteThreshold };

std::string to_string(RuleKind k);
RuleKind rule_kind_from_string(const std::string& s);

struct AlarmRule {
    std::string id;  // [A-Za-z0-9_]+, unique within a zone
    RuleKind kind = RuleKind::AbsoluteThreshold;
    std::optional<double> baseline_percent;  // DeltaFromBaseline only
    double threshold_points = 0.0;
    int consecutive_required = kDefaultConsecutive;
    double clear_margin_points = kDefaultClearMargin;

    static AlarmRule floor_delta(std::optional<double> baseline = std::nullopt);
    static AlarmRule structural_absolute();

    // Throws ConfigError on any violated invariant, including a missing baseline.
    void validate() const;
    // Same checks minus the baseline requirement, for rules whose baseline is
    // resolved later from zone data.
    void validate_shape() const;

    // Value at which the rule trips: baseline + threshold, or threshold.
    double trip_level() const;
    bool trips(double percent) const;
    bool clears(double percent) const;

    friend bool operator==(const AlarmRule&, const AlarmRule&) = default;
};

enum class AlarmState { Raised, Acknowledged, Cleared };

std::string to_string(AlarmState s);
AlarmState alarm_state_from_string(const std::string& s);

struct AlarmEvent {
    std::string id;
    std::string rule_id;
    std::uint64_t zone_id = 0;
    std::uint64_t raised_at = 0;
    double triggering_value_percent = 0.0;
    AlarmState state = AlarmState::Raised;
    std::optional<std::string> acknowledged_by;
    std::optional<std::uint64_t> acknowledged_at;
    std::optional<std::uint64_t> cleared_at;
    std::optional<double> clearing_value_percent;

    bool open() const noexcept { return state != AlarmState::Cleared; }

    // Raised -> Acknowledged; anything else throws InvalidTransition.
    void acknowledge(const std::string& operator_id, std::uint64_t at);
    // Raised|Acknowledged -> Cleared; ack info is retained.
    void clear(std::uint64_t at, double value);

    friend bool operator==(const AlarmEvent&, const AlarmEvent&) = default;
};

std::string make_alarm_id(std::uint64_t zone_id, const std::string& rule_id, std::size_t ordinal);

struct AlarmTransition {
    enum class Kind { Raised, Cleared } kind;
    std::size_t event_index;
};

// Incremental form of the alarm engine: a left fold over one zone's samples
// for one rule. At most one event is open at a time; a re-trip after a clear
// opens a new event.
class AlarmTracker {
public:
    // `rule` must have a resolved baseline when it is a delta rule.
    AlarmTracker(AlarmRule rule, std::uint64_t zone_id);

    std::optional<AlarmTransition> step(const moisture::MoistureSample& sample);

    const AlarmRule& rule() const noexcept { return rule_; }
    const std::vector<AlarmEvent>& events() const noexcept { return events_; }
    std::vector<AlarmEvent>& events() noexcept { return events_; }
    std::optional<std::size_t> open_event() const noexcept { return open_; }

private:
    AlarmRule rule_;
    std::uint64_t zone_id_;
    int trip_streak_ = 0;
    int clear_streak_ = 0;
    std::optional<std::size_t> open_;
    std::vector<AlarmEvent> events_;
};

// Pure evaluation of a full, timestamp-ordered history. Throws ConfigError for
// a delta rule without a baseline and std::invalid_argument for unordered input.
std::vector<AlarmEvent> evaluate_alarm(const AlarmRule& rule, std::uint64_t zone_id,
                                       std::span<const moisture::MoistureSample> history);

}  // namespace woodmon::stability
