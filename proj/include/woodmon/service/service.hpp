#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <type_traits>
#include <unordered_set>
#include <vector>

#include "woodmon/json_core.hpp"
#include "woodmon/moisture.hpp"
#include "woodmon/protocol.hpp"
#include "woodmon/service/model.hpp"
#include "woodmon/service/record_log.hpp"
#include "woodmon/stability.hpp"

namespace woodmon::service {

// Tendency requested for a zone that has no readings yet.
class NoData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDedupWindow = 1024;

// Rejection class used for text bodies that are not a well-formed frame object.
inline constexpr const char* kMalformedText = "MalformedText";

struct ServiceOptions {
    // Empty: nothing is persisted.
    std::filesystem::path data_dir;
    moisture::EmcParams emc = moisture::EmcParams::wood_handbook();
    moisture::Correction correction;
    double stable_tolerance = moisture::kDefaultStableTolerance;
    DefaultRules default_rules;
    // Replay mode: receive time and "now" follow frame timestamps instead of
    // the wall clock, so results depend only on the input.
    bool clock_from_frames = false;
    // Overrides the wall clock when set (tests).
    std::function<std::uint64_t()> clock;
};

enum class Source { Binary, Text };

std::string to_string(Source s);

// One converted channel reading. Resistance and environment are kept so the
// moisture value can be recomputed.
struct StoredReading {
    std::uint64_t id = 0;
    std::uint32_t node_id = 0;
    std::uint8_t channel_index = 0;
    std::uint16_t seq = 0;
    std::uint64_t timestamp = 0;
    std::uint64_t received_at = 0;
    Source source = Source::Binary;
    std::uint16_t log10r_milli = 0;
    double resistance_ohms = 0.0;
    double temperature_c = 0.0;
    double relative_humidity = 0.0;
    std::uint16_t battery_mv = 0;
    moisture::MoistureContent moisture{0.0};
};

Json to_json(const StoredReading& r);

struct IngestOutcome {
    bool duplicate = false;
    std::vector<std::uint64_t> reading_ids;
    std::vector<std::uint8_t> off_scale_channels;
    std::vector<std::string> raised_alarms;
    std::vector<std::string> cleared_alarms;
};

Json to_json(const IngestOutcome& o);

struct Metrics {
    std::uint64_t frames_ok = 0;
    std::uint64_t frames_duplicate = 0;
    std::map<std::string, std::uint64_t> frames_rejected;  // by error class
    std::uint64_t readings = 0;
    std::uint64_t channels_off_scale = 0;
    std::uint64_t alarms_open = 0;
    std::uint64_t nodes_seen = 0;
};

Json to_json(const Metrics& m);

struct TendencyReport {
    std::uint64_t zone_id = 0;
    std::uint64_t reading_id = 0;
    std::uint64_t at = 0;  // timestamp of the reading used
    double current_percent = 0.0;
    double emc_percent = 0.0;
    double temperature_c = 0.0;
    double relative_humidity = 0.0;
    moisture::Tendency tendency;
};

Json to_json(const TendencyReport& t);

// Zone timeline entry: installation-window transitions and alarm lifecycle.
struct ZoneEvent {
    std::uint64_t at = 0;
    std::string kind;  // installation_window | alarm_raised | alarm_acknowledged | alarm_cleared
    Json detail;
};

Json to_json(const ZoneEvent& e);

struct ReadingQuery {
    std::optional<std::uint64_t> from;
    std::optional<std::uint64_t> to;
    std::optional<std::size_t> max_points;
};

class Service {
public:
    // Loads model.json and replays readings.ndjson from the data dir if present.
    explicit Service(ServiceOptions options);

    const ServiceOptions& options() const noexcept { return options_; }

    // Both throw protocol::DecodeError (or json::SchemaError for text) after
    // counting the rejection. A duplicate (node_id, seq) is acknowledged but
    // not stored.
    IngestOutcome ingest_frame(std::span<const std::uint8_t> bytes);
    IngestOutcome ingest_text(const std::string& body);
    IngestOutcome ingest_decoded(const protocol::Frame& frame, Source source);

    template <class F>
    auto read_model(F&& fn) const {
        std::shared_lock lock(mutex_);
        return fn(static_cast<const SiteModel&>(model_));
    }

    // Applies `fn` to a copy of the model, persists it, then swaps it in.
    // If `fn` or the write throws, nothing changes.
    template <class F>
    auto edit_model(F&& fn) {
        std::unique_lock lock(mutex_);
        SiteModel next = model_;
        if constexpr (std::is_void_v<decltype(fn(next))>) {
            fn(next);
            commit_model(std::move(next));
        } else {
            auto result = fn(next);
            commit_model(std::move(next));
            return result;
        }
    }

    // Content-addressed: the id is the SHA-256 of the bytes.
    Photo store_photo(std::uint64_t floor_id, const std::string& filename, const std::string& caption,
                      const std::string& bytes);
    // Throws NotFound.
    std::pair<Photo, std::string> load_photo(const std::string& photo_id) const;

    std::vector<StoredReading> query_readings(std::uint64_t zone_id, const ReadingQuery& q = {}) const;
    TendencyReport compute_tendency(std::uint64_t zone_id) const;
    std::vector<ZoneEvent> zone_events(std::uint64_t zone_id) const;

    std::vector<stability::AlarmEvent> alarms(std::optional<stability::AlarmState> state = std::nullopt) const;
    // Throws NotFound or stability::InvalidTransition.
    stability::AlarmEvent acknowledge(const std::string& alarm_id, const std::string& operator_id);

    Metrics metrics() const;
    std::uint64_t now() const;

private:
    struct ZoneRuntime {
        std::vector<stability::AlarmTracker> trackers;
        std::uint64_t last_timestamp = 0;
        bool built = false;
    };

    struct Ack {
        std::string operator_id;
        std::uint64_t at = 0;
    };

    struct NodeDedup {
        std::deque<std::uint16_t> order;
        std::unordered_multiset<std::uint16_t> seen;
    };

    void count_rejection(const std::string& cls);
    IngestOutcome apply_frame(const protocol::Frame& frame, Source source, std::uint64_t received_at, bool persist);
    void apply_ack(const std::string& alarm_id, const Ack& ack);
    void commit_model(SiteModel next);
    void rebuild_zone(std::uint64_t zone_id);
    void step_zone(std::uint64_t zone_id, const StoredReading& r, IngestOutcome* outcome);
    std::vector<std::size_t> zone_history(const Zone& z) const;
    stability::AlarmEvent* find_alarm(const std::string& alarm_id);
    std::uint64_t now_locked() const;
    void replay_log();

    ServiceOptions options_;
    mutable std::shared_mutex mutex_;
    SiteModel model_;
    std::unique_ptr<RecordLog> log_;

    std::vector<StoredReading> readings_;  // id = index + 1
    std::map<ChannelBinding, std::vector<std::size_t>> by_channel_;  // sorted by (timestamp, id)
    std::map<std::uint64_t, ZoneRuntime> runtimes_;
    std::map<std::string, Ack> acks_;
    std::map<std::uint32_t, NodeDedup> dedup_;
    std::map<std::string, std::string> photo_bytes_;  // in-memory mode only
    Metrics metrics_;
    std::uint64_t latest_frame_time_ = 0;
};

}  // namespace woodmon::service
