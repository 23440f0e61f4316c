#include "woodmon/service/service.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iterator>
#include <set>
#include <tuple>

#include <openssl/evp.h>

#include "woodmon/service/downsample.hpp"

namespace woodmon::service {

namespace {

namespace fs = std::filesystem;
using stability::AlarmEvent;
using stability::AlarmState;

constexpr const char* kModelFile = "model.json";
constexpr const char* kLogFile = "readings.ndjson";
constexpr const char* kPhotoDir = "photos";

void write_atomically(const fs::path& path, const std::string& text) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << text;
        out.flush();
        if (!out)
            throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

Source source_from_string(const std::string& s) {
    if (s == "binary")
        return Source::Binary;
    if (s == "text")
        return Source::Text;
    throw json::SchemaError("unknown reading source '" + s + "'");
}

int event_rank(const std::string& kind) {
    if (kind == "installation_window")
        return 0;
    if (kind == "alarm_raised")
        return 1;
    if (kind == "alarm_acknowledged")
        return 2;
    return 3;
}

}  // namespace

std::string to_string(Source s) { return s == Source::Binary ? "binary" : "text"; }

Json to_json(const StoredReading& r) {
    return {{"id", r.id},
            {"node_id", r.node_id},
            {"channel_index", r.channel_index},
            {"seq", r.seq},
            {"timestamp", json::iso8601(r.timestamp)},
            {"received_at", json::iso8601(r.received_at)},
            {"source", to_string(r.source)},
            {"log10r_milli", r.log10r_milli},
            {"resistance_ohms", r.resistance_ohms},
            {"temperature_c", r.temperature_c},
            {"relative_humidity", r.relative_humidity},
            {"battery_mv", r.battery_mv},
            {"moisture_percent", r.moisture.percent()},
            {"saturated", r.moisture.saturated()}};
}

Json to_json(const IngestOutcome& o) {
    return {{"duplicate", o.duplicate},
            {"reading_ids", o.reading_ids},
            {"off_scale_channels", o.off_scale_channels},
            {"raised_alarms", o.raised_alarms},
            {"cleared_alarms", o.cleared_alarms}};
}

Json to_json(const Metrics& m) {
    return {{"frames_ok", m.frames_ok},
            {"frames_duplicate", m.frames_duplicate},
            {"frames_rejected", m.frames_rejected},
            {"readings", m.readings},
            {"channels_off_scale", m.channels_off_scale},
            {"alarms_open", m.alarms_open},
            {"nodes_seen", m.nodes_seen}};
}

Json to_json(const TendencyReport& t) {
    return {{"zone_id", t.zone_id},
            {"reading_id", t.reading_id},
            {"at", json::iso8601(t.at)},
            {"current_percent", t.current_percent},
            {"emc_percent", t.emc_percent},
            {"temperature_c", t.temperature_c},
            {"relative_humidity", t.relative_humidity},
            {"direction", moisture::to_string(t.tendency.direction)},
            {"magnitude_points", t.tendency.magnitude}};
}

Json to_json(const ZoneEvent& e) { return {{"at", json::iso8601(e.at)}, {"kind", e.kind}, {"detail", e.detail}}; }

Service::Service(ServiceOptions options) : options_(std::move(options)), model_(options_.default_rules) {
    options_.emc.validate();
    if (options_.data_dir.empty())
        return;
    fs::create_directories(options_.data_dir / kPhotoDir);
    const fs::path model_path = options_.data_dir / kModelFile;
    if (fs::exists(model_path)) {
        std::ifstream in(model_path);
        Json j;
        try {
            j = Json::parse(in);
        } catch (const Json::parse_error& e) {
            throw std::runtime_error(model_path.string() + ": " + e.what());
        }
        model_ = SiteModel::from_snapshot(j, options_.default_rules);
    }
    log_ = std::make_unique<RecordLog>(options_.data_dir / kLogFile);
    replay_log();
}

void Service::replay_log() {
    for (const auto& rec : log_->loaded().records) {
        const std::string type = rec.value("type", "");
        if (type == "frame") {
            const auto frame = json::frame_from_json(rec.at("frame"));
            const auto received = rec.at("received_at").get<std::uint64_t>();
            apply_frame(frame, source_from_string(rec.at("source").get<std::string>()), received, false);
        } else if (type == "ack") {
            apply_ack(rec.at("alarm_id").get<std::string>(),
                      Ack{rec.at("operator").get<std::string>(), rec.at("at").get<std::uint64_t>()});
        }
    }
}

std::uint64_t Service::now() const {
    std::shared_lock lock(mutex_);
    return now_locked();
}

std::uint64_t Service::now_locked() const {
    if (options_.clock)
        return options_.clock();
    if (options_.clock_from_frames)
        return latest_frame_time_;
    const auto since = std::chrono::system_clock::now().time_since_epoch();
    return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::seconds>(since).count());
}

void Service::count_rejection(const std::string& cls) {
    std::unique_lock lock(mutex_);
    ++metrics_.frames_rejected[cls];
}

IngestOutcome Service::ingest_frame(std::span<const std::uint8_t> bytes) {
    protocol::Frame frame;
    try {
        frame = protocol::decode(bytes);
    } catch (const protocol::DecodeError& e) {
        count_rejection(protocol::to_string(e.kind()));
        throw;
    }
    std::unique_lock lock(mutex_);
    const auto received = options_.clock_from_frames ? frame.timestamp : now_locked();
    return apply_frame(frame, Source::Binary, received, true);
}

IngestOutcome Service::ingest_text(const std::string& body) {
    protocol::Frame frame;
    try {
        const auto j = Json::parse(body);
        frame = json::frame_from_json(j);
    } catch (const Json::exception& e) {
        count_rejection(kMalformedText);
        throw json::SchemaError(std::string("reading body is not valid JSON: ") + e.what());
    } catch (const json::SchemaError&) {
        count_rejection(kMalformedText);
        throw;
    }
    return ingest_decoded(frame, Source::Text);
}

IngestOutcome Service::ingest_decoded(const protocol::Frame& frame, Source source) {
    if (const auto problem = protocol::range_violation(frame); !problem.empty()) {
        count_rejection(protocol::to_string(protocol::DecodeErrorKind::RangeError));
        throw protocol::DecodeError(protocol::DecodeErrorKind::RangeError, problem);
    }
    std::unique_lock lock(mutex_);
    const auto received = options_.clock_from_frames ? frame.timestamp : now_locked();
    return apply_frame(frame, source, received, true);
}

IngestOutcome Service::apply_frame(const protocol::Frame& frame, Source source, std::uint64_t received_at,
                                   bool persist) {
    IngestOutcome outcome;
    NodeDedup& dd = dedup_[frame.node_id];
    if (dd.seen.contains(frame.seq)) {
        ++metrics_.frames_duplicate;
        outcome.duplicate = true;
        return outcome;
    }
    if (persist && log_)
        log_->append({{"type", "frame"},
                      {"source", to_string(source)},
                      {"received_at", received_at},
                      {"frame", json::to_json(frame)}});

    dd.order.push_back(frame.seq);
    dd.seen.insert(frame.seq);
    if (dd.order.size() > kDedupWindow) {
        dd.seen.erase(dd.seen.find(dd.order.front()));
        dd.order.pop_front();
    }
    latest_frame_time_ = std::max(latest_frame_time_, frame.timestamp);
    ++metrics_.frames_ok;

    const double temperature = frame.temp_centi_c / 100.0;
    const double rh = frame.rh_permille / 1000.0;
    for (const auto& ch : frame.channels) {
        StoredReading r;
        r.node_id = frame.node_id;
        r.channel_index = ch.channel_index;
        r.seq = frame.seq;
        r.timestamp = frame.timestamp;
        r.received_at = received_at;
        r.source = source;
        r.log10r_milli = ch.log10r_milli;
        r.resistance_ohms = protocol::from_log10r_milli(ch.log10r_milli);
        r.temperature_c = temperature;
        r.relative_humidity = rh;
        r.battery_mv = frame.battery_mv;
        try {
            r.moisture = moisture::convert(moisture::Resistance(r.resistance_ohms), temperature, options_.correction);
        } catch (const moisture::DomainError&) {
            ++metrics_.channels_off_scale;
            outcome.off_scale_channels.push_back(ch.channel_index);
            continue;
        }
        r.id = readings_.size() + 1;
        readings_.push_back(r);
        ++metrics_.readings;
        outcome.reading_ids.push_back(r.id);

        const ChannelBinding binding{r.node_id, r.channel_index};
        auto& list = by_channel_[binding];
        const auto pos = std::upper_bound(list.begin(), list.end(), r.timestamp,
                                          [this](std::uint64_t ts, std::size_t idx) { return ts < readings_[idx].timestamp; });
        list.insert(pos, readings_.size() - 1);

        if (const auto zone = model_.zone_for(binding))
            step_zone(*zone, r, &outcome);
    }
    return outcome;
}

std::vector<std::size_t> Service::zone_history(const Zone& z) const {
    std::vector<std::size_t> out;
    for (const auto& b : z.bindings) {
        const auto it = by_channel_.find(b);
        if (it != by_channel_.end())
            out.insert(out.end(), it->second.begin(), it->second.end());
    }
    std::sort(out.begin(), out.end(), [this](std::size_t a, std::size_t b) {
        return std::tie(readings_[a].timestamp, readings_[a].id) < std::tie(readings_[b].timestamp, readings_[b].id);
    });
    return out;
}

void Service::rebuild_zone(std::uint64_t zone_id) {
    const Zone& zone = model_.zone(zone_id);
    ZoneRuntime rt;
    const auto history = zone_history(zone);
    if (history.empty()) {
        runtimes_[zone_id] = std::move(rt);
        return;
    }
    // Unset delta baselines fall back to the zone's, then to its first sample.
    const double baseline = zone.baseline_percent.value_or(readings_[history.front()].moisture.percent());
    for (auto rule : zone.rules) {
        if (rule.kind == stability::RuleKind::DeltaFromBaseline && !rule.baseline_percent)
            rule.baseline_percent = baseline;
        rt.trackers.emplace_back(rule, zone_id);
    }
    for (auto idx : history) {
        const StoredReading& r = readings_[idx];
        for (auto& t : rt.trackers) {
            const auto tr = t.step({r.timestamp, r.moisture});
            if (tr && tr->kind == stability::AlarmTransition::Kind::Raised) {
                AlarmEvent& ev = t.events()[tr->event_index];
                if (const auto ack = acks_.find(ev.id); ack != acks_.end())
                    ev.acknowledge(ack->second.operator_id, ack->second.at);
            }
        }
        rt.last_timestamp = r.timestamp;
    }
    rt.built = true;
    runtimes_[zone_id] = std::move(rt);
}

void Service::step_zone(std::uint64_t zone_id, const StoredReading& r, IngestOutcome* outcome) {
    auto open_ids = [this, zone_id] {
        std::set<std::string> ids;
        for (const auto& t : runtimes_[zone_id].trackers)
            for (const auto& e : t.events())
                if (e.open())
                    ids.insert(e.id);
        return ids;
    };
    const auto before = open_ids();

    ZoneRuntime& rt = runtimes_[zone_id];
    if (!rt.built || r.timestamp < rt.last_timestamp) {
        rebuild_zone(zone_id);  // late sample: refold the ordered history
    } else {
        for (auto& t : rt.trackers) {
            const auto tr = t.step({r.timestamp, r.moisture});
            if (tr && tr->kind == stability::AlarmTransition::Kind::Raised) {
                AlarmEvent& ev = t.events()[tr->event_index];
                if (const auto ack = acks_.find(ev.id); ack != acks_.end())
                    ev.acknowledge(ack->second.operator_id, ack->second.at);
            }
        }
        rt.last_timestamp = r.timestamp;
    }

    const auto after = open_ids();
    std::set_difference(after.begin(), after.end(), before.begin(), before.end(),
                        std::back_inserter(outcome->raised_alarms));
    std::set_difference(before.begin(), before.end(), after.begin(), after.end(),
                        std::back_inserter(outcome->cleared_alarms));
}

void Service::commit_model(SiteModel next) {
    if (!options_.data_dir.empty())
        write_atomically(options_.data_dir / kModelFile, next.to_snapshot().dump(2));
    model_ = std::move(next);
    runtimes_.clear();
    for (const auto& [id, z] : model_.zones())
        rebuild_zone(id);
}

AlarmEvent* Service::find_alarm(const std::string& alarm_id) {
    for (auto& [zid, rt] : runtimes_)
        for (auto& t : rt.trackers)
            for (auto& e : t.events())
                if (e.id == alarm_id)
                    return &e;
    return nullptr;
}

void Service::apply_ack(const std::string& alarm_id, const Ack& ack) {
    acks_[alarm_id] = ack;
    if (AlarmEvent* ev = find_alarm(alarm_id); ev && ev->state == AlarmState::Raised)
        ev->acknowledge(ack.operator_id, ack.at);
}

AlarmEvent Service::acknowledge(const std::string& alarm_id, const std::string& operator_id) {
    if (operator_id.empty())
        throw InvalidRequest("operator must not be empty");
    std::unique_lock lock(mutex_);
    AlarmEvent* ev = find_alarm(alarm_id);
    if (!ev)
        throw NotFound("alarm " + alarm_id);
    const auto at = now_locked();
    AlarmEvent probe = *ev;
    probe.acknowledge(operator_id, at);  // throws InvalidTransition before anything is written
    if (log_)
        log_->append({{"type", "ack"}, {"alarm_id", alarm_id}, {"operator", operator_id}, {"at", at}});
    apply_ack(alarm_id, Ack{operator_id, at});
    return *ev;
}

Photo Service::store_photo(std::uint64_t floor_id, const std::string& filename, const std::string& caption,
                           const std::string& bytes) {
    if (bytes.empty())
        throw InvalidRequest("photo is empty");
    std::unique_lock lock(mutex_);
    model_.floor(floor_id);
    Photo photo{sha256_hex(bytes), filename, caption};
    if (options_.data_dir.empty()) {
        photo_bytes_[photo.photo_id] = bytes;
    } else {
        const fs::path path = options_.data_dir / kPhotoDir / photo.photo_id;
        if (!fs::exists(path))
            write_atomically(path, bytes);
    }
    SiteModel next = model_;
    next.add_photo(floor_id, photo);
    commit_model(std::move(next));
    return photo;
}

std::pair<Photo, std::string> Service::load_photo(const std::string& photo_id) const {
    std::shared_lock lock(mutex_);
    for (const auto& [id, f] : model_.floors()) {
        for (const auto& p : f.photos) {
            if (p.photo_id != photo_id)
                continue;
            if (options_.data_dir.empty())
                return {p, photo_bytes_.at(photo_id)};
            std::ifstream in(options_.data_dir / kPhotoDir / photo_id, std::ios::binary);
            if (!in)
                throw NotFound("photo bytes " + photo_id);
            return {p, std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>())};
        }
    }
    throw NotFound("photo " + photo_id);
}

std::vector<StoredReading> Service::query_readings(std::uint64_t zone_id, const ReadingQuery& q) const {
    if (q.max_points && *q.max_points == 0)
        throw InvalidRequest("max_points must be positive");
    std::shared_lock lock(mutex_);
    const Zone& zone = model_.zone(zone_id);
    std::vector<StoredReading> rows;
    for (auto idx : zone_history(zone)) {
        const auto& r = readings_[idx];
        if ((q.from && r.timestamp < *q.from) || (q.to && r.timestamp > *q.to))
            continue;
        rows.push_back(r);
    }
    if (!q.max_points || rows.size() <= *q.max_points)
        return rows;
    std::vector<double> values;
    values.reserve(rows.size());
    for (const auto& r : rows)
        values.push_back(r.moisture.percent());
    std::vector<StoredReading> out;
    for (auto i : minmax_downsample(values, *q.max_points))
        out.push_back(rows[i]);
    return out;
}

TendencyReport Service::compute_tendency(std::uint64_t zone_id) const {
    std::shared_lock lock(mutex_);
    const Zone& zone = model_.zone(zone_id);
    const auto history = zone_history(zone);
    if (history.empty())
        throw NoData("zone " + std::to_string(zone_id) + " has no readings");
    const StoredReading& r = readings_[history.back()];
    const moisture::Environment env{r.temperature_c, r.relative_humidity};
    TendencyReport rep;
    rep.zone_id = zone_id;
    rep.reading_id = r.id;
    rep.at = r.timestamp;
    rep.current_percent = r.moisture.percent();
    rep.emc_percent = moisture::equilibrium_moisture(env, options_.emc).percent();
    rep.temperature_c = r.temperature_c;
    rep.relative_humidity = r.relative_humidity;
    rep.tendency = moisture::tendency(r.moisture, env, options_.emc, options_.stable_tolerance);
    return rep;
}

std::vector<ZoneEvent> Service::zone_events(std::uint64_t zone_id) const {
    std::shared_lock lock(mutex_);
    const Zone& zone = model_.zone(zone_id);
    std::vector<ZoneEvent> out;

    if (zone.kind == ZoneKind::FloorCovering) {
        std::optional<stability::Verdict> prev;
        for (auto idx : zone_history(zone)) {
            const auto& r = readings_[idx];
            const auto v = stability::check_installation_window(r.moisture);
            if (prev != v)
                out.push_back({r.timestamp,
                               "installation_window",
                               {{"verdict", stability::to_string(v)}, {"value_percent", r.moisture.percent()}}});
            prev = v;
        }
    }

    if (const auto it = runtimes_.find(zone_id); it != runtimes_.end()) {
        for (const auto& t : it->second.trackers) {
            for (const auto& e : t.events()) {
                out.push_back({e.raised_at,
                               "alarm_raised",
                               {{"alarm_id", e.id}, {"rule_id", e.rule_id}, {"value_percent", e.triggering_value_percent}}});
                if (e.acknowledged_at)
                    out.push_back({*e.acknowledged_at,
                                   "alarm_acknowledged",
                                   {{"alarm_id", e.id}, {"rule_id", e.rule_id}, {"operator", *e.acknowledged_by}}});
                if (e.cleared_at)
                    out.push_back({*e.cleared_at,
                                   "alarm_cleared",
                                   {{"alarm_id", e.id}, {"rule_id", e.rule_id}, {"value_percent", *e.clearing_value_percent}}});
            }
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const ZoneEvent& a, const ZoneEvent& b) {
        return std::make_tuple(a.at, event_rank(a.kind)) < std::make_tuple(b.at, event_rank(b.kind));
    });
    return out;
}

std::vector<AlarmEvent> Service::alarms(std::optional<AlarmState> state) const {
    std::shared_lock lock(mutex_);
    std::vector<AlarmEvent> out;
    for (const auto& [zid, rt] : runtimes_)
        for (const auto& t : rt.trackers)
            for (const auto& e : t.events())
                if (!state || e.state == *state)
                    out.push_back(e);
    std::sort(out.begin(), out.end(),
              [](const AlarmEvent& a, const AlarmEvent& b) { return std::tie(a.raised_at, a.id) < std::tie(b.raised_at, b.id); });
    return out;
}

Metrics Service::metrics() const {
    std::shared_lock lock(mutex_);
    Metrics m = metrics_;
    m.alarms_open = 0;
    for (const auto& [zid, rt] : runtimes_)
        for (const auto& t : rt.trackers)
            if (t.open_event())
                ++m.alarms_open;
    m.nodes_seen = dedup_.size();
    return m;
}

}  // namespace woodmon::service
