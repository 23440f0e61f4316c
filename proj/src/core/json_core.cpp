#include "woodmon/json_core.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <ctime>

namespace woodmon::json {

namespace {

Json quadratic(const moisture::Quadratic& q) { return Json::array({q.c0, q.c1, q.c2}); }

moisture::Quadratic quadratic_from(const Json& j, const char* key) {
    const auto v = field<std::vector<double>>(j, key, "emc_params");
    if (v.size() != 3)
        throw SchemaError(std::string("emc_params: '") + key + "' needs three coefficients");
    return {v[0], v[1], v[2]};
}

template <class T>
T ranged_int(const Json& j, const char* key, const std::string& where) {
    const auto v = field<std::int64_t>(j, key, where);
    if (v < static_cast<std::int64_t>(std::numeric_limits<T>::min()) ||
        v > static_cast<std::int64_t>(std::numeric_limits<T>::max()))
        throw SchemaError(where + ": '" + key + "' does not fit its field width");
    return static_cast<T>(v);
}

}  // namespace

void expect_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object())
        throw SchemaError(where + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
        if (!known)
            throw SchemaError(where + ": unknown key '" + key + "'");
    }
}

std::string iso8601(std::uint64_t unix_seconds) {
    const auto t = static_cast<std::time_t>(unix_seconds);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::uint64_t parse_time(const std::string& text) {
    std::uint64_t value = 0;
    const auto* end = text.data() + text.size();
    if (auto [p, ec] = std::from_chars(text.data(), end, value); ec == std::errc{} && p == end)
        return value;
    std::tm tm{};
    char z = 0;
    if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &tm.tm_year, &tm.tm_mon, &tm.tm_mday, &tm.tm_hour,
                    &tm.tm_min, &tm.tm_sec, &z) != 7 ||
        z != 'Z' || text.size() != 20)
        throw SchemaError("timestamp must be ISO-8601 UTC (YYYY-MM-DDTHH:MM:SSZ) or Unix seconds: " + text);
    tm.tm_year -= 1900;
    tm.tm_mon -= 1;
    const std::time_t t = timegm(&tm);
    if (t < 0)
        throw SchemaError("timestamp before 1970: " + text);
    return static_cast<std::uint64_t>(t);
}

Json to_json(const moisture::EmcParams& p) {
    return {{"w", quadratic(p.w)}, {"k", quadratic(p.k)}, {"k1", quadratic(p.k1)}, {"k2", quadratic(p.k2)}};
}

moisture::EmcParams emc_params_from_json(const Json& j) {
    expect_keys(j, {"w", "k", "k1", "k2"}, "emc_params");
    return {quadratic_from(j, "w"), quadratic_from(j, "k"), quadratic_from(j, "k1"), quadratic_from(j, "k2")};
}

Json to_json(const moisture::Correction& c) {
    return {{"offset_points", c.offset_points},
            {"slope_points_per_degc", c.slope_points_per_degc},
            {"reference_c", c.reference_c}};
}

moisture::Correction correction_from_json(const Json& j) {
    expect_keys(j, {"offset_points", "slope_points_per_degc", "reference_c"}, "correction");
    moisture::Correction c;
    c.offset_points = field_or<double>(j, "offset_points", 0.0, "correction");
    c.slope_points_per_degc = field_or<double>(j, "slope_points_per_degc", 0.0, "correction");
    c.reference_c = field_or<double>(j, "reference_c", 20.0, "correction");
    return c;
}

Json to_json(const moisture::Tendency& t) {
    return {{"direction", moisture::to_string(t.direction)}, {"magnitude_points", t.magnitude}};
}

Json to_json(const stability::ParquetSpec& p) {
    return {{"width_mm", p.width_mm}, {"length_mm", p.length_mm}, {"thickness_mm", p.thickness_mm}};
}

stability::ParquetSpec parquet_from_json(const Json& j) {
    expect_keys(j, {"width_mm", "length_mm", "thickness_mm"}, "parquet");
    stability::ParquetSpec p{field<double>(j, "width_mm", "parquet"), field<double>(j, "length_mm", "parquet"),
                             field<double>(j, "thickness_mm", "parquet")};
    p.validate();
    return p;
}

Json to_json(const stability::AlarmRule& r) {
    Json j = {{"id", r.id},
              {"kind", stability::to_string(r.kind)},
              {"threshold_points", r.threshold_points},
              {"consecutive_required", r.consecutive_required},
              {"clear_margin_points", r.clear_margin_points}};
    j["baseline_percent"] = r.baseline_percent ? Json(*r.baseline_percent) : Json(nullptr);
    return j;
}

stability::AlarmRule alarm_rule_from_json(const Json& j) {
    const std::string where = "rule";
    expect_keys(j, {"id", "kind", "baseline_percent", "threshold_points", "consecutive_required", "clear_margin_points"},
                where);
    stability::AlarmRule r;
    r.id = field<std::string>(j, "id", where);
    r.kind = stability::rule_kind_from_string(field<std::string>(j, "kind", where));
    if (j.contains("baseline_percent") && !j.at("baseline_percent").is_null())
        r.baseline_percent = field<double>(j, "baseline_percent", where);
    r.threshold_points = field<double>(j, "threshold_points", where);
    r.consecutive_required = field_or<int>(j, "consecutive_required", stability::kDefaultConsecutive, where);
    r.clear_margin_points = field_or<double>(j, "clear_margin_points", stability::kDefaultClearMargin, where);
    r.validate_shape();
    return r;
}

Json to_json(const stability::AlarmEvent& e) {
    Json j = {{"id", e.id},
              {"rule_id", e.rule_id},
              {"zone_id", e.zone_id},
              {"raised_at", iso8601(e.raised_at)},
              {"triggering_value_percent", e.triggering_value_percent},
              {"state", stability::to_string(e.state)}};
    j["acknowledged_by"] = e.acknowledged_by ? Json(*e.acknowledged_by) : Json(nullptr);
    j["acknowledged_at"] = e.acknowledged_at ? Json(iso8601(*e.acknowledged_at)) : Json(nullptr);
    j["cleared_at"] = e.cleared_at ? Json(iso8601(*e.cleared_at)) : Json(nullptr);
    j["clearing_value_percent"] = e.clearing_value_percent ? Json(*e.clearing_value_percent) : Json(nullptr);
    return j;
}

stability::AlarmEvent alarm_event_from_json(const Json& j) {
    const std::string where = "alarm";
    stability::AlarmEvent e;
    e.id = field<std::string>(j, "id", where);
    e.rule_id = field<std::string>(j, "rule_id", where);
    e.zone_id = field<std::uint64_t>(j, "zone_id", where);
    e.raised_at = parse_time(field<std::string>(j, "raised_at", where));
    e.triggering_value_percent = field<double>(j, "triggering_value_percent", where);
    e.state = stability::alarm_state_from_string(field<std::string>(j, "state", where));
    if (!j.value("acknowledged_by", Json()).is_null())
        e.acknowledged_by = field<std::string>(j, "acknowledged_by", where);
    if (!j.value("acknowledged_at", Json()).is_null())
        e.acknowledged_at = parse_time(field<std::string>(j, "acknowledged_at", where));
    if (!j.value("cleared_at", Json()).is_null())
        e.cleared_at = parse_time(field<std::string>(j, "cleared_at", where));
    if (!j.value("clearing_value_percent", Json()).is_null())
        e.clearing_value_percent = field<double>(j, "clearing_value_percent", where);
    return e;
}

Json to_json(const protocol::Frame& f) {
    Json channels = Json::array();
    for (const auto& ch : f.channels)
        channels.push_back({{"channel_index", ch.channel_index}, {"log10r_milli", ch.log10r_milli}});
    return {{"node_id", f.node_id},         {"seq", f.seq},
            {"timestamp", f.timestamp},     {"battery_mv", f.battery_mv},
            {"temp_centi_c", f.temp_centi_c}, {"rh_permille", f.rh_permille},
            {"channels", channels}};
}

protocol::Frame frame_from_json(const Json& j) {
    const std::string where = "reading";
    expect_keys(j, {"node_id", "seq", "timestamp", "battery_mv", "temp_centi_c", "rh_permille", "channels"}, where);
    protocol::Frame f;
    f.node_id = ranged_int<std::uint32_t>(j, "node_id", where);
    f.seq = ranged_int<std::uint16_t>(j, "seq", where);
    f.timestamp = field<std::uint64_t>(j, "timestamp", where);
    f.battery_mv = ranged_int<std::uint16_t>(j, "battery_mv", where);
    f.temp_centi_c = ranged_int<std::int16_t>(j, "temp_centi_c", where);
    f.rh_permille = ranged_int<std::uint16_t>(j, "rh_permille", where);
    if (!j.contains("channels") || !j.at("channels").is_array())
        throw SchemaError(where + ": 'channels' must be an array");
    for (const auto& c : j.at("channels")) {
        expect_keys(c, {"channel_index", "log10r_milli"}, "channel");
        f.channels.push_back({ranged_int<std::uint8_t>(c, "channel_index", "channel"),
                              ranged_int<std::uint16_t>(c, "log10r_milli", "channel")});
    }
    return f;
}

}  // namespace woodmon::json
