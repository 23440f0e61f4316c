#pragma once

// Structured-text (JSON) forms of the core types. Field names here are the
// stable schema shared by the HTTP API, the record log and `--format records`.

#include <cstdint>
#include <initializer_list>
#include <string>

#include <json.hpp>

#include "woodmon/moisture.hpp"
#include "woodmon/protocol.hpp"
#include "woodmon/stability.hpp"

namespace woodmon::json {

using Json = nlohmann::json;

// Thrown for malformed documents: wrong types, missing or unknown keys.
class SchemaError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Rejects keys outside `allowed`; `where` names the object in messages.
void expect_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where);

template <class T>
T field(const Json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key))
        throw SchemaError(where + ": missing '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw SchemaError(where + ": '" + key + "' has the wrong type");
    }
}

template <class T>
T field_or(const Json& j, const char* key, T fallback, const std::string& where) {
    if (!j.contains(key) || j.at(key).is_null())
        return fallback;
    return field<T>(j, key, where);
}

std::string iso8601(std::uint64_t unix_seconds);
// Accepts "YYYY-MM-DDTHH:MM:SSZ" or a decimal Unix timestamp.
std::uint64_t parse_time(const std::string& text);

Json to_json(const moisture::EmcParams& p);
moisture::EmcParams emc_params_from_json(const Json& j);

Json to_json(const moisture::Correction& c);
moisture::Correction correction_from_json(const Json& j);

Json to_json(const moisture::Tendency& t);

Json to_json(const stability::ParquetSpec& p);
stability::ParquetSpec parquet_from_json(const Json& j);

Json to_json(const stability::AlarmRule& r);
// Shape-validated; a delta rule may omit its baseline.
stability::AlarmRule alarm_rule_from_json(const Json& j);

Json to_json(const stability::AlarmEvent& e);
stability::AlarmEvent alarm_event_from_json(const Json& j);

// Text form of a telemetry frame (POST /readings body).
Json to_json(const protocol::Frame& f);
// Throws SchemaError for structure; values are checked by the caller via
// protocol::range_violation.
protocol::Frame frame_from_json(const Json& j);

}  // namespace woodmon::json
