#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "woodmon/json_core.hpp"
#include "woodmon/stability.hpp"

namespace woodmon::service {

using json::Json;

class NotFound : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Conflict : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or semantically invalid request data.
class InvalidRequest : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline constexpr int kModelSchemaVersion = 1;

enum class ZoneKind { FloorCovering, Structural };

std::string to_string(ZoneKind k);
ZoneKind zone_kind_from_string(const std::string& s);

struct ChannelBinding {
    std::uint32_t node_id = 0;
    std::uint8_t channel_index = 0;

    friend auto operator<=>(const ChannelBinding&, const ChannelBinding&) = default;
};

struct Photo {
    std::string photo_id;  // SHA-256 of the bytes, hex
    std::string filename;
    std::string caption;
};

struct Building {
    std::uint64_t id = 0;
    std::string name;
};

struct Floor {
    std::uint64_t id = 0;
    std::uint64_t building_id = 0;
    int index = 0;
    std::string name;
    std::vector<Photo> photos;
};

struct Zone {
    std::uint64_t id = 0;
    std::uint64_t floor_id = 0;
    std::string name;
    ZoneKind kind = ZoneKind::FloorCovering;
    std::vector<ChannelBinding> bindings;
    std::optional<double> baseline_percent;
    std::vector<stability::AlarmRule> rules;
    std::optional<stability::ParquetSpec> parquet;
    Json metadata = Json::object();  // opaque to the service (e.g. dashboard pin coordinates)
};

// Kind-default alarm rules, overridable from the service config.
struct DefaultRules {
    stability::AlarmRule floor_covering = stability::AlarmRule::floor_delta();
    stability::AlarmRule structural = stability::AlarmRule::structural_absolute();

    const stability::AlarmRule& for_kind(ZoneKind k) const {
        return k == ZoneKind::Structural ? structural : floor_covering;
    }
};

struct ZoneDraft {
    std::string name;
    ZoneKind kind = ZoneKind::FloorCovering;
    std::optional<double> baseline_percent;
    std::optional<stability::ParquetSpec> parquet;
};

// Building -> floor -> zone hierarchy with channel bindings. Plain value type;
// the service copies, mutates and swaps it so every change is all-or-nothing.
class SiteModel {
public:
    explicit SiteModel(DefaultRules defaults = {}) : defaults_(std::move(defaults)) {}

    const Building& building(std::uint64_t id) const;
    const Floor& floor(std::uint64_t id) const;
    const Zone& zone(std::uint64_t id) const;

    const std::map<std::uint64_t, Building>& buildings() const noexcept { return buildings_; }
    const std::map<std::uint64_t, Floor>& floors() const noexcept { return floors_; }
    const std::map<std::uint64_t, Zone>& zones() const noexcept { return zones_; }

    std::vector<std::uint64_t> floors_of(std::uint64_t building_id) const;
    std::vector<std::uint64_t> zones_of(std::uint64_t floor_id) const;
    std::optional<std::uint64_t> zone_for(ChannelBinding b) const;

    std::uint64_t create_building(const std::string& name);
    void rename_building(std::uint64_t id, const std::string& name);
    // Throws Conflict when floors exist and `cascade` is false.
    void delete_building(std::uint64_t id, bool cascade);

    std::uint64_t create_floor(std::uint64_t building_id, int index, const std::string& name);
    void update_floor(std::uint64_t id, std::optional<int> index, std::optional<std::string> name);
    void delete_floor(std::uint64_t id, bool cascade);
    void add_photo(std::uint64_t floor_id, Photo photo);

    std::uint64_t create_zone(std::uint64_t floor_id, const ZoneDraft& draft);
    void rename_zone(std::uint64_t id, const std::string& name);
    // Changing the kind resets the rules to the new kind's defaults.
    void set_zone_kind(std::uint64_t id, ZoneKind kind);
    void set_baseline(std::uint64_t id, std::optional<double> baseline);
    void set_rules(std::uint64_t id, std::vector<stability::AlarmRule> rules);
    void set_parquet(std::uint64_t id, std::optional<stability::ParquetSpec> parquet);
    void set_metadata(std::uint64_t id, Json metadata);
    void delete_zone(std::uint64_t id);

    // Conflict if the channel already belongs to a different zone; binding
    // the same channel to the same zone twice is a no-op.
    void bind_channel(std::uint64_t zone_id, ChannelBinding b);
    void unbind_channel(std::uint64_t zone_id, ChannelBinding b);

    Json building_json(std::uint64_t id) const;  // nested floors and zones
    Json floor_json(std::uint64_t id) const;
    Json zone_json(std::uint64_t id) const;

    Json to_snapshot() const;
    static SiteModel from_snapshot(const Json& j, DefaultRules defaults = {});

private:
    Zone& zone_mut(std::uint64_t id);
    Floor& floor_mut(std::uint64_t id);
    std::uint64_t next_id() { return next_id_++; }

    DefaultRules defaults_;
    std::uint64_t next_id_ = 1;
    std::map<std::uint64_t, Building> buildings_;
    std::map<std::uint64_t, Floor> floors_;
    std::map<std::uint64_t, Zone> zones_;
    std::map<ChannelBinding, std::uint64_t> bindings_;
};

}  // namespace woodmon::service
