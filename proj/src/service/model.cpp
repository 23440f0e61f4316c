#include "woodmon/service/model.hpp"

#include <algorithm>
#include <set>

namespace woodmon::service {

namespace {

using json::field;
using json::field_or;

void require_name(const std::string& name, const char* what) {
    if (name.empty())
        throw InvalidRequest(std::string(what) + " name must not be empty");
}

Json binding_json(const ChannelBinding& b) { return {{"node_id", b.node_id}, {"channel_index", b.channel_index}}; }

ChannelBinding binding_from(const Json& j) {
    json::expect_keys(j, {"node_id", "channel_index"}, "binding");
    const auto ch = field<int>(j, "channel_index", "binding");
    if (ch < 0 || ch >= static_cast<int>(protocol::kMaxChannels))
        throw InvalidRequest("binding: channel_index must be 0..9");
    return {field<std::uint32_t>(j, "node_id", "binding"), static_cast<std::uint8_t>(ch)};
}

void check_rules(const std::vector<stability::AlarmRule>& rules) {
    std::set<std::string> ids;
    for (const auto& r : rules) {
        r.validate_shape();
        if (!ids.insert(r.id).second)
            throw InvalidRequest("duplicate rule id '" + r.id + "'");
    }
}

}  // namespace

std::string to_string(ZoneKind k) { return k == ZoneKind::Structural ? "Structural" : "FloorCovering"; }

ZoneKind zone_kind_from_string(const std::string& s) {
    if (s == "FloorCovering")
        return ZoneKind::FloorCovering;
    if (s == "Structural")
        return ZoneKind::Structural;
    throw InvalidRequest("zone kind must be FloorCovering or Structural, got '" + s + "'");
}

const Building& SiteModel::building(std::uint64_t id) const {
    const auto it = buildings_.find(id);
    if (it == buildings_.end())
        throw NotFound("building " + std::to_string(id));
    return it->second;
}

const Floor& SiteModel::floor(std::uint64_t id) const {
    const auto it = floors_.find(id);
    if (it == floors_.end())
        throw NotFound("floor " + std::to_string(id));
    return it->second;
}

const Zone& SiteModel::zone(std::uint64_t id) const {
    const auto it = zones_.find(id);
    if (it == zones_.end())
        throw NotFound("zone " + std::to_string(id));
    return it->second;
}

Zone& SiteModel::zone_mut(std::uint64_t id) { return const_cast<Zone&>(zone(id)); }
Floor& SiteModel::floor_mut(std::uint64_t id) { return const_cast<Floor&>(floor(id)); }

std::vector<std::uint64_t> SiteModel::floors_of(std::uint64_t building_id) const {
    std::vector<std::uint64_t> out;
    for (const auto& [id, f] : floors_)
        if (f.building_id == building_id)
            out.push_back(id);
    std::stable_sort(out.begin(), out.end(),
                     [this](auto a, auto b) { return floors_.at(a).index < floors_.at(b).index; });
    return out;
}

std::vector<std::uint64_t> SiteModel::zones_of(std::uint64_t floor_id) const {
    std::vector<std::uint64_t> out;
    for (const auto& [id, z] : zones_)
        if (z.floor_id == floor_id)
            out.push_back(id);
    return out;
}

std::optional<std::uint64_t> SiteModel::zone_for(ChannelBinding b) const {
    const auto it = bindings_.find(b);
    if (it == bindings_.end())
        return std::nullopt;
    return it->second;
}

std::uint64_t SiteModel::create_building(const std::string& name) {
    require_name(name, "building");
    const auto id = next_id();
    buildings_[id] = Building{id, name};
    return id;
}

void SiteModel::rename_building(std::uint64_t id, const std::string& name) {
    require_name(name, "building");
    building(id);
    buildings_[id].name = name;
}

void SiteModel::delete_building(std::uint64_t id, bool cascade) {
    building(id);
    const auto floors = floors_of(id);
    if (!floors.empty() && !cascade)
        throw Conflict("building " + std::to_string(id) + " still has floors; pass cascade to delete them");
    for (auto f : floors)
        delete_floor(f, true);
    buildings_.erase(id);
}

std::uint64_t SiteModel::create_floor(std::uint64_t building_id, int index, const std::string& name) {
    require_name(name, "floor");
    building(building_id);
    const auto id = next_id();
    floors_[id] = Floor{id, building_id, index, name, {}};
    return id;
}

void SiteModel::update_floor(std::uint64_t id, std::optional<int> index, std::optional<std::string> name) {
    Floor& f = floor_mut(id);
    if (name) {
        require_name(*name, "floor");
        f.name = *name;
    }
    if (index)
        f.index = *index;
}

void SiteModel::delete_floor(std::uint64_t id, bool cascade) {
    floor(id);
    const auto zones = zones_of(id);
    if (!zones.empty() && !cascade)
        throw Conflict("floor " + std::to_string(id) + " still has zones; pass cascade to delete them");
    for (auto z : zones)
        delete_zone(z);
    floors_.erase(id);
}

void SiteModel::add_photo(std::uint64_t floor_id, Photo photo) {
    Floor& f = floor_mut(floor_id);
    const auto same = std::find_if(f.photos.begin(), f.photos.end(),
                                   [&](const Photo& p) { return p.photo_id == photo.photo_id; });
    if (same != f.photos.end())
        *same = std::move(photo);
    else
        f.photos.push_back(std::move(photo));
}

std::uint64_t SiteModel::create_zone(std::uint64_t floor_id, const ZoneDraft& draft) {
    require_name(draft.name, "zone");
    floor(floor_id);
    if (draft.parquet)
        draft.parquet->validate();
    const auto id = next_id();
    Zone z;
    z.id = id;
    z.floor_id = floor_id;
    z.name = draft.name;
    z.kind = draft.kind;
    z.baseline_percent = draft.baseline_percent;
    z.parquet = draft.parquet;
    z.rules = {defaults_.for_kind(draft.kind)};
    zones_[id] = std::move(z);
    return id;
}

void SiteModel::rename_zone(std::uint64_t id, const std::string& name) {
    require_name(name, "zone");
    zone_mut(id).name = name;
}

void SiteModel::set_zone_kind(std::uint64_t id, ZoneKind kind) {
    Zone& z = zone_mut(id);
    if (z.kind == kind)
        return;
    z.kind = kind;
    z.rules = {defaults_.for_kind(kind)};
}

void SiteModel::set_baseline(std::uint64_t id, std::optional<double> baseline) {
    if (baseline && !(*baseline >= 0.0 && *baseline <= 60.0))
        throw InvalidRequest("baseline must lie in [0, 60] %");
    zone_mut(id).baseline_percent = baseline;
}

void SiteModel::set_rules(std::uint64_t id, std::vector<stability::AlarmRule> rules) {
    Zone& z = zone_mut(id);
    check_rules(rules);
    z.rules = std::move(rules);
}

void SiteModel::set_parquet(std::uint64_t id, std::optional<stability::ParquetSpec> parquet) {
    if (parquet)
        parquet->validate();
    zone_mut(id).parquet = parquet;
}

void SiteModel::set_metadata(std::uint64_t id, Json metadata) {
    if (!metadata.is_object())
        throw InvalidRequest("zone metadata must be an object");
    zone_mut(id).metadata = std::move(metadata);
}

void SiteModel::delete_zone(std::uint64_t id) {
    const Zone& z = zone(id);
    for (const auto& b : z.bindings)
        bindings_.erase(b);
    zones_.erase(id);
}

void SiteModel::bind_channel(std::uint64_t zone_id, ChannelBinding b) {
    Zone& z = zone_mut(zone_id);
    if (b.channel_index >= protocol::kMaxChannels)
        throw InvalidRequest("channel_index must be 0..9");
    if (const auto owner = zone_for(b)) {
        if (*owner == zone_id)
            return;
        throw Conflict("node " + std::to_string(b.node_id) + " channel " + std::to_string(b.channel_index) +
                       " is already bound to zone " + std::to_string(*owner));
    }
    z.bindings.push_back(b);
    bindings_[b] = zone_id;
}

void SiteModel::unbind_channel(std::uint64_t zone_id, ChannelBinding b) {
    Zone& z = zone_mut(zone_id);
    const auto it = std::find(z.bindings.begin(), z.bindings.end(), b);
    if (it == z.bindings.end())
        throw NotFound("binding node " + std::to_string(b.node_id) + " channel " + std::to_string(b.channel_index) +
                       " on zone " + std::to_string(zone_id));
    z.bindings.erase(it);
    bindings_.erase(b);
}

Json SiteModel::zone_json(std::uint64_t id) const {
    const Zone& z = zone(id);
    Json bindings = Json::array();
    for (const auto& b : z.bindings)
        bindings.push_back(binding_json(b));
    Json rules = Json::array();
    for (const auto& r : z.rules)
        rules.push_back(json::to_json(r));
    return {{"id", z.id},
            {"floor_id", z.floor_id},
            {"name", z.name},
            {"kind", to_string(z.kind)},
            {"bindings", bindings},
            {"baseline_percent", z.baseline_percent ? Json(*z.baseline_percent) : Json(nullptr)},
            {"rules", rules},
            {"parquet", z.parquet ? json::to_json(*z.parquet) : Json(nullptr)},
            {"metadata", z.metadata}};
}

Json SiteModel::floor_json(std::uint64_t id) const {
    const Floor& f = floor(id);
    Json photos = Json::array();
    for (const auto& p : f.photos)
        photos.push_back({{"photo_id", p.photo_id}, {"filename", p.filename}, {"caption", p.caption}});
    Json zones = Json::array();
    for (auto z : zones_of(id))
        zones.push_back(zone_json(z));
    return {{"id", f.id},         {"building_id", f.building_id}, {"index", f.index},
            {"name", f.name},     {"photos", photos},             {"zones", zones}};
}

Json SiteModel::building_json(std::uint64_t id) const {
    const Building& b = building(id);
    Json floors = Json::array();
    for (auto f : floors_of(id))
        floors.push_back(floor_json(f));
    return {{"id", b.id}, {"name", b.name}, {"floors", floors}};
}

Json SiteModel::to_snapshot() const {
    Json buildings = Json::array();
    for (const auto& [id, b] : buildings_)
        buildings.push_back(building_json(id));
    return {{"schema_version", kModelSchemaVersion}, {"next_id", next_id_}, {"buildings", buildings}};
}

SiteModel SiteModel::from_snapshot(const Json& j, DefaultRules defaults) {
    const std::string where = "model snapshot";
    if (field<int>(j, "schema_version", where) != kModelSchemaVersion)
        throw InvalidRequest("unsupported model schema_version");
    SiteModel m(std::move(defaults));
    std::uint64_t max_id = 0;
    auto track = [&max_id](std::uint64_t id) {
        if (id == 0)
            throw InvalidRequest("model ids must be positive");
        max_id = std::max(max_id, id);
        return id;
    };
    for (const auto& bj : j.at("buildings")) {
        Building b{track(field<std::uint64_t>(bj, "id", "building")), field<std::string>(bj, "name", "building")};
        m.buildings_[b.id] = b;
        for (const auto& fj : bj.at("floors")) {
            Floor f;
            f.id = track(field<std::uint64_t>(fj, "id", "floor"));
            f.building_id = b.id;
            f.index = field<int>(fj, "index", "floor");
            f.name = field<std::string>(fj, "name", "floor");
            for (const auto& pj : fj.value("photos", Json::array()))
                f.photos.push_back({field<std::string>(pj, "photo_id", "photo"),
                                    field<std::string>(pj, "filename", "photo"),
                                    field_or<std::string>(pj, "caption", "", "photo")});
            m.floors_[f.id] = f;
            for (const auto& zj : fj.value("zones", Json::array())) {
                Zone z;
                z.id = track(field<std::uint64_t>(zj, "id", "zone"));
                z.floor_id = f.id;
                z.name = field<std::string>(zj, "name", "zone");
                z.kind = zone_kind_from_string(field<std::string>(zj, "kind", "zone"));
                if (zj.contains("baseline_percent") && !zj.at("baseline_percent").is_null())
                    z.baseline_percent = field<double>(zj, "baseline_percent", "zone");
                if (zj.contains("rules")) {
                    for (const auto& rj : zj.at("rules"))
                        z.rules.push_back(json::alarm_rule_from_json(rj));
                    check_rules(z.rules);
                } else {
                    z.rules = {m.defaults_.for_kind(z.kind)};
                }
                if (zj.contains("parquet") && !zj.at("parquet").is_null())
                    z.parquet = json::parquet_from_json(zj.at("parquet"));
                z.metadata = zj.value("metadata", Json::object());
                const auto zid = z.id;
                m.zones_[zid] = std::move(z);
                for (const auto& bj2 : zj.value("bindings", Json::array()))
                    m.bind_channel(zid, binding_from(bj2));
            }
        }
    }
    m.next_id_ = std::max(field_or<std::uint64_t>(j, "next_id", 1, where), max_id + 1);
    return m;
}

}  // namespace woodmon::service
