#include "woodmon/service/replay.hpp"

#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

namespace woodmon::service {

namespace {

void tally(ReplayStats& s, const IngestOutcome& out) {
    if (out.duplicate)
        ++s.duplicates;
    else
        ++s.accepted;
}

}  // namespace

Json to_json(const ReplayStats& s) {
    return {{"frames_read", s.frames_read},
            {"accepted", s.accepted},
            {"duplicates", s.duplicates},
            {"rejected", s.rejected},
            {"skipped_bytes", s.skipped_bytes}};
}

ReplayStats replay_bytes(Service& svc, std::span<const std::uint8_t> bytes) {
    ReplayStats stats;
    const bool binary = bytes.size() >= 2 && bytes[0] == protocol::kMagic0 && bytes[1] == protocol::kMagic1;
    if (binary) {
        std::size_t skipped = 0;
        for (auto frame : protocol::split_stream(bytes, &skipped)) {
            ++stats.frames_read;
            try {
                tally(stats, svc.ingest_frame(frame));
            } catch (const protocol::DecodeError&) {
                ++stats.rejected;
            }
        }
        stats.skipped_bytes = skipped;
        return stats;
    }
    std::istringstream lines(std::string(bytes.begin(), bytes.end()));
    for (std::string line; std::getline(lines, line);) {
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        ++stats.frames_read;
        try {
            tally(stats, svc.ingest_text(line));
        } catch (const protocol::DecodeError&) {
            ++stats.rejected;
        } catch (const json::SchemaError&) {
            ++stats.rejected;
        }
    }
    return stats;
}

ReplayStats replay_file(Service& svc, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read frame log " + path.string());
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return replay_bytes(svc, bytes);
}

Json state_report(const Service& svc) {
    Json alarms = Json::array();
    for (const auto& a : svc.alarms())
        alarms.push_back(json::to_json(a));

    Json zones = Json::array();
    const auto ids = svc.read_model([](const SiteModel& m) {
        std::vector<std::pair<std::uint64_t, std::string>> out;
        for (const auto& [id, z] : m.zones())
            out.emplace_back(id, z.name);
        return out;
    });
    for (const auto& [id, name] : ids) {
        Json events = Json::array();
        for (const auto& e : svc.zone_events(id))
            events.push_back(to_json(e));
        Json tendency = nullptr;
        try {
            tendency = to_json(svc.compute_tendency(id));
        } catch (const NoData&) {
        }
        zones.push_back({{"zone_id", id}, {"name", name}, {"events", events}, {"tendency", tendency}});
    }
    const auto m = svc.metrics();
    return {{"readings", m.readings}, {"alarms", alarms}, {"zones", zones}};
}

}  // namespace woodmon::service
