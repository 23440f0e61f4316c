#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "woodmon/protocol.hpp"
#include "woodmon/service/service.hpp"

namespace woodmon::test {

// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("woodmon-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

inline std::uint16_t milli_for(double mc) {
    return protocol::to_log10r_milli(moisture::moisture_to_resistance(moisture::MoistureContent(mc)).ohms());
}

// Single-channel frame at 23 degC / 85 %RH.
inline protocol::Frame frame_with(std::uint32_t node, std::uint16_t seq, std::uint64_t ts, double mc,
                                  std::uint8_t channel = 0) {
    protocol::Frame f;
    f.node_id = node;
    f.seq = seq;
    f.timestamp = ts;
    f.battery_mv = 3000;
    f.temp_centi_c = 2300;
    f.rh_permille = 850;
    f.channels = {{channel, milli_for(mc)}};
    return f;
}

struct Site {
    std::uint64_t building = 0;
    std::uint64_t floor = 0;
    std::uint64_t zone = 0;
};

inline Site make_site(service::Service& svc, service::ZoneKind kind, std::optional<double> baseline = std::nullopt,
                      service::ChannelBinding binding = {1, 0}) {
    return svc.edit_model([&](service::SiteModel& m) {
        Site s;
        s.building = m.create_building("Hall");
        s.floor = m.create_floor(s.building, 0, "Ground");
        s.zone = m.create_zone(s.floor, {"Zone A", kind, baseline, std::nullopt});
        m.bind_channel(s.zone, binding);
        return s;
    });
}

}  // namespace woodmon::test
