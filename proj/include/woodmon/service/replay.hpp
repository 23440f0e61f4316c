#pragma once

#include <cstdint>
#include <filesystem>
#include <span>

#include "woodmon/service/service.hpp"

namespace woodmon::service {

struct ReplayStats {
    std::uint64_t frames_read = 0;
    std::uint64_t accepted = 0;
    std::uint64_t duplicates = 0;
    std::uint64_t rejected = 0;
    std::uint64_t skipped_bytes = 0;  // binary input only
};

Json to_json(const ReplayStats& s);

// Feeds a frame log into `svc`. Input starting with the frame magic is read as
// concatenated binary frames; anything else as newline-delimited text frames.
// Bad frames are counted, not fatal.
ReplayStats replay_bytes(Service& svc, std::span<const std::uint8_t> bytes);
ReplayStats replay_file(Service& svc, const std::filesystem::path& path);

// Alarm list, per-zone event timelines and tendencies. Deterministic for a
// given model and frame log when the service takes its clock from frames.
Json state_report(const Service& svc);

}  // namespace woodmon::service
