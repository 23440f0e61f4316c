#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <vector>

#include "woodmon/json_core.hpp"

namespace woodmon::service {

// Append-only newline-delimited JSON log. A crash mid-append leaves at most
// one incomplete trailing line, which is dropped (and truncated away) on open.
class RecordLog {
public:
    struct Loaded {
        std::vector<json::Json> records;
        std::size_t dropped_tail_bytes = 0;
        std::size_t unreadable_lines = 0;
    };

    // Creates the file if needed and positions for append.
    explicit RecordLog(std::filesystem::path path);

    const Loaded& loaded() const noexcept { return loaded_; }
    const std::filesystem::path& path() const noexcept { return path_; }

    // One line per record; flushed before returning.
    void append(const json::Json& record);

private:
    std::filesystem::path path_;
    Loaded loaded_;
    std::ofstream out_;
};

}  // namespace woodmon::service
