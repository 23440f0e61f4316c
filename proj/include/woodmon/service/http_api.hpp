#pragma once

#include <filesystem>
#include <optional>

#include <httplib.h>

#include "woodmon/service/service.hpp"

namespace woodmon::service {

inline constexpr const char* kApiPrefix = "/api/v1";

struct HttpOptions {
    std::optional<std::filesystem::path> static_dir;
};

// Registers the /api/v1 routes (and the optional static mount) on `server`.
// `svc` must outlive the server.
void install_routes(httplib::Server& server, Service& svc, const HttpOptions& options = {});

}  // namespace woodmon::service
