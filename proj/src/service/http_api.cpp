#include "woodmon/service/http_api.hpp"

#include <charconv>
#include <string>

namespace woodmon::service {

namespace {

using httplib::Request;
using httplib::Response;
using json::field;
using json::field_or;

const std::string kId = R"((\d+))";

std::string route(const std::string& tail) { return std::string(kApiPrefix) + tail; }

void send(Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(Response& res, int status, const std::string& cls, const std::string& message) {
    send(res, status, {{"error", cls}, {"message", message}});
}

std::uint64_t parse_u64(const std::string& text, const char* what) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw InvalidRequest(std::string(what) + " must be a non-negative integer, got '" + text + "'");
    return v;
}

std::uint64_t path_id(const Request& req, std::size_t i = 1) { return parse_u64(req.matches[i].str(), "id"); }

Json body_json(const Request& req) {
    auto j = Json::parse(req.body, nullptr, false);
    if (j.is_discarded())
        throw InvalidRequest("request body is not valid JSON");
    return j;
}

std::optional<std::uint64_t> time_param(const Request& req, const char* key) {
    if (!req.has_param(key))
        return std::nullopt;
    try {
        return json::parse_time(req.get_param_value(key));
    } catch (const std::invalid_argument& e) {
        throw InvalidRequest(std::string(key) + ": " + e.what());
    }
}

bool cascade_param(const Request& req) {
    return req.has_param("cascade") && req.get_param_value("cascade") == "true";
}

std::optional<double> optional_percent(const Json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || j.at(key).is_null())
        return std::nullopt;
    return field<double>(j, key, where);
}

std::string content_type_for(const std::string& filename) {
    const auto dot = filename.rfind('.');
    const std::string ext = dot == std::string::npos ? "" : filename.substr(dot + 1);
    if (ext == "jpg" || ext == "jpeg" || ext == "JPG" || ext == "JPEG")
        return "image/jpeg";
    if (ext == "png" || ext == "PNG")
        return "image/png";
    if (ext == "webp")
        return "image/webp";
    return "application/octet-stream";
}

// Maps domain exceptions onto status codes with a JSON error body.
template <class Fn>
httplib::Server::Handler guarded(Fn fn) {
    return [fn](const Request& req, Response& res) {
        try {
            fn(req, res);
        } catch (const protocol::DecodeError& e) {
            send_error(res, 400, protocol::to_string(e.kind()), e.what());
        } catch (const NotFound& e) {
            send_error(res, 404, "NotFound", e.what());
        } catch (const NoData& e) {
            send_error(res, 404, "NoData", e.what());
        } catch (const Conflict& e) {
            send_error(res, 409, "Conflict", e.what());
        } catch (const stability::InvalidTransition& e) {
            send_error(res, 409, "InvalidTransition", e.what());
        } catch (const moisture::DomainError& e) {
            send_error(res, 422, "DomainError", e.what());
        } catch (const std::invalid_argument& e) {
            send_error(res, 400, "InvalidRequest", e.what());
        } catch (const Json::exception& e) {
            send_error(res, 400, "InvalidRequest", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "Internal", e.what());
        }
    };
}

ZoneDraft zone_draft(const Json& j) {
    const std::string where = "zone";
    json::expect_keys(j, {"name", "kind", "baseline_percent", "parquet", "metadata"}, where);
    ZoneDraft d;
    d.name = field<std::string>(j, "name", where);
    d.kind = zone_kind_from_string(field_or<std::string>(j, "kind", "FloorCovering", where));
    d.baseline_percent = optional_percent(j, "baseline_percent", where);
    if (j.contains("parquet") && !j.at("parquet").is_null())
        d.parquet = json::parquet_from_json(j.at("parquet"));
    return d;
}

void install_model_routes(httplib::Server& s, Service& svc) {
    s.Get(route("/buildings"), guarded([&svc](const Request&, Response& res) {
              send(res, 200, svc.read_model([](const SiteModel& m) {
                       Json out = Json::array();
                       for (const auto& [id, b] : m.buildings())
                           out.push_back({{"id", id}, {"name", b.name}});
                       return out;
                   }));
          }));
    s.Post(route("/buildings"), guarded([&svc](const Request& req, Response& res) {
               const auto j = body_json(req);
               json::expect_keys(j, {"name"}, "building");
               const auto name = field<std::string>(j, "name", "building");
               send(res, 201, svc.edit_model([&](SiteModel& m) { return m.building_json(m.create_building(name)); }));
           }));
    s.Get(route("/buildings/" + kId), guarded([&svc](const Request& req, Response& res) {
              const auto id = path_id(req);
              send(res, 200, svc.read_model([id](const SiteModel& m) { return m.building_json(id); }));
          }));
    s.Patch(route("/buildings/" + kId), guarded([&svc](const Request& req, Response& res) {
                const auto id = path_id(req);
                const auto j = body_json(req);
                json::expect_keys(j, {"name"}, "building");
                const auto name = field<std::string>(j, "name", "building");
                send(res, 200, svc.edit_model([&](SiteModel& m) {
                         m.rename_building(id, name);
                         return m.building_json(id);
                     }));
            }));
    s.Delete(route("/buildings/" + kId), guarded([&svc](const Request& req, Response& res) {
                 const auto id = path_id(req);
                 const bool cascade = cascade_param(req);
                 svc.edit_model([&](SiteModel& m) { m.delete_building(id, cascade); });
                 res.status = 204;
             }));

    s.Post(route("/buildings/" + kId + "/floors"), guarded([&svc](const Request& req, Response& res) {
               const auto bid = path_id(req);
               const auto j = body_json(req);
               json::expect_keys(j, {"name", "index"}, "floor");
               const auto name = field<std::string>(j, "name", "floor");
               const auto index = field_or<int>(j, "index", 0, "floor");
               send(res, 201,
                    svc.edit_model([&](SiteModel& m) { return m.floor_json(m.create_floor(bid, index, name)); }));
           }));
    s.Get(route("/floors/" + kId), guarded([&svc](const Request& req, Response& res) {
              const auto id = path_id(req);
              send(res, 200, svc.read_model([id](const SiteModel& m) { return m.floor_json(id); }));
          }));
    s.Patch(route("/floors/" + kId), guarded([&svc](const Request& req, Response& res) {
                const auto id = path_id(req);
                const auto j = body_json(req);
                json::expect_keys(j, {"name", "index"}, "floor");
                std::optional<std::string> name;
                std::optional<int> index;
                if (j.contains("name"))
                    name = field<std::string>(j, "name", "floor");
                if (j.contains("index"))
                    index = field<int>(j, "index", "floor");
                send(res, 200, svc.edit_model([&](SiteModel& m) {
                         m.update_floor(id, index, name);
                         return m.floor_json(id);
                     }));
            }));
    s.Delete(route("/floors/" + kId), guarded([&svc](const Request& req, Response& res) {
                 const auto id = path_id(req);
                 const bool cascade = cascade_param(req);
                 svc.edit_model([&](SiteModel& m) { m.delete_floor(id, cascade); });
                 res.status = 204;
             }));

    s.Post(route("/floors/" + kId + "/zones"), guarded([&svc](const Request& req, Response& res) {
               const auto fid = path_id(req);
               const auto j = body_json(req);
               const auto draft = zone_draft(j);
               const Json metadata = j.value("metadata", Json::object());
               send(res, 201, svc.edit_model([&](SiteModel& m) {
                        const auto id = m.create_zone(fid, draft);
                        m.set_metadata(id, metadata);
                        return m.zone_json(id);
                    }));
           }));
    s.Get(route("/zones/" + kId), guarded([&svc](const Request& req, Response& res) {
              const auto id = path_id(req);
              send(res, 200, svc.read_model([id](const SiteModel& m) { return m.zone_json(id); }));
          }));
    s.Patch(route("/zones/" + kId), guarded([&svc](const Request& req, Response& res) {
                const auto id = path_id(req);
                const auto j = body_json(req);
                const std::string where = "zone";
                json::expect_keys(j, {"name", "kind", "baseline_percent", "parquet", "metadata"}, where);
                send(res, 200, svc.edit_model([&](SiteModel& m) {
                         if (j.contains("kind"))
                             m.set_zone_kind(id, zone_kind_from_string(field<std::string>(j, "kind", where)));
                         if (j.contains("name"))
                             m.rename_zone(id, field<std::string>(j, "name", where));
                         if (j.contains("baseline_percent"))
                             m.set_baseline(id, optional_percent(j, "baseline_percent", where));
                         if (j.contains("parquet"))
                             m.set_parquet(id, j.at("parquet").is_null()
                                                   ? std::nullopt
                                                   : std::optional(json::parquet_from_json(j.at("parquet"))));
                         if (j.contains("metadata"))
                             m.set_metadata(id, j.at("metadata"));
                         return m.zone_json(id);
                     }));
            }));
    s.Delete(route("/zones/" + kId), guarded([&svc](const Request& req, Response& res) {
                 const auto id = path_id(req);
                 svc.edit_model([&](SiteModel& m) { m.delete_zone(id); });
                 res.status = 204;
             }));

    s.Post(route("/zones/" + kId + "/bindings"), guarded([&svc](const Request& req, Response& res) {
               const auto id = path_id(req);
               const auto j = body_json(req);
               json::expect_keys(j, {"node_id", "channel_index"}, "binding");
               const auto ch = field<int>(j, "channel_index", "binding");
               if (ch < 0 || ch >= static_cast<int>(protocol::kMaxChannels))
                   throw InvalidRequest("channel_index must be 0..9");
               const ChannelBinding b{field<std::uint32_t>(j, "node_id", "binding"), static_cast<std::uint8_t>(ch)};
               send(res, 201, svc.edit_model([&](SiteModel& m) {
                        m.bind_channel(id, b);
                        return m.zone_json(id);
                    }));
           }));
    s.Delete(route("/zones/" + kId + "/bindings/" + kId + "/" + kId),
             guarded([&svc](const Request& req, Response& res) {
                 const auto id = path_id(req);
                 const auto node = path_id(req, 2);
                 const auto ch = path_id(req, 3);
                 if (node > UINT32_MAX || ch >= protocol::kMaxChannels)
                     throw NotFound("binding");
                 svc.edit_model([&](SiteModel& m) {
                     m.unbind_channel(id, {static_cast<std::uint32_t>(node), static_cast<std::uint8_t>(ch)});
                 });
                 res.status = 204;
             }));

    s.Get(route("/zones/" + kId + "/rules"), guarded([&svc](const Request& req, Response& res) {
              const auto id = path_id(req);
              send(res, 200, svc.read_model([id](const SiteModel& m) { return m.zone_json(id).at("rules"); }));
          }));
    s.Put(route("/zones/" + kId + "/rules"), guarded([&svc](const Request& req, Response& res) {
              const auto id = path_id(req);
              const auto j = body_json(req);
              if (!j.is_array())
                  throw InvalidRequest("rules body must be an array");
              std::vector<stability::AlarmRule> rules;
              for (const auto& r : j)
                  rules.push_back(json::alarm_rule_from_json(r));
              send(res, 200, svc.edit_model([&](SiteModel& m) {
                       m.set_rules(id, rules);
                       return m.zone_json(id).at("rules");
                   }));
          }));
}

void install_data_routes(httplib::Server& s, Service& svc) {
    s.Post(route("/frames"), guarded([&svc](const Request& req, Response& res) {
               const auto* p = reinterpret_cast<const std::uint8_t*>(req.body.data());
               const auto outcome = svc.ingest_frame({p, req.body.size()});
               send(res, outcome.duplicate ? 200 : 201, to_json(outcome));
           }));
    s.Post(route("/readings"), guarded([&svc](const Request& req, Response& res) {
               try {
                   const auto outcome = svc.ingest_text(req.body);
                   send(res, outcome.duplicate ? 200 : 201, to_json(outcome));
               } catch (const json::SchemaError& e) {
                   send_error(res, 400, kMalformedText, e.what());
               }
           }));

    s.Get(route("/zones/" + kId + "/readings"), guarded([&svc](const Request& req, Response& res) {
              const auto id = path_id(req);
              ReadingQuery q;
              q.from = time_param(req, "from");
              q.to = time_param(req, "to");
              if (req.has_param("max_points"))
                  q.max_points = parse_u64(req.get_param_value("max_points"), "max_points");
              Json out = Json::array();
              for (const auto& r : svc.query_readings(id, q))
                  out.push_back(to_json(r));
              send(res, 200, out);
          }));
    s.Get(route("/zones/" + kId + "/tendency"), guarded([&svc](const Request& req, Response& res) {
              send(res, 200, to_json(svc.compute_tendency(path_id(req))));
          }));
    s.Get(route("/zones/" + kId + "/events"), guarded([&svc](const Request& req, Response& res) {
              Json out = Json::array();
              for (const auto& e : svc.zone_events(path_id(req)))
                  out.push_back(to_json(e));
              send(res, 200, out);
          }));

    s.Get(route("/alarms"), guarded([&svc](const Request& req, Response& res) {
              std::optional<stability::AlarmState> state;
              if (req.has_param("state"))
                  state = stability::alarm_state_from_string(req.get_param_value("state"));
              Json out = Json::array();
              for (const auto& e : svc.alarms(state))
                  out.push_back(json::to_json(e));
              send(res, 200, out);
          }));
    s.Post(route(R"(/alarms/([A-Za-z0-9_\-]+)/ack)"), guarded([&svc](const Request& req, Response& res) {
               const auto j = body_json(req);
               json::expect_keys(j, {"operator"}, "ack");
               send(res, 200,
                    json::to_json(svc.acknowledge(req.matches[1].str(), field<std::string>(j, "operator", "ack"))));
           }));

    s.Post(route("/floors/" + kId + "/photos"), guarded([&svc](const Request& req, Response& res) {
               const auto fid = path_id(req);
               if (!req.is_multipart_form_data() || !req.has_file("photo"))
                   throw InvalidRequest("expected multipart form with a 'photo' part");
               const auto file = req.get_file_value("photo");
               const std::string caption = req.has_file("caption") ? req.get_file_value("caption").content : "";
               const auto photo = svc.store_photo(fid, file.filename, caption, file.content);
               send(res, 201,
                    {{"photo_id", photo.photo_id}, {"filename", photo.filename}, {"caption", photo.caption}});
           }));
    s.Get(route("/photos/([0-9a-f]{64})"), guarded([&svc](const Request& req, Response& res) {
              const auto [photo, bytes] = svc.load_photo(req.matches[1].str());
              res.status = 200;
              res.set_content(bytes, content_type_for(photo.filename));
          }));

    s.Get(route("/healthz"), guarded([](const Request&, Response& res) { send(res, 200, {{"status", "ok"}}); }));
    s.Get(route("/metrics"), guarded([&svc](const Request&, Response& res) { send(res, 200, to_json(svc.metrics())); }));
}

}  // namespace

void install_routes(httplib::Server& server, Service& svc, const HttpOptions& options) {
    install_model_routes(server, svc);
    install_data_routes(server, svc);
    if (options.static_dir && !server.set_mount_point("/", options.static_dir->string()))
        throw stability::ConfigError("static_dir does not exist: " + options.static_dir->string());
}

}  // namespace woodmon::service
