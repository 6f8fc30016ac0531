#include "edgescale/http.hpp"

#include <filesystem>

#include <httplib.h>
#include <json.hpp>

namespace edgescale::http {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";
constexpr const char* kProblemJson = "application/problem+json";

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send_problem(httplib::Response& res, ErrorKind kind, const std::string& detail) {
  const int status = status_for(kind);
  res.status = status;
  res.set_content(json{{"type", "about:blank"},
                       {"title", std::string(to_string(kind))},
                       {"status", status},
                       {"detail", detail}}
                      .dump(),
                  kProblemJson);
}

/// Runs fn, mapping Error and JSON parse failures onto problem responses.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    send_problem(res, e.kind(), e.what());
  } catch (const json::exception& e) {
    send_problem(res, ErrorKind::kValidation, e.what());
  }
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kValidation, std::string("malformed JSON body: ") + e.what());
  }
}

json scale_body(const orch::ScaleStatus& status) {
  return json{{"spec", {{"replicas", status.desired}}}, {"status", {{"replicas", status.ready}}}};
}

std::string scale_path(const de::DeploymentRef& target) {
  return "/apis/apps/v1/namespaces/" + target.ns + "/deployments/" + target.name + "/scale";
}

/// Throws for transport failures and error statuses; returns the parsed body.
json expect_ok(const httplib::Result& result, const std::string& what) {
  if (!result) {
    throw Error(ErrorKind::kUnreachable, what + ": " + httplib::to_string(result.error()));
  }
  if (result->status != 200) {
    std::string detail = result->body;
    try {
      detail = json::parse(result->body).value("detail", detail);
    } catch (const json::exception&) {
    }
    const ErrorKind kind = result->status == 404   ? ErrorKind::kNotFound
                           : result->status == 422 ? ErrorKind::kOutOfBounds
                                                   : ErrorKind::kRejected;
    throw Error(kind, what + ": HTTP " + std::to_string(result->status) + ": " + detail);
  }
  try {
    return json::parse(result->body);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kRejected, what + ": unparseable body: " + e.what());
  }
}

std::unique_ptr<httplib::Client> make_client(const std::string& base_url) {
  std::unique_ptr<httplib::Client> client;
  try {
    client = std::make_unique<httplib::Client>(base_url);
  } catch (const std::invalid_argument& e) {
    throw Error(ErrorKind::kValidation, "bad base URL '" + base_url + "': " + e.what());
  }
  if (!client->is_valid()) throw Error(ErrorKind::kValidation, "bad base URL '" + base_url + "'");
  client->set_connection_timeout(std::chrono::seconds(2));
  client->set_read_timeout(std::chrono::seconds(15));
  return client;
}

}  // namespace

int status_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kValidation: return 400;
    case ErrorKind::kNotFound: return 404;
    case ErrorKind::kMaxUsersExceeded: return 409;
    case ErrorKind::kOutOfBounds: return 422;
    case ErrorKind::kUnreachable:
    case ErrorKind::kRejected: return 502;
    case ErrorKind::kUnavailable: return 503;
    case ErrorKind::kIo: return 500;
  }
  return 500;
}

void mount_location_api(httplib::Server& server, location::LocationService& service,
                        std::chrono::milliseconds steer_timeout) {
  server.Get("/location/v2/queries/zones", [&service](const httplib::Request&,
                                                      httplib::Response& res) {
    guarded(res, [&] {
      json list = json::array();
      for (const auto& z : location::get_zones(*service.current())) list.push_back(z);
      send_json(res, json{{"zoneList", list}});
    });
  });

  server.Get(R"(/location/v2/queries/zones/([^/]+))",
             [&service](const httplib::Request& req, httplib::Response& res) {
               guarded(res, [&] {
                 send_json(res, json(location::get_zone(*service.current(), req.matches[1].str())));
               });
             });

  server.Get("/location/v2/queries/users", [&service](const httplib::Request& req,
                                                      httplib::Response& res) {
    guarded(res, [&] {
      std::optional<std::string> zone;
      if (req.has_param("zoneId")) {
        zone = req.get_param_value("zoneId");
        if (zone->empty()) throw Error(ErrorKind::kValidation, "empty zoneId");
      }
      const auto snapshot = service.current();
      json list = json::array();
      for (const auto& u : location::get_users(*snapshot, zone)) list.push_back(u);
      send_json(res, json{{"userList", list}});
    });
  });

  server.Post("/sandbox/v1/steer", [&service, steer_timeout](const httplib::Request& req,
                                                             httplib::Response& res) {
    guarded(res, [&] {
      auto command = location::parse_steer_command(parse_body(req));
      auto done = service.submit(std::move(command));
      if (done.wait_for(steer_timeout) != std::future_status::ready) {
        throw Error(ErrorKind::kUnavailable, "steer command not applied within timeout");
      }
      send_json(res, json{{"totalUsers", done.get()}});
    });
  });

  server.Get("/sandbox/v1/state", [&service](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send_json(res, location::state_to_json(*service.current())); });
  });
}

void mount_orchestrator_api(httplib::Server& server, orch::Orchestrator& orchestrator) {
  static const char* kScale = R"(/apis/apps/v1/namespaces/([^/]+)/deployments/([^/]+)/scale)";

  server.Get(kScale, [&orchestrator](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      send_json(res, scale_body(orchestrator.get_scale(req.matches[1].str(), req.matches[2].str())));
    });
  });

  server.Put(kScale, [&orchestrator](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = parse_body(req);
      const auto spec = body.find("spec");
      if (spec == body.end() || !spec->is_object() || !spec->contains("replicas") ||
          !(*spec)["replicas"].is_number_integer()) {
        throw Error(ErrorKind::kValidation, "body needs integer spec.replicas");
      }
      std::string reason;
      if (auto r = body.find("reason"); r != body.end()) {
        if (!r->is_string()) throw Error(ErrorKind::kValidation, "reason must be a string");
        reason = r->get<std::string>();
      }
      const auto ns = req.matches[1].str();
      const auto name = req.matches[2].str();
      auto event = orchestrator.set_scale(ns, name, (*spec)["replicas"].get<int>(), reason);
      auto out = scale_body(orchestrator.get_scale(ns, name));
      out["event"] = event ? json(*event) : json(nullptr);
      send_json(res, out);
    });
  });

  server.Get("/events", [&orchestrator](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::optional<double> since;
      if (req.has_param("since")) {
        const auto text = req.get_param_value("since");
        try {
          std::size_t used = 0;
          since = std::stod(text, &used);
          if (used != text.size()) throw std::invalid_argument(text);
        } catch (const std::exception&) {
          throw Error(ErrorKind::kValidation, "since must be a number, got '" + text + "'");
        }
      }
      json list = json::array();
      for (const auto& e : orchestrator.list_events(since)) list.push_back(e);
      send_json(res, json{{"events", list}});
    });
  });
}

void mount_decision_engine_api(httplib::Server& server, de::DecisionEngine& engine) {
  server.Get("/metrics", [&engine](const httplib::Request&, httplib::Response& res) {
    res.set_content(de::render_metrics(engine.metrics()), de::kMetricsContentType);
  });
  server.Get("/config", [&engine](const httplib::Request&, httplib::Response& res) {
    send_json(res, json(engine.config()));
  });
  server.Patch("/config", [&engine](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, json(engine.patch_config(parse_body(req)))); });
  });
}

bool mount_static(httplib::Server& server, const std::string& dir) {
  if (!std::filesystem::is_directory(dir)) return false;
  return server.set_mount_point("/", dir);
}

void enable_cors(httplib::Server& server) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, PUT, PATCH, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });
}

HttpOccupancySource::HttpOccupancySource(const std::string& base_url)
    : client_(make_client(base_url)) {}

HttpOccupancySource::~HttpOccupancySource() = default;

int HttpOccupancySource::zone_user_count(const std::string& zone_id) {
  const auto body =
      expect_ok(client_->Get("/location/v2/queries/zones/" + zone_id), "zone query");
  try {
    return body.at("numberOfUsers").get<int>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kRejected, std::string("zone query: ") + e.what());
  }
}

HttpScaleClient::HttpScaleClient(const std::string& base_url) : client_(make_client(base_url)) {}

HttpScaleClient::~HttpScaleClient() = default;

orch::ScaleStatus HttpScaleClient::get_scale(const de::DeploymentRef& target) {
  const auto body = expect_ok(client_->Get(scale_path(target)), "get scale");
  try {
    return {body.at("spec").at("replicas").get<int>(), body.at("status").at("replicas").get<int>()};
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kRejected, std::string("get scale: ") + e.what());
  }
}

std::optional<orch::ScaleEvent> HttpScaleClient::set_scale(const de::DeploymentRef& target,
                                                           int replicas,
                                                           const std::string& reason) {
  const json request{{"spec", {{"replicas", replicas}}}, {"reason", reason}};
  const auto body =
      expect_ok(client_->Put(scale_path(target), request.dump(), kJson), "set scale");
  try {
    const auto& event = body.at("event");
    if (event.is_null()) return std::nullopt;
    return event.get<orch::ScaleEvent>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kRejected, std::string("set scale: ") + e.what());
  }
}

}  // namespace edgescale::http
