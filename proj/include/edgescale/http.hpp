#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "edgescale/decision_engine.hpp"
#include "edgescale/error.hpp"
#include "edgescale/location_api.hpp"
#include "edgescale/orchestrator.hpp"

namespace httplib {
class Server;
class Client;
}  // namespace httplib

namespace edgescale::http {

/// 400 validation / 404 not found / 409 max users / 422 out of bounds /
/// 502 upstream failure / 503 no snapshot / 500 otherwise.
int status_for(ErrorKind kind) noexcept;

/// GET /location/v2/queries/zones, /zones/{zoneId}, /users?zoneId=,
/// POST /sandbox/v1/steer, GET /sandbox/v1/state.
void mount_location_api(httplib::Server& server, location::LocationService& service,
                        std::chrono::milliseconds steer_timeout = std::chrono::seconds(10));

/// GET/PUT /apis/apps/v1/namespaces/{ns}/deployments/{name}/scale, GET /events?since=.
void mount_orchestrator_api(httplib::Server& server, orch::Orchestrator& orchestrator);

/// GET /metrics, GET /config, PATCH /config.
void mount_decision_engine_api(httplib::Server& server, de::DecisionEngine& engine);

/// Serves files under dir at "/" (dashboard assets). Returns false when dir
/// does not exist.
bool mount_static(httplib::Server& server, const std::string& dir);

/// Adds permissive CORS headers and answers OPTIONS preflights, so a
/// dashboard served from one listener can call the others.
void enable_cors(httplib::Server& server);

/// DE sensor over the zone query. Throws Error(kUnreachable) on transport
/// failure and Error(kRejected) on a non-200 answer.
class HttpOccupancySource final : public de::OccupancySource {
 public:
  explicit HttpOccupancySource(const std::string& base_url);
  ~HttpOccupancySource() override;
  int zone_user_count(const std::string& zone_id) override;

 private:
  std::unique_ptr<httplib::Client> client_;
};

/// DE actuator over the scale subresource.
class HttpScaleClient final : public de::ScaleClient {
 public:
  explicit HttpScaleClient(const std::string& base_url);
  ~HttpScaleClient() override;
  orch::ScaleStatus get_scale(const de::DeploymentRef& target) override;
  std::optional<orch::ScaleEvent> set_scale(const de::DeploymentRef& target, int replicas,
                                            const std::string& reason) override;

 private:
  std::unique_ptr<httplib::Client> client_;
};

}  // namespace edgescale::http
