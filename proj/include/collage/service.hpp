#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "collage/backend.hpp"
#include "collage/json_io.hpp"
#include "collage/scene.hpp"

namespace collage {

struct ServiceOptions {
  std::filesystem::path data_dir = "data";
  unsigned prepare_workers = 2;
  unsigned curate_workers = 0;  // 0: hardware concurrency
  // Used when a request names no backend and the library has none recorded.
  std::optional<BackendDescriptor> default_backend;
};

// COLLAGE_DATA_DIR (default ./data) plus the backend variables.
ServiceOptions service_options_from_env();

// "host:port" from COLLAGE_BIND_ADDR, default 127.0.0.1:8080.
std::pair<std::string, int> bind_address_from_env();

// One scene edit in the wire form used by POST /sessions/{id}/scene/ops, e.g.
// {"op": "scale", "placement_id": "p1", "factor": 2}. `where` prefixes field
// names in ParseError.
SceneDocument apply_scene_op(const SceneDocument& scene, const ElementPaths& paths, const Json& op,
                             const std::string& where = "op");

// REST service over a data directory:
//   collections/<id>/collection.json   registered or uploaded photo sets
//   libraries/<library_id>/            prepare output (+ backend.json)
//   sessions/<session_id>/             curation output, scene.json, options.json
//   jobs/<job_id>.json                 job records
//   idempotency/<key hash>.json        replayable responses
class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds and serves on a background thread. Port 0 picks a free port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  void listen_blocking(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace collage
