#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "slicetrack/io.hpp"
#include "slicetrack/pipeline.hpp"

namespace slicetrack::service {

enum class SessionState { awaiting_seed, seeded, tracked };

const char* to_string(SessionState state);

struct ServiceOptions {
  /// Each subdirectory is one volume (a directory of slice images).
  std::filesystem::path volume_root;
  io::LoadOptions load;
  /// Name of the per-volume subdirectory holding annotation files.
  std::string annotations_subdir = "annotations";
  /// Default annotation label for metrics requests.
  std::string label = "target";
  /// Tracked sessions are saved here (one directory per session) on stop().
  std::optional<std::filesystem::path> snapshot_dir;
  TrackParams default_params;
};

/// HTTP front end over in-memory sessions. Routes (JSON bodies unless noted):
///
///   GET    /api/volumes
///   GET    /api/volumes/{name}
///   GET    /api/volumes/{name}/slices/{i}            image/png
///   POST   /api/sessions                             {"volume", "params"?}
///   GET    /api/sessions/{id}
///   DELETE /api/sessions/{id}
///   PUT    /api/sessions/{id}/params                 partial TrackParams
///   POST   /api/sessions/{id}/seed                   SeedSpec
///   POST   /api/sessions/{id}/track
///   GET    /api/sessions/{id}/slices/{i}/keypoints
///   GET    /api/sessions/{id}/slices/{i}/hull
///   GET    /api/sessions/{id}/slices/{i}/mask        image/png, 0/255
///   GET    /api/sessions/{id}/slices/{i}/overlay     image/png, RGBA
///   GET    /api/sessions/{id}/metrics?label=&include_empty=
///
/// Unknown volumes, sessions or slices give 404, invalid seeds 422, and
/// requests out of session order 409.
class Server {
 public:
  explicit Server(ServiceOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds to host:port (port 0 picks a free one) and returns the port.
  /// Throws ConfigError if binding fails.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void listen();
  /// Stops serving and writes session snapshots if configured.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace slicetrack::service
