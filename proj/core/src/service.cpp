#include "slicetrack/service.hpp"

#include <httplib.h>

#include <atomic>
#include <map>
#include <mutex>
#include <random>
#include <sstream>

#include "slicetrack/error.hpp"
#include "slicetrack/json_codec.hpp"

namespace slicetrack::service {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Session {
  std::mutex mutex;  // serializes this session's mutations
  std::string id;
  std::string volume_name;
  std::shared_ptr<const Volume> volume;
  TrackParams params;
  std::optional<SeedSpec> seed;
  std::optional<KeypointSet> seeds;
  std::optional<SegmentationResult> result;
  SessionState state = SessionState::awaiting_seed;
};

class HttpError : public std::runtime_error {
 public:
  HttpError(int status, const std::string& message) : std::runtime_error(message), status(status) {}
  int status;
};

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, json{{"error", message}}, status);
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw HttpError(400, std::string("malformed JSON body: ") + e.what());
  }
}

json session_json(const Session& s) {
  json j{{"id", s.id},
         {"volume", s.volume_name},
         {"state", to_string(s.state)},
         {"params", s.params},
         {"slice_count", s.volume->size()}};
  j["seed"] = s.seed ? json(*s.seed) : json(nullptr);
  j["seed_count"] = s.seeds ? s.seeds->points.size() : 0;
  if (s.result) {
    j["start_slice"] = s.result->start_slice;
    j["stop_up"] = s.result->stop_up;
    j["stop_down"] = s.result->stop_down;
    json with_mask = json::array();
    for (const auto& [index, products] : s.result->per_slice) {
      if (products.mask) with_mask.push_back(index);
    }
    j["slices_with_mask"] = std::move(with_mask);
  }
  return j;
}

std::vector<std::uint8_t> overlay_rgba(const GraySlice& slice, const SliceMask* mask) {
  constexpr double alpha = 0.45;
  constexpr double tint[3] = {30.0, 144.0, 255.0};
  const auto gray = io::to_bytes(slice);
  std::vector<std::uint8_t> out(gray.size() * 4);
  const auto bits = mask ? mask->bits() : std::span<const std::uint8_t>{};
  for (std::size_t i = 0; i < gray.size(); ++i) {
    const bool hit = mask && bits[i];
    for (int c = 0; c < 3; ++c) {
      const double v = hit ? (1.0 - alpha) * gray[i] + alpha * tint[c] : gray[i];
      out[4 * i + c] = static_cast<std::uint8_t>(std::lround(v));
    }
    out[4 * i + 3] = 255;
  }
  return out;
}

}  // namespace

const char* to_string(SessionState state) {
  switch (state) {
    case SessionState::awaiting_seed:
      return "awaiting_seed";
    case SessionState::seeded:
      return "seeded";
    case SessionState::tracked:
      return "tracked";
  }
  return "unknown";
}

struct Server::Impl {
  ServiceOptions options;
  httplib::Server http;

  std::mutex volumes_mutex;
  std::map<std::string, std::shared_ptr<const Volume>> volumes;

  std::mutex sessions_mutex;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  std::mt19937_64 rng{std::random_device{}()};
  std::atomic<bool> stopped{false};

  explicit Impl(ServiceOptions opts) : options(std::move(opts)) { routes(); }

  fs::path volume_dir(const std::string& name) const {
    if (name.empty() || name == "." || name == ".." || name.find('/') != std::string::npos) {
      throw HttpError(404, "unknown volume: " + name);
    }
    const fs::path dir = options.volume_root / name;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw HttpError(404, "unknown volume: " + name);
    return dir;
  }

  std::shared_ptr<const Volume> volume(const std::string& name) {
    const fs::path dir = volume_dir(name);
    std::lock_guard lock(volumes_mutex);
    if (auto it = volumes.find(name); it != volumes.end()) return it->second;
    auto vol = std::make_shared<const Volume>(io::load_volume(dir, options.load));
    volumes.emplace(name, vol);
    return vol;
  }

  std::shared_ptr<Session> session(const std::string& id) {
    std::lock_guard lock(sessions_mutex);
    auto it = sessions.find(id);
    if (it == sessions.end()) throw HttpError(404, "unknown session: " + id);
    return it->second;
  }

  static int slice_arg(const httplib::Request& req, std::size_t group, const Volume& vol) {
    const long index = std::stol(req.matches[group].str());
    if (index < 0 || index >= static_cast<long>(vol.size())) {
      throw HttpError(404, "slice " + std::to_string(index) + " out of range");
    }
    return static_cast<int>(index);
  }

  // Wraps a handler so library and HTTP errors become status codes.
  template <typename F>
  httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const HttpError& e) {
        send_error(res, e.status, e.what());
      } catch (const SeedError& e) {
        send_error(res, 422, e.what());
      } catch (const BoundsError& e) {
        send_error(res, 422, e.what());
      } catch (const ValidationError& e) {
        send_error(res, 422, e.what());
      } catch (const ConfigError& e) {
        send_error(res, 422, e.what());
      } catch (const EvaluationError& e) {
        send_error(res, 422, e.what());
      } catch (const IngestionError& e) {
        send_error(res, 500, e.what());
      } catch (const json::exception& e) {
        send_error(res, 400, e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, e.what());
      }
    };
  }

  void routes() {
    http.Get("/api/volumes", guarded([this](const auto&, auto& res) {
      json list = json::array();
      std::vector<std::string> names;
      for (const auto& entry : fs::directory_iterator(options.volume_root)) {
        if (entry.is_directory()) names.push_back(entry.path().filename().string());
      }
      for (const auto& name : io::sort_filenames(names, false)) list.push_back(name);
      send_json(res, json{{"volumes", std::move(list)}});
    }));

    http.Get(R"(/api/volumes/([^/]+))", guarded([this](const auto& req, auto& res) {
      const auto vol = volume(req.matches[1].str());
      send_json(res, json{{"name", req.matches[1].str()},
                          {"slice_count", vol->size()},
                          {"width", vol->width()},
                          {"height", vol->height()},
                          {"slice_spacing_mm", vol->slice_spacing_mm()},
                          {"source_ids", vol->source_ids()}});
    }));

    http.Get(R"(/api/volumes/([^/]+)/slices/(\d+))", guarded([this](const auto& req, auto& res) {
      const auto vol = volume(req.matches[1].str());
      const GraySlice& slice = vol->slice(static_cast<std::size_t>(slice_arg(req, 2, *vol)));
      res.set_content(io::encode_gray_png(slice.width(), slice.height(), io::to_bytes(slice)),
                      "image/png");
    }));

    http.Post("/api/sessions", guarded([this](const auto& req, auto& res) {
      const json body = parse_body(req);
      if (!body.contains("volume")) throw HttpError(400, "missing 'volume'");
      auto s = std::make_shared<Session>();
      s->volume_name = body["volume"].get<std::string>();
      s->volume = volume(s->volume_name);
      s->params = options.default_params;
      if (body.contains("params")) from_json(body["params"], s->params);
      {
        std::lock_guard lock(sessions_mutex);
        std::ostringstream id;
        id << std::hex << rng();
        s->id = id.str();
        sessions.emplace(s->id, s);
      }
      send_json(res, session_json(*s), 201);
    }));

    http.Get(R"(/api/sessions/([^/]+))", guarded([this](const auto& req, auto& res) {
      auto s = session(req.matches[1].str());
      std::lock_guard lock(s->mutex);
      send_json(res, session_json(*s));
    }));

    http.Delete(R"(/api/sessions/([^/]+))", guarded([this](const auto& req, auto& res) {
      std::lock_guard lock(sessions_mutex);
      if (sessions.erase(req.matches[1].str()) == 0) {
        throw HttpError(404, "unknown session: " + req.matches[1].str());
      }
      res.status = 204;
    }));

    http.Put(R"(/api/sessions/([^/]+)/params)", guarded([this](const auto& req, auto& res) {
      auto s = session(req.matches[1].str());
      std::lock_guard lock(s->mutex);
      if (s->state == SessionState::tracked) {
        throw HttpError(409, "session already tracked; re-seed before changing parameters");
      }
      TrackParams params = s->params;
      from_json(parse_body(req), params);
      s->params = params;
      send_json(res, session_json(*s));
    }));

    http.Post(R"(/api/sessions/([^/]+)/seed)", guarded([this](const auto& req, auto& res) {
      auto s = session(req.matches[1].str());
      const SeedSpec seed = parse_body(req).template get<SeedSpec>();
      std::lock_guard lock(s->mutex);
      KeypointSet seeds = seed_keypoints(*s->volume, seed);
      s->seed = seed;
      s->seeds = std::move(seeds);
      s->result.reset();
      s->state = SessionState::seeded;
      json body = session_json(*s);
      body["keypoints"] = *s->seeds;
      send_json(res, body);
    }));

    http.Post(R"(/api/sessions/([^/]+)/track)", guarded([this](const auto& req, auto& res) {
      auto s = session(req.matches[1].str());
      std::lock_guard lock(s->mutex);
      if (s->state != SessionState::seeded) {
        throw HttpError(409, std::string("cannot track in state ") + to_string(s->state));
      }
      s->result = propagate(*s->volume, *s->seeds, s->params, *s->seed);
      s->state = SessionState::tracked;
      send_json(res, session_json(*s));
    }));

    http.Get(R"(/api/sessions/([^/]+)/slices/(\d+)/keypoints)",
             guarded([this](const auto& req, auto& res) {
               auto s = session(req.matches[1].str());
               std::lock_guard lock(s->mutex);
               const int index = slice_arg(req, 2, *s->volume);
               if (s->result) {
                 auto it = s->result->per_slice.find(index);
                 if (it == s->result->per_slice.end()) {
                   throw HttpError(404, "tracking did not reach slice " + std::to_string(index));
                 }
                 send_json(res, it->second.keypoints);
               } else if (s->seeds && s->seeds->slice_index == index) {
                 send_json(res, *s->seeds);
               } else {
                 throw HttpError(404, "no keypoints on slice " + std::to_string(index));
               }
             }));

    http.Get(R"(/api/sessions/([^/]+)/slices/(\d+)/hull)", guarded([this](const auto& req, auto& res) {
      auto s = session(req.matches[1].str());
      std::lock_guard lock(s->mutex);
      const SliceProducts& p = products(*s, slice_arg(req, 2, *s->volume));
      send_json(res, json{{"hull", p.hull ? json(*p.hull) : json(nullptr)}});
    }));

    http.Get(R"(/api/sessions/([^/]+)/slices/(\d+)/mask)", guarded([this](const auto& req, auto& res) {
      auto s = session(req.matches[1].str());
      std::lock_guard lock(s->mutex);
      const int index = slice_arg(req, 2, *s->volume);
      const SliceProducts& p = products(*s, index);
      if (!p.mask) throw HttpError(404, "no mask on slice " + std::to_string(index));
      std::vector<std::uint8_t> pixels(p.mask->bits().begin(), p.mask->bits().end());
      for (auto& v : pixels) v = v ? 255 : 0;
      res.set_content(io::encode_gray_png(p.mask->width(), p.mask->height(), pixels), "image/png");
    }));

    http.Get(R"(/api/sessions/([^/]+)/slices/(\d+)/overlay)",
             guarded([this](const auto& req, auto& res) {
               auto s = session(req.matches[1].str());
               std::lock_guard lock(s->mutex);
               const int index = slice_arg(req, 2, *s->volume);
               const SliceMask* mask = nullptr;
               if (s->result) {
                 auto it = s->result->per_slice.find(index);
                 if (it != s->result->per_slice.end() && it->second.mask) mask = &*it->second.mask;
               }
               const GraySlice& slice = s->volume->slice(static_cast<std::size_t>(index));
               res.set_content(io::encode_rgba_png(slice.width(), slice.height(),
                                                   overlay_rgba(slice, mask)),
                               "image/png");
             }));

    http.Get(R"(/api/sessions/([^/]+)/metrics)", guarded([this](const auto& req, auto& res) {
      auto s = session(req.matches[1].str());
      std::lock_guard lock(s->mutex);
      if (!s->result) throw HttpError(409, "session has not been tracked");
      const fs::path ann = volume_dir(s->volume_name) / options.annotations_subdir;
      std::error_code ec;
      if (!fs::is_directory(ann, ec)) throw HttpError(404, "volume has no annotations");
      const std::string label =
          req.has_param("label") ? req.get_param_value("label") : options.label;
      const bool include_empty =
          req.has_param("include_empty") && req.get_param_value("include_empty") != "0";
      const auto truth = io::load_annotations(ann, label, s->volume->source_ids(),
                                              s->volume->width(), s->volume->height());
      send_json(res, evaluate(*s->result, truth, include_empty));
    }));
  }

  static const SliceProducts& products(const Session& s, int index) {
    if (!s.result) throw HttpError(409, "session has not been tracked");
    auto it = s.result->per_slice.find(index);
    if (it == s.result->per_slice.end()) {
      throw HttpError(404, "tracking did not reach slice " + std::to_string(index));
    }
    return it->second;
  }

  void snapshot() {
    if (!options.snapshot_dir) return;
    std::lock_guard lock(sessions_mutex);
    for (const auto& [id, s] : sessions) {
      std::lock_guard session_lock(s->mutex);
      if (!s->result) continue;
      io::save_result(*s->result, nullptr, *options.snapshot_dir / id,
                      {s->volume->source_ids(), 1.0, s->volume->slice_spacing_mm()});
    }
  }
};

Server::Server(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Server::~Server() {
  if (!impl_->stopped) stop();
}

int Server::bind(const std::string& host, int port) {
  int bound = -1;
  if (port == 0) {
    bound = impl_->http.bind_to_any_port(host);
  } else if (impl_->http.bind_to_port(host, port)) {
    bound = port;
  }
  if (bound < 0) {
    throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
  }
  return bound;
}

void Server::listen() { impl_->http.listen_after_bind(); }

void Server::stop() {
  impl_->stopped = true;
  impl_->http.stop();
  impl_->snapshot();
}

}  // namespace slicetrack::service
