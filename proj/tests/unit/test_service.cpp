#include <doctest.h>

#include <httplib.h>

#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "cli/commands.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "slicetrack/service.hpp"

using namespace slicetrack;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class Running {
 public:
  explicit Running(service::ServiceOptions opts) : server_(std::move(opts)) {
    port_ = server_.bind("127.0.0.1", 0);
    thread_ = std::thread([this] { server_.listen(); });
  }
  ~Running() {
    server_.stop();
    thread_.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(30, 0);
    return c;
  }

 private:
  service::Server server_;
  int port_ = 0;
  std::thread thread_;
};

json body_of(const httplib::Result& r) { return json::parse(r->body); }

std::string create_session(httplib::Client& c, const std::string& volume) {
  const auto r = c.Post("/api/sessions", json{{"volume", volume}}.dump(), "application/json");
  REQUIRE(r);
  REQUIRE(r->status == 201);
  return body_of(r)["id"].get<std::string>();
}

json manual_seed(const std::vector<Point2>& pts, int start) {
  json points = json::array();
  for (auto p : pts) points.push_back({p.x, p.y});
  return {{"mode", "manual"}, {"points", points}, {"start_slice", start}};
}

}  // namespace

TEST_CASE("session lifecycle over HTTP") {
  oracle::TempDir root;
  const auto ring = fixture::small_ring();
  fixture::write_ring(root.path() / "ring", ring);
  service::ServiceOptions opts;
  opts.volume_root = root.path();
  opts.load.numeric_sort = true;
  Running server(opts);
  auto c = server.client();

  SUBCASE("volume listing") {
    auto r = c.Get("/api/volumes");
    REQUIRE(r);
    CHECK(body_of(r)["volumes"] == json::array({"ring"}));
    r = c.Get("/api/volumes/ring");
    CHECK(body_of(r)["slice_count"] == 9);
    r = c.Get("/api/volumes/ring/slices/3");
    CHECK(r->status == 200);
    CHECK(r->get_header_value("Content-Type") == "image/png");
    CHECK(c.Get("/api/volumes/ring/slices/9")->status == 404);
    CHECK(c.Get("/api/volumes/nothing")->status == 404);
  }

  SUBCASE("new session awaits a seed") {
    const std::string id = create_session(c, "ring");
    const auto r = c.Get("/api/sessions/" + id);
    CHECK(body_of(r)["state"] == "awaiting_seed");
    CHECK(c.Post("/api/sessions/" + id + "/track", "", "application/json")->status == 409);
    CHECK(c.Get("/api/sessions/" + id + "/metrics")->status == 409);
    CHECK(c.Delete("/api/sessions/" + id)->status == 204);
    CHECK(c.Get("/api/sessions/" + id)->status == 404);
  }

  SUBCASE("unknown session") {
    CHECK(c.Get("/api/sessions/deadbeef")->status == 404);
    CHECK(c.Post("/api/sessions/deadbeef/track", "", "application/json")->status == 404);
  }

  SUBCASE("invalid seeds are rejected") {
    const std::string id = create_session(c, "ring");
    auto r = c.Post("/api/sessions/" + id + "/seed",
                    manual_seed({{10, 10}, {20, 20}}, 4).dump(), "application/json");
    CHECK(r->status == 422);
    CHECK(body_of(r).contains("error"));
    r = c.Post("/api/sessions/" + id + "/seed",
               manual_seed({{10, 10}, {20, 20}, {10, 30}}, 40).dump(), "application/json");
    CHECK(r->status == 422);
    r = c.Post("/api/sessions/" + id + "/seed", "{not json", "application/json");
    CHECK(r->status == 400);
    CHECK(body_of(c.Get("/api/sessions/" + id))["state"] == "awaiting_seed");
  }

  SUBCASE("seed, track, inspect") {
    const std::string id = create_session(c, "ring");
    const auto seeds = ring.outer_points(4, 24);
    auto r = c.Post("/api/sessions/" + id + "/seed", manual_seed(seeds, 4).dump(),
                    "application/json");
    REQUIRE(r->status == 200);
    CHECK(body_of(r)["state"] == "seeded");
    CHECK(body_of(r)["keypoints"]["points"].size() == 24);

    r = c.Put("/api/sessions/" + id + "/params", R"({"window_radius": 8})", "application/json");
    REQUIRE(r->status == 200);
    CHECK(body_of(r)["params"]["window_radius"] == 8);

    r = c.Post("/api/sessions/" + id + "/track", "", "application/json");
    REQUIRE(r->status == 200);
    CHECK(body_of(r)["state"] == "tracked");
    CHECK(c.Post("/api/sessions/" + id + "/track", "", "application/json")->status == 409);
    CHECK(c.Put("/api/sessions/" + id + "/params", "{}", "application/json")->status == 409);

    for (int z = 0; z < 9; ++z) {
      const std::string base = "/api/sessions/" + id + "/slices/" + std::to_string(z);
      const auto mask = c.Get(base + "/mask");
      REQUIRE(mask->status == 200);
      CHECK(mask->get_header_value("Content-Type") == "image/png");
      const auto hull = c.Get(base + "/hull");
      CHECK(body_of(hull)["hull"].size() >= 3);
      CHECK(body_of(c.Get(base + "/keypoints"))["slice_index"] == z);
      CHECK(c.Get(base + "/overlay")->status == 200);
    }

    r = c.Get("/api/sessions/" + id + "/metrics");
    REQUIRE(r->status == 200);
    CHECK(body_of(r)["mean"].get<double>() > 0.95);
    CHECK(body_of(r)["n_evaluated"] == 9);
    CHECK(c.Get("/api/sessions/" + id + "/metrics?label=nothing")->status == 422);

    // Re-seeding returns the session to the seeded state.
    r = c.Post("/api/sessions/" + id + "/seed", manual_seed(seeds, 4).dump(), "application/json");
    CHECK(body_of(r)["state"] == "seeded");
  }
}

TEST_CASE("service masks match the command line") {
  oracle::TempDir root;
  const auto ring = fixture::small_ring();
  fixture::write_ring(root.path() / "ring", ring, 32);
  const fs::path out = root.path() / "cli_out";

  const std::string vol = (root.path() / "ring").string();
  const std::string seeds = (root.path() / "ring" / "seeds.txt").string();
  const std::string out_s = out.string();
  const char* argv[] = {"slicetrack", "track",     "--volume", vol.c_str(), "--seed-file",
                        seeds.c_str(), "--out", out_s.c_str(), "--numeric-sort"};
  std::ostringstream sout, serr;
  REQUIRE(cli::run(9, argv, sout, serr) == cli::kOk);

  service::ServiceOptions opts;
  opts.volume_root = root.path();
  opts.load.numeric_sort = true;
  Running server(opts);
  auto c = server.client();
  const std::string id = create_session(c, "ring");
  const SeedSpec seed = io::read_seed_file(seeds);
  REQUIRE(c.Post("/api/sessions/" + id + "/seed",
                 manual_seed(std::get<ManualSeed>(seed.mode).points, *seed.start_slice).dump(),
                 "application/json")
              ->status == 200);
  REQUIRE(c.Post("/api/sessions/" + id + "/track", "", "application/json")->status == 200);

  for (int z = 0; z < 9; ++z) {
    const auto r = c.Get("/api/sessions/" + id + "/slices/" + std::to_string(z) + "/mask");
    REQUIRE(r->status == 200);
    char name[32];
    std::snprintf(name, sizeof name, "mask_%04d.png", z);
    const fs::path from_http = root.path() / "http.png";
    fixture::write_text(from_http, r->body);
    CHECK(io::read_mask_png(from_http) == io::read_mask_png(out / "masks" / name));
  }
}

TEST_CASE("snapshots on stop") {
  oracle::TempDir root;
  const auto ring = fixture::small_ring();
  fixture::write_ring(root.path() / "ring", ring, 16);
  service::ServiceOptions opts;
  opts.volume_root = root.path();
  opts.snapshot_dir = root.path() / "snapshots";
  std::string id;
  {
    Running server(opts);
    auto c = server.client();
    id = create_session(c, "ring");
    REQUIRE(c.Post("/api/sessions/" + id + "/seed",
                   manual_seed(ring.outer_points(4, 16), 4).dump(), "application/json")
                ->status == 200);
    REQUIRE(c.Post("/api/sessions/" + id + "/track", "", "application/json")->status == 200);
  }
  CHECK(fs::exists(root.path() / "snapshots" / id / "manifest.json"));
}
