#include <doctest.h>

#include <nlohmann/json.hpp>
#include <sstream>

#include "cli/commands.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "slicetrack/io.hpp"

using namespace slicetrack;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "slicetrack");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string p(const fs::path& path) { return path.string(); }

// One-slice result whose 4x4 mask at the origin half-overlaps a 4x4
// annotated square shifted right by 2.
void write_half_overlap(const fs::path& dir) {
  SegmentationResult r;
  r.width = 8;
  r.height = 8;
  r.slice_count = 1;
  r.seed = SeedSpec{ManualSeed{{{0, 0}, {3, 0}, {0, 3}}}, 0};
  SliceMask m(8, 8);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) m.set(x, y);
  r.per_slice[0].keypoints = {0, {}};
  r.per_slice[0].mask = m;
  io::SaveOptions opts;
  opts.source_ids = {"only.png"};
  io::save_result(r, nullptr, dir / "result", opts);
  fs::create_directories(dir / "ann");
  io::write_annotation_file(dir / "ann" / "only.json",
                            {"only.png", {{"target", Polygon{{{2, 0}, {6, 0}, {6, 4}, {2, 4}}}}}},
                            8, 8);
}

}  // namespace

TEST_CASE("detect") {
  oracle::TempDir dir;
  SUBCASE("lists keypoints on a textured slice") {
    fixture::write_ring(dir.path(), fixture::small_ring());
    const Run r = run({"detect", "--volume", p(dir.path()), "--roi", "16,16,64,64"});
    CHECK(r.code == cli::kOk);
    CHECK(r.out.rfind("slice_index,x,y\n4,", 0) == 0);
  }
  SUBCASE("constant volume has nothing to seed") {
    for (int z = 0; z < 3; ++z)
      fixture::write_slice(dir.path() / fixture::slice_name(z), GraySlice::filled(32, 32, 0.5));
    const Run r = run({"detect", "--volume", p(dir.path()), "--roi", "0,0,32,32"});
    CHECK(r.code == cli::kSeedError);
    CHECK(r.err.find("threshold") != std::string::npos);
  }
  SUBCASE("missing volume directory") {
    const Run r = run({"detect", "--volume", p(dir.path() / "nope"), "--roi", "0,0,8,8"});
    CHECK(r.code == cli::kIngestionError);
  }
  SUBCASE("bad threshold") {
    fixture::write_ring(dir.path(), fixture::small_ring());
    const Run r = run({"detect", "--volume", p(dir.path()), "--roi", "16,16,64,64",
                       "--threshold", "median"});
    CHECK(r.code != cli::kOk);
  }
}

TEST_CASE("track") {
  oracle::TempDir dir;
  const fs::path vol = dir.path() / "vol";
  fixture::write_ring(vol, fixture::small_ring(), 24);

  SUBCASE("manual seeds with evaluation") {
    const Run r = run({"track", "--volume", p(vol), "--seed-file", p(vol / "seeds.txt"), "--out",
                       p(dir.path() / "out"), "--annotations", p(vol / "annotations")});
    REQUIRE(r.code == cli::kOk);
    CHECK(fs::exists(dir.path() / "out" / "masks" / "mask_0008.png"));
    CHECK(fs::exists(dir.path() / "out" / "metrics_summary.csv"));
    CHECK(r.out.find("mean=") != std::string::npos);
  }
  SUBCASE("automatic seeds") {
    const Run r = run({"track", "--volume", p(vol), "--roi", "16,16,64,64", "--out",
                       p(dir.path() / "out")});
    CHECK(r.code == cli::kOk);
  }
  SUBCASE("too few seeds") {
    fixture::write_text(dir.path() / "two.txt", "start_slice center\n10 10\n20 20\n");
    const Run r = run({"track", "--volume", p(vol), "--seed-file", p(dir.path() / "two.txt"),
                       "--out", p(dir.path() / "out")});
    CHECK(r.code == cli::kSeedError);
  }
  SUBCASE("unwritable output") {
    fixture::write_text(dir.path() / "blocker", "x");
    const Run r = run({"track", "--volume", p(vol), "--seed-file", p(vol / "seeds.txt"), "--out",
                       p(dir.path() / "blocker" / "out")});
    CHECK(r.code == cli::kWriteError);
  }
  SUBCASE("window too large for the volume") {
    const Run r = run({"track", "--volume", p(vol), "--seed-file", p(vol / "seeds.txt"), "--out",
                       p(dir.path() / "out"), "--window-radius", "20"});
    CHECK(r.code == cli::kConfigError);
  }
  SUBCASE("seed source is required") {
    const Run r = run({"track", "--volume", p(vol), "--out", p(dir.path() / "out")});
    CHECK(r.code != cli::kOk);
  }
}

TEST_CASE("evaluate") {
  oracle::TempDir dir;
  SUBCASE("perfect masks") {
    const fs::path vol = dir.path() / "vol";
    fixture::write_ring(vol, fixture::small_ring(), 24);
    REQUIRE(run({"track", "--volume", p(vol), "--seed-file", p(vol / "seeds.txt"), "--out",
                 p(dir.path() / "out")})
                .code == cli::kOk);
    // Annotate each slice with the hull recorded in the manifest, so the
    // ground truth rasterizes to exactly the saved mask.
    const fs::path ann = dir.path() / "self";
    fs::create_directories(ann);
    const auto manifest = nlohmann::json::parse(fixture::read_text(dir.path() / "out" /
                                                                   "manifest.json"));
    for (const auto& s : manifest["slices"]) {
      Polygon hull;
      for (const auto& v : s["hull"]) hull.vertices.push_back({v[0].get<double>(), v[1].get<double>()});
      const int z = s["index"];
      io::write_annotation_file(ann / (std::to_string(z) + ".json"),
                                {fixture::slice_name(z), {{"target", hull}}}, 96, 96);
    }
    const Run r = run({"evaluate", "--result", p(dir.path() / "out"), "--annotations", p(ann),
                       "--out", p(dir.path() / "metrics")});
    REQUIRE(r.code == cli::kOk);
    CHECK(r.out.find("mean=1.000000 ") != std::string::npos);
    CHECK(fs::exists(dir.path() / "metrics" / "metrics.csv"));
  }
  SUBCASE("half overlap") {
    write_half_overlap(dir.path());
    const Run r = run({"evaluate", "--result", p(dir.path() / "result"), "--annotations",
                       p(dir.path() / "ann")});
    REQUIRE(r.code == cli::kOk);
    CHECK(r.out.find("0,0.500000\n") != std::string::npos);
  }
  SUBCASE("label not found") {
    write_half_overlap(dir.path());
    const Run r = run({"evaluate", "--result", p(dir.path() / "result"), "--annotations",
                       p(dir.path() / "ann"), "--label", "liver"});
    CHECK(r.code == cli::kEvaluationError);
    CHECK(r.err.find("warning") != std::string::npos);
  }
  SUBCASE("missing result") {
    const Run r = run({"evaluate", "--result", p(dir.path() / "none"), "--annotations",
                       p(dir.path())});
    CHECK(r.code == cli::kIngestionError);
  }
}

TEST_CASE("reconstruct") {
  oracle::TempDir dir;
  write_half_overlap(dir.path());
  const Run r = run({"reconstruct", "--result", p(dir.path() / "result"), "--out",
                     p(dir.path() / "vox"), "--in-plane-mm", "0.5", "--spacing-mm", "2"});
  REQUIRE(r.code == cli::kOk);
  const VoxelVolume v =
      io::read_voxels(dir.path() / "vox" / "volume.raw", dir.path() / "vox" / "volume.json");
  CHECK(v.count() == 16);
  CHECK(v.sx == 0.5);
  CHECK(v.sz == 2.0);
}

TEST_CASE("usage errors") {
  CHECK(run({}).code != cli::kOk);
  CHECK(run({"frobnicate"}).code != cli::kOk);
  CHECK(run({"--help"}).code == cli::kOk);
}
