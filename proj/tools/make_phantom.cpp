// Writes a synthetic ring phantom as a directory of PNG slices, with one
// LabelMe-style annotation per slice and a manual seed file.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "slicetrack/error.hpp"
#include "slicetrack/io.hpp"
#include "slicetrack/phantom.hpp"

namespace fs = std::filesystem;
using namespace slicetrack;

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic ring phantom volume"};
  std::string out_dir;
  std::string label = "target";
  phantom::RingPhantom ring;
  int seed_points = 40;
  app.add_option("--out", out_dir, "Output volume directory")->required();
  app.add_option("--slices", ring.slices, "Slice count")->capture_default_str();
  app.add_option("--width", ring.width, "Slice width")->capture_default_str();
  app.add_option("--height", ring.height, "Slice height")->capture_default_str();
  app.add_option("--drift-x", ring.drift_per_slice.x, "Ring motion per slice (px)")
      ->capture_default_str();
  app.add_option("--drift-y", ring.drift_per_slice.y, "Ring motion per slice (px)")
      ->capture_default_str();
  app.add_option("--texture-seed", ring.seed, "Texture RNG seed")->capture_default_str();
  app.add_option("--label", label, "Annotation label")->capture_default_str();
  app.add_option("--seed-points", seed_points, "Manual seeds written to seeds.txt")
      ->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  ring.reference_slice = ring.slices / 2;
  ring.center = {ring.width / 2.0, ring.height / 2.0};

  try {
    const fs::path root(out_dir);
    fs::create_directories(root / "annotations");
    for (int s = 0; s < ring.slices; ++s) {
      char name[32];
      std::snprintf(name, sizeof name, "slice_%03d.png", s);
      const GraySlice slice = ring.render(s);
      io::write_gray_png(root / name, slice.width(), slice.height(), io::to_bytes(slice));
      io::AnnotationFile ann{name, {{label, ring.outline(s)}}};
      io::write_annotation_file(root / "annotations" / (fs::path(name).stem().string() + ".json"),
                                ann, ring.width, ring.height);
    }
    SeedSpec seeds{ManualSeed{ring.outer_points(ring.reference_slice, seed_points)},
                   ring.reference_slice};
    std::FILE* f = std::fopen((root / "seeds.txt").c_str(), "w");
    if (!f) throw WriteError("cannot write seeds.txt");
    const std::string text = io::format_seed_file(seeds);
    std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
    std::cout << "wrote " << ring.slices << " slices to " << root.string() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
