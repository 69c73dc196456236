#pragma once

// On-disk test volumes in the layout the CLI and service read.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "slicetrack/io.hpp"
#include "slicetrack/phantom.hpp"

namespace fixture {

namespace fs = std::filesystem;

inline std::string slice_name(int index) {
  char name[32];
  std::snprintf(name, sizeof name, "slice_%03d.png", index);
  return name;
}

inline void write_slice(const fs::path& path, const slicetrack::GraySlice& s) {
  slicetrack::io::write_gray_png(path, s.width(), s.height(), slicetrack::io::to_bytes(s));
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Slices as slice_NNN.png, outline annotations under annotations/, and a
/// seeds.txt with `seed_points` manual seeds on the reference slice.
inline void write_ring(const fs::path& dir, const slicetrack::phantom::RingPhantom& ring,
                       int seed_points = 40, const std::string& label = "target") {
  namespace io = slicetrack::io;
  fs::create_directories(dir / "annotations");
  for (int z = 0; z < ring.slices; ++z) {
    const std::string name = slice_name(z);
    write_slice(dir / name, ring.render(z));
    io::AnnotationFile ann{name, {{label, ring.outline(z)}}};
    io::write_annotation_file(dir / "annotations" / (fs::path(name).stem().string() + ".json"),
                              ann, ring.width, ring.height);
  }
  const slicetrack::SeedSpec seed{
      slicetrack::ManualSeed{ring.outer_points(ring.reference_slice, seed_points)},
      ring.reference_slice};
  write_text(dir / "seeds.txt", io::format_seed_file(seed));
}

/// 96x96, 9-slice ring centered in the frame; small enough for unit tests.
inline slicetrack::phantom::RingPhantom small_ring() {
  slicetrack::phantom::RingPhantom ph;
  ph.width = 96;
  ph.height = 96;
  ph.slices = 9;
  ph.reference_slice = 4;
  ph.center = {48.0, 48.0};
  ph.inner_radius = 12.0;
  ph.outer_radius = 24.0;
  return ph;
}

}  // namespace fixture
