#include "slicetrack/io.hpp"

#include <fnmatch.h>
#include <png.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "slicetrack/error.hpp"
#include "slicetrack/json_codec.hpp"

namespace slicetrack::io {
namespace {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw WriteError("cannot open for writing: " + path.string());
  out << text;
  out.close();
  if (!out) throw WriteError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw IngestionError(path.string() + ": " + e.what());
  }
}

png_image make_png(int width, int height, png_uint_32 format) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = format;
  return img;
}

void check_pixels(int width, int height, std::size_t channels, std::size_t have) {
  if (width < 1 || height < 1 || have != static_cast<std::size_t>(width) * height * channels) {
    throw WriteError("pixel buffer does not match image dimensions");
  }
}

void write_png_file(const fs::path& path, int width, int height, png_uint_32 format,
                    std::size_t channels, std::span<const std::uint8_t> pixels) {
  check_pixels(width, height, channels, pixels.size());
  png_image img = make_png(width, height, format);
  if (!png_image_write_to_file(&img, path.c_str(), 0, pixels.data(), 0, nullptr)) {
    const std::string reason = img.message;
    png_image_free(&img);
    throw WriteError("cannot write image " + path.string() + ": " + reason);
  }
}

std::string encode_png(int width, int height, png_uint_32 format, std::size_t channels,
                       std::span<const std::uint8_t> pixels) {
  check_pixels(width, height, channels, pixels.size());
  png_image img = make_png(width, height, format);
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    throw WriteError(std::string("PNG encoding failed: ") + img.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, pixels.data(), 0, nullptr)) {
    throw WriteError(std::string("PNG encoding failed: ") + img.message);
  }
  out.resize(size);
  return out;
}

// Compares digit runs by numeric value, everything else bytewise.
bool natural_less(const std::string& a, const std::string& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const bool da = std::isdigit(static_cast<unsigned char>(a[i])) != 0;
    const bool db = std::isdigit(static_cast<unsigned char>(b[j])) != 0;
    if (da && db) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      std::size_t is = i, js = j;
      while (is + 1 < ie && a[is] == '0') ++is;
      while (js + 1 < je && b[js] == '0') ++js;
      const auto ra = std::string_view(a).substr(is, ie - is);
      const auto rb = std::string_view(b).substr(js, je - js);
      if (ra.size() != rb.size()) return ra.size() < rb.size();
      if (ra != rb) return ra < rb;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  if (a.size() - i != b.size() - j) return a.size() - i < b.size() - j;
  return a < b;
}

std::string mask_name(int index) {
  std::ostringstream ss;
  ss << "mask_";
  ss.width(4);
  ss.fill('0');
  ss << index << ".png";
  return ss.str();
}

}  // namespace

void warn_to_stderr(const std::string& message) { std::cerr << "warning: " << message << '\n'; }

RawSlice read_gray_png(const fs::path& path, bool strict, const WarningSink& warn) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw IngestionError("cannot read image " + path.string() + ": " + img.message);
  }
  if (img.format & PNG_FORMAT_FLAG_COLOR) {
    if (strict) {
      png_image_free(&img);
      throw IngestionError("color image rejected in strict mode: " + path.string());
    }
    if (warn) warn("converting color image to grayscale by luminance: " + path.string());
  }
  img.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
    const std::string reason = img.message;
    png_image_free(&img);
    throw IngestionError("cannot decode image " + path.string() + ": " + reason);
  }
  RawSlice raw{static_cast<int>(img.width), static_cast<int>(img.height), {}};
  raw.values.assign(buffer.begin(), buffer.end());
  return raw;
}

void write_gray_png(const fs::path& path, int width, int height,
                    std::span<const std::uint8_t> pixels) {
  write_png_file(path, width, height, PNG_FORMAT_GRAY, 1, pixels);
}

void write_rgba_png(const fs::path& path, int width, int height,
                    std::span<const std::uint8_t> pixels) {
  write_png_file(path, width, height, PNG_FORMAT_RGBA, 4, pixels);
}

std::string encode_gray_png(int width, int height, std::span<const std::uint8_t> pixels) {
  return encode_png(width, height, PNG_FORMAT_GRAY, 1, pixels);
}

std::string encode_rgba_png(int width, int height, std::span<const std::uint8_t> pixels) {
  return encode_png(width, height, PNG_FORMAT_RGBA, 4, pixels);
}

std::vector<std::uint8_t> to_bytes(const GraySlice& slice) {
  std::vector<std::uint8_t> out;
  out.reserve(slice.intensities().size());
  for (double v : slice.intensities()) {
    out.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
  }
  return out;
}

void write_mask_png(const fs::path& path, const SliceMask& mask) {
  std::vector<std::uint8_t> pixels(mask.bits().begin(), mask.bits().end());
  for (auto& p : pixels) p = p ? 255 : 0;
  write_gray_png(path, mask.width(), mask.height(), pixels);
}

SliceMask read_mask_png(const fs::path& path) {
  RawSlice raw = read_gray_png(path, true, nullptr);
  std::vector<std::uint8_t> bits(raw.values.size());
  std::transform(raw.values.begin(), raw.values.end(), bits.begin(),
                 [](std::uint32_t v) { return static_cast<std::uint8_t>(v != 0); });
  return SliceMask(raw.width, raw.height, std::move(bits));
}

std::vector<std::string> sort_filenames(std::vector<std::string> names, bool numeric) {
  if (numeric) {
    std::sort(names.begin(), names.end(), natural_less);
  } else {
    std::sort(names.begin(), names.end());
  }
  return names;
}

Volume load_volume(const fs::path& directory, const LoadOptions& options,
                   const WarningSink& warn) {
  std::error_code ec;
  if (!fs::is_directory(directory, ec)) {
    throw IngestionError("not a directory: " + directory.string());
  }
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(directory, ec)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (fnmatch(options.pattern.c_str(), name.c_str(), 0) == 0) names.push_back(name);
  }
  if (ec) throw IngestionError("cannot list " + directory.string() + ": " + ec.message());
  if (names.empty()) {
    throw IngestionError("no images matching '" + options.pattern + "' in " + directory.string());
  }
  names = sort_filenames(std::move(names), options.numeric_sort);

  std::vector<GraySlice> slices;
  slices.reserve(names.size());
  for (const auto& name : names) {
    slices.push_back(normalize_intensities(
        read_gray_png(directory / name, options.strict, warn), 255));
  }

  std::ostringstream offenders;
  const int w = slices.front().width();
  const int h = slices.front().height();
  for (std::size_t i = 0; i < slices.size(); ++i) {
    if (slices[i].width() != w || slices[i].height() != h) {
      offenders << ' ' << names[i] << " (" << slices[i].width() << "x" << slices[i].height()
                << ")";
    }
  }
  if (!offenders.str().empty()) {
    std::ostringstream msg;
    msg << "mixed slice dimensions in " << directory.string() << "; expected " << w << "x" << h
        << " (from " << names.front() << "), got:" << offenders.str();
    throw IngestionError(msg.str());
  }
  return Volume(std::move(slices), options.slice_spacing_mm, std::move(names));
}

AnnotationFile read_annotation_file(const fs::path& path) {
  const json doc = read_json(path);
  AnnotationFile out;
  try {
    const auto image_path = doc.value("imagePath", std::string());
    out.slice_id = image_path.empty() ? path.stem().string()
                                      : fs::path(image_path).filename().string();
    for (const auto& shape : doc.value("shapes", json::array())) {
      const auto type = shape.value("shape_type", std::string("polygon"));
      LabeledPolygon lp;
      lp.label = shape.value("label", std::string());
      for (const auto& p : shape.at("points")) {
        lp.polygon.vertices.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      }
      if (type == "rectangle" && lp.polygon.vertices.size() == 2) {
        const Point2 a = lp.polygon.vertices[0];
        const Point2 b = lp.polygon.vertices[1];
        lp.polygon.vertices = {a, {b.x, a.y}, b, {a.x, b.y}};
      } else if (type != "polygon") {
        continue;
      }
      if (lp.polygon.vertices.size() < 3) {
        throw IngestionError(path.string() + ": polygon '" + lp.label +
                             "' has fewer than 3 vertices");
      }
      out.polygons.push_back(std::move(lp));
    }
  } catch (const json::exception& e) {
    throw IngestionError(path.string() + ": " + e.what());
  }
  return out;
}

void write_annotation_file(const fs::path& path, const AnnotationFile& annotation, int width,
                           int height) {
  json shapes = json::array();
  for (const auto& lp : annotation.polygons) {
    shapes.push_back(json{{"label", lp.label},
                          {"points", lp.polygon.vertices},
                          {"group_id", nullptr},
                          {"shape_type", "polygon"},
                          {"flags", json::object()}});
  }
  const json doc{{"version", "5.0.1"},
                 {"flags", json::object()},
                 {"shapes", std::move(shapes)},
                 {"imagePath", annotation.slice_id},
                 {"imageData", nullptr},
                 {"imageHeight", height},
                 {"imageWidth", width}};
  write_text(path, doc.dump(2) + "\n");
}

std::map<int, SliceMask> load_annotations(const fs::path& directory, const std::string& label,
                                          const std::vector<std::string>& source_ids,
                                          int width, int height, const WarningSink& warn) {
  std::error_code ec;
  if (!fs::is_directory(directory, ec)) {
    throw IngestionError("not a directory: " + directory.string());
  }
  std::map<std::string, int> by_name;
  std::map<std::string, int> by_stem;
  for (std::size_t i = 0; i < source_ids.size(); ++i) {
    by_name.emplace(source_ids[i], static_cast<int>(i));
    by_stem.emplace(fs::path(source_ids[i]).stem().string(), static_cast<int>(i));
  }

  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path().filename().string());
    }
  }
  files = sort_filenames(std::move(files), false);

  std::map<int, SliceMask> out;
  for (const auto& file : files) {
    const AnnotationFile ann = read_annotation_file(directory / file);
    int index = -1;
    if (auto it = by_name.find(ann.slice_id); it != by_name.end()) {
      index = it->second;
    } else if (auto st = by_stem.find(fs::path(ann.slice_id).stem().string());
               st != by_stem.end()) {
      index = st->second;
    } else {
      throw IngestionError("annotation " + file + " refers to unknown slice '" + ann.slice_id +
                           "'");
    }
    for (const auto& lp : ann.polygons) {
      if (lp.label != label) continue;
      const SliceMask mask = rasterize(lp.polygon, width, height);
      auto [it, inserted] = out.try_emplace(index, mask);
      if (!inserted) it->second |= mask;
    }
  }
  if (out.empty() && warn) {
    warn("no polygons labeled '" + label + "' in " + directory.string());
  }
  return out;
}

SeedSpec parse_seed_file(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  SeedSpec seed;
  ManualSeed manual;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    if (!have_header) {
      std::string key, value, extra;
      fields >> key >> value;
      if (key != "start_slice" || value.empty() || (fields >> extra)) {
        throw SeedError("seed file line " + std::to_string(line_no) +
                        ": expected header 'start_slice <index|center>'");
      }
      if (value != "center") {
        int index = 0;
        const auto res = std::from_chars(value.data(), value.data() + value.size(), index);
        if (res.ec != std::errc() || res.ptr != value.data() + value.size() ||
            index < 0) {
          throw SeedError("seed file line " + std::to_string(line_no) +
                          ": bad start slice '" + value + "'");
        }
        seed.start_slice = index;
      }
      have_header = true;
      continue;
    }
    double x = 0.0, y = 0.0;
    std::string extra;
    if (!(fields >> x >> y) || (fields >> extra)) {
      throw SeedError("seed file line " + std::to_string(line_no) + ": expected 'x y'");
    }
    manual.points.push_back({x, y});
  }
  if (!have_header) throw SeedError("seed file is missing the 'start_slice' header");
  seed.mode = std::move(manual);
  return seed;
}

SeedSpec read_seed_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SeedError("cannot open seed file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_seed_file(ss.str());
}

std::string format_seed_file(const SeedSpec& seed) {
  const auto* manual = std::get_if<ManualSeed>(&seed.mode);
  if (!manual) throw ValidationError("only manual seeds have a seed-file form");
  std::ostringstream out;
  out << "start_slice " << (seed.start_slice ? std::to_string(*seed.start_slice) : "center")
      << '\n';
  for (const auto& p : manual->points) {
    out << format_double(p.x) << ' ' << format_double(p.y) << '\n';
  }
  return out.str();
}

void save_metrics(const MetricsReport& report, const fs::path& out_dir) {
  std::ostringstream per_slice;
  per_slice << "slice_index,dsc\n";
  for (const auto& [index, value] : report.per_slice_dsc) {
    per_slice << index << ',' << format_double(value) << '\n';
  }
  write_text(out_dir / "metrics.csv", per_slice.str());

  std::ostringstream summary;
  summary << "mean,std,median,iqr_low,iqr_high,n_evaluated,n_zero\n"
          << format_double(report.mean) << ',' << format_double(report.std) << ','
          << format_double(report.median) << ',' << format_double(report.iqr_low) << ','
          << format_double(report.iqr_high) << ',' << report.n_evaluated << ','
          << report.n_zero << '\n';
  write_text(out_dir / "metrics_summary.csv", summary.str());
}

void save_result(const SegmentationResult& result, const MetricsReport* report,
                 const fs::path& out_dir, const SaveOptions& options) {
  const fs::path mask_dir = out_dir / "masks";
  std::error_code ec;
  fs::create_directories(mask_dir, ec);
  if (ec) throw WriteError("cannot create " + mask_dir.string() + ": " + ec.message());
  for (const auto& entry : fs::directory_iterator(mask_dir, ec)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("mask_", 0) == 0 && entry.path().extension() == ".png") {
      fs::remove(entry.path(), ec);
    }
  }

  json slices = json::array();
  std::ostringstream traj;
  traj << "slice_index,point_index,x,y,status\n";
  for (const auto& [index, products] : result.per_slice) {
    json entry{{"index", index}, {"keypoints", products.keypoints}};
    if (products.mask) {
      const std::string rel = "masks/" + mask_name(index);
      write_mask_png(out_dir / rel, *products.mask);
      entry["mask"] = rel;
    } else {
      entry["mask"] = nullptr;
    }
    entry["hull"] = products.hull ? json(*products.hull) : json(nullptr);
    slices.push_back(std::move(entry));
    for (std::size_t k = 0; k < products.keypoints.points.size(); ++k) {
      const auto& p = products.keypoints.points[k];
      traj << index << ',' << k << ',' << format_double(p.x) << ',' << format_double(p.y) << ','
           << to_string(p.status) << '\n';
    }
  }

  json manifest{{"format", "slicetrack-result/1"},
                {"width", result.width},
                {"height", result.height},
                {"slice_count", result.slice_count},
                {"start_slice", result.start_slice},
                {"stop_up", result.stop_up},
                {"stop_down", result.stop_down},
                {"seed", result.seed},
                {"params", result.params},
                {"in_plane_mm", options.in_plane_mm},
                {"slice_spacing_mm", options.slice_spacing_mm},
                {"source_ids", options.source_ids},
                {"slices", std::move(slices)}};
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  write_text(out_dir / "trajectories.csv", traj.str());

  if (report) save_metrics(*report, out_dir);

  if (!result.masks().empty()) {
    write_voxels(reconstruct(result, options.in_plane_mm, options.slice_spacing_mm),
                 out_dir / "volume.raw", out_dir / "volume.json");
  }
}

SavedResult load_result(const fs::path& result_dir) {
  const json manifest = read_json(result_dir / "manifest.json");
  SavedResult out;
  try {
    out.width = manifest.at("width").get<int>();
    out.height = manifest.at("height").get<int>();
    out.slice_count = manifest.at("slice_count").get<int>();
    out.source_ids = manifest.value("source_ids", std::vector<std::string>{});
    for (const auto& entry : manifest.at("slices")) {
      const auto& mask = entry.at("mask");
      if (mask.is_null()) continue;
      SliceMask m = read_mask_png(result_dir / mask.get<std::string>());
      if (m.width() != out.width || m.height() != out.height) {
        throw IngestionError("mask " + mask.get<std::string>() + " has wrong dimensions");
      }
      out.masks.emplace(entry.at("index").get<int>(), std::move(m));
    }
  } catch (const json::exception& e) {
    throw IngestionError((result_dir / "manifest.json").string() + ": " + e.what());
  }
  return out;
}

void write_voxels(const VoxelVolume& volume, const fs::path& blob_path,
                  const fs::path& meta_path) {
  const std::size_t expected = static_cast<std::size_t>(volume.nx) * volume.ny * volume.nz;
  if (volume.bits.size() != expected) throw WriteError("voxel buffer does not match dims");
  {
    std::ofstream out(blob_path, std::ios::binary | std::ios::trunc);
    if (!out) throw WriteError("cannot open for writing: " + blob_path.string());
    out.write(reinterpret_cast<const char*>(volume.bits.data()),
              static_cast<std::streamsize>(volume.bits.size()));
    if (!out) throw WriteError("write failed: " + blob_path.string());
  }
  const json meta{{"format", "slicetrack-voxels/1"},
                  {"blob", blob_path.filename().string()},
                  {"dims", {volume.nx, volume.ny, volume.nz}},
                  {"spacing_mm", {volume.sx, volume.sy, volume.sz}},
                  {"voxel_type", "uint8"},
                  {"values", "0 = background, 1 = foreground"},
                  {"byte_order", "z-major, then row-major (x fastest) within each plane"}};
  write_text(meta_path, meta.dump(2) + "\n");
}

VoxelVolume read_voxels(const fs::path& blob_path, const fs::path& meta_path) {
  const json meta = read_json(meta_path);
  VoxelVolume vol;
  try {
    const auto dims = meta.at("dims");
    const auto spacing = meta.at("spacing_mm");
    vol.nx = dims.at(0).get<int>();
    vol.ny = dims.at(1).get<int>();
    vol.nz = dims.at(2).get<int>();
    vol.sx = spacing.at(0).get<double>();
    vol.sy = spacing.at(1).get<double>();
    vol.sz = spacing.at(2).get<double>();
  } catch (const json::exception& e) {
    throw IngestionError(meta_path.string() + ": " + e.what());
  }
  const std::string blob = read_text(blob_path);
  if (blob.size() != static_cast<std::size_t>(vol.nx) * vol.ny * vol.nz) {
    throw IngestionError("voxel blob size does not match sidecar dims: " + blob_path.string());
  }
  vol.bits.assign(blob.begin(), blob.end());
  return vol;
}

}  // namespace slicetrack::io
