#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slicetrack/pipeline.hpp"
#include "slicetrack/types.hpp"

namespace slicetrack::io {

namespace fs = std::filesystem;

/// Receives non-fatal diagnostics (color input converted, label not found).
using WarningSink = std::function<void(const std::string&)>;

/// Writes "warning: <message>" to stderr.
void warn_to_stderr(const std::string& message);

// ---------------------------------------------------------------------------
// Images

/// Reads an image as 8-bit grayscale. Color images are converted by
/// luminance with a warning, or rejected with IngestionError when strict.
RawSlice read_gray_png(const fs::path& path, bool strict = false,
                       const WarningSink& warn = warn_to_stderr);

/// Writes 8-bit grayscale pixels (row-major). Throws WriteError.
void write_gray_png(const fs::path& path, int width, int height,
                    std::span<const std::uint8_t> pixels);

/// Writes 8-bit RGBA pixels (row-major). Throws WriteError.
void write_rgba_png(const fs::path& path, int width, int height,
                    std::span<const std::uint8_t> pixels);

/// Same encoders, into memory.
std::string encode_gray_png(int width, int height, std::span<const std::uint8_t> pixels);
std::string encode_rgba_png(int width, int height, std::span<const std::uint8_t> pixels);

/// Slice intensities quantized back to 8 bits.
std::vector<std::uint8_t> to_bytes(const GraySlice& slice);

/// Masks are stored as 0/255 grayscale images; any nonzero pixel reads as set.
void write_mask_png(const fs::path& path, const SliceMask& mask);
SliceMask read_mask_png(const fs::path& path);

// ---------------------------------------------------------------------------
// Volumes

struct LoadOptions {
  std::string pattern = "*.png";  // shell-style wildcard on file names
  bool numeric_sort = false;      // "s2" before "s10"
  bool strict = false;            // reject color images
  double slice_spacing_mm = 1.0;
};

/// Orders file names lexicographically, or with digit runs compared as
/// numbers when numeric is set.
std::vector<std::string> sort_filenames(std::vector<std::string> names, bool numeric);

/// Loads every matching file of `directory` as one slice. Throws
/// IngestionError for a missing or empty directory and for mixed sizes
/// (listing the offending files).
Volume load_volume(const fs::path& directory, const LoadOptions& options = {},
                   const WarningSink& warn = warn_to_stderr);

// ---------------------------------------------------------------------------
// Annotations (LabelMe-style JSON: imagePath plus shapes with label/points)

struct LabeledPolygon {
  std::string label;
  Polygon polygon;
};

struct AnnotationFile {
  std::string slice_id;
  std::vector<LabeledPolygon> polygons;
};

/// Parses one annotation file. The slice id is the file name of
/// "imagePath", or the annotation file's stem when absent. Shapes with
/// fewer than 3 points are rejected with IngestionError.
AnnotationFile read_annotation_file(const fs::path& path);

/// Writes a LabelMe-style file with polygon shapes. Throws WriteError.
void write_annotation_file(const fs::path& path, const AnnotationFile& annotation, int width,
                           int height);

/// Rasterizes polygons carrying `label` from every *.json file in
/// `directory`, unioning polygons that share a slice. Slice ids resolve
/// against `source_ids` by exact name, then by stem. Throws IngestionError
/// for an unresolvable slice id; warns and returns an empty map when no
/// polygon has the label.
std::map<int, SliceMask> load_annotations(const fs::path& directory, const std::string& label,
                                          const std::vector<std::string>& source_ids,
                                          int width, int height,
                                          const WarningSink& warn = warn_to_stderr);

// ---------------------------------------------------------------------------
// Seeds

/// Text format: a header line "start_slice <index|center>" followed by one
/// "x y" pair per line. Blank lines and lines starting with '#' are
/// ignored. Throws SeedError on malformed content.
SeedSpec parse_seed_file(const std::string& text);
SeedSpec read_seed_file(const fs::path& path);
std::string format_seed_file(const SeedSpec& seed);

// ---------------------------------------------------------------------------
// Results

struct SaveOptions {
  std::vector<std::string> source_ids;  // recorded in the manifest when given
  double in_plane_mm = 1.0;
  double slice_spacing_mm = 1.0;
};

/// Writes into `out_dir` (created if needed):
///   masks/mask_NNNN.png     one 0/255 image per slice with a mask
///   manifest.json           run metadata, seed, params, per-slice keypoints and hulls
///   trajectories.csv        slice_index,point_index,x,y,status
///   metrics.csv             slice_index,dsc                          (with a report)
///   metrics_summary.csv     mean,std,median,iqr_low,iqr_high,n_evaluated,n_zero
///   volume.raw/volume.json  voxel stack (when any mask exists)
/// Throws WriteError naming the failing path.
void save_result(const SegmentationResult& result, const MetricsReport* report,
                 const fs::path& out_dir, const SaveOptions& options = {});

void save_metrics(const MetricsReport& report, const fs::path& out_dir);

/// What evaluate/reconstruct need from a saved result directory.
struct SavedResult {
  int width = 0;
  int height = 0;
  int slice_count = 0;
  std::vector<std::string> source_ids;
  std::map<int, SliceMask> masks;
};

/// Reads manifest.json and the mask images it references. Throws
/// IngestionError.
SavedResult load_result(const fs::path& result_dir);

/// Raw blob of one byte per voxel (0/1), z-major then row-major, with a
/// JSON sidecar holding dims, spacing and layout. Throws WriteError.
void write_voxels(const VoxelVolume& volume, const fs::path& blob_path,
                  const fs::path& meta_path);
VoxelVolume read_voxels(const fs::path& blob_path, const fs::path& meta_path);

}  // namespace slicetrack::io
