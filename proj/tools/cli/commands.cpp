#include "cli/commands.hpp"

#include <CLI11.hpp>
#include <csignal>
#include <pthread.h>

#include <fstream>
#include <iomanip>
#include <ostream>
#include <thread>

#include "slicetrack/error.hpp"
#include "slicetrack/io.hpp"
#include "slicetrack/json_codec.hpp"
#include "slicetrack/pipeline.hpp"
#include "slicetrack/service.hpp"

namespace slicetrack::cli {
namespace {

namespace fs = std::filesystem;

struct LoadFlags {
  std::string pattern = "*.png";
  bool numeric_sort = false;
  bool strict = false;
  double spacing_mm = 1.0;

  void add(CLI::App& app) {
    app.add_option("--pattern", pattern, "Wildcard for slice files")->capture_default_str();
    app.add_flag("--numeric-sort", numeric_sort, "Order files with digit runs compared numerically");
    app.add_flag("--strict", strict, "Reject color images instead of converting them");
    app.add_option("--spacing-mm", spacing_mm, "Through-plane slice spacing")->capture_default_str();
  }
  io::LoadOptions options() const { return {pattern, numeric_sort, strict, spacing_mm}; }
};

struct DetectFlags {
  std::string threshold = "quantile:0.95";
  double min_spacing = 4.0;
  std::size_t max_keypoints = 64;

  void add(CLI::App& app) {
    app.add_option("--threshold", threshold, "quantile:<q> or absolute:<t>")->capture_default_str();
    app.add_option("--min-spacing", min_spacing, "Minimum keypoint distance (px)")
        ->capture_default_str();
    app.add_option("--max-keypoints", max_keypoints, "Keypoint cap, 0 for unlimited")
        ->capture_default_str();
  }
  DetectParams params() const {
    DetectParams p;
    p.threshold = parse_threshold(threshold);
    p.min_spacing = min_spacing;
    p.max_keypoints = max_keypoints == 0 ? std::nullopt : std::optional<std::size_t>(max_keypoints);
    return p;
  }
};

struct TrackFlags {
  TrackParams defaults;
  int levels = defaults.pyramid_levels;
  int window_radius = defaults.window_radius;
  int max_iterations = defaults.max_iterations;
  double eps = defaults.convergence_eps;
  double min_eig = defaults.min_eigenvalue;
  std::string fb_error = "1.0";

  void add(CLI::App& app) {
    app.add_option("--levels", levels, "Pyramid levels")->capture_default_str();
    app.add_option("--window-radius", window_radius, "LK window radius (px)")->capture_default_str();
    app.add_option("--max-iterations", max_iterations, "LK iterations per level")
        ->capture_default_str();
    app.add_option("--eps", eps, "LK convergence threshold (px)")->capture_default_str();
    app.add_option("--min-eig", min_eig, "Minimum structure-tensor eigenvalue")
        ->capture_default_str();
    app.add_option("--fb-error", fb_error, "Forward-backward limit in px, or 'off'")
        ->capture_default_str();
  }
  TrackParams params() const {
    TrackParams p;
    p.pyramid_levels = levels;
    p.window_radius = window_radius;
    p.max_iterations = max_iterations;
    p.convergence_eps = eps;
    p.min_eigenvalue = min_eig;
    if (fb_error == "off" || fb_error == "none") {
      p.fb_error_max.reset();
    } else {
      try {
        p.fb_error_max = std::stod(fb_error);
      } catch (const std::exception&) {
        throw ConfigError("--fb-error must be a number or 'off'");
      }
    }
    p.validate();
    return p;
  }
};

Roi parse_roi(const std::vector<int>& v) {
  if (v.size() != 4) throw ValidationError("--roi takes x0,y0,width,height");
  Roi roi{v[0], v[1], v[2], v[3]};
  roi.validate();
  return roi;
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(precision) << v;
  return ss.str();
}

void print_report(std::ostream& out, const MetricsReport& r) {
  out << "slice_index,dsc\n";
  for (const auto& [index, value] : r.per_slice_dsc) out << index << ',' << fmt(value) << '\n';
  out << "\nmean=" << fmt(r.mean) << " std=" << fmt(r.std) << " median=" << fmt(r.median)
      << " iqr=[" << fmt(r.iqr_low) << ", " << fmt(r.iqr_high) << "]"
      << " n_evaluated=" << r.n_evaluated << " n_zero=" << r.n_zero << '\n';
}

io::WarningSink warnings_to(std::ostream& err) {
  return [&err](const std::string& message) { err << "warning: " << message << '\n'; };
}

// Blocks SIGINT/SIGTERM in the calling thread (and threads it spawns) and
// stops the server when one arrives.
int serve(const service::ServiceOptions& options, const std::string& bind, std::ostream& out) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw ConfigError("--bind expects host:port");
  const std::string host = bind.substr(0, colon);
  const int port = std::stoi(bind.substr(colon + 1));

  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  service::Server server(options);
  const int bound = server.bind(host, port);
  out << "serving " << options.volume_root.string() << " on http://" << host << ':' << bound
      << std::endl;
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  });
  server.listen();
  waiter.join();
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Training-free slice-propagation segmentation by keypoint tracking"};
  app.require_subcommand(1);

  // detect
  auto* detect = app.add_subcommand("detect", "List automatically detected keypoints in an ROI");
  std::string detect_volume;
  std::vector<int> detect_roi;
  std::optional<int> detect_start;
  LoadFlags detect_load;
  DetectFlags detect_flags;
  detect->add_option("--volume", detect_volume, "Directory of slice images")->required();
  detect->add_option("--roi", detect_roi, "x0,y0,width,height")->required()->delimiter(',');
  detect->add_option("--start-slice", detect_start, "Slice index (default: center)");
  detect_load.add(*detect);
  detect_flags.add(*detect);

  // track
  auto* track = app.add_subcommand("track", "Seed, propagate and write masks");
  std::string track_volume, track_out, seed_file, annotations, label = "target";
  std::vector<int> track_roi;
  std::optional<int> track_start;
  bool include_empty = false;
  double in_plane_mm = 1.0;
  LoadFlags track_load;
  DetectFlags track_detect;
  TrackFlags track_flags;
  track->add_option("--volume", track_volume, "Directory of slice images")->required();
  auto* seed_opt = track->add_option("--seed-file", seed_file, "Manual seeds ('x y' per line)");
  auto* roi_opt = track->add_option("--roi", track_roi, "x0,y0,width,height for automatic seeding")
                      ->delimiter(',');
  seed_opt->excludes(roi_opt);
  track->add_option("--start-slice", track_start, "Override the start slice");
  track->add_option("--out", track_out, "Output directory")->required();
  track->add_option("--annotations", annotations, "Annotation directory to evaluate against");
  track->add_option("--label", label, "Annotation label")->capture_default_str();
  track->add_flag("--include-empty", include_empty, "Score slices whose ground truth is empty");
  track->add_option("--in-plane-mm", in_plane_mm, "In-plane pixel size")->capture_default_str();
  track_load.add(*track);
  track_detect.add(*track);
  track_flags.add(*track);

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score saved masks against annotations");
  std::string eval_result, eval_annotations, eval_label = "target", eval_out;
  bool eval_include_empty = false;
  evaluate_cmd->add_option("--result", eval_result, "Directory written by 'track'")->required();
  evaluate_cmd->add_option("--annotations", eval_annotations, "Annotation directory")->required();
  evaluate_cmd->add_option("--label", eval_label, "Annotation label")->capture_default_str();
  evaluate_cmd->add_flag("--include-empty", eval_include_empty,
                         "Score slices whose ground truth is empty");
  evaluate_cmd->add_option("--out", eval_out, "Also write metrics.csv/metrics_summary.csv here");

  // reconstruct
  auto* reconstruct_cmd = app.add_subcommand("reconstruct", "Stack saved masks into a voxel blob");
  std::string rec_result, rec_out;
  double rec_in_plane = 1.0;
  std::optional<double> rec_spacing;
  reconstruct_cmd->add_option("--result", rec_result, "Directory written by 'track'")->required();
  reconstruct_cmd->add_option("--out", rec_out, "Output directory for volume.raw/volume.json")
      ->required();
  reconstruct_cmd->add_option("--in-plane-mm", rec_in_plane, "In-plane pixel size")
      ->capture_default_str();
  reconstruct_cmd->add_option("--spacing-mm", rec_spacing,
                              "Slice spacing (default: value recorded by 'track', else 1.0)");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP session service");
  std::string serve_root, serve_bind = "127.0.0.1:8080", snapshot_dir, serve_label = "target";
  LoadFlags serve_load;
  TrackFlags serve_flags;
  serve_cmd->add_option("--root", serve_root, "Directory whose subdirectories are volumes")
      ->required();
  serve_cmd->add_option("--bind", serve_bind, "host:port")->capture_default_str();
  serve_cmd->add_option("--snapshot-dir", snapshot_dir, "Save tracked sessions here on shutdown");
  serve_cmd->add_option("--label", serve_label, "Default annotation label")->capture_default_str();
  serve_load.add(*serve_cmd);
  serve_flags.add(*serve_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    const auto warn = warnings_to(err);

    if (*detect) {
      const Volume volume = io::load_volume(detect_volume, detect_load.options(), warn);
      const SeedSpec seed{AutoSeed{parse_roi(detect_roi), detect_flags.params()}, detect_start};
      const KeypointSet kps = seed_keypoints(volume, seed);
      out << "slice_index,x,y\n";
      for (const auto& k : kps.points) {
        out << kps.slice_index << ',' << fmt(k.x, 2) << ',' << fmt(k.y, 2) << '\n';
      }
      return kOk;
    }

    if (*track) {
      if (seed_file.empty() && track_roi.empty()) {
        throw ConfigError("track needs --seed-file or --roi");
      }
      const TrackParams params = track_flags.params();
      const Volume volume = io::load_volume(track_volume, track_load.options(), warn);
      SeedSpec seed = seed_file.empty()
                          ? SeedSpec{AutoSeed{parse_roi(track_roi), track_detect.params()}, {}}
                          : io::read_seed_file(seed_file);
      if (track_start) seed.start_slice = track_start;

      const SegmentationResult result = segment(volume, seed, params);
      std::optional<MetricsReport> report;
      if (!annotations.empty()) {
        const auto truth = io::load_annotations(annotations, label, volume.source_ids(),
                                                volume.width(), volume.height(), warn);
        report = evaluate(result, truth, include_empty);
      }
      io::save_result(result, report ? &*report : nullptr, track_out,
                      {volume.source_ids(), in_plane_mm, volume.slice_spacing_mm()});

      const auto masks = result.masks();
      out << "start_slice=" << result.start_slice << " stop_up=" << result.stop_up
          << " stop_down=" << result.stop_down << " masks=" << masks.size() << "/"
          << result.slice_count << '\n';
      if (report) print_report(out, *report);
      out << "wrote " << track_out << '\n';
      return kOk;
    }

    if (*evaluate_cmd) {
      const io::SavedResult saved = io::load_result(eval_result);
      const auto truth = io::load_annotations(eval_annotations, eval_label, saved.source_ids,
                                              saved.width, saved.height, warn);
      const MetricsReport report =
          evaluate_masks(saved.masks, truth, saved.width, saved.height, eval_include_empty);
      print_report(out, report);
      if (!eval_out.empty()) {
        std::error_code ec;
        fs::create_directories(eval_out, ec);
        if (ec) throw WriteError("cannot create " + eval_out + ": " + ec.message());
        io::save_metrics(report, eval_out);
      }
      return kOk;
    }

    if (*reconstruct_cmd) {
      const io::SavedResult saved = io::load_result(rec_result);
      SegmentationResult result;
      result.width = saved.width;
      result.height = saved.height;
      result.slice_count = saved.slice_count;
      for (const auto& [index, mask] : saved.masks) {
        result.per_slice[index].mask = mask;
      }
      double spacing = 1.0;
      if (rec_spacing) {
        spacing = *rec_spacing;
      } else {
        std::ifstream in(fs::path(rec_result) / "manifest.json");
        const auto manifest = nlohmann::json::parse(in, nullptr, false);
        if (!manifest.is_discarded()) spacing = manifest.value("slice_spacing_mm", 1.0);
      }
      const VoxelVolume vol = reconstruct(result, rec_in_plane, spacing);
      std::error_code ec;
      fs::create_directories(rec_out, ec);
      if (ec) throw WriteError("cannot create " + rec_out + ": " + ec.message());
      io::write_voxels(vol, fs::path(rec_out) / "volume.raw", fs::path(rec_out) / "volume.json");
      out << "dims=" << vol.nx << "x" << vol.ny << "x" << vol.nz << " voxels=" << vol.count()
          << '\n';
      return kOk;
    }

    if (*serve_cmd) {
      service::ServiceOptions options;
      options.volume_root = serve_root;
      options.load = serve_load.options();
      options.label = serve_label;
      options.default_params = serve_flags.params();
      if (!snapshot_dir.empty()) options.snapshot_dir = snapshot_dir;
      std::error_code ec;
      if (!fs::is_directory(options.volume_root, ec)) {
        throw IngestionError("not a directory: " + serve_root);
      }
      return serve(options, serve_bind, out);
    }
  } catch (const IngestionError& e) {
    err << "ingestion error: " << e.what() << '\n';
    return kIngestionError;
  } catch (const SeedError& e) {
    err << "seed error: " << e.what() << '\n';
    return kSeedError;
  } catch (const WriteError& e) {
    err << "write error: " << e.what() << '\n';
    return kWriteError;
  } catch (const EvaluationError& e) {
    err << "evaluation error: " << e.what() << '\n';
    return kEvaluationError;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kError;
  }
  return kError;
}

}  // namespace slicetrack::cli
