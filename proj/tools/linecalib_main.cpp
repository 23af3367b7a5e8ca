// linecalib: LiDAR-camera extrinsic calibration from lanes and poles.
//
// Exit codes: 0 success, 1 usage/parse/io, 2 feature extraction, 3 coarse
// calibration, 4 refinement.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "linecalib/calibration.hpp"
#include "linecalib/config.hpp"
#include "linecalib/error.hpp"
#include "linecalib/evaluation.hpp"
#include "linecalib/image_features.hpp"
#include "linecalib/image_io.hpp"
#include "linecalib/pointcloud.hpp"
#include "linecalib/synthetic.hpp"
#include "linecalib/text_io.hpp"

namespace fs = std::filesystem;
using namespace linecalib;

namespace {

enum Exit : int { kOk = 0, kParseExit = 1, kExtractionExit = 2, kCoarseExit = 3, kRefineExit = 4 };

int exit_code(Stage stage) {
  switch (stage) {
    case Stage::kParse: return kParseExit;
    case Stage::kExtraction: return kExtractionExit;
    case Stage::kCoarse: return kCoarseExit;
    case Stage::kRefine: return kRefineExit;
  }
  return kParseExit;
}

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
};

PipelineConfig load_pipeline_config(const GlobalOptions& g) {
  PipelineConfig cfg = g.config.empty() ? PipelineConfig{} : load_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
  return cfg;
}

// Files of one frame. `--frame PREFIX` expands to PREFIX.bin, PREFIX_lane.pgm,
// PREFIX_pole.pgm and intrinsics.txt next to the prefix; explicit flags win.
struct FrameFiles {
  std::string prefix;
  std::string cloud, lane, pole, intrinsics;
};

struct FrameFlags {
  std::vector<std::string> prefixes;
  std::string cloud, lane, pole, intrinsics;

  void add_to(CLI::App* app) {
    app->add_option("--frame", prefixes, "Frame prefix as written by `synth` (repeatable)");
    app->add_option("--cloud", cloud, "Point cloud (.bin float32 x y z i, or .txt)");
    app->add_option("--lane-mask", lane, "Lane mask PGM");
    app->add_option("--pole-mask", pole, "Pole mask PGM");
    app->add_option("--intrinsics", intrinsics, "Camera intrinsics file");
  }

  std::vector<FrameFiles> resolve() const {
    std::vector<FrameFiles> out;
    auto fill = [&](FrameFiles f) {
      if (!cloud.empty()) f.cloud = cloud;
      if (!lane.empty()) f.lane = lane;
      if (!pole.empty()) f.pole = pole;
      if (!intrinsics.empty()) f.intrinsics = intrinsics;
      for (const std::string* s : {&f.cloud, &f.lane, &f.pole, &f.intrinsics}) {
        if (s->empty()) {
          throw Error(ErrorCode::kInvalidArgument,
                      "give --frame or all of --cloud, --lane-mask, --pole-mask, --intrinsics");
        }
      }
      out.push_back(std::move(f));
    };
    if (prefixes.empty()) {
      fill({});
    }
    for (const auto& p : prefixes) {
      const fs::path prefix(p);
      FrameFiles f;
      f.prefix = p;
      f.cloud = p + ".bin";
      f.lane = p + "_lane.pgm";
      f.pole = p + "_pole.pgm";
      f.intrinsics = (prefix.parent_path() / "intrinsics.txt").string();
      fill(f);
    }
    return out;
  }
};

struct LoadedFrame {
  PointCloud cloud;
  Intrinsics intrinsics;
  SemanticMask lane, pole;
};

LoadedFrame load_frame(const FrameFiles& f) {
  for (const std::string* s : {&f.cloud, &f.lane, &f.pole, &f.intrinsics}) {
    if (!fs::exists(*s)) throw Error(ErrorCode::kIo, "missing file " + *s);
  }
  LoadedFrame out;
  out.intrinsics = read_intrinsics(f.intrinsics);
  out.cloud = read_point_cloud(f.cloud);
  out.lane = load_mask(f.lane, MaskClass::kLane, out.intrinsics);
  out.pole = load_mask(f.pole, MaskClass::kPole, out.intrinsics);
  return out;
}

void print_timings(const std::string& label, const StageTimings& t) {
  std::fprintf(stderr, "%s: extraction %.3f s, coarse %.3f s, refine %.3f s, total %.3f s\n",
               label.c_str(), t.extraction_s, t.coarse_s, t.refine_s, t.total_s);
}

// --- calibrate / coarse / refine -------------------------------------------

struct CalibrateOptions {
  FrameFlags frame;
  std::string out;
  std::string report;
  std::string init;
  bool timings = false;
};

struct FrameOutcome {
  int code = kOk;
  std::string message;
};

FrameOutcome run_one(const FrameFiles& files, const CalibrateOptions& o, const PipelineConfig& cfg,
                     PipelineMode mode, bool refine_only, bool batch) {
  const std::string label = files.prefix.empty() ? files.cloud : files.prefix;
  try {
    const LoadedFrame frame = [&] {
      try {
        return load_frame(files);
      } catch (const PipelineError&) {
        throw;
      } catch (const Error& e) {
        throw PipelineError(Stage::kParse, e);
      }
    }();
    std::optional<Extrinsic> init;
    if (refine_only) {
      try {
        init = read_extrinsic(o.init);
      } catch (const Error& e) {
        throw PipelineError(Stage::kParse, e);
      }
    }
    const CalibrationResult result =
        refine_only ? refine_from(frame.cloud, frame.lane, frame.pole, frame.intrinsics, *init, cfg)
                    : calibrate(frame.cloud, frame.lane, frame.pole, frame.intrinsics, cfg, mode);

    std::string out = o.out, report = o.report;
    if (batch || (out.empty() && !files.prefix.empty())) {
      out = files.prefix + "_calib.txt";
      report = files.prefix + "_report.txt";
    }
    try {
      if (out.empty()) {
        std::cout << format_extrinsic(result.extrinsic);
      } else {
        write_extrinsic(out, result.extrinsic);
      }
      const std::string text = format_report(result.report, o.timings);
      if (report.empty()) {
        std::cerr << text;
      } else {
        write_text_file(report, text);
      }
    } catch (const Error& e) {
      throw PipelineError(Stage::kParse, e);
    }
    print_timings(label, result.report.timings);
    return {};
  } catch (const PipelineError& e) {
    return {exit_code(e.stage()),
            label + ": " + e.what() + " (" + std::string(to_string(e.code())) + ")"};
  }
}

int cmd_calibrate(const GlobalOptions& g, const CalibrateOptions& o, PipelineMode mode,
                  bool refine_only) {
  PipelineConfig cfg;
  std::vector<FrameFiles> frames;
  try {
    cfg = load_pipeline_config(g);
    frames = o.frame.resolve();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParseExit;
  }
  const bool batch = frames.size() > 1;
  if (batch && (!o.out.empty() || !o.report.empty())) {
    std::cerr << "error: --out and --report apply to a single frame; batch outputs go next to each prefix\n";
    return kParseExit;
  }

  std::vector<FrameOutcome> outcomes(frames.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < frames.size(); i = next++) {
      outcomes[i] = run_one(frames[i], o, cfg, mode, refine_only, batch);
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(g.jobs, static_cast<unsigned>(frames.size())));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int code = kOk;
  for (const auto& r : outcomes) {
    if (r.code == kOk) continue;
    std::cerr << "error: " << r.message << "\n";
    code = std::max(code, r.code);
  }
  return code;
}

// --- evaluate ----------------------------------------------------------------

int cmd_evaluate(const std::string& estimate, const std::string& reference) {
  try {
    const Extrinsic est = read_extrinsic(estimate);
    const Extrinsic ref = read_extrinsic(reference);
    const CalibrationError e = compute_error(est, ref);
    std::fprintf(stderr, "dt     = %.6f m\n", e.dt);
    std::fprintf(stderr, "dtheta = %.6f deg\n", rad2deg(e.dtheta));
    std::fprintf(stderr, "dtx %.6f  dty %.6f  dtz %.6f m\n", e.dtx, e.dty, e.dtz);
    std::fprintf(stderr, "droll %.6f  dpitch %.6f  dyaw %.6f deg\n", rad2deg(e.droll),
                 rad2deg(e.dpitch), rad2deg(e.dyaw));
    std::cout << csv_header() << "\n" << csv_row(fs::path(estimate).stem().string(), e) << "\n";
    return kOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParseExit;
  }
}

// --- project -----------------------------------------------------------------

struct ProjectOptions {
  std::string cloud, intrinsics, extrinsic, image, out, lane_mask, frame;
  bool stats = false;
};

int cmd_project(const GlobalOptions& g, ProjectOptions o) {
  try {
    if (!o.frame.empty()) {
      if (o.cloud.empty()) o.cloud = o.frame + ".bin";
      if (o.intrinsics.empty()) o.intrinsics = (fs::path(o.frame).parent_path() / "intrinsics.txt").string();
      if (o.lane_mask.empty()) o.lane_mask = o.frame + "_lane.pgm";
    }
    if (o.cloud.empty() || o.intrinsics.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "give --frame or --cloud and --intrinsics");
    }
    const PipelineConfig cfg = load_pipeline_config(g);
    const Intrinsics k = read_intrinsics(o.intrinsics);
    const PointCloud cloud = read_point_cloud(o.cloud);
    const Extrinsic ext = read_extrinsic(o.extrinsic);

    Image8 canvas = o.image.empty() ? Image8(k.width, k.height, 3) : read_pnm(o.image);
    if (canvas.width != k.width || canvas.height != k.height) {
      throw Error(ErrorCode::kDimensionMismatch, "image size differs from the camera");
    }
    if (canvas.channels == 1) {
      Image8 rgb(canvas.width, canvas.height, 3);
      for (std::size_t i = 0; i < canvas.data.size(); ++i) {
        for (int c = 0; c < 3; ++c) rgb.data[i * 3 + c] = canvas.data[i];
      }
      canvas = std::move(rgb);
    }

    enum class Kind : std::uint8_t { kOther, kLane, kPole };
    std::vector<Kind> kind(cloud.size(), Kind::kOther);
    try {
      const FeatureSetCloud f = extract_cloud_features(cloud, cfg.cloud, cfg.seed);
      for (std::size_t i : f.lane_indices) kind[i] = Kind::kLane;
      for (std::size_t i : f.pole_indices) kind[i] = Kind::kPole;
    } catch (const Error& e) {
      std::cerr << "warning: no lane/pole segmentation (" << e.what()
                << "); drawing all points by intensity\n";
    }

    std::optional<SemanticMask> lane_mask;
    std::vector<int> lane_distance;
    if (o.stats) {
      if (o.lane_mask.empty()) throw Error(ErrorCode::kInvalidArgument, "--stats needs --lane-mask");
      lane_mask = load_mask(o.lane_mask, MaskClass::kLane, k);
      lane_distance = l1_distance_field(*lane_mask, true);
    }

    const Mat3 R = ext.rotation();
    std::size_t lane_total = 0, lane_inside = 0, drawn = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const auto px = project(k, R * cloud.points[i].position + ext.t);
      if (kind[i] == Kind::kLane) ++lane_total;
      if (!px) continue;
      const double fu = std::floor(px->x() + 0.5), fv = std::floor(px->y() + 0.5);
      if (!(fu >= 0.0 && fu < k.width && fv >= 0.0 && fv < k.height)) continue;
      const int u = static_cast<int>(fu), v = static_cast<int>(fv);
      std::uint8_t* p = canvas.pixel(u, v);
      switch (kind[i]) {
        case Kind::kLane: p[0] = 0, p[1] = 255, p[2] = 0; break;
        case Kind::kPole: p[0] = 255, p[1] = 0, p[2] = 0; break;
        case Kind::kOther: {
          const double s = std::clamp(cloud.points[i].intensity, 0.0, 1.0);
          const auto gray = static_cast<std::uint8_t>(std::lround(s * 255.0));
          p[0] = p[1] = p[2] = gray;
          break;
        }
      }
      ++drawn;
      if (o.stats && kind[i] == Kind::kLane &&
          lane_distance[static_cast<std::size_t>(v) * k.width + u] <= 2) {
        ++lane_inside;
      }
    }
    write_pnm(o.out, canvas);
    if (o.stats) {
      const double ratio = lane_total == 0 ? 0.0 : static_cast<double>(lane_inside) / lane_total;
      std::cout << "points = " << cloud.size() << "\n";
      std::cout << "drawn = " << drawn << "\n";
      std::cout << "lane_points = " << lane_total << "\n";
      std::cout << "lane_points_in_mask = " << lane_inside << "\n";
      std::cout << "lane_in_mask_ratio = " << format_double(ratio) << "\n";
    }
    return kOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParseExit;
  }
}

// --- synth -------------------------------------------------------------------

struct SynthOptions {
  std::string spec;
  std::optional<std::uint64_t> canonical;
  std::string out_dir;
  std::string name = "frame";
  bool print_spec = false;
};

int cmd_synth(const GlobalOptions& g, const SynthOptions& o) {
  try {
    SceneSpec spec;
    if (!o.spec.empty()) {
      spec = load_scene_spec(o.spec);
      if (g.seed) spec.seed = *g.seed;
    } else {
      spec = canonical_scene(o.canonical.value_or(g.seed.value_or(1)));
    }
    spec.validate();
    if (o.print_spec) std::cout << format_scene_spec(spec);
    fs::create_directories(o.out_dir);
    const SyntheticFrame frame = generate(spec);
    for (const auto& p : write_bundle(o.out_dir, o.name, frame)) std::cerr << "wrote " << p.string() << "\n";
    return kOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParseExit;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParseExit;
  }
}

// --- sweep -------------------------------------------------------------------

struct SweepCliOptions {
  std::vector<std::string> frames;
  std::vector<std::string> references;
  std::size_t trials = 10;
  double max_t = 1.0;
  double max_theta_deg = 6.0;
  std::string out;
};

int cmd_sweep(const GlobalOptions& g, const SweepCliOptions& o) {
  PipelineConfig cfg;
  std::vector<std::unique_ptr<FrameFeatures>> features;
  std::vector<SweepFrame> frames;
  try {
    cfg = load_pipeline_config(g);
    if (o.frames.empty()) throw Error(ErrorCode::kInvalidArgument, "sweep needs at least one --frame");
    if (!o.references.empty() && o.references.size() != o.frames.size()) {
      throw Error(ErrorCode::kInvalidArgument, "give one --reference per --frame or none");
    }
    for (std::size_t i = 0; i < o.frames.size(); ++i) {
      FrameFlags flags;
      flags.prefixes = {o.frames[i]};
      const FrameFiles files = flags.resolve().front();
      const LoadedFrame loaded = load_frame(files);
      const std::string ref_path =
          o.references.empty() ? o.frames[i] + "_truth.txt" : o.references[i];
      const Extrinsic reference = read_extrinsic(ref_path);
      try {
        features.push_back(std::make_unique<FrameFeatures>(extract_frame_features(
            loaded.cloud, loaded.lane, loaded.pole, loaded.intrinsics, cfg)));
      } catch (const PipelineError& e) {
        std::cerr << "error: " << o.frames[i] << ": " << e.what() << "\n";
        return kExtractionExit;
      }
      frames.push_back({fs::path(o.frames[i]).filename().string(), &features.back()->evaluator, reference});
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParseExit;
  }

  SweepOptions options;
  options.trials = o.trials;
  options.max_t = o.max_t;
  options.max_theta = deg2rad(o.max_theta_deg);
  options.seed = cfg.seed;
  options.jobs = g.jobs;
  options.refine = cfg.refine;
  const std::vector<SweepTrial> trials = robustness_sweep(frames, options);

  std::ostringstream csv;
  const std::string header = csv_header();
  csv << "id,initial_dt_m,initial_dtheta_deg" << header.substr(header.find(',')) << "\n";
  std::vector<CalibrationError> refined;
  CalibrationError initial_sum;
  std::size_t failures = 0;
  for (const SweepTrial& t : trials) {
    const std::string id = frames[t.frame].id + ":" + std::to_string(t.trial);
    if (!t.refined) {
      ++failures;
      std::cerr << "trial " << id << " failed: " << t.failure << "\n";
      continue;
    }
    const std::string row = csv_row(id, t.refined_error);
    csv << id << "," << format_double(t.initial_error.dt) << ","
        << format_double(rad2deg(t.initial_error.dtheta)) << row.substr(row.find(',')) << "\n";
    refined.push_back(t.refined_error);
    initial_sum.dt += t.initial_error.dt;
    initial_sum.dtheta += t.initial_error.dtheta;
  }
  if (!refined.empty()) {
    const double n = static_cast<double>(refined.size());
    const std::string row = csv_row("MAE", aggregate(refined));
    csv << "MAE," << format_double(initial_sum.dt / n) << ","
        << format_double(rad2deg(initial_sum.dtheta / n)) << row.substr(row.find(',')) << "\n";
  }
  try {
    if (o.out.empty()) {
      std::cout << csv.str();
    } else {
      write_text_file(o.out, csv.str());
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParseExit;
  }
  return failures == 0 ? kOk : kRefineExit;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LiDAR-camera extrinsic calibration from lane and pole line features"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  std::uint64_t seed = 0;
  app.add_option("--config", global.config, "Pipeline config (key = value)")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--jobs", global.jobs, "Worker threads for batch and sweep loops")
      ->check(CLI::PositiveNumber);

  CalibrateOptions cal, coarse, ref;
  auto add_calibrate_flags = [](CLI::App* sub, CalibrateOptions& o) {
    o.frame.add_to(sub);
    sub->add_option("--out", o.out, "Extrinsic output file (stdout if omitted)");
    sub->add_option("--report", o.report, "Report output file (stderr if omitted)");
    sub->add_flag("--timings", o.timings, "Append stage timings to the report");
  };
  auto* calibrate_cmd = app.add_subcommand("calibrate", "Coarse calibration followed by refinement");
  add_calibrate_flags(calibrate_cmd, cal);
  auto* coarse_cmd = app.add_subcommand("coarse", "Coarse calibration only");
  add_calibrate_flags(coarse_cmd, coarse);
  auto* refine_cmd = app.add_subcommand("refine", "Refinement from a given extrinsic");
  add_calibrate_flags(refine_cmd, ref);
  refine_cmd->add_option("--init", ref.init, "Initial extrinsic")->required();

  std::string estimate, reference;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Compare an extrinsic against a reference");
  evaluate_cmd->add_option("estimate", estimate, "Estimated extrinsic")->required();
  evaluate_cmd->add_option("reference", reference, "Reference extrinsic")->required();

  ProjectOptions proj;
  auto* project_cmd = app.add_subcommand("project", "Draw the projected cloud over an image");
  project_cmd->add_option("--frame", proj.frame, "Frame prefix as written by `synth`");
  project_cmd->add_option("--cloud", proj.cloud, "Point cloud");
  project_cmd->add_option("--intrinsics", proj.intrinsics, "Camera intrinsics file");
  project_cmd->add_option("--extrinsic", proj.extrinsic, "Extrinsic to project with")->required();
  project_cmd->add_option("--image", proj.image, "Background PGM/PPM (black if omitted)");
  project_cmd->add_option("--out", proj.out, "Output PPM")->required();
  project_cmd->add_option("--lane-mask", proj.lane_mask, "Lane mask for --stats");
  project_cmd->add_flag("--stats", proj.stats, "Count lane points inside the lane mask dilated by 2 px");

  SynthOptions syn;
  std::uint64_t canonical = 0;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic frame bundle");
  auto* spec_opt = synth_cmd->add_option("--spec", syn.spec, "Scene spec (key = value)");
  auto* canonical_opt =
      synth_cmd->add_option("--canonical", canonical, "Canonical scene with this seed");
  spec_opt->excludes(canonical_opt);
  synth_cmd->add_option("--out", syn.out_dir, "Output directory")->required();
  synth_cmd->add_option("--name", syn.name, "File name prefix");
  synth_cmd->add_flag("--print-spec", syn.print_spec, "Print the scene spec to stdout");

  SweepCliOptions sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Perturb-and-refine robustness sweep");
  sweep_cmd->add_option("--frame", sw.frames, "Frame prefix (repeatable)")->required();
  sweep_cmd->add_option("--reference", sw.references,
                        "Reference extrinsic per frame (default PREFIX_truth.txt)");
  sweep_cmd->add_option("--trials", sw.trials, "Trials per frame");
  sweep_cmd->add_option("--max-t", sw.max_t, "Translation bound per axis, m");
  sweep_cmd->add_option("--max-theta", sw.max_theta_deg, "Euler angle bound per axis, deg");
  sweep_cmd->add_option("--out", sw.out, "CSV output (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kParseExit;
  }
  if (*seed_opt) global.seed = seed;
  if (*canonical_opt) syn.canonical = canonical;

  if (*calibrate_cmd) return cmd_calibrate(global, cal, PipelineMode::kFull, false);
  if (*coarse_cmd) return cmd_calibrate(global, coarse, PipelineMode::kCoarseOnly, false);
  if (*refine_cmd) return cmd_calibrate(global, ref, PipelineMode::kFull, true);
  if (*evaluate_cmd) return cmd_evaluate(estimate, reference);
  if (*project_cmd) return cmd_project(global, proj);
  if (*synth_cmd) return cmd_synth(global, syn);
  if (*sweep_cmd) return cmd_sweep(global, sw);
  return kParseExit;
}
