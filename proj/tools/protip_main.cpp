#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "protip/errors.hpp"
#include "protip/eval.hpp"
#include "protip/io.hpp"
#include "protip/parallel.hpp"
#include "protip/phantom.hpp"
#include "protip/pipeline.hpp"
#include "protip/simulate.hpp"

namespace fs = std::filesystem;
using namespace protip;

namespace {

constexpr int kExitNoConsensus = 2;
constexpr int kExitInsufficient = 3;
constexpr int kExitFormat = 4;
constexpr int kExitCoverage = 5;

PhantomSpec resolve_phantom(const std::string& arg) {
  if (arg.empty() || arg == "default") return default_phantom();
  return load_phantom(arg);
}

struct SegChoice {
  SegMode mode = SegMode::Reference;
  std::string external_dir;
};

SegChoice parse_seg(const std::string& arg) {
  SegChoice choice;
  if (arg == "reference") choice.mode = SegMode::Reference;
  else if (arg == "true-labels") choice.mode = SegMode::TrueLabels;
  else if (arg.rfind("external:", 0) == 0) {
    choice.mode = SegMode::External;
    choice.external_dir = arg.substr(9);
    if (choice.external_dir.empty())
      throw CLI::ValidationError("--seg", "external mode needs a directory");
  } else {
    throw CLI::ValidationError(
        "--seg", "expected reference | true-labels | external:DIR");
  }
  return choice;
}

int run_phantom(const std::string& out_dir, double spacing, int jobs) {
  PhantomSpec spec = default_phantom();
  fs::create_directories(out_dir);
  save_phantom(out_dir + "/phantom.txt", spec);
  LabelVolume vol = rasterize_labelmap(spec, spacing, jobs);
  save_labelmap(out_dir + "/labelmap.raw", out_dir + "/labelmap.txt", vol);
  std::cout << "phantom: " << spec.cones.size() << " cones, labelmap "
            << vol.nx << "x" << vol.ny << "x" << vol.nz << " @ " << spacing
            << "mm -> " << out_dir << "\n";
  return 0;
}

int run_simulate(const std::string& phantom_arg, const std::string& out_dir,
                 std::uint64_t seed, int frames, double noise_t_mm,
                 double noise_r_deg, double image_noise,
                 const std::string& geometry, double wobble, int jobs) {
  PhantomSpec spec = resolve_phantom(phantom_arg);
  ImagingGeometry geom;
  if (geometry == "convex") geom.kind = ProbeKind::Convex;
  else if (geometry != "linear")
    throw InvalidArgument("simulate", "geometry must be linear or convex");

  NoiseConfig noise;
  noise.speckle_sigma = 0.10 * image_noise;
  noise.gaussian_sigma = 4.0 * image_noise;
  TrackingNoise tracking_noise{noise_t_mm, noise_r_deg};
  WobbleConfig wob{wobble};

  RigidTransform c_gt = make_ground_truth_calibration(seed);

  for (auto [kind, name] : {std::pair{TrajectoryKind::AxialSweep, "axial"},
                            std::pair{TrajectoryKind::SagittalSweep,
                                      "sagittal"}}) {
    auto trajectory = make_trajectory(kind, frames, spec, c_gt, geom, wob);
    auto [sweep, gt] = simulate_sweep(spec, trajectory, c_gt, geom, noise,
                                      tracking_noise, seed,
                                      std::string(name), jobs);
    save_sweep(out_dir + "/" + name, sweep, gt);
    std::cout << "simulate: wrote " << sweep.frames.size() << " frames -> "
              << out_dir << "/" << name << "\n";
  }
  return 0;
}

void write_report(const std::string& path, const PipelineOutput& out,
                  const EvalBundle* initial_eval,
                  const EvalBundle* refined_eval,
                  const std::optional<GroundTruthFile>& gt) {
  std::ofstream rep(path);
  if (!rep) throw FormatError("report", "cannot write " + path);
  char buf[160];
  auto line = [&](const char* fmt, auto... args) {
    std::snprintf(buf, sizeof(buf), fmt, args...);
    rep << buf << '\n';
  };
  line("n_tips_a = %zu", out.features_a.tips.size());
  line("n_tips_b = %zu", out.features_b.tips.size());
  line("n_matches = %zu", out.matches.size());
  line("n_inliers = %zu", out.ransac.inlier_indices.size());
  line("refit_residual = %.9g", out.ransac.refit_residual);
  line("hypothesis_count = %d", out.ransac.hypothesis_count);
  line("refine_ran = %d", out.refine_ran ? 1 : 0);
  line("refine_no_overlap = %d", out.refine_no_overlap ? 1 : 0);
  if (out.refine_ran && !out.refine_no_overlap) {
    line("objective_initial = %.9g", out.objective_initial);
    line("objective_final = %.9g", out.objective_final);
  }
  if (gt) {
    PoseDelta di = compare_to_gt(out.initial_calibration, gt->calibration);
    PoseDelta dr = compare_to_gt(out.calibration, gt->calibration);
    line("pose_error_initial_mm = %.9g", di.translation_mm);
    line("pose_error_initial_deg = %.9g", di.rotation_deg);
    line("pose_error_mm = %.9g", dr.translation_mm);
    line("pose_error_deg = %.9g", dr.rotation_deg);
  }
  if (initial_eval) {
    rep << "[initial_combined]\n" << report_to_text(initial_eval->combined);
  }
  if (refined_eval) {
    rep << "[combined]\n" << report_to_text(refined_eval->combined);
    rep << "[sweep_a]\n" << report_to_text(refined_eval->sweep_a);
    rep << "[sweep_b]\n" << report_to_text(refined_eval->sweep_b);
  }
}

int run_calibrate(const std::string& sweep_a_dir,
                  const std::string& sweep_b_dir, const std::string& seg_arg,
                  const std::string& phantom_arg, bool no_refine,
                  std::uint64_t seed, const std::string& out_dir, int jobs) {
  SegChoice seg = parse_seg(seg_arg);
  PhantomSpec spec = resolve_phantom(phantom_arg);
  Sweep sweep_a = load_sweep(sweep_a_dir);
  Sweep sweep_b = load_sweep(sweep_b_dir);

  PipelineConfig cfg;
  cfg.seg_mode = seg.mode;
  cfg.external_mask_dir = seg.external_dir;
  cfg.run_refine = !no_refine;
  cfg.seed = seed;
  cfg.jobs = jobs;

  PipelineOutput out = protip::run_calibrate(sweep_a, sweep_b, cfg);

  fs::create_directories(out_dir);
  save_transform(out_dir + "/calibration_initial.txt",
                 out.initial_calibration);
  save_transform(out_dir + "/calibration.txt", out.calibration);

  std::optional<GroundTruthFile> gt = load_ground_truth(sweep_a_dir);
  EvalBundle initial_eval =
      evaluate_tips(sweep_a, out.features_a.tips, sweep_b,
                    out.features_b.tips, out.initial_calibration, spec);
  EvalBundle refined_eval =
      evaluate_tips(sweep_a, out.features_a.tips, sweep_b,
                    out.features_b.tips, out.calibration, spec);
  write_report(out_dir + "/report.txt", out, &initial_eval, &refined_eval, gt);

  std::cout << "calibrate: " << out.matches.size() << " matches, "
            << out.ransac.inlier_indices.size() << " inliers, median pair error "
            << refined_eval.combined.median_mm << " mm -> " << out_dir << "\n";
  return 0;
}

int run_evaluate(const std::string& calibration_path,
                 const std::string& sweep_a_dir, const std::string& sweep_b_dir,
                 const std::string& phantom_arg, const std::string& seg_arg,
                 std::uint64_t seed, const std::string& out_path, int jobs) {
  RigidTransform c = load_transform(calibration_path);
  SegChoice seg = parse_seg(seg_arg);
  PhantomSpec spec = resolve_phantom(phantom_arg);
  Sweep sweep_a = load_sweep(sweep_a_dir);
  Sweep sweep_b = load_sweep(sweep_b_dir);

  PipelineConfig cfg;
  cfg.seg_mode = seg.mode;
  cfg.external_mask_dir = seg.external_dir;
  cfg.seed = seed;
  cfg.jobs = jobs;
  SweepFeatures fa = extract_sweep_features(sweep_a, cfg.seg_mode,
                                            cfg.external_mask_dir + "/a", cfg);
  SweepFeatures fb = extract_sweep_features(sweep_b, cfg.seg_mode,
                                            cfg.external_mask_dir + "/b", cfg);
  EvalBundle bundle =
      evaluate_tips(sweep_a, fa.tips, sweep_b, fb.tips, c, spec);

  std::optional<GroundTruthFile> gt = load_ground_truth(sweep_a_dir);
  if (gt) bundle.combined.pose_error = compare_to_gt(c, gt->calibration);

  std::string text = "[combined]\n" + report_to_text(bundle.combined) +
                     "[sweep_a]\n" + report_to_text(bundle.sweep_a) +
                     "[sweep_b]\n" + report_to_text(bundle.sweep_b);
  std::cout << text;
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw FormatError("report", "cannot write " + out_path);
    out << text;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PRO-TIP: automatic ultrasound probe calibration on a "
               "nine-cone phantom"};
  app.require_subcommand(1);

  // phantom
  auto* cmd_phantom = app.add_subcommand(
      "phantom", "Write the default phantom spec and its labelmap");
  std::string phantom_out;
  double phantom_spacing = 1.0;
  cmd_phantom->add_option("--out", phantom_out, "output directory")
      ->required();
  cmd_phantom->add_option("--spacing", phantom_spacing, "labelmap spacing, mm");

  // simulate
  auto* cmd_sim = app.add_subcommand(
      "simulate", "Render two synthetic tracked sweeps (axial + sagittal)");
  std::string sim_phantom = "default", sim_out, sim_geometry = "linear";
  std::uint64_t sim_seed = 0;
  int sim_frames = 200;
  std::string sim_tracking_noise = "0,0";
  double sim_image_noise = 0.0, sim_wobble = 1.0;
  cmd_sim->add_option("--phantom", sim_phantom, "phantom spec file or 'default'");
  cmd_sim->add_option("--out", sim_out, "output directory")->required();
  cmd_sim->add_option("--seed", sim_seed, "master seed")->required();
  cmd_sim->add_option("--frames", sim_frames, "frames per sweep");
  cmd_sim->add_option("--tracking-noise", sim_tracking_noise,
                      "sigma as 'mm,deg'");
  cmd_sim->add_option("--image-noise", sim_image_noise,
                      "speckle/Gaussian noise level (0 = off)");
  cmd_sim->add_option("--geometry", sim_geometry, "linear | convex");
  cmd_sim->add_option("--wobble", sim_wobble, "probe wobble scale (0 = off)");

  // calibrate
  auto* cmd_cal = app.add_subcommand(
      "calibrate", "Estimate the calibration from two sweep directories");
  std::string cal_a, cal_b, cal_seg = "reference", cal_phantom = "default",
              cal_out;
  bool cal_no_refine = false;
  std::uint64_t cal_seed = 1;
  cmd_cal->add_option("--sweep-a", cal_a, "sweep A directory")->required();
  cmd_cal->add_option("--sweep-b", cal_b, "sweep B directory")->required();
  cmd_cal->add_option("--seg", cal_seg,
                      "reference | true-labels | external:DIR");
  cmd_cal->add_option("--phantom", cal_phantom,
                      "phantom spec file or 'default'");
  cmd_cal->add_flag("--no-refine", cal_no_refine,
                    "skip image-based refinement");
  cmd_cal->add_option("--seed", cal_seed, "master seed");
  cmd_cal->add_option("--out", cal_out, "output directory")->required();

  // evaluate
  auto* cmd_eval = app.add_subcommand(
      "evaluate", "Fiducial-pair error report for a given calibration");
  std::string eval_calibration, eval_a, eval_b, eval_phantom = "default",
              eval_seg = "reference", eval_out;
  std::uint64_t eval_seed = 1;
  cmd_eval->add_option("--calibration", eval_calibration, "calibration file")
      ->required();
  cmd_eval->add_option("--sweep-a", eval_a, "sweep A directory")->required();
  cmd_eval->add_option("--sweep-b", eval_b, "sweep B directory")->required();
  cmd_eval->add_option("--phantom", eval_phantom,
                       "phantom spec file or 'default'");
  cmd_eval->add_option("--seg", eval_seg,
                       "reference | true-labels | external:DIR");
  cmd_eval->add_option("--seed", eval_seed, "master seed");
  cmd_eval->add_option("--out", eval_out, "also write the report here");

  int jobs = default_jobs();
  app.add_option("--jobs", jobs, "worker threads (never changes results)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_phantom->parsed())
      return run_phantom(phantom_out, phantom_spacing, jobs);
    if (cmd_sim->parsed()) {
      double nt = 0, nr = 0;
      if (std::sscanf(sim_tracking_noise.c_str(), "%lf,%lf", &nt, &nr) != 2)
        throw InvalidArgument("simulate",
                              "--tracking-noise expects 'mm,deg'");
      return run_simulate(sim_phantom, sim_out, sim_seed, sim_frames, nt, nr,
                          sim_image_noise, sim_geometry, sim_wobble, jobs);
    }
    if (cmd_cal->parsed())
      return run_calibrate(cal_a, cal_b, cal_seg, cal_phantom, cal_no_refine,
                           cal_seed, cal_out, jobs);
    if (cmd_eval->parsed())
      return run_evaluate(eval_calibration, eval_a, eval_b, eval_phantom,
                          eval_seg, eval_seed, eval_out, jobs);
  } catch (const NoConsensus& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoConsensus;
  } catch (const InsufficientMatches& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInsufficient;
  } catch (const InsufficientFiducials& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInsufficient;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const CoverageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCoverage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
