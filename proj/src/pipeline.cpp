#include "protip/pipeline.hpp"

#include <algorithm>

#include "protip/errors.hpp"
#include "protip/parallel.hpp"
#include "protip/rng.hpp"

namespace protip {

SweepFeatures extract_sweep_features(const Sweep& sweep, SegMode mode,
                                     const std::string& external_dir,
                                     const PipelineConfig& cfg) {
  const std::size_t n = sweep.frames.size();

  std::vector<LabelMask> masks(n);
  if (mode == SegMode::External) {
    masks = load_external_masks(external_dir, sweep);
  } else {
    SegmentationMode seg = mode == SegMode::TrueLabels
                               ? SegmentationMode::TrueLabels
                               : SegmentationMode::Reference;
    parallel_for(n, cfg.jobs, [&](std::size_t i) {
      masks[i] = segment_frame(sweep.frames[i], sweep.geom.spacing, seg);
    });
  }

  // Base line and detections are an independent per-frame map; the base-line
  // RANSAC uses a per-frame substream of the master seed.
  std::vector<std::vector<Detection>> detections(n);
  std::vector<std::uint8_t> has_line(n, 0);
  parallel_for(n, cfg.jobs, [&](std::size_t i) {
    BaseLineConfig line_cfg = cfg.base_line;
    line_cfg.seed =
        RngStream::substream(cfg.seed, sweep.id + "/baseline", i).next_u64();
    std::optional<BaseLine> line = fit_base_line(masks[i], line_cfg);
    if (!line) return;  // skipped frames contribute no detections
    has_line[i] = 1;
    detections[i] = detect_cones(masks[i], *line, sweep.geom,
                                 static_cast<int>(i));
  });

  Tracker tracker;
  for (std::size_t i = 0; i < n; ++i)
    tracker.update(detections[i], static_cast<int>(i));

  SweepFeatures features;
  features.tracks = tracker.finish();
  features.tips = extract_tips(features.tracks, sweep.geom, sweep.id);
  for (std::uint8_t h : has_line) features.frames_with_baseline += h;
  return features;
}

std::vector<MatchObservation> to_observations(
    const std::vector<TipMatch>& matches, const Sweep& sweep_a,
    const Sweep& sweep_b) {
  std::vector<MatchObservation> obs;
  obs.reserve(matches.size());
  for (const TipMatch& m : matches) {
    MatchObservation o;
    o.tracking_a = sweep_a.frames[m.tip_a.frame_index].tracking;
    o.point_a = m.tip_a.image_point;
    o.tracking_b = sweep_b.frames[m.tip_b.frame_index].tracking;
    o.point_b = m.tip_b.image_point;
    obs.push_back(o);
  }
  return obs;
}

namespace {

ErrorReport pooled(const ErrorReport& a, const ErrorReport& b) {
  ErrorReport out;
  out.n_tips_found = a.n_tips_found + b.n_tips_found;
  out.pair_errors_mm = a.pair_errors_mm;
  out.pair_errors_mm.insert(out.pair_errors_mm.end(), b.pair_errors_mm.begin(),
                            b.pair_errors_mm.end());
  if (!out.pair_errors_mm.empty()) {
    std::vector<double> sorted = out.pair_errors_mm;
    std::sort(sorted.begin(), sorted.end());
    std::size_t mid = sorted.size() / 2;
    out.median_mm = sorted.size() % 2 == 1
                        ? sorted[mid]
                        : 0.5 * (sorted[mid - 1] + sorted[mid]);
    double sum = 0.0;
    for (double e : sorted) sum += e;
    out.mean_mm = sum / sorted.size();
    out.max_mm = sorted.back();
  }
  return out;
}

std::vector<TrackedTip> with_tracking(const Sweep& sweep,
                                      const std::vector<Tip>& tips) {
  std::vector<TrackedTip> out;
  out.reserve(tips.size());
  for (const Tip& t : tips)
    out.push_back({t, sweep.frames[t.frame_index].tracking});
  return out;
}

}  // namespace

EvalBundle evaluate_tips(const Sweep& sweep_a, const std::vector<Tip>& tips_a,
                         const Sweep& sweep_b, const std::vector<Tip>& tips_b,
                         const RigidTransform& c, const PhantomSpec& spec) {
  EvalBundle bundle;
  bundle.sweep_a = fiducial_pair_errors(with_tracking(sweep_a, tips_a), c, spec);
  bundle.sweep_b = fiducial_pair_errors(with_tracking(sweep_b, tips_b), c, spec);
  bundle.combined = pooled(bundle.sweep_a, bundle.sweep_b);
  return bundle;
}

PipelineOutput run_calibrate(const Sweep& sweep_a, const Sweep& sweep_b,
                             const PipelineConfig& cfg) {
  PipelineOutput out;
  out.features_a = extract_sweep_features(
      sweep_a, cfg.seg_mode, cfg.external_mask_dir + "/a", cfg);
  out.features_b = extract_sweep_features(
      sweep_b, cfg.seg_mode, cfg.external_mask_dir + "/b", cfg);

  out.matches = match_tips(out.features_a.tips, out.features_b.tips);
  std::vector<MatchObservation> obs =
      to_observations(out.matches, sweep_a, sweep_b);

  RansacConfig ransac_cfg = cfg.ransac;
  ransac_cfg.seed = cfg.seed;
  out.ransac = ransac_calibrate(obs, ransac_cfg);
  out.initial_calibration = out.ransac.calibration;
  out.calibration = out.initial_calibration;

  if (cfg.run_refine) {
    RefineConfig refine_cfg = cfg.refine;
    refine_cfg.jobs = cfg.jobs;
    RefineResult refined =
        refine_calibration(sweep_a, sweep_b, out.initial_calibration,
                           refine_cfg);
    out.refine_ran = true;
    out.refine_no_overlap = refined.no_overlap;
    out.objective_initial = refined.initial_objective;
    out.objective_final = refined.final_objective;
    if (!refined.no_overlap) out.calibration = refined.calibration;
  }
  return out;
}

}  // namespace protip
