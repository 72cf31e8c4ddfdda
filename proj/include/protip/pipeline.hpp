#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "protip/eval.hpp"
#include "protip/refine.hpp"
#include "protip/segment.hpp"
#include "protip/simulate.hpp"
#include "protip/solve.hpp"
#include "protip/track.hpp"

namespace protip {

enum class SegMode { Reference, TrueLabels, External };

struct PipelineConfig {
  SegMode seg_mode = SegMode::Reference;
  std::string external_mask_dir;  // SegMode::External: contains a/ and b/
  bool run_refine = true;
  RansacConfig ransac;
  RefineConfig refine;
  BaseLineConfig base_line;
  std::uint64_t seed = 1;
  int jobs = 1;
};

// Per-sweep feature extraction: segment every frame, fit the base line,
// detect cone components, track them across frames, extract tips.
struct SweepFeatures {
  std::vector<Tip> tips;
  std::vector<ConeTrack> tracks;
  int frames_with_baseline = 0;
};

SweepFeatures extract_sweep_features(const Sweep& sweep, SegMode mode,
                                     const std::string& external_dir,
                                     const PipelineConfig& cfg);

struct EvalBundle {
  ErrorReport sweep_a;
  ErrorReport sweep_b;
  ErrorReport combined;  // entries of both sweeps pooled
};

EvalBundle evaluate_tips(const Sweep& sweep_a, const std::vector<Tip>& tips_a,
                         const Sweep& sweep_b, const std::vector<Tip>& tips_b,
                         const RigidTransform& c, const PhantomSpec& spec);

struct PipelineOutput {
  SweepFeatures features_a;
  SweepFeatures features_b;
  std::vector<TipMatch> matches;
  CalibrationResult ransac;
  RigidTransform initial_calibration;
  RigidTransform calibration;  // refined unless disabled or no overlap
  bool refine_ran = false;
  bool refine_no_overlap = false;
  double objective_initial = 0.0;
  double objective_final = 0.0;
};

// Full calibration pipeline over two in-memory sweeps.
PipelineOutput run_calibrate(const Sweep& sweep_a, const Sweep& sweep_b,
                             const PipelineConfig& cfg);

std::vector<MatchObservation> to_observations(
    const std::vector<TipMatch>& matches, const Sweep& sweep_a,
    const Sweep& sweep_b);

}  // namespace protip
