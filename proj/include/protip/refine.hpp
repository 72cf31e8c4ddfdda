#pragma once

#include <vector>

#include "protip/geom.hpp"
#include "protip/image.hpp"
#include "protip/simulate.hpp"

namespace protip {

struct RefineConfig {
  std::vector<double> translation_steps_mm = {2.0, 1.0, 0.5, 0.25, 0.1};
  std::vector<double> rotation_steps_deg = {2.0, 1.0, 0.5, 0.25, 0.1};
  double slab_halfwidth_mm = 1.5;
  int frame_stride = 2;
  double min_overlap_fraction = 0.1;
  int jobs = 1;
};

// In-plane reconstruction of one frame's view from the other sweep: each
// pixel is the slab-weighted mean of bilinear samples from every frame of B
// passing within slab_halfwidth of it.
struct ReconstructedSlice {
  ImageF image;
  Image<std::uint8_t> validity;  // covered by >= 1 source frame
};

ReconstructedSlice reconstruct_slice(const Sweep& sweep_b,
                                     const Frame& frame_a,
                                     const ImagingGeometry& geom_a,
                                     const RigidTransform& c,
                                     double slab_halfwidth_mm = 1.5);

// Pearson correlation over the valid pixels; 0 with degenerate=true when
// fewer than two valid pixels or either side has no variance.
double ncc(const ImageF& a, const ImageF& b,
           const Image<std::uint8_t>& validity, bool* degenerate = nullptr);

struct RefineResult {
  RigidTransform calibration;
  bool no_overlap = false;       // C0 never produced a usable frame pair
  double initial_objective = 0.0;
  double final_objective = 0.0;
  int evaluations = 0;
};

// Derivative-free coordinate hill climb over the six rigid parameters
// (translations then rotations about the image axes, both applied as
// right-multiplied perturbations about the image center), with a shrinking
// step schedule. The objective is the mean NCC between every
// frame_stride-th frame of A and its reconstruction from B; frames whose
// reconstruction covers less than min_overlap_fraction of the image are
// ignored. Monotone: the returned objective never drops below the start.
RefineResult refine_calibration(const Sweep& sweep_a, const Sweep& sweep_b,
                                const RigidTransform& c0,
                                const RefineConfig& cfg);

}  // namespace protip
