#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "protip/geom.hpp"
#include "protip/image.hpp"
#include "protip/phantom.hpp"

namespace protip {

enum class ProbeKind { Linear, Convex };

// Imaging geometry of the simulated probe. Pixel (col, row) centers sit at
// ((col + 0.5) * spacing, (row + 0.5) * spacing) mm; x runs along the image
// width, y along depth. For convex probes only the fan between apex_offset
// and apex_offset + depth, within the angular aperture, is valid.
struct ImagingGeometry {
  ProbeKind kind = ProbeKind::Linear;
  double width_mm = 128.0;
  double depth_mm = 128.0;
  double spacing = 1.0;  // mm / pixel
  double apex_offset_mm = 30.0;   // convex only: apex above the image top
  double aperture_deg = 75.0;     // convex only: full fan angle

  int width_px() const { return static_cast<int>(width_mm / spacing + 0.5); }
  int depth_px() const { return static_cast<int>(depth_mm / spacing + 0.5); }

  ImagePoint pixel_center(int col, int row) const {
    return {(col + 0.5) * spacing, (row + 0.5) * spacing};
  }

  bool valid(const ImagePoint& p) const;
  // Validity of every pixel center; all-true for linear probes.
  Image<std::uint8_t> validity_mask() const;
};

// Per-frame intensity levels used by the renderer (Background, Base, Cone).
inline constexpr std::array<double, 3> kLabelIntensity = {20.0, 200.0, 120.0};

struct NoiseConfig {
  double speckle_sigma = 0.0;   // multiplicative, low-resolution field
  double gaussian_sigma = 0.0;  // additive, full resolution
  bool enabled() const { return speckle_sigma > 0.0 || gaussian_sigma > 0.0; }
};

struct Frame {
  ImageU8 intensity;
  ImageU8 true_labels;  // simulation only; empty when unavailable
  bool has_true_labels = false;
  RigidTransform tracking;  // T_i, marker -> world
  int index = 0;
};

struct Sweep {
  std::string id;
  ImagingGeometry geom;
  std::vector<Frame> frames;
};

// Analytic per-frame projection of one cone tip, used as a test oracle.
struct TipProjection {
  bool plane_cuts_cone = false;
  ImagePoint tip_in_plane;   // in-plane coordinates of the analytic tip
  double offplane_mm = 0.0;  // signed out-of-plane distance of the tip
};

struct SweepGroundTruth {
  RigidTransform calibration;   // hidden C_gt
  std::vector<Vec3> tip_world;  // analytic cone tips, phantom order
  std::vector<std::vector<TipProjection>> frame_tips;  // [frame][cone]
};

enum class TrajectoryKind { AxialSweep, SagittalSweep };

// Deterministic smooth probe wobble; scale 0 disables it.
struct WobbleConfig {
  double scale = 1.0;
};

// True tracking poses T_i such that the image planes translate across the
// whole phantom along the chosen principal direction (axial: world x,
// sagittal: world y), looking down onto the base plate. Throws CoverageError
// if the geometry cannot see every cone's tip and base together.
std::vector<RigidTransform> make_trajectory(TrajectoryKind kind, int n_frames,
                                            const PhantomSpec& phantom,
                                            const RigidTransform& c_gt,
                                            const ImagingGeometry& geom,
                                            const WobbleConfig& wobble = {});

// Noise-free label re-slice plus label-driven intensity with optional
// multiplicative speckle (64x32 field, bilinearly upsampled) and additive
// Gaussian noise. Pixels outside the validity mask are Background.
Frame render_frame(const PhantomSpec& phantom, const RigidTransform& tracking,
                   const RigidTransform& c_gt, const ImagingGeometry& geom,
                   const NoiseConfig& noise, std::uint64_t seed,
                   std::string_view sweep_tag, int frame_index);

struct TrackingNoise {
  double sigma_t_mm = 0.0;
  double sigma_r_deg = 0.0;
};

// Renders all frames with the TRUE poses, then stores tracking matrices
// perturbed by zero-mean rigid noise. Deterministic per (inputs, seed);
// frames may render in parallel without changing the result.
std::pair<Sweep, SweepGroundTruth> simulate_sweep(
    const PhantomSpec& phantom, const std::vector<RigidTransform>& trajectory,
    const RigidTransform& c_gt, const ImagingGeometry& geom,
    const NoiseConfig& noise, const TrackingNoise& tracking_noise,
    std::uint64_t seed, const std::string& sweep_id, int jobs = 1);

// Hidden ground-truth calibration derived from the seed: bounded random
// rotation and translation.
RigidTransform make_ground_truth_calibration(std::uint64_t seed);

}  // namespace protip
