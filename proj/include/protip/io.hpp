#pragma once

#include <optional>
#include <string>

#include "protip/geom.hpp"
#include "protip/image.hpp"
#include "protip/simulate.hpp"

namespace protip {

// Binary 8-bit PGM (P5).
void save_pgm(const std::string& path, const ImageU8& img);
ImageU8 load_pgm(const std::string& path);

// Sweep directory layout:
//   meta.txt          key=value: n_frames, width_px, height_px, spacing,
//                     geometry (+ apex_offset, aperture_deg for convex)
//   tracking.txt      one 4x4 block per frame, row-major
//   frame_%05d.pgm    binary 8-bit intensity
//   labels_%05d.pgm   optional true labels
//   groundtruth.txt   optional: C_gt plus analytic tip coordinates
void save_sweep(const std::string& dir, const Sweep& sweep,
                const std::optional<SweepGroundTruth>& gt = std::nullopt);
Sweep load_sweep(const std::string& dir);

struct GroundTruthFile {
  RigidTransform calibration;
  std::vector<Vec3> tips;
};
std::optional<GroundTruthFile> load_ground_truth(const std::string& dir);

}  // namespace protip
