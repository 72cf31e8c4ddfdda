#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "protip/geom.hpp"
#include "protip/image.hpp"
#include "protip/phantom.hpp"
#include "protip/simulate.hpp"

namespace protip {

// Per-frame 3-class mask, values {0 background, 1 base, 2 cone}.
struct LabelMask {
  ImageU8 labels;
  double spacing = 1.0;  // mm / pixel
};

// Base-plate line in image mm coordinates. "Above" means toward the
// transducer (smaller depth); height(p) is the signed distance on that side.
struct BaseLine {
  ImagePoint point;
  double dir_x = 1.0, dir_y = 0.0;  // unit direction
  int inlier_count = 0;
  int base_pixel_count = 0;

  double height(const ImagePoint& p) const {
    // Normal chosen to point toward smaller depth.
    double nx = dir_y, ny = -dir_x;
    if (ny > 0.0) { nx = -nx; ny = -ny; }
    return (p.x - point.x) * nx + (p.y - point.y) * ny;
  }
};

enum class SegmentationMode { Reference, TrueLabels };

// Reference classical segmenter standing in for the trained model:
// 3x3 median filter, intensity bands (>=160 base, 80..159 cone), then
// per-class opening by reconstruction with a 3x3 core (drops blobs that
// nowhere contain a full 3x3 square, keeps surviving components intact --
// a plain opening would erode the cone apices, which are the keypoints).
// In TrueLabels mode the simulator's labels pass through verbatim.
LabelMask segment_frame(const Frame& frame, double spacing,
                        SegmentationMode mode = SegmentationMode::Reference);

// Masks produced by an external model, one mask_%05d.pgm per frame with
// values in {0,1,2}. Missing files or out-of-range values are FormatErrors.
std::vector<LabelMask> load_external_masks(const std::string& dir,
                                           const Sweep& sweep);

struct BaseLineConfig {
  double inlier_distance_mm = 1.5;
  int iterations = 200;
  int min_base_pixels = 50;
  double min_inlier_ratio = 0.5;
  std::uint64_t seed = 0;  // callers derive a per-frame substream
};

// RANSAC line fit over base-labeled pixel centers, refined by total least
// squares on the winning inliers. Returns nullopt (skip) when the frame has
// too few base pixels or too low an inlier ratio.
std::optional<BaseLine> fit_base_line(const LabelMask& mask,
                                      const BaseLineConfig& cfg);

}  // namespace protip
