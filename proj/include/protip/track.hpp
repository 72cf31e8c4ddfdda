#pragma once

#include <string>
#include <vector>

#include "protip/geom.hpp"
#include "protip/segment.hpp"
#include "protip/simulate.hpp"

namespace protip {

struct PixelRect {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;  // inclusive bounds

  long long intersection_area(const PixelRect& o) const {
    long long w = std::min(x1, o.x1) - std::max(x0, o.x0) + 1;
    long long h = std::min(y1, o.y1) - std::max(y0, o.y0) + 1;
    return (w > 0 && h > 0) ? w * h : 0;
  }
};

// One cone cross-section in one frame.
struct Detection {
  int frame_index = 0;
  PixelRect bbox;
  ImagePoint highest_point;  // farthest above the base line, mm
  double height_mm = 0.0;    // perpendicular distance to the base line
  double area_mm2 = 0.0;
};

enum class TrackState { Active, Terminated };

// Detections attributed to one cone while the probe sweeps over it.
struct ConeTrack {
  std::vector<Detection> detections;
  int last_update = -1;
  TrackState state = TrackState::Active;
};

struct Tip {
  std::string sweep_id;
  int frame_index = 0;
  ImagePoint image_point;
  double smoothed_height_mm = 0.0;
  int source_track = -1;
};

struct TipMatch {
  Tip tip_a;
  Tip tip_b;
};

// 4-connected cone components strictly above the base line with area
// >= 25 mm^2, restricted to geometry-valid pixels. The highest point is the
// pixel center with maximal perpendicular distance to the base line (ties:
// smallest x, then smallest y).
std::vector<Detection> detect_cones(const LabelMask& mask,
                                    const BaseLine& base,
                                    const ImagingGeometry& geom,
                                    int frame_index);

// Frame-sequential track maintenance. Detections are assigned greedily by
// largest bounding-box intersection with each active track's last detection
// (ties: detection left edge, then track age); unmatched detections open new
// tracks; tracks idle for more than 3 frames are terminated first.
class Tracker {
 public:
  void update(std::vector<Detection> detections, int frame_index);
  // Terminates all remaining tracks (end of sweep).
  std::vector<ConeTrack> finish();

  const std::vector<ConeTrack>& tracks() const { return tracks_; }

 private:
  std::vector<ConeTrack> tracks_;
  int last_frame_ = -1;
};

inline constexpr int kMinTrackDetections = 10;
inline constexpr int kHeightSmoothingWindow = 5;
inline constexpr double kMinTipHeightMm = 15.0;
inline constexpr double kMatchHeightThresholdMm = 3.0;

// One tip per surviving track: tracks shorter than 10 detections are
// dropped; heights are smoothed with a centered mean (window 5, truncated at
// the ends); the detection at maximum smoothed height is the tip (ties:
// earliest frame). Tips below 15 mm or outside the imaging geometry are
// dropped.
std::vector<Tip> extract_tips(const std::vector<ConeTrack>& tracks,
                              const ImagingGeometry& geom,
                              const std::string& sweep_id);

// All cross-sweep pairs with |height difference| < 3 mm, in canonical
// (a index, b index) order. Many-to-many on purpose; RANSAC disambiguates.
std::vector<TipMatch> match_tips(const std::vector<Tip>& tips_a,
                                 const std::vector<Tip>& tips_b);

// Tab-separated detection/track dump for debugging.
std::string dump_tracks(const std::vector<ConeTrack>& tracks);

}  // namespace protip
