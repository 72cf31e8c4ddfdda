#pragma once

#include <optional>
#include <string>
#include <vector>

#include "protip/geom.hpp"
#include "protip/phantom.hpp"
#include "protip/track.hpp"

namespace protip {

// Fiducial-pair error statistics against the phantom's known geometry.
struct ErrorReport {
  std::vector<double> pair_errors_mm;  // up to 36 per sweep
  double median_mm = 0.0;
  double mean_mm = 0.0;
  double max_mm = 0.0;
  int n_tips_found = 0;
  std::optional<PoseDelta> pose_error;
};

// A tip paired with the tracking matrix of its frame.
struct TrackedTip {
  Tip tip;
  RigidTransform tracking;
};

// Tips are assigned cone identities by nearest phantom height (must be
// unique within 2.5 mm, otherwise the tip is dropped); each identified pair
// contributes | measured inter-tip distance - ground-truth distance |.
// Throws InsufficientFiducials if fewer than two tips are identified.
ErrorReport fiducial_pair_errors(const std::vector<TrackedTip>& tips,
                                 const RigidTransform& c,
                                 const PhantomSpec& spec);

// Pose difference against a simulation ground truth.
PoseDelta compare_to_gt(const RigidTransform& c, const RigidTransform& c_gt);

// Key=value summary plus one tab-separated line per pair error.
std::string report_to_text(const ErrorReport& report);

}  // namespace protip
