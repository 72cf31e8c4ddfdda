#include "protip/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "protip/errors.hpp"

namespace protip {

ErrorReport fiducial_pair_errors(const std::vector<TrackedTip>& tips,
                                 const RigidTransform& c,
                                 const PhantomSpec& spec) {
  const std::size_t n_cones = spec.cones.size();

  // Identify each tip by nearest phantom cone height.
  struct Identified {
    int cone;
    Vec3 world;
  };
  std::vector<Identified> identified;
  std::vector<bool> cone_taken(n_cones, false);
  for (const TrackedTip& t : tips) {
    int best = -1;
    double best_diff = std::numeric_limits<double>::max();
    double second_diff = std::numeric_limits<double>::max();
    for (std::size_t ci = 0; ci < n_cones; ++ci) {
      double diff = std::abs(t.tip.smoothed_height_mm - spec.cones[ci].height);
      if (diff < best_diff) {
        second_diff = best_diff;
        best_diff = diff;
        best = static_cast<int>(ci);
      } else if (diff < second_diff) {
        second_diff = diff;
      }
    }
    // The identity must be unambiguous within 2.5 mm, one tip per cone.
    if (best < 0 || best_diff >= 2.5 || second_diff < 2.5) continue;
    if (cone_taken[best]) continue;
    cone_taken[best] = true;
    identified.push_back({best, map_to_world(t.tracking, c, t.tip.image_point)});
  }

  if (identified.size() < 2)
    throw InsufficientFiducials(
        "eval", "only " + std::to_string(identified.size()) +
                    " tips identified against the phantom");

  ErrorReport report;
  report.n_tips_found = static_cast<int>(identified.size());
  for (std::size_t i = 0; i < identified.size(); ++i)
    for (std::size_t j = i + 1; j < identified.size(); ++j) {
      if (identified[i].cone == identified[j].cone) continue;
      double measured = (identified[i].world - identified[j].world).norm();
      double truth =
          (spec.tip(identified[i].cone) - spec.tip(identified[j].cone)).norm();
      report.pair_errors_mm.push_back(std::abs(measured - truth));
    }

  if (!report.pair_errors_mm.empty()) {
    std::vector<double> sorted = report.pair_errors_mm;
    std::sort(sorted.begin(), sorted.end());
    std::size_t mid = sorted.size() / 2;
    report.median_mm = sorted.size() % 2 == 1
                           ? sorted[mid]
                           : 0.5 * (sorted[mid - 1] + sorted[mid]);
    double sum = 0.0;
    for (double e : sorted) sum += e;
    report.mean_mm = sum / sorted.size();
    report.max_mm = sorted.back();
  }
  return report;
}

PoseDelta compare_to_gt(const RigidTransform& c, const RigidTransform& c_gt) {
  return pose_delta(c, c_gt);
}

std::string report_to_text(const ErrorReport& report) {
  std::ostringstream out;
  char buf[128];
  auto line = [&](const char* fmt, auto... args) {
    std::snprintf(buf, sizeof(buf), fmt, args...);
    out << buf << '\n';
  };
  line("n_tips_found = %d", report.n_tips_found);
  line("n_pairs = %zu", report.pair_errors_mm.size());
  line("median_mm = %.9g", report.median_mm);
  line("mean_mm = %.9g", report.mean_mm);
  line("max_mm = %.9g", report.max_mm);
  if (report.pose_error) {
    line("pose_translation_mm = %.9g", report.pose_error->translation_mm);
    line("pose_rotation_deg = %.9g", report.pose_error->rotation_deg);
  }
  out << "pair_errors_mm =";
  for (double e : report.pair_errors_mm) {
    std::snprintf(buf, sizeof(buf), "\t%.9g", e);
    out << buf;
  }
  out << '\n';
  return out.str();
}

}  // namespace protip
