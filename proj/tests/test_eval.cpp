#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "protip/errors.hpp"
#include "protip/eval.hpp"
#include "test_support.hpp"

using namespace protip;

namespace {

// Tips placed exactly at the analytic cone tips: tracking is a pure
// translation moving the image point onto the tip (calibration = identity).
std::vector<TrackedTip> exact_tips(const PhantomSpec& spec, double scale = 1.0) {
  std::vector<TrackedTip> tips;
  for (std::size_t i = 0; i < spec.cones.size(); ++i) {
    Tip tip;
    tip.sweep_id = "a";
    tip.frame_index = static_cast<int>(i);
    tip.image_point = {30.0 + i, 40.0};
    tip.smoothed_height_mm = spec.cones[i].height;
    Vec3 target = scale * spec.tip(i);
    Vec3 p(tip.image_point.x, tip.image_point.y, 0.0);
    tips.push_back({tip, RigidTransform::translation(target - p)});
  }
  return tips;
}

}  // namespace

TEST_SUITE_BEGIN("eval");

TEST_CASE("exact tips under the true calibration give zero errors") {
  PhantomSpec spec = default_phantom();
  ErrorReport report =
      fiducial_pair_errors(exact_tips(spec), RigidTransform(), spec);
  CHECK(report.n_tips_found == 9);
  REQUIRE(report.pair_errors_mm.size() == 36);
  for (double e : report.pair_errors_mm) CHECK(e < 1e-9);
  CHECK(report.median_mm < 1e-9);
}

TEST_CASE("a global translation of the calibration changes nothing") {
  PhantomSpec spec = default_phantom();
  RigidTransform shifted = RigidTransform::translation(5, 0, 0);
  // Tracking transforms here are translations, so moving C by 5mm shifts
  // every mapped tip uniformly; pair distances are translation-invariant.
  ErrorReport report = fiducial_pair_errors(exact_tips(spec), shifted, spec);
  for (double e : report.pair_errors_mm) CHECK(e < 1e-9);
}

TEST_CASE("1% isotropic scale error shows up as 1% of pair distance") {
  PhantomSpec spec = default_phantom();
  ErrorReport report =
      fiducial_pair_errors(exact_tips(spec, 1.01), RigidTransform(), spec);
  // Analytic oracle: scaling the world by 1.01 scales every distance, so
  // error_ij = 0.01 * d_ij and median(error) = 0.01 * median(d).
  std::vector<double> dist = intertip_distances(spec);
  std::sort(dist.begin(), dist.end());
  double median_dist = 0.5 * (dist[17] + dist[18]);
  CHECK(report.median_mm ==
        doctest::Approx(0.01 * median_dist).epsilon(0.01));
}

TEST_CASE("fewer than two identified tips is an error") {
  PhantomSpec spec = default_phantom();
  std::vector<TrackedTip> one = {exact_tips(spec)[0]};
  CHECK_THROWS_AS(fiducial_pair_errors(one, RigidTransform(), spec),
                  InsufficientFiducials);

  // Tips whose heights sit between cone heights are dropped as ambiguous.
  std::vector<TrackedTip> ambiguous = exact_tips(spec);
  for (TrackedTip& t : ambiguous) t.tip.smoothed_height_mm += 2.5;
  CHECK_THROWS_AS(fiducial_pair_errors(ambiguous, RigidTransform(), spec),
                  InsufficientFiducials);
}

TEST_CASE("report statistics are recomputable from the entries") {
  PhantomSpec spec = default_phantom();
  ErrorReport report =
      fiducial_pair_errors(exact_tips(spec, 1.02), RigidTransform(), spec);
  std::vector<double> sorted = report.pair_errors_mm;
  std::sort(sorted.begin(), sorted.end());
  double median = sorted.size() % 2 == 1
                      ? sorted[sorted.size() / 2]
                      : 0.5 * (sorted[sorted.size() / 2 - 1] +
                               sorted[sorted.size() / 2]);
  double mean = 0.0;
  for (double e : sorted) mean += e;
  mean /= sorted.size();
  CHECK(report.median_mm == doctest::Approx(median));
  CHECK(report.mean_mm == doctest::Approx(mean));
  CHECK(report.max_mm == doctest::Approx(sorted.back()));
}

TEST_CASE("pair errors are invariant under a world-frame rigid motion") {
  PhantomSpec spec = default_phantom();
  RngStream rng(17);
  RigidTransform g = protip::test::random_rigid(rng);
  std::vector<TrackedTip> tips = exact_tips(spec, 1.005);
  std::vector<TrackedTip> moved = tips;
  for (TrackedTip& t : moved) t.tracking = g * t.tracking;
  RigidTransform c = protip::test::random_rigid(rng, 20.0);
  ErrorReport a = fiducial_pair_errors(tips, c, spec);
  ErrorReport b = fiducial_pair_errors(moved, c, spec);
  REQUIRE(a.pair_errors_mm.size() == b.pair_errors_mm.size());
  for (std::size_t i = 0; i < a.pair_errors_mm.size(); ++i)
    CHECK(std::abs(a.pair_errors_mm[i] - b.pair_errors_mm[i]) < 1e-9);
}

TEST_CASE("compare_to_gt inherits the pose delta examples") {
  RigidTransform i;
  CHECK(compare_to_gt(i, i).translation_mm == doctest::Approx(0.0));
  CHECK(compare_to_gt(i, RigidTransform::translation(3, 4, 0)).translation_mm ==
        doctest::Approx(5.0));
  CHECK(compare_to_gt(i, RigidTransform::rotation_about(
                             Vec3(0, 0, 1),
                             10 * 3.14159265358979323846 / 180.0))
            .rotation_deg == doctest::Approx(10.0));
}

TEST_SUITE_END();
