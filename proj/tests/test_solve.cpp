#include <doctest.h>

#include <cmath>

#include "protip/errors.hpp"
#include "protip/rng.hpp"
#include "protip/solve.hpp"
#include "test_support.hpp"

using namespace protip;
using test::forward_construct_matches;
using test::random_rigid;
using test::random_rotation;

namespace {

double objective(const LinearSystem& sys, const Vec3& u, const Vec3& v,
                 const Vec3& t) {
  Eigen::VectorXd y(9);
  y << u, v, t;
  return (sys.A * y - sys.d).squaredNorm();
}

}  // namespace

TEST_SUITE_BEGIN("solve");

TEST_CASE("build_system: identical poses zero the translation block") {
  RngStream rng(1);
  MatchObservation m;
  m.tracking_a = random_rigid(rng);
  m.tracking_b = m.tracking_a;
  m.point_a = {30.0, 40.0};
  m.point_b = {10.0, 20.0};
  LinearSystem sys = build_system({m});
  CHECK(sys.n == 1);
  CHECK(sys.A.block<3, 3>(0, 6).norm() == doctest::Approx(0.0));
  CHECK(sys.d.norm() == doctest::Approx(0.0));
  Mat3 expected_u =
      (m.point_a.x - m.point_b.x) * m.tracking_a.rotation();
  CHECK((sys.A.block<3, 3>(0, 0) - expected_u).norm() < 1e-12);
}

TEST_CASE("build_system: single block equals the displayed formula") {
  RngStream rng(2);
  for (int k = 0; k < 25; ++k) {
    MatchObservation m;
    m.tracking_a = random_rigid(rng);
    m.tracking_b = random_rigid(rng);
    m.point_a = {rng.uniform(0, 128), rng.uniform(0, 128)};
    m.point_b = {rng.uniform(0, 128), rng.uniform(0, 128)};
    LinearSystem sys = build_system({m});
    // Entry-wise oracle straight from the block expansion.
    const Mat3& pa = m.tracking_a.rotation();
    const Mat3& pb = m.tracking_b.rotation();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        CHECK(sys.A(r, c) ==
              doctest::Approx(m.point_a.x * pa(r, c) - m.point_b.x * pb(r, c)));
        CHECK(sys.A(r, c + 3) ==
              doctest::Approx(m.point_a.y * pa(r, c) - m.point_b.y * pb(r, c)));
        CHECK(sys.A(r, c + 6) == doctest::Approx(pa(r, c) - pb(r, c)));
      }
    for (int r = 0; r < 3; ++r)
      CHECK(sys.d(r) == doctest::Approx(m.tracking_b.translation()(r) -
                                        m.tracking_a.translation()(r)));
  }
}

TEST_CASE("build_system: true calibration has zero residual") {
  RngStream rng(3);
  RigidTransform c = random_rigid(rng, 30.0);
  LinearSystem sys = build_system(forward_construct_matches(rng, c, 7));
  double res = objective(sys, c.rotation().col(0), c.rotation().col(1),
                         c.translation());
  CHECK(res < 1e-9);
}

TEST_CASE("build_system: empty input throws") {
  CHECK_THROWS_AS(build_system({}), InsufficientMatches);
}

TEST_CASE("project_orthonormal keeps an orthonormal pair") {
  Vec3 u, v;
  project_orthonormal(Vec3(1, 0, 0), Vec3(0, 1, 0), u, v);
  CHECK((u - Vec3(1, 0, 0)).norm() < 1e-12);
  CHECK((v - Vec3(0, 1, 0)).norm() < 1e-12);
}

TEST_CASE("project_orthonormal fixes axis-aligned scaling") {
  Vec3 u, v;
  project_orthonormal(Vec3(2, 0, 0), Vec3(0, 0.5, 0), u, v);
  CHECK((u - Vec3(1, 0, 0)).norm() < 1e-12);
  CHECK((v - Vec3(0, 1, 0)).norm() < 1e-12);
}

TEST_CASE("project_orthonormal rejects rank-deficient input") {
  Vec3 u, v;
  CHECK_THROWS_AS(project_orthonormal(Vec3(1, 0, 0), Vec3(2, 0, 0), u, v),
                  DegenerateConfiguration);
}

TEST_CASE("project_orthonormal beats a million random orthonormal pairs") {
  RngStream rng(4);
  Eigen::MatrixXd m(3, 2);
  m.col(0) = Vec3(0.9, 0.2, -0.1);
  m.col(1) = Vec3(0.15, 1.1, 0.3);
  Vec3 u, v;
  project_orthonormal(m.col(0), m.col(1), u, v);
  CHECK(std::abs(u.norm() - 1.0) < 1e-9);
  CHECK(std::abs(v.norm() - 1.0) < 1e-9);
  CHECK(std::abs(u.dot(v)) < 1e-9);
  Eigen::MatrixXd best(3, 2);
  best.col(0) = u;
  best.col(1) = v;
  const double best_dist = (best - m).norm();
  // Monte-Carlo nearness oracle.
  for (int k = 0; k < 1000000; ++k) {
    Mat3 r = random_rotation(rng);
    Eigen::MatrixXd cand(3, 2);
    cand.col(0) = r.col(0);
    cand.col(1) = r.col(1);
    CHECK((cand - m).norm() >= best_dist - 1e-12);
  }
}

TEST_CASE("solve_constrained recovers identity from generic poses") {
  RngStream rng(5);
  RigidTransform identity;
  auto matches = forward_construct_matches(rng, identity, 6);
  RigidTransform c = solve_constrained(matches);
  PoseDelta d = pose_delta(c, identity);
  CHECK(d.translation_mm < 1e-6);
  CHECK(d.rotation_deg < 1e-6 * 180.0 / 3.14159265358979323846);
}

TEST_CASE("solve_constrained recovers a random rigid calibration") {
  RngStream rng(6);
  for (int k = 0; k < 20; ++k) {
    RigidTransform c_gt = random_rigid(rng, 40.0);
    auto matches = forward_construct_matches(rng, c_gt, 8);
    RigidTransform c = solve_constrained(matches);
    PoseDelta d = pose_delta(c, c_gt);
    CHECK(d.translation_mm < 1e-6);
    CHECK(d.rotation_deg * 3.14159265358979323846 / 180.0 < 1e-6);
    CHECK(c.is_rigid(1e-9));
  }
}

TEST_CASE("solve_constrained: single pose pair is degenerate") {
  RngStream rng(7);
  RigidTransform c_gt = random_rigid(rng, 20.0);
  RigidTransform ta = random_rigid(rng);
  RigidTransform tb = random_rigid(rng);
  // All matches share (ta, tb); image points are coplanar by construction.
  // Derive p_b so both sides agree under c_gt: only possible if the world
  // point maps back onto b's image plane, so project it there.
  std::vector<MatchObservation> matches;
  for (int i = 0; i < 8; ++i) {
    MatchObservation m;
    m.tracking_a = ta;
    m.tracking_b = tb;
    m.point_a = {rng.uniform(0, 128), rng.uniform(0, 128)};
    Vec3 q = map_to_world(ta, c_gt, m.point_a);
    Vec3 local = (tb * c_gt).inverse().apply(q);
    m.point_b = {local.x(), local.y()};  // drop the out-of-plane component
    matches.push_back(m);
  }
  CHECK_THROWS_AS(solve_constrained(matches), DegenerateConfiguration);
}

TEST_CASE("solve_constrained needs three matches") {
  RngStream rng(8);
  auto matches = forward_construct_matches(rng, RigidTransform(), 2);
  CHECK_THROWS_AS(solve_constrained(matches), InsufficientMatches);
}

TEST_CASE("translation re-solve never hurts the objective") {
  RngStream rng(9);
  for (int k = 0; k < 10; ++k) {
    RigidTransform c_gt = random_rigid(rng, 30.0);
    auto matches = forward_construct_matches(rng, c_gt, 6);
    // Perturb the observations so the unconstrained optimum is not rigid.
    for (MatchObservation& m : matches) {
      m.point_a.x += rng.normal(0, 0.8);
      m.point_b.y += rng.normal(0, 0.8);
    }
    LinearSystem sys = build_system(matches);
    Eigen::VectorXd scale(9);
    for (int j = 0; j < 9; ++j) scale(j) = sys.A.col(j).norm();
    Eigen::MatrixXd scaled = sys.A * scale.cwiseInverse().asDiagonal();
    Eigen::VectorXd y = scale.cwiseInverse().asDiagonal() *
                        scaled.jacobiSvd(Eigen::ComputeThinU |
                                         Eigen::ComputeThinV)
                            .solve(sys.d);
    Vec3 u, v;
    project_orthonormal(y.segment<3>(0), y.segment<3>(3), u, v);
    Vec3 t_prime = y.segment<3>(6);

    RigidTransform c = solve_constrained(sys);
    CHECK((c.rotation().col(0) - u).norm() < 1e-9);
    CHECK((c.rotation().col(1) - v).norm() < 1e-9);
    CHECK(objective(sys, u, v, c.translation()) <=
          objective(sys, u, v, t_prime) + 1e-9);
  }
}

TEST_CASE("ransac: outlier-free matches keep every inlier") {
  RngStream rng(10);
  RigidTransform c_gt = random_rigid(rng, 30.0);
  auto matches = forward_construct_matches(rng, c_gt, 9);
  RansacConfig cfg;
  cfg.seed = 99;
  CalibrationResult result = ransac_calibrate(matches, cfg);
  CHECK(result.inlier_indices.size() == 9);
  RigidTransform direct = solve_constrained(matches);
  PoseDelta d = pose_delta(result.calibration, direct);
  CHECK(d.translation_mm < 1e-6);
  CHECK(d.rotation_deg < 1e-6);
  CHECK(result.hypothesis_count > 0);
}

TEST_CASE("ransac rejects wrong-pairing outliers") {
  RngStream rng(11);
  RigidTransform c_gt = random_rigid(rng, 30.0);
  auto matches = forward_construct_matches(rng, c_gt, 9);
  // Six aliased mismatches: pair side A of one match with side B of another.
  // The forward construction keeps world points ~100mm apart on average, so
  // these are genuine outliers.
  std::vector<MatchObservation> poisoned = matches;
  for (int k = 0; k < 6; ++k) {
    MatchObservation wrong;
    wrong.tracking_a = matches[k].tracking_a;
    wrong.point_a = matches[k].point_a;
    wrong.tracking_b = matches[(k + 3) % 9].tracking_b;
    wrong.point_b = matches[(k + 3) % 9].point_b;
    poisoned.push_back(wrong);
  }
  RansacConfig cfg;
  cfg.seed = 7;
  CalibrationResult result = ransac_calibrate(poisoned, cfg);
  for (int i = 0; i < 9; ++i)
    CHECK(std::find(result.inlier_indices.begin(), result.inlier_indices.end(),
                    i) != result.inlier_indices.end());
  PoseDelta d = pose_delta(result.calibration, c_gt);
  CHECK(d.translation_mm < 0.5);
  CHECK(d.rotation_deg < 0.2);
}

TEST_CASE("ransac needs four matches") {
  RngStream rng(12);
  auto matches = forward_construct_matches(rng, RigidTransform(), 3);
  RansacConfig cfg;
  CHECK_THROWS_AS(ransac_calibrate(matches, cfg), InsufficientMatches);
}

TEST_CASE("ransac is deterministic for a fixed seed") {
  RngStream rng(13);
  RigidTransform c_gt = random_rigid(rng, 30.0);
  auto matches = forward_construct_matches(rng, c_gt, 10);
  for (MatchObservation& m : matches) m.point_a.x += rng.normal(0, 0.3);
  RansacConfig cfg;
  cfg.seed = 5;
  CalibrationResult r1 = ransac_calibrate(matches, cfg);
  CalibrationResult r2 = ransac_calibrate(matches, cfg);
  CHECK((r1.calibration.matrix() - r2.calibration.matrix()).norm() == 0.0);
  CHECK(r1.inlier_indices == r2.inlier_indices);
}

TEST_CASE("world-frame equivariance: G*T leaves the calibration unchanged") {
  RngStream rng(14);
  RigidTransform c_gt = random_rigid(rng, 30.0);
  auto matches = forward_construct_matches(rng, c_gt, 9);
  RigidTransform g = random_rigid(rng);
  std::vector<MatchObservation> moved = matches;
  for (MatchObservation& m : moved) {
    m.tracking_a = g * m.tracking_a;
    m.tracking_b = g * m.tracking_b;
  }
  RigidTransform c1 = solve_constrained(matches);
  RigidTransform c2 = solve_constrained(moved);
  PoseDelta d = pose_delta(c1, c2);
  CHECK(d.translation_mm < 1e-9);
  CHECK(d.rotation_deg < 1e-7);

  RansacConfig cfg;
  cfg.seed = 21;
  RigidTransform r1 = ransac_calibrate(matches, cfg).calibration;
  RigidTransform r2 = ransac_calibrate(moved, cfg).calibration;
  PoseDelta dr = pose_delta(r1, r2);
  CHECK(dr.translation_mm < 1e-9);
  CHECK(dr.rotation_deg < 1e-7);
}

TEST_CASE("sweep-swap symmetry") {
  RngStream rng(15);
  RigidTransform c_gt = random_rigid(rng, 30.0);
  auto matches = forward_construct_matches(rng, c_gt, 8);
  std::vector<MatchObservation> swapped = matches;
  for (MatchObservation& m : swapped) {
    std::swap(m.tracking_a, m.tracking_b);
    std::swap(m.point_a, m.point_b);
  }
  RigidTransform c1 = solve_constrained(matches);
  RigidTransform c2 = solve_constrained(swapped);
  PoseDelta d = pose_delta(c1, c2);
  CHECK(d.translation_mm < 1e-9);
  CHECK(d.rotation_deg < 1e-7);
}

TEST_SUITE_END();
