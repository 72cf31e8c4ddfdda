#include "protip/solve.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>

#include "protip/errors.hpp"
#include "protip/rng.hpp"

namespace protip {

LinearSystem build_system(const std::vector<MatchObservation>& matches) {
  if (matches.empty())
    throw InsufficientMatches("solve", "no matches to build the system from");
  LinearSystem sys;
  sys.n = static_cast<int>(matches.size());
  sys.A.resize(3 * sys.n, 9);
  sys.d.resize(3 * sys.n);
  for (int i = 0; i < sys.n; ++i) {
    const MatchObservation& m = matches[i];
    const Mat3& phi_a = m.tracking_a.rotation();
    const Mat3& phi_b = m.tracking_b.rotation();
    sys.A.block<3, 3>(3 * i, 0) = m.point_a.x * phi_a - m.point_b.x * phi_b;
    sys.A.block<3, 3>(3 * i, 3) = m.point_a.y * phi_a - m.point_b.y * phi_b;
    sys.A.block<3, 3>(3 * i, 6) = phi_a - phi_b;
    sys.d.segment<3>(3 * i) =
        m.tracking_b.translation() - m.tracking_a.translation();
  }
  return sys;
}

void project_orthonormal(const Vec3& u_raw, const Vec3& v_raw, Vec3& u,
                         Vec3& v) {
  Eigen::MatrixXd m(3, 2);
  m.col(0) = u_raw;
  m.col(1) = v_raw;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.singularValues()(1) < 1e-8 * svd.singularValues()(0))
    throw DegenerateConfiguration("solve",
                                  "(u', v') do not span a 2D subspace");
  Eigen::MatrixXd nearest = svd.matrixU() * svd.matrixV().transpose();
  u = nearest.col(0);
  v = nearest.col(1);
}

RigidTransform solve_constrained(const LinearSystem& sys) {
  if (sys.n < 3)
    throw InsufficientMatches("solve", "need at least 3 matches, got " +
                                           std::to_string(sys.n));
  // Unit column scaling tames the conditioning gap between the point-scaled
  // and rotation-only columns; it is undone before the projection step.
  Eigen::VectorXd scale(9);
  for (int j = 0; j < 9; ++j) {
    double norm = sys.A.col(j).norm();
    scale(j) = norm > 1e-12 ? norm : 1.0;
  }
  Eigen::MatrixXd scaled = sys.A * scale.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      scaled, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(8) < 1e-8 * sv(0))
    throw DegenerateConfiguration(
        "solve", "calibration is not determined by these matches");
  Eigen::VectorXd y = scale.cwiseInverse().asDiagonal() * svd.solve(sys.d);

  Vec3 u, v;
  project_orthonormal(y.segment<3>(0), y.segment<3>(3), u, v);

  // Re-solve the translation with (u*, v*) fixed: rows (Phi_a - Phi_b) t =
  // d - (x_a Phi_a - x_b Phi_b) u - (y_a Phi_a - y_b Phi_b) v.
  Eigen::MatrixXd at(3 * sys.n, 3);
  Eigen::VectorXd rhs(3 * sys.n);
  for (int i = 0; i < sys.n; ++i) {
    at.block<3, 3>(3 * i, 0) = sys.A.block<3, 3>(3 * i, 6);
    rhs.segment<3>(3 * i) = sys.d.segment<3>(3 * i) -
                            sys.A.block<3, 3>(3 * i, 0) * u -
                            sys.A.block<3, 3>(3 * i, 3) * v;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_t(
      at, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd_t.singularValues()(2) < 1e-8 * svd_t.singularValues()(0))
    throw DegenerateConfiguration(
        "solve", "translation is not determined by these matches");
  Vec3 t = svd_t.solve(rhs);

  Mat3 r;
  r.col(0) = u;
  r.col(1) = v;
  r.col(2) = u.cross(v);
  return RigidTransform(r, t);
}

RigidTransform solve_constrained(
    const std::vector<MatchObservation>& matches) {
  return solve_constrained(build_system(matches));
}

double match_residual(const MatchObservation& m, const RigidTransform& c) {
  return (map_to_world(m.tracking_a, c, m.point_a) -
          map_to_world(m.tracking_b, c, m.point_b))
      .norm();
}

namespace {

// Distinct sample indices via partial Fisher-Yates on a per-iteration stream.
std::vector<int> draw_sample(RngStream& rng, int n, int k) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (int i = 0; i < k; ++i) {
    int j = i + static_cast<int>(rng.uniform_index(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace

CalibrationResult ransac_calibrate(const std::vector<MatchObservation>& matches,
                                   const RansacConfig& cfg) {
  const int n = static_cast<int>(matches.size());
  if (n < cfg.sample_size)
    throw InsufficientMatches(
        "ransac", "need at least " + std::to_string(cfg.sample_size) +
                      " matches, got " + std::to_string(n));

  bool have_best = false;
  RigidTransform best_c;
  int best_score = -1;
  double best_inlier_residual = 0.0;
  int hypothesis_count = 0;

  for (int it = 0; it < cfg.iterations; ++it) {
    // Per-iteration substream: the hypothesis set is identical whether
    // iterations run serially or in parallel.
    RngStream rng = RngStream::substream(cfg.seed, "ransac", it);
    std::vector<int> sample = draw_sample(rng, n, cfg.sample_size);

    std::vector<MatchObservation> subset;
    subset.reserve(sample.size());
    for (int s : sample) subset.push_back(matches[s]);

    RigidTransform c;
    try {
      c = solve_constrained(subset);
    } catch (const DegenerateConfiguration&) {
      continue;
    }

    double sample_residual_sq = 0.0;
    for (const MatchObservation& m : subset) {
      double r = match_residual(m, c);
      sample_residual_sq += r * r;
    }
    if (sample_residual_sq > cfg.residual_gate) continue;
    ++hypothesis_count;

    int score = 0;
    double inlier_residual = 0.0;
    for (const MatchObservation& m : matches) {
      double r = match_residual(m, c);
      if (r <= cfg.inlier_threshold_mm) {
        ++score;
        inlier_residual += r;
      }
    }
    if (score > best_score ||
        (score == best_score && inlier_residual < best_inlier_residual)) {
      have_best = true;
      best_score = score;
      best_inlier_residual = inlier_residual;
      best_c = c;
    }
  }
  if (!have_best)
    throw NoConsensus("ransac", "no hypothesis passed the residual gate");

  CalibrationResult result;
  result.hypothesis_count = hypothesis_count;

  // Refit on the best hypothesis' inliers, then re-evaluate the inlier set
  // once against the refit calibration.
  std::vector<MatchObservation> inliers;
  for (const MatchObservation& m : matches)
    if (match_residual(m, best_c) <= cfg.inlier_threshold_mm)
      inliers.push_back(m);
  RigidTransform refit = best_c;
  if (static_cast<int>(inliers.size()) >= 3) {
    try {
      refit = solve_constrained(inliers);
    } catch (const DegenerateConfiguration&) {
      refit = best_c;  // keep the hypothesis when the refit degenerates
    }
  }
  result.calibration = refit;
  result.per_match_residual.reserve(n);
  for (int i = 0; i < n; ++i) {
    double r = match_residual(matches[i], refit);
    result.per_match_residual.push_back(r);
    if (r <= cfg.inlier_threshold_mm) {
      result.inlier_indices.push_back(i);
      result.refit_residual += r * r;
    }
  }
  return result;
}

}  // namespace protip
