#pragma once

#include <cstdint>
#include <vector>

#include "protip/geom.hpp"

namespace protip {

// One matched tip pair with its tracking matrices: the image points p_a and
// p_b should map to the same world position under the calibration.
struct MatchObservation {
  RigidTransform tracking_a;
  ImagePoint point_a;
  RigidTransform tracking_b;
  ImagePoint point_b;
};

// Stacked linear system A [u; v; t] = d, with one 3-row block per match:
//   [ x_a Phi_a - x_b Phi_b | y_a Phi_a - y_b Phi_b | Phi_a - Phi_b ],
//   d block = delta_b - delta_a.
struct LinearSystem {
  Eigen::MatrixXd A;  // 3n x 9, columns ordered [u | v | t]
  Eigen::VectorXd d;  // 3n
  int n = 0;
};

LinearSystem build_system(const std::vector<MatchObservation>& matches);

// Nearest (Frobenius) orthonormal pair to (u_raw, v_raw) via the SVD of
// [u_raw v_raw]. Throws DegenerateConfiguration when rank < 2.
void project_orthonormal(const Vec3& u_raw, const Vec3& v_raw, Vec3& u,
                         Vec3& v);

// Constrained solve: unconstrained least squares (columns scaled to unit
// norm), SVD projection of (u', v') onto the orthonormality constraints,
// then a translation-only re-solve with (u*, v*) fixed. The rotation is
// completed with w = u x v.
RigidTransform solve_constrained(const LinearSystem& sys);
RigidTransform solve_constrained(const std::vector<MatchObservation>& matches);

// World-space discrepancy of one match under calibration C.
double match_residual(const MatchObservation& m, const RigidTransform& c);

struct RansacConfig {
  int sample_size = 4;
  double residual_gate = 100.0;      // mm^2, summed over the sample
  double inlier_threshold_mm = 10.0; // Euclidean
  int iterations = 2000;
  std::uint64_t seed = 0;
};

struct CalibrationResult {
  RigidTransform calibration;
  std::vector<int> inlier_indices;        // into the input match list
  std::vector<double> per_match_residual; // mm, all input matches
  double refit_residual = 0.0;            // sum of squared mm over inliers
  int hypothesis_count = 0;               // hypotheses that passed the gate
};

// RANSAC over tip matches: sample 4, solve, gate on the sample residual,
// score by inliers over all matches (ties: lower summed inlier residual,
// then earlier iteration), refit on the best inlier set, re-evaluate inliers
// once. Deterministic given (matches order, seed).
CalibrationResult ransac_calibrate(const std::vector<MatchObservation>& matches,
                                   const RansacConfig& cfg);

}  // namespace protip
