#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>

namespace protip {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// 2D image point in millimetres. x runs along the image width, y along the
// image depth (increasing away from the transducer). Promoted to the
// homogeneous world form (x, y, 0, 1) when mapped through transforms.
struct ImagePoint {
  double x = 0.0;
  double y = 0.0;
};

// 4x4 homogeneous rigid map, stored as rotation block + translation.
// Transforms act on column vectors: world = T * C * p.
class RigidTransform {
 public:
  RigidTransform() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  RigidTransform(const Mat3& rotation, const Vec3& translation)
      : rotation_(rotation), translation_(translation) {}

  static RigidTransform identity() { return RigidTransform(); }
  static RigidTransform translation(double x, double y, double z) {
    return RigidTransform(Mat3::Identity(), Vec3(x, y, z));
  }
  static RigidTransform translation(const Vec3& t) {
    return RigidTransform(Mat3::Identity(), t);
  }
  static RigidTransform rotation_about(const Vec3& axis, double radians) {
    return RigidTransform(
        Eigen::AngleAxisd(radians, axis.normalized()).toRotationMatrix(),
        Vec3::Zero());
  }
  // Assumes the upper-left 3x3 block of m is a rotation; callers validate
  // with is_rigid() where the source is untrusted.
  static RigidTransform from_matrix(const Mat4& m) {
    return RigidTransform(m.block<3, 3>(0, 0), m.block<3, 1>(0, 3));
  }

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.block<3, 3>(0, 0) = rotation_;
    m.block<3, 1>(0, 3) = translation_;
    return m;
  }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }

  RigidTransform inverse() const {
    Mat3 rt = rotation_.transpose();
    return RigidTransform(rt, -(rt * translation_));
  }

  // Orthonormality and determinant check, Frobenius tolerance.
  bool is_rigid(double tol = 1e-9) const {
    Mat3 err = rotation_.transpose() * rotation_ - Mat3::Identity();
    return err.norm() <= tol &&
           std::abs(rotation_.determinant() - 1.0) <= tol;
  }

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

// a applied after b.
inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return RigidTransform(a.rotation() * b.rotation(),
                        a.rotation() * b.translation() + a.translation());
}

inline RigidTransform operator*(const RigidTransform& a,
                                const RigidTransform& b) {
  return compose(a, b);
}

// World position of image point p under tracking T and calibration C:
// first three components of T * C * (x, y, 0, 1)^T.
inline Vec3 map_to_world(const RigidTransform& T, const RigidTransform& C,
                         const ImagePoint& p) {
  return (T * C).apply(Vec3(p.x, p.y, 0.0));
}

struct PoseDelta {
  double translation_mm = 0.0;
  double rotation_deg = 0.0;
};

// Translation distance and rotation angle between two rigid transforms.
PoseDelta pose_delta(const RigidTransform& a, const RigidTransform& b);

// Transform text format: 4 lines x 4 whitespace-separated decimals,
// row-major, printed with 9 significant digits.
std::string to_text(const RigidTransform& t);
RigidTransform transform_from_text(std::istream& in);
void save_transform(const std::string& path, const RigidTransform& t);
RigidTransform load_transform(const std::string& path);

}  // namespace protip
