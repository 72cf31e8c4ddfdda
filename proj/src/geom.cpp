#include "protip/geom.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "protip/errors.hpp"

namespace protip {

PoseDelta pose_delta(const RigidTransform& a, const RigidTransform& b) {
  PoseDelta d;
  d.translation_mm = (a.translation() - b.translation()).norm();
  Mat3 rel = a.rotation().transpose() * b.rotation();
  // atan2 of the skew part against the trace stays accurate near identity,
  // where acos((tr-1)/2) loses half the significant digits.
  Vec3 skew(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0),
            rel(1, 0) - rel(0, 1));
  double s = 0.5 * skew.norm();
  double c = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
  d.rotation_deg = std::atan2(s, c) * 180.0 / 3.14159265358979323846;
  return d;
}

std::string to_text(const RigidTransform& t) {
  Mat4 m = t.matrix();
  std::string out;
  char buf[64];
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      std::snprintf(buf, sizeof(buf), "%.9g", m(r, c));
      out += buf;
      out += (c == 3) ? '\n' : ' ';
    }
  }
  return out;
}

RigidTransform transform_from_text(std::istream& in) {
  Mat4 m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      if (!(in >> m(r, c)))
        throw FormatError("transform", "expected 16 numeric values");
  return RigidTransform::from_matrix(m);
}

void save_transform(const std::string& path, const RigidTransform& t) {
  std::ofstream out(path);
  if (!out) throw FormatError("transform", "cannot write " + path);
  out << to_text(t);
}

RigidTransform load_transform(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("transform", "cannot read " + path);
  RigidTransform t = transform_from_text(in);
  if (!t.is_rigid(1e-6))
    throw FormatError("transform", path + " is not a rigid transform");
  return t;
}

}  // namespace protip
