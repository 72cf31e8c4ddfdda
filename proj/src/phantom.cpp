#include "protip/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "protip/errors.hpp"
#include "protip/parallel.hpp"

namespace protip {

void PhantomSpec::plane_axes(Vec3& u, Vec3& v) const {
  Vec3 n = base_normal.normalized();
  Vec3 seed = std::abs(n.x()) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
  u = (seed - seed.dot(n) * n).normalized();
  v = n.cross(u);
}

PhantomSpec default_phantom() {
  PhantomSpec spec;
  spec.base_point = Vec3::Zero();
  spec.base_normal = Vec3(0, 0, 1);
  spec.base_thickness = 3.0;
  spec.base_half_extent = 64.0;
  // Row-major over the 3x3 grid; adjacent cells differ by >= 10 mm.
  const double heights[9] = {20, 30, 40, 50, 60, 25, 35, 45, 55};
  const double pitch = 40.0;
  const double radius = 18.0;
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) {
      Cone c;
      c.base_center = Vec3((col - 1) * pitch, (row - 1) * pitch, 0.0);
      c.base_radius = radius;
      c.height = heights[row * 3 + col];
      spec.cones.push_back(c);
    }
  }
  return spec;
}

Label classify_point(const PhantomSpec& spec, const Vec3& q) {
  const Vec3 n = spec.base_normal;
  const double h = (q - spec.base_point).dot(n);
  for (const Cone& c : spec.cones) {
    if (h < 0.0 || h > c.height) continue;
    Vec3 rel = q - c.base_center;
    Vec3 lateral = rel - rel.dot(n) * n;
    double allowed = c.base_radius * (1.0 - h / c.height);
    if (lateral.norm() <= allowed) return Label::Cone;
  }
  if (h <= 0.0 && h >= -spec.base_thickness) {
    Vec3 u, v;
    spec.plane_axes(u, v);
    Vec3 rel = q - spec.base_point;
    if (std::abs(rel.dot(u)) <= spec.base_half_extent &&
        std::abs(rel.dot(v)) <= spec.base_half_extent)
      return Label::Base;
  }
  return Label::Background;
}

namespace {

void bounding_box(const PhantomSpec& spec, Vec3& lo, Vec3& hi) {
  Vec3 u, v;
  spec.plane_axes(u, v);
  lo = Vec3::Constant(std::numeric_limits<double>::max());
  hi = Vec3::Constant(std::numeric_limits<double>::lowest());
  auto extend = [&](const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  };
  const Vec3 n = spec.base_normal;
  for (double su : {-1.0, 1.0})
    for (double sv : {-1.0, 1.0}) {
      Vec3 corner = spec.base_point + su * spec.base_half_extent * u +
                    sv * spec.base_half_extent * v;
      extend(corner);
      extend(corner - spec.base_thickness * n);
    }
  for (const Cone& c : spec.cones) {
    extend(c.base_center + c.height * n);
    for (double su : {-1.0, 1.0})
      for (double sv : {-1.0, 1.0})
        extend(c.base_center + su * c.base_radius * u + sv * c.base_radius * v);
  }
}

}  // namespace

LabelVolume rasterize_labelmap(const PhantomSpec& spec, double spacing,
                               int jobs) {
  if (spacing <= 0.0)
    throw InvalidArgument("phantom", "labelmap spacing must be > 0");
  Vec3 lo, hi;
  bounding_box(spec, lo, hi);
  lo -= Vec3::Constant(5.0);
  hi += Vec3::Constant(5.0);
  LabelVolume vol;
  vol.spacing = spacing;
  vol.origin = lo;
  vol.nx = static_cast<int>(std::floor((hi - lo).x() / spacing)) + 1;
  vol.ny = static_cast<int>(std::floor((hi - lo).y() / spacing)) + 1;
  vol.nz = static_cast<int>(std::floor((hi - lo).z() / spacing)) + 1;
  vol.voxels.assign(static_cast<std::size_t>(vol.nx) * vol.ny * vol.nz, 0);
  parallel_for(static_cast<std::size_t>(vol.nz), jobs, [&](std::size_t z) {
    for (int y = 0; y < vol.ny; ++y)
      for (int x = 0; x < vol.nx; ++x)
        vol.voxels[(z * vol.ny + y) * vol.nx + x] = static_cast<std::uint8_t>(
            classify_point(spec, vol.center(x, y, static_cast<int>(z))));
  });
  return vol;
}

std::vector<double> intertip_distances(const PhantomSpec& spec) {
  std::vector<double> out;
  for (std::size_t i = 0; i < spec.cones.size(); ++i)
    for (std::size_t j = i + 1; j < spec.cones.size(); ++j)
      out.push_back((spec.tip(i) - spec.tip(j)).norm());
  return out;
}

void save_phantom(const std::string& path, const PhantomSpec& spec) {
  std::ofstream out(path);
  if (!out) throw FormatError("phantom", "cannot write " + path);
  char buf[256];
  auto line = [&](const char* fmt, auto... args) {
    std::snprintf(buf, sizeof(buf), fmt, args...);
    out << buf << '\n';
  };
  line("base_point = %.9g %.9g %.9g", spec.base_point.x(), spec.base_point.y(),
       spec.base_point.z());
  line("base_normal = %.9g %.9g %.9g", spec.base_normal.x(),
       spec.base_normal.y(), spec.base_normal.z());
  line("base_thickness = %.9g", spec.base_thickness);
  line("base_half_extent = %.9g", spec.base_half_extent);
  for (const Cone& c : spec.cones)
    line("cone = %.9g %.9g %.9g %.9g %.9g", c.base_center.x(),
         c.base_center.y(), c.base_center.z(), c.base_radius, c.height);
}

PhantomSpec load_phantom(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("phantom", "cannot read " + path);
  PhantomSpec spec;
  spec.cones.clear();
  std::string lraw;
  while (std::getline(in, lraw)) {
    std::size_t eq = lraw.find('=');
    if (eq == std::string::npos) continue;
    std::string key = lraw.substr(0, eq);
    key.erase(std::remove_if(key.begin(), key.end(), ::isspace), key.end());
    std::istringstream val(lraw.substr(eq + 1));
    if (key == "base_point")
      val >> spec.base_point.x() >> spec.base_point.y() >> spec.base_point.z();
    else if (key == "base_normal")
      val >> spec.base_normal.x() >> spec.base_normal.y() >>
          spec.base_normal.z();
    else if (key == "base_thickness")
      val >> spec.base_thickness;
    else if (key == "base_half_extent")
      val >> spec.base_half_extent;
    else if (key == "cone") {
      Cone c;
      val >> c.base_center.x() >> c.base_center.y() >> c.base_center.z() >>
          c.base_radius >> c.height;
      if (!val)
        throw FormatError("phantom", "bad cone line in " + path);
      spec.cones.push_back(c);
    }
  }
  if (spec.cones.empty())
    throw FormatError("phantom", "no cones in " + path);
  spec.base_normal.normalize();
  return spec;
}

void save_labelmap(const std::string& raw_path, const std::string& header_path,
                   const LabelVolume& vol) {
  std::ofstream raw(raw_path, std::ios::binary);
  if (!raw) throw FormatError("phantom", "cannot write " + raw_path);
  raw.write(reinterpret_cast<const char*>(vol.voxels.data()),
            static_cast<std::streamsize>(vol.voxels.size()));
  std::ofstream hdr(header_path);
  if (!hdr) throw FormatError("phantom", "cannot write " + header_path);
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "dims = %d %d %d\nspacing = %.9g\norigin = %.9g %.9g %.9g\n",
                vol.nx, vol.ny, vol.nz, vol.spacing, vol.origin.x(),
                vol.origin.y(), vol.origin.z());
  hdr << buf;
}

}  // namespace protip
