#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "protip/geom.hpp"

namespace protip {

enum class Label : std::uint8_t { Background = 0, Base = 1, Cone = 2 };

struct Cone {
  Vec3 base_center = Vec3::Zero();  // on the base plane, mm
  double base_radius = 0.0;         // mm
  double height = 0.0;              // mm, tip = base_center + height * normal
};

// Nine-cone calibration phantom: a finite base plate with cones standing on
// its top surface. Cone tips are the fiducials; their heights above the
// plate make them identifiable.
struct PhantomSpec {
  Vec3 base_point = Vec3::Zero();       // a point on the plate top surface
  Vec3 base_normal = Vec3(0, 0, 1);     // unit, cones extend along +normal
  double base_thickness = 3.0;          // mm, plate extends along -normal
  double base_half_extent = 64.0;       // mm, lateral half-size of the plate
  std::vector<Cone> cones;

  Vec3 tip(std::size_t i) const {
    return cones[i].base_center + cones[i].height * base_normal;
  }
  // In-plane orthonormal axes (u, v) completing the plate frame.
  void plane_axes(Vec3& u, Vec3& v) const;
};

// Default phantom: 3x3 grid, 40 mm pitch, 18 mm base radius, heights
// {20..60} mm in 5 mm steps placed so 4-neighbour grid cells differ by
// >= 10 mm (layout found by exhaustive search). Base plane z = 0, normal +z.
PhantomSpec default_phantom();

// Point classification against the phantom solid. Cone wins over Base;
// everything else is Background.
Label classify_point(const PhantomSpec& spec, const Vec3& q);

struct LabelVolume {
  int nx = 0, ny = 0, nz = 0;
  double spacing = 1.0;     // mm, isotropic
  Vec3 origin = Vec3::Zero();  // world position of voxel (0,0,0) center
  std::vector<std::uint8_t> voxels;  // x-fastest

  std::uint8_t at(int x, int y, int z) const {
    return voxels[(static_cast<std::size_t>(z) * ny + y) * nx + x];
  }
  Vec3 center(int x, int y, int z) const {
    return origin + spacing * Vec3(x, y, z);
  }
};

// Axis-aligned labelmap covering the phantom bounding box plus a 5 mm
// margin; each voxel is classify_point at its center.
LabelVolume rasterize_labelmap(const PhantomSpec& spec, double spacing,
                               int jobs = 1);

// Euclidean distances between all unordered tip pairs in canonical
// (i < j) order; 36 entries for nine cones.
std::vector<double> intertip_distances(const PhantomSpec& spec);

// Plain-text key=value phantom file with one "cone = cx cy cz radius height"
// line per cone.
void save_phantom(const std::string& path, const PhantomSpec& spec);
PhantomSpec load_phantom(const std::string& path);

// Raw 8-bit volume plus text header (dims, spacing, origin).
void save_labelmap(const std::string& raw_path, const std::string& header_path,
                   const LabelVolume& vol);

}  // namespace protip
