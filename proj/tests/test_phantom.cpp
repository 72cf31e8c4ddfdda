#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "protip/errors.hpp"
#include "protip/phantom.hpp"

using namespace protip;

TEST_SUITE_BEGIN("phantom");

TEST_CASE("default phantom heights are 20..60 in 5mm steps") {
  PhantomSpec spec = default_phantom();
  REQUIRE(spec.cones.size() == 9);
  std::vector<double> heights;
  for (const Cone& c : spec.cones) heights.push_back(c.height);
  std::sort(heights.begin(), heights.end());
  for (int i = 0; i < 9; ++i)
    CHECK(heights[i] == doctest::Approx(20.0 + 5.0 * i));
  // pairwise distinct
  CHECK(std::set<double>(heights.begin(), heights.end()).size() == 9);
}

TEST_CASE("grid-adjacent heights differ by at least 10mm") {
  PhantomSpec spec = default_phantom();
  // Exhaustive 4-neighbourhood check over the 3x3 layout (cones are stored
  // row-major).
  auto height = [&](int row, int col) {
    return spec.cones[row * 3 + col].height;
  };
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 3; ++col) {
      if (col + 1 < 3)
        CHECK(std::abs(height(row, col) - height(row, col + 1)) >= 10.0);
      if (row + 1 < 3)
        CHECK(std::abs(height(row, col) - height(row + 1, col)) >= 10.0);
    }
}

TEST_CASE("cones do not intersect laterally and tips sit height above base") {
  PhantomSpec spec = default_phantom();
  for (std::size_t i = 0; i < spec.cones.size(); ++i) {
    Vec3 tip = spec.tip(i);
    CHECK((tip - spec.cones[i].base_center).dot(spec.base_normal) ==
          doctest::Approx(spec.cones[i].height));
    for (std::size_t j = i + 1; j < spec.cones.size(); ++j) {
      double center_dist =
          (spec.cones[i].base_center - spec.cones[j].base_center).norm();
      CHECK(center_dist >
            spec.cones[i].base_radius + spec.cones[j].base_radius);
    }
  }
}

TEST_CASE("classify_point basics") {
  PhantomSpec spec = default_phantom();
  const Cone& c0 = spec.cones[0];
  Vec3 on_axis = c0.base_center + 0.5 * c0.height * spec.base_normal;
  CHECK(classify_point(spec, on_axis) == Label::Cone);

  Vec3 below(55.0, 55.0, -1.0);  // inside the plate, away from cones
  CHECK(classify_point(spec, below) == Label::Base);

  Vec3 above_tip = spec.tip(0) + 1.0 * spec.base_normal;
  CHECK(classify_point(spec, above_tip) == Label::Background);
}

TEST_CASE("classify_point is scale consistent") {
  PhantomSpec spec = default_phantom();
  PhantomSpec scaled = spec;
  const double s = 2.5;
  scaled.base_thickness *= s;
  scaled.base_half_extent *= s;
  for (Cone& c : scaled.cones) {
    c.base_center *= s;
    c.base_radius *= s;
    c.height *= s;
  }
  for (double x : {-50.0, -20.0, 0.0, 15.0, 40.0})
    for (double z : {-1.5, 0.5, 10.0, 30.0, 61.0}) {
      Vec3 q(x, x * 0.5, z);
      CHECK(classify_point(spec, q) == classify_point(scaled, s * q));
    }
}

TEST_CASE("labelmap cone voxel count matches analytic volume within 5%") {
  PhantomSpec spec = default_phantom();
  LabelVolume vol = rasterize_labelmap(spec, 1.0, 2);
  std::size_t cone_voxels = 0;
  for (std::uint8_t v : vol.voxels)
    if (v == static_cast<std::uint8_t>(Label::Cone)) ++cone_voxels;
  double analytic = 0.0;
  for (const Cone& c : spec.cones)
    analytic += (1.0 / 3.0) * 3.14159265358979323846 * c.base_radius *
                c.base_radius * c.height;
  double voxel_volume = static_cast<double>(cone_voxels) * 1.0;
  CHECK(std::abs(voxel_volume - analytic) / analytic < 0.05);
}

TEST_CASE("labelmap slice through a cone axis is triangular; corners empty") {
  PhantomSpec spec = default_phantom();
  LabelVolume vol = rasterize_labelmap(spec, 1.0, 2);
  // Column of voxels along the axis of the tallest cone (60mm, grid center).
  const Cone* tallest = nullptr;
  for (const Cone& c : spec.cones)
    if (!tallest || c.height > tallest->height) tallest = &c;
  int x = static_cast<int>((tallest->base_center.x() - vol.origin.x()) /
                           vol.spacing + 0.5);
  int y = static_cast<int>((tallest->base_center.y() - vol.origin.y()) /
                           vol.spacing + 0.5);
  // Width of the cone label shrinks monotonically with height.
  int prev_width = vol.nx;
  for (double h : {5.0, 20.0, 40.0, 55.0}) {
    int z = static_cast<int>((h - vol.origin.z()) / vol.spacing + 0.5);
    int width = 0;
    for (int xi = 0; xi < vol.nx; ++xi)
      if (vol.at(xi, y, z) == static_cast<std::uint8_t>(Label::Cone) &&
          std::abs(xi - x) < 20)
        ++width;
    CHECK(width > 0);
    CHECK(width <= prev_width);
    prev_width = width;
  }
  CHECK(vol.at(0, 0, 0) == static_cast<std::uint8_t>(Label::Background));
  CHECK(vol.at(vol.nx - 1, vol.ny - 1, vol.nz - 1) ==
        static_cast<std::uint8_t>(Label::Background));
}

TEST_CASE("labelmap rejects non-positive spacing") {
  CHECK_THROWS_AS(rasterize_labelmap(default_phantom(), 0.0),
                  InvalidArgument);
}

TEST_CASE("labelmaps at spacing s and s/2 agree off the boundary") {
  PhantomSpec spec = default_phantom();
  LabelVolume coarse = rasterize_labelmap(spec, 2.0, 2);
  LabelVolume fine = rasterize_labelmap(spec, 1.0, 2);
  // Compare co-located voxel centers; skip voxels whose 6-neighbourhood in
  // the fine volume is mixed (boundary voxels are exempt).
  std::size_t compared = 0, agreed = 0;
  for (int z = 1; z + 1 < coarse.nz; ++z)
    for (int y = 1; y + 1 < coarse.ny; ++y)
      for (int x = 1; x + 1 < coarse.nx; ++x) {
        Vec3 center = coarse.center(x, y, z);
        int fx = static_cast<int>((center.x() - fine.origin.x()) / 1.0 + 0.5);
        int fy = static_cast<int>((center.y() - fine.origin.y()) / 1.0 + 0.5);
        int fz = static_cast<int>((center.z() - fine.origin.z()) / 1.0 + 0.5);
        if (fx < 1 || fy < 1 || fz < 1 || fx + 1 >= fine.nx ||
            fy + 1 >= fine.ny || fz + 1 >= fine.nz)
          continue;
        std::uint8_t f = fine.at(fx, fy, fz);
        bool boundary = false;
        for (int d = 0; d < 6 && !boundary; ++d) {
          static const int off[6][3] = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                                        {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};
          boundary = fine.at(fx + off[d][0], fy + off[d][1], fz + off[d][2]) != f;
        }
        if (boundary) continue;
        ++compared;
        if (coarse.at(x, y, z) == f) ++agreed;
      }
  REQUIRE(compared > 1000);
  CHECK(static_cast<double>(agreed) / compared >= 0.99);
}

TEST_CASE("intertip distances: 36 positive entries matching brute force") {
  PhantomSpec spec = default_phantom();
  std::vector<double> dist = intertip_distances(spec);
  REQUIRE(dist.size() == 36);
  // Brute-force double loop oracle.
  std::size_t k = 0;
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = i + 1; j < 9; ++j, ++k) {
      CHECK(dist[k] > 0.0);
      CHECK(dist[k] == doctest::Approx((spec.tip(i) - spec.tip(j)).norm()));
    }
}

TEST_CASE("phantom file round trip") {
  namespace fs = std::filesystem;
  PhantomSpec spec = default_phantom();
  fs::path dir = fs::temp_directory_path() / "protip_phantom_test";
  fs::create_directories(dir);
  save_phantom((dir / "phantom.txt").string(), spec);
  PhantomSpec back = load_phantom((dir / "phantom.txt").string());
  REQUIRE(back.cones.size() == spec.cones.size());
  CHECK(back.base_thickness == doctest::Approx(spec.base_thickness));
  for (std::size_t i = 0; i < spec.cones.size(); ++i) {
    CHECK((back.cones[i].base_center - spec.cones[i].base_center).norm() <
          1e-6);
    CHECK(back.cones[i].height == doctest::Approx(spec.cones[i].height));
  }
  fs::remove_all(dir);
}

TEST_SUITE_END();
