#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "protip/errors.hpp"
#include "protip/io.hpp"
#include "protip/rng.hpp"
#include "test_support.hpp"

using namespace protip;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Sweep tiny_sweep(int n_frames) {
  Sweep sweep;
  sweep.id = "tiny";
  sweep.geom.width_mm = 16;
  sweep.geom.depth_mm = 8;
  sweep.geom.spacing = 1.0;
  RngStream rng(3);
  for (int i = 0; i < n_frames; ++i) {
    Frame f;
    f.index = i;
    f.intensity = ImageU8(16, 8);
    for (std::size_t k = 0; k < f.intensity.size(); ++k)
      f.intensity.data()[k] = static_cast<std::uint8_t>((k * 7 + i) % 256);
    f.true_labels = ImageU8(16, 8, 1);
    f.has_true_labels = true;
    f.tracking = protip::test::random_rigid(rng);
    sweep.frames.push_back(std::move(f));
  }
  return sweep;
}

}  // namespace

TEST_SUITE_BEGIN("io");

TEST_CASE("pgm round trip") {
  fs::path dir = temp_dir("protip_io_pgm");
  ImageU8 img(10, 6);
  for (std::size_t i = 0; i < img.size(); ++i)
    img.data()[i] = static_cast<std::uint8_t>(i * 3);
  save_pgm((dir / "a.pgm").string(), img);
  CHECK(load_pgm((dir / "a.pgm").string()) == img);
  fs::remove_all(dir);
}

TEST_CASE("sweep directory round trip") {
  fs::path dir = temp_dir("protip_io_sweep");
  Sweep sweep = tiny_sweep(4);
  save_sweep(dir.string(), sweep);
  Sweep back = load_sweep(dir.string());
  REQUIRE(back.frames.size() == 4);
  CHECK(back.geom.width_px() == 16);
  CHECK(back.geom.depth_px() == 8);
  for (int i = 0; i < 4; ++i) {
    CHECK(back.frames[i].intensity == sweep.frames[i].intensity);
    CHECK(back.frames[i].has_true_labels);
    CHECK(back.frames[i].true_labels == sweep.frames[i].true_labels);
    PoseDelta d = pose_delta(back.frames[i].tracking, sweep.frames[i].tracking);
    CHECK(d.translation_mm < 1e-6);
    CHECK(d.rotation_deg < 1e-6);
  }
  fs::remove_all(dir);
}

TEST_CASE("tracking with wrong transform count is a FormatError") {
  fs::path dir = temp_dir("protip_io_badtrack");
  Sweep sweep = tiny_sweep(3);
  save_sweep(dir.string(), sweep);

  SUBCASE("too few") {
    std::ofstream trk(dir / "tracking.txt");
    trk << to_text(RigidTransform());  // one transform, meta says three
  }
  SUBCASE("too many") {
    std::ofstream trk(dir / "tracking.txt", std::ios::app);
    trk << to_text(RigidTransform());
  }
  CHECK_THROWS_AS(load_sweep(dir.string()), FormatError);
  fs::remove_all(dir);
}

TEST_CASE("non-rigid tracking entry is a FormatError") {
  fs::path dir = temp_dir("protip_io_nonrigid");
  Sweep sweep = tiny_sweep(1);
  save_sweep(dir.string(), sweep);
  std::ofstream trk(dir / "tracking.txt");
  trk << "1 0 0 0\n0 2 0 0\n0 0 1 0\n0 0 0 1\n";  // scaled row
  trk.close();
  CHECK_THROWS_AS(load_sweep(dir.string()), FormatError);
  fs::remove_all(dir);
}

TEST_CASE("ground truth file round trip") {
  fs::path dir = temp_dir("protip_io_gt");
  Sweep sweep = tiny_sweep(1);
  SweepGroundTruth gt;
  RngStream rng(9);
  gt.calibration = protip::test::random_rigid(rng, 20.0);
  gt.tip_world = {Vec3(1, 2, 3), Vec3(-4, 5, 6.5)};
  save_sweep(dir.string(), sweep, gt);
  auto loaded = load_ground_truth(dir.string());
  REQUIRE(loaded.has_value());
  CHECK(pose_delta(loaded->calibration, gt.calibration).translation_mm < 1e-6);
  REQUIRE(loaded->tips.size() == 2);
  CHECK((loaded->tips[0] - gt.tip_world[0]).norm() < 1e-6);
  CHECK((loaded->tips[1] - gt.tip_world[1]).norm() < 1e-6);
  CHECK(!load_ground_truth("/nonexistent_dir_for_protip").has_value());
  fs::remove_all(dir);
}

TEST_SUITE_END();
