#include "protip/simulate.hpp"

#include <cmath>

#include "protip/errors.hpp"
#include "protip/parallel.hpp"
#include "protip/rng.hpp"

namespace protip {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kDeg = kPi / 180.0;
}  // namespace

bool ImagingGeometry::valid(const ImagePoint& p) const {
  if (p.x < 0.0 || p.x > width_mm || p.y < 0.0 || p.y > depth_mm) return false;
  if (kind == ProbeKind::Linear) return true;
  // Fan with apex above the image top edge, centered on the image.
  double dx = p.x - 0.5 * width_mm;
  double dy = p.y + apex_offset_mm;
  double r = std::hypot(dx, dy);
  if (r < apex_offset_mm || r > apex_offset_mm + depth_mm) return false;
  double angle = std::atan2(dx, dy);
  return std::abs(angle) <= 0.5 * aperture_deg * kDeg;
}

Image<std::uint8_t> ImagingGeometry::validity_mask() const {
  Image<std::uint8_t> mask(width_px(), depth_px(), 1);
  if (kind == ProbeKind::Linear) return mask;
  for (int row = 0; row < mask.height(); ++row)
    for (int col = 0; col < mask.width(); ++col)
      mask.at(col, row) = valid(pixel_center(col, row)) ? 1 : 0;
  return mask;
}

namespace {

double max_cone_height(const PhantomSpec& phantom) {
  double h = 0.0;
  for (const Cone& c : phantom.cones) h = std::max(h, c.height);
  return h;
}

// Pose of the image plane in world coordinates for one frame of a sweep.
// The probe looks down onto the plate: image y maps to world -z.
RigidTransform base_pose(TrajectoryKind kind, double along,
                         const PhantomSpec& phantom,
                         const ImagingGeometry& geom, double face_z) {
  Mat3 r;
  Vec3 origin;
  // Half a pixel short of centered, so the cone axes (laid out on integer
  // world coordinates) fall on pixel-center columns.
  const double half_w = 0.5 * geom.width_mm - 0.5 * geom.spacing;
  if (kind == TrajectoryKind::AxialSweep) {
    // image x -> +y_w, image y -> -z_w, plane normal -x_w
    r.col(0) = Vec3(0, 1, 0);
    r.col(1) = Vec3(0, 0, -1);
    r.col(2) = Vec3(-1, 0, 0);
    origin = Vec3(along, -half_w, face_z);
  } else {
    // image x -> +x_w, image y -> -z_w, plane normal +y_w
    r.col(0) = Vec3(1, 0, 0);
    r.col(1) = Vec3(0, 0, -1);
    r.col(2) = Vec3(0, 1, 0);
    origin = Vec3(-half_w, along, face_z);
  }
  (void)phantom;
  return RigidTransform(r, origin);
}

// Constant fore-aft probe inclination (about the image x-axis through the
// image center).
//
// The inclination serves observability: two pure-translation sweeps with
// fixed orientations always leave the calibration translation unobservable
// along the fixed axis of their relative rotation, so the orientations
// sampled at the tip frames must differ. Each sweep therefore crosses the
// phantom twice, with opposite constant inclinations; constant tilt keeps
// the tip-frame choice inside a dwell zone unbiased, and equal |tilt|
// everywhere cancels the sec(tilt) height inflation out of the cross-sweep
// height differences. Tilt about x also keeps the lateral pixel alignment
// of the cone axes intact.
RigidTransform inclination_pose(double tilt_rad, const ImagingGeometry& geom) {
  if (tilt_rad == 0.0) return RigidTransform::identity();
  Vec3 center(0.5 * geom.width_mm, 0.5 * geom.depth_mm, 0.0);
  RigidTransform rot(
      Eigen::AngleAxisd(tilt_rad, Vec3::UnitX()).toRotationMatrix(),
      Vec3::Zero());
  return RigidTransform::translation(center) * rot *
         RigidTransform::translation(-center);
}

// In-plane projection of a world point q for image pose P (world_from_image).
TipProjection project_tip(const RigidTransform& world_from_image,
                          const Vec3& q) {
  Vec3 local = world_from_image.inverse().apply(q);
  TipProjection out;
  out.tip_in_plane = {local.x(), local.y()};
  out.offplane_mm = local.z();
  return out;
}

}  // namespace

std::vector<RigidTransform> make_trajectory(TrajectoryKind kind, int n_frames,
                                            const PhantomSpec& phantom,
                                            const RigidTransform& c_gt,
                                            const ImagingGeometry& geom,
                                            const WobbleConfig& wobble) {
  if (n_frames < 1)
    throw InvalidArgument("trajectory", "n_frames must be >= 1");

  const double standoff = geom.kind == ProbeKind::Linear ? 8.0 : 40.0;
  const double face_z =
      phantom.base_point.z() + max_cone_height(phantom) + standoff;

  // Sweep range along the principal direction: the cone band plus a margin.
  double lo = 0.0, hi = 0.0, lateral_lo = 0.0, lateral_hi = 0.0;
  std::vector<double> columns;  // cone centers along the sweep direction
  for (const Cone& c : phantom.cones) {
    double along = kind == TrajectoryKind::AxialSweep ? c.base_center.x()
                                                      : c.base_center.y();
    double lateral = kind == TrajectoryKind::AxialSweep ? c.base_center.y()
                                                        : c.base_center.x();
    lo = std::min(lo, along - c.base_radius);
    hi = std::max(hi, along + c.base_radius);
    lateral_lo = std::min(lateral_lo, lateral - c.base_radius);
    lateral_hi = std::max(lateral_hi, lateral + c.base_radius);
    columns.push_back(along);
  }
  lo -= 3.0;
  hi += 3.0;
  std::sort(columns.begin(), columns.end());
  columns.erase(std::unique(columns.begin(), columns.end(),
                            [](double a, double b) {
                              return std::abs(a - b) < 1e-6;
                            }),
                columns.end());

  if (lateral_hi - lateral_lo > geom.width_mm)
    throw CoverageError("trajectory",
                        "image width cannot span the phantom laterally");
  // The image bottom must reach below the plate, with a little slack.
  if (face_z - geom.depth_mm >
      phantom.base_point.z() - phantom.base_thickness - 2.0)
    throw CoverageError("trajectory", "image depth cannot reach the base plate");

  // Freehand pacing: the frame density follows where precision is needed.
  // An inclined plane passes through a cone tip up to
  // (height - pivot_depth) * tan(tilt) beyond the column center on the side
  // the tilt leans toward, so tip zones sit one-sided of each column and
  // get the finest sampling. The detection-free corridors between columns
  // are only a few mm wide and must contain more than three frames for
  // tracks to terminate, so they are sampled finely as well. The rest of
  // each cone band keeps a medium density to feed the tracks. Frame
  // positions are equal-area quantiles of this weight profile.
  const double amplitude = wobble.scale * 8.0 * kDeg;
  const double max_lean =
      max_cone_height(phantom) * std::tan(amplitude);
  const double max_radius = [&] {
    double r = 0.0;
    for (const Cone& c : phantom.cones) r = std::max(r, c.base_radius);
    return r;
  }();
  const int kGrid = 4096;
  auto make_positions = [&](double lean_dir) {
    auto weight = [&](double x) {
      for (double c : columns) {
        double z0 = c + lean_dir * 1.0;
        double z1 = c + lean_dir * (max_lean + 2.0);
        if (x >= std::min(z0, z1) && x <= std::max(z0, z1)) return 12.0;
      }
      for (std::size_t k = 0; k + 1 < columns.size(); ++k) {
        double mid = 0.5 * (columns[k] + columns[k + 1]);
        if (std::abs(x - mid) <= 3.0) return 8.0;
      }
      for (double c : columns)
        if (std::abs(x - c) <= max_radius + 1.0) return 2.0;
      return 1.0;
    };
    std::vector<double> cumulative(kGrid + 1, 0.0);
    for (int g = 0; g < kGrid; ++g) {
      double x = lo + (hi - lo) * (g + 0.5) / kGrid;
      cumulative[g + 1] = cumulative[g] + weight(x);
    }
    return cumulative;
  };
  auto position_at = [&](const std::vector<double>& cumulative,
                         double fraction) {
    double target = fraction * cumulative[kGrid];
    auto it = std::lower_bound(cumulative.begin(), cumulative.end(), target);
    int g = static_cast<int>(std::max<std::ptrdiff_t>(
        0, std::distance(cumulative.begin(), it) - 1));
    double span = cumulative[g + 1] - cumulative[g];
    double frac = span > 0 ? (target - cumulative[g]) / span : 0.0;
    return lo + (hi - lo) * (g + frac) / kGrid;
  };

  // Two passes at opposite constant inclinations; the second pass returns
  // right-to-left. The sign pattern differs between the two sweep kinds so
  // the four per-cone tip observations sample four orientation pairs.
  // In both frame bases the first-pass planes pierce the tips before the
  // column center and the second-pass planes after it, so the tip zones
  // lean -along on the first pass and +along on the second.
  // With the inclination disabled (scale 0) the sweep is one flat uniform
  // pass, which is what the per-module tests want.
  const bool flat = wobble.scale <= 0.0;
  const double tilt_sign = kind == TrajectoryKind::AxialSweep ? 1.0 : -1.0;
  const int n_first = flat ? n_frames
                           : (n_frames > 1 ? (n_frames + 1) / 2 : 1);
  std::vector<double> cum_first = make_positions(-1.0);
  std::vector<double> cum_second = make_positions(1.0);
  std::vector<RigidTransform> poses;
  poses.reserve(n_frames);
  for (int i = 0; i < n_frames; ++i) {
    bool second_pass = i >= n_first;
    double s;
    if (n_frames == 1) {
      s = 0.5;
    } else if (!second_pass) {
      s = n_first > 1 ? static_cast<double>(i) / (n_first - 1) : 0.5;
    } else {
      int j = i - n_first;
      int n_second = n_frames - n_first;
      s = n_second > 1 ? 1.0 - static_cast<double>(j) / (n_second - 1) : 0.5;
    }
    double along;
    double tilt;
    if (flat) {
      along = lo + s * (hi - lo);
      tilt = 0.0;
    } else {
      along = position_at(second_pass ? cum_second : cum_first, s);
      tilt = tilt_sign * (second_pass ? -amplitude : amplitude);
    }
    RigidTransform pose = base_pose(kind, along, phantom, geom, face_z) *
                          inclination_pose(tilt, geom);
    poses.push_back(pose * c_gt.inverse());
  }

  // Every cone's tip and base must be visible together in the frame whose
  // plane passes nearest the cone axis.
  for (std::size_t c = 0; c < phantom.cones.size(); ++c) {
    const Cone& cone = phantom.cones[c];
    double best = std::numeric_limits<double>::max();
    RigidTransform best_pose;
    for (const RigidTransform& t : poses) {
      RigidTransform world_from_image = t * c_gt;
      Vec3 local = world_from_image.inverse().apply(phantom.tip(c));
      if (std::abs(local.z()) < best) {
        best = std::abs(local.z());
        best_pose = world_from_image;
      }
    }
    Vec3 tip_local = best_pose.inverse().apply(phantom.tip(c));
    Vec3 base_local = best_pose.inverse().apply(cone.base_center);
    if (!geom.valid({tip_local.x(), tip_local.y()}) ||
        !geom.valid({base_local.x(), base_local.y()}))
      throw CoverageError(
          "trajectory",
          "cone " + std::to_string(c) + " tip/base not visible in geometry");
  }
  return poses;
}

Frame render_frame(const PhantomSpec& phantom, const RigidTransform& tracking,
                   const RigidTransform& c_gt, const ImagingGeometry& geom,
                   const NoiseConfig& noise, std::uint64_t seed,
                   std::string_view sweep_tag, int frame_index) {
  const int w = geom.width_px();
  const int h = geom.depth_px();
  Frame frame;
  frame.index = frame_index;
  frame.tracking = tracking;
  frame.intensity = ImageU8(w, h, 0);
  frame.true_labels = ImageU8(w, h, 0);
  frame.has_true_labels = true;

  // Low-resolution speckle field, bilinearly upsampled.
  constexpr int kSpeckleW = 64, kSpeckleH = 32;
  std::vector<float> speckle;
  if (noise.speckle_sigma > 0.0) {
    RngStream rng = RngStream::substream(
        seed, std::string(sweep_tag) + "/speckle", frame_index);
    speckle.resize(kSpeckleW * kSpeckleH);
    for (float& v : speckle) v = static_cast<float>(rng.normal());
  }
  auto speckle_at = [&](int col, int row) -> double {
    double fx = (col + 0.5) / w * kSpeckleW - 0.5;
    double fy = (row + 0.5) / h * kSpeckleH - 0.5;
    int x0 = static_cast<int>(std::floor(fx));
    int y0 = static_cast<int>(std::floor(fy));
    double ax = fx - x0, ay = fy - y0;
    auto tap = [&](int x, int y) {
      x = std::clamp(x, 0, kSpeckleW - 1);
      y = std::clamp(y, 0, kSpeckleH - 1);
      return static_cast<double>(speckle[y * kSpeckleW + x]);
    };
    return (1 - ax) * (1 - ay) * tap(x0, y0) + ax * (1 - ay) * tap(x0 + 1, y0) +
           (1 - ax) * ay * tap(x0, y0 + 1) + ax * ay * tap(x0 + 1, y0 + 1);
  };

  std::optional<RngStream> gauss;
  if (noise.gaussian_sigma > 0.0)
    gauss = RngStream::substream(seed, std::string(sweep_tag) + "/gauss",
                                 frame_index);

  const RigidTransform world_from_image = tracking * c_gt;
  // Incremental mapping: walking one pixel right/down adds a fixed vector.
  const Vec3 step_x = world_from_image.rotation().col(0) * geom.spacing;
  const Vec3 step_y = world_from_image.rotation().col(1) * geom.spacing;
  const ImagePoint p00 = geom.pixel_center(0, 0);
  const Vec3 row_start0 = world_from_image.apply(Vec3(p00.x, p00.y, 0.0));

  for (int row = 0; row < h; ++row) {
    Vec3 q = row_start0 + row * step_y;
    for (int col = 0; col < w; ++col, q += step_x) {
      Label label = Label::Background;
      if (geom.valid(geom.pixel_center(col, row)))
        label = classify_point(phantom, q);
      frame.true_labels.at(col, row) = static_cast<std::uint8_t>(label);
      double value = kLabelIntensity[static_cast<int>(label)];
      if (!speckle.empty())
        value *= 1.0 + noise.speckle_sigma * speckle_at(col, row);
      if (gauss) value += gauss->normal(0.0, noise.gaussian_sigma);
      frame.intensity.at(col, row) =
          static_cast<std::uint8_t>(std::clamp(value + 0.5, 0.0, 255.0));
    }
  }
  return frame;
}

std::pair<Sweep, SweepGroundTruth> simulate_sweep(
    const PhantomSpec& phantom, const std::vector<RigidTransform>& trajectory,
    const RigidTransform& c_gt, const ImagingGeometry& geom,
    const NoiseConfig& noise, const TrackingNoise& tracking_noise,
    std::uint64_t seed, const std::string& sweep_id, int jobs) {
  Sweep sweep;
  sweep.id = sweep_id;
  sweep.geom = geom;
  sweep.frames.resize(trajectory.size());

  SweepGroundTruth gt;
  gt.calibration = c_gt;
  for (std::size_t c = 0; c < phantom.cones.size(); ++c)
    gt.tip_world.push_back(phantom.tip(c));
  gt.frame_tips.resize(trajectory.size());

  parallel_for(trajectory.size(), jobs, [&](std::size_t i) {
    const RigidTransform& true_pose = trajectory[i];
    Frame frame = render_frame(phantom, true_pose, c_gt, geom, noise, seed,
                               sweep_id, static_cast<int>(i));

    if (tracking_noise.sigma_t_mm > 0.0 || tracking_noise.sigma_r_deg > 0.0) {
      RngStream rng =
          RngStream::substream(seed, sweep_id + "/tracknoise", i);
      Vec3 dt(rng.normal(), rng.normal(), rng.normal());
      dt *= tracking_noise.sigma_t_mm;
      Vec3 axis(rng.normal(), rng.normal(), rng.normal());
      double angle = rng.normal() * tracking_noise.sigma_r_deg * kDeg;
      RigidTransform perturb = RigidTransform::translation(dt);
      if (axis.norm() > 1e-12 && tracking_noise.sigma_r_deg > 0.0)
        perturb = perturb * RigidTransform::rotation_about(axis, angle);
      frame.tracking = true_pose * perturb;
    }
    sweep.frames[i] = std::move(frame);

    const RigidTransform world_from_image = true_pose * c_gt;
    std::vector<TipProjection> tips(phantom.cones.size());
    for (std::size_t c = 0; c < phantom.cones.size(); ++c) {
      TipProjection proj = project_tip(world_from_image, phantom.tip(c));
      proj.plane_cuts_cone =
          std::abs(proj.offplane_mm) < phantom.cones[c].base_radius;
      tips[c] = proj;
    }
    gt.frame_tips[i] = std::move(tips);
  });
  return {std::move(sweep), std::move(gt)};
}

RigidTransform make_ground_truth_calibration(std::uint64_t seed) {
  RngStream rng = RngStream::substream(seed, "cgt");
  Vec3 axis(rng.normal(), rng.normal(), rng.normal());
  while (axis.norm() < 1e-9)
    axis = Vec3(rng.normal(), rng.normal(), rng.normal());
  double angle = rng.uniform(5.0, 25.0) * kDeg;
  Vec3 t(rng.uniform(-25.0, 25.0), rng.uniform(-25.0, 25.0),
         rng.uniform(-25.0, 25.0));
  return RigidTransform(
      Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix(), t);
}

}  // namespace protip
