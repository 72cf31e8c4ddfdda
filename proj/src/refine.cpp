#include "protip/refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "protip/errors.hpp"
#include "protip/parallel.hpp"

namespace protip {

namespace {
constexpr double kDeg = 3.14159265358979323846 / 180.0;

// Accumulates slab-weighted bilinear samples of one B frame into the
// reconstruction buffers. The mapping a-image mm -> b-image mm is affine, so
// the in-slab region |z| <= slab is a band between two parallel lines; only
// pixels inside the band are visited.
void splat_frame(const Frame& frame_b, const ImagingGeometry& geom_b,
                 const RigidTransform& map_ab, const ImagingGeometry& geom_a,
                 double slab, std::vector<float>& weight,
                 std::vector<float>& value) {
  const int wa = geom_a.width_px(), ha = geom_a.depth_px();
  const int wb = geom_b.width_px(), hb = geom_b.depth_px();
  const double sa = geom_a.spacing, sb = geom_b.spacing;

  // b-image coordinates of a-pixel (col,row): q = o + col*sx + row*sy.
  const Vec3 sx = map_ab.rotation().col(0) * sa;
  const Vec3 sy = map_ab.rotation().col(1) * sa;
  const Vec3 o = map_ab.apply(Vec3(0.5 * sa, 0.5 * sa, 0.0));

  const auto& intensity = frame_b.intensity.data();
  for (int row = 0; row < ha; ++row) {
    const Vec3 row_start = o + static_cast<double>(row) * sy;
    // Solve |z| <= slab along the row: z(col) = row_start.z + col * sx.z.
    int col_lo = 0, col_hi = wa - 1;
    const double z0 = row_start.z(), dz = sx.z();
    if (std::abs(dz) < 1e-12) {
      if (std::abs(z0) > slab) continue;
    } else {
      double c1 = (-slab - z0) / dz, c2 = (slab - z0) / dz;
      if (c1 > c2) std::swap(c1, c2);
      col_lo = std::max(col_lo, static_cast<int>(std::ceil(c1)));
      col_hi = std::min(col_hi, static_cast<int>(std::floor(c2)));
      if (col_lo > col_hi) continue;
    }
    Vec3 q = row_start + static_cast<double>(col_lo) * sx;
    for (int col = col_lo; col <= col_hi; ++col, q += sx) {
      const double z = q.z();
      if (std::abs(z) > slab) continue;
      // Bilinear sample of the B frame at (q.x, q.y) mm.
      const double px = q.x() / sb - 0.5, py = q.y() / sb - 0.5;
      if (px < 0.0 || py < 0.0 || px > wb - 1 || py > hb - 1) continue;
      int x0 = std::min(static_cast<int>(px), wb - 2);
      int y0 = std::min(static_cast<int>(py), hb - 2);
      if (wb < 2 || hb < 2) { x0 = 0; y0 = 0; }
      const double ax = px - x0, ay = py - y0;
      if (geom_b.kind == ProbeKind::Convex) {
        // Skip samples touching fan-invalid source pixels.
        bool ok = geom_b.valid(geom_b.pixel_center(x0, y0)) &&
                  geom_b.valid(geom_b.pixel_center(std::min(x0 + 1, wb - 1), y0)) &&
                  geom_b.valid(geom_b.pixel_center(x0, std::min(y0 + 1, hb - 1))) &&
                  geom_b.valid(geom_b.pixel_center(std::min(x0 + 1, wb - 1),
                                                   std::min(y0 + 1, hb - 1)));
        if (!ok) continue;
      }
      const int stride = wb;
      const double i00 = intensity[y0 * stride + x0];
      const double i10 = intensity[y0 * stride + std::min(x0 + 1, wb - 1)];
      const double i01 = intensity[std::min(y0 + 1, hb - 1) * stride + x0];
      const double i11 = intensity[std::min(y0 + 1, hb - 1) * stride +
                                   std::min(x0 + 1, wb - 1)];
      const double sample = (1 - ax) * (1 - ay) * i00 + ax * (1 - ay) * i10 +
                            (1 - ax) * ay * i01 + ax * ay * i11;
      const double w = 1.0 - std::abs(z) / slab;
      if (w <= 0.0) continue;
      const std::size_t idx = static_cast<std::size_t>(row) * wa + col;
      weight[idx] += static_cast<float>(w);
      value[idx] += static_cast<float>(w * sample);
    }
  }
}

}  // namespace

ReconstructedSlice reconstruct_slice(const Sweep& sweep_b,
                                     const Frame& frame_a,
                                     const ImagingGeometry& geom_a,
                                     const RigidTransform& c,
                                     double slab_halfwidth_mm) {
  const int wa = geom_a.width_px(), ha = geom_a.depth_px();
  std::vector<float> weight(static_cast<std::size_t>(wa) * ha, 0.f);
  std::vector<float> value(weight.size(), 0.f);

  const RigidTransform world_from_a = frame_a.tracking * c;
  for (const Frame& frame_b : sweep_b.frames) {
    const RigidTransform map_ab =
        (frame_b.tracking * c).inverse() * world_from_a;
    // Skip frames whose slab cannot touch the a-image rectangle: the
    // out-of-plane coordinate is affine, so its range over the rectangle is
    // attained at the corners.
    const double sa = geom_a.spacing;
    double zmin = std::numeric_limits<double>::max(), zmax = -zmin;
    for (double cx : {0.5 * sa, geom_a.width_mm - 0.5 * sa})
      for (double cy : {0.5 * sa, geom_a.depth_mm - 0.5 * sa}) {
        double z = map_ab.apply(Vec3(cx, cy, 0.0)).z();
        zmin = std::min(zmin, z);
        zmax = std::max(zmax, z);
      }
    if (zmin > slab_halfwidth_mm || zmax < -slab_halfwidth_mm) continue;
    splat_frame(frame_b, sweep_b.geom, map_ab, geom_a, slab_halfwidth_mm,
                weight, value);
  }

  ReconstructedSlice out;
  out.image = ImageF(wa, ha, 0.f);
  out.validity = Image<std::uint8_t>(wa, ha, 0);
  for (std::size_t i = 0; i < weight.size(); ++i) {
    if (weight[i] > 0.f) {
      out.image.data()[i] = value[i] / weight[i];
      out.validity.data()[i] = 1;
    }
  }
  return out;
}

double ncc(const ImageF& a, const ImageF& b,
           const Image<std::uint8_t>& validity, bool* degenerate) {
  if (degenerate) *degenerate = false;
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  long long n = 0;
  const std::size_t total = validity.size();
  for (std::size_t i = 0; i < total; ++i) {
    if (!validity.data()[i]) continue;
    const double va = a.data()[i], vb = b.data()[i];
    sa += va;
    sb += vb;
    saa += va * va;
    sbb += vb * vb;
    sab += va * vb;
    ++n;
  }
  if (n < 2) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  const double var_a = saa - sa * sa / n;
  const double var_b = sbb - sb * sb / n;
  if (var_a <= 1e-12 || var_b <= 1e-12) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  return (sab - sa * sb / n) / std::sqrt(var_a * var_b);
}

namespace {

struct Objective {
  const Sweep& a;
  const Sweep& b;
  const RefineConfig& cfg;
  std::vector<int> frame_ids;
  std::vector<ImageF> frames_f;       // A intensities as float
  Image<std::uint8_t> geom_valid;     // validity of A's geometry
  long long geom_valid_count = 0;

  explicit Objective(const Sweep& sweep_a, const Sweep& sweep_b,
                     const RefineConfig& config)
      : a(sweep_a), b(sweep_b), cfg(config) {
    for (int i = 0; i < static_cast<int>(a.frames.size());
         i += std::max(1, cfg.frame_stride))
      frame_ids.push_back(i);
    geom_valid = a.geom.validity_mask();
    for (auto v : geom_valid.data()) geom_valid_count += v;
    for (int id : frame_ids) {
      const auto& src = a.frames[id].intensity;
      ImageF f(src.width(), src.height());
      for (std::size_t i = 0; i < src.size(); ++i)
        f.data()[i] = static_cast<float>(src.data()[i]);
      frames_f.push_back(std::move(f));
    }
  }

  // Mean NCC over qualifying frames; -inf when none qualifies.
  double evaluate(const RigidTransform& c) const {
    std::vector<double> scores(frame_ids.size(),
                               std::numeric_limits<double>::quiet_NaN());
    parallel_for(frame_ids.size(), cfg.jobs, [&](std::size_t k) {
      const Frame& frame = a.frames[frame_ids[k]];
      ReconstructedSlice slice =
          reconstruct_slice(b, frame, a.geom, c, cfg.slab_halfwidth_mm);
      long long covered = 0;
      for (std::size_t i = 0; i < slice.validity.size(); ++i) {
        slice.validity.data()[i] &= geom_valid.data()[i];
        covered += slice.validity.data()[i];
      }
      if (covered <
          cfg.min_overlap_fraction * static_cast<double>(geom_valid_count))
        return;
      bool degenerate = false;
      double score = ncc(frames_f[k], slice.image, slice.validity, &degenerate);
      if (!degenerate) scores[k] = score;
    });
    double sum = 0.0;
    int count = 0;
    for (double s : scores)
      if (!std::isnan(s)) {
        sum += s;
        ++count;
      }
    if (count == 0) return -std::numeric_limits<double>::infinity();
    return sum / count;
  }
};

}  // namespace

RefineResult refine_calibration(const Sweep& sweep_a, const Sweep& sweep_b,
                                const RigidTransform& c0,
                                const RefineConfig& cfg) {
  if (cfg.translation_steps_mm.empty() ||
      cfg.translation_steps_mm.size() != cfg.rotation_steps_deg.size())
    throw InvalidArgument("refine", "step schedules must pair up");
  for (std::size_t i = 1; i < cfg.translation_steps_mm.size(); ++i)
    if (cfg.translation_steps_mm[i] >= cfg.translation_steps_mm[i - 1] ||
        cfg.rotation_steps_deg[i] >= cfg.rotation_steps_deg[i - 1])
      throw InvalidArgument("refine", "step schedules must strictly decrease");

  Objective objective(sweep_a, sweep_b, cfg);

  RefineResult result;
  result.calibration = c0;
  double current = objective.evaluate(c0);
  result.evaluations = 1;
  result.initial_objective = current;
  if (std::isinf(current)) {
    result.no_overlap = true;
    result.final_objective = current;
    return result;
  }

  const Vec3 pivot(0.5 * sweep_a.geom.width_mm, 0.5 * sweep_a.geom.depth_mm,
                   0.0);
  RigidTransform c = c0;
  for (std::size_t level = 0; level < cfg.translation_steps_mm.size();
       ++level) {
    const double ts = cfg.translation_steps_mm[level];
    const double rs = cfg.rotation_steps_deg[level] * kDeg;
    bool improved = true;
    int passes = 0;
    while (improved && passes < 60) {
      improved = false;
      ++passes;
      for (int param = 0; param < 6; ++param) {
        for (double sign : {+1.0, -1.0}) {
          RigidTransform perturb;
          if (param < 3) {
            Vec3 t = Vec3::Zero();
            t(param) = sign * ts;
            perturb = RigidTransform::translation(t);
          } else {
            Vec3 axis = Vec3::Zero();
            axis(param - 3) = 1.0;
            perturb = RigidTransform::translation(pivot) *
                      RigidTransform::rotation_about(axis, sign * rs) *
                      RigidTransform::translation(-pivot);
          }
          RigidTransform candidate = c * perturb;
          double score = objective.evaluate(candidate);
          ++result.evaluations;
          if (score > current) {
            current = score;
            c = candidate;
            improved = true;
            break;  // accepted; the next pass re-probes every parameter
          }
        }
      }
    }
  }
  result.calibration = c;
  result.final_objective = current;
  return result;
}

}  // namespace protip
