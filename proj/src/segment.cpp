#include "protip/segment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>

#include "protip/errors.hpp"
#include "protip/io.hpp"
#include "protip/rng.hpp"

namespace protip {

namespace {

ImageU8 median3x3(const ImageU8& in) {
  ImageU8 out(in.width(), in.height());
  std::array<std::uint8_t, 9> window;
  for (int y = 0; y < in.height(); ++y) {
    for (int x = 0; x < in.width(); ++x) {
      int n = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        int yy = y + dy;
        if (yy < 0 || yy >= in.height()) continue;
        for (int dx = -1; dx <= 1; ++dx) {
          int xx = x + dx;
          if (xx < 0 || xx >= in.width()) continue;
          window[n++] = in.at(xx, yy);
        }
      }
      std::nth_element(window.begin(), window.begin() + n / 2,
                       window.begin() + n);
      out.at(x, y) = window[n / 2];
    }
  }
  return out;
}

// Keep only the 4-connected components of `mask` that contain at least one
// fully-set 3x3 square (opening by reconstruction with a 3x3 core).
void open_by_reconstruction(Image<std::uint8_t>& mask) {
  const int w = mask.width(), h = mask.height();
  Image<std::uint8_t> keep(w, h, 0);
  std::deque<std::pair<int, int>> queue;
  for (int y = 1; y + 1 < h; ++y)
    for (int x = 1; x + 1 < w; ++x) {
      bool solid = true;
      for (int dy = -1; dy <= 1 && solid; ++dy)
        for (int dx = -1; dx <= 1 && solid; ++dx)
          solid = mask.at(x + dx, y + dy) != 0;
      if (solid && !keep.at(x, y)) {
        keep.at(x, y) = 1;
        queue.emplace_back(x, y);
      }
    }
  // Flood the surviving cores out to their full components.
  while (!queue.empty()) {
    auto [x, y] = queue.front();
    queue.pop_front();
    const int nx[4] = {x - 1, x + 1, x, x};
    const int ny[4] = {y, y, y - 1, y + 1};
    for (int k = 0; k < 4; ++k) {
      if (nx[k] < 0 || nx[k] >= w || ny[k] < 0 || ny[k] >= h) continue;
      if (mask.at(nx[k], ny[k]) && !keep.at(nx[k], ny[k])) {
        keep.at(nx[k], ny[k]) = 1;
        queue.emplace_back(nx[k], ny[k]);
      }
    }
  }
  mask = std::move(keep);
}

}  // namespace

LabelMask segment_frame(const Frame& frame, double spacing,
                        SegmentationMode mode) {
  LabelMask out;
  out.spacing = spacing;
  if (mode == SegmentationMode::TrueLabels) {
    if (!frame.has_true_labels)
      throw InvalidArgument("segment", "frame has no true labels");
    out.labels = frame.true_labels;
    return out;
  }

  ImageU8 filtered = median3x3(frame.intensity);
  const int w = filtered.width(), h = filtered.height();
  Image<std::uint8_t> base(w, h, 0), cone(w, h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      std::uint8_t v = filtered.at(x, y);
      if (v >= 160) base.at(x, y) = 1;
      else if (v >= 80) cone.at(x, y) = 1;
    }
  open_by_reconstruction(base);
  open_by_reconstruction(cone);

  out.labels = ImageU8(w, h, static_cast<std::uint8_t>(Label::Background));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (base.at(x, y))
        out.labels.at(x, y) = static_cast<std::uint8_t>(Label::Base);
      if (cone.at(x, y))
        out.labels.at(x, y) = static_cast<std::uint8_t>(Label::Cone);
    }
  return out;
}

std::vector<LabelMask> load_external_masks(const std::string& dir,
                                           const Sweep& sweep) {
  std::vector<LabelMask> masks;
  masks.reserve(sweep.frames.size());
  for (const Frame& frame : sweep.frames) {
    char name[64];
    std::snprintf(name, sizeof(name), "mask_%05d.pgm", frame.index);
    std::string path = dir + "/" + name;
    if (!std::filesystem::exists(path))
      throw FormatError("segment", "missing external mask for frame " +
                                       std::to_string(frame.index));
    LabelMask mask;
    mask.labels = load_pgm(path);
    for (std::uint8_t v : mask.labels.data())
      if (v > 2)
        throw FormatError("segment", "mask " + std::to_string(frame.index) +
                                         " has label value " +
                                         std::to_string(v) + " (allowed 0..2)");
    if (!mask.labels.same_size(frame.intensity.width(),
                               frame.intensity.height()))
      throw FormatError("segment", "external mask " +
                                       std::to_string(frame.index) +
                                       " has wrong dimensions");
    mask.spacing = sweep.geom.spacing;
    masks.push_back(std::move(mask));
  }
  return masks;
}

std::optional<BaseLine> fit_base_line(const LabelMask& mask,
                                      const BaseLineConfig& cfg) {
  std::vector<ImagePoint> pts;
  const double s = mask.spacing;
  for (int y = 0; y < mask.labels.height(); ++y)
    for (int x = 0; x < mask.labels.width(); ++x)
      if (mask.labels.at(x, y) == static_cast<std::uint8_t>(Label::Base))
        pts.push_back({(x + 0.5) * s, (y + 0.5) * s});

  if (static_cast<int>(pts.size()) < cfg.min_base_pixels) return std::nullopt;

  RngStream rng(cfg.seed);
  int best_inliers = -1;
  double best_px = 0, best_py = 0, best_dx = 1, best_dy = 0;
  for (int it = 0; it < cfg.iterations; ++it) {
    std::size_t i = rng.uniform_index(pts.size());
    std::size_t j = rng.uniform_index(pts.size());
    if (i == j) continue;
    double dx = pts[j].x - pts[i].x, dy = pts[j].y - pts[i].y;
    double len = std::hypot(dx, dy);
    if (len < 1e-9) continue;
    dx /= len;
    dy /= len;
    // Perpendicular distance |cross(d, p - a)|.
    int inliers = 0;
    for (const ImagePoint& p : pts) {
      double d = std::abs(dx * (p.y - pts[i].y) - dy * (p.x - pts[i].x));
      if (d <= cfg.inlier_distance_mm) ++inliers;
    }
    if (inliers > best_inliers) {
      best_inliers = inliers;
      best_px = pts[i].x;
      best_py = pts[i].y;
      best_dx = dx;
      best_dy = dy;
    }
  }
  if (best_inliers < 0 ||
      static_cast<double>(best_inliers) / pts.size() < cfg.min_inlier_ratio)
    return std::nullopt;

  // Total-least-squares refit on the winning inliers: centroid + principal
  // direction of the scatter.
  double cx = 0, cy = 0;
  std::vector<ImagePoint> inl;
  for (const ImagePoint& p : pts) {
    double d = std::abs(best_dx * (p.y - best_py) - best_dy * (p.x - best_px));
    if (d <= cfg.inlier_distance_mm) {
      inl.push_back(p);
      cx += p.x;
      cy += p.y;
    }
  }
  cx /= inl.size();
  cy /= inl.size();
  double sxx = 0, sxy = 0, syy = 0;
  for (const ImagePoint& p : inl) {
    sxx += (p.x - cx) * (p.x - cx);
    sxy += (p.x - cx) * (p.y - cy);
    syy += (p.y - cy) * (p.y - cy);
  }
  // Principal eigenvector of [[sxx, sxy], [sxy, syy]].
  double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  BaseLine line;
  line.point = {cx, cy};
  line.dir_x = std::cos(theta);
  line.dir_y = std::sin(theta);
  // Canonical sign: direction.x >= 0 (then direction.y >= 0 on ties).
  if (line.dir_x < 0.0 || (line.dir_x == 0.0 && line.dir_y < 0.0)) {
    line.dir_x = -line.dir_x;
    line.dir_y = -line.dir_y;
  }
  line.inlier_count = static_cast<int>(inl.size());
  line.base_pixel_count = static_cast<int>(pts.size());
  return line;
}

}  // namespace protip
