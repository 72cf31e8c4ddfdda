#include "protip/track.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "protip/errors.hpp"

namespace protip {

std::vector<Detection> detect_cones(const LabelMask& mask,
                                    const BaseLine& base,
                                    const ImagingGeometry& geom,
                                    int frame_index) {
  const int w = mask.labels.width(), h = mask.labels.height();
  const double s = mask.spacing;
  const double min_area_px = 25.0 / (s * s);

  // Candidate pixels: cone label, strictly above the base line, inside the
  // imaging geometry.
  Image<std::uint8_t> candidate(w, h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (mask.labels.at(x, y) != static_cast<std::uint8_t>(Label::Cone))
        continue;
      ImagePoint p{(x + 0.5) * s, (y + 0.5) * s};
      if (base.height(p) > 0.0 && geom.valid(p)) candidate.at(x, y) = 1;
    }

  std::vector<Detection> detections;
  Image<std::uint8_t> visited(w, h, 0);
  std::deque<std::pair<int, int>> queue;
  for (int sy = 0; sy < h; ++sy)
    for (int sx = 0; sx < w; ++sx) {
      if (!candidate.at(sx, sy) || visited.at(sx, sy)) continue;
      visited.at(sx, sy) = 1;
      queue.emplace_back(sx, sy);
      Detection det;
      det.frame_index = frame_index;
      det.bbox = {sx, sy, sx, sy};
      long long count = 0;
      double best_height = -1.0;
      ImagePoint best_point{0, 0};
      while (!queue.empty()) {
        auto [x, y] = queue.front();
        queue.pop_front();
        ++count;
        det.bbox.x0 = std::min(det.bbox.x0, x);
        det.bbox.y0 = std::min(det.bbox.y0, y);
        det.bbox.x1 = std::max(det.bbox.x1, x);
        det.bbox.y1 = std::max(det.bbox.y1, y);
        // A pixel is a 1-spacing square; the component's extremal point is
        // the top edge of the pixel, not its center.
        ImagePoint p{(x + 0.5) * s, y * s};
        double height = base.height(p);
        if (height > best_height + 1e-12 ||
            (std::abs(height - best_height) <= 1e-12 &&
             (p.x < best_point.x ||
              (p.x == best_point.x && p.y < best_point.y)))) {
          best_height = height;
          best_point = p;
        }
        const int nx[4] = {x - 1, x + 1, x, x};
        const int ny[4] = {y, y, y - 1, y + 1};
        for (int k = 0; k < 4; ++k) {
          if (nx[k] < 0 || nx[k] >= w || ny[k] < 0 || ny[k] >= h) continue;
          if (candidate.at(nx[k], ny[k]) && !visited.at(nx[k], ny[k])) {
            visited.at(nx[k], ny[k]) = 1;
            queue.emplace_back(nx[k], ny[k]);
          }
        }
      }
      if (static_cast<double>(count) < min_area_px) continue;
      det.area_mm2 = static_cast<double>(count) * s * s;
      det.highest_point = best_point;
      det.height_mm = best_height;
      detections.push_back(det);
    }
  return detections;
}

void Tracker::update(std::vector<Detection> detections, int frame_index) {
  if (frame_index <= last_frame_)
    throw InvalidArgument("track", "frame indices must be strictly increasing");
  last_frame_ = frame_index;

  // Terminate stale tracks before assignment: idle for more than 3 frames.
  for (ConeTrack& t : tracks_)
    if (t.state == TrackState::Active && t.last_update < frame_index - 3)
      t.state = TrackState::Terminated;

  // Canonical detection order makes assembly independent of input order.
  std::sort(detections.begin(), detections.end(),
            [](const Detection& a, const Detection& b) {
              if (a.bbox.x0 != b.bbox.x0) return a.bbox.x0 < b.bbox.x0;
              if (a.bbox.y0 != b.bbox.y0) return a.bbox.y0 < b.bbox.y0;
              return a.area_mm2 < b.area_mm2;
            });

  struct Pair {
    long long area;
    std::size_t det;
    std::size_t track;
  };
  std::vector<Pair> pairs;
  for (std::size_t d = 0; d < detections.size(); ++d)
    for (std::size_t t = 0; t < tracks_.size(); ++t) {
      if (tracks_[t].state != TrackState::Active) continue;
      long long area = detections[d].bbox.intersection_area(
          tracks_[t].detections.back().bbox);
      if (area > 0) pairs.push_back({area, d, t});
    }
  std::sort(pairs.begin(), pairs.end(), [&](const Pair& a, const Pair& b) {
    if (a.area != b.area) return a.area > b.area;
    if (detections[a.det].bbox.x0 != detections[b.det].bbox.x0)
      return detections[a.det].bbox.x0 < detections[b.det].bbox.x0;
    if (a.det != b.det) return a.det < b.det;
    return a.track < b.track;
  });

  std::vector<bool> det_used(detections.size(), false);
  std::vector<bool> track_used(tracks_.size(), false);
  for (const Pair& p : pairs) {
    if (det_used[p.det] || track_used[p.track]) continue;
    det_used[p.det] = true;
    track_used[p.track] = true;
    tracks_[p.track].detections.push_back(detections[p.det]);
    tracks_[p.track].last_update = frame_index;
  }
  for (std::size_t d = 0; d < detections.size(); ++d) {
    if (det_used[d]) continue;
    ConeTrack t;
    t.detections.push_back(detections[d]);
    t.last_update = frame_index;
    tracks_.push_back(std::move(t));
  }
}

std::vector<ConeTrack> Tracker::finish() {
  for (ConeTrack& t : tracks_) t.state = TrackState::Terminated;
  return tracks_;
}

std::vector<Tip> extract_tips(const std::vector<ConeTrack>& tracks,
                              const ImagingGeometry& geom,
                              const std::string& sweep_id) {
  std::vector<Tip> tips;
  for (std::size_t ti = 0; ti < tracks.size(); ++ti) {
    const ConeTrack& track = tracks[ti];
    const auto& dets = track.detections;
    if (static_cast<int>(dets.size()) < kMinTrackDetections) continue;

    // Centered mean over the height sequence, window truncated at the ends.
    const int n = static_cast<int>(dets.size());
    const int half = kHeightSmoothingWindow / 2;
    std::vector<double> smoothed(n);
    for (int i = 0; i < n; ++i) {
      int lo = std::max(0, i - half), hi = std::min(n - 1, i + half);
      double sum = 0.0;
      for (int j = lo; j <= hi; ++j) sum += dets[j].height_mm;
      smoothed[i] = sum / (hi - lo + 1);
    }
    int best = 0;
    for (int i = 1; i < n; ++i)
      if (smoothed[i] > smoothed[best]) best = i;  // ties keep earliest

    if (smoothed[best] < kMinTipHeightMm) continue;
    if (!geom.valid(dets[best].highest_point)) continue;

    Tip tip;
    tip.sweep_id = sweep_id;
    tip.frame_index = dets[best].frame_index;
    tip.image_point = dets[best].highest_point;
    tip.smoothed_height_mm = smoothed[best];
    tip.source_track = static_cast<int>(ti);
    tips.push_back(tip);
  }
  return tips;
}

std::vector<TipMatch> match_tips(const std::vector<Tip>& tips_a,
                                 const std::vector<Tip>& tips_b) {
  std::vector<TipMatch> matches;
  for (const Tip& a : tips_a)
    for (const Tip& b : tips_b)
      if (std::abs(a.smoothed_height_mm - b.smoothed_height_mm) <
          kMatchHeightThresholdMm)
        matches.push_back({a, b});
  return matches;
}

std::string dump_tracks(const std::vector<ConeTrack>& tracks) {
  std::ostringstream out;
  out << "track\tframe\tx_mm\ty_mm\theight_mm\tarea_mm2\n";
  for (std::size_t t = 0; t < tracks.size(); ++t)
    for (const Detection& d : tracks[t].detections)
      out << t << '\t' << d.frame_index << '\t' << d.highest_point.x << '\t'
          << d.highest_point.y << '\t' << d.height_mm << '\t' << d.area_mm2
          << '\n';
  return out.str();
}

}  // namespace protip
