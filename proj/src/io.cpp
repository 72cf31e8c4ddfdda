#include "protip/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "protip/errors.hpp"

namespace fs = std::filesystem;

namespace protip {

void save_pgm(const std::string& path, const ImageU8& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("pgm", "cannot write " + path);
  out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data().data()),
            static_cast<std::streamsize>(img.size()));
}

ImageU8 load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("pgm", "cannot read " + path);
  std::string magic;
  in >> magic;
  if (magic != "P5") throw FormatError("pgm", path + ": not a binary PGM");
  // Skip whitespace and '#' comments between header tokens.
  auto next_int = [&]() -> int {
    for (;;) {
      int ch = in.peek();
      if (ch == '#') {
        std::string line;
        std::getline(in, line);
      } else if (std::isspace(ch)) {
        in.get();
      } else {
        break;
      }
    }
    int v = -1;
    if (!(in >> v)) throw FormatError("pgm", path + ": bad header");
    return v;
  };
  int w = next_int(), h = next_int(), maxval = next_int();
  if (w <= 0 || h <= 0 || maxval != 255)
    throw FormatError("pgm", path + ": unsupported header");
  in.get();  // single whitespace before the raster
  ImageU8 img(w, h);
  in.read(reinterpret_cast<char*>(img.data().data()),
          static_cast<std::streamsize>(img.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.size()))
    throw FormatError("pgm", path + ": truncated raster");
  return img;
}

namespace {

std::string frame_name(const char* prefix, int index) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%05d.pgm", prefix, index);
  return buf;
}

void write_ground_truth(const std::string& path, const SweepGroundTruth& gt) {
  std::ofstream out(path);
  if (!out) throw FormatError("sweep", "cannot write " + path);
  out << "calibration =\n" << to_text(gt.calibration);
  char buf[128];
  for (const Vec3& tip : gt.tip_world) {
    std::snprintf(buf, sizeof(buf), "tip = %.9g %.9g %.9g\n", tip.x(), tip.y(),
                  tip.z());
    out << buf;
  }
}

}  // namespace

void save_sweep(const std::string& dir, const Sweep& sweep,
                const std::optional<SweepGroundTruth>& gt) {
  fs::create_directories(dir);
  {
    std::ofstream meta(dir + "/meta.txt");
    if (!meta) throw FormatError("sweep", "cannot write meta.txt in " + dir);
    meta << "n_frames = " << sweep.frames.size() << "\n";
    meta << "width_px = " << sweep.geom.width_px() << "\n";
    meta << "height_px = " << sweep.geom.depth_px() << "\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "spacing = %.9g\n", sweep.geom.spacing);
    meta << buf;
    meta << "geometry = "
         << (sweep.geom.kind == ProbeKind::Linear ? "linear" : "convex")
         << "\n";
    if (sweep.geom.kind == ProbeKind::Convex) {
      std::snprintf(buf, sizeof(buf), "apex_offset = %.9g\n",
                    sweep.geom.apex_offset_mm);
      meta << buf;
      std::snprintf(buf, sizeof(buf), "aperture_deg = %.9g\n",
                    sweep.geom.aperture_deg);
      meta << buf;
    }
  }
  {
    std::ofstream trk(dir + "/tracking.txt");
    if (!trk)
      throw FormatError("sweep", "cannot write tracking.txt in " + dir);
    for (const Frame& f : sweep.frames) trk << to_text(f.tracking) << "\n";
  }
  for (const Frame& f : sweep.frames) {
    save_pgm(dir + "/" + frame_name("frame", f.index), f.intensity);
    if (f.has_true_labels)
      save_pgm(dir + "/" + frame_name("labels", f.index), f.true_labels);
  }
  if (gt) write_ground_truth(dir + "/groundtruth.txt", *gt);
}

Sweep load_sweep(const std::string& dir) {
  Sweep sweep;
  sweep.id = fs::path(dir).filename().string();

  std::ifstream meta(dir + "/meta.txt");
  if (!meta) throw FormatError("sweep", "missing meta.txt in " + dir);
  int n_frames = -1, width_px = -1, height_px = -1;
  std::string line;
  while (std::getline(meta, line)) {
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    key.erase(std::remove_if(key.begin(), key.end(), ::isspace), key.end());
    std::istringstream val(line.substr(eq + 1));
    if (key == "n_frames") val >> n_frames;
    else if (key == "width_px") val >> width_px;
    else if (key == "height_px") val >> height_px;
    else if (key == "spacing") val >> sweep.geom.spacing;
    else if (key == "apex_offset") val >> sweep.geom.apex_offset_mm;
    else if (key == "aperture_deg") val >> sweep.geom.aperture_deg;
    else if (key == "geometry") {
      std::string kind;
      val >> kind;
      if (kind == "linear") sweep.geom.kind = ProbeKind::Linear;
      else if (kind == "convex") sweep.geom.kind = ProbeKind::Convex;
      else throw FormatError("sweep", "unknown geometry '" + kind + "'");
    }
  }
  if (n_frames < 0 || width_px <= 0 || height_px <= 0 ||
      sweep.geom.spacing <= 0)
    throw FormatError("sweep", "incomplete meta.txt in " + dir);
  sweep.geom.width_mm = width_px * sweep.geom.spacing;
  sweep.geom.depth_mm = height_px * sweep.geom.spacing;

  std::ifstream trk(dir + "/tracking.txt");
  if (!trk) throw FormatError("sweep", "missing tracking.txt in " + dir);
  sweep.frames.resize(n_frames);
  for (int i = 0; i < n_frames; ++i) {
    RigidTransform t;
    try {
      t = transform_from_text(trk);
    } catch (const FormatError&) {
      throw FormatError("sweep", dir + "/tracking.txt: expected " +
                                     std::to_string(n_frames) +
                                     " transforms, got " + std::to_string(i));
    }
    if (!t.is_rigid(1e-6))
      throw FormatError("sweep", dir + "/tracking.txt: frame " +
                                     std::to_string(i) + " is not rigid");
    sweep.frames[i].tracking = t;
    sweep.frames[i].index = i;
  }
  double extra = 0.0;
  if (trk >> extra)
    throw FormatError("sweep",
                      dir + "/tracking.txt: trailing data beyond n_frames");

  for (int i = 0; i < n_frames; ++i) {
    Frame& f = sweep.frames[i];
    f.intensity = load_pgm(dir + "/" + frame_name("frame", i));
    if (!f.intensity.same_size(width_px, height_px))
      throw FormatError("sweep", "frame " + std::to_string(i) +
                                     " dimensions disagree with meta.txt");
    std::string labels = dir + "/" + frame_name("labels", i);
    if (fs::exists(labels)) {
      f.true_labels = load_pgm(labels);
      if (!f.true_labels.same_size(width_px, height_px))
        throw FormatError("sweep", "labels " + std::to_string(i) +
                                       " dimensions disagree with meta.txt");
      f.has_true_labels = true;
    }
  }
  return sweep;
}

std::optional<GroundTruthFile> load_ground_truth(const std::string& dir) {
  std::ifstream in(dir + "/groundtruth.txt");
  if (!in) return std::nullopt;
  GroundTruthFile gt;
  std::string token;
  in >> token;  // "calibration"
  in >> token;  // "="
  gt.calibration = transform_from_text(in);
  std::string line;
  std::getline(in, line);  // consume end of matrix line
  while (std::getline(in, line)) {
    std::size_t eq = line.find('=');
    if (eq == std::string::npos || line.find("tip") == std::string::npos)
      continue;
    std::istringstream val(line.substr(eq + 1));
    Vec3 tip;
    if (val >> tip.x() >> tip.y() >> tip.z()) gt.tips.push_back(tip);
  }
  return gt;
}

}  // namespace protip
