#include "rmgd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <vector>

#include "rmgd/common.hpp"
#include "rmgd/dataset_io.hpp"
#include "rmgd/image_io.hpp"

namespace rmgd::synth {

namespace {

constexpr int kSide = kRawPatchSide;  // 64
constexpr double kCenter = (kSide - 1) / 2.0;

struct Blob {
  double cx, cy, sigma, amp;
};

struct Prototype {
  std::vector<Blob> blobs;
  double ramp_x, ramp_y, base;
};

// Renders one observation of a prototype under rotation about the patch
// center, translation, affine intensity jitter and additive noise.  Rotating
// an isotropic Gaussian only moves its center, so the render stays separable
// per blob.
void render(const Prototype& proto, double rot, double dx, double dy, double contrast,
            double brightness, double noise_sigma, std::mt19937_64& rng,
            Grid2D<std::uint8_t>& out, int row0, int col0) {
  const double cr = std::cos(rot), sr = std::sin(rot);
  std::vector<double> img(static_cast<std::size_t>(kSide) * kSide,
                          proto.base);

  // Ramp in observation coordinates: gradient rotated by R^T, offset shifted.
  {
    const double gx = proto.ramp_x * cr + proto.ramp_y * sr;
    const double gy = -proto.ramp_x * sr + proto.ramp_y * cr;
    const double off = proto.ramp_x * dx + proto.ramp_y * dy;
    for (int i = 0; i < kSide; ++i)
      for (int j = 0; j < kSide; ++j)
        img[static_cast<std::size_t>(i) * kSide + j] +=
            gx * (j - kCenter) + gy * (i - kCenter) + off;
  }

  std::vector<double> fx(kSide), fy(kSide);
  for (const Blob& b : proto.blobs) {
    // Effective center in observation coordinates.
    const double ux = b.cx - kCenter - dx;
    const double uy = b.cy - kCenter - dy;
    const double ecx = kCenter + (ux * cr + uy * sr);
    const double ecy = kCenter + (-ux * sr + uy * cr);
    const double inv2s = 1.0 / (2.0 * b.sigma * b.sigma);
    for (int j = 0; j < kSide; ++j) fx[j] = std::exp(-(j - ecx) * (j - ecx) * inv2s);
    for (int i = 0; i < kSide; ++i) fy[i] = std::exp(-(i - ecy) * (i - ecy) * inv2s);
    for (int i = 0; i < kSide; ++i) {
      const double a = b.amp * fy[i];
      double* row = img.data() + static_cast<std::size_t>(i) * kSide;
      for (int j = 0; j < kSide; ++j) row[j] += a * fx[j];
    }
  }

  std::normal_distribution<double> noise(0.0, noise_sigma);
  for (int i = 0; i < kSide; ++i) {
    for (int j = 0; j < kSide; ++j) {
      double v = contrast * img[static_cast<std::size_t>(i) * kSide + j] + brightness;
      if (noise_sigma > 0) v += noise(rng);
      v = std::clamp(v, 0.0, 255.0);
      out(row0 + i, col0 + j) = static_cast<std::uint8_t>(std::lround(v));
    }
  }
}

}  // namespace

void write_dataset(const std::filesystem::path& dir, const SynthParams& p) {
  namespace fs = std::filesystem;
  if (p.points < 2 || p.obs_per_point < 2)
    throw ConfigError("synthetic dataset needs >= 2 points with >= 2 observations each");
  const long long max_matches =
      static_cast<long long>(p.points) * (p.obs_per_point * (p.obs_per_point - 1) / 2);
  if (p.match_pairs > max_matches)
    throw ConfigError("match_pairs exceeds the number of distinct same-point observation pairs");

  fs::create_directories(dir);
  std::mt19937_64 rng(p.seed);

  const int total = p.points * p.obs_per_point;
  const int n_mosaics = (total + kPatchesPerMosaic - 1) / kPatchesPerMosaic;

  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

  std::vector<Grid2D<std::uint8_t>> mosaics(
      static_cast<std::size_t>(n_mosaics), Grid2D<std::uint8_t>(kMosaicSide, kMosaicSide, 0));
  std::vector<std::int64_t> point_ids(static_cast<std::size_t>(total));

  const double rot_rad = p.max_rot_deg * std::numbers::pi / 180.0;
  for (int pt = 0; pt < p.points; ++pt) {
    Prototype proto;
    proto.base = uni(100.0, 156.0);
    proto.ramp_x = uni(-1.2, 1.2);
    proto.ramp_y = uni(-1.2, 1.2);
    for (int bi = 0; bi < p.blobs; ++bi)
      proto.blobs.push_back({uni(8.0, 56.0), uni(8.0, 56.0), uni(5.0, 14.0), uni(-90.0, 90.0)});

    for (int o = 0; o < p.obs_per_point; ++o) {
      const int id = pt * p.obs_per_point + o;
      point_ids[static_cast<std::size_t>(id)] = pt;
      const int cell = id % kPatchesPerMosaic;
      const int row0 = (cell / kPatchesPerMosaicSide) * kRawPatchSide;
      const int col0 = (cell % kPatchesPerMosaicSide) * kRawPatchSide;
      render(proto, uni(-rot_rad, rot_rad), uni(-p.max_shift, p.max_shift),
             uni(-p.max_shift, p.max_shift), uni(p.contrast_lo, p.contrast_hi),
             uni(-p.brightness, p.brightness), p.noise_sigma, rng,
             mosaics[static_cast<std::size_t>(id / kPatchesPerMosaic)], row0, col0);
    }
  }

  for (int mi = 0; mi < n_mosaics; ++mi) {
    char name[32];
    std::snprintf(name, sizeof(name), "patches%04d.pgm", mi);
    write_pgm(dir / name, mosaics[static_cast<std::size_t>(mi)]);
  }

  {
    std::ofstream info(dir / "info.txt");
    for (std::int64_t pid : point_ids) info << pid << " 0\n";
  }

  // Pair list: every line "a point(a) 0 b point(b) 0".
  struct Line {
    int a, b;
  };
  std::vector<Line> lines;
  lines.reserve(static_cast<std::size_t>(p.match_pairs + p.nonmatch_pairs));
  {
    std::vector<Line> all_matches;
    for (int pt = 0; pt < p.points; ++pt)
      for (int o1 = 0; o1 < p.obs_per_point; ++o1)
        for (int o2 = o1 + 1; o2 < p.obs_per_point; ++o2)
          all_matches.push_back({pt * p.obs_per_point + o1, pt * p.obs_per_point + o2});
    std::shuffle(all_matches.begin(), all_matches.end(), rng);
    lines.assign(all_matches.begin(), all_matches.begin() + p.match_pairs);
  }
  {
    std::set<std::pair<int, int>> seen;
    std::uniform_int_distribution<int> pick(0, total - 1);
    while (static_cast<int>(seen.size()) < p.nonmatch_pairs) {
      const int a = pick(rng), b = pick(rng);
      if (point_ids[static_cast<std::size_t>(a)] == point_ids[static_cast<std::size_t>(b)])
        continue;
      if (seen.insert({a, b}).second) lines.push_back({a, b});
    }
  }
  std::shuffle(lines.begin(), lines.end(), rng);

  const std::string fname =
      p.pair_file.empty() ? "m50_" + std::to_string(lines.size()) + ".txt" : p.pair_file;
  std::ofstream out(dir / fname);
  for (const Line& l : lines)
    out << l.a << ' ' << point_ids[static_cast<std::size_t>(l.a)] << " 0 " << l.b << ' '
        << point_ids[static_cast<std::size_t>(l.b)] << " 0\n";
}

}  // namespace rmgd::synth
