#include "rmgd/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "rmgd/image_io.hpp"

namespace rmgd {

Grid2D<std::uint8_t> RawPatchSource::patch64(std::size_t idx) const {
  const std::size_t mosaic = idx / kPatchesPerMosaic;
  const std::size_t cell = idx % kPatchesPerMosaic;
  const int row0 = static_cast<int>(cell / kPatchesPerMosaicSide) * kRawPatchSide;
  const int col0 = static_cast<int>(cell % kPatchesPerMosaicSide) * kRawPatchSide;
  const Grid2D<std::uint8_t>& m = mosaics.at(mosaic);
  Grid2D<std::uint8_t> out(kRawPatchSide, kRawPatchSide);
  for (int i = 0; i < kRawPatchSide; ++i)
    for (int j = 0; j < kRawPatchSide; ++j) out(i, j) = m(row0 + i, col0 + j);
  return out;
}

RawPatchSource load_patch_source(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw DataError("not a directory: " + root.string());

  const fs::path info_path = root / "info.txt";
  if (!fs::exists(info_path))
    throw DataError("corrupt dataset: missing info file " + info_path.string());

  RawPatchSource src;
  {
    std::ifstream in(info_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
      std::istringstream ss(line);
      std::int64_t pid;
      if (!(ss >> pid))
        throw DataError("corrupt dataset: bad info line " + std::to_string(lineno));
      src.point_ids.push_back(pid);
    }
  }
  if (src.point_ids.empty()) throw DataError("corrupt dataset: empty info file");

  std::vector<fs::path> mosaic_files;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext == ".bmp" || ext == ".pgm") mosaic_files.push_back(entry.path());
  }
  std::sort(mosaic_files.begin(), mosaic_files.end());

  const std::size_t needed =
      (src.point_ids.size() + kPatchesPerMosaic - 1) / kPatchesPerMosaic;
  if (mosaic_files.size() != needed)
    throw DataError("corrupt dataset: info lists " + std::to_string(src.point_ids.size()) +
                    " patches needing " + std::to_string(needed) + " mosaics, found " +
                    std::to_string(mosaic_files.size()));

  for (const auto& f : mosaic_files) {
    Grid2D<std::uint8_t> img = read_gray_image(f);
    if (img.rows() != kMosaicSide || img.cols() != kMosaicSide)
      throw DataError("corrupt dataset: mosaic " + f.string() + " is not 1024x1024");
    src.mosaics.push_back(std::move(img));
  }
  return src;
}

std::size_t PairDataset::match_count() const {
  return static_cast<std::size_t>(
      std::count_if(pairs.begin(), pairs.end(), [](const PatchPair& p) { return p.label == 1; }));
}
std::size_t PairDataset::nonmatch_count() const { return pairs.size() - match_count(); }

PairDataset load_pair_list(const std::filesystem::path& path, const RawPatchSource& source) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open pair list: " + path.string());

  PairDataset ds;
  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream ss(line);
    std::int64_t f[6];
    for (int i = 0; i < 6; ++i)
      if (!(ss >> f[i]))
        throw DataError("malformed pair line " + std::to_string(lineno) + " in " + path.string());
    const std::int64_t pa = f[0], pta = f[1], pb = f[3], ptb = f[4];
    if (pa < 0 || pb < 0 || pa >= static_cast<std::int64_t>(source.patch_count()) ||
        pb >= static_cast<std::int64_t>(source.patch_count()))
      throw DataError("patch id out of range on line " + std::to_string(lineno) + " in " +
                      path.string());
    if (source.point_ids[static_cast<std::size_t>(pa)] != pta ||
        source.point_ids[static_cast<std::size_t>(pb)] != ptb)
      throw DataError("point id disagrees with info file on line " + std::to_string(lineno) +
                      " in " + path.string());
    if (!seen.insert({static_cast<std::uint32_t>(pa), static_cast<std::uint32_t>(pb)}).second)
      throw DataError("duplicate pair on line " + std::to_string(lineno) + " in " + path.string());
    ds.pairs.push_back({static_cast<std::uint32_t>(pa), static_cast<std::uint32_t>(pb),
                        static_cast<std::uint8_t>(pta == ptb ? 1 : 0)});
  }
  return ds;
}

namespace {

std::vector<double> gaussian_kernel_2d(int size, double sigma) {
  std::vector<double> k(static_cast<std::size_t>(size) * size);
  const int h = size / 2;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const double dy = i - h, dx = j - h;
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      k[static_cast<std::size_t>(i) * size + j] = v;
      sum += v;
    }
  }
  for (double& v : k) v /= sum;
  return k;
}

}  // namespace

Patch preprocess(const Grid2D<std::uint8_t>& patch64, const PreprocessParams& params,
                 std::int64_t id, std::int64_t point_id) {
  if (patch64.rows() != kRawPatchSide || patch64.cols() != kRawPatchSide)
    throw DataError("preprocess expects a 64x64 patch, got " + std::to_string(patch64.rows()) +
                    "x" + std::to_string(patch64.cols()));
  const int k = params.patch_size;
  if (k <= 0 || kRawPatchSide % k != 0 || k % 2 != 0)
    throw ConfigError("patch_size must be even and divide 64, got " + std::to_string(k));
  if (params.gaussian_kernel < 1 || params.gaussian_kernel % 2 == 0)
    throw ConfigError("gaussian_kernel must be odd and positive");
  if (params.gaussian_sigma <= 0) throw ConfigError("gaussian_sigma must be positive");

  // Area-average downsample.
  const int f = kRawPatchSide / k;
  Grid2D<double> small(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      double acc = 0.0;
      for (int di = 0; di < f; ++di)
        for (int dj = 0; dj < f; ++dj) acc += patch64(i * f + di, j * f + dj);
      small(i, j) = acc / (f * f);
    }
  }

  // Direct 2-D Gaussian convolution with replicated borders.
  const int ks = params.gaussian_kernel;
  const int h = ks / 2;
  const std::vector<double> kern = gaussian_kernel_2d(ks, params.gaussian_sigma);
  Grid2D<double> out(k, k);
  auto clampi = [k](int x) { return x < 0 ? 0 : (x >= k ? k - 1 : x); };
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      double acc = 0.0;
      for (int di = -h; di <= h; ++di)
        for (int dj = -h; dj <= h; ++dj)
          acc += kern[static_cast<std::size_t>(di + h) * ks + (dj + h)] *
                 small(clampi(i + di), clampi(j + dj));
      out(i, j) = acc;
    }
  }
  return Patch{std::move(out), id, point_id};
}

PairDataset sample_training_pairs(const PairDataset& ds, std::size_t n_match, double ratio,
                                  std::uint64_t seed) {
  if (ratio < 0) throw ConfigError("pair ratio must be >= 0");
  std::vector<PatchPair> matches, nonmatches;
  for (const auto& p : ds.pairs) (p.label ? matches : nonmatches).push_back(p);
  const std::size_t n_non = static_cast<std::size_t>(std::llround(ratio * n_match));
  if (matches.size() < n_match || nonmatches.size() < n_non)
    throw DataError("insufficient pairs: have " + std::to_string(matches.size()) + " matches / " +
                    std::to_string(nonmatches.size()) + " non-matches, need " +
                    std::to_string(n_match) + " / " + std::to_string(n_non));
  std::mt19937_64 rng(seed);
  std::shuffle(matches.begin(), matches.end(), rng);
  std::shuffle(nonmatches.begin(), nonmatches.end(), rng);
  PairDataset out;
  out.pairs.assign(matches.begin(), matches.begin() + static_cast<std::ptrdiff_t>(n_match));
  out.pairs.insert(out.pairs.end(), nonmatches.begin(),
                   nonmatches.begin() + static_cast<std::ptrdiff_t>(n_non));
  return out;
}

}  // namespace rmgd
