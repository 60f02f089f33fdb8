#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "rmgd/patch.hpp"

namespace rmgd {

inline constexpr int kMosaicSide = 1024;
inline constexpr int kRawPatchSide = 64;
inline constexpr int kPatchesPerMosaicSide = kMosaicSide / kRawPatchSide;  // 16
inline constexpr int kPatchesPerMosaic = kPatchesPerMosaicSide * kPatchesPerMosaicSide;

/// Brown/UBC-style patch dataset: 1024x1024 mosaics, each a 16x16 tiling of
/// 64x64 patches, plus info.txt with one 3D-point id per patch.
struct RawPatchSource {
  std::vector<Grid2D<std::uint8_t>> mosaics;
  std::vector<std::int64_t> point_ids;  // indexed by patch id

  std::size_t patch_count() const { return point_ids.size(); }
  Grid2D<std::uint8_t> patch64(std::size_t idx) const;
};

RawPatchSource load_patch_source(const std::filesystem::path& root);

struct PatchPair {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  std::uint8_t label = 0;  // 1 = matching (same 3D point)
};

struct PairDataset {
  std::vector<PatchPair> pairs;

  std::size_t match_count() const;
  std::size_t nonmatch_count() const;
};

/// Parses an m50-style ground-truth file: >= 6 whitespace-separated integers
/// per line, of which fields 1,2,4,5 (1-based) are
/// patchID1 pointID1 patchID2 pointID2.  Label = (pointID1 == pointID2).
PairDataset load_pair_list(const std::filesystem::path& path, const RawPatchSource& source);

struct PreprocessParams {
  int patch_size = 32;       // must divide 64
  int gaussian_kernel = 7;   // odd
  double gaussian_sigma = 2.0;
};

/// 64x64 -> k x k by area-average downsampling, then Gaussian smoothing with
/// replicated borders.
Patch preprocess(const Grid2D<std::uint8_t>& patch64, const PreprocessParams& params,
                 std::int64_t id = 0, std::int64_t point_id = 0);

/// Draws exactly n_match matches and round(ratio*n_match) non-matches with a
/// seeded deterministic shuffle.
PairDataset sample_training_pairs(const PairDataset& ds, std::size_t n_match, double ratio,
                                  std::uint64_t seed);

}  // namespace rmgd
