#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rmgd/feature_maps.hpp"
#include "rmgd/patch.hpp"
#include "rmgd/ring_geometry.hpp"

namespace rmgd {

/// Canonically ordered region pair (a < b lexicographically).
struct RegionPair {
  RegionId a, b;
  friend auto operator<=>(const RegionPair&, const RegionPair&) = default;
};

/// Eq.-style binary test: 1 iff mean(a) < mean(b); ties give 0.
int binary_test(const CircleIntegral& ci, const RegionPair& pair);

/// Computes only the requested property map of a patch.
Grid2D<double> compute_map(const Patch& p, MapId m);

/// Region means of one map for a batch of patches, region-major:
/// value(region_index, patch_index) with patches contiguous per region.
class RegionMeansMatrix {
 public:
  RegionMeansMatrix() = default;
  RegionMeansMatrix(std::size_t regions, std::size_t patches)
      : regions_(regions), patches_(patches), m_(regions * patches) {}

  std::size_t regions() const { return regions_; }
  std::size_t patches() const { return patches_; }
  double* row(std::size_t region) { return m_.data() + region * patches_; }
  const double* row(std::size_t region) const { return m_.data() + region * patches_; }

 private:
  std::size_t regions_ = 0, patches_ = 0;
  std::vector<double> m_;
};

RegionMeansMatrix extract_region_means(std::span<const Patch> patches, MapId map,
                                       const PoolingGeometry& geom, int threads = 0);

/// Full candidate-bit matrix: one row per enumerated region pair, one column
/// per patch, packed 64 patches per word.
struct BitCandidateMatrix {
  MapId map = MapId::Int;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t words_per_row = 0;
  std::vector<std::uint64_t> bits;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pair_index;  // region indices
  std::uint64_t excluded_rows = 0;  // formula pairs minus effective pairs

  int bit(std::size_t row, std::size_t col) const {
    return static_cast<int>((bits[row * words_per_row + col / 64] >> (col % 64)) & 1u);
  }
};

struct ExtractOptions {
  std::uint64_t memory_cap_bytes = 2ull << 30;
  int threads = 0;
};

BitCandidateMatrix extract_candidates(std::span<const Patch> patches, MapId map,
                                      const PoolingGeometry& geom,
                                      const ExtractOptions& opts = {});

struct SelectedBits {
  MapId map = MapId::Int;
  std::vector<RegionPair> pairs;  // ordered; bit n of this map is pairs[n]
};

struct GroupRange {
  int map_index = 0;          // into DescriptorModel::maps
  std::uint32_t start = 0;    // bit offset within that map's pair list
  std::uint32_t len = 0;
};

struct PreprocessSettings {
  int gaussian_kernel = 7;
  double gaussian_sigma = 2.0;
};

/// Serializable descriptor model: geometry parameters, per-map selected
/// pairs, group partition and (once finalized) nonnegative group weights.
struct DescriptorModel {
  int format_version = 1;
  int patch_size = 32;
  int divisions = 8;
  PreprocessSettings preprocess;
  std::vector<SelectedBits> maps;
  std::vector<GroupRange> groups;
  std::vector<double> weights;  // empty until weights are trained
  std::string train_set;
  std::string config_hash;
  std::uint64_t seed = 0;

  bool finalized() const { return !groups.empty() && weights.size() == groups.size(); }
  std::size_t total_bits() const;
  void validate() const;  // throws DataError on structural violations
};

void save_model(const std::filesystem::path& path, const DescriptorModel& model);
DescriptorModel load_model(const std::filesystem::path& path);

/// Word layout of a packed descriptor; each group starts on a word boundary.
struct DescriptorLayout {
  std::uint32_t total_words = 0;
  std::vector<std::uint32_t> group_word_begin;
  std::vector<std::uint32_t> group_words;
  std::vector<std::uint32_t> group_bits;

  std::size_t group_count() const { return group_bits.size(); }
};

DescriptorLayout make_layout(const DescriptorModel& model);

struct Descriptor {
  std::vector<std::uint64_t> words;
};

/// Extracts descriptors for one model; reusable across patches and threads.
class DescriptorExtractor {
 public:
  explicit DescriptorExtractor(const DescriptorModel& model);

  const DescriptorModel& model() const { return model_; }
  const DescriptorLayout& layout() const { return layout_; }
  const PoolingGeometry& geometry() const { return geom_; }

  Descriptor extract(const Patch& p) const;

 private:
  struct MapPlan {
    MapId map;
    std::vector<RegionId> regions;                            // unique, in first-use order
    std::vector<std::pair<std::uint32_t, std::uint32_t>> bits;  // indices into regions
  };

  DescriptorModel model_;
  PoolingGeometry geom_;
  DescriptorLayout layout_;
  std::vector<MapPlan> plans_;
};

/// Hex form, one string per group, most-significant bit = first selected pair.
std::vector<std::string> descriptor_hex(const Descriptor& d, const DescriptorLayout& layout);
Descriptor descriptor_from_hex(std::span<const std::string> group_hex,
                               const DescriptorLayout& layout);

}  // namespace rmgd
