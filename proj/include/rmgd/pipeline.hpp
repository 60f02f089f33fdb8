#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rmgd/bit_selection.hpp"
#include "rmgd/config.hpp"
#include "rmgd/dataset_io.hpp"
#include "rmgd/group_optimizer.hpp"
#include "rmgd/match_eval.hpp"

namespace rmgd::pipeline {

struct MapSelectionReport {
  MapId map = MapId::Int;
  std::string prefilter_warning;
  SelectionResult selection;
};

struct TrainBitsResult {
  DescriptorModel model;
  std::vector<MapSelectionReport> reports;
  std::uint64_t formula_pairs = 0;
  std::uint64_t effective_pairs = 0;
  std::uint64_t removed_regions = 0;

  std::string report_csv() const;  // map,round,candidate,epsilon,admitted,max_corr,fold
};

TrainBitsResult train_bits(const RunConfig& cfg, const std::filesystem::path& data_root,
                           const std::filesystem::path& pair_file);

enum class Regularizer { None, L1, L2 };
Regularizer regularizer_from_name(const std::string& name);

DescriptorModel train_weights(const RunConfig& cfg, DescriptorModel model,
                              const std::filesystem::path& data_root,
                              const std::filesystem::path& pair_file, Regularizer reg,
                              TrainingLog* log = nullptr);

struct EvalResult {
  RocCurve curve;
  double fpr95 = 0.0;
  std::size_t n_groups = 0;
  std::size_t bits_per_group = 0;
  std::size_t active_groups = 0;  // groups with nonzero weight
};

EvalResult evaluate(const RunConfig& cfg, const DescriptorModel& model,
                    const std::filesystem::path& data_root,
                    const std::filesystem::path& pair_file);

/// Writes one line per patch: "<patch_id> <group hex strings...>".
void extract_to_file(const RunConfig& cfg, const DescriptorModel& model,
                     const std::filesystem::path& data_root, const std::filesystem::path& out);

/// Row of the results table (mirrors the summary CSV written by `eval`).
struct ReportRow {
  std::string train_set, test_set;
  std::size_t n_groups = 0;
  std::size_t bits_per_group = 0;
  double fpr95 = 0.0;
};
std::string report_table_csv(std::span<const ReportRow> rows);

/// Shared helpers used by commands and tests.
std::vector<Patch> preprocess_patch_set(const RawPatchSource& src,
                                        std::span<const std::uint32_t> ids,
                                        const PreprocessParams& params, int threads);

/// Maps a sampled PairDataset onto locally indexed patches.
struct LocalPairs {
  std::vector<std::uint32_t> patch_ids;  // sorted unique source patch ids
  PairSet pairs;
};
LocalPairs localize_pairs(const PairDataset& ds);

/// Uniformly sampled (match, non-match) ranking instances from per-pair
/// group-distance vectors.
std::vector<RankingInstance> sample_instances(std::span<const DistanceVector> dist,
                                              std::span<const std::uint8_t> labels,
                                              std::uint64_t budget, std::uint64_t seed);

}  // namespace rmgd::pipeline
