#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rmgd/dataset_io.hpp"
#include "rmgd/group_optimizer.hpp"

namespace rmgd {

struct ScoredPair {
  double distance = 0.0;
  std::uint8_t label = 0;
};
using ScoredPairs = std::vector<ScoredPair>;

struct RocPoint {
  double threshold = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
};
using RocCurve = std::vector<RocPoint>;

/// (TPR, FPR) when predicting "match" for distance <= threshold.
std::pair<double, double> rates_at_threshold(const ScoredPairs& sp, double threshold);

/// One point per distinct distance, ascending.  Requires at least one
/// positive and one negative pair.
RocCurve roc(const ScoredPairs& sp);

/// FPR at the smallest threshold whose TPR reaches `recall` (step semantics,
/// no interpolation).
double fpr_at_recall(const ScoredPairs& sp, double recall = 0.95);

std::string roc_csv(const RocCurve& curve, double fpr95, const std::string& header_comment = "");

/// Scores every pair with the model's weighted Hamming distance, describing
/// each distinct patch only once.
ScoredPairs score_dataset(const PairDataset& ds,
                          const std::function<Patch(std::uint32_t)>& patch_by_id,
                          const DescriptorExtractor& extractor, const WeightVector& weights,
                          int threads = 0);

struct NnMatch {
  std::size_t query = 0;
  std::size_t target = 0;
  double distance = 0.0;
};

/// Exhaustive nearest-neighbor scan; ties go to the smaller target index.
std::vector<NnMatch> nn_match(std::span<const Descriptor> queries,
                              std::span<const Descriptor> targets, const WeightVector& weights,
                              const DescriptorLayout& layout);

}  // namespace rmgd
