#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rmgd/common.hpp"

namespace rmgd {

/// Labeled patch pairs over a locally indexed patch set.
struct PairSet {
  std::vector<std::uint32_t> a;      // patch index of first element
  std::vector<std::uint32_t> b;      // patch index of second element
  std::vector<std::uint8_t> label;   // 1 = matching

  std::size_t size() const { return label.size(); }
};

/// Source of candidate bit rows (one bit per patch, packed 64 per word).
class CandidateProvider {
 public:
  virtual ~CandidateProvider() = default;
  virtual std::size_t candidate_count() const = 0;
  virtual std::size_t patch_count() const = 0;
  virtual void fill_bit_row(std::size_t candidate, std::span<std::uint64_t> row) const = 0;
};

class RegionMeansMatrix;  // descriptor.hpp

/// Candidate rows computed on the fly from region means and a pair list.
class MeansCandidateProvider : public CandidateProvider {
 public:
  MeansCandidateProvider(const RegionMeansMatrix& means,
                         std::span<const std::pair<std::uint32_t, std::uint32_t>> pairs);
  std::size_t candidate_count() const override { return pairs_.size(); }
  std::size_t patch_count() const override;
  void fill_bit_row(std::size_t candidate, std::span<std::uint64_t> row) const override;

 private:
  const RegionMeansMatrix& means_;
  std::span<const std::pair<std::uint32_t, std::uint32_t>> pairs_;
};

struct BitCandidateMatrix;  // descriptor.hpp

class MatrixCandidateProvider : public CandidateProvider {
 public:
  explicit MatrixCandidateProvider(const BitCandidateMatrix& mat) : mat_(mat) {}
  std::size_t candidate_count() const override;
  std::size_t patch_count() const override;
  void fill_bit_row(std::size_t candidate, std::span<std::uint64_t> row) const override;

 private:
  const BitCandidateMatrix& mat_;
};

/// Agreement of the two bits of a pair predicts "matching".
inline int pair_prediction(int bit_a, int bit_b) { return bit_a == bit_b ? 1 : 0; }

/// Per-candidate matching error (fraction of mispredicted pairs under uniform
/// weights) and bit mean over all patches.
struct BitStats {
  std::vector<double> error;
  std::vector<double> mean;
};

BitStats compute_bit_stats(const CandidateProvider& provider, const PairSet& pairs,
                           int threads = 0);

/// Two-stage prefilter: keep the N/2 lowest-error candidates, then among them
/// the N/4 whose means are closest to 0.5.  Ties break on the lower candidate
/// id.  Returns surviving candidate ids in ascending id order.
std::vector<std::uint32_t> prefilter(const BitStats& stats, std::size_t n,
                                     std::string* warning = nullptr);

/// Pearson correlation of two packed 0/1 rows over n_patches entries.
/// Constant rows count as maximally redundant (returns 1).
double pearson_correlation(std::span<const std::uint64_t> row_a,
                           std::span<const std::uint64_t> row_b, std::size_t n_patches);

/// The XOR-over-norms form of the correlation, selectable for reproduction.
double xor_correlation(std::span<const std::uint64_t> row_a,
                       std::span<const std::uint64_t> row_b, std::size_t n_patches);

struct SelectionParams {
  std::uint32_t n_bits = 256;
  double t_c = 0.25;
  int folds = 4;
  bool literal_eq2 = false;       // use xor_correlation for the gate
  bool literal_phi_sign = false;  // up-weight correctly classified pairs
  double epsilon_floor = 1e-6;    // keeps alpha finite for perfect bits
  int threads = 0;
};

struct SelectionRound {
  std::uint32_t round = 0;
  std::uint32_t candidate = 0;
  double epsilon = 0.0;
  bool admitted = false;
  double max_corr = 0.0;  // max |corr| against the already selected set
  int fold = 0;
};

struct SelectionResult {
  std::vector<std::uint32_t> chosen;  // in admission order
  std::vector<SelectionRound> rounds;
  std::string warning;                // non-empty when selection ended short

  std::string report_csv() const;
};

/// Boosted selection with a correlation gate over the given (already
/// prefiltered) candidates.  Pairs are split into `folds` contiguous folds;
/// the error scan runs over the active fold's weights, and a round whose best
/// error reaches 0.5 advances to the next fold with weights reset.
SelectionResult select_bits(const CandidateProvider& provider,
                            std::span<const std::uint32_t> candidate_ids, const PairSet& pairs,
                            const SelectionParams& params);

}  // namespace rmgd
