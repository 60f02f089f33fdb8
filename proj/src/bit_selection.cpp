#include "rmgd/bit_selection.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "rmgd/descriptor.hpp"
#include "rmgd/parallel.hpp"

namespace rmgd {

MeansCandidateProvider::MeansCandidateProvider(
    const RegionMeansMatrix& means,
    std::span<const std::pair<std::uint32_t, std::uint32_t>> pairs)
    : means_(means), pairs_(pairs) {}

std::size_t MeansCandidateProvider::patch_count() const { return means_.patches(); }

void MeansCandidateProvider::fill_bit_row(std::size_t candidate,
                                          std::span<std::uint64_t> row) const {
  const double* ma = means_.row(pairs_[candidate].first);
  const double* mb = means_.row(pairs_[candidate].second);
  const std::size_t p = means_.patches();
  std::fill(row.begin(), row.end(), 0);
  for (std::size_t i = 0; i < p; ++i)
    row[i / 64] |= static_cast<std::uint64_t>(ma[i] < mb[i]) << (i % 64);
}

std::size_t MatrixCandidateProvider::candidate_count() const { return mat_.rows; }
std::size_t MatrixCandidateProvider::patch_count() const { return mat_.cols; }

void MatrixCandidateProvider::fill_bit_row(std::size_t candidate,
                                           std::span<std::uint64_t> row) const {
  const std::uint64_t* src = mat_.bits.data() + candidate * mat_.words_per_row;
  std::copy(src, src + mat_.words_per_row, row.begin());
}

namespace {

inline int row_bit(const std::uint64_t* row, std::uint32_t idx) {
  return static_cast<int>((row[idx >> 6] >> (idx & 63)) & 1u);
}

std::size_t popcount_words(std::span<const std::uint64_t> w) {
  std::size_t n = 0;
  for (std::uint64_t x : w) n += static_cast<std::size_t>(std::popcount(x));
  return n;
}

}  // namespace

BitStats compute_bit_stats(const CandidateProvider& provider, const PairSet& pairs, int threads) {
  const std::size_t n = provider.candidate_count();
  const std::size_t p = provider.patch_count();
  const std::size_t m = pairs.size();
  if (m == 0) throw ConfigError("compute_bit_stats: empty pair set");
  const std::size_t words = (p + 63) / 64;

  std::vector<std::uint8_t> not_label(m);
  for (std::size_t i = 0; i < m; ++i) not_label[i] = pairs.label[i] ^ 1u;

  BitStats stats;
  stats.error.resize(n);
  stats.mean.resize(n);

  parallel_chunks(n, 1024, threads, [&](std::size_t lo, std::size_t hi) {
    std::vector<std::uint64_t> row(words);
    for (std::size_t c = lo; c < hi; ++c) {
      provider.fill_bit_row(c, row);
      std::size_t mismatches = 0;
      for (std::size_t i = 0; i < m; ++i)
        mismatches += static_cast<std::size_t>(
            (row_bit(row.data(), pairs.a[i]) ^ row_bit(row.data(), pairs.b[i]) ^ not_label[i]) & 1);
      stats.error[c] = static_cast<double>(mismatches) / static_cast<double>(m);
      stats.mean[c] = static_cast<double>(popcount_words(row)) / static_cast<double>(p);
    }
  });
  return stats;
}

std::vector<std::uint32_t> prefilter(const BitStats& stats, std::size_t n, std::string* warning) {
  const std::size_t count = stats.error.size();
  const std::size_t stage1 = std::max<std::size_t>(1, n / 2);
  const std::size_t stage2 = std::max<std::size_t>(1, n / 4);
  if (warning) warning->clear();
  if (count < stage2 && warning)
    *warning = "only " + std::to_string(count) + " candidates available, fewer than N/4 = " +
               std::to_string(stage2) + "; keeping all";

  std::vector<std::uint32_t> ids(count);
  std::iota(ids.begin(), ids.end(), 0u);
  auto take = [&](std::vector<std::uint32_t>& v, std::size_t keep, auto key) {
    if (v.size() <= keep) return;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(keep) - 1, v.end(),
                     [&](std::uint32_t x, std::uint32_t y) {
                       return std::pair(key(x), x) < std::pair(key(y), y);
                     });
    v.resize(keep);
  };
  take(ids, stage1, [&](std::uint32_t c) { return stats.error[c]; });
  take(ids, stage2, [&](std::uint32_t c) { return std::abs(stats.mean[c] - 0.5); });
  std::sort(ids.begin(), ids.end());
  return ids;
}

double pearson_correlation(std::span<const std::uint64_t> row_a,
                           std::span<const std::uint64_t> row_b, std::size_t n_patches) {
  if (row_a.size() != row_b.size())
    throw ConfigError("pearson_correlation: row length mismatch");
  if (n_patches < 2) throw ConfigError("pearson_correlation: need at least 2 entries");
  const auto p = static_cast<std::int64_t>(n_patches);
  const auto na = static_cast<std::int64_t>(popcount_words(row_a));
  const auto nb = static_cast<std::int64_t>(popcount_words(row_b));
  if (na == 0 || na == p || nb == 0 || nb == p) return 1.0;  // constant row convention
  std::int64_t nab = 0;
  for (std::size_t w = 0; w < row_a.size(); ++w)
    nab += std::popcount(row_a[w] & row_b[w]);
  const double num = static_cast<double>(p * nab - na * nb);
  const double den =
      std::sqrt(static_cast<double>(na * (p - na))) * std::sqrt(static_cast<double>(nb * (p - nb)));
  return num / den;
}

double xor_correlation(std::span<const std::uint64_t> row_a,
                       std::span<const std::uint64_t> row_b, std::size_t n_patches) {
  if (row_a.size() != row_b.size()) throw ConfigError("xor_correlation: row length mismatch");
  (void)n_patches;
  const auto na = static_cast<double>(popcount_words(row_a));
  const auto nb = static_cast<double>(popcount_words(row_b));
  if (na == 0 || nb == 0) return 1.0;  // constant-zero row convention
  std::int64_t nxor = 0;
  for (std::size_t w = 0; w < row_a.size(); ++w)
    nxor += std::popcount(row_a[w] ^ row_b[w]);
  return static_cast<double>(nxor) / (std::sqrt(na) * std::sqrt(nb));
}

std::string SelectionResult::report_csv() const {
  std::ostringstream out;
  out << "round,candidate,epsilon,admitted,max_corr,fold\n";
  for (const auto& r : rounds)
    out << r.round << ',' << r.candidate << ',' << format_double(r.epsilon) << ','
        << (r.admitted ? 1 : 0) << ',' << format_double(r.max_corr) << ',' << r.fold << '\n';
  return out.str();
}

SelectionResult select_bits(const CandidateProvider& provider,
                            std::span<const std::uint32_t> candidate_ids, const PairSet& pairs,
                            const SelectionParams& params) {
  const std::size_t m = pairs.size();
  const std::size_t p = provider.patch_count();
  const std::size_t n_cand = candidate_ids.size();
  if (params.folds < 1) throw ConfigError("folds must be >= 1");
  if (m == 0) throw ConfigError("select_bits: empty pair set");
  const std::size_t words = (p + 63) / 64;
  const int folds = std::min<std::size_t>(static_cast<std::size_t>(params.folds), m);

  SelectionResult res;
  if (n_cand == 0 || params.n_bits == 0) {
    if (params.n_bits > 0) res.warning = "no candidates to select from";
    return res;
  }

  // Packed per-pair mismatch masks for every candidate.
  const std::size_t mask_bytes = (m + 7) / 8;
  std::vector<std::uint8_t> not_label(m);
  for (std::size_t i = 0; i < m; ++i) not_label[i] = pairs.label[i] ^ 1u;
  std::vector<std::uint8_t> masks(n_cand * mask_bytes);
  parallel_chunks(n_cand, 512, params.threads, [&](std::size_t lo, std::size_t hi) {
    std::vector<std::uint64_t> row(words);
    for (std::size_t c = lo; c < hi; ++c) {
      provider.fill_bit_row(candidate_ids[c], row);
      std::uint8_t* mask = masks.data() + c * mask_bytes;
      for (std::size_t i = 0; i < m; ++i) {
        const int mis =
            (row_bit(row.data(), pairs.a[i]) ^ row_bit(row.data(), pairs.b[i]) ^ not_label[i]) & 1;
        mask[i / 8] |= static_cast<std::uint8_t>(mis << (i % 8));
      }
    }
  });

  // Pair weights, padded to a whole number of mask bytes.
  std::vector<double> d(mask_bytes * 8, 0.0);
  auto fold_range = [&](int f) {
    const std::size_t lo = m * static_cast<std::size_t>(f) / folds;
    const std::size_t hi = m * (static_cast<std::size_t>(f) + 1) / folds;
    return std::pair(lo, hi);
  };
  auto reset_fold = [&](int f) {
    std::fill(d.begin(), d.end(), 0.0);
    const auto [lo, hi] = fold_range(f);
    const double w = 1.0 / static_cast<double>(hi - lo);
    std::fill(d.begin() + static_cast<std::ptrdiff_t>(lo), d.begin() + static_cast<std::ptrdiff_t>(hi), w);
  };
  int fold = 0;
  reset_fold(fold);

  std::vector<std::uint8_t> alive(n_cand, 1);
  std::size_t alive_count = n_cand;

  // Subset-sum table: lut[pos*256 + b] = sum of weights of the pairs selected
  // by byte value b at mask byte `pos`.
  std::vector<double> lut(mask_bytes * 256);
  auto rebuild_lut = [&] {
    for (std::size_t pos = 0; pos < mask_bytes; ++pos) {
      double* t = lut.data() + pos * 256;
      const double* dw = d.data() + pos * 8;
      t[0] = 0.0;
      for (std::uint32_t b = 1; b < 256; ++b)
        t[b] = t[b & (b - 1)] + dw[std::countr_zero(b)];
    }
  };

  std::vector<std::vector<std::uint64_t>> selected_rows;
  std::vector<std::uint64_t> winner_row(words);

  const std::size_t chunk = 2048;
  const std::size_t nchunks = (n_cand + chunk - 1) / chunk;
  std::vector<std::pair<double, std::size_t>> chunk_best(nchunks);

  std::uint32_t round = 0;
  while (res.chosen.size() < params.n_bits && alive_count > 0) {
    ++round;
    rebuild_lut();

    parallel_chunks(n_cand, chunk, params.threads, [&](std::size_t lo, std::size_t hi) {
      double best_eps = std::numeric_limits<double>::infinity();
      std::size_t best_c = n_cand;
      for (std::size_t c = lo; c < hi; ++c) {
        if (!alive[c]) continue;
        const std::uint8_t* mask = masks.data() + c * mask_bytes;
        double e0 = 0.0, e1 = 0.0, e2 = 0.0, e3 = 0.0;
        std::size_t pos = 0;
        for (; pos + 4 <= mask_bytes; pos += 4) {
          e0 += lut[(pos + 0) * 256 + mask[pos + 0]];
          e1 += lut[(pos + 1) * 256 + mask[pos + 1]];
          e2 += lut[(pos + 2) * 256 + mask[pos + 2]];
          e3 += lut[(pos + 3) * 256 + mask[pos + 3]];
        }
        for (; pos < mask_bytes; ++pos) e0 += lut[pos * 256 + mask[pos]];
        const double eps = (e0 + e1) + (e2 + e3);
        if (eps < best_eps) {
          best_eps = eps;
          best_c = c;
        }
      }
      chunk_best[lo / chunk] = {best_eps, best_c};
    });

    double eps_t = std::numeric_limits<double>::infinity();
    std::size_t winner = n_cand;
    for (const auto& [e, c] : chunk_best)
      if (c < n_cand && e < eps_t) {
        eps_t = e;
        winner = c;
      }
    if (winner == n_cand) break;

    // Correlation gate against the already selected set.
    provider.fill_bit_row(candidate_ids[winner], winner_row);
    double max_corr = 0.0;
    for (const auto& sel : selected_rows) {
      const double c = params.literal_eq2 ? xor_correlation(winner_row, sel, p)
                                          : std::abs(pearson_correlation(winner_row, sel, p));
      max_corr = std::max(max_corr, c);
    }
    const bool admitted = max_corr < params.t_c;
    if (admitted) {
      res.chosen.push_back(candidate_ids[winner]);
      selected_rows.push_back(winner_row);
    }
    alive[winner] = 0;
    --alive_count;
    res.rounds.push_back({round, candidate_ids[winner], eps_t, admitted, max_corr, fold});

    if (eps_t < 0.5) {
      const double eps_c = std::clamp(eps_t, params.epsilon_floor, 1.0 - params.epsilon_floor);
      const double alpha = 0.5 * std::log((1.0 - eps_c) / eps_c);
      const std::uint8_t* mask = masks.data() + winner * mask_bytes;
      const auto [lo, hi] = fold_range(fold);
      // Default: up-weight mispredicted pairs; the literal printed sign does
      // the opposite and is kept behind the flag.
      const double on_mis = params.literal_phi_sign ? std::exp(-alpha) : std::exp(alpha);
      const double on_cor = params.literal_phi_sign ? std::exp(alpha) : std::exp(-alpha);
      double z = 0.0;
      for (std::size_t i = lo; i < hi; ++i) {
        const int mis = (mask[i / 8] >> (i % 8)) & 1;
        d[i] *= mis ? on_mis : on_cor;
        z += d[i];
      }
      for (std::size_t i = lo; i < hi; ++i) d[i] /= z;
    } else {
      ++fold;
      if (fold >= folds) {
        res.warning = "training folds exhausted after " + std::to_string(round) + " rounds with " +
                      std::to_string(res.chosen.size()) + " of " + std::to_string(params.n_bits) +
                      " bits selected";
        break;
      }
      reset_fold(fold);
    }
  }

  if (res.warning.empty() && res.chosen.size() < params.n_bits)
    res.warning = "candidates exhausted with " + std::to_string(res.chosen.size()) + " of " +
                  std::to_string(params.n_bits) + " bits selected";
  return res;
}

}  // namespace rmgd
