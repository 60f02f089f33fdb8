#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "rmgd/bit_selection.hpp"
#include "rmgd/descriptor.hpp"

using namespace rmgd;

namespace {

BitCandidateMatrix make_matrix(const std::vector<std::vector<int>>& rows) {
  BitCandidateMatrix m;
  m.rows = rows.size();
  m.cols = rows.front().size();
  m.words_per_row = (m.cols + 63) / 64;
  m.bits.assign(m.rows * m.words_per_row, 0);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c)
      if (rows[r][c])
        m.bits[r * m.words_per_row + c / 64] |= std::uint64_t{1} << (c % 64);
  return m;
}

PairSet disjoint_pairs(std::size_t n, const std::vector<std::uint8_t>& labels) {
  PairSet ps;
  for (std::size_t i = 0; i < n; ++i) {
    ps.a.push_back(static_cast<std::uint32_t>(2 * i));
    ps.b.push_back(static_cast<std::uint32_t>(2 * i + 1));
    ps.label.push_back(labels[i]);
  }
  return ps;
}

// Straightforward replay of the selection loop with explicit per-pair weights,
// used as the oracle for select_bits.
struct RefRound {
  std::uint32_t candidate;
  double epsilon;
  bool admitted;
  int fold;
};

std::pair<std::vector<std::uint32_t>, std::vector<RefRound>> reference_select(
    const std::vector<std::vector<int>>& rows, std::span<const std::uint32_t> ids,
    const PairSet& pairs, std::uint32_t n_bits, double t_c, int folds_req) {
  const std::size_t m = pairs.size();
  const int folds = std::min<std::size_t>(static_cast<std::size_t>(folds_req), m);
  auto fold_range = [&](int f) {
    return std::pair(m * static_cast<std::size_t>(f) / folds,
                     m * (static_cast<std::size_t>(f) + 1) / folds);
  };
  std::vector<double> d(m, 0.0);
  auto reset = [&](int f) {
    std::fill(d.begin(), d.end(), 0.0);
    auto [lo, hi] = fold_range(f);
    for (std::size_t i = lo; i < hi; ++i) d[i] = 1.0 / static_cast<double>(hi - lo);
  };
  int fold = 0;
  reset(fold);

  auto mismatch = [&](std::uint32_t c, std::size_t i) {
    const int ba = rows[c][pairs.a[i]], bb = rows[c][pairs.b[i]];
    return (ba == bb ? 1 : 0) != static_cast<int>(pairs.label[i]);
  };
  auto pearson = [&](std::uint32_t x, std::uint32_t y) {
    const std::size_t p = rows[x].size();
    double sx = 0, sy = 0, sxy = 0;
    for (std::size_t i = 0; i < p; ++i) {
      sx += rows[x][i];
      sy += rows[y][i];
      sxy += rows[x][i] * rows[y][i];
    }
    if (sx == 0 || sx == static_cast<double>(p) || sy == 0 || sy == static_cast<double>(p))
      return 1.0;
    const double num = static_cast<double>(p) * sxy - sx * sy;
    return num / (std::sqrt(sx * (p - sx)) * std::sqrt(sy * (p - sy)));
  };

  std::vector<bool> alive(ids.size(), true);
  std::size_t alive_count = ids.size();
  std::vector<std::uint32_t> chosen;
  std::vector<RefRound> rounds;
  while (chosen.size() < n_bits && alive_count > 0) {
    double best = 1e300;
    std::size_t win = ids.size();
    for (std::size_t c = 0; c < ids.size(); ++c) {
      if (!alive[c]) continue;
      double eps = 0.0;
      for (std::size_t i = 0; i < m; ++i)
        if (mismatch(ids[c], i)) eps += d[i];
      if (eps < best) {
        best = eps;
        win = c;
      }
    }
    if (win == ids.size()) break;
    double max_corr = 0.0;
    for (std::uint32_t s : chosen) max_corr = std::max(max_corr, std::abs(pearson(ids[win], s)));
    const bool admitted = max_corr < t_c;
    if (admitted) chosen.push_back(ids[win]);
    alive[win] = false;
    --alive_count;
    rounds.push_back({ids[win], best, admitted, fold});
    if (best < 0.5) {
      const double eps_c = std::clamp(best, 1e-6, 1.0 - 1e-6);
      const double alpha = 0.5 * std::log((1 - eps_c) / eps_c);
      auto [lo, hi] = fold_range(fold);
      double z = 0.0;
      for (std::size_t i = lo; i < hi; ++i) {
        d[i] *= mismatch(ids[win], i) ? std::exp(alpha) : std::exp(-alpha);
        z += d[i];
      }
      double sum = 0.0;
      for (std::size_t i = lo; i < hi; ++i) {
        d[i] /= z;
        sum += d[i];
      }
      // Weights stay a probability distribution.
      REQUIRE(std::abs(sum - 1.0) <= 1e-12);
    } else {
      ++fold;
      if (fold >= folds) break;
      reset(fold);
    }
  }
  return {chosen, rounds};
}

}  // namespace

TEST_CASE("pair_prediction is agreement") {
  CHECK(pair_prediction(1, 1) == 1);
  CHECK(pair_prediction(0, 0) == 1);
  CHECK(pair_prediction(1, 0) == 0);
  CHECK(pair_prediction(0, 1) == 0);
}

TEST_CASE("compute_bit_stats matches a naive recount") {
  std::mt19937_64 rng(8);
  const std::size_t n_cand = 40, n_pairs = 25;
  const std::size_t n_patch = 2 * n_pairs;
  std::vector<std::vector<int>> rows(n_cand, std::vector<int>(n_patch));
  for (auto& r : rows)
    for (auto& b : r) b = static_cast<int>(rng() & 1);
  std::vector<std::uint8_t> labels(n_pairs);
  for (auto& l : labels) l = static_cast<std::uint8_t>(rng() & 1);
  const BitCandidateMatrix mat = make_matrix(rows);
  const MatrixCandidateProvider provider(mat);
  const PairSet pairs = disjoint_pairs(n_pairs, labels);

  const BitStats stats = compute_bit_stats(provider, pairs);
  for (std::size_t c = 0; c < n_cand; ++c) {
    std::size_t mis = 0, ones = 0;
    for (std::size_t i = 0; i < n_pairs; ++i) {
      const int pred = rows[c][2 * i] == rows[c][2 * i + 1] ? 1 : 0;
      mis += pred != static_cast<int>(labels[i]);
    }
    for (int b : rows[c]) ones += static_cast<std::size_t>(b);
    CHECK(stats.error[c] == doctest::Approx(static_cast<double>(mis) / n_pairs));
    CHECK(stats.mean[c] == doctest::Approx(static_cast<double>(ones) / n_patch));
  }
}

TEST_CASE("prefilter keeps the lowest errors, then means nearest one half") {
  BitStats stats;
  stats.error = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  stats.mean = {0.9, 0.5, 0.1, 0.49, 0.5, 0.5, 0.5, 0.5};
  const auto ids = prefilter(stats, 8);
  // Stage 1 keeps errors .1..0.4 (ids 0..3); stage 2 keeps means .5 and .49.
  REQUIRE(ids.size() == 2);
  CHECK(ids[0] == 1);
  CHECK(ids[1] == 3);
}

TEST_CASE("prefilter warns when candidates run short") {
  BitStats stats;
  stats.error = {0.1, 0.2};
  stats.mean = {0.5, 0.5};
  std::string warning;
  const auto ids = prefilter(stats, 100, &warning);
  CHECK(ids.size() == 2);
  CHECK(!warning.empty());
}

TEST_CASE("prefilter breaks ties by candidate id") {
  BitStats stats;
  stats.error = {0.5, 0.5, 0.5, 0.5, 0.1, 0.1, 0.1, 0.1};
  stats.mean = {0.5, 0.5, 0.5, 0.5, 0.4, 0.4, 0.4, 0.4};
  const auto ids = prefilter(stats, 8);
  REQUIRE(ids.size() == 2);
  CHECK(ids[0] == 4);
  CHECK(ids[1] == 5);
}

TEST_CASE("pearson correlation on packed rows") {
  const std::size_t p = 10000;
  std::mt19937_64 rng(4);
  std::vector<std::uint64_t> a((p + 63) / 64, 0), b((p + 63) / 64, 0), na = a;
  std::vector<int> av(p), bv(p);
  for (std::size_t i = 0; i < p; ++i) {
    av[i] = static_cast<int>(rng() & 1);
    bv[i] = static_cast<int>(rng() & 1);
    if (av[i]) a[i / 64] |= std::uint64_t{1} << (i % 64);
    if (bv[i]) b[i / 64] |= std::uint64_t{1} << (i % 64);
    if (!av[i]) na[i / 64] |= std::uint64_t{1} << (i % 64);
  }
  CHECK(pearson_correlation(a, a, p) == doctest::Approx(1.0));
  CHECK(pearson_correlation(a, na, p) == doctest::Approx(-1.0));
  CHECK(std::abs(pearson_correlation(a, b, p)) < 0.05);

  // Two-pass naive oracle.
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < p; ++i) {
    ma += av[i];
    mb += bv[i];
  }
  ma /= p;
  mb /= p;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < p; ++i) {
    sab += (av[i] - ma) * (bv[i] - mb);
    saa += (av[i] - ma) * (av[i] - ma);
    sbb += (bv[i] - mb) * (bv[i] - mb);
  }
  CHECK(pearson_correlation(a, b, p) ==
        doctest::Approx(sab / std::sqrt(saa * sbb)).epsilon(1e-12));

  // Constant rows are maximally redundant by convention.
  std::vector<std::uint64_t> zeros((p + 63) / 64, 0);
  CHECK(pearson_correlation(zeros, b, p) == 1.0);

  std::vector<std::uint64_t> shorter(1, 0);
  CHECK_THROWS_AS(pearson_correlation(shorter, b, p), ConfigError);
}

TEST_CASE("xor correlation scores complements high and duplicates zero") {
  const std::size_t p = 64;
  std::vector<std::uint64_t> a(1, 0), na(1, 0);
  for (std::size_t i = 0; i < p; ++i) {
    if (i % 2) a[0] |= std::uint64_t{1} << i;
    else na[0] |= std::uint64_t{1} << i;
  }
  CHECK(xor_correlation(a, a, p) == 0.0);
  CHECK(xor_correlation(a, na, p) == doctest::Approx(2.0));  // 64 / (sqrt(32)*sqrt(32))
}

TEST_CASE("select_bits replays the reference implementation exactly") {
  std::mt19937_64 rng(12);
  const std::size_t n_cand = 60, n_pairs = 48, n_patch = 2 * n_pairs;
  std::vector<std::vector<int>> rows(n_cand, std::vector<int>(n_patch));
  std::vector<std::uint8_t> labels(n_pairs);
  for (auto& l : labels) l = static_cast<std::uint8_t>(rng() & 1);
  // A few informative candidates among noise.
  for (std::size_t c = 0; c < n_cand; ++c) {
    for (std::size_t i = 0; i < n_pairs; ++i) {
      const int ba = static_cast<int>(rng() & 1);
      int bb;
      if (c < 12) {
        const bool flip = (rng() % 100) < 15;
        bb = (labels[i] == 1) == !flip ? ba : ba ^ 1;
      } else {
        bb = static_cast<int>(rng() & 1);
      }
      rows[c][2 * i] = ba;
      rows[c][2 * i + 1] = bb;
    }
  }
  const BitCandidateMatrix mat = make_matrix(rows);
  const MatrixCandidateProvider provider(mat);
  const PairSet pairs = disjoint_pairs(n_pairs, labels);
  std::vector<std::uint32_t> ids(n_cand);
  for (std::uint32_t i = 0; i < n_cand; ++i) ids[i] = i;

  SelectionParams params;
  params.n_bits = 8;
  params.t_c = 0.6;
  params.folds = 2;
  const SelectionResult got = select_bits(provider, ids, pairs, params);
  const auto [ref_chosen, ref_rounds] = reference_select(rows, ids, pairs, 8, 0.6, 2);

  CHECK(got.chosen == ref_chosen);
  REQUIRE(got.rounds.size() == ref_rounds.size());
  for (std::size_t r = 0; r < ref_rounds.size(); ++r) {
    CHECK(got.rounds[r].candidate == ref_rounds[r].candidate);
    CHECK(got.rounds[r].epsilon == doctest::Approx(ref_rounds[r].epsilon).epsilon(1e-12));
    CHECK(got.rounds[r].admitted == ref_rounds[r].admitted);
    CHECK(got.rounds[r].fold == ref_rounds[r].fold);
  }

  // Determinism: a second run gives the identical result.
  const SelectionResult again = select_bits(provider, ids, pairs, params);
  CHECK(again.chosen == got.chosen);
  CHECK(again.report_csv() == got.report_csv());
}

TEST_CASE("a perfect candidate is selected first and keeps alpha finite") {
  std::mt19937_64 rng(9);
  const std::size_t n_pairs = 30, n_patch = 60;
  std::vector<std::uint8_t> labels(n_pairs);
  for (auto& l : labels) l = static_cast<std::uint8_t>(rng() & 1);
  std::vector<std::vector<int>> rows(10, std::vector<int>(n_patch));
  for (std::size_t c = 0; c < rows.size(); ++c)
    for (std::size_t i = 0; i < n_pairs; ++i) {
      const int ba = static_cast<int>(rng() & 1);
      int bb = static_cast<int>(rng() & 1);
      if (c == 7) bb = labels[i] ? ba : ba ^ 1;  // perfectly predictive
      rows[c][2 * i] = ba;
      rows[c][2 * i + 1] = bb;
    }
  const BitCandidateMatrix mat = make_matrix(rows);
  const MatrixCandidateProvider provider(mat);
  const PairSet pairs = disjoint_pairs(n_pairs, labels);
  std::vector<std::uint32_t> ids(rows.size());
  for (std::uint32_t i = 0; i < ids.size(); ++i) ids[i] = i;

  SelectionParams params;
  params.n_bits = 3;
  params.t_c = 0.9;
  params.folds = 1;
  const SelectionResult res = select_bits(provider, ids, pairs, params);
  REQUIRE(!res.rounds.empty());
  CHECK(res.rounds[0].candidate == 7);
  CHECK(res.rounds[0].epsilon == 0.0);
  for (const auto& r : res.rounds) CHECK(std::isfinite(r.epsilon));
}

TEST_CASE("a duplicated top candidate is rejected by the correlation gate") {
  std::mt19937_64 rng(10);
  const std::size_t n_pairs = 40, n_patch = 80;
  std::vector<std::uint8_t> labels(n_pairs);
  for (auto& l : labels) l = static_cast<std::uint8_t>(rng() & 1);
  std::vector<std::vector<int>> rows(6, std::vector<int>(n_patch));
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const int ba = static_cast<int>(rng() & 1);
    const bool flip = (rng() % 100) < 10;
    const int bb = (labels[i] == 1) == !flip ? ba : ba ^ 1;
    rows[0][2 * i] = rows[1][2 * i] = ba;
    rows[0][2 * i + 1] = rows[1][2 * i + 1] = bb;
    // Distractors predict the wrong label on every pair, so they stay at
    // weighted error 1 under any reweighting.
    for (std::size_t c = 2; c < 6; ++c) {
      const int wa = static_cast<int>(rng() & 1);
      rows[c][2 * i] = wa;
      rows[c][2 * i + 1] = labels[i] ? wa ^ 1 : wa;
    }
  }
  const BitCandidateMatrix mat = make_matrix(rows);
  const MatrixCandidateProvider provider(mat);
  const PairSet pairs = disjoint_pairs(n_pairs, labels);
  std::vector<std::uint32_t> ids = {0, 1, 2, 3, 4, 5};

  SelectionParams params;
  params.n_bits = 2;
  params.t_c = 0.9;
  params.folds = 1;
  const SelectionResult res = select_bits(provider, ids, pairs, params);
  REQUIRE(res.rounds.size() >= 2);
  CHECK(res.rounds[0].candidate == 0);  // tie with 1 broken by id
  CHECK(res.rounds[0].admitted);
  CHECK(res.rounds[1].candidate == 1);
  CHECK_FALSE(res.rounds[1].admitted);
  CHECK(res.rounds[1].max_corr == doctest::Approx(1.0));
}

TEST_CASE("label-independent bits drive fold switching and a short result") {
  std::mt19937_64 rng(11);
  const std::size_t n_cand = 50, n_pairs = 200, n_patch = 2 * n_pairs;
  std::vector<std::uint8_t> labels(n_pairs);
  for (auto& l : labels) l = static_cast<std::uint8_t>(rng() & 1);
  std::vector<std::vector<int>> rows(n_cand, std::vector<int>(n_patch));
  for (auto& r : rows)
    for (auto& b : r) b = static_cast<int>(rng() & 1);
  const BitCandidateMatrix mat = make_matrix(rows);
  const MatrixCandidateProvider provider(mat);
  const PairSet pairs = disjoint_pairs(n_pairs, labels);
  std::vector<std::uint32_t> ids(n_cand);
  for (std::uint32_t i = 0; i < n_cand; ++i) ids[i] = i;

  SelectionParams params;
  params.n_bits = 40;
  params.t_c = 0.25;
  params.folds = 4;
  const SelectionResult res = select_bits(provider, ids, pairs, params);
  bool advanced = false;
  for (const auto& r : res.rounds) advanced |= r.fold > 0;
  const bool exhausted_folds = !res.warning.empty();
  CHECK((advanced || exhausted_folds));
}

TEST_CASE("planted predictors survive the prefilter and are recovered") {
  std::mt19937_64 rng(123);
  const std::size_t n_cand = 100, n_pairs = 800, n_patch = 2 * n_pairs, n_planted = 10;
  std::vector<std::uint8_t> labels(n_pairs);
  for (std::size_t i = 0; i < n_pairs; ++i) labels[i] = i % 2;
  std::vector<std::vector<int>> rows(n_cand, std::vector<int>(n_patch));
  for (std::size_t c = 0; c < n_cand; ++c) {
    for (std::size_t i = 0; i < n_pairs; ++i) {
      int ba, bb;
      if (c < n_planted) {
        ba = static_cast<int>(rng() & 1);
        const bool flip = (rng() % 100) < 10;  // error rate about 0.1
        bb = (labels[i] == 1) == !flip ? ba : ba ^ 1;
      } else {
        // Noise with means pushed away from one half.
        const double q = (c % 2) ? 0.3 : 0.7;
        ba = (static_cast<double>(rng() % 1000) / 1000.0) < q;
        bb = (static_cast<double>(rng() % 1000) / 1000.0) < q;
      }
      rows[c][2 * i] = ba;
      rows[c][2 * i + 1] = bb;
    }
  }
  const BitCandidateMatrix mat = make_matrix(rows);
  const MatrixCandidateProvider provider(mat);
  const PairSet pairs = disjoint_pairs(n_pairs, labels);

  const BitStats stats = compute_bit_stats(provider, pairs);
  const auto survivors = prefilter(stats, n_cand);
  // Exhaustive recount: all planted candidates must be among the survivors.
  for (std::uint32_t c = 0; c < n_planted; ++c) {
    CHECK(stats.error[c] < 0.25);
    CHECK(std::abs(stats.mean[c] - 0.5) < 0.1);
    CHECK(std::find(survivors.begin(), survivors.end(), c) != survivors.end());
  }

  SelectionParams params;
  params.n_bits = n_planted;
  params.t_c = 0.25;
  params.folds = 1;
  const SelectionResult res = select_bits(provider, survivors, pairs, params);
  std::vector<std::uint32_t> chosen = res.chosen;
  std::sort(chosen.begin(), chosen.end());
  std::vector<std::uint32_t> want(n_planted);
  for (std::uint32_t i = 0; i < n_planted; ++i) want[i] = i;
  CHECK(chosen == want);
}
