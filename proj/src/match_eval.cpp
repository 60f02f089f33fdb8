#include "rmgd/match_eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "rmgd/parallel.hpp"

namespace rmgd {

namespace {

struct LabelCounts {
  std::size_t pos = 0, neg = 0;
};

LabelCounts count_labels(const ScoredPairs& sp) {
  LabelCounts c;
  for (const auto& p : sp) (p.label ? c.pos : c.neg)++;
  if (c.pos == 0 || c.neg == 0)
    throw DataError("scored pairs must contain at least one positive and one negative");
  return c;
}

}  // namespace

std::pair<double, double> rates_at_threshold(const ScoredPairs& sp, double threshold) {
  const LabelCounts c = count_labels(sp);
  std::size_t tp = 0, fp = 0;
  for (const auto& p : sp) {
    if (p.distance <= threshold) (p.label ? tp : fp)++;
  }
  return {static_cast<double>(tp) / static_cast<double>(c.pos),
          static_cast<double>(fp) / static_cast<double>(c.neg)};
}

RocCurve roc(const ScoredPairs& sp) {
  const LabelCounts c = count_labels(sp);
  std::vector<std::pair<double, std::uint8_t>> sorted;
  sorted.reserve(sp.size());
  for (const auto& p : sp) {
    if (!std::isfinite(p.distance) || p.distance < 0)
      throw DataError("distances must be finite and nonnegative");
    sorted.emplace_back(p.distance, p.label);
  }
  std::sort(sorted.begin(), sorted.end());

  RocCurve curve;
  std::size_t tp = 0, fp = 0, i = 0;
  while (i < sorted.size()) {
    const double thr = sorted[i].first;
    while (i < sorted.size() && sorted[i].first == thr) {
      (sorted[i].second ? tp : fp)++;
      ++i;
    }
    curve.push_back({thr, static_cast<double>(tp) / static_cast<double>(c.pos),
                     static_cast<double>(fp) / static_cast<double>(c.neg)});
  }
  return curve;
}

double fpr_at_recall(const ScoredPairs& sp, double recall) {
  if (!(recall > 0.0 && recall <= 1.0)) throw ConfigError("recall must be in (0, 1]");
  const RocCurve curve = roc(sp);
  for (const auto& pt : curve)
    if (pt.tpr >= recall) return pt.fpr;
  return 1.0;  // unreachable: the last point always has TPR 1
}

std::string roc_csv(const RocCurve& curve, double fpr95, const std::string& header_comment) {
  std::ostringstream out;
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << "threshold,tpr,fpr\n";
  for (const auto& pt : curve)
    out << format_double(pt.threshold) << ',' << format_double(pt.tpr) << ','
        << format_double(pt.fpr) << '\n';
  out << "fpr_at_95," << format_double(fpr95) << '\n';
  return out.str();
}

ScoredPairs score_dataset(const PairDataset& ds,
                          const std::function<Patch(std::uint32_t)>& patch_by_id,
                          const DescriptorExtractor& extractor, const WeightVector& weights,
                          int threads) {
  if (!extractor.model().finalized())
    throw ConfigError("model has no trained weights; run weight training first");

  // Describe each distinct patch once.
  std::vector<std::uint32_t> ids;
  ids.reserve(ds.pairs.size() * 2);
  for (const auto& p : ds.pairs) {
    ids.push_back(p.a);
    ids.push_back(p.b);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  std::unordered_map<std::uint32_t, std::size_t> slot;
  slot.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) slot[ids[i]] = i;

  std::vector<Descriptor> cache(ids.size());
  parallel_chunks(ids.size(), 64, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) cache[i] = extractor.extract(patch_by_id(ids[i]));
  });

  ScoredPairs out(ds.pairs.size());
  parallel_chunks(ds.pairs.size(), 1024, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& p = ds.pairs[i];
      out[i] = {weighted_distance(cache[slot.at(p.a)], cache[slot.at(p.b)], weights,
                                  extractor.layout()),
                p.label};
    }
  });
  return out;
}

std::vector<NnMatch> nn_match(std::span<const Descriptor> queries,
                              std::span<const Descriptor> targets, const WeightVector& weights,
                              const DescriptorLayout& layout) {
  if (targets.empty()) throw ConfigError("nn_match: empty target set");
  std::vector<NnMatch> out;
  out.reserve(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_t = 0;
    for (std::size_t t = 0; t < targets.size(); ++t) {
      const double d = weighted_distance(queries[q], targets[t], weights, layout);
      if (d < best) {
        best = d;
        best_t = t;
      }
    }
    out.push_back({q, best_t, best});
  }
  return out;
}

}  // namespace rmgd
