#include "rmgd/group_optimizer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <sstream>

namespace rmgd {

DistanceVector group_distance_vector(const Descriptor& da, const Descriptor& db,
                                     const DescriptorLayout& layout) {
  if (da.words.size() != layout.total_words || db.words.size() != layout.total_words)
    throw DataError("descriptors do not match the model layout");
  DistanceVector out(layout.group_count());
  for (std::size_t g = 0; g < layout.group_count(); ++g) {
    const std::uint64_t* wa = da.words.data() + layout.group_word_begin[g];
    const std::uint64_t* wb = db.words.data() + layout.group_word_begin[g];
    std::uint32_t dist = 0;
    for (std::uint32_t i = 0; i < layout.group_words[g]; ++i)
      dist += static_cast<std::uint32_t>(std::popcount(wa[i] ^ wb[i]));
    out[g] = dist;
  }
  return out;
}

double weighted_distance(const Descriptor& da, const Descriptor& db, const WeightVector& w,
                         const DescriptorLayout& layout) {
  if (w.w.size() != layout.group_count()) throw DataError("weight vector does not match layout");
  if (da.words.size() != layout.total_words || db.words.size() != layout.total_words)
    throw DataError("descriptors do not match the model layout");
  double total = 0.0;
  for (std::size_t g = 0; g < layout.group_count(); ++g) {
    const double wg = w.w[g];
    if (wg == 0.0) continue;
    const std::uint64_t* wa = da.words.data() + layout.group_word_begin[g];
    const std::uint64_t* wb = db.words.data() + layout.group_word_begin[g];
    std::uint32_t dist = 0;
    for (std::uint32_t i = 0; i < layout.group_words[g]; ++i)
      dist += static_cast<std::uint32_t>(std::popcount(wa[i] ^ wb[i]));
    total += wg * dist;
  }
  return total;
}

std::size_t WeightVector::support_size() const {
  std::size_t n = 0;
  for (double v : w) n += v > 0.0;
  return n;
}

double WeightVector::l1_norm() const {
  double s = 0.0;
  for (double v : w) s += std::abs(v);
  return s;
}

std::string TrainingLog::csv() const {
  std::ostringstream out;
  out << "iteration,loss,support,l1_norm\n";
  for (const auto& r : rows)
    out << r.iteration << ',' << format_double(r.loss) << ',' << r.support << ','
        << format_double(r.l1_norm) << '\n';
  return out.str();
}

namespace {

std::size_t group_count_of(std::span<const RankingInstance> instances) {
  if (instances.empty()) throw ConfigError("weight training requires at least one instance");
  const std::size_t m = instances.front().delta.size();
  for (const auto& inst : instances)
    if (inst.delta.size() != m) throw DataError("ranking instances of mixed dimension");
  return m;
}

inline double dot(std::span<const double> w, const std::vector<std::int32_t>& delta) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * delta[i];
  return s;
}

}  // namespace

double l2_objective(std::span<const RankingInstance> instances, std::span<const double> w,
                    double mu2) {
  double loss = 0.0;
  for (const auto& inst : instances) loss += hinge(dot(w, inst.delta));
  loss /= static_cast<double>(instances.size());
  double reg = 0.0;
  for (double v : w) reg += v * v;
  return 0.5 * mu2 * reg + loss;
}

WeightVector train_l2(std::span<const RankingInstance> instances, const L2Params& params,
                      TrainingLog* log) {
  if (params.mu2 <= 0) throw ConfigError("mu2 must be positive");
  if (params.epochs < 1) throw ConfigError("epochs must be >= 1");
  const std::size_t m = group_count_of(instances);
  const double lambda = params.mu2;

  std::vector<double> w(m, 0.0);
  std::vector<double> best_w = w;
  double best_obj = l2_objective(instances, w, params.mu2);

  std::vector<std::size_t> order(instances.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(params.seed);

  std::uint64_t t = 0;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t idx : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const auto& delta = instances[idx].delta;
      const bool active = dot(w, delta) >= -1.0;  // the kink takes the Delta branch
      for (std::size_t i = 0; i < m; ++i) {
        double g = lambda * w[i];
        if (active) g += delta[i];
        w[i] -= eta * g;
        if (w[i] < 0.0) w[i] = 0.0;
      }
      if (log && params.log_every && t % params.log_every == 0) {
        WeightVector tmp{w};
        log->rows.push_back({t, hinge(dot(w, delta)), tmp.support_size(), tmp.l1_norm()});
      }
    }
    const double obj = l2_objective(instances, w, params.mu2);
    if (obj < best_obj) {
      best_obj = obj;
      best_w = w;
    }
    if (log && !params.log_every) {
      WeightVector tmp{w};
      log->rows.push_back({t, obj, tmp.support_size(), tmp.l1_norm()});
    }
  }
  return WeightVector{std::move(best_w)};
}

WeightVector train_l1_rda(std::span<const RankingInstance> instances, const RdaParams& params,
                          TrainingLog* log) {
  if (params.mu1 <= 0) throw ConfigError("mu1 must be positive");
  if (params.gamma <= 0) throw ConfigError("gamma must be positive");
  const std::size_t m = group_count_of(instances);

  std::vector<double> w(m, 0.0);
  std::vector<double> gsum(m, 0.0);  // running sum of subgradients
  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<std::size_t> pick(0, instances.size() - 1);

  for (std::uint64_t t = 1; t <= params.iterations; ++t) {
    const auto& delta = instances[pick(rng)].delta;
    const double z = dot(w, delta);
    if (z >= -1.0) {  // hinge active (the kink takes the Delta branch)
      for (std::size_t i = 0; i < m; ++i) gsum[i] += delta[i];
    }
    const double scale = std::sqrt(static_cast<double>(t)) / params.gamma;
    for (std::size_t i = 0; i < m; ++i) {
      const double gbar = gsum[i] / static_cast<double>(t);
      const double v = -scale * (gbar + params.mu1);
      w[i] = v > 0.0 ? v : 0.0;
    }
    if (log && params.log_every && t % params.log_every == 0) {
      WeightVector tmp{w};
      log->rows.push_back({t, hinge(z), tmp.support_size(), tmp.l1_norm()});
    }
  }
  if (log && !params.log_every) {
    WeightVector tmp{w};
    double loss = 0.0;
    for (const auto& inst : instances) loss += hinge(dot(w, inst.delta));
    log->rows.push_back(
        {params.iterations, loss / static_cast<double>(instances.size()), tmp.support_size(), tmp.l1_norm()});
  }
  return WeightVector{std::move(w)};
}

DescriptorModel build_subgroups(const DescriptorModel& model, int per_map_subgroups) {
  if (per_map_subgroups < 1) throw ConfigError("subgroup count must be >= 1");
  DescriptorModel out = model;
  out.groups.clear();
  out.weights.clear();
  for (std::size_t mi = 0; mi < model.maps.size(); ++mi) {
    const std::uint32_t bits = static_cast<std::uint32_t>(model.maps[mi].pairs.size());
    if (bits % static_cast<std::uint32_t>(per_map_subgroups) != 0)
      throw ConfigError("map " + map_name(model.maps[mi].map) + " has " + std::to_string(bits) +
                        " bits, not divisible into " + std::to_string(per_map_subgroups) +
                        " subgroups; choose n_bits divisible by the subgroup count");
    const std::uint32_t len = bits / static_cast<std::uint32_t>(per_map_subgroups);
    for (int s = 0; s < per_map_subgroups; ++s)
      out.groups.push_back(
          {static_cast<int>(mi), static_cast<std::uint32_t>(s) * len, len});
  }
  return out;
}

}  // namespace rmgd
