#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rmgd/descriptor.hpp"

namespace rmgd {

/// Per-group Hamming distances of a descriptor pair.
using DistanceVector = std::vector<std::uint32_t>;

DistanceVector group_distance_vector(const Descriptor& da, const Descriptor& db,
                                     const DescriptorLayout& layout);

inline double hinge(double z) { return z + 1.0 > 0.0 ? z + 1.0 : 0.0; }

/// One pairwise ranking instance: delta = D(matching pair) - D(non-matching pair).
struct RankingInstance {
  std::vector<std::int32_t> delta;
};

struct WeightVector {
  std::vector<double> w;

  std::size_t support_size() const;
  double l1_norm() const;
};

struct TrainingLogRow {
  std::uint64_t iteration = 0;
  double loss = 0.0;
  std::size_t support = 0;
  double l1_norm = 0.0;
};

struct TrainingLog {
  std::vector<TrainingLogRow> rows;
  std::string csv() const;
};

struct L2Params {
  double mu2 = 1.0;  // regularizer weight; the objective is mu2/2*|W|^2 + mean hinge
  int epochs = 5;
  std::uint64_t seed = 1;
  std::uint64_t log_every = 0;  // 0 = log only per epoch
};

/// Projected stochastic subgradient on the L2-regularized ranking hinge.
/// Negative coordinates are clipped to zero after every step; returns the
/// best iterate by full-data objective, evaluated once per epoch.
WeightVector train_l2(std::span<const RankingInstance> instances, const L2Params& params,
                      TrainingLog* log = nullptr);

/// Full-data objective used by train_l2 (exposed for oracle comparisons).
double l2_objective(std::span<const RankingInstance> instances, std::span<const double> w,
                    double mu2);

struct RdaParams {
  double mu1 = 0.05;
  double gamma = 1000.0;
  std::uint64_t iterations = 500000;
  std::uint64_t seed = 1;
  std::uint64_t log_every = 0;
};

/// Regularized dual averaging with soft L1: each coordinate follows
/// w_m = max(-(sqrt(t)/gamma) * (gbar_m + mu1), 0), which yields exact zeros.
WeightVector train_l1_rda(std::span<const RankingInstance> instances, const RdaParams& params,
                          TrainingLog* log = nullptr);

double weighted_distance(const Descriptor& da, const Descriptor& db, const WeightVector& w,
                         const DescriptorLayout& layout);

/// Splits every map's bit range into `per_map_subgroups` contiguous equal
/// groups; any trained weights are dropped since the partition changes.
DescriptorModel build_subgroups(const DescriptorModel& model, int per_map_subgroups);

}  // namespace rmgd
