#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rmgd/feature_maps.hpp"

namespace rmgd {

/// All tunable parameters of the pipeline.  Loaded from a JSON file, then
/// individual keys may be overridden from the command line; the hash covers
/// the effective values.
struct RunConfig {
  int patch_size = 32;
  int gaussian_kernel = 7;
  double gaussian_sigma = 2.0;
  int divisions = 8;
  std::vector<MapId> maps = all_maps();

  std::uint32_t n_bits = 256;
  double t_c = 0.25;
  int folds = 4;
  bool literal_eq2 = false;
  bool literal_phi_sign = false;

  std::size_t train_matches = 0;  // 0 = as many as the data allows
  double pair_ratio = 3.0;

  int subgroups = 1;
  double mu1 = 0.05;
  double mu2 = 1.0;
  double gamma = 1000.0;
  std::uint64_t instance_budget = 500000;
  int epochs = 5;

  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency
  std::uint64_t memory_cap_mb = 2048;
  std::uint64_t log_every = 0;

  static std::vector<MapId> all_maps();

  void validate() const;
  std::string canonical_json() const;
  std::string hash() const;  // 16 hex chars over canonical_json
};

RunConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const RunConfig& cfg);

}  // namespace rmgd
