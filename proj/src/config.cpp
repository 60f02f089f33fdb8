#include "rmgd/config.hpp"

#include <json.hpp>

namespace rmgd {

std::vector<MapId> RunConfig::all_maps() {
  std::vector<MapId> m;
  for (int i = 0; i < kMapCount; ++i) m.push_back(static_cast<MapId>(i));
  return m;
}

void RunConfig::validate() const {
  if (patch_size < 2 || patch_size % 2 != 0 || 64 % patch_size != 0)
    throw ConfigError("patch_size must be even and divide 64");
  if (gaussian_kernel < 1 || gaussian_kernel % 2 == 0)
    throw ConfigError("gaussian_kernel must be odd and positive");
  if (gaussian_sigma <= 0) throw ConfigError("gaussian_sigma must be positive");
  if (divisions != 1 && divisions != 4 && divisions != 8 && divisions != 16)
    throw ConfigError("divisions must be one of {1,4,8,16}");
  if (maps.empty()) throw ConfigError("maps must not be empty");
  for (std::size_t i = 0; i < maps.size(); ++i)
    for (std::size_t j = i + 1; j < maps.size(); ++j)
      if (maps[i] == maps[j]) throw ConfigError("duplicate map in maps list");
  if (n_bits == 0) throw ConfigError("n_bits must be positive");
  if (folds < 1) throw ConfigError("folds must be >= 1");
  if (pair_ratio < 0) throw ConfigError("pair_ratio must be >= 0");
  if (subgroups < 1) throw ConfigError("subgroups must be >= 1");
  if (n_bits % static_cast<std::uint32_t>(subgroups) != 0)
    throw ConfigError("n_bits must be divisible by subgroups");
  if (mu1 <= 0 || mu2 <= 0 || gamma <= 0) throw ConfigError("mu1, mu2 and gamma must be positive");
  if (instance_budget == 0) throw ConfigError("instance_budget must be positive");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (memory_cap_mb == 0) throw ConfigError("memory_cap_mb must be positive");
}

namespace {

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["patch_size"] = c.patch_size;
  j["gaussian_kernel"] = c.gaussian_kernel;
  j["gaussian_sigma"] = c.gaussian_sigma;
  j["divisions"] = c.divisions;
  std::vector<std::string> names;
  for (MapId m : c.maps) names.push_back(map_name(m));
  j["maps"] = names;
  j["n_bits"] = c.n_bits;
  j["t_c"] = c.t_c;
  j["folds"] = c.folds;
  j["literal_eq2"] = c.literal_eq2;
  j["literal_phi_sign"] = c.literal_phi_sign;
  j["train_matches"] = c.train_matches;
  j["pair_ratio"] = c.pair_ratio;
  j["subgroups"] = c.subgroups;
  j["mu1"] = c.mu1;
  j["mu2"] = c.mu2;
  j["gamma"] = c.gamma;
  j["instance_budget"] = c.instance_budget;
  j["epochs"] = c.epochs;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["memory_cap_mb"] = c.memory_cap_mb;
  j["log_every"] = c.log_every;
  return j;
}

}  // namespace

std::string RunConfig::canonical_json() const { return to_json(*this).dump(); }

std::string RunConfig::hash() const { return hex16(fnv1a64(canonical_json())); }

RunConfig load_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path.string()));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  RunConfig c;
  try {
    c.patch_size = j.value("patch_size", c.patch_size);
    c.gaussian_kernel = j.value("gaussian_kernel", c.gaussian_kernel);
    c.gaussian_sigma = j.value("gaussian_sigma", c.gaussian_sigma);
    c.divisions = j.value("divisions", c.divisions);
    if (j.contains("maps")) {
      c.maps.clear();
      for (const auto& n : j.at("maps")) c.maps.push_back(map_from_name(n.get<std::string>()));
    }
    c.n_bits = j.value("n_bits", c.n_bits);
    c.t_c = j.value("t_c", c.t_c);
    c.folds = j.value("folds", c.folds);
    c.literal_eq2 = j.value("literal_eq2", c.literal_eq2);
    c.literal_phi_sign = j.value("literal_phi_sign", c.literal_phi_sign);
    c.train_matches = j.value("train_matches", c.train_matches);
    c.pair_ratio = j.value("pair_ratio", c.pair_ratio);
    c.subgroups = j.value("subgroups", c.subgroups);
    c.mu1 = j.value("mu1", c.mu1);
    c.mu2 = j.value("mu2", c.mu2);
    c.gamma = j.value("gamma", c.gamma);
    c.instance_budget = j.value("instance_budget", c.instance_budget);
    c.epochs = j.value("epochs", c.epochs);
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    c.memory_cap_mb = j.value("memory_cap_mb", c.memory_cap_mb);
    c.log_every = j.value("log_every", c.log_every);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  c.validate();
  return c;
}

void save_config(const std::filesystem::path& path, const RunConfig& cfg) {
  write_text_file(path.string(), to_json(cfg).dump(2) + "\n");
}

}  // namespace rmgd
