#include "rmgd/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include <json.hpp>

#include "rmgd/parallel.hpp"

namespace rmgd {

int binary_test(const CircleIntegral& ci, const RegionPair& pair) {
  return region_mean(ci, pair.a) < region_mean(ci, pair.b) ? 1 : 0;
}

Grid2D<double> compute_map(const Patch& p, MapId m) {
  if (m == MapId::Int) return p.pixels;

  const int k = p.k();
  const auto& v = p.pixels;
  auto clampi = [k](int x) { return x < 0 ? 0 : (x >= k ? k - 1 : x); };
  const double two_pi = 2.0 * std::numbers::pi;
  Grid2D<double> out(k, k);

  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const double gx = (v(i, clampi(j + 1)) - v(i, clampi(j - 1))) / 2.0;
      const double gy = (v(clampi(i + 1), j) - v(clampi(i - 1), j)) / 2.0;
      switch (m) {
        case MapId::XPart:
          out(i, j) = gx;
          break;
        case MapId::YPart:
          out(i, j) = gy;
          break;
        case MapId::Mag:
          out(i, j) = std::sqrt(gx * gx + gy * gy);
          break;
        default: {
          const double mag = std::sqrt(gx * gx + gy * gy);
          double theta = std::atan2(gy, gx);
          if (theta < 0) theta += two_pi;
          if (theta >= two_pi) theta = 0.0;
          if (m == MapId::Ori) {
            out(i, j) = theta;
          } else {
            const auto w = soft_assign_orientation(mag, theta);
            out(i, j) = w[static_cast<int>(m) - static_cast<int>(MapId::Chan1)];
          }
        }
      }
    }
  }
  return out;
}

RegionMeansMatrix extract_region_means(std::span<const Patch> patches, MapId map,
                                       const PoolingGeometry& geom, int threads) {
  const std::size_t z = geom.regions.size();
  RegionMeansMatrix means(z, patches.size());
  parallel_chunks(patches.size(), 64, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t pi = lo; pi < hi; ++pi) {
      const Grid2D<double> grid = compute_map(patches[pi], map);
      const CircleIntegral ci = build_circle_integral(grid, geom);
      for (std::size_t ri = 0; ri < z; ++ri)
        means.row(ri)[pi] = region_sum(ci, geom.regions[ri]) / geom.region_pixel_count[ri];
    }
  });
  return means;
}

BitCandidateMatrix extract_candidates(std::span<const Patch> patches, MapId map,
                                      const PoolingGeometry& geom, const ExtractOptions& opts) {
  BitCandidateMatrix mat;
  mat.map = map;
  mat.pair_index = enumerate_region_pairs(geom);
  mat.rows = mat.pair_index.size();
  mat.cols = patches.size();
  mat.words_per_row = (mat.cols + 63) / 64;
  mat.excluded_rows = geom.formula_pair_count() - geom.effective_pair_count();

  const std::uint64_t bytes = static_cast<std::uint64_t>(mat.rows) * mat.words_per_row * 8;
  if (bytes > opts.memory_cap_bytes)
    throw ResourceError("candidate matrix needs " + std::to_string(bytes >> 20) +
                        " MiB, above the cap of " + std::to_string(opts.memory_cap_bytes >> 20) +
                        " MiB; process maps separately or in row chunks");

  mat.bits.assign(mat.rows * mat.words_per_row, 0);
  const RegionMeansMatrix means = extract_region_means(patches, map, geom, opts.threads);

  parallel_chunks(mat.rows, 4096, opts.threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t row = lo; row < hi; ++row) {
      const double* ma = means.row(mat.pair_index[row].first);
      const double* mb = means.row(mat.pair_index[row].second);
      std::uint64_t* out = mat.bits.data() + row * mat.words_per_row;
      for (std::size_t col = 0; col < mat.cols; ++col)
        out[col / 64] |= static_cast<std::uint64_t>(ma[col] < mb[col]) << (col % 64);
    }
  });
  return mat;
}

std::size_t DescriptorModel::total_bits() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.len;
  return n;
}

void DescriptorModel::validate() const {
  if (patch_size < 2 || patch_size % 2 != 0) throw DataError("model: bad patch_size");
  if (divisions != 1 && divisions != 4 && divisions != 8 && divisions != 16)
    throw DataError("model: bad divisions");
  const int r = patch_size / 2;
  for (const auto& sb : maps) {
    std::set<RegionPair> uniq;
    for (const auto& pr : sb.pairs) {
      for (const RegionId& rid : {pr.a, pr.b}) {
        if (rid.e_inner > rid.e_outer || rid.e_outer >= r || rid.sector >= divisions)
          throw DataError("model: region id out of range in map " + map_name(sb.map));
      }
      if (!(pr.a < pr.b)) throw DataError("model: region pair not canonical in " + map_name(sb.map));
      if (!uniq.insert(pr).second)
        throw DataError("model: duplicate selected pair in map " + map_name(sb.map));
    }
  }
  // Groups must tile each map's bits exactly and in order.
  std::vector<std::uint32_t> covered(maps.size(), 0);
  for (const auto& g : groups) {
    if (g.map_index < 0 || static_cast<std::size_t>(g.map_index) >= maps.size())
      throw DataError("model: group references unknown map");
    if (g.start != covered[static_cast<std::size_t>(g.map_index)])
      throw DataError("model: group ranges overlap or leave gaps");
    if (g.len == 0) throw DataError("model: empty group");
    covered[static_cast<std::size_t>(g.map_index)] += g.len;
  }
  for (std::size_t i = 0; i < maps.size(); ++i)
    if (covered[i] != maps[i].pairs.size())
      throw DataError("model: groups do not tile map " + map_name(maps[i].map));
  if (!weights.empty()) {
    if (weights.size() != groups.size()) throw DataError("model: weights length != group count");
    for (double w : weights)
      if (!(w >= 0)) throw DataError("model: negative weight");
  }
}

namespace {

nlohmann::json region_to_json(const RegionId& r) {
  return nlohmann::json::array({r.e_inner, r.e_outer, r.sector});
}

RegionId region_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw DataError("model: malformed region triple");
  return RegionId{j[0].get<std::uint16_t>(), j[1].get<std::uint16_t>(),
                  j[2].get<std::uint16_t>()};
}

}  // namespace

void save_model(const std::filesystem::path& path, const DescriptorModel& model) {
  model.validate();
  nlohmann::json j;
  j["version"] = model.format_version;
  j["patch_size"] = model.patch_size;
  j["divisions"] = model.divisions;
  j["gaussian_kernel"] = model.preprocess.gaussian_kernel;
  j["gaussian_sigma"] = model.preprocess.gaussian_sigma;
  j["train_set"] = model.train_set;
  j["config_hash"] = model.config_hash;
  j["seed"] = model.seed;
  j["maps"] = nlohmann::json::array();
  for (const auto& sb : model.maps) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& pr : sb.pairs)
      pairs.push_back(nlohmann::json::array({region_to_json(pr.a), region_to_json(pr.b)}));
    j["maps"].push_back({{"map", map_name(sb.map)}, {"pairs", std::move(pairs)}});
  }
  j["groups"] = nlohmann::json::array();
  for (const auto& g : model.groups)
    j["groups"].push_back({{"map", map_name(model.maps[static_cast<std::size_t>(g.map_index)].map)},
                           {"start", g.start},
                           {"len", g.len}});
  j["weights"] = model.weights;
  write_text_file(path.string(), j.dump(2) + "\n");
}

DescriptorModel load_model(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path.string()));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("model " + path.string() + ": " + e.what());
  }
  DescriptorModel m;
  try {
    m.format_version = j.at("version").get<int>();
    if (m.format_version != 1)
      throw DataError("model: unsupported format version " + std::to_string(m.format_version));
    m.patch_size = j.at("patch_size").get<int>();
    m.divisions = j.at("divisions").get<int>();
    m.preprocess.gaussian_kernel = j.value("gaussian_kernel", 7);
    m.preprocess.gaussian_sigma = j.value("gaussian_sigma", 2.0);
    m.train_set = j.value("train_set", "");
    m.config_hash = j.value("config_hash", "");
    m.seed = j.value("seed", std::uint64_t{0});
    for (const auto& jm : j.at("maps")) {
      SelectedBits sb;
      sb.map = map_from_name(jm.at("map").get<std::string>());
      for (const auto& jp : jm.at("pairs")) {
        if (!jp.is_array() || jp.size() != 2) throw DataError("model: malformed pair");
        sb.pairs.push_back({region_from_json(jp[0]), region_from_json(jp[1])});
      }
      m.maps.push_back(std::move(sb));
    }
    for (const auto& jg : j.at("groups")) {
      GroupRange g;
      const MapId gm = map_from_name(jg.at("map").get<std::string>());
      g.map_index = -1;
      for (std::size_t i = 0; i < m.maps.size(); ++i)
        if (m.maps[i].map == gm) g.map_index = static_cast<int>(i);
      if (g.map_index < 0) throw DataError("model: group references absent map");
      g.start = jg.at("start").get<std::uint32_t>();
      g.len = jg.at("len").get<std::uint32_t>();
      m.groups.push_back(g);
    }
    m.weights = j.value("weights", std::vector<double>{});
  } catch (const nlohmann::json::exception& e) {
    throw DataError("model " + path.string() + ": " + e.what());
  }
  m.validate();
  return m;
}

DescriptorLayout make_layout(const DescriptorModel& model) {
  DescriptorLayout lay;
  for (const auto& g : model.groups) {
    lay.group_word_begin.push_back(lay.total_words);
    const std::uint32_t w = (g.len + 63) / 64;
    lay.group_words.push_back(w);
    lay.group_bits.push_back(g.len);
    lay.total_words += w;
  }
  return lay;
}

DescriptorExtractor::DescriptorExtractor(const DescriptorModel& model)
    : model_(model),
      geom_(build_geometry(model.patch_size, model.divisions)),
      layout_(make_layout(model)) {
  model_.validate();
  for (const auto& sb : model_.maps) {
    MapPlan plan;
    plan.map = sb.map;
    std::vector<RegionId> uniq;
    auto index_of = [&uniq](const RegionId& r) {
      for (std::size_t i = 0; i < uniq.size(); ++i)
        if (uniq[i] == r) return static_cast<std::uint32_t>(i);
      uniq.push_back(r);
      return static_cast<std::uint32_t>(uniq.size() - 1);
    };
    for (const auto& pr : sb.pairs) {
      const std::uint32_t ia = index_of(pr.a);
      const std::uint32_t ib = index_of(pr.b);
      plan.bits.emplace_back(ia, ib);
    }
    plan.regions = std::move(uniq);
    plans_.push_back(std::move(plan));
  }
}

Descriptor DescriptorExtractor::extract(const Patch& p) const {
  if (p.k() != model_.patch_size)
    throw DataError("patch size " + std::to_string(p.k()) + " does not match model patch_size " +
                    std::to_string(model_.patch_size));

  // Per-map bit vectors in pair-list order.
  std::vector<std::vector<std::uint8_t>> map_bits(plans_.size());
  for (std::size_t mi = 0; mi < plans_.size(); ++mi) {
    const MapPlan& plan = plans_[mi];
    const Grid2D<double> grid = compute_map(p, plan.map);
    const CircleIntegral ci = build_circle_integral(grid, geom_);
    std::vector<double> means(plan.regions.size());
    for (std::size_t ri = 0; ri < plan.regions.size(); ++ri)
      means[ri] = region_mean(ci, plan.regions[ri]);
    map_bits[mi].resize(plan.bits.size());
    for (std::size_t bi = 0; bi < plan.bits.size(); ++bi)
      map_bits[mi][bi] = means[plan.bits[bi].first] < means[plan.bits[bi].second] ? 1 : 0;
  }

  Descriptor d;
  d.words.assign(layout_.total_words, 0);
  for (std::size_t gi = 0; gi < model_.groups.size(); ++gi) {
    const GroupRange& g = model_.groups[gi];
    const auto& bits = map_bits[static_cast<std::size_t>(g.map_index)];
    std::uint64_t* base = d.words.data() + layout_.group_word_begin[gi];
    for (std::uint32_t b = 0; b < g.len; ++b)
      base[b / 64] |= static_cast<std::uint64_t>(bits[g.start + b]) << (b % 64);
  }
  return d;
}

std::vector<std::string> descriptor_hex(const Descriptor& d, const DescriptorLayout& layout) {
  static const char* digits = "0123456789abcdef";
  std::vector<std::string> out;
  for (std::size_t gi = 0; gi < layout.group_count(); ++gi) {
    const std::uint64_t* base = d.words.data() + layout.group_word_begin[gi];
    const std::uint32_t nbits = layout.group_bits[gi];
    // First pair maps to the most-significant bit of the hex string.
    std::vector<int> nibbles((nbits + 3) / 4, 0);
    for (std::uint32_t b = 0; b < nbits; ++b)
      if ((base[b / 64] >> (b % 64)) & 1u) nibbles[b / 4] |= 1 << (3 - (b % 4));
    std::string hex(nibbles.size(), '0');
    for (std::size_t n = 0; n < nibbles.size(); ++n) hex[n] = digits[nibbles[n]];
    out.push_back(std::move(hex));
  }
  return out;
}

Descriptor descriptor_from_hex(std::span<const std::string> group_hex,
                               const DescriptorLayout& layout) {
  if (group_hex.size() != layout.group_count())
    throw DataError("descriptor hex: wrong group count");
  Descriptor d;
  d.words.assign(layout.total_words, 0);
  for (std::size_t gi = 0; gi < layout.group_count(); ++gi) {
    const std::uint32_t nbits = layout.group_bits[gi];
    const std::string& hex = group_hex[gi];
    if (hex.size() != (nbits + 3) / 4) throw DataError("descriptor hex: wrong length");
    std::uint64_t* base = d.words.data() + layout.group_word_begin[gi];
    for (std::uint32_t b = 0; b < nbits; ++b) {
      const char c = hex[b / 4];
      int v;
      if (c >= '0' && c <= '9')
        v = c - '0';
      else if (c >= 'a' && c <= 'f')
        v = c - 'a' + 10;
      else
        throw DataError("descriptor hex: invalid character");
      if ((v >> (3 - (b % 4))) & 1) base[b / 64] |= std::uint64_t{1} << (b % 64);
    }
  }
  return d;
}

}  // namespace rmgd
