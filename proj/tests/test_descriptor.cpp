#include <doctest.h>

#include <filesystem>
#include <random>

#include "rmgd/descriptor.hpp"

using namespace rmgd;
namespace fs = std::filesystem;

namespace {

Patch random_patch(int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 255.0);
  Patch p;
  p.pixels = Grid2D<double>(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) p.pixels(i, j) = u(rng);
  p.id = static_cast<std::int64_t>(seed);
  return p;
}

// Small model over the given maps with pairs drawn deterministically from the
// effective enumeration.
DescriptorModel make_model(int k, int t, const std::vector<MapId>& maps, std::size_t bits,
                           std::uint64_t seed) {
  const PoolingGeometry geom = build_geometry(k, t);
  const auto pairs = enumerate_region_pairs(geom);
  DescriptorModel m;
  m.patch_size = k;
  m.divisions = t;
  std::mt19937_64 rng(seed);
  for (MapId map : maps) {
    SelectedBits sb;
    sb.map = map;
    std::vector<std::uint32_t> ids(pairs.size());
    for (std::uint32_t i = 0; i < ids.size(); ++i) ids[i] = i;
    std::shuffle(ids.begin(), ids.end(), rng);
    for (std::size_t i = 0; i < bits; ++i)
      sb.pairs.push_back({geom.regions[pairs[ids[i]].first], geom.regions[pairs[ids[i]].second]});
    m.maps.push_back(std::move(sb));
  }
  for (std::size_t i = 0; i < m.maps.size(); ++i)
    m.groups.push_back({static_cast<int>(i), 0, static_cast<std::uint32_t>(bits)});
  return m;
}

}  // namespace

TEST_CASE("binary_test follows the strict-less rule") {
  const PoolingGeometry g = build_geometry(32, 1);
  // A radial paraboloid gives strictly increasing ring means; the equal-mean
  // case uses a constant map.
  Grid2D<double> bowl(32, 32);
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j)
      bowl(i, j) = (i - 15.5) * (i - 15.5) + (j - 15.5) * (j - 15.5);
  const CircleIntegral ci = build_circle_integral(bowl, g);
  const RegionId inner{0, 3, 0}, outer{10, 15, 0};
  const double mi = region_mean(ci, inner), mo = region_mean(ci, outer);
  REQUIRE(mi != mo);
  const RegionPair fwd = mi < mo ? RegionPair{inner, outer} : RegionPair{outer, inner};
  CHECK(binary_test(ci, fwd) == 1);
  CHECK(binary_test(ci, {fwd.b, fwd.a}) == 0);

  const CircleIntegral cc = build_circle_integral(Grid2D<double>(32, 32, 5.0), g);
  CHECK(binary_test(cc, {inner, outer}) == 0);
  CHECK(binary_test(cc, {outer, inner}) == 0);
}

TEST_CASE("constant patches give all-zero candidate bits") {
  const PoolingGeometry g = build_geometry(32, 1);
  Patch p;
  p.pixels = Grid2D<double>(32, 32, 9.0);
  const BitCandidateMatrix mat = extract_candidates({&p, 1}, MapId::Int, g);
  CHECK(mat.rows == g.effective_pair_count());
  CHECK(mat.cols == 1);
  for (std::size_t r = 0; r < mat.rows; ++r) CHECK(mat.bit(r, 0) == 0);
}

TEST_CASE("extract_candidates is deterministic and matches per-bit recomputation") {
  const PoolingGeometry g = build_geometry(32, 4);
  std::vector<Patch> patches = {random_patch(32, 1), random_patch(32, 2), random_patch(32, 1)};
  const BitCandidateMatrix mat = extract_candidates(patches, MapId::Mag, g);
  CHECK(mat.rows == g.effective_pair_count());
  CHECK(mat.excluded_rows == g.formula_pair_count() - g.effective_pair_count());

  // Identical patches -> identical columns.
  for (std::size_t r = 0; r < mat.rows; r += 97) CHECK(mat.bit(r, 0) == mat.bit(r, 2));

  // Spot-check rows against binary_test computed from scratch.
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> pick_r(0, mat.rows - 1);
  for (int spot = 0; spot < 200; ++spot) {
    const std::size_t r = pick_r(rng);
    const std::size_t c = spot % patches.size();
    const Grid2D<double> map = compute_map(patches[c], MapId::Mag);
    const CircleIntegral ci = build_circle_integral(map, g);
    const RegionPair pr{g.regions[mat.pair_index[r].first], g.regions[mat.pair_index[r].second]};
    CHECK(mat.bit(r, c) == binary_test(ci, pr));
  }
}

TEST_CASE("extract_candidates enforces the memory cap") {
  const PoolingGeometry g = build_geometry(32, 8);
  std::vector<Patch> patches = {random_patch(32, 1)};
  ExtractOptions opts;
  opts.memory_cap_bytes = 1024;
  CHECK_THROWS_AS(extract_candidates(patches, MapId::Int, g, opts), ResourceError);
}

TEST_CASE("model JSON round-trips") {
  const DescriptorModel m = make_model(32, 4, {MapId::Int, MapId::Chan3}, 16, 5);
  const fs::path path = fs::temp_directory_path() / "rmgd_model_test.json";
  save_model(path, m);
  const DescriptorModel r = load_model(path);
  CHECK(r.patch_size == m.patch_size);
  CHECK(r.divisions == m.divisions);
  REQUIRE(r.maps.size() == m.maps.size());
  for (std::size_t i = 0; i < m.maps.size(); ++i) {
    CHECK(r.maps[i].map == m.maps[i].map);
    CHECK(r.maps[i].pairs == m.maps[i].pairs);
  }
  CHECK(r.groups.size() == m.groups.size());
  CHECK(r.weights == m.weights);
  fs::remove(path);
}

TEST_CASE("model validation rejects structural violations") {
  DescriptorModel m = make_model(32, 4, {MapId::Int}, 8, 7);
  SUBCASE("duplicate pair") {
    m.maps[0].pairs[3] = m.maps[0].pairs[1];
    CHECK_THROWS_AS(m.validate(), DataError);
  }
  SUBCASE("non-canonical pair order") {
    std::swap(m.maps[0].pairs[0].a, m.maps[0].pairs[0].b);
    CHECK_THROWS_AS(m.validate(), DataError);
  }
  SUBCASE("groups leave a gap") {
    m.groups[0].len = 4;
    CHECK_THROWS_AS(m.validate(), DataError);
  }
  SUBCASE("negative weight") {
    m.weights.assign(1, -0.5);
    CHECK_THROWS_AS(m.validate(), DataError);
  }
}

TEST_CASE("a constant patch yields the all-zero descriptor") {
  const DescriptorModel m = make_model(32, 8, {MapId::Int, MapId::Mag}, 32, 9);
  const DescriptorExtractor ex(m);
  Patch p;
  p.pixels = Grid2D<double>(32, 32, 77.0);
  const Descriptor d = ex.extract(p);
  for (std::uint64_t w : d.words) CHECK(w == 0);
  const auto hex = descriptor_hex(d, ex.layout());
  for (const auto& h : hex) CHECK(h == std::string(8, '0'));
}

TEST_CASE("a 104-group model packs 104 32-bit strings") {
  std::vector<MapId> all;
  for (int i = 0; i < kMapCount; ++i) all.push_back(static_cast<MapId>(i));
  DescriptorModel m = make_model(32, 8, all, 256, 11);
  // Regroup into 8 subgroups of 32 bits per map.
  m.groups.clear();
  for (std::size_t mi = 0; mi < m.maps.size(); ++mi)
    for (std::uint32_t s = 0; s < 8; ++s)
      m.groups.push_back({static_cast<int>(mi), s * 32, 32});
  m.validate();
  const DescriptorExtractor ex(m);
  const Descriptor d = ex.extract(random_patch(32, 31));
  CHECK(ex.layout().group_count() == 104);
  const auto hex = descriptor_hex(d, ex.layout());
  REQUIRE(hex.size() == 104);
  for (const auto& h : hex) CHECK(h.size() == 8);
}

TEST_CASE("descriptor bits equal the candidate-matrix rows of selected pairs") {
  const PoolingGeometry g = build_geometry(32, 4);
  const auto pairs = enumerate_region_pairs(g);
  std::vector<Patch> patches = {random_patch(32, 41), random_patch(32, 42)};
  const BitCandidateMatrix mat = extract_candidates(patches, MapId::Int, g);

  DescriptorModel m;
  m.patch_size = 32;
  m.divisions = 4;
  SelectedBits sb;
  sb.map = MapId::Int;
  std::vector<std::size_t> chosen = {0, 5, 1000, 40000, 99999, 123456};
  for (std::size_t c : chosen)
    sb.pairs.push_back({g.regions[pairs[c].first], g.regions[pairs[c].second]});
  m.maps.push_back(sb);
  m.groups.push_back({0, 0, static_cast<std::uint32_t>(chosen.size())});

  const DescriptorExtractor ex(m);
  for (std::size_t pi = 0; pi < patches.size(); ++pi) {
    const Descriptor d = ex.extract(patches[pi]);
    for (std::size_t bi = 0; bi < chosen.size(); ++bi) {
      const int want = mat.bit(chosen[bi], pi);
      const int got = static_cast<int>((d.words[bi / 64] >> (bi % 64)) & 1);
      CHECK(got == want);
    }
  }
}

TEST_CASE("swapping a pair's regions flips the bit unless means tie") {
  const PoolingGeometry g = build_geometry(32, 8);
  const Patch p = random_patch(32, 55);
  const Grid2D<double> map = compute_map(p, MapId::Int);
  const CircleIntegral ci = build_circle_integral(map, g);
  std::mt19937_64 rng(66);
  std::uniform_int_distribution<std::size_t> pick(0, g.regions.size() - 1);
  for (int trial = 0; trial < 300; ++trial) {
    const RegionId a = g.regions[pick(rng)];
    const RegionId b = g.regions[pick(rng)];
    if (a == b) continue;
    const int fwd = binary_test(ci, {a, b});
    const int rev = binary_test(ci, {b, a});
    if (region_mean(ci, a) == region_mean(ci, b)) {
      CHECK(fwd == 0);
      CHECK(rev == 0);
    } else {
      CHECK(fwd + rev == 1);
    }
  }
}

TEST_CASE("positive affine intensity changes leave Int bits unchanged") {
  const DescriptorModel m = make_model(32, 8, {MapId::Int}, 64, 13);
  const DescriptorExtractor ex(m);
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> scale(0.1, 3.0), offset(-50.0, 50.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Patch p = random_patch(32, 1000 + static_cast<std::uint64_t>(trial));
    Patch q = p;
    const double a = scale(rng), b = offset(rng);
    for (int i = 0; i < 32; ++i)
      for (int j = 0; j < 32; ++j) q.pixels(i, j) = a * p.pixels(i, j) + b;
    CHECK(ex.extract(p).words == ex.extract(q).words);
  }
}

TEST_CASE("descriptor extraction rejects mismatched patch sizes") {
  const DescriptorModel m = make_model(32, 4, {MapId::Int}, 8, 17);
  const DescriptorExtractor ex(m);
  Patch p;
  p.pixels = Grid2D<double>(16, 16, 1.0);
  CHECK_THROWS_AS(ex.extract(p), DataError);
}

TEST_CASE("hex dump round-trips and puts the first bit in the MSB") {
  const DescriptorModel m = make_model(32, 4, {MapId::Int, MapId::Ori}, 12, 19);
  const DescriptorExtractor ex(m);
  const Descriptor d = ex.extract(random_patch(32, 77));
  const auto hex = descriptor_hex(d, ex.layout());
  REQUIRE(hex.size() == 2);
  CHECK(hex[0].size() == 3);  // 12 bits -> 3 nibbles
  const Descriptor back = descriptor_from_hex(hex, ex.layout());
  CHECK(back.words == d.words);

  // Bit 0 set and nothing else -> "800".
  Descriptor one;
  one.words.assign(ex.layout().total_words, 0);
  one.words[0] = 1;
  CHECK(descriptor_hex(one, ex.layout())[0] == "800");
}
