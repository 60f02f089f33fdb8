#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "rmgd/feature_maps.hpp"

using namespace rmgd;

namespace {

Patch make_patch(int k, const std::function<double(int, int)>& f) {
  Patch p;
  p.pixels = Grid2D<double>(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) p.pixels(i, j) = f(i, j);
  return p;
}

Patch random_patch(int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 255.0);
  return make_patch(k, [&](int, int) { return u(rng); });
}

}  // namespace

TEST_CASE("a constant patch has zero gradients everywhere") {
  const Patch p = make_patch(16, [](int, int) { return 42.0; });
  const FeatureStack fs = compute_feature_stack(p);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) {
      CHECK(fs[MapId::XPart](i, j) == 0.0);
      CHECK(fs[MapId::YPart](i, j) == 0.0);
      CHECK(fs[MapId::Mag](i, j) == 0.0);
      for (int c = 0; c < kOrientationBins; ++c)
        CHECK(fs.maps[static_cast<int>(MapId::Chan1) + c](i, j) == 0.0);
    }
}

TEST_CASE("a horizontal ramp has unit x-gradient in the interior") {
  const Patch p = make_patch(16, [](int, int j) { return static_cast<double>(j); });
  const FeatureStack fs = compute_feature_stack(p);
  for (int i = 0; i < 16; ++i)
    for (int j = 1; j < 15; ++j) {
      CHECK(fs[MapId::XPart](i, j) == doctest::Approx(1.0));
      CHECK(fs[MapId::YPart](i, j) == doctest::Approx(0.0));
      CHECK(fs[MapId::Mag](i, j) == doctest::Approx(1.0));
      CHECK(fs[MapId::Ori](i, j) == doctest::Approx(0.0));
    }
}

TEST_CASE("channels conserve gradient magnitude at every pixel") {
  const Patch p = random_patch(32, 99);
  const FeatureStack fs = compute_feature_stack(p);
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j) {
      double sum = 0.0;
      for (int c = 0; c < kOrientationBins; ++c)
        sum += fs.maps[static_cast<int>(MapId::Chan1) + c](i, j);
      CHECK(std::abs(sum - fs[MapId::Mag](i, j)) <= 1e-9);
      CHECK(fs[MapId::Mag](i, j) >= 0.0);
      CHECK(fs[MapId::Ori](i, j) >= 0.0);
      CHECK(fs[MapId::Ori](i, j) < 2.0 * std::numbers::pi);
    }
}

TEST_CASE("soft assignment hits bin centers, midpoints and the seam") {
  const double pi = std::numbers::pi;
  {
    const auto w = soft_assign_orientation(1.0, pi / 8.0);
    CHECK(w[0] == doctest::Approx(1.0));
    for (int c = 1; c < 8; ++c) CHECK(w[c] == doctest::Approx(0.0));
  }
  {
    const auto w = soft_assign_orientation(1.0, pi / 4.0);
    CHECK(w[0] == doctest::Approx(0.5));
    CHECK(w[1] == doctest::Approx(0.5));
  }
  {
    const auto w = soft_assign_orientation(2.0, 2.0 * pi - 1e-9);
    CHECK(w[7] + w[0] == doctest::Approx(2.0));
    CHECK(w[7] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(w[0] == doctest::Approx(1.0).epsilon(1e-6));
    for (int c = 1; c < 7; ++c) CHECK(w[c] == 0.0);
  }
  {
    const auto w = soft_assign_orientation(0.0, 1.0);
    for (double v : w) CHECK(v == 0.0);
  }
}

TEST_CASE("rotating a patch by 90 degrees permutes gradients and channels") {
  // Radially symmetric bump plus a small tilt so that channels are nonzero.
  const int k = 32;
  const double c = (k - 1) / 2.0;
  const Patch p = make_patch(k, [&](int i, int j) {
    const double r2 = (i - c) * (i - c) + (j - c) * (j - c);
    return 200.0 * std::exp(-r2 / 60.0) + 0.3 * i + 0.1 * j;
  });
  // Counterclockwise: q(i, j) = p(j, k-1-i).
  const Patch q = make_patch(k, [&](int i, int j) { return p.pixels(j, k - 1 - i); });

  const FeatureStack fp = compute_feature_stack(p);
  const FeatureStack fq = compute_feature_stack(q);

  for (int i = 2; i < k - 2; ++i) {
    for (int j = 2; j < k - 2; ++j) {
      const int oi = j, oj = k - 1 - i;  // source pixel of q(i, j)
      CHECK(fq[MapId::XPart](i, j) == doctest::Approx(fp[MapId::YPart](oi, oj)));
      CHECK(fq[MapId::YPart](i, j) == doctest::Approx(-fp[MapId::XPart](oi, oj)));
      CHECK(fq[MapId::Mag](i, j) == doctest::Approx(fp[MapId::Mag](oi, oj)));
      // Rotating the gradient by -pi/2 shifts the soft-assignment bins by
      // exactly two positions.
      for (int ch = 0; ch < kOrientationBins; ++ch) {
        const int src = (ch + 2) % kOrientationBins;
        CHECK(fq.maps[static_cast<int>(MapId::Chan1) + ch](i, j) ==
              doctest::Approx(fp.maps[static_cast<int>(MapId::Chan1) + src](oi, oj)));
      }
    }
  }
}

TEST_CASE("feature stacks are deterministic") {
  const Patch p = random_patch(32, 1234);
  const FeatureStack a = compute_feature_stack(p);
  const FeatureStack b = compute_feature_stack(p);
  for (int m = 0; m < kMapCount; ++m) CHECK(a.maps[m] == b.maps[m]);
}

TEST_CASE("map names round-trip") {
  for (int m = 0; m < kMapCount; ++m)
    CHECK(map_from_name(map_name(static_cast<MapId>(m))) == static_cast<MapId>(m));
  CHECK_THROWS_AS(map_from_name("Bogus"), ConfigError);
}

TEST_CASE("map csv emits one row per grid row") {
  Grid2D<double> g(3, 4, 1.5);
  const std::string csv = map_csv(g);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
