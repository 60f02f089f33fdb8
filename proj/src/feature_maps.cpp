#include "rmgd/feature_maps.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace rmgd {

namespace {
const std::array<std::string, kMapCount> kMapNames = {
    "Int",   "XPart", "YPart", "Mag",   "Ori",   "Chan1", "Chan2",
    "Chan3", "Chan4", "Chan5", "Chan6", "Chan7", "Chan8"};
}

const std::string& map_name(MapId m) { return kMapNames[static_cast<int>(m)]; }

MapId map_from_name(const std::string& name) {
  for (int i = 0; i < kMapCount; ++i)
    if (kMapNames[i] == name) return static_cast<MapId>(i);
  throw ConfigError("unknown feature map: " + name);
}

std::array<double, kOrientationBins> soft_assign_orientation(double mag, double theta) {
  std::array<double, kOrientationBins> w{};
  if (mag == 0.0) return w;
  const double bin_width = std::numbers::pi / 4.0;
  const double u = theta / bin_width - 0.5;  // bin c's center sits at u == c
  const double fl = std::floor(u);
  const double frac = u - fl;
  int b0 = static_cast<int>(fl);
  b0 = ((b0 % kOrientationBins) + kOrientationBins) % kOrientationBins;
  const int b1 = (b0 + 1) % kOrientationBins;
  w[b0] = mag * (1.0 - frac);
  w[b1] += mag * frac;
  return w;
}

FeatureStack compute_feature_stack(const Patch& p) {
  const int k = p.k();
  FeatureStack fs;
  for (auto& m : fs.maps) m = Grid2D<double>(k, k, 0.0);

  fs[MapId::Int] = p.pixels;

  const auto& v = p.pixels;
  auto clampi = [k](int x) { return x < 0 ? 0 : (x >= k ? k - 1 : x); };
  const double two_pi = 2.0 * std::numbers::pi;

  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const double gx = (v(i, clampi(j + 1)) - v(i, clampi(j - 1))) / 2.0;
      const double gy = (v(clampi(i + 1), j) - v(clampi(i - 1), j)) / 2.0;
      const double mag = std::sqrt(gx * gx + gy * gy);
      double theta = std::atan2(gy, gx);
      if (theta < 0) theta += two_pi;
      if (theta >= two_pi) theta = 0.0;
      fs[MapId::XPart](i, j) = gx;
      fs[MapId::YPart](i, j) = gy;
      fs[MapId::Mag](i, j) = mag;
      fs[MapId::Ori](i, j) = theta;
      const auto w = soft_assign_orientation(mag, theta);
      for (int c = 0; c < kOrientationBins; ++c)
        fs.maps[static_cast<int>(MapId::Chan1) + c](i, j) = w[c];
    }
  }
  return fs;
}

std::string map_csv(const Grid2D<double>& map) {
  std::ostringstream out;
  for (int i = 0; i < map.rows(); ++i) {
    for (int j = 0; j < map.cols(); ++j) {
      if (j) out << ',';
      out << format_double(map(i, j));
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace rmgd
