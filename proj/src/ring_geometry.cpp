#include "rmgd/ring_geometry.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace rmgd {

PoolingGeometry build_geometry(int k, int t) {
  if (t != 1 && t != 4 && t != 8 && t != 16)
    throw ConfigError("divisions must be one of {1,4,8,16}, got " + std::to_string(t));
  if (k < 2 || k % 2 != 0)
    throw ConfigError("patch side must be even and >= 2, got " + std::to_string(k));

  PoolingGeometry g;
  g.k = k;
  g.t = t;
  g.r = k / 2;

  const double cx = (k - 1) / 2.0;
  const double cy = (k - 1) / 2.0;
  const double two_pi = 2.0 * std::numbers::pi;

  g.pixel_cell.assign(static_cast<std::size_t>(k) * k, -1);
  g.cell_counts.assign(static_cast<std::size_t>(g.r) * t, 0);

  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const double dy = i - cy;
      const double dx = j - cx;
      const double rho = std::sqrt(dx * dx + dy * dy);
      if (rho >= g.r) continue;
      const int e = static_cast<int>(std::floor(rho));
      double theta = std::atan2(dy, dx);
      if (theta < 0) theta += two_pi;
      int s = static_cast<int>(std::floor(t * theta / two_pi));
      if (s >= t) s = t - 1;  // guards atan2 rounding at the 2*pi seam
      const int cell = e * t + s;
      g.pixel_cell[static_cast<std::size_t>(i) * k + j] = cell;
      ++g.cell_counts[cell];
    }
  }

  // Polar SAT over the constant-1 map.
  g.count_cum.assign(g.cell_counts.size(), 0.0);
  for (int e = 0; e < g.r; ++e) {
    for (int s = 0; s < t; ++s) {
      double v = g.cell_counts[static_cast<std::size_t>(e) * t + s];
      if (s > 0) v += g.count_cum[static_cast<std::size_t>(e) * t + s - 1];
      if (e > 0) v += g.count_cum[static_cast<std::size_t>(e - 1) * t + s];
      if (e > 0 && s > 0) v -= g.count_cum[static_cast<std::size_t>(e - 1) * t + s - 1];
      g.count_cum[static_cast<std::size_t>(e) * t + s] = v;
    }
  }

  // Enumerate regions, dropping empty ones (possible in the innermost rings
  // for fine divisions).
  for (int e1 = 0; e1 < g.r; ++e1) {
    for (int e2 = e1; e2 < g.r; ++e2) {
      for (int s = 0; s < t; ++s) {
        std::uint32_t cnt = 0;
        for (int e = e1; e <= e2; ++e) cnt += g.cell_counts[static_cast<std::size_t>(e) * t + s];
        if (cnt == 0) continue;
        g.regions.push_back({static_cast<std::uint16_t>(e1), static_cast<std::uint16_t>(e2),
                             static_cast<std::uint16_t>(s)});
        g.region_pixel_count.push_back(cnt);
      }
    }
  }
  return g;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> enumerate_region_pairs(
    const PoolingGeometry& geom) {
  const std::uint32_t z = static_cast<std::uint32_t>(geom.regions.size());
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  pairs.reserve(static_cast<std::size_t>(z) * (z - 1) / 2);
  for (std::uint32_t a = 0; a < z; ++a)
    for (std::uint32_t b = a + 1; b < z; ++b) pairs.emplace_back(a, b);
  return pairs;
}

CircleIntegral build_circle_integral(const Grid2D<double>& map, const PoolingGeometry& geom) {
  if (map.rows() != geom.k || map.cols() != geom.k)
    throw DataError("map dimensions do not match geometry");

  CircleIntegral ci;
  ci.geom = &geom;
  const int t = geom.t;
  std::vector<double> cell(static_cast<std::size_t>(geom.r) * t, 0.0);
  const double* v = map.data();
  for (std::size_t p = 0; p < geom.pixel_cell.size(); ++p) {
    const std::int32_t c = geom.pixel_cell[p];
    if (c >= 0) cell[static_cast<std::size_t>(c)] += v[p];
  }
  ci.cum.assign(cell.size(), 0.0);
  for (int e = 0; e < geom.r; ++e) {
    for (int s = 0; s < t; ++s) {
      double acc = cell[static_cast<std::size_t>(e) * t + s];
      if (s > 0) acc += ci.cum[static_cast<std::size_t>(e) * t + s - 1];
      if (e > 0) acc += ci.cum[static_cast<std::size_t>(e - 1) * t + s];
      if (e > 0 && s > 0) acc -= ci.cum[static_cast<std::size_t>(e - 1) * t + s - 1];
      ci.cum[static_cast<std::size_t>(e) * t + s] = acc;
    }
  }
  return ci;
}

namespace {

inline double sat_region(const std::vector<double>& cum, int t, const RegionId& rid) {
  const int e1 = rid.e_inner, e2 = rid.e_outer, s = rid.sector;
  double v = cum[static_cast<std::size_t>(e2) * t + s];
  if (s > 0) v -= cum[static_cast<std::size_t>(e2) * t + s - 1];
  if (e1 > 0) {
    v -= cum[static_cast<std::size_t>(e1 - 1) * t + s];
    if (s > 0) v += cum[static_cast<std::size_t>(e1 - 1) * t + s - 1];
  }
  return v;
}

}  // namespace

double region_sum(const CircleIntegral& ci, const RegionId& rid) {
  return sat_region(ci.cum, ci.geom->t, rid);
}

double region_count(const PoolingGeometry& geom, const RegionId& rid) {
  return sat_region(geom.count_cum, geom.t, rid);
}

double region_mean(const CircleIntegral& ci, const RegionId& rid) {
  const double cnt = region_count(*ci.geom, rid);
  if (cnt <= 0.0)
    throw DataError("degenerate region (no pixels): ring " + std::to_string(rid.e_inner) + ".." +
                    std::to_string(rid.e_outer) + " sector " + std::to_string(rid.sector));
  return region_sum(ci, rid) / cnt;
}

std::string geometry_csv(const PoolingGeometry& geom) {
  std::ostringstream out;
  out << "row,col,ring,sector\n";
  for (int i = 0; i < geom.k; ++i) {
    for (int j = 0; j < geom.k; ++j) {
      const std::int32_t c = geom.pixel_cell[static_cast<std::size_t>(i) * geom.k + j];
      if (c < 0)
        out << i << ',' << j << ",-1,-1\n";
      else
        out << i << ',' << j << ',' << c / geom.t << ',' << c % geom.t << '\n';
    }
  }
  return out.str();
}

}  // namespace rmgd
