#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rmgd/common.hpp"

namespace rmgd {

/// One pooling region: a single angular sector of the union of element rings
/// e_inner..e_outer (both inclusive).
struct RegionId {
  std::uint16_t e_inner = 0;
  std::uint16_t e_outer = 0;
  std::uint16_t sector = 0;

  friend auto operator<=>(const RegionId&, const RegionId&) = default;
};

/// Concentric ring/sector decomposition of a k x k patch.
///
/// Pixels are assigned to ring floor(rho) where rho is the Euclidean distance
/// to the continuous patch center ((k-1)/2, (k-1)/2); pixels with rho >= r are
/// outside the sampling disc and belong to no cell.  Sectors are the half-open
/// angular intervals [2*pi*s/t, 2*pi*(s+1)/t) measured from the +x axis.
/// Regions whose pixel count is zero are dropped from `regions`; counts before
/// and after removal are both kept.
struct PoolingGeometry {
  int k = 0;  // patch side
  int t = 0;  // sector divisions (1, 4, 8 or 16)
  int r = 0;  // element ring count = floor(k/2)

  // Per pixel (row-major): cell index e*t + s, or -1 when uncovered.
  std::vector<std::int32_t> pixel_cell;
  // Pixel count per cell, indexed e*t + s.
  std::vector<std::uint32_t> cell_counts;
  // Polar summed-area table over the constant-1 map: count_cum[e*t+s] is the
  // number of covered pixels with ring <= e and sector <= s.
  std::vector<double> count_cum;

  std::vector<RegionId> regions;                 // effective (non-empty), lexicographic order
  std::vector<std::uint32_t> region_pixel_count; // aligned to `regions`

  std::uint64_t formula_region_count() const {
    return static_cast<std::uint64_t>(t) * (static_cast<std::uint64_t>(r) * (r + 1) / 2);
  }
  std::uint64_t formula_pair_count() const {
    std::uint64_t z = formula_region_count();
    return z * (z - 1) / 2;
  }
  std::uint64_t effective_region_count() const { return regions.size(); }
  std::uint64_t effective_pair_count() const {
    std::uint64_t z = regions.size();
    return z * (z - 1) / 2;
  }
  std::uint64_t removed_region_count() const {
    return formula_region_count() - effective_region_count();
  }
};

PoolingGeometry build_geometry(int k, int t);

/// All unordered pairs (a, b) of effective regions with a < b, ordered
/// lexicographically by (a, b).  Entries are indices into geometry.regions.
std::vector<std::pair<std::uint32_t, std::uint32_t>> enumerate_region_pairs(
    const PoolingGeometry& geom);

/// Polar summed-area table of one feature map: cum[e*t+s] is the sum of map
/// values over covered pixels with ring <= e and sector <= s, so any
/// annular-sector region sum takes at most four lookups.
struct CircleIntegral {
  const PoolingGeometry* geom = nullptr;
  std::vector<double> cum;
};

CircleIntegral build_circle_integral(const Grid2D<double>& map, const PoolingGeometry& geom);

double region_sum(const CircleIntegral& ci, const RegionId& rid);
double region_count(const PoolingGeometry& geom, const RegionId& rid);
double region_mean(const CircleIntegral& ci, const RegionId& rid);

/// Pixel -> cell assignment as CSV (row, col, ring, sector), for debugging.
std::string geometry_csv(const PoolingGeometry& geom);

}  // namespace rmgd
