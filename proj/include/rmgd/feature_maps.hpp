#pragma once

#include <array>
#include <string>

#include "rmgd/patch.hpp"

namespace rmgd {

/// The 13 image-property maps computed from a patch.
enum class MapId : int {
  Int = 0,
  XPart,
  YPart,
  Mag,
  Ori,
  Chan1,
  Chan2,
  Chan3,
  Chan4,
  Chan5,
  Chan6,
  Chan7,
  Chan8,
};

inline constexpr int kMapCount = 13;
inline constexpr int kOrientationBins = 8;

const std::string& map_name(MapId m);
MapId map_from_name(const std::string& name);  // throws ConfigError on unknown name

struct FeatureStack {
  std::array<Grid2D<double>, kMapCount> maps;

  const Grid2D<double>& operator[](MapId m) const { return maps[static_cast<int>(m)]; }
  Grid2D<double>& operator[](MapId m) { return maps[static_cast<int>(m)]; }
};

/// Gradients are central differences with replicated borders; Mag/Ori the
/// polar form of (gx, gy) with Ori wrapped to [0, 2*pi); Chan1..Chan8 split
/// Mag linearly between the two nearest of 8 circular orientation bins, so
/// the channels sum back to Mag at every pixel.
FeatureStack compute_feature_stack(const Patch& p);

/// Weights of `mag` over the 8 orientation bins (centers at (c-0.5)*pi/4).
std::array<double, kOrientationBins> soft_assign_orientation(double mag, double theta);

std::string map_csv(const Grid2D<double>& map);  // debug dump

}  // namespace rmgd
