#pragma once

#include <cstdint>

#include "rmgd/common.hpp"

namespace rmgd {

/// Preprocessed patch: k x k real-valued intensities.
struct Patch {
  Grid2D<double> pixels;
  std::int64_t id = 0;
  std::int64_t point_id = 0;

  int k() const { return pixels.rows(); }
};

}  // namespace rmgd
