#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace rmgd::synth {

/// Parameters of the synthetic patch-correspondence dataset.  Each 3D point
/// is a smooth random prototype (Gaussian blobs on a planar ramp); each
/// observation re-renders it under a small rotation, sub-pixel shift,
/// affine intensity jitter and pixel noise.  The output directory follows the
/// mosaic + info.txt + m50 pair-file layout.
struct SynthParams {
  std::uint64_t seed = 1;
  int points = 1500;
  int obs_per_point = 3;
  int match_pairs = 4000;
  int nonmatch_pairs = 4000;
  std::string pair_file;  // default: m50_<total>.txt

  int blobs = 6;
  double noise_sigma = 6.0;
  double max_shift = 2.5;     // pixels at the 64x64 scale
  double max_rot_deg = 6.0;
  double contrast_lo = 0.85;
  double contrast_hi = 1.18;
  double brightness = 10.0;   // +- uniform offset
};

void write_dataset(const std::filesystem::path& dir, const SynthParams& params);

}  // namespace rmgd::synth
