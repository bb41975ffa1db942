#pragma once

// Batched sphere-diffusion + hyperfine kernel. Plain arrays only: this
// header is shared with a translation unit built with different floating
// point flags.

#include <cstddef>
#include <cstdint>

namespace nvsense::detail {

inline constexpr std::size_t kSphereLanes = 8;

struct SphereBatch {
  double d_r = 0.0;
  double theta_min = 0.0;
  double theta_max = 0.0;
  double dt = 0.0;
  double radius = 0.0;
  std::uint64_t seed = 0;
  std::size_t first_trajectory = 0;
  std::size_t lanes = kSphereLanes;  // <= kSphereLanes
  std::size_t blocks = 0;
  std::size_t steps_per_block = 0;
  std::size_t sample_stride = 1;
  double lever[3] = {0, 0, 0};  // anchor - NV, lab frame
  double rotation[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};  // lab -> NV frame, row-major
  double prefactor = 0.0;       // mu0 gamma_e gamma_n hbar / 4 pi
};

/// Writes block-averaged hyperfine vectors, out[(lane * blocks + b) * 3 + c].
/// Trajectory k uses its own stream seeded from seed ^ k.
void sphere_batch(const SphereBatch& in, double* out);

}  // namespace nvsense::detail
