#include "sphere_ensemble.hpp"

#include <bit>
#include <cmath>

namespace nvsense::detail {
namespace {

constexpr double kPi = 3.141592653589793238462643383280;
constexpr double kTwoPi = 2.0 * kPi;
constexpr std::size_t W = kSphereLanes;

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct alignas(64) Lanes {
  std::uint64_t s0[W], s1[W], s2[W], s3[W];
  double theta[W], phi[W];
};

inline std::uint64_t xoshiro_next(std::uint64_t& a0, std::uint64_t& a1, std::uint64_t& a2, std::uint64_t& a3) {
  const std::uint64_t result = a0 + a3;
  const std::uint64_t t = a1 << 17;
  a2 ^= a0;
  a3 ^= a1;
  a1 ^= a2;
  a0 ^= a3;
  a2 ^= t;
  a3 = (a3 << 45) | (a3 >> 19);
  return result;
}

// [0, 1) from the top 52 bits
inline double to_unit(std::uint64_t r) {
  return std::bit_cast<double>((r >> 12) | 0x3FF0000000000000ULL) - 1.0;
}

inline double next_uniform(Lanes& l, std::size_t i) {
  return to_unit(xoshiro_next(l.s0[i], l.s1[i], l.s2[i], l.s3[i]));
}

// Kept apart from cos(x) so the pair is not merged into sincos.
inline double shifted_sin(double x) { return std::cos(x - 0.5 * kPi); }

__attribute__((target_clones("avx512f", "avx2", "default"), noinline))
void step(Lanes& l, double drift, double kick, double lo, double hi) {
#pragma omp simd
    for (int i = 0; i < static_cast<int>(W); ++i) {
      std::uint64_t a0 = l.s0[i], a1 = l.s1[i], a2 = l.s2[i], a3 = l.s3[i];
      const double u1 = 1.0 - to_unit(xoshiro_next(a0, a1, a2, a3));
      const double u2 = to_unit(xoshiro_next(a0, a1, a2, a3));
      l.s0[i] = a0;
      l.s1[i] = a1;
      l.s2[i] = a2;
      l.s3[i] = a3;
      const double r = std::sqrt(-2.0 * std::log(u1));
      const double w1 = r * std::cos(kTwoPi * u2);
      const double w2 = r * shifted_sin(kTwoPi * u2);
      const double ct = std::cos(l.theta[i]);
      const double st = std::sqrt(std::fmax(1.0 - ct * ct, 0.0));
      double th = l.theta[i] + drift * ct / st + kick * w1;
      th = th < lo ? 2.0 * lo - th : th;
      th = th > hi ? 2.0 * hi - th : th;
      th = th < lo ? lo : th;
      l.theta[i] = th;
      l.phi[i] += kick * w2 / st;
    }
}

void advance(Lanes& l, std::size_t steps, double drift, double kick, double lo, double hi) {
  for (std::size_t s = 0; s < steps; ++s) step(l, drift, kick, lo, hi);
}

__attribute__((target_clones("avx512f", "avx2", "default")))
void accumulate(const Lanes& l, const SphereBatch& in, double (&acc)[3][W]) {
  const double* q = in.rotation;
  const double lx = in.lever[0], ly = in.lever[1], lz = in.lever[2];
  const double rad = in.radius;
  const double scale0 = -in.prefactor;
#pragma omp simd
  for (int i = 0; i < static_cast<int>(W); ++i) {
    const double ct = std::cos(l.theta[i]);
    const double st = std::sqrt(std::fmax(1.0 - ct * ct, 0.0));
    const double px = lx + rad * st * std::cos(l.phi[i]);
    const double py = ly + rad * st * shifted_sin(l.phi[i]);
    const double pz = lz + rad * ct;
    const double x = q[0] * px + q[1] * py + q[2] * pz;
    const double y = q[3] * px + q[4] * py + q[5] * pz;
    const double z = q[6] * px + q[7] * py + q[8] * pz;
    const double inv = 1.0 / std::sqrt(x * x + y * y + z * z);
    const double scale = scale0 * inv * inv * inv;
    const double ux = x * inv, uy = y * inv, uz = z * inv;
    acc[0][i] += scale * 3.0 * ux * uz;
    acc[1][i] += scale * 3.0 * uy * uz;
    acc[2][i] += scale * (3.0 * uz * uz - 1.0);
  }
}

}  // namespace

void sphere_batch(const SphereBatch& in, double* out) {
  Lanes l{};
  for (std::size_t i = 0; i < W; ++i) {
    std::uint64_t x = in.seed ^ static_cast<std::uint64_t>(in.first_trajectory + i);
    l.s0[i] = splitmix64(x);
    l.s1[i] = splitmix64(x);
    l.s2[i] = splitmix64(x);
    l.s3[i] = splitmix64(x);
    // Stationary zone law: cos(theta) uniform.
    const double c0 = std::cos(in.theta_min);
    const double c1 = std::cos(in.theta_max);
    const double c = c0 - next_uniform(l, i) * (c0 - c1);
    l.theta[i] = std::acos(c < -1.0 ? -1.0 : (c > 1.0 ? 1.0 : c));
    l.phi[i] = kTwoPi * next_uniform(l, i);
  }

  const double drift = in.d_r * in.dt;
  const double kick = std::sqrt(2.0 * in.d_r * in.dt);
  const std::size_t stride = in.sample_stride == 0 ? 1 : in.sample_stride;
  const std::size_t samples = (in.steps_per_block + stride - 1) / stride;

  for (std::size_t b = 0; b < in.blocks; ++b) {
    double acc[3][W] = {};
    for (std::size_t s = 0; s < in.steps_per_block; s += stride) {
      accumulate(l, in, acc);
      const std::size_t n = s + stride <= in.steps_per_block ? stride : in.steps_per_block - s;
      advance(l, n, drift, kick, in.theta_min, in.theta_max);
    }
    for (std::size_t i = 0; i < in.lanes; ++i)
      for (std::size_t c = 0; c < 3; ++c)
        out[(i * in.blocks + b) * 3 + c] = acc[c][i] / static_cast<double>(samples);
  }
}

}  // namespace nvsense::detail
