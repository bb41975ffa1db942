#pragma once

// End-to-end regime comparison for a target diffusing on a spherical zone:
// Monte Carlo over sphere trajectories next to the fast, slow and Lindblad
// predictions built from the same geometry.

#include <cstdint>
#include <span>
#include <vector>

#include "nvsense/detection.hpp"

namespace nvsense {

struct RegimeSetup {
  Geometry geometry = Geometry::bulk(2e-9, 1.5e-9);
  Zone zone{0.3, 1.54, 1.2e-9};
  double omega = units::two_pi * 1e6;  // rad/s
  double delta = 0.0;                  // averaged detuning, rad/s
  double gamma_n = units::gamma_fluorine19;
  double d_r = 0.0;                    // 1/s
  double block_dt = 1e-7;              // s, H held constant over a block
  std::size_t sample_stride = 1;
  std::size_t trajectories = 500;
  std::size_t slow_samples = 10000;
  std::size_t stats_steps = 2000000;   // fine trajectory used for Gamma
  std::uint64_t seed = 1;
};

struct RegimeCurves {
  std::vector<double> t;
  std::vector<double> p_montecarlo;
  std::vector<double> p_montecarlo_se;
  std::vector<double> p_fast;
  std::vector<double> p_slow;
  std::vector<double> p_slow_se;
  std::vector<double> p_lindblad;
  SpinParams spin;
  Vec3 mean_a = Vec3::Zero();
  EffectiveCoupling coupling;
  HyperfineStats stats;
  double sde_dt = 0.0;
};

/// Hyperfine vectors for n independent positions drawn from the zone law.
std::vector<Vec3> zone_hyperfine_samples(const Geometry& g, const Zone& zone, double gamma_n, std::size_t n,
                                         std::uint64_t seed);

/// SDE step: the largest dt <= 1e-2 / d_r dividing block_dt.
double regime_sde_step(const RegimeSetup& s);

/// Grid times must be multiples of block_dt. With zero trajectories the
/// Monte Carlo columns are NaN; with zero slow samples so is p_slow.
RegimeCurves regime_curves(const RegimeSetup& s, std::span<const double> t_grid,
                           Execution exec = Execution::parallel);

}  // namespace nvsense
