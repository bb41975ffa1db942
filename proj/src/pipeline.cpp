#include "nvsense/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace nvsense {
namespace {

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  return seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1));
}

}  // namespace

std::vector<Vec3> zone_hyperfine_samples(const Geometry& g, const Zone& zone, double gamma_n, std::size_t n,
                                         std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::vector<Vec3> samples(n);
  for (auto& a : samples) {
    const auto [theta, phi] = sample_zone(engine, zone.theta_min, zone.theta_max);
    const Vec3 r = g.anchor_position + zone_point(theta, phi, zone.radius) - g.nv_position;
    a = hyperfine_from_position(to_nv_frame(r, g), gamma_n);
  }
  return samples;
}

double regime_sde_step(const RegimeSetup& s) {
  if (!(s.block_dt > 0.0)) throw InputError("block_dt must be > 0");
  if (!(s.d_r >= 0.0)) throw InputError("d_r must be >= 0");
  if (s.d_r == 0.0) return s.block_dt;
  const double n = std::ceil(s.block_dt * s.d_r / 1e-2 - 1e-9);
  return s.block_dt / std::max(1.0, n);
}

RegimeCurves regime_curves(const RegimeSetup& s, std::span<const double> t_grid, Execution exec) {
  if (t_grid.empty()) throw InputError("regime curves: empty time grid");
  RegimeCurves out;
  out.t.assign(t_grid.begin(), t_grid.end());
  out.mean_a = zone_average_hyperfine(s.geometry, s.zone, s.gamma_n);
  out.spin = spin_params_for_detuning(out.mean_a, s.omega, s.delta, s.gamma_n, 0.0);
  out.coupling = effective_coupling(out.mean_a, out.spin);
  out.sde_dt = regime_sde_step(s);

  const SpinState rho0 = SpinState::polarized_nv_mixed_target();
  const double t_max = *std::max_element(t_grid.begin(), t_grid.end());

  if (s.trajectories > 0) {
    SphereEnsembleSpec spec;
    spec.sphere = {s.d_r, s.zone.theta_min, s.zone.theta_max, s.zone.radius, out.sde_dt, stream_seed(s.seed, 0)};
    spec.geometry = s.geometry;
    spec.gamma_n = s.gamma_n;
    spec.trajectories = s.trajectories;
    spec.steps_per_block = static_cast<std::size_t>(std::llround(s.block_dt / out.sde_dt));
    spec.sample_stride = std::min(s.sample_stride, spec.steps_per_block);
    spec.blocks = static_cast<std::size_t>(std::ceil(t_max / s.block_dt - 1e-9));
    const auto ensemble = sphere_hyperfine_ensemble(spec, exec);
    const auto mc = monte_carlo_transfer(ensemble, out.spin, rho0, t_grid, exec);
    out.p_montecarlo = mc.probability;
    out.p_montecarlo_se = mc.standard_error;
  } else {
    out.p_montecarlo.assign(t_grid.size(), std::nan(""));
    out.p_montecarlo_se.assign(t_grid.size(), std::nan(""));
  }

  const auto samples = zone_hyperfine_samples(s.geometry, s.zone, s.gamma_n, s.slow_samples, stream_seed(s.seed, 1));

  if (s.d_r > 0.0 && s.stats_steps > 0) {
    SphereDiffusionParams fine{s.d_r, s.zone.theta_min, s.zone.theta_max, s.zone.radius, 1e-2 / s.d_r,
                               stream_seed(s.seed, 2)};
    const auto angles = generate_sphere_trajectory(fine, s.stats_steps);
    const auto h = trajectory_to_hyperfine(angles, s.geometry, s.zone.radius, s.gamma_n);
    out.stats = estimate_stats(h, 10.0 / s.d_r);
  }
  const auto states = lindblad_evolve(build_average_hamiltonian(out.mean_a, out.spin), out.stats, out.spin, rho0,
                                      t_grid);

  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    out.p_fast.push_back(fast_transfer_probability(t_grid[i], out.coupling));
    if (samples.empty()) {
      out.p_slow.push_back(std::nan(""));
      out.p_slow_se.push_back(std::nan(""));
    } else {
      const auto slow = slow_regime_probability(samples, t_grid[i], out.spin);
      out.p_slow.push_back(slow.probability);
      out.p_slow_se.push_back(slow.standard_error);
    }
    out.p_lindblad.push_back(transfer_probability(states[i]));
  }
  return out;
}

}  // namespace nvsense
