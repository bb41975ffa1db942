#include "nvsense/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "nvsense/diagnostics.hpp"
#include "sphere_ensemble.hpp"

namespace nvsense {

SpringForceField::SpringForceField(const SpringNetwork& net, std::size_t n_atoms)
    : n_atoms_(n_atoms), kappa_(net.kappa), pairs_(net.pairs) {
  std::vector<std::size_t> degree(n_atoms, 0);
  for (const auto& s : pairs_) {
    if (s.i >= n_atoms || s.j >= n_atoms) throw InputError("spring references atom outside the molecule");
    ++degree[s.i];
    ++degree[s.j];
  }
  offsets_.assign(n_atoms + 1, 0);
  for (std::size_t a = 0; a < n_atoms; ++a) offsets_[a + 1] = offsets_[a] + degree[a];
  neighbours_.resize(offsets_.back());
  rest_.resize(offsets_.back());
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (const auto& s : pairs_) {
    neighbours_[fill[s.i]] = s.j;
    rest_[fill[s.i]++] = s.rest_length;
    neighbours_[fill[s.j]] = s.i;
    rest_[fill[s.j]++] = s.rest_length;
  }
}

double SpringForceField::compute_serial(std::span<const Vec3> x, std::span<Vec3> f) const {
  for (auto& v : f) v.setZero();
  double energy = 0.0;
  for (const auto& s : pairs_) {
    const Vec3 d = x[s.j] - x[s.i];
    const double r = d.norm();
    const double stretch = r - s.rest_length;
    energy += 0.5 * kappa_ * stretch * stretch;
    if (r > 0.0) {
      const Vec3 fi = (kappa_ * stretch / r) * d;
      f[s.i] += fi;
      f[s.j] -= fi;
    }
  }
  return energy;
}

double SpringForceField::compute_parallel(std::span<const Vec3> x, std::span<Vec3> f) const {
  const long n = static_cast<long>(n_atoms_);
  double energy = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : energy)
  for (long a = 0; a < n; ++a) {
    Vec3 fa = Vec3::Zero();
    double ea = 0.0;
    for (std::size_t k = offsets_[a]; k < offsets_[a + 1]; ++k) {
      const Vec3 d = x[neighbours_[k]] - x[a];
      const double r = d.norm();
      const double stretch = r - rest_[k];
      ea += 0.25 * kappa_ * stretch * stretch;  // each pair visited twice
      if (r > 0.0) fa += (kappa_ * stretch / r) * d;
    }
    f[a] = fa;
    energy += ea;
  }
  return energy;
}

std::vector<HyperfineSeries> sphere_hyperfine_ensemble(const SphereEnsembleSpec& spec, Execution exec) {
  const auto& sp = spec.sphere;
  validate(sp);
  validate(spec.geometry);
  if (spec.steps_per_block == 0) throw InputError("steps_per_block must be >= 1");
  if (spec.sample_stride == 0) throw InputError("sample_stride must be >= 1");
  const Vec3 lever = spec.geometry.anchor_position - spec.geometry.nv_position;
  if (std::abs(lever.norm() - sp.radius) < 0.1 * units::nanometer)
    throw InputError("the diffusion shell passes within 0.1 nm of the NV");

  detail::SphereBatch base;
  base.d_r = sp.d_r;
  base.theta_min = sp.theta_min;
  base.theta_max = sp.theta_max;
  base.dt = sp.dt;
  base.radius = sp.radius;
  base.seed = sp.seed;
  base.blocks = spec.blocks;
  base.steps_per_block = spec.steps_per_block;
  base.sample_stride = spec.sample_stride;
  for (int c = 0; c < 3; ++c) {
    base.lever[c] = lever[c];
    const Vec3 col = to_nv_frame(Vec3::Unit(c), spec.geometry);
    for (int r = 0; r < 3; ++r) base.rotation[3 * r + c] = col[r];
  }
  base.prefactor = -hyperfine_from_position(Vec3(0.0, 0.0, 1.0), spec.gamma_n).z() / 2.0;

  const std::size_t lanes = detail::kSphereLanes;
  const std::size_t batches = (spec.trajectories + lanes - 1) / lanes;
  std::vector<HyperfineSeries> out(spec.trajectories);
  const double block_dt = sp.dt * static_cast<double>(spec.steps_per_block);
  const long nb = static_cast<long>(batches);
#pragma omp parallel for schedule(dynamic, 1) if (exec == Execution::parallel)
  for (long b = 0; b < nb; ++b) {
    detail::SphereBatch in = base;
    in.first_trajectory = static_cast<std::size_t>(b) * lanes;
    in.lanes = std::min(lanes, spec.trajectories - in.first_trajectory);
    std::vector<double> buffer(lanes * spec.blocks * 3);
    detail::sphere_batch(in, buffer.data());
    for (std::size_t i = 0; i < in.lanes; ++i) {
      HyperfineSeries& h = out[in.first_trajectory + i];
      h.dt = block_dt;
      h.values.resize(spec.blocks);
      for (std::size_t k = 0; k < spec.blocks; ++k) {
        const double* v = &buffer[(i * spec.blocks + k) * 3];
        h.values[k] = Vec3(v[0], v[1], v[2]);
      }
    }
  }
  return out;
}

}  // namespace nvsense
