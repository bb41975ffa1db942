#pragma once

// Hot loops with a serial reference and an OpenMP variant. Parallel
// versions assemble results in a fixed order, so outputs do not depend on
// the number of threads.

#include <cstddef>
#include <span>
#include <vector>

#include "nvsense/execution.hpp"
#include "nvsense/molecule.hpp"
#include "nvsense/stochastic.hpp"

namespace nvsense {

/// Harmonic spring forces F (kcal mol^-1 A^-1) and energy (kcal/mol).
class SpringForceField {
 public:
  SpringForceField(const SpringNetwork& net, std::size_t n_atoms);

  std::size_t atoms() const { return n_atoms_; }

  /// Loop over pairs, scattering into both atoms.
  double compute_serial(std::span<const Vec3> x, std::span<Vec3> f) const;
  /// Each thread gathers the forces of its own atoms from a per-atom
  /// neighbour list.
  double compute_parallel(std::span<const Vec3> x, std::span<Vec3> f) const;

 private:
  std::size_t n_atoms_;
  double kappa_;
  std::vector<Spring> pairs_;
  std::vector<std::size_t> offsets_;  // CSR over atoms
  std::vector<std::size_t> neighbours_;
  std::vector<double> rest_;
};

struct SphereEnsembleSpec {
  SphereDiffusionParams sphere;
  Geometry geometry;
  double gamma_n = units::gamma_fluorine19;
  std::size_t trajectories = 0;
  std::size_t blocks = 0;
  std::size_t steps_per_block = 1;
  std::size_t sample_stride = 1;  // hyperfine sampled every this many SDE steps
};

/// Independent sphere-diffusion trajectories (seed ^ index) reduced to
/// hyperfine series averaged over blocks of steps_per_block SDE steps. The
/// series step is steps_per_block * dt.
std::vector<HyperfineSeries> sphere_hyperfine_ensemble(const SphereEnsembleSpec& spec,
                                                       Execution exec = Execution::parallel);

}  // namespace nvsense
