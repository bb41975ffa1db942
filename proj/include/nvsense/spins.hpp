#pragma once

// NV dressed-state qubit coupled to a spin-1/2 target.
//
// Basis order (NV x target): |+,up>, |+,down>, |-,up>, |-,down>. Hamiltonians
// are in rad/s and use spin-1/2 operators S = sigma / 2. The transfer
// probability is the NV |-> population.

#include <complex>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "nvsense/execution.hpp"
#include "nvsense/series.hpp"
#include "nvsense/stochastic.hpp"

namespace nvsense {

using Complex = std::complex<double>;
using Matrix2c = Eigen::Matrix2cd;
using Matrix4c = Eigen::Matrix<Complex, 4, 4>;
using Matrix16c = Eigen::Matrix<Complex, 16, 16>;
using Matrix16d = Eigen::Matrix<double, 16, 16>;

struct SpinParams {
  double omega = 0.0;           // Rabi frequency, rad/s
  Vec3 b_field = Vec3::Zero();  // T
  double gamma_n = units::gamma_fluorine19;  // rad s^-1 T^-1
  double gamma_flip = 0.0;      // 1/s
};

void validate(const SpinParams& p);

struct SpinState {
  Matrix4c rho = Matrix4c::Zero();

  /// |+><+| (x) 1/2: NV polarized, target fully mixed.
  static SpinState polarized_nv_mixed_target();
  /// Pure basis state |k><k|, k = 0..3.
  static SpinState basis(int k);
  static SpinState maximally_mixed();

  double trace_error() const;
  double hermiticity_error() const;
  double min_eigenvalue() const;
  double purity() const;
  /// Throws NumericalError unless trace, Hermiticity and positivity are
  /// within the given tolerances.
  void check(double trace_tol = 1e-9, double herm_tol = 1e-12, double pos_tol = 1e-8) const;
};

struct EffectiveCoupling {
  double delta = 0.0;  // rad/s
  double j = 0.0;      // rad/s, >= 0
};

/// delta = (Omega - gamma_n B_z + A_z / 2) / 2, J = |A_perp| / 4.
EffectiveCoupling effective_coupling(const Vec3& mean_a, const SpinParams& p);

/// B = B_z z chosen so that the averaged detuning equals `delta`.
SpinParams spin_params_for_detuning(const Vec3& mean_a, double omega, double delta,
                                    double gamma_n = units::gamma_fluorine19, double gamma_flip = 0.0);

struct CumulantScales {
  double sigma_hat2 = 0.0;  // rad^2/s^2
  double tau_hat = 0.0;     // s
};

/// Omega S_z (x) 1 + 1 (x) (gamma_n B - A/2).S - S_x (x) (A.S)
Matrix4c build_average_hamiltonian(const Vec3& mean_a, const SpinParams& p);
/// -1/2 1 (x) (xi.S) - S_x (x) (xi.S)
Matrix4c build_fluctuation_hamiltonian(const Vec3& xi);
/// Full instantaneous Hamiltonian for hyperfine vector a(t).
Matrix4c build_hamiltonian(const Vec3& a, const SpinParams& p);

/// 1/2 J^2/(J^2 + delta^2) sin^2(sqrt(J^2 + delta^2) t)
double fast_transfer_probability(double t, const EffectiveCoupling& ec);

/// delta s_z - A_x/4 s_x + A_y/4 s_y on span{|+,down>, |-,up>}. When omega is
/// given, warns if (|A|/omega)^2 >= 1e-3.
Matrix2c reduced_two_level(const Vec3& a, double delta, std::optional<double> omega = std::nullopt);

/// NV |-> population.
double transfer_probability(const SpinState& s);

/// Diffusion-induced Lindblad channels: rates gamma_k and unit axes (columns).
struct DiffusionChannels {
  Vec3 rates = Vec3::Zero();
  Eigen::Matrix3d axes = Eigen::Matrix3d::Identity();

  static DiffusionChannels from_stats(const HyperfineStats& s);
};

/// Propagation of the Lindblad equation by exact step exponentials, with the
/// diffusion channels L_k = (sigma_x + 1/2) (x) (n_k.sigma) at rate gamma_k/2
/// and NV flips sigma_+, sigma_- at rate gamma_flip/2. States are carried
/// as 16 real coefficients on the Pauli product basis, so every output is
/// Hermitian by construction.
class LindbladPropagator {
 public:
  LindbladPropagator(const Matrix4c& h, const DiffusionChannels& channels, double gamma_flip);

  /// Superoperator on column-major vec(rho).
  const Matrix16c& generator() const { return generator_; }
  /// The same map on Pauli product coefficients.
  const Matrix16d& real_generator() const { return real_generator_; }
  /// Largest allowed step: 1e-2 / max(|H|, gamma_k, gamma_flip).
  double max_step() const { return max_step_; }

  /// States at every grid time (non-decreasing, starting at >= 0; the
  /// initial state is taken at t = 0). Invariants are checked at every
  /// grid point.
  std::vector<SpinState> evolve(const SpinState& rho0, std::span<const double> t_grid) const;
  /// Applies `steps` individual steps of size h (h <= max_step()).
  SpinState step_sequentially(const SpinState& rho0, double h, std::size_t steps, bool check_each = false) const;

 private:
  Matrix16d step_matrix(double h) const;

  Matrix16c generator_;
  Matrix16d real_generator_;
  double max_step_;
};

std::vector<SpinState> lindblad_evolve(const Matrix4c& h, const DiffusionChannels& channels, const SpinParams& p,
                                       const SpinState& rho0, std::span<const double> t_grid);
std::vector<SpinState> lindblad_evolve(const Matrix4c& h, const HyperfineStats& stats, const SpinParams& p,
                                       const SpinState& rho0, std::span<const double> t_grid);

struct SlowRegimeResult {
  double probability = 0.0;
  double standard_error = 0.0;
};

/// Average of the fast formula over hyperfine samples (quasi-static target).
SlowRegimeResult slow_regime_probability(std::span<const Vec3> samples, double t, const SpinParams& p);

/// exp(-i H t) for Hermitian 4x4 H.
Matrix4c unitary_propagator(const Matrix4c& h, double t);

/// Per-trajectory unitary evolution with piecewise-constant H over each
/// series step, averaged over trajectories in index order. Grid times must
/// be multiples of the series step and within its span.
std::vector<SpinState> monte_carlo_evolve(std::span<const HyperfineSeries> ensemble, const SpinParams& p,
                                          const SpinState& rho0, std::span<const double> t_grid,
                                          Execution exec = Execution::parallel);

struct MonteCarloResult {
  std::vector<SpinState> states;       // ensemble-averaged
  std::vector<double> probability;     // mean transfer probability
  std::vector<double> standard_error;  // of the mean, across trajectories
};

/// Same as monte_carlo_evolve, also reporting the spread of P across
/// trajectories.
MonteCarloResult monte_carlo_transfer(std::span<const HyperfineSeries> ensemble, const SpinParams& p,
                                      const SpinState& rho0, std::span<const double> t_grid,
                                      Execution exec = Execution::parallel);

/// Single trajectory, same conventions.
std::vector<SpinState> evolve_trajectory(const HyperfineSeries& series, const SpinParams& p, const SpinState& rho0,
                                         std::span<const double> t_grid);

struct CumulantCheck {
  bool valid = false;
  double margin = 0.0;  // sigma_hat^2 tau_hat tau_int
};

/// Valid when sigma_hat^2 tau_hat tau_int <= 0.1.
CumulantCheck cumulant_validity_check(const CumulantScales& s, double tau_int);

}  // namespace nvsense
