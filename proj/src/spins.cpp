#include "nvsense/spins.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <exception>
#include <limits>
#include <map>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "nvsense/diagnostics.hpp"

namespace nvsense {
namespace {

const Complex I(0.0, 1.0);

Matrix2c pauli_x() { return (Matrix2c() << 0, 1, 1, 0).finished(); }
Matrix2c pauli_y() { return (Matrix2c() << 0, -I, I, 0).finished(); }
Matrix2c pauli_z() { return (Matrix2c() << 1, 0, 0, -1).finished(); }

Matrix4c kron(const Matrix2c& a, const Matrix2c& b) {
  Matrix4c out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return out;
}

// v . sigma
Matrix2c pauli_dot(const Vec3& v) { return v.x() * pauli_x() + v.y() * pauli_y() + v.z() * pauli_z(); }

Matrix16c left(const Matrix4c& a) {
  Matrix16c out = Matrix16c::Zero();
  for (int k = 0; k < 4; ++k) out.block<4, 4>(4 * k, 4 * k) = a;
  return out;
}

// vec(X B) = (B^T (x) 1) vec(X), column-major vec.
Matrix16c right(const Matrix4c& b) {
  Matrix16c out = Matrix16c::Zero();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out.block<4, 4>(4 * i, 4 * j) = b(j, i) * Matrix4c::Identity();
  return out;
}

Matrix16c dissipator(const Matrix4c& l) {
  const Matrix4c ldl = l.adjoint() * l;
  return left(l) * right(l.adjoint()) - 0.5 * left(ldl) - 0.5 * right(ldl);
}

Eigen::Matrix<Complex, 16, 1> vec(const Matrix4c& m) { return Eigen::Map<const Eigen::Matrix<Complex, 16, 1>>(m.data()); }

Matrix4c unvec(const Eigen::Matrix<Complex, 16, 1>& v) { return Eigen::Map<const Matrix4c>(v.data()); }

// Columns vec(P_a (x) P_b) / 2 for P in (1, x, y, z): orthonormal and
// Hermitian, so real coefficients describe Hermitian matrices.
const Matrix16c& pauli_basis() {
  static const Matrix16c basis = [] {
    const Matrix2c p[4] = {Matrix2c::Identity(), pauli_x(), pauli_y(), pauli_z()};
    Matrix16c b;
    for (int a = 0; a < 4; ++a)
      for (int c = 0; c < 4; ++c) b.col(4 * a + c) = vec(0.5 * kron(p[a], p[c]));
    return b;
  }();
  return basis;
}

using Vector16d = Eigen::Matrix<double, 16, 1>;

Vector16d coefficients(const Matrix4c& rho) { return (pauli_basis().adjoint() * vec(rho)).real(); }

Matrix4c from_coefficients(const Vector16d& c) {
  const Eigen::Matrix<Complex, 16, 1> v = pauli_basis() * c.cast<Complex>();
  return unvec(v);
}

Matrix16d matrix_power(Matrix16d base, std::size_t n) {
  Matrix16d result = Matrix16d::Identity();
  while (n > 0) {
    if (n & 1U) result = result * base;
    n >>= 1U;
    if (n > 0) base = base * base;
  }
  return result;
}

}  // namespace

void validate(const SpinParams& p) {
  if (!(p.omega > 0.0)) throw InputError("Rabi frequency must be positive");
  if (!(p.gamma_flip >= 0.0)) throw InputError("flip rate must be >= 0");
  if (!p.b_field.allFinite() || !std::isfinite(p.gamma_n)) throw InputError("spin parameters must be finite");
}

SpinState SpinState::polarized_nv_mixed_target() {
  SpinState s;
  s.rho(0, 0) = 0.5;
  s.rho(1, 1) = 0.5;
  return s;
}

SpinState SpinState::basis(int k) {
  if (k < 0 || k > 3) throw InputError("basis index must be 0..3");
  SpinState s;
  s.rho(k, k) = 1.0;
  return s;
}

SpinState SpinState::maximally_mixed() {
  SpinState s;
  s.rho = 0.25 * Matrix4c::Identity();
  return s;
}

double SpinState::trace_error() const { return std::abs(rho.trace() - Complex(1.0)); }

double SpinState::hermiticity_error() const { return (rho - rho.adjoint()).cwiseAbs().maxCoeff(); }

double SpinState::min_eigenvalue() const {
  const Matrix4c h = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double SpinState::purity() const { return (rho * rho).trace().real(); }

void SpinState::check(double trace_tol, double herm_tol, double pos_tol) const {
  if (!rho.allFinite()) throw NumericalError("density matrix has non-finite entries");
  if (trace_error() > trace_tol) throw NumericalError("density matrix trace drifted by " + std::to_string(trace_error()));
  if (hermiticity_error() > herm_tol)
    throw NumericalError("density matrix lost Hermiticity (" + std::to_string(hermiticity_error()) + ")");
  if (min_eigenvalue() < -pos_tol)
    throw NumericalError("density matrix lost positivity (eigenvalue " + std::to_string(min_eigenvalue()) + ")");
}

EffectiveCoupling effective_coupling(const Vec3& a, const SpinParams& p) {
  EffectiveCoupling ec;
  ec.delta = 0.5 * (p.omega - p.gamma_n * p.b_field.z() + 0.5 * a.z());
  ec.j = 0.25 * std::hypot(a.x(), a.y());
  return ec;
}

SpinParams spin_params_for_detuning(const Vec3& mean_a, double omega, double delta, double gamma_n,
                                    double gamma_flip) {
  if (!(gamma_n != 0.0)) throw InputError("gamma_n must be non-zero");
  SpinParams p;
  p.omega = omega;
  p.gamma_n = gamma_n;
  p.gamma_flip = gamma_flip;
  p.b_field = Vec3(0.0, 0.0, (omega + 0.5 * mean_a.z() - 2.0 * delta) / gamma_n);
  return p;
}

Matrix4c build_average_hamiltonian(const Vec3& a, const SpinParams& p) {
  const Matrix2c one = Matrix2c::Identity();
  return 0.5 * p.omega * kron(pauli_z(), one) + kron(one, 0.5 * pauli_dot(p.gamma_n * p.b_field - 0.5 * a)) -
         kron(0.5 * pauli_x(), 0.5 * pauli_dot(a));
}

Matrix4c build_fluctuation_hamiltonian(const Vec3& xi) {
  const Matrix2c one = Matrix2c::Identity();
  const Matrix2c s = 0.5 * pauli_dot(xi);
  return -0.5 * kron(one, s) - kron(0.5 * pauli_x(), s);
}

Matrix4c build_hamiltonian(const Vec3& a, const SpinParams& p) {
  const Matrix2c one = Matrix2c::Identity();
  return 0.5 * p.omega * kron(pauli_z(), one) + kron(one, 0.5 * pauli_dot(p.gamma_n * p.b_field)) -
         kron(0.5 * pauli_x() + 0.5 * one, 0.5 * pauli_dot(a));
}

double fast_transfer_probability(double t, const EffectiveCoupling& ec) {
  const double j2 = ec.j * ec.j;
  const double nu2 = j2 + ec.delta * ec.delta;
  if (nu2 == 0.0) return 0.0;
  const double s = std::sin(std::sqrt(nu2) * t);
  return 0.5 * j2 / nu2 * s * s;
}

Matrix2c reduced_two_level(const Vec3& a, double delta, std::optional<double> omega) {
  if (omega && *omega > 0.0) {
    const double ratio = a.norm() / *omega;
    if (ratio * ratio >= 1e-3)
      warn("two-level reduction: (|A|/Omega)^2 = " + std::to_string(ratio * ratio) + " is not small");
  }
  return delta * pauli_z() - 0.25 * a.x() * pauli_x() + 0.25 * a.y() * pauli_y();
}

double transfer_probability(const SpinState& s) { return s.rho(2, 2).real() + s.rho(3, 3).real(); }

DiffusionChannels DiffusionChannels::from_stats(const HyperfineStats& s) {
  DiffusionChannels c;
  c.rates = s.rates;
  c.axes = s.axes;
  return c;
}

LindbladPropagator::LindbladPropagator(const Matrix4c& h, const DiffusionChannels& channels, double gamma_flip) {
  if (!(gamma_flip >= 0.0)) throw InputError("flip rate must be >= 0");
  if (channels.rates.minCoeff() < 0.0) throw InputError("diffusion rates must be >= 0");
  generator_ = -I * (left(h) - right(h));

  const Matrix2c one = Matrix2c::Identity();
  const Matrix2c nv_factor = pauli_x() + 0.5 * one;
  for (int k = 0; k < 3; ++k) {
    if (channels.rates[k] == 0.0) continue;
    const Matrix4c l = kron(nv_factor, pauli_dot(channels.axes.col(k)));
    generator_ += 0.5 * channels.rates[k] * dissipator(l);
  }
  if (gamma_flip > 0.0) {
    Matrix2c up = Matrix2c::Zero();
    up(0, 1) = 1.0;  // |+><-|
    generator_ += 0.5 * gamma_flip * (dissipator(kron(up, one)) + dissipator(kron(up.adjoint(), one)));
  }

  real_generator_ = (pauli_basis().adjoint() * generator_ * pauli_basis()).real();

  Eigen::SelfAdjointEigenSolver<Matrix4c> es(h, Eigen::EigenvaluesOnly);
  const double scale = std::max({es.eigenvalues().cwiseAbs().maxCoeff(), channels.rates.maxCoeff(), gamma_flip});
  max_step_ = scale > 0.0 ? 1e-2 / scale : std::numeric_limits<double>::infinity();
}

Matrix16d LindbladPropagator::step_matrix(double h) const {
  const Matrix16d a = h * real_generator_;
  return a.exp();
}

std::vector<SpinState> LindbladPropagator::evolve(const SpinState& rho0, std::span<const double> t_grid) const {
  rho0.check();
  std::vector<SpinState> out;
  out.reserve(t_grid.size());
  std::map<std::pair<double, std::size_t>, Matrix16d> cache;
  double t_prev = 0.0;
  Vector16d v = coefficients(rho0.rho);
  for (double t : t_grid) {
    if (t < t_prev) throw InputError("time grid must be non-decreasing and start at >= 0");
    const double span = t - t_prev;
    if (span > 0.0) {
      const auto steps = std::isfinite(max_step_) ? static_cast<std::size_t>(std::ceil(span / max_step_)) : 1;
      const double h = span / static_cast<double>(steps);
      const auto key = std::make_pair(h, steps);
      auto it = cache.find(key);
      if (it == cache.end()) it = cache.emplace(key, matrix_power(step_matrix(h), steps)).first;
      v = it->second * v;
    }
    SpinState s;
    s.rho = from_coefficients(v);
    s.check();
    out.push_back(s);
    t_prev = t;
  }
  return out;
}

SpinState LindbladPropagator::step_sequentially(const SpinState& rho0, double h, std::size_t steps,
                                                bool check_each) const {
  if (!(h > 0.0) || h > max_step_ * (1.0 + 1e-12)) throw InputError("step size exceeds the stability bound");
  const Matrix16d m = step_matrix(h);
  Vector16d v = coefficients(rho0.rho);
  SpinState s;
  for (std::size_t k = 0; k < steps; ++k) {
    v = m * v;
    if (check_each) {
      s.rho = from_coefficients(v);
      s.check();
    }
  }
  s.rho = from_coefficients(v);
  s.check();
  return s;
}

std::vector<SpinState> lindblad_evolve(const Matrix4c& h, const DiffusionChannels& channels, const SpinParams& p,
                                       const SpinState& rho0, std::span<const double> t_grid) {
  return LindbladPropagator(h, channels, p.gamma_flip).evolve(rho0, t_grid);
}

std::vector<SpinState> lindblad_evolve(const Matrix4c& h, const HyperfineStats& stats, const SpinParams& p,
                                       const SpinState& rho0, std::span<const double> t_grid) {
  return lindblad_evolve(h, DiffusionChannels::from_stats(stats), p, rho0, t_grid);
}

SlowRegimeResult slow_regime_probability(std::span<const Vec3> samples, double t, const SpinParams& p) {
  if (samples.empty()) throw InputError("slow regime: no hyperfine samples");
  std::vector<double> v;
  v.reserve(samples.size());
  for (const auto& a : samples) v.push_back(fast_transfer_probability(t, effective_coupling(a, p)));
  const double n = static_cast<double>(samples.size());
  SlowRegimeResult r;
  r.probability = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - r.probability) * (x - r.probability);
    r.standard_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return r;
}

Matrix4c unitary_propagator(const Matrix4c& h, double t) {
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(h);
  Eigen::Matrix<Complex, 4, 1> phase;
  for (int k = 0; k < 4; ++k) phase[k] = std::exp(-I * (es.eigenvalues()[k] * t));
  return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

std::vector<SpinState> evolve_trajectory(const HyperfineSeries& series, const SpinParams& p, const SpinState& rho0,
                                         std::span<const double> t_grid) {
  if (!(series.dt > 0.0)) throw InputError("hyperfine series needs a positive dt");
  std::vector<std::size_t> index(t_grid.size());
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const double k = t_grid[i] / series.dt;
    const double r = std::round(k);
    if (k < 0.0 || std::abs(k - r) > 1e-6 * std::max(1.0, r))
      throw InputError("time grid is not aligned with the hyperfine series step");
    if (r > static_cast<double>(series.size())) throw InputError("time grid extends beyond the hyperfine series");
    index[i] = static_cast<std::size_t>(r);
    if (i > 0 && index[i] < index[i - 1]) throw InputError("time grid must be non-decreasing");
  }

  std::vector<SpinState> out;
  out.reserve(t_grid.size());
  Matrix4c rho = rho0.rho;
  std::size_t step = 0;
  for (std::size_t target : index) {
    for (; step < target; ++step) {
      const Matrix4c u = unitary_propagator(build_hamiltonian(series.values[step], p), series.dt);
      rho = u * rho * u.adjoint();
    }
    SpinState s;
    s.rho = rho;
    out.push_back(s);
  }
  return out;
}

MonteCarloResult monte_carlo_transfer(std::span<const HyperfineSeries> ensemble, const SpinParams& p,
                                      const SpinState& rho0, std::span<const double> t_grid, Execution exec) {
  if (ensemble.empty()) throw InputError("Monte Carlo: empty ensemble");
  validate(p);
  rho0.check();
  const long n = static_cast<long>(ensemble.size());
  std::vector<std::vector<SpinState>> per(ensemble.size());
  std::vector<std::exception_ptr> errors(ensemble.size());
#pragma omp parallel for schedule(dynamic, 1) if (exec == Execution::parallel)
  for (long k = 0; k < n; ++k) {
    try {
      per[k] = evolve_trajectory(ensemble[k], p, rho0, t_grid);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  const std::size_t m = t_grid.size();
  MonteCarloResult r;
  r.states.resize(m);
  r.probability.assign(m, 0.0);
  r.standard_error.assign(m, 0.0);
  std::vector<double> sum2(m, 0.0);
  for (std::size_t k = 0; k < ensemble.size(); ++k)
    for (std::size_t i = 0; i < m; ++i) {
      r.states[i].rho += per[k][i].rho;
      const double v = transfer_probability(per[k][i]);
      r.probability[i] += v;
      sum2[i] += v * v;
    }
  const double count = static_cast<double>(ensemble.size());
  for (std::size_t i = 0; i < m; ++i) {
    r.states[i].rho /= count;
    r.probability[i] /= count;
    if (ensemble.size() > 1) {
      const double var = std::max(0.0, (sum2[i] - count * r.probability[i] * r.probability[i]) / (count - 1.0));
      r.standard_error[i] = std::sqrt(var / count);
    }
  }
  return r;
}

std::vector<SpinState> monte_carlo_evolve(std::span<const HyperfineSeries> ensemble, const SpinParams& p,
                                          const SpinState& rho0, std::span<const double> t_grid, Execution exec) {
  return monte_carlo_transfer(ensemble, p, rho0, t_grid, exec).states;
}

CumulantCheck cumulant_validity_check(const CumulantScales& s, double tau_int) {
  if (!(s.sigma_hat2 >= 0.0) || !(s.tau_hat >= 0.0) || !(tau_int >= 0.0))
    throw InputError("cumulant check: scales and interrogation time must be >= 0");
  CumulantCheck c;
  c.margin = s.sigma_hat2 * s.tau_hat * tau_int;
  c.valid = c.margin <= 0.1 * (1.0 + 1e-12);
  return c;
}

}  // namespace nvsense
