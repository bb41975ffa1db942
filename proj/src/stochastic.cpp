#include "nvsense/stochastic.hpp"

#include <array>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <boost/math/tools/minima.hpp>

#include "nvsense/correlation.hpp"
#include "nvsense/diagnostics.hpp"

namespace nvsense {
namespace {

constexpr double kPoleGuard = 1e-3;
constexpr double kMinSeparation = 0.1 * units::nanometer;

double wrap_phi(double phi) {
  phi = std::fmod(phi, units::two_pi);
  if (phi < 0.0) phi += units::two_pi;
  if (phi >= units::two_pi) phi = 0.0;
  return phi;
}

double hyperfine_prefactor(double gamma_n) {
  return units::vacuum_permeability * units::gamma_electron * gamma_n * units::hbar / (4.0 * units::pi);
}

// Orthonormal NV frame: rows are x', y', z' in lab coordinates.
Eigen::Matrix3d nv_rotation(const Vec3& axis) {
  const Vec3 z = axis.normalized();
  Vec3 x = Vec3::UnitX() - Vec3::UnitX().dot(z) * z;
  if (x.norm() < 1e-3) x = Vec3::UnitY() - Vec3::UnitY().dot(z) * z;
  x.normalize();
  Eigen::Matrix3d r;
  r.row(0) = x.transpose();
  r.row(1) = z.cross(x).transpose();
  r.row(2) = z.transpose();
  return r;
}

// Least-squares correlation time of c(k dt) = c(0) exp(-k dt / tau).
double fit_exponential_time(std::span<const double> c, double dt) {
  const double c0 = c[0];
  auto cost = [&](double log_tau) {
    const double tau = std::exp(log_tau);
    double s = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
      const double r = c[k] - c0 * std::exp(-static_cast<double>(k) * dt / tau);
      s += r * r;
    }
    return s;
  };
  const double lo = std::log(0.1 * dt);
  const double hi = std::log(100.0 * dt * static_cast<double>(c.size()));
  const auto [best, value] = boost::math::tools::brent_find_minima(cost, lo, hi, 50);
  (void)value;
  if (best <= lo + 1e-6 || best >= hi - 1e-6)
    throw NumericalError("exponential correlation fit did not converge (optimum at the search boundary)");
  return std::exp(best);
}

}  // namespace

void validate(const SphereDiffusionParams& p) {
  if (!(p.d_r >= 0.0)) throw InputError("sphere diffusion: D_r must be >= 0");
  if (!(p.dt > 0.0)) throw InputError("sphere diffusion: dt must be positive");
  if (!(p.radius > 0.0)) throw InputError("sphere diffusion: radius must be positive");
  if (!(p.theta_min < p.theta_max)) throw InputError("sphere diffusion: theta_min must be < theta_max");
  if (p.theta_min < kPoleGuard || p.theta_max > units::pi - kPoleGuard)
    throw InputError("sphere diffusion: the zone must stay at least 1e-3 rad away from the poles");
  if (p.dt * p.d_r > 1e-2)
    warn("sphere diffusion: dt * D_r = " + std::to_string(p.dt * p.d_r) + " exceeds 1e-2");
}

SphereDiffusion::SphereDiffusion(const SphereDiffusionParams& p)
    : p_(p), drift_(p.d_r * p.dt), kick_(std::sqrt(2.0 * p.d_r * p.dt)), engine_(p.seed) {
  validate(p);
  std::tie(theta_, phi_) = sample_zone(engine_, p.theta_min, p.theta_max);
}

void SphereDiffusion::step() {
  if (kick_ == 0.0) return;
  const double w1 = normal_(engine_);
  const double w2 = normal_(engine_);
  const double s = std::sin(theta_);
  double theta = theta_ + drift_ * std::cos(theta_) / s + kick_ * w1;
  for (int i = 0; i < 64 && (theta < p_.theta_min || theta > p_.theta_max); ++i) {
    if (theta < p_.theta_min) theta = 2.0 * p_.theta_min - theta;
    if (theta > p_.theta_max) theta = 2.0 * p_.theta_max - theta;
  }
  theta_ = std::clamp(theta, p_.theta_min, p_.theta_max);
  phi_ = wrap_phi(phi_ + kick_ * w2 / s);
}

AngleSeries generate_sphere_trajectory(const SphereDiffusionParams& p, std::size_t n_steps, std::size_t keep_every) {
  if (keep_every == 0) throw InputError("keep_every must be >= 1");
  SphereDiffusion gen(p);
  AngleSeries a;
  a.dt = p.dt * static_cast<double>(keep_every);
  const std::size_t kept = n_steps / keep_every + 1;
  a.theta.reserve(kept);
  a.phi.reserve(kept);
  for (std::size_t k = 0; k <= n_steps; ++k) {
    if (k % keep_every == 0) {
      a.theta.push_back(gen.theta());
      a.phi.push_back(gen.phi());
    }
    if (k < n_steps) gen.step();
  }
  if (p.d_r > 0.0) a.exploration_time = 1.0 / p.d_r;
  return a;
}

Vec3 zone_point(double theta, double phi, double radius) {
  const double s = std::sin(theta);
  return radius * Vec3(s * std::cos(phi), s * std::sin(phi), std::cos(theta));
}

void validate(const OUParams& p) {
  if (!(p.eta.minCoeff() > 0.0)) throw InputError("OU: restoring rates must be positive");
  if (!(p.d >= 0.0)) throw InputError("OU: D must be >= 0");
  if (!(p.dt > 0.0)) throw InputError("OU: dt must be positive");
}

VectorSeries generate_ou_trajectory(const OUParams& p, std::size_t n_steps, const std::optional<Vec3>& initial) {
  validate(p);
  std::mt19937_64 engine(p.seed);
  boost::random::normal_distribution<double> normal;
  Vec3 decay;
  Vec3 kick;
  Vec3 q;
  for (int k = 0; k < 3; ++k) {
    const double var = p.d / p.eta[k];
    decay[k] = std::exp(-p.eta[k] * p.dt);
    kick[k] = std::sqrt(var * -std::expm1(-2.0 * p.eta[k] * p.dt));
    q[k] = std::sqrt(var) * normal(engine);
  }
  if (initial) q = *initial;
  VectorSeries out;
  out.dt = p.dt;
  out.values.reserve(n_steps + 1);
  out.values.push_back(q);
  for (std::size_t s = 0; s < n_steps; ++s) {
    for (int k = 0; k < 3; ++k) q[k] = decay[k] * q[k] + kick[k] * normal(engine);
    out.values.push_back(q);
  }
  return out;
}

Geometry Geometry::bulk(double depth, double lateral_offset) {
  Geometry g;
  g.nv_position = Vec3(lateral_offset, 0.0, -depth);
  g.anchor_position = Vec3::Zero();
  g.nv_axis = Vec3::UnitZ();
  return g;
}

void validate(const Geometry& g) {
  if (!g.nv_position.allFinite() || !g.anchor_position.allFinite()) throw InputError("geometry: non-finite position");
  if (std::abs(g.nv_axis.norm() - 1.0) > 1e-9) throw InputError("geometry: NV axis must be a unit vector");
}

Vec3 hyperfine_from_position(const Vec3& r, double gamma_n) {
  const double d = r.norm();
  if (!(d >= kMinSeparation)) throw InputError("hyperfine: target closer than 0.1 nm to the NV");
  const Vec3 u = r / d;
  const double scale = -hyperfine_prefactor(gamma_n) / (d * d * d);
  return scale * Vec3(3.0 * u.x() * u.z(), 3.0 * u.y() * u.z(), 3.0 * u.z() * u.z() - 1.0);
}

Vec3 to_nv_frame(const Vec3& v, const Geometry& g) { return nv_rotation(g.nv_axis) * v; }

HyperfineSeries trajectory_to_hyperfine(const AngleSeries& a, const Geometry& g, double radius, double gamma_n) {
  validate(g);
  if (!(radius > 0.0)) throw InputError("shell radius must be positive");
  const Eigen::Matrix3d rot = nv_rotation(g.nv_axis);
  HyperfineSeries h;
  h.dt = a.dt;
  h.values.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Vec3 r = g.anchor_position + zone_point(a.theta[i], a.phi[i], radius) - g.nv_position;
    h.values[i] = hyperfine_from_position(rot * r, gamma_n);
  }
  return h;
}

HyperfineSeries trajectory_to_hyperfine(const VectorSeries& q, const Geometry& g, const Vec3& offset, double gamma_n) {
  validate(g);
  const Eigen::Matrix3d rot = nv_rotation(g.nv_axis);
  HyperfineSeries h;
  h.dt = q.dt;
  h.values.resize(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    const Vec3 r = g.anchor_position + offset + q.values[i] - g.nv_position;
    h.values[i] = hyperfine_from_position(rot * r, gamma_n);
  }
  return h;
}

HyperfineStats estimate_stats(const HyperfineSeries& h, double tau_max, CorrelationFit fit) {
  const std::size_t n = h.size();
  if (n < 2) throw InputError("stats: series too short");
  if (!(h.dt > 0.0)) throw InputError("stats: dt must be positive");
  const auto lags = static_cast<std::size_t>(std::llround(tau_max / h.dt));
  if (lags < 2 || lags >= n) throw InputError("stats: tau_max must span at least 2 samples and be shorter than the series");
  if (10 * lags > n) warn("stats: series is shorter than 10 tau_max; correlations will be noisy");

  HyperfineStats s;
  s.fit = fit;
  s.lag_dt = h.dt;
  const double nn = static_cast<double>(n);
  for (const auto& v : h.values) s.mean += v;
  s.mean /= nn;

  std::array<std::vector<double>, 3> x;
  for (int k = 0; k < 3; ++k) {
    x[k].resize(n);
    for (std::size_t t = 0; t < n; ++t) x[k][t] = h.values[t][k] - s.mean[k];
  }
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      const double c = std::inner_product(x[i].begin(), x[i].end(), x[j].begin(), 0.0) / nn;
      s.covariance(i, j) = c;
      s.covariance(j, i) = c;
    }

  s.correlation.assign(lags + 1, Eigen::Matrix3d::Zero());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const auto c = cross_correlation(x[i], x[j], lags);
      for (std::size_t k = 0; k <= lags; ++k) s.correlation[k](i, j) = c[k];
    }

  // gamma_ij = int_0^tau_max (C_ij + C_ji) dtau, trapezoid
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double integral = 0.0;
      for (std::size_t k = 0; k <= lags; ++k) {
        const double w = (k == 0 || k == lags) ? 0.5 : 1.0;
        integral += w * (s.correlation[k](i, j) + s.correlation[k](j, i));
      }
      s.gamma(i, j) = integral * h.dt;
    }

  for (int i = 0; i < 3; ++i) {
    const double var = s.correlation[0](i, i);
    if (var <= 0.0) {
      s.tau[i] = 0.0;
      s.gamma(i, i) = 0.0;
      continue;
    }
    if (fit == CorrelationFit::exponential) {
      std::vector<double> c(lags + 1);
      for (std::size_t k = 0; k <= lags; ++k) c[k] = s.correlation[k](i, i);
      s.tau[i] = fit_exponential_time(c, h.dt);
      s.gamma(i, i) = 2.0 * var * s.tau[i];
    } else {
      s.tau[i] = std::max(0.0, s.gamma(i, i) / (2.0 * var));
    }
  }
  s.sigma_hat2 = s.covariance.diagonal().maxCoeff();
  s.tau_hat = s.tau.maxCoeff();
  decompose_gamma(s);
  return s;
}

void decompose_gamma(HyperfineStats& s) {
  s.gamma = 0.5 * (s.gamma + s.gamma.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(s.gamma);
  Vec3 rates = es.eigenvalues();
  const double eps = 1e-6 * std::max(0.0, rates.maxCoeff());
  for (int k = 0; k < 3; ++k) {
    if (rates[k] >= 0.0) continue;
    if (rates[k] >= -eps) {
      rates[k] = 0.0;
    } else {
      throw NumericalError("dissipation matrix has a negative eigenvalue " + std::to_string(rates[k]) +
                           " beyond the clamp tolerance; correlation estimate is unreliable");
    }
  }
  s.rates = rates;
  s.axes = es.eigenvectors();
}

std::vector<Eigen::Matrix3cd> power_spectrum(const HyperfineStats& s, std::span<const double> omega) {
  const std::size_t lags = s.correlation.size();
  std::vector<Eigen::Matrix3cd> out(omega.size(), Eigen::Matrix3cd::Zero());
  if (lags == 0) return out;
  for (std::size_t w = 0; w < omega.size(); ++w) {
    Eigen::Matrix3cd acc = Eigen::Matrix3cd::Zero();
    for (std::size_t k = 0; k < lags; ++k) {
      const double tau = static_cast<double>(k) * s.lag_dt;
      const double weight = (k == 0 || k + 1 == lags) ? 0.5 : 1.0;
      const std::complex<double> e(std::cos(omega[w] * tau), std::sin(omega[w] * tau));
      const Eigen::Matrix3d& c = s.correlation[k];
      acc += weight * (e * c.cast<std::complex<double>>() + std::conj(e) * c.transpose().cast<std::complex<double>>());
    }
    out[w] = acc * s.lag_dt;
  }
  return out;
}

std::vector<double> power_spectrum(double dt, std::span<const double> c, std::span<const double> omega) {
  std::vector<double> out(omega.size(), 0.0);
  const std::size_t n = c.size();
  if (n == 0) return out;
  for (std::size_t w = 0; w < omega.size(); ++w) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double weight = (k == 0 || k + 1 == n) ? 0.5 : 1.0;
      acc += weight * c[k] * std::cos(omega[w] * static_cast<double>(k) * dt);
    }
    out[w] = 2.0 * acc * dt;
  }
  return out;
}

}  // namespace nvsense
