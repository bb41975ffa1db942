#include "nvsense/detection.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/trapezoidal.hpp>

namespace nvsense {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinTau = 1e-6;

Matrix4c reference_hamiltonian(const ExperimentConfig& cfg) {
  return build_average_hamiltonian(Vec3(0.0, 0.0, cfg.mean_a.z()), cfg.spin);
}

double time_for(const ExperimentConfig& cfg, double tau, double dp) {
  if (!(dp > 0.0)) return kInf;
  return cfg.snr_threshold * cfg.snr_threshold * (tau + cfg.tau0) / (cfg.contrast * cfg.contrast * dp * dp);
}

template <class F>
void for_each_index(std::size_t n, Execution exec, F&& body) {
  std::vector<std::exception_ptr> errors(n);
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 1) if (exec == Execution::parallel)
  for (long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

ExperimentConfig ExperimentConfig::direct(double j, double delta, double gamma_flip, double contrast, double tau0,
                                          double omega, double gamma_n) {
  if (!(j >= 0.0)) throw InputError("coupling J must be >= 0");
  if (gamma_n == 0.0) throw InputError("gyromagnetic ratio must be non-zero");
  ExperimentConfig cfg;
  cfg.spin.omega = omega;
  cfg.spin.gamma_n = gamma_n;
  cfg.spin.gamma_flip = gamma_flip;
  cfg.spin.b_field = Vec3(0.0, 0.0, (omega - 2.0 * delta) / gamma_n);
  cfg.mean_a = Vec3(4.0 * j, 0.0, 0.0);
  cfg.contrast = contrast;
  cfg.tau0 = tau0;
  return cfg;
}

ExperimentConfig ExperimentConfig::from_stats(const SpinParams& spin, const HyperfineStats& stats, double contrast,
                                              double tau0) {
  ExperimentConfig cfg;
  cfg.spin = spin;
  cfg.mean_a = stats.mean;
  cfg.channels = DiffusionChannels::from_stats(stats);
  cfg.contrast = contrast;
  cfg.tau0 = tau0;
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  validate(cfg.spin);
  if (!(cfg.contrast > 0.0) || cfg.contrast > 1.0) throw InputError("contrast C must lie in (0, 1]");
  if (!(cfg.tau0 >= 0.0)) throw InputError("tau0 must be >= 0");
  if (!(cfg.snr_threshold > 0.0)) throw InputError("signal-to-noise threshold must be positive");
  if (!cfg.mean_a.allFinite()) throw InputError("hyperfine vector must be finite");
}

SignalModel::SignalModel(const ExperimentConfig& cfg)
    : with_(build_average_hamiltonian(cfg.mean_a, cfg.spin), cfg.channels, cfg.spin.gamma_flip),
      without_(reference_hamiltonian(cfg), DiffusionChannels{}, cfg.spin.gamma_flip) {
  validate(cfg);
}

SignalPair SignalModel::evaluate(double tau_int) const {
  const double t[] = {tau_int};
  return evaluate(std::span<const double>(t)).front();
}

std::vector<SignalPair> SignalModel::evaluate(std::span<const double> tau) const {
  const auto rho0 = SpinState::polarized_nv_mixed_target();
  const auto a = with_.evolve(rho0, tau);
  const auto b = without_.evolve(rho0, tau);
  std::vector<SignalPair> out(tau.size());
  for (std::size_t i = 0; i < tau.size(); ++i) {
    out[i].with_target = transfer_probability(a[i]);
    out[i].without_target = transfer_probability(b[i]);
  }
  return out;
}

double delta_p(const ExperimentConfig& cfg, double tau_int) {
  if (!(tau_int > 0.0)) throw InputError("interrogation time must be positive");
  return SignalModel(cfg).evaluate(tau_int).delta();
}

DetectionResult measurement_time(double dp, double contrast, double tau_int, double tau0, double snr_threshold) {
  if (!(contrast > 0.0)) throw InputError("contrast must be positive");
  if (!(tau_int >= 0.0) || !(tau0 >= 0.0)) throw InputError("times must be >= 0");
  if (!(dp > 0.0))
    throw UnboundedMeasurementTime("signal dP = " + std::to_string(dp) + " <= 0: no finite measurement time");
  DetectionResult r;
  r.tau_int = tau_int;
  r.delta_p = dp;
  r.time = snr_threshold * snr_threshold * (tau_int + tau0) / (contrast * contrast * dp * dp);
  r.runs = tau_int + tau0 > 0.0 ? r.time / (tau_int + tau0) : snr_threshold * snr_threshold / (contrast * contrast * dp * dp);
  // dP >= R / (C sqrt(N)) holds with equality.
  const double implied = snr_threshold / (contrast * std::sqrt(r.runs));
  if (std::abs(implied - dp) > 1e-9 * dp) throw NumericalError("measurement-time relation violated");
  return r;
}

DetectionResult optimize_interrogation_time(const ExperimentConfig& cfg, std::size_t grid_points) {
  validate(cfg);
  if (grid_points < 60) throw InputError("optimizer grid needs at least 60 points");
  const SignalModel model(cfg);
  const double j = cfg.coupling().j;
  double upper = 0.0;
  if (j > 0.0)
    upper = 10.0 / j;
  else if (cfg.spin.gamma_flip > 0.0)
    upper = 10.0 / cfg.spin.gamma_flip;
  else
    throw UnboundedMeasurementTime("J = 0 and no flips: the signal vanishes at every interrogation time");
  if (!(upper > kMinTau)) throw InputError("search bracket is empty (10/J below 1 us)");

  const double x0 = std::log(kMinTau);
  const double x1 = std::log(upper);
  std::vector<double> tau(grid_points);
  for (std::size_t i = 0; i < grid_points; ++i)
    tau[i] = std::exp(x0 + (x1 - x0) * static_cast<double>(i) / static_cast<double>(grid_points - 1));
  tau.back() = upper;
  const auto signals = model.evaluate(tau);
  std::size_t best = 0;
  double best_t = kInf;
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double t = time_for(cfg, tau[i], signals[i].delta());
    if (t < best_t) {
      best_t = t;
      best = i;
    }
  }
  if (!std::isfinite(best_t)) throw UnboundedMeasurementTime("signal is non-positive over the whole search bracket");

  auto cost = [&](double x) {
    const double t = std::exp(x);
    return time_for(cfg, t, model.evaluate(t).delta());
  };
  const double step = (x1 - x0) / static_cast<double>(grid_points - 1);
  double a = std::max(x0, std::log(tau[best]) - step);
  double b = std::min(x1, std::log(tau[best]) + step);
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  const double tol = std::log1p(1e-3);
  double c = b - ratio * (b - a);
  double d = a + ratio * (b - a);
  double fc = cost(c);
  double fd = cost(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = cost(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = cost(d);
    }
  }
  double x_best = fc <= fd ? c : d;
  double f_best = std::min(fc, fd);
  if (!(f_best < best_t)) {
    x_best = std::log(tau[best]);
    f_best = best_t;
  }
  const double t_opt = std::exp(x_best);
  auto result = measurement_time(model.evaluate(t_opt).delta(), cfg.contrast, t_opt, cfg.tau0, cfg.snr_threshold);
  result.boundary = best == 0 || best + 1 == grid_points;
  if (result.boundary)
    warn("interrogation-time optimum lies on the search boundary (tau = " + std::to_string(t_opt) + " s)");
  return result;
}

std::vector<SweepPoint> flip_rate_sweep(const ExperimentConfig& cfg, std::span<const double> gamma_flip,
                                        Execution exec) {
  std::vector<SweepPoint> out(gamma_flip.size());
  for_each_index(gamma_flip.size(), exec, [&](std::size_t i) {
    ExperimentConfig c = cfg;
    c.spin.gamma_flip = gamma_flip[i];
    out[i].gamma_flip = gamma_flip[i];
    out[i].result = optimize_interrogation_time(c);
  });
  return out;
}

Vec3 zone_average_hyperfine(const Geometry& g, const Zone& zone, double gamma_n) {
  validate(g);
  if (!(zone.radius > 0.0) || !(zone.theta_min >= 0.0) || !(zone.theta_min < zone.theta_max) ||
      zone.theta_max > units::pi)
    throw InputError("zone must satisfy 0 <= theta_min < theta_max <= pi and radius > 0");
  const double u_lo = std::cos(zone.theta_max);
  const double u_hi = std::cos(zone.theta_min);
  const Vec3 lever = g.anchor_position - g.nv_position;

  Vec3 mean;
  for (int c = 0; c < 3; ++c) {
    double inner_worst = 0.0;
    double inner_scale = 0.0;  // largest int |f| dphi seen
    auto over_phi = [&](double u) {
      const double s = std::sqrt(std::max(0.0, 1.0 - u * u));
      auto f = [&](double phi) {
        const Vec3 r = lever + zone.radius * Vec3(s * std::cos(phi), s * std::sin(phi), u);
        return hyperfine_from_position(to_nv_frame(r, g), gamma_n)[c];
      };
      double err = 0.0;
      double l1 = 0.0;
      const double v = boost::math::quadrature::trapezoidal(f, 0.0, units::two_pi, 1e-11, 14, &err, &l1);
      if (l1 > 0.0) inner_worst = std::max(inner_worst, err / l1);
      inner_scale = std::max(inner_scale, l1);
      return v;
    };
    double err = 0.0;
    double l1 = 0.0;
    const double integral =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(over_phi, u_lo, u_hi, 12, 1e-10, &err, &l1);
    // Cancelling components (e.g. A_y on the symmetry plane) are judged
    // against the size of |A| rather than their own near-zero value.
    const double scale = std::max(l1, inner_scale * (u_hi - u_lo));
    if ((scale > 0.0 && err > 1e-7 * scale) || inner_worst > 1e-7)
      throw NumericalError("zone quadrature did not converge (relative error " +
                           std::to_string(scale > 0 ? err / scale : err) + ")");
    mean[c] = integral / (units::two_pi * (u_hi - u_lo));
  }
  return mean;
}

std::vector<CouplingPoint> coupling_map(std::span<const double> depths, std::span<const double> lateral_offsets,
                                        const Zone& zone, double gamma_n, Execution exec) {
  const std::size_t nz = depths.size();
  const std::size_t nx = lateral_offsets.size();
  std::vector<CouplingPoint> out(nz * nx);
  for_each_index(out.size(), exec, [&](std::size_t k) {
    CouplingPoint& p = out[k];
    p.depth = depths[k / nx];
    p.lateral_offset = lateral_offsets[k % nx];
    p.mean_a = zone_average_hyperfine(Geometry::bulk(p.depth, p.lateral_offset), zone, gamma_n);
    p.j = 0.25 * std::hypot(p.mean_a.x(), p.mean_a.y());
  });
  return out;
}

}  // namespace nvsense
