#include "nvsense/anm.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/random/normal_distribution.hpp>

#include "nvsense/correlation.hpp"
#include "nvsense/diagnostics.hpp"
#include "nvsense/kernels.hpp"
#include "nvsense/units.hpp"

namespace nvsense {
namespace {

constexpr double kForceToAcceleration = units::kcal_per_mol_in_amu_A2_per_ps2;

std::size_t require_anchor(const Molecule& m) {
  if (!m.anchor_index) throw InputError("molecule has no anchor atom");
  return *m.anchor_index;
}

// Largest angular frequency (1/ps) of the mass-weighted network Hessian with
// the anchor removed.
double max_angular_frequency(const SpringNetwork& net, const Molecule& m, std::size_t anchor) {
  const std::size_t n = m.size();
  std::vector<long> slot(n, -1);
  long free = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (i != anchor) slot[i] = free++;
  if (free == 0) return 0.0;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3 * free, 3 * free);
  for (const auto& s : net.pairs) {
    const Vec3 u = (m.atoms[s.j].position - m.atoms[s.i].position) / s.rest_length;
    const Eigen::Matrix3d k = net.kappa * kForceToAcceleration * (u * u.transpose());
    const long a = slot[s.i];
    const long b = slot[s.j];
    const double ma = m.atoms[s.i].mass;
    const double mb = m.atoms[s.j].mass;
    if (a >= 0) h.block<3, 3>(3 * a, 3 * a) += k / ma;
    if (b >= 0) h.block<3, 3>(3 * b, 3 * b) += k / mb;
    if (a >= 0 && b >= 0) {
      const Eigen::Matrix3d off = -k / std::sqrt(ma * mb);
      h.block<3, 3>(3 * a, 3 * b) += off;
      h.block<3, 3>(3 * b, 3 * a) += off;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

double wall_energy(const SurfaceWall& w, std::span<const Vec3> x, const Vec3& anchor_pos, std::size_t anchor) {
  double e = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i == anchor) continue;
    const double depth = w.height - (x[i] - anchor_pos).dot(w.normal);
    if (depth > 0.0) e += 0.5 * w.stiffness * depth * depth;
  }
  return e;
}

void add_wall_forces(const SurfaceWall& w, std::span<const Vec3> x, std::span<Vec3> f, const Vec3& anchor_pos,
                     std::size_t anchor) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i == anchor) continue;
    const double depth = w.height - (x[i] - anchor_pos).dot(w.normal);
    if (depth > 0.0) f[i] += w.stiffness * depth * w.normal;
  }
}

double wrap_phi(double phi) {
  phi = std::fmod(phi, units::two_pi);
  if (phi < 0.0) phi += units::two_pi;
  if (phi >= units::two_pi) phi = 0.0;
  return phi;
}

// Probability mass of the zone law sin(s)/(cos a - cos b) inside [lo, hi].
double zone_mass(double lo, double hi, double a, double b) {
  const double l = std::max(lo, a);
  const double h = std::min(hi, b);
  if (h <= l) return 0.0;
  return (std::cos(l) - std::cos(h)) / (std::cos(a) - std::cos(b));
}

struct PooledMsd {
  double dt = 0.0;
  std::vector<double> msd;
};

PooledMsd pooled_theta_msd(std::span<const AngleSeries> series) {
  if (series.empty()) throw InputError("no angle series");
  const double dt = series.front().dt;
  std::size_t shortest = series.front().size();
  for (const auto& s : series) {
    if (s.dt != dt) throw InputError("angle series have different sampling intervals");
    shortest = std::min(shortest, s.size());
  }
  if (shortest < 3) throw InputError("angle series too short for an MSD");
  const std::size_t max_lag = shortest / 2;
  std::vector<double> num(max_lag + 1, 0.0);
  std::vector<double> den(max_lag + 1, 0.0);
  for (const auto& s : series) {
    const auto m = mean_square_displacement(s.theta, max_lag);
    for (std::size_t k = 0; k <= max_lag; ++k) {
      const double w = static_cast<double>(s.size() - k);
      num[k] += w * m[k];
      den[k] += w;
    }
  }
  PooledMsd out{dt, std::vector<double>(max_lag + 1)};
  for (std::size_t k = 0; k <= max_lag; ++k) out.msd[k] = num[k] / den[k];
  return out;
}

// Least-squares slope of msd = 2 D t through the origin over lags 1..m.
double origin_slope(const std::vector<double>& msd, double dt, std::size_t m) {
  double stt = 0.0;
  double sty = 0.0;
  for (std::size_t k = 1; k <= m; ++k) {
    const double t = static_cast<double>(k) * dt;
    stt += t * t;
    sty += t * msd[k];
  }
  return sty / (2.0 * stt);
}

// Least squares of msd = 2 D t - b t^(3/2): the t^(3/2) term absorbs the
// short-time deficit caused by reflecting zone boundaries.
std::pair<double, double> wall_corrected_slope(const std::vector<double>& msd, double dt, std::size_t m) {
  Eigen::MatrixXd design(m, 2);
  Eigen::VectorXd rhs(m);
  for (std::size_t k = 1; k <= m; ++k) {
    const double t = static_cast<double>(k) * dt;
    design(k - 1, 0) = 2.0 * t;
    design(k - 1, 1) = -t * std::sqrt(t);
    rhs(k - 1) = msd[k];
  }
  const Eigen::Vector2d c = design.colPivHouseholderQr().solve(rhs);
  return {c(0), c(1)};
}

std::vector<double> thin(std::span<const double> x, std::size_t stride) {
  std::vector<double> out;
  out.reserve(x.size() / std::max<std::size_t>(stride, 1) + 1);
  for (std::size_t i = 0; i < x.size(); i += std::max<std::size_t>(stride, 1)) out.push_back(x[i]);
  return out;
}

}  // namespace

SurfaceFrame surface_frame(const Molecule& m) {
  const std::size_t anchor = require_anchor(m);
  SurfaceFrame f;
  f.origin = m.atoms[anchor].position;
  Vec3 com = Vec3::Zero();
  double mass = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (i == anchor) continue;
    com += m.atoms[i].mass * m.atoms[i].position;
    mass += m.atoms[i].mass;
  }
  if (mass <= 0.0) throw InputError("molecule has no atoms besides the anchor");
  const Vec3 n = com / mass - f.origin;
  if (n.norm() < 1e-9) throw InputError("centre of mass coincides with the anchor; surface normal undefined");
  f.normal = n.normalized();
  Vec3 x = Vec3::UnitX() - Vec3::UnitX().dot(f.normal) * f.normal;
  if (x.norm() < 1e-3) x = Vec3::UnitY() - Vec3::UnitY().dot(f.normal) * f.normal;
  f.x_axis = x.normalized();
  return f;
}

SurfaceWall default_surface_wall(const Molecule& m, const SurfaceFrame& frame, double clearance, double stiffness) {
  const std::size_t anchor = require_anchor(m);
  double lowest = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (i == anchor) continue;
    lowest = std::min(lowest, (m.atoms[i].position - frame.origin).dot(frame.normal));
  }
  return SurfaceWall{frame.normal, lowest - clearance, stiffness};
}

double network_energy(const SpringNetwork& net, std::span<const Vec3> positions, const Molecule& m,
                      const std::optional<SurfaceWall>& wall) {
  SpringForceField ff(net, positions.size());
  std::vector<Vec3> f(positions.size());
  double e = ff.compute_serial(positions, f);
  if (wall) {
    const std::size_t anchor = require_anchor(m);
    e += wall_energy(*wall, positions, positions[anchor], anchor);
  }
  return e;
}

LangevinRunInfo simulate_langevin(const SpringNetwork& net, const Molecule& m, const LangevinParams& p,
                                  const FrameObserver& observer) {
  const std::size_t anchor = require_anchor(m);
  const std::size_t n = m.size();
  if (!(p.dt > 0.0)) throw InputError("Langevin dt must be positive");
  if (!(p.damping >= 0.0)) throw InputError("Langevin damping must be >= 0");
  if (!(p.temperature >= 0.0)) throw InputError("temperature must be >= 0");
  if (p.sample_every == 0) throw InputError("sample_every must be >= 1");
  if (p.dt * p.damping >= 1.0) throw InputError("Langevin dt * damping must be < 1");

  LangevinRunInfo info;
  info.max_angular_frequency = max_angular_frequency(net, m, anchor);
  if (info.max_angular_frequency > 0.0) {
    const double period = units::two_pi / info.max_angular_frequency;
    if (p.dt > period / 10.0)
      throw InputError("Langevin dt = " + std::to_string(p.dt) + " ps exceeds a tenth of the fastest spring period (" +
                       std::to_string(period) + " ps)");
  }

  const double kt = units::thermal_energy_mm(p.temperature);
  info.thermal_energy = kt;

  std::vector<Vec3> x(n);
  if (p.initial_positions) {
    if (p.initial_positions->size() != n) throw InputError("initial positions do not match the molecule");
    x = *p.initial_positions;
  } else {
    for (std::size_t i = 0; i < n; ++i) x[i] = m.atoms[i].position;
  }
  const Vec3 anchor_pos = x[anchor];

  std::vector<double> inv_mass(n);
  std::vector<double> thermal_speed(n);
  for (std::size_t i = 0; i < n; ++i) {
    inv_mass[i] = 1.0 / m.atoms[i].mass;
    thermal_speed[i] = std::sqrt(kt * inv_mass[i]);
  }

  std::mt19937_64 engine(p.seed);
  boost::random::normal_distribution<double> normal;

  std::vector<Vec3> v(n, Vec3::Zero());
  for (std::size_t i = 0; i < n; ++i)
    if (i != anchor) v[i] = thermal_speed[i] * Vec3(normal(engine), normal(engine), normal(engine));

  SpringForceField ff(net, n);
  std::vector<Vec3> f(n);
  auto forces = [&]() {
    double e = ff.compute_serial(x, f);
    if (p.wall) {
      add_wall_forces(*p.wall, x, f, anchor_pos, anchor);
      e += wall_energy(*p.wall, x, anchor_pos, anchor);
    }
    return e;
  };
  double potential = forces();

  const double c1 = std::exp(-p.damping * p.dt);
  const double c2 = std::sqrt(std::max(0.0, 1.0 - c1 * c1));
  const double half = 0.5 * p.dt;
  const double dof = 3.0 * static_cast<double>(n - 1);
  // Far above any thermal excursion; potential is in kcal/mol.
  const double divergence_limit = 1e4 * dof * std::max(kt / kForceToAcceleration, 0.6);

  const auto burn_steps = static_cast<std::size_t>(std::llround(p.burn_in / p.dt));
  const std::size_t total = burn_steps + p.steps;
  double kinetic_sum = 0.0;

  auto total_energy = [&]() {
    double ke = 0.0;
    for (std::size_t i = 0; i < n; ++i) ke += 0.5 * m.atoms[i].mass * v[i].squaredNorm();
    return potential + ke / kForceToAcceleration;
  };

  for (std::size_t step = 0; step <= total; ++step) {
    if (step == burn_steps) info.initial_energy = total_energy();
    if (step >= burn_steps) {
      const std::size_t k = step - burn_steps;
      if (k > 0) {
        double ke = 0.0;
        for (std::size_t i = 0; i < n; ++i) ke += 0.5 * m.atoms[i].mass * v[i].squaredNorm();
        kinetic_sum += ke;
      }
      if (k % p.sample_every == 0) {
        if (observer) observer(static_cast<double>(k) * p.dt, x);
        ++info.frames;
      }
    }
    if (step == total) break;

    for (std::size_t i = 0; i < n; ++i) {
      if (i == anchor) continue;
      v[i] += (half * kForceToAcceleration * inv_mass[i]) * f[i];
      x[i] += half * v[i];
      v[i] = c1 * v[i] + (c2 * thermal_speed[i]) * Vec3(normal(engine), normal(engine), normal(engine));
      x[i] += half * v[i];
    }
    potential = forces();
    for (std::size_t i = 0; i < n; ++i)
      if (i != anchor) v[i] += (half * kForceToAcceleration * inv_mass[i]) * f[i];

    if (step % 1000 == 999 && (!std::isfinite(potential) || potential > divergence_limit))
      throw NumericalError("Langevin dynamics diverged at step " + std::to_string(step + 1) +
                           " (potential energy " + std::to_string(potential) + " kcal/mol)");
  }
  info.final_energy = total_energy();
  if (p.steps > 0) info.mean_kinetic_per_dof = kinetic_sum / (static_cast<double>(p.steps) * dof);
  return info;
}

Trajectory record_trajectory(const SpringNetwork& net, const Molecule& m, const LangevinParams& p) {
  Trajectory t;
  t.sample_interval = p.dt * static_cast<double>(p.sample_every);
  simulate_langevin(net, m, p, [&](double, std::span<const Vec3> x) { t.frames.emplace_back(x.begin(), x.end()); });
  return t;
}

double aligned_rmsd(std::span<const Vec3> a, std::span<const Vec3> b, const Vec3& pivot) {
  if (a.size() != b.size() || a.empty()) throw InputError("aligned_rmsd: configurations differ in size");
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < a.size(); ++i) h += (a[i] - pivot) * (b[i] - pivot).transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Eigen::Matrix3d r = svd.matrixV() * d * svd.matrixU().transpose();
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (r * (a[i] - pivot) - (b[i] - pivot)).squaredNorm();
  return std::sqrt(s / static_cast<double>(a.size()));
}

SphericalAngles spherical_angles(const Vec3& relative, const SurfaceFrame& frame) {
  const double r = relative.norm();
  if (!(r > 1e-12)) throw InputError("target coincides with the anchor");
  const double z = relative.dot(frame.normal);
  const double x = relative.dot(frame.x_axis);
  const double y = relative.dot(frame.y_axis());
  SphericalAngles s;
  s.theta = std::acos(std::clamp(z / r, -1.0, 1.0));
  if (std::hypot(x, y) <= 1e-12 * r) {
    s.pole = true;
    s.phi = 0.0;
  } else {
    s.phi = wrap_phi(std::atan2(y, x));
  }
  return s;
}

AngleSeries target_angles(const Trajectory& traj, const SurfaceFrame& frame, std::size_t anchor_index,
                          std::size_t target_index) {
  AngleSeries a;
  a.dt = traj.sample_interval * units::picosecond;
  a.theta.reserve(traj.frames.size());
  a.phi.reserve(traj.frames.size());
  for (const auto& x : traj.frames) {
    if (anchor_index >= x.size() || target_index >= x.size()) throw InputError("atom index out of range");
    const auto s = spherical_angles(x[target_index] - x[anchor_index], frame);
    a.theta.push_back(s.theta);
    a.phi.push_back(s.phi);
    if (s.pole) ++a.pole_frames;
  }
  if (a.size() > 3) a.exploration_time = integrated_autocorrelation_time(a.theta) * a.dt;
  return a;
}

std::vector<AngleSeries> simulate_target_angles(const SpringNetwork& net, const Molecule& m, const LangevinParams& p,
                                                std::size_t target_index, std::size_t replicas) {
  const std::size_t anchor = require_anchor(m);
  if (target_index >= m.size() || target_index == anchor) throw InputError("invalid target atom index");
  const SurfaceFrame frame = surface_frame(m);
  std::vector<AngleSeries> out(replicas);
  std::vector<std::exception_ptr> errors(replicas);
  const long nrep = static_cast<long>(replicas);
#pragma omp parallel for schedule(dynamic, 1)
  for (long r = 0; r < nrep; ++r) {
    try {
      LangevinParams pr = p;
      pr.seed = p.seed ^ static_cast<std::uint64_t>(r);
      AngleSeries& a = out[r];
      a.dt = p.dt * static_cast<double>(p.sample_every) * units::picosecond;
      simulate_langevin(net, m, pr, [&](double, std::span<const Vec3> x) {
        const auto s = spherical_angles(x[target_index] - x[anchor], frame);
        a.theta.push_back(s.theta);
        a.phi.push_back(s.phi);
        if (s.pole) ++a.pole_frames;
      });
      if (a.size() > 3) a.exploration_time = integrated_autocorrelation_time(a.theta) * a.dt;
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

DiffusionFit fit_rotational_diffusion(const AngleSeries& a, const DiffusionFitOptions& opt) {
  return fit_rotational_diffusion(std::span<const AngleSeries>(&a, 1), opt);
}

DiffusionFit fit_rotational_diffusion(std::span<const AngleSeries> series, const DiffusionFitOptions& opt) {
  const auto pooled = pooled_theta_msd(series);
  const double dt = pooled.dt;
  const auto& msd = pooled.msd;
  const std::size_t max_lag = msd.size() - 1;
  if (max_lag < opt.min_points) throw NumericalError("no linear window: series too short");

  DiffusionFit fit;
  auto store_curve = [&](std::size_t points) {
    const std::size_t keep = std::min(max_lag, std::max<std::size_t>(5 * points, opt.min_points));
    fit.lag_time.resize(keep + 1);
    fit.msd.assign(msd.begin(), msd.begin() + static_cast<long>(keep) + 1);
    for (std::size_t k = 0; k <= keep; ++k) fit.lag_time[k] = static_cast<double>(k) * dt;
  };

  const bool frozen = std::all_of(series.begin(), series.end(), [](const AngleSeries& a) {
    return std::all_of(a.theta.begin(), a.theta.end(), [&](double v) { return v == a.theta.front(); });
  });
  if (frozen) {
    fit.d_r = 0.0;
    store_curve(opt.min_points);
    return fit;
  }

  double sum = 0.0;
  double sum2 = 0.0;
  double count = 0.0;
  for (const auto& a : series)
    for (double th : a.theta) {
      sum += th;
      sum2 += th * th;
      count += 1.0;
    }
  const double variance = std::max(0.0, sum2 / count - (sum / count) * (sum / count));

  double d = opt.initial_guess ? *opt.initial_guess : origin_slope(msd, dt, opt.min_points);
  if (!(d > 0.0)) throw NumericalError("no linear window: MSD does not grow");
  std::size_t points = opt.min_points;
  for (int it = 0; it < opt.max_iterations; ++it) {
    double t_max = opt.window_factor / d;
    if (opt.exploration_fraction > 0.0 && variance > 0.0)
      t_max = std::min(t_max, opt.exploration_fraction * variance / d);
    auto wanted = static_cast<std::size_t>(std::floor(t_max / dt));
    if (wanted < opt.min_points)
      throw NumericalError("no linear window: fewer than " + std::to_string(opt.min_points) +
                           " MSD points below t = " + std::to_string(t_max) + " s");
    if (wanted > max_lag) {
      if (it == 0) warn("rotational diffusion fit: window exceeds available lags; truncated");
      wanted = max_lag;
    }
    points = wanted;
    const double next = opt.wall_correction ? wall_corrected_slope(msd, dt, points).first : origin_slope(msd, dt, points);
    const bool converged = std::abs(next - d) <= 1e-4 * d;
    d = next;
    if (converged) break;
  }

  const double b = opt.wall_correction ? wall_corrected_slope(msd, dt, points).second : 0.0;
  fit.d_r = d;
  fit.window_min = 0.0;
  fit.window_max = static_cast<double>(points) * dt;
  double ss = 0.0;
  double mean = 0.0;
  for (std::size_t k = 1; k <= points; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double r = msd[k] - 2.0 * d * t + b * t * std::sqrt(t);
    ss += r * r;
    mean += msd[k];
  }
  mean /= static_cast<double>(points);
  fit.residual = std::sqrt(ss / static_cast<double>(points)) / mean;
  store_curve(points);
  return fit;
}

AngleHistograms angle_histograms(const AngleSeries& a, std::size_t bins) {
  return angle_histograms(std::span<const AngleSeries>(&a, 1), bins);
}

AngleHistograms angle_histograms(std::span<const AngleSeries> series, std::size_t bins) {
  if (bins < 10) throw InputError("angle histograms need at least 10 bins");
  std::size_t total = 0;
  for (const auto& s : series) total += s.size();
  if (total == 0) throw InputError("angle histograms: empty series");

  AngleHistograms h;
  const double dtheta = units::pi / static_cast<double>(bins);
  const double dphi = units::two_pi / static_cast<double>(bins);
  std::vector<double> ct(bins, 0.0);
  std::vector<double> cp(bins, 0.0);
  double lo = units::pi;
  double hi = 0.0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double th = s.theta[i];
      ct[std::min(bins - 1, static_cast<std::size_t>(th / dtheta))] += 1.0;
      cp[std::min(bins - 1, static_cast<std::size_t>(s.phi[i] / dphi))] += 1.0;
      lo = std::min(lo, th);
      hi = std::max(hi, th);
    }
  }
  const double n = static_cast<double>(total);
  h.theta_centers.resize(bins);
  h.phi_centers.resize(bins);
  h.p_theta.resize(bins);
  h.p_phi.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    h.theta_centers[b] = (static_cast<double>(b) + 0.5) * dtheta;
    h.phi_centers[b] = (static_cast<double>(b) + 0.5) * dphi;
    h.p_theta[b] = ct[b] / (n * dtheta);
    h.p_phi[b] = cp[b] / (n * dphi);
  }

  // Bin-averaged zone law against the empirical density.
  auto l2 = [&](double a, double b) {
    double s = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      const double l = static_cast<double>(k) * dtheta;
      const double model = zone_mass(l, l + dtheta, a, b) / dtheta;
      const double r = h.p_theta[k] - model;
      s += r * r * dtheta;
    }
    return std::sqrt(s);
  };

  double a = std::max(0.0, lo - 0.5 * dtheta);
  double b = std::min(units::pi, hi + 0.5 * dtheta);
  if (b - a < 1e-6) b = std::min(units::pi, a + dtheta);
  const double gap = 1e-6;
  constexpr int bits = 40;
  for (int round = 0; round < 50; ++round) {
    const double a0 = a;
    const double b0 = b;
    a = boost::math::tools::brent_find_minima([&](double x) { return l2(x, b); }, 0.0, b - gap, bits).first;
    b = boost::math::tools::brent_find_minima([&](double x) { return l2(a, x); }, a + gap, units::pi, bits).first;
    if (std::abs(a - a0) < 1e-7 && std::abs(b - b0) < 1e-7) break;
  }
  h.theta_min = a;
  h.theta_max = b;
  h.l2_distance = l2(a, b);
  return h;
}

double phi_uniformity_pvalue(std::span<const double> phi, std::size_t bins) {
  if (bins < 2) throw InputError("uniformity test needs at least 2 bins");
  if (phi.size() < 4) throw InputError("uniformity test: too few samples");
  std::vector<double> c(phi.size());
  std::vector<double> s(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    c[i] = std::cos(phi[i]);
    s[i] = std::sin(phi[i]);
  }
  const double tau = std::max(integrated_autocorrelation_time(c), integrated_autocorrelation_time(s));
  const auto stride = static_cast<std::size_t>(std::ceil(tau));
  const auto kept = thin(phi, stride);
  const double n = static_cast<double>(kept.size());
  if (n < 5.0 * static_cast<double>(bins))
    warn("phi uniformity: only " + std::to_string(kept.size()) + " effectively independent samples for " +
         std::to_string(bins) + " bins");
  std::vector<double> counts(bins, 0.0);
  const double width = units::two_pi / static_cast<double>(bins);
  for (double v : kept) counts[std::min(bins - 1, static_cast<std::size_t>(v / width))] += 1.0;
  const double expected = n / static_cast<double>(bins);
  double chi2 = 0.0;
  for (double o : counts) chi2 += (o - expected) * (o - expected) / expected;
  boost::math::chi_squared dist(static_cast<double>(bins - 1));
  return boost::math::cdf(boost::math::complement(dist, chi2));
}

OUEstimate estimate_ou_parameters(const VectorSeries& q, std::size_t short_lags) {
  const std::size_t n = q.size();
  if (short_lags == 0) short_lags = 10;
  if (n < 2 * short_lags + 2) throw InputError("OU estimate: series too short");
  if (!(q.dt > 0.0)) throw InputError("OU estimate: dt must be positive");

  OUEstimate est;
  double d_sum = 0.0;
  for (int k = 0; k < 3; ++k) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = q.values[i][k];
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    est.variance[k] = var;

    // msd(t) ~ 2 D t - c t^2 over the first lags
    const auto msd = mean_square_displacement(x, short_lags);
    Eigen::MatrixXd design(short_lags, 2);
    Eigen::VectorXd rhs(short_lags);
    for (std::size_t l = 1; l <= short_lags; ++l) {
      const double t = static_cast<double>(l) * q.dt;
      design(l - 1, 0) = 2.0 * t;
      design(l - 1, 1) = -t * t;
      rhs(l - 1) = msd[l];
    }
    const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(rhs);
    d_sum += coef(0);
  }
  est.diffusion = std::max(0.0, d_sum / 3.0);
  for (int k = 0; k < 3; ++k) {
    if (!(est.variance[k] > 0.0)) throw NumericalError("OU estimate: non-positive variance on axis " + std::to_string(k));
    est.eta[k] = est.diffusion / est.variance[k];
  }
  return est;
}

double gaussianity_pvalue(std::span<const double> x, std::size_t stride) {
  const auto kept = thin(x, stride);
  const double n = static_cast<double>(kept.size());
  if (n < 8) throw InputError("normality test: too few samples");
  const double mean = std::accumulate(kept.begin(), kept.end(), 0.0) / n;
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  for (double v : kept) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (!(m2 > 0.0)) throw NumericalError("normality test: zero variance");
  const double skew = m3 / std::pow(m2, 1.5);
  const double kurt = m4 / (m2 * m2);
  const double jb = n / 6.0 * (skew * skew + 0.25 * (kurt - 3.0) * (kurt - 3.0));
  return std::exp(-0.5 * jb);
}

}  // namespace nvsense
