#pragma once

// Parametric trajectory generators (rotational diffusion in a spherical
// zone, Ornstein-Uhlenbeck vibrations), the position -> hyperfine map, and
// the correlation statistics consumed by the spin solvers. SI units; the
// hyperfine vector is an angular frequency (rad/s).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <boost/random/normal_distribution.hpp>

#include "nvsense/series.hpp"
#include "nvsense/units.hpp"

namespace nvsense {

struct SphereDiffusionParams {
  double d_r = 0.0;        // 1/s
  double theta_min = 0.0;  // rad
  double theta_max = 0.0;  // rad
  double radius = 0.0;     // m
  double dt = 0.0;         // s
  std::uint64_t seed = 0;
};

/// Throws InputError on invalid parameters; warns when dt * d_r > 1e-2.
void validate(const SphereDiffusionParams& p);

/// Euler-Maruyama on the sphere with reflection at theta_min/theta_max.
/// The initial point is drawn from the stationary zone law.
class SphereDiffusion {
 public:
  explicit SphereDiffusion(const SphereDiffusionParams& p);

  double theta() const { return theta_; }
  double phi() const { return phi_; }
  void step();

 private:
  SphereDiffusionParams p_;
  double drift_;
  double kick_;
  double theta_;
  double phi_;
  std::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;
};

/// n_steps + 1 samples (initial point included), keeping every `keep_every`-th.
AngleSeries generate_sphere_trajectory(const SphereDiffusionParams& p, std::size_t n_steps,
                                       std::size_t keep_every = 1);

/// Draws (theta, phi) from the stationary zone law.
template <class Engine>
std::pair<double, double> sample_zone(Engine& engine, double theta_min, double theta_max);

/// Uniform position on the zone of a sphere of radius r around the origin
/// (z axis = surface normal).
Vec3 zone_point(double theta, double phi, double radius);

struct OUParams {
  Vec3 eta = Vec3::Ones();     // 1/s
  double d = 0.0;              // m^2/s
  Vec3 offset = Vec3::Zero();  // m, equilibrium position relative to the anchor
  double dt = 0.0;             // s
  std::uint64_t seed = 0;
};

void validate(const OUParams& p);

/// Exact OU update per axis: q' = q e^{-eta dt} + sqrt(D/eta (1 - e^{-2 eta dt})) xi.
/// Starts from `initial` if given, otherwise from the stationary law.
/// Returns displacements q (without the offset).
VectorSeries generate_ou_trajectory(const OUParams& p, std::size_t n_steps,
                                    const std::optional<Vec3>& initial = std::nullopt);

struct Geometry {
  Vec3 nv_position = Vec3::Zero();      // m
  Vec3 anchor_position = Vec3::Zero();  // m
  Vec3 nv_axis = Vec3::UnitZ();

  /// Surface plane z = 0 with the anchor at the origin; the NV sits
  /// depth below it and lateral_offset along x, axis along the normal.
  static Geometry bulk(double depth, double lateral_offset);
};

void validate(const Geometry& g);

/// Dipolar hyperfine vector (rad/s) for target position r relative to the
/// NV, given in the NV frame. Throws InputError for |r| < 0.1 nm.
Vec3 hyperfine_from_position(const Vec3& r, double gamma_n);

/// Expresses a lab-frame vector in the NV frame (z along nv_axis).
Vec3 to_nv_frame(const Vec3& v, const Geometry& g);

/// Target on a shell of `radius` around the anchor.
HyperfineSeries trajectory_to_hyperfine(const AngleSeries& a, const Geometry& g, double radius, double gamma_n);
/// Target at anchor + offset + q(t).
HyperfineSeries trajectory_to_hyperfine(const VectorSeries& q, const Geometry& g, const Vec3& offset,
                                        double gamma_n);

enum class CorrelationFit { integral, exponential };

struct HyperfineStats {
  Vec3 mean = Vec3::Zero();                         // rad/s
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  double lag_dt = 0.0;                              // s
  std::vector<Eigen::Matrix3d> correlation;         // C_ij(k lag_dt) = <dA_i(t + tau) dA_j(t)>
  CorrelationFit fit = CorrelationFit::integral;
  Vec3 tau = Vec3::Zero();                          // correlation time per axis, s
  Eigen::Matrix3d gamma = Eigen::Matrix3d::Zero();  // zero-frequency spectrum, 1/s
  Vec3 rates = Vec3::Zero();                        // eigenvalues of gamma, ascending
  Eigen::Matrix3d axes = Eigen::Matrix3d::Identity();  // eigenvectors as columns
  double sigma_hat2 = 0.0;                          // rad^2/s^2
  double tau_hat = 0.0;                             // s
};

/// Sample moments, FFT correlations up to tau_max, and the dissipation
/// matrix. With the exponential fit the diagonal uses gamma_ii =
/// 2 sigma_ii^2 tau_ii; off-diagonal entries always use the integral.
HyperfineStats estimate_stats(const HyperfineSeries& h, double tau_max,
                              CorrelationFit fit = CorrelationFit::integral);

/// Fills rates/axes from `gamma` (symmetrized), clamping tiny negative
/// eigenvalues. Throws NumericalError on a significantly negative one.
void decompose_gamma(HyperfineStats& s);

/// S_ij(w) = int_{-tau_max}^{tau_max} C_ij(tau) e^{i w tau} dtau (trapezoid),
/// using C_ij(-tau) = C_ji(tau).
std::vector<Eigen::Matrix3cd> power_spectrum(const HyperfineStats& s, std::span<const double> omega);
/// Scalar even correlation function c(k dt), k >= 0.
std::vector<double> power_spectrum(double dt, std::span<const double> c, std::span<const double> omega);

// ---------------------------------------------------------------------------

template <class Engine>
std::pair<double, double> sample_zone(Engine& engine, double theta_min, double theta_max) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double c0 = std::cos(theta_min);
  const double c1 = std::cos(theta_max);
  const double c = c0 - u(engine) * (c0 - c1);
  const double theta = std::acos(std::clamp(c, -1.0, 1.0));
  const double phi = units::two_pi * u(engine);
  return {theta, phi};
}

}  // namespace nvsense
