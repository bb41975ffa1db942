#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Geometry>

#include <cmath>
#include <numeric>
#include <random>

#include "nvsense/diagnostics.hpp"
#include "nvsense/stochastic.hpp"
#include "nvsense/units.hpp"
#include "support.hpp"

using namespace nvsense;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// mu0/4pi * gamma_e * gamma_F * hbar with literal CODATA constants.
constexpr double kPrefactor = 1.25663706212e-6 / (4 * 3.141592653589793) * (2 * 3.141592653589793 * 28.024e9) * (2 * 3.141592653589793 * 40.1e6) *
                              1.054571817e-34;

SphereDiffusionParams zone_params(double d_r, double dt, std::uint64_t seed) {
  SphereDiffusionParams p;
  p.d_r = d_r;
  p.theta_min = 0.3;
  p.theta_max = 1.54;
  p.radius = 1.2e-9;
  p.dt = dt;
  p.seed = seed;
  return p;
}

double variance(const std::vector<double>& x) {
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double v = 0.0;
  for (double a : x) v += (a - mean) * (a - mean);
  return v / static_cast<double>(x.size());
}

}  // namespace

TEST_CASE("sphere diffusion samples the stationary zone law", "[stochastic]") {
  const auto p = zone_params(1e9, 1e-12, 5);
  const auto a = generate_sphere_trajectory(p, 2000000, 1000);
  const double c0 = std::cos(p.theta_min);
  const double c1 = std::cos(p.theta_max);
  const double n = static_cast<double>(a.size());
  const double crit = 1.95 / std::sqrt(n);
  CHECK(test::ks_distance(a.theta, [&](double t) { return (c0 - std::cos(t)) / (c0 - c1); }) < crit);
  CHECK(test::ks_distance(a.phi, [](double f) { return f / units::two_pi; }) < crit);
}

TEST_CASE("direct zone samples follow the zone law", "[stochastic]") {
  std::mt19937_64 rng(8);
  std::vector<double> theta;
  for (int i = 0; i < 20000; ++i) theta.push_back(sample_zone(rng, 0.3, 1.2).first);
  const double c0 = std::cos(0.3);
  const double c1 = std::cos(1.2);
  CHECK(test::ks_distance(theta, [&](double t) { return (c0 - std::cos(t)) / (c0 - c1); }) < 1.63 / std::sqrt(20000.0));
}

TEST_CASE("reflection keeps theta inside the zone", "[stochastic][property]") {
  auto p = zone_params(1e10, 1e-12, 6);  // large steps, many reflections
  const auto a = generate_sphere_trajectory(p, 200000);
  for (double t : a.theta) {
    REQUIRE(t >= p.theta_min);
    REQUIRE(t <= p.theta_max);
  }
  for (double f : a.phi) {
    REQUIRE(f >= 0.0);
    REQUIRE(f < units::two_pi);
  }
}

TEST_CASE("zone symmetric about the equator has mean theta pi/2", "[stochastic]") {
  auto p = zone_params(1e9, 1e-12, 7);
  p.theta_min = units::pi / 2 - 0.5;
  p.theta_max = units::pi / 2 + 0.5;
  const auto a = generate_sphere_trajectory(p, 2000000);
  const double mean = std::accumulate(a.theta.begin(), a.theta.end(), 0.0) / static_cast<double>(a.size());
  CHECK_THAT(mean, WithinAbs(units::pi / 2, 0.02));
}

TEST_CASE("zero diffusion leaves the target in place", "[stochastic]") {
  const auto p = zone_params(0.0, 1e-12, 9);
  const auto a = generate_sphere_trajectory(p, 1000);
  REQUIRE(a.size() == 1001);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.theta[i] == a.theta[0]);
    CHECK(a.phi[i] == a.phi[0]);
  }
}

TEST_CASE("sphere generator input checks", "[stochastic]") {
  auto p = zone_params(1e9, 1e-12, 1);
  p.theta_max = 0.2;
  CHECK_THROWS_AS(validate(p), InputError);
  p = zone_params(-1.0, 1e-12, 1);
  CHECK_THROWS_AS(validate(p), InputError);
  p = zone_params(1e9, 0.0, 1);
  CHECK_THROWS_AS(validate(p), InputError);
  ScopedWarningCapture warnings;
  validate(zone_params(1e9, 1e-10, 1));
  CHECK_FALSE(warnings.messages().empty());
}

TEST_CASE("OU stationary variance and MSD", "[stochastic]") {
  OUParams p;
  p.eta = Vec3(1e12, 2e12, 4e12);
  p.d = 1e-9;
  p.dt = 1e-14;
  p.seed = 12;
  const auto q = generate_ou_trajectory(p, 2000000);
  for (int k = 0; k < 3; ++k) {
    std::vector<double> x;
    for (const auto& v : q.values) x.push_back(v[k]);
    CHECK_THAT(variance(x), WithinRel(p.d / p.eta[k], 0.05));
  }
  std::vector<double> x;
  for (const auto& v : q.values) x.push_back(v.x());
  for (std::size_t lag : {10u, 50u, 200u}) {
    double msd = 0.0;
    for (std::size_t i = lag; i < x.size(); ++i) msd += (x[i] - x[i - lag]) * (x[i] - x[i - lag]);
    msd /= static_cast<double>(x.size() - lag);
    const double t = static_cast<double>(lag) * p.dt;
    CHECK_THAT(msd, WithinRel(2.0 * p.d / p.eta.x() * (1.0 - std::exp(-p.eta.x() * t)), 0.05));
  }
}

TEST_CASE("OU with zero noise decays exponentially", "[stochastic]") {
  OUParams p;
  p.eta = Vec3(1e12, 1e12, 1e12);
  p.dt = 1e-13;
  const auto q = generate_ou_trajectory(p, 10, Vec3(1.0, 2.0, 3.0));
  REQUIRE(q.size() == 11);
  CHECK_THAT(q.values[10].z(), WithinRel(3.0 * std::exp(-1.0), 1e-12));
}

TEST_CASE("hyperfine vector on and off the NV axis", "[stochastic]") {
  const double d = 1e-9;
  const double g = units::gamma_fluorine19;
  const Vec3 axial = hyperfine_from_position(Vec3(0, 0, d), g);
  CHECK(axial.x() == 0.0);
  CHECK(axial.y() == 0.0);
  CHECK_THAT(axial.z(), WithinRel(-2.0 * kPrefactor / (d * d * d), 1e-12));
  const Vec3 plane = hyperfine_from_position(Vec3(d, 0, 0), g);
  CHECK_THAT(plane.z(), WithinRel(kPrefactor / (d * d * d), 1e-12));
  CHECK(plane.x() == 0.0);

  const Vec3 r(0.6e-9, -0.3e-9, 1.1e-9);
  const double n = r.norm();
  const double ux = r.x() / n, uy = r.y() / n, uz = r.z() / n;
  const Vec3 a = hyperfine_from_position(r, g);
  const double s = -kPrefactor / (n * n * n);
  CHECK_THAT(a.x(), WithinRel(s * 3 * ux * uz, 1e-12));
  CHECK_THAT(a.y(), WithinRel(s * 3 * uy * uz, 1e-12));
  CHECK_THAT(a.z(), WithinRel(s * (3 * uz * uz - 1), 1e-12));
  // 1 nm on axis is about 150 kHz
  CHECK_THAT(std::abs(axial.z()) / units::two_pi, WithinRel(1.49e5, 0.01));

  CHECK_THROWS_AS(hyperfine_from_position(Vec3(0, 0, 5e-11), g), InputError);
}

TEST_CASE("hyperfine scales as inverse cube", "[stochastic][property]") {
  const Vec3 r(0.4e-9, 0.2e-9, 0.9e-9);
  const Vec3 a = hyperfine_from_position(r, units::gamma_fluorine19);
  const Vec3 b = hyperfine_from_position(2.0 * r, units::gamma_fluorine19);
  CHECK((a / 8.0 - b).norm() <= 1e-12 * a.norm());
}

TEST_CASE("NV frame with a tilted axis", "[stochastic]") {
  Geometry g;
  g.nv_axis = Vec3(1, 0, 1).normalized();
  CHECK((to_nv_frame(g.nv_axis, g) - Vec3::UnitZ()).norm() < 1e-14);
  const Vec3 v(0.3, -0.2, 0.5);
  CHECK_THAT(to_nv_frame(v, g).norm(), WithinRel(v.norm(), 1e-14));
  g.nv_axis = Vec3(0, 0, 2);
  CHECK_THROWS_AS(validate(g), InputError);
}

TEST_CASE("symmetric placement has zero mean transverse coupling", "[stochastic]") {
  std::mt19937_64 rng(13);
  AngleSeries a;
  a.dt = 1e-12;
  for (int i = 0; i < 200000; ++i) {
    const auto [t, f] = sample_zone(rng, 0.3, 1.54);
    a.theta.push_back(t);
    a.phi.push_back(f);
  }
  const auto h = trajectory_to_hyperfine(a, Geometry::bulk(2e-9, 0.0), 1.2e-9, units::gamma_fluorine19);
  const auto s = estimate_stats(h, 5e-12);
  const double sigma = std::sqrt(s.covariance(0, 0));
  CHECK(std::abs(s.mean.x()) < 0.02 * sigma);
  CHECK(std::abs(s.mean.y()) < 0.02 * sigma);
  CHECK(std::abs(s.mean.z()) > 0.0);
}

TEST_CASE("small OU vibrations give a linearized hyperfine covariance", "[stochastic]") {
  OUParams p;
  p.eta = Vec3(1e13, 1e13, 1e13);
  p.d = 1e-11;  // rms displacement ~1 pm
  p.dt = 1e-14;
  p.seed = 14;
  const auto q = generate_ou_trajectory(p, 400000);
  const Geometry g = Geometry::bulk(2e-9, 0.5e-9);
  const Vec3 offset(0.3e-9, 0.2e-9, 1.0e-9);
  const auto h = trajectory_to_hyperfine(q, g, offset, units::gamma_fluorine19);
  const auto s = estimate_stats(h, 1e-12);

  // Central-difference Jacobian at the equilibrium position.
  const Vec3 r0 = offset - g.nv_position;
  Eigen::Matrix3d jac;
  const double eps = 1e-13;
  for (int k = 0; k < 3; ++k) {
    Vec3 step = Vec3::Zero();
    step[k] = eps;
    jac.col(k) = (hyperfine_from_position(r0 + step, units::gamma_fluorine19) -
                  hyperfine_from_position(r0 - step, units::gamma_fluorine19)) /
                 (2.0 * eps);
  }
  const Eigen::Matrix3d expected = jac * jac.transpose() * (p.d / p.eta.x());
  for (int i = 0; i < 3; ++i) CHECK_THAT(s.covariance(i, i), WithinRel(expected(i, i), 0.05));
  CHECK((s.mean - hyperfine_from_position(r0, units::gamma_fluorine19)).norm() <
        0.05 * std::sqrt(expected.trace()));
}

TEST_CASE("stats of a constant series vanish", "[stochastic]") {
  HyperfineSeries h;
  h.dt = 1e-12;
  h.values.assign(1000, Vec3(1.0, 2.0, 3.0));
  const auto s = estimate_stats(h, 1e-11);
  CHECK(s.covariance.isZero(0.0));
  CHECK(s.gamma.isZero(0.0));
  CHECK(s.tau.isZero(0.0));
  CHECK(s.rates.isZero(0.0));
  CHECK(s.mean == Vec3(1.0, 2.0, 3.0));
}

TEST_CASE("stats recover an exponential correlation", "[stochastic]") {
  OUParams p;
  p.eta = Vec3(1e6, 2e6, 4e6);
  p.d = 1e6;  // variance D / eta in (rad/s)^2
  p.dt = 1e-8;
  p.seed = 15;
  const auto q = generate_ou_trajectory(p, 4000000);
  HyperfineSeries h;
  h.dt = q.dt;
  h.values = q.values;

  for (auto fit : {CorrelationFit::integral, CorrelationFit::exponential}) {
    const auto s = estimate_stats(h, 1e-5, fit);
    for (int k = 0; k < 3; ++k) {
      const double var = p.d / p.eta[k];
      CHECK_THAT(s.covariance(k, k), WithinRel(var, 0.03));
      CHECK_THAT(s.tau[k], WithinRel(1.0 / p.eta[k], 0.08));
      CHECK_THAT(s.gamma(k, k), WithinRel(2.0 * var / p.eta[k], 0.08));
    }
    if (fit == CorrelationFit::exponential)
      for (int k = 0; k < 3; ++k)
        CHECK_THAT(s.gamma(k, k), WithinRel(2.0 * s.correlation[0](k, k) * s.tau[k], 1e-12));
    CHECK(std::abs(s.gamma(0, 1)) < 0.05 * s.gamma(0, 0));
    CHECK_THAT(s.tau_hat, WithinRel(1e-6, 0.08));
  }
}

TEST_CASE("scalar spectrum of an exponential is Lorentzian", "[stochastic]") {
  const double tau = 1e-6;
  const double var = 3.0;
  const double dt = 1e-9;
  std::vector<double> c(30001);
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = var * std::exp(-static_cast<double>(k) * dt / tau);
  const std::vector<double> omega{0.0, 3e5, 1e6, 4e6};
  const auto s = power_spectrum(dt, c, omega);
  for (std::size_t w = 0; w < omega.size(); ++w)
    CHECK_THAT(s[w], WithinRel(2.0 * var * tau / (1.0 + omega[w] * omega[w] * tau * tau), 1e-3));
}

TEST_CASE("matrix spectrum at zero frequency equals gamma", "[stochastic]") {
  const auto a = generate_sphere_trajectory(zone_params(1e9, 1e-11, 16), 400000);
  const auto h = trajectory_to_hyperfine(a, Geometry::bulk(2e-9, 1.5e-9), 1.2e-9, units::gamma_fluorine19);
  const auto s = estimate_stats(h, 1e-8);
  const std::vector<double> zero{0.0};
  const Eigen::Matrix3cd spec = power_spectrum(s, zero)[0];
  CHECK((spec.real() - s.gamma).norm() < 1e-10 * s.gamma.norm());
  CHECK(spec.imag().norm() < 1e-12 * s.gamma.norm());
}

TEST_CASE("dissipation rate scales as inverse diffusion", "[stochastic][property]") {
  // (D, dt) and (2D, dt/2) produce the same angle sequence.
  const Geometry g = Geometry::bulk(2e-9, 1.5e-9);
  const auto a1 = generate_sphere_trajectory(zone_params(1e9, 1e-12, 17), 100000);
  const auto a2 = generate_sphere_trajectory(zone_params(2e9, 0.5e-12, 17), 100000);
  REQUIRE(a1.theta == a2.theta);
  const auto s1 = estimate_stats(trajectory_to_hyperfine(a1, g, 1.2e-9, units::gamma_fluorine19), 1e-9);
  const auto s2 = estimate_stats(trajectory_to_hyperfine(a2, g, 1.2e-9, units::gamma_fluorine19), 0.5e-9);
  for (int k = 0; k < 3; ++k) CHECK_THAT(s2.rates[k], WithinRel(0.5 * s1.rates[k], 1e-9));
}

TEST_CASE("gamma is positive semidefinite and rotates covariantly", "[stochastic][property]") {
  const auto a = generate_sphere_trajectory(zone_params(1e9, 1e-11, 18), 200000);
  const auto h = trajectory_to_hyperfine(a, Geometry::bulk(2e-9, 1.5e-9), 1.2e-9, units::gamma_fluorine19);
  const auto s = estimate_stats(h, 1e-8);
  CHECK(s.rates.minCoeff() >= 0.0);
  CHECK(s.rates[0] <= s.rates[1]);
  CHECK(s.rates[1] <= s.rates[2]);

  const Eigen::Matrix3d rot = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
  HyperfineSeries turned = h;
  for (auto& v : turned.values) v = rot * v;
  const auto t = estimate_stats(turned, 1e-8);
  CHECK((t.gamma - rot * s.gamma * rot.transpose()).norm() < 1e-9 * s.gamma.norm());
  for (int k = 0; k < 3; ++k) CHECK_THAT(t.rates[k], WithinAbs(s.rates[k], 1e-9 * s.rates[2]));
}

TEST_CASE("negative dissipation eigenvalues", "[stochastic]") {
  HyperfineStats s;
  s.gamma = Eigen::Vector3d(1.0, -1e-9, 2.0).asDiagonal();
  decompose_gamma(s);
  CHECK(s.rates.minCoeff() == 0.0);
  s.gamma = Eigen::Vector3d(1.0, -0.5, 2.0).asDiagonal();
  CHECK_THROWS_AS(decompose_gamma(s), NumericalError);
}

TEST_CASE("sphere hyperfine series is stationary", "[stochastic][property]") {
  const auto a = generate_sphere_trajectory(zone_params(1e9, 1e-11, 19), 800000);
  const auto h = trajectory_to_hyperfine(a, Geometry::bulk(2e-9, 1.5e-9), 1.2e-9, units::gamma_fluorine19);
  HyperfineSeries first, second;
  first.dt = second.dt = h.dt;
  const auto half = static_cast<long>(h.size() / 2);
  first.values.assign(h.values.begin(), h.values.begin() + half);
  second.values.assign(h.values.begin() + half, h.values.end());
  const auto s1 = estimate_stats(first, 1e-8);
  const auto s2 = estimate_stats(second, 1e-8);
  for (int k = 0; k < 3; ++k) CHECK_THAT(s1.covariance(k, k), WithinRel(s2.covariance(k, k), 0.05));
  CHECK((s1.mean - s2.mean).norm() < 0.05 * std::sqrt(s1.covariance.trace()));
}

TEST_CASE("stats input checks", "[stochastic]") {
  HyperfineSeries h;
  h.dt = 1e-12;
  h.values.assign(100, Vec3::Zero());
  CHECK_THROWS_AS(estimate_stats(h, 1e-12), InputError);
  CHECK_THROWS_AS(estimate_stats(h, 1e-9), InputError);
  h.dt = 0.0;
  CHECK_THROWS_AS(estimate_stats(h, 1e-11), InputError);
}
