#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "nvsense/detection.hpp"
#include "nvsense/units.hpp"

using namespace nvsense;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double hz(double f) { return units::two_pi * f; }

}  // namespace

TEST_CASE("measurement time arithmetic", "[detection]") {
  const auto r = measurement_time(0.5, 1.0, 1e-3, 0.0);
  CHECK_THAT(r.time, WithinRel(4e-3, 1e-15));
  CHECK_THAT(r.runs, WithinRel(4.0, 1e-15));
  const auto a = measurement_time(0.1, 0.05, 2e-4, 1e-7);
  const auto b = measurement_time(0.1, 0.10, 2e-4, 1e-7);
  CHECK_THAT(b.time, WithinRel(0.25 * a.time, 1e-14));
  CHECK_THAT(a.time, WithinRel((2e-4 + 1e-7) / (0.05 * 0.05 * 0.01), 1e-14));
  // unit SNR: dP = 1 / (C sqrt(N))
  CHECK_THAT(a.delta_p, WithinRel(1.0 / (0.05 * std::sqrt(a.runs)), 1e-12));
  CHECK_THAT(measurement_time(0.1, 0.05, 2e-4, 1e-7, 2.0).time, WithinRel(4.0 * a.time, 1e-14));
  CHECK_THROWS_AS(measurement_time(0.0, 0.05, 1e-4, 1e-7), UnboundedMeasurementTime);
  CHECK_THROWS_AS(measurement_time(-0.1, 0.05, 1e-4, 1e-7), UnboundedMeasurementTime);
}

TEST_CASE("signal vanishes without coupling", "[detection]") {
  const auto cfg = ExperimentConfig::direct(0.0, 0.0, hz(500.0), 0.05);
  CHECK(delta_p(cfg, 2e-4) == 0.0);
  CHECK_THROWS_AS(measurement_time(delta_p(cfg, 2e-4), 0.05, 2e-4, 1e-7), UnboundedMeasurementTime);
}

TEST_CASE("noiseless signal follows the fast formula", "[detection]") {
  const double j = hz(700.0);
  for (double d : {0.0, 400.0}) {
    const auto cfg = ExperimentConfig::direct(j, hz(d), 0.0, 1.0);
    const SignalModel model(cfg);
    for (double t : {5e-5, 2e-4, 3.57e-4, 6e-4}) {
      const auto s = model.evaluate(t);
      CHECK_THAT(s.delta(), WithinAbs(fast_transfer_probability(t, cfg.coupling()), 1e-3));
      CHECK_THAT(s.without_target, WithinAbs(0.0, 1e-9));
    }
  }
  const auto cfg = ExperimentConfig::direct(j, 0.0, 0.0, 1.0);
  CHECK_THAT(delta_p(cfg, units::pi / (2 * j)), WithinAbs(0.5, 1e-3));
}

TEST_CASE("optimum without noise solves tan x = 4x", "[detection]") {
  // T ~ tau / sin^4(J tau) is stationary where tan(J tau) = 4 J tau.
  double lo = 1.0, hi = 1.5;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (std::tan(mid) - 4 * mid < 0 ? lo : hi) = mid;
  }
  const double j = hz(700.0);
  const auto r = optimize_interrogation_time(ExperimentConfig::direct(j, 0.0, 0.0, 0.05, 0.0));
  CHECK_THAT(r.tau_int, WithinRel(lo / j, 1e-3));
  CHECK(r.tau_int < units::pi / (2 * j));
  CHECK_FALSE(r.boundary);
}

TEST_CASE("flips shorten the optimum", "[detection]") {
  const double j = hz(700.0);
  const auto r = optimize_interrogation_time(ExperimentConfig::direct(j, 0.0, hz(500.0), 0.05));
  CHECK(r.tau_int < units::pi / (2 * j));
  CHECK_THAT(r.time, WithinRel((r.tau_int + 100e-9) / (0.05 * 0.05 * r.delta_p * r.delta_p), 1e-12));
  CHECK_THAT(r.runs * (r.tau_int + 100e-9), WithinRel(r.time, 1e-12));
}

TEST_CASE("first parameter row of the planning table", "[detection]") {
  const auto cfg = ExperimentConfig::direct(hz(700.0), 0.0, hz(500.0), 0.05);
  const auto r = optimize_interrogation_time(cfg);
  CHECK_THAT(r.tau_int, WithinRel(0.23e-3, 0.15));
  CHECK_THAT(r.time, WithinRel(2.6, 0.15));
  // dP implied by T = 2.6 s at tau_int = 0.23 ms
  const double implied = std::sqrt((0.23e-3 + 100e-9) / (0.05 * 0.05 * 2.6));
  CHECK_THAT(delta_p(cfg, 0.23e-3), WithinRel(implied, 0.1));
}

TEST_CASE("optimizer is deterministic", "[detection][property]") {
  const auto cfg = ExperimentConfig::direct(hz(250.0), 0.0, hz(1000.0), 0.05);
  const auto a = optimize_interrogation_time(cfg);
  const auto b = optimize_interrogation_time(cfg);
  CHECK(a.tau_int == b.tau_int);
  CHECK(a.time == b.time);
}

TEST_CASE("flip-rate sweep trends", "[detection][property]") {
  const auto cfg = ExperimentConfig::direct(hz(700.0), 0.0, 0.0, 0.05);
  std::vector<double> rates;
  for (double f = 2.0; f <= 4.5; f += 0.25) rates.push_back(hz(std::pow(10.0, f)));
  const auto sweep = flip_rate_sweep(cfg, rates);
  const auto serial = flip_rate_sweep(cfg, rates, Execution::serial);
  REQUIRE(sweep.size() == rates.size());
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    CHECK(sweep[i].gamma_flip == rates[i]);
    CHECK(sweep[i].result.tau_int == serial[i].result.tau_int);
    if (i == 0) continue;
    CHECK(sweep[i].result.tau_int <= sweep[i - 1].result.tau_int * (1 + 1e-3));
    CHECK(sweep[i].result.time >= sweep[i - 1].result.time);
  }
  const std::size_t n = sweep.size();
  const double slope = std::log(sweep[n - 1].result.tau_int / sweep[n - 3].result.tau_int) /
                       std::log(rates[n - 1] / rates[n - 3]);
  CHECK_THAT(slope, WithinAbs(-1.0, 0.15));
}

TEST_CASE("experiment validation", "[detection]") {
  auto cfg = ExperimentConfig::direct(hz(700.0), 0.0, 0.0, 0.05);
  cfg.contrast = 0.0;
  CHECK_THROWS_AS(validate(cfg), InputError);
  cfg.contrast = 1.5;
  CHECK_THROWS_AS(validate(cfg), InputError);
  cfg.contrast = 0.5;
  cfg.tau0 = -1.0;
  CHECK_THROWS_AS(validate(cfg), InputError);
  CHECK_THROWS_AS(ExperimentConfig::direct(-1.0, 0.0, 0.0, 0.05), InputError);
}

TEST_CASE("coupling vanishes for a centred NV", "[detection]") {
  const Zone zone{0.3, 1.54, 1.2e-9};
  const Vec3 a = zone_average_hyperfine(Geometry::bulk(2e-9, 0.0), zone, units::gamma_fluorine19);
  CHECK(std::hypot(a.x(), a.y()) < 1e-9 * std::abs(a.z()));
}

TEST_CASE("coupling decreases with depth", "[detection][property]") {
  const Zone zone{0.3, 1.54, 1.2e-9};
  const std::vector<double> depths{1.5e-9, 2e-9, 2.5e-9, 3e-9, 4e-9, 6e-9};
  const std::vector<double> offsets{0.5e-9, 1.5e-9};
  const auto map = coupling_map(depths, offsets, zone, units::gamma_fluorine19);
  const auto serial = coupling_map(depths, offsets, zone, units::gamma_fluorine19, Execution::serial);
  REQUIRE(map.size() == depths.size() * offsets.size());
  for (std::size_t i = 0; i < map.size(); ++i) CHECK(map[i].j == serial[i].j);
  for (double x : offsets) {
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& p : map) {
      if (p.lateral_offset != x) continue;
      CHECK(p.j < prev);
      CHECK_THAT(p.j, WithinRel(0.25 * std::hypot(p.mean_a.x(), p.mean_a.y()), 1e-14));
      prev = p.j;
    }
  }
  // Row-one placement lands near 0.7 kHz.
  for (const auto& p : map)
    if (p.depth == 2e-9 && p.lateral_offset == 1.5e-9) CHECK_THAT(p.j / units::two_pi, WithinRel(700.0, 0.15));
}

TEST_CASE("zone quadrature agrees with sampling", "[detection]") {
  const Zone zone{0.3, 1.54, 1.2e-9};
  const Geometry g = Geometry::bulk(2e-9, 1.5e-9);
  const Vec3 quad = zone_average_hyperfine(g, zone, units::gamma_fluorine19);
  std::mt19937_64 rng(99);
  Vec3 sum = Vec3::Zero();
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const auto [t, f] = sample_zone(rng, zone.theta_min, zone.theta_max);
    sum += hyperfine_from_position(zone_point(t, f, zone.radius) - g.nv_position, units::gamma_fluorine19);
  }
  const Vec3 mc = sum / n;
  CHECK_THAT(std::hypot(quad.x(), quad.y()), WithinRel(std::hypot(mc.x(), mc.y()), 5e-3));
  CHECK_THAT(quad.z(), WithinRel(mc.z(), 5e-3));
}
