#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nvsense/pipeline.hpp"

using namespace nvsense;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("zone samples average to the quadrature value", "[pipeline]") {
  const RegimeSetup s;
  const auto a = zone_hyperfine_samples(s.geometry, s.zone, s.gamma_n, 200000, 3);
  const auto b = zone_hyperfine_samples(s.geometry, s.zone, s.gamma_n, 200000, 3);
  CHECK(a == b);
  Vec3 mean = Vec3::Zero();
  for (const auto& v : a) mean += v;
  mean /= static_cast<double>(a.size());
  const Vec3 quad = zone_average_hyperfine(s.geometry, s.zone, s.gamma_n);
  CHECK((mean - quad).norm() < 0.01 * quad.norm());
}

TEST_CASE("SDE step divides the block", "[pipeline]") {
  RegimeSetup s;
  s.block_dt = 1e-7;
  for (double d : {0.0, 1e4, 1e6, 3e7, 1e9}) {
    s.d_r = d;
    const double h = regime_sde_step(s);
    const double ratio = s.block_dt / h;
    CHECK_THAT(ratio, WithinAbs(std::round(ratio), 1e-9));
    if (d > 0.0) CHECK(h * d <= 1e-2 * (1 + 1e-12));
  }
  s.d_r = -1.0;
  CHECK_THROWS_AS(regime_sde_step(s), InputError);
}

TEST_CASE("regime curves without Monte Carlo", "[pipeline]") {
  RegimeSetup s;
  s.d_r = 1e9;
  s.trajectories = 0;
  s.slow_samples = 500;
  s.stats_steps = 200000;
  const std::vector<double> t{0.0, 1e-4, 2e-4, 3e-4};
  const auto c = regime_curves(s, t);
  REQUIRE(c.p_fast.size() == t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(std::isnan(c.p_montecarlo[i]));
    CHECK(c.p_fast[i] == fast_transfer_probability(t[i], c.coupling));
    CHECK(c.p_lindblad[i] >= 0.0);
    CHECK(c.p_lindblad[i] <= 0.5);
    CHECK(std::isfinite(c.p_slow[i]));
  }
  CHECK(c.p_fast[0] == 0.0);
  CHECK_THAT(c.coupling.delta, WithinAbs(0.0, 1e-6));
  CHECK(c.stats.rates.minCoeff() >= 0.0);
  // Fast exchange: small rates, the dissipative curve stays near the coherent one.
  CHECK_THAT(c.p_lindblad[3], WithinAbs(c.p_fast[3], 0.05));
}

TEST_CASE("regime curves are reproducible and thread independent", "[pipeline][property]") {
  RegimeSetup s;
  s.d_r = 1e7;
  s.trajectories = 8;
  s.slow_samples = 100;
  s.stats_steps = 100000;
  const std::vector<double> t{0.0, 1e-4, 2e-4};
  const auto a = regime_curves(s, t);
  const auto b = regime_curves(s, t, Execution::serial);
  CHECK(a.p_montecarlo == b.p_montecarlo);
  CHECK(a.p_lindblad == b.p_lindblad);
  CHECK(a.p_slow == b.p_slow);
  for (double p : a.p_montecarlo) {
    CHECK(p >= 0.0);
    CHECK(p <= 0.5 + 1e-3);
  }
  CHECK_THROWS_AS(regime_curves(s, std::vector<double>{}), InputError);
}
