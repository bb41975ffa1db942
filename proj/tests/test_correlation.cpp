#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "nvsense/correlation.hpp"

using namespace nvsense;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

}  // namespace

TEST_CASE("FFT cross-correlation matches the direct sum", "[correlation]") {
  for (std::size_t n : {1u, 7u, 64u, 1000u}) {
    const auto x = noise(n, 1 + n);
    const auto y = noise(n, 2 + n);
    const std::size_t lags = n > 1 ? n - 1 : 0;
    const auto c = cross_correlation(x, y, lags);
    REQUIRE(c.size() == lags + 1);
    for (std::size_t m = 0; m <= lags; ++m) {
      double direct = 0.0;
      for (std::size_t t = 0; t + m < n; ++t) direct += x[t + m] * y[t];
      CHECK_THAT(c[m], WithinAbs(direct / static_cast<double>(n), 1e-12));
    }
  }
}

TEST_CASE("autocorrelation at lag zero is the mean square", "[correlation][property]") {
  const auto x = noise(5000, 3);
  double ms = 0.0;
  for (double v : x) ms += v * v;
  const auto c = cross_correlation(x, x, 10);
  CHECK_THAT(c[0], WithinRel(ms / 5000.0, 1e-12));
  for (double v : c) CHECK(std::abs(v) <= c[0]);
}

TEST_CASE("MSD matches the direct sum", "[correlation]") {
  const auto x = noise(777, 4);
  const auto msd = mean_square_displacement(x, 100);
  REQUIRE(msd.size() == 101);
  CHECK(msd[0] == 0.0);
  for (std::size_t m = 1; m <= 100; ++m) {
    double direct = 0.0;
    for (std::size_t t = 0; t + m < x.size(); ++t) direct += (x[t + m] - x[t]) * (x[t + m] - x[t]);
    CHECK_THAT(msd[m], WithinRel(direct / static_cast<double>(x.size() - m), 1e-10));
  }
}

TEST_CASE("MSD of a linear ramp is quadratic", "[correlation]") {
  std::vector<double> x(200);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.5 * static_cast<double>(i);
  const auto msd = mean_square_displacement(x, 20);
  for (std::size_t m = 0; m <= 20; ++m) CHECK_THAT(msd[m], WithinAbs(0.25 * static_cast<double>(m * m), 1e-9));
}

TEST_CASE("integrated autocorrelation time of AR(1)", "[correlation]") {
  const double rho = 0.9;
  const auto e = noise(400000, 5);
  std::vector<double> x(e.size());
  x[0] = e[0];
  for (std::size_t i = 1; i < x.size(); ++i) x[i] = rho * x[i - 1] + std::sqrt(1 - rho * rho) * e[i];
  CHECK_THAT(integrated_autocorrelation_time(x), WithinRel((1 + rho) / (1 - rho), 0.1));
  const double white = integrated_autocorrelation_time(e);
  CHECK(white >= 1.0);
  CHECK(white < 1.1);
}
