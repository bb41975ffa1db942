#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <limits>
#include <set>
#include <sstream>

#include "nvsense/diagnostics.hpp"
#include "nvsense/io.hpp"

using namespace nvsense;

TEST_CASE("table rows and columns", "[io]") {
  Table t({"a", "b"});
  t.add_row({1.0, 2.0});
  t.add_row({3.0, 4.0});
  CHECK(t.rows() == 2);
  CHECK(t.column("b") == std::vector<double>{2.0, 4.0});
  CHECK_THROWS_AS(t.add_row({1.0}), InputError);
  CHECK_THROWS_AS(t.column("c"), InputError);
}

TEST_CASE("CSV round trip is exact", "[io][property]") {
  Table t({"x", "y"});
  t.add_row({0.1, -1e-300});
  t.add_row({1.0 / 3.0, 6.02214076e23});
  t.add_row({std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::infinity()});
  std::stringstream s;
  write_csv(s, t);
  CHECK(s.str().rfind("x,y\n", 0) == 0);
  const Table back = read_csv(s);
  REQUIRE(back.columns == t.columns);
  REQUIRE(back.rows() == 3);
  const auto& x = back.column("x");
  const auto& y = back.column("y");
  CHECK(x[0] == 0.1);
  CHECK(x[1] == 1.0 / 3.0);
  CHECK(y[1] == 6.02214076e23);
  CHECK(y[0] == -1e-300);
  CHECK(std::isnan(x[2]));
  CHECK(y[2] == std::numeric_limits<double>::infinity());
}

TEST_CASE("CSV parse errors carry the line", "[io]") {
  std::istringstream ragged("a,b\n1,2\n3\n");
  try {
    read_csv(ragged);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  std::istringstream text("a,b\n1,two\n");
  CHECK_THROWS_AS(read_csv(text), ParseError);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_csv(empty), ParseError);
}

TEST_CASE("schema check names the offending column", "[io]") {
  Table t({"t_s", "p"});
  CHECK_NOTHROW(require_schema(t, schema::transfer_curve));
  try {
    require_schema(t, schema::omega_curve);
    FAIL("expected a schema error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("omega_rad_s") != std::string::npos);
  }
}

TEST_CASE("artifact schemas are well formed", "[io]") {
  const std::vector<std::vector<std::string>> all = {
      schema::anm_frames,    schema::angle_series,   schema::vector_series, schema::hyperfine,
      schema::msd,           schema::histogram,      schema::correlation,   schema::spectrum,
      schema::transfer_curve, schema::omega_curve,   schema::regime_curves, schema::flip_sweep,
      schema::coupling_map,  schema::position_msd,   schema::ax_marginal,   schema::table1};
  for (const auto& s : all) {
    REQUIRE_FALSE(s.empty());
    CHECK(std::set<std::string>(s.begin(), s.end()).size() == s.size());
    for (const auto& name : s) {
      CHECK_FALSE(name.empty());
      CHECK(name.find(',') == std::string::npos);
    }
  }
  CHECK(schema::regime_curves.front() == "t_s");
  CHECK(schema::correlation.size() == 10);
}

TEST_CASE("series tables round trip", "[io][property]") {
  AngleSeries a;
  a.dt = 2e-12;
  a.theta = {0.3, 0.4, 0.5};
  a.phi = {0.0, 1.0, 6.0};
  const Table ta = to_table(a);
  require_schema(ta, schema::angle_series);
  const AngleSeries a2 = angle_series_from_table(ta);
  CHECK(a2.theta == a.theta);
  CHECK(a2.phi == a.phi);
  CHECK(a2.dt == Catch::Approx(a.dt).epsilon(1e-12));

  HyperfineSeries h;
  h.dt = 1e-7;
  h.values = {Vec3(1, 2, 3), Vec3(-4, 5, 6)};
  const Table th = to_table(h);
  require_schema(th, schema::hyperfine);
  const HyperfineSeries h2 = hyperfine_series_from_table(th);
  CHECK(h2.values == h.values);
  CHECK(h2.dt == Catch::Approx(h.dt).epsilon(1e-12));

  VectorSeries q;
  q.dt = 1e-14;
  q.values = {Vec3(1e-11, 0, 0), Vec3(0, 2e-11, 0)};
  const Table tq = to_table(q);
  require_schema(tq, schema::vector_series);
  CHECK(vector_series_from_table(tq).values == q.values);

  Table bad({"t_s", "theta_rad", "phi_rad"});
  bad.add_row({0.0, 0.1, 0.1});
  bad.add_row({1.0, 0.1, 0.1});
  bad.add_row({3.0, 0.1, 0.1});
  CHECK_THROWS_AS(angle_series_from_table(bad), InputError);
}

TEST_CASE("stats and states round trip through JSON", "[io][property]") {
  HyperfineStats s;
  s.mean = Vec3(1.5, -2.0, 3.25);
  s.covariance << 4, 1, 0, 1, 5, 0.5, 0, 0.5, 6;
  s.gamma << 1, 0.1, 0, 0.1, 2, 0, 0, 0, 3;
  s.tau = Vec3(1e-9, 2e-9, 3e-9);
  s.sigma_hat2 = 6.0;
  s.tau_hat = 3e-9;
  s.lag_dt = 1e-12;
  decompose_gamma(s);
  const HyperfineStats back = stats_from_json(to_json(s));
  CHECK(back.mean == s.mean);
  CHECK(back.covariance == s.covariance);
  CHECK(back.gamma == s.gamma);
  CHECK(back.rates == s.rates);
  CHECK(back.axes == s.axes);
  CHECK(back.tau_hat == s.tau_hat);
  CHECK(back.sigma_hat2 == s.sigma_hat2);

  SpinState st = SpinState::polarized_nv_mixed_target();
  st.rho(0, 1) = Complex(0.1, -0.2);
  st.rho(1, 0) = Complex(0.1, 0.2);
  CHECK(state_from_json(to_json(st)).rho == st.rho);

  CHECK_THROWS_AS(vec3_from_json(nlohmann::json::array({1, 2})), InputError);
}

TEST_CASE("JSON files round trip", "[io]") {
  const auto path = (std::filesystem::temp_directory_path() / "nvsense_io_test.json").string();
  const nlohmann::json j = {{"a", 1.5}, {"b", {1, 2, 3}}};
  write_json_file(path, j);
  CHECK(read_json_file(path) == j);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_json_file(path), InputError);
}
