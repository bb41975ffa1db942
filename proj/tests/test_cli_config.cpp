#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "cli_config.hpp"

using namespace nvsense::cli;

TEST_CASE("defaults validate", "[cli]") {
  const Json c = default_config();
  CHECK_NOTHROW(validate_config(c));
  CHECK(get_double(c, "spins.omega_hz") == 1e6);
  CHECK(get_string(c, "stochastic.model") == "sphere");
  CHECK(get_size(c, "regime.trajectories") == 500);
}

TEST_CASE("merge accepts known keys and rejects the rest", "[cli]") {
  Json c = default_config();
  merge_config(c, Json::parse(R"({"spins": {"gamma_flip_hz": 1000}, "seed": 7})"));
  CHECK(get_double(c, "spins.gamma_flip_hz") == 1000.0);
  CHECK(get_double(c, "spins.omega_hz") == 1e6);
  CHECK(c.at("seed") == 7);

  try {
    merge_config(c, Json::parse(R"({"spins": {"omega": 1}})"));
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("spins.omega") != std::string::npos);
  }
  CHECK_THROWS_AS(merge_config(c, Json::parse(R"({"spins": {"omega_hz": "fast"}})")), ConfigError);
  CHECK_THROWS_AS(merge_config(c, Json::parse(R"({"spins": 3})")), ConfigError);
  CHECK_THROWS_AS(merge_config(c, Json::parse(R"({"geometry": {"depth_m": [1]}})")), ConfigError);
}

TEST_CASE("dotted overrides", "[cli]") {
  Json c = default_config();
  apply_override(c, "detection.contrast=0.1");
  apply_override(c, "stochastic.model=ou");
  apply_override(c, "coupling_map.depths_m=[1e-9, 2e-9]");
  CHECK(get_double(c, "detection.contrast") == 0.1);
  CHECK(get_string(c, "stochastic.model") == "ou");
  CHECK(get_doubles(c, "coupling_map.depths_m") == std::vector<double>{1e-9, 2e-9});
  CHECK_THROWS_AS(apply_override(c, "detection.nope=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "contrast"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "detection..contrast=1"), ConfigError);
}

TEST_CASE("range checks", "[cli]") {
  auto bad = [](const std::string& assignment) {
    Json c = default_config();
    apply_override(c, assignment);
    return c;
  };
  CHECK_THROWS_AS(validate_config(bad("detection.contrast=0")), ConfigError);
  CHECK_THROWS_AS(validate_config(bad("detection.contrast=2")), ConfigError);
  CHECK_THROWS_AS(validate_config(bad("zone.theta_max_rad=0.1")), ConfigError);
  CHECK_THROWS_AS(validate_config(bad("stochastic.model=brownian")), ConfigError);
  CHECK_THROWS_AS(validate_config(bad("anm.dt_ps=-1")), ConfigError);
  CHECK_THROWS_AS(validate_config(bad("seed=-3")), ConfigError);
  CHECK_THROWS_AS(validate_config(bad("stochastic.ou.eta_per_s=[1, 2]")), ConfigError);
  CHECK_THROWS_AS(validate_config(bad("regime.pmax_points=1")), ConfigError);
}

TEST_CASE("load order: file, overrides, flags", "[cli]") {
  const auto dir = std::filesystem::temp_directory_path() / "nvsense_cfg_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "run.json").string();
  std::ofstream(path) << R"({"seed": 5, "detection": {"j_hz": 250}})";

  LoadOptions opt;
  opt.path = path;
  opt.overrides = {"detection.j_hz=300"};
  Json c = load_config(opt);
  CHECK(c.at("seed") == 5);
  CHECK(get_double(c, "detection.j_hz") == 300.0);
  opt.seed = 11;
  opt.out_dir = "elsewhere";
  c = load_config(opt);
  CHECK(c.at("seed") == 11);
  CHECK(get_string(c, "output.directory") == "elsewhere");

  const auto manifest = (dir / "manifest.json").string();
  std::ofstream(manifest) << Json{{"manifest_version", 1}, {"config", c}}.dump();
  LoadOptions again;
  again.path = manifest;
  CHECK(load_config(again) == c);

  std::ofstream(path) << "{ not json";
  CHECK_THROWS_AS(load_config(opt), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("hashes and seeds", "[cli]") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(derive_seed(0, "anm") == fnv1a64("anm"));
  CHECK(derive_seed(1, "anm") != derive_seed(1, "stochastic.sphere"));
  CHECK(derive_seed(42, "x") == (42ULL ^ fnv1a64("x")));

  Json a = default_config();
  Json b = default_config();
  CHECK(config_hash(a) == config_hash(b));
  apply_override(b, "seed=2");
  CHECK(config_hash(a) != config_hash(b));
  CHECK(config_hash(a).size() == 16);
}

TEST_CASE("typed accessors report missing paths", "[cli]") {
  const Json c = default_config();
  CHECK_THROWS_AS(at_path(c, "spins.nothing"), ConfigError);
  CHECK_THROWS_AS(get_double(c, "stochastic.model"), ConfigError);
  CHECK(get_bool(c, "anm.surface_wall"));
}
