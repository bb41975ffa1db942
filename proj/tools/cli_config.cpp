#include "cli_config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nvsense/units.hpp"

namespace nvsense::cli {
namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

const char* kind(const Json& j) {
  if (j.is_boolean()) return "boolean";
  if (j.is_number()) return "number";
  if (j.is_string()) return "string";
  if (j.is_array()) return "array";
  if (j.is_object()) return "object";
  return "null";
}

bool same_kind(const Json& a, const Json& b) { return std::string(kind(a)) == kind(b); }

std::vector<std::string> split_path(const std::string& dotted) {
  std::vector<std::string> parts;
  std::stringstream in(dotted);
  std::string part;
  while (std::getline(in, part, '.')) {
    if (part.empty()) throw ConfigError("malformed key '" + dotted + "'");
    parts.push_back(part);
  }
  if (parts.empty()) throw ConfigError("empty key");
  return parts;
}

void check_positive(const Json& c, const std::string& key) {
  if (!(get_double(c, key) > 0.0)) throw ConfigError(key + " must be > 0");
}

void check_non_negative(const Json& c, const std::string& key) {
  if (!(get_double(c, key) >= 0.0)) throw ConfigError(key + " must be >= 0");
}

void check_count(const Json& c, const std::string& key, std::size_t min) {
  if (get_size(c, key) < min) throw ConfigError(key + " must be >= " + std::to_string(min));
}

void check_choice(const Json& c, const std::string& key, std::initializer_list<const char*> allowed) {
  const std::string v = get_string(c, key);
  for (const char* a : allowed)
    if (v == a) return;
  std::string list;
  for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
  throw ConfigError(key + " must be one of: " + list);
}

}  // namespace

Json default_config() {
  return Json::parse(R"({
    "seed": 1,
    "molecule": {"path": "", "target_atomic_number": 9},
    "anm": {
      "kappa_kcal_mol_a2": 1.0, "cutoff_a": 10.0, "zeta_per_ps": 5.0, "temperature_k": 300.0,
      "dt_ps": 0.002, "steps": 500000, "burn_in_ps": 100.0, "sample_every": 50, "replicas": 4,
      "surface_wall": true, "wall_clearance_a": 0.5, "histogram_bins": 40, "write_frames": false
    },
    "zone": {"theta_min_rad": 0.3, "theta_max_rad": 1.54, "radius_m": 1.2e-9},
    "geometry": {"depth_m": 2e-9, "lateral_m": 1.5e-9},
    "stochastic": {
      "model": "sphere",
      "sphere": {"d_r_per_s": 2.1e9, "dt_s": 1e-12, "steps": 2000000, "keep_every": 1},
      "ou": {"eta_per_s": [1e13, 1e13, 1e13], "d_m2_s": 1e-9, "offset_m": [0.0, 0.0, 8e-9],
             "dt_s": 1e-14, "steps": 2000000, "keep_every": 1}
    },
    "stats": {"input_csv": "", "tau_max_s": 0.0, "fit": "integral", "spectrum_points": 201,
              "omega_max_rad_s": 0.0, "marginal_bins": 60},
    "spins": {"omega_hz": 1e6, "delta_hz": 0.0, "gamma_n_hz_per_t": 40.1e6, "gamma_flip_hz": 500.0},
    "detection": {"mode": "direct", "stats_json": "", "j_hz": 700.0, "contrast": 0.05, "tau0_s": 1e-7,
                  "snr_threshold": 1.0, "grid_points": 121, "gamma_flip_grid_hz": []},
    "regime": {"d_r_per_s": 1e9, "block_dt_s": 1e-7, "sample_stride": 10, "trajectories": 500,
               "slow_samples": 10000, "stats_steps": 2000000, "t_max_s": 5e-4, "points": 21,
               "tau_int_s": 2.5e-4, "omega_span_hz": 10000.0, "omega_points": 81,
               "pmax_t_max_s": 2e-3, "pmax_points": 401},
    "coupling_map": {
      "depths_m": [1e-9, 1.5e-9, 2e-9, 2.5e-9, 3e-9, 3.5e-9, 4e-9, 4.5e-9, 5e-9],
      "laterals_m": [0.0, 0.5e-9, 1e-9, 1.5e-9, 2e-9, 3e-9]
    },
    "output": {"directory": "nvsense_out", "formats": ["csv", "json"]}
  })");
}

void merge_config(Json& base, const Json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError((path.empty() ? std::string("config") : path) + " must be an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = join(path, it.key());
    if (!base.contains(it.key())) throw ConfigError("unknown key '" + key + "'");
    Json& target = base[it.key()];
    const Json& value = it.value();
    if (target.is_object()) {
      merge_config(target, value, key);
      continue;
    }
    if (!same_kind(target, value))
      throw ConfigError("key '" + key + "' expects a " + kind(target) + ", got a " + kind(value));
    if (target.is_array()) {
      const bool numeric = target.empty() || target.front().is_number();
      for (const auto& e : value)
        if (numeric ? !e.is_number() : !same_kind(target.front(), e))
          throw ConfigError("key '" + key + "' has an element of the wrong type");
    }
    target = value;
  }
}

void apply_override(Json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const auto parts = split_path(assignment.substr(0, eq));
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  Json patch = value;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = Json{{*it, patch}};
  merge_config(config, patch);
}

void validate_config(const Json& c) {
  if (!c.at("seed").is_number_unsigned() && !(c.at("seed").is_number_integer() && c.at("seed").get<long long>() >= 0))
    throw ConfigError("seed must be a non-negative integer");

  check_positive(c, "anm.kappa_kcal_mol_a2");
  check_positive(c, "anm.cutoff_a");
  check_non_negative(c, "anm.zeta_per_ps");
  check_non_negative(c, "anm.temperature_k");
  check_positive(c, "anm.dt_ps");
  check_non_negative(c, "anm.burn_in_ps");
  check_count(c, "anm.sample_every", 1);
  check_count(c, "anm.replicas", 1);
  check_count(c, "anm.histogram_bins", 10);

  const double tmin = get_double(c, "zone.theta_min_rad");
  const double tmax = get_double(c, "zone.theta_max_rad");
  if (!(tmin >= 0.0 && tmin < tmax && tmax <= units::pi)) throw ConfigError("zone needs 0 <= theta_min_rad < theta_max_rad <= pi");
  check_positive(c, "zone.radius_m");
  check_non_negative(c, "geometry.depth_m");

  check_choice(c, "stochastic.model", {"sphere", "ou"});
  check_non_negative(c, "stochastic.sphere.d_r_per_s");
  check_positive(c, "stochastic.sphere.dt_s");
  check_count(c, "stochastic.sphere.keep_every", 1);
  const auto eta = get_doubles(c, "stochastic.ou.eta_per_s");
  if (eta.size() != 3) throw ConfigError("stochastic.ou.eta_per_s needs three entries");
  for (double e : eta)
    if (!(e > 0.0)) throw ConfigError("stochastic.ou.eta_per_s entries must be > 0");
  if (get_doubles(c, "stochastic.ou.offset_m").size() != 3) throw ConfigError("stochastic.ou.offset_m needs three entries");
  check_non_negative(c, "stochastic.ou.d_m2_s");
  check_positive(c, "stochastic.ou.dt_s");
  check_count(c, "stochastic.ou.keep_every", 1);

  check_non_negative(c, "stats.tau_max_s");
  check_choice(c, "stats.fit", {"integral", "exponential"});
  check_count(c, "stats.spectrum_points", 2);
  check_non_negative(c, "stats.omega_max_rad_s");
  check_count(c, "stats.marginal_bins", 10);

  check_positive(c, "spins.omega_hz");
  if (get_double(c, "spins.gamma_n_hz_per_t") == 0.0) throw ConfigError("spins.gamma_n_hz_per_t must be non-zero");
  check_non_negative(c, "spins.gamma_flip_hz");

  check_choice(c, "detection.mode", {"direct", "stats"});
  check_non_negative(c, "detection.j_hz");
  const double contrast = get_double(c, "detection.contrast");
  if (!(contrast > 0.0 && contrast <= 1.0)) throw ConfigError("detection.contrast must be in (0, 1]");
  check_non_negative(c, "detection.tau0_s");
  check_positive(c, "detection.snr_threshold");
  check_count(c, "detection.grid_points", 60);
  for (double g : get_doubles(c, "detection.gamma_flip_grid_hz"))
    if (!(g >= 0.0)) throw ConfigError("detection.gamma_flip_grid_hz entries must be >= 0");

  check_non_negative(c, "regime.d_r_per_s");
  check_positive(c, "regime.block_dt_s");
  check_count(c, "regime.sample_stride", 1);
  check_positive(c, "regime.t_max_s");
  check_count(c, "regime.points", 2);
  check_positive(c, "regime.tau_int_s");
  check_non_negative(c, "regime.omega_span_hz");
  check_count(c, "regime.omega_points", 2);
  check_positive(c, "regime.pmax_t_max_s");
  check_count(c, "regime.pmax_points", 2);

  for (double d : get_doubles(c, "coupling_map.depths_m"))
    if (!(d >= 0.0)) throw ConfigError("coupling_map.depths_m entries must be >= 0");

  for (const auto& f : at_path(c, "output.formats")) {
    if (!f.is_string() || (f != "csv" && f != "json")) throw ConfigError("output.formats may contain only \"csv\" and \"json\"");
  }
  if (get_string(c, "output.directory").empty()) throw ConfigError("output.directory must not be empty");
}

Json load_config(const LoadOptions& opt) {
  Json config = default_config();
  if (opt.path) {
    std::ifstream in(*opt.path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config '" + *opt.path + "'");
    Json doc = Json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("config '" + *opt.path + "' is not valid JSON");
    // A manifest carries the resolved config of an earlier run.
    if (doc.is_object() && doc.contains("manifest_version") && doc.contains("config")) doc = doc.at("config");
    merge_config(config, doc);
  }
  for (const auto& o : opt.overrides) apply_override(config, o);
  if (opt.seed) config["seed"] = *opt.seed;
  if (opt.out_dir) config["output"]["directory"] = *opt.out_dir;
  validate_config(config);
  return config;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, const std::string& tag) { return master ^ fnv1a64(tag); }

std::string config_hash(const Json& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(config.dump())));
  return buf;
}

const Json& at_path(const Json& config, const std::string& dotted) {
  const Json* node = &config;
  for (const auto& part : split_path(dotted)) {
    if (!node->is_object() || !node->contains(part)) throw ConfigError("missing key '" + dotted + "'");
    node = &node->at(part);
  }
  return *node;
}

double get_double(const Json& config, const std::string& dotted) {
  const Json& j = at_path(config, dotted);
  if (!j.is_number()) throw ConfigError("key '" + dotted + "' must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError("key '" + dotted + "' must be finite");
  return v;
}

std::size_t get_size(const Json& config, const std::string& dotted) {
  const Json& j = at_path(config, dotted);
  if (j.is_number_unsigned()) return j.get<std::size_t>();
  if (j.is_number_integer() && j.get<long long>() >= 0) return static_cast<std::size_t>(j.get<long long>());
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (v >= 0.0 && v == std::floor(v) && v < 1.8e19) return static_cast<std::size_t>(v);
  }
  throw ConfigError("key '" + dotted + "' must be a non-negative integer");
}

std::vector<double> get_doubles(const Json& config, const std::string& dotted) {
  const Json& j = at_path(config, dotted);
  if (!j.is_array()) throw ConfigError("key '" + dotted + "' must be an array");
  std::vector<double> out;
  for (const auto& e : j) {
    if (!e.is_number()) throw ConfigError("key '" + dotted + "' must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::string get_string(const Json& config, const std::string& dotted) {
  const Json& j = at_path(config, dotted);
  if (!j.is_string()) throw ConfigError("key '" + dotted + "' must be a string");
  return j.get<std::string>();
}

bool get_bool(const Json& config, const std::string& dotted) {
  const Json& j = at_path(config, dotted);
  if (!j.is_boolean()) throw ConfigError("key '" + dotted + "' must be true or false");
  return j.get<bool>();
}

}  // namespace nvsense::cli
