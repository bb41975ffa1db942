#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nvsense/anm.hpp"
#include "nvsense/correlation.hpp"
#include "nvsense/detection.hpp"
#include "nvsense/diagnostics.hpp"
#include "nvsense/molecule.hpp"
#include "nvsense/pipeline.hpp"
#include "nvsense/spins.hpp"
#include "nvsense/stochastic.hpp"
#include "nvsense/units.hpp"

#ifndef NVSENSE_DATA_DIR
#define NVSENSE_DATA_DIR "data"
#endif

namespace nvsense::cli {

namespace fs = std::filesystem;
using units::two_pi;

Output::Output(fs::path dir, const Json& formats) : dir_(std::move(dir)) {
  csv_ = json_ = false;
  for (const auto& f : formats) {
    if (f == "csv") csv_ = true;
    if (f == "json") json_ = true;
  }
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw InputError("cannot create output directory '" + dir_.string() + "': " + ec.message());
}

void Output::store(const std::string& name, const std::string& bytes) {
  const fs::path path = dir_ / name;
  std::ofstream out(path, std::ios::binary);
  out << bytes;
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  char digest[17];
  std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  artifacts_.push_back({{"file", name}, {"fnv1a64", digest}, {"bytes", bytes.size()}});
}

void Output::csv(const std::string& name, const Table& t) {
  if (!csv_) return;
  std::ostringstream s;
  write_csv(s, t);
  store(name, s.str());
}

void Output::json(const std::string& name, const Json& j) {
  if (!json_) return;
  store(name, j.dump(2) + "\n");
}

namespace {

// ---------------------------------------------------------------- helpers

Zone zone_from(const Json& c) {
  return {get_double(c, "zone.theta_min_rad"), get_double(c, "zone.theta_max_rad"), get_double(c, "zone.radius_m")};
}

Geometry geometry_from(const Json& c) {
  return Geometry::bulk(get_double(c, "geometry.depth_m"), get_double(c, "geometry.lateral_m"));
}

double gamma_n_from(const Json& c) { return two_pi * get_double(c, "spins.gamma_n_hz_per_t"); }

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

std::vector<double> logspace(double a, double b, std::size_t n) {
  auto v = linspace(std::log10(a), std::log10(b), n);
  for (auto& x : v) x = std::pow(10.0, x);
  return v;
}

/// Uniform grid on [0, t_max] snapped to multiples of `block`.
std::vector<double> block_grid(double t_max, std::size_t n, double block) {
  auto t = linspace(0.0, t_max, n);
  for (auto& x : t) x = std::round(x / block) * block;
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

Json vec_json(const Vec3& v) { return to_json(v); }

Table histogram_table(const std::vector<double>& centers, const std::vector<double>& density) {
  Table t(schema::histogram);
  for (std::size_t i = 0; i < centers.size(); ++i) t.add_row({centers[i], density[i]});
  return t;
}

Table msd_table(const std::vector<double>& lag, const std::vector<double>& msd) {
  Table t(schema::msd);
  for (std::size_t i = 0; i < lag.size(); ++i) t.add_row({lag[i], msd[i]});
  return t;
}

// ---------------------------------------------------------------- anm

std::string molecule_path(const Json& c) {
  const std::string p = get_string(c, "molecule.path");
  return p.empty() ? std::string(NVSENSE_DATA_DIR) + "/nhc_ru.xyz" : p;
}

void anm_sim(Context& ctx) {
  const Json& c = ctx.config;
  const Molecule m = read_xyz_file(molecule_path(c));
  const int z = static_cast<int>(get_size(c, "molecule.target_atomic_number"));
  const auto target = m.find_first(z);
  if (!target) throw ConfigError("molecule has no atom with atomic number " + std::to_string(z));
  if (!m.anchor_index) throw InputError("molecule has no anchor atom");

  const auto net = build_spring_network(m, get_double(c, "anm.cutoff_a"), get_double(c, "anm.kappa_kcal_mol_a2"));
  const SurfaceFrame frame = surface_frame(m);
  LangevinParams p;
  p.damping = get_double(c, "anm.zeta_per_ps");
  p.temperature = get_double(c, "anm.temperature_k");
  p.dt = get_double(c, "anm.dt_ps");
  p.steps = get_size(c, "anm.steps");
  p.burn_in = get_double(c, "anm.burn_in_ps");
  p.sample_every = get_size(c, "anm.sample_every");
  p.seed = derive_seed(ctx.seed, "anm");
  if (get_bool(c, "anm.surface_wall")) p.wall = default_surface_wall(m, frame, get_double(c, "anm.wall_clearance_a"));

  const std::size_t replicas = get_size(c, "anm.replicas");
  const auto series = simulate_target_angles(net, m, p, *target, replicas);
  for (std::size_t k = 0; k < series.size(); ++k) ctx.out.csv("angles_replica" + std::to_string(k) + ".csv", to_table(series[k]));

  const auto fit = fit_rotational_diffusion(std::span<const AngleSeries>(series));
  ctx.out.csv("msd.csv", msd_table(fit.lag_time, fit.msd));
  const auto hist = angle_histograms(std::span<const AngleSeries>(series), get_size(c, "anm.histogram_bins"));
  ctx.out.csv("theta_histogram.csv", histogram_table(hist.theta_centers, hist.p_theta));
  ctx.out.csv("phi_histogram.csv", histogram_table(hist.phi_centers, hist.p_phi));

  std::vector<double> phi;
  std::size_t poles = 0;
  Json exploration = Json::array();
  for (const auto& s : series) {
    phi.insert(phi.end(), s.phi.begin(), s.phi.end());
    poles += s.pole_frames;
    exploration.push_back(s.exploration_time ? Json(*s.exploration_time) : Json());
  }
  const double p_phi = phi_uniformity_pvalue(phi, get_size(c, "anm.histogram_bins"));

  ctx.out.json("anm_summary.json",
               {{"atoms", m.size()},
                {"springs", net.pairs.size()},
                {"target_index", *target},
                {"replicas", replicas},
                {"frames_per_replica", series.empty() ? 0 : series.front().size()},
                {"sample_interval_s", series.empty() ? 0.0 : series.front().dt},
                {"pole_frames", poles},
                {"d_r_per_s", fit.d_r},
                {"d_r_per_ns", fit.d_r * units::nanosecond},
                {"fit_window_s", {fit.window_min, fit.window_max}},
                {"fit_residual", fit.residual},
                {"theta_min_rad", hist.theta_min},
                {"theta_max_rad", hist.theta_max},
                {"phi_uniformity_pvalue", p_phi},
                {"exploration_time_s", exploration}});

  if (get_bool(c, "anm.write_frames")) {
    const Trajectory traj = record_trajectory(net, m, p);
    Table t(schema::anm_frames);
    for (std::size_t f = 0; f < traj.frames.size(); ++f)
      for (std::size_t a = 0; a < traj.frames[f].size(); ++a) {
        const Vec3& x = traj.frames[f][a];
        t.add_row({static_cast<double>(f) * traj.sample_interval, static_cast<double>(a), x.x(), x.y(), x.z()});
      }
    ctx.out.csv("frames.csv", t);
  }
}

// ---------------------------------------------------------------- trajectories and statistics

struct ModelRun {
  HyperfineSeries hyperfine;
  double auto_tau_max = 0.0;
  std::optional<VectorSeries> positions;
  std::optional<AngleSeries> angles;
};

ModelRun run_model(const Context& ctx, double gamma_n) {
  const Json& c = ctx.config;
  ModelRun r;
  if (get_string(c, "stochastic.model") == "sphere") {
    const Zone zone = zone_from(c);
    SphereDiffusionParams p;
    p.d_r = get_double(c, "stochastic.sphere.d_r_per_s");
    p.theta_min = zone.theta_min;
    p.theta_max = zone.theta_max;
    p.radius = zone.radius;
    p.dt = get_double(c, "stochastic.sphere.dt_s");
    p.seed = derive_seed(ctx.seed, "stochastic.sphere");
    r.angles = generate_sphere_trajectory(p, get_size(c, "stochastic.sphere.steps"),
                                          get_size(c, "stochastic.sphere.keep_every"));
    r.hyperfine = trajectory_to_hyperfine(*r.angles, geometry_from(c), zone.radius, gamma_n);
    if (p.d_r > 0.0) r.auto_tau_max = 10.0 / p.d_r;
  } else {
    OUParams p;
    const auto eta = get_doubles(c, "stochastic.ou.eta_per_s");
    const auto offset = get_doubles(c, "stochastic.ou.offset_m");
    p.eta = Vec3(eta[0], eta[1], eta[2]);
    p.d = get_double(c, "stochastic.ou.d_m2_s");
    p.offset = Vec3(offset[0], offset[1], offset[2]);
    p.dt = get_double(c, "stochastic.ou.dt_s");
    p.seed = derive_seed(ctx.seed, "stochastic.ou");
    VectorSeries q = generate_ou_trajectory(p, get_size(c, "stochastic.ou.steps"));
    const std::size_t keep = get_size(c, "stochastic.ou.keep_every");
    if (keep > 1) {
      VectorSeries thin;
      thin.dt = q.dt * static_cast<double>(keep);
      for (std::size_t i = 0; i < q.size(); i += keep) thin.values.push_back(q.values[i]);
      q = std::move(thin);
    }
    // The NV sits at the origin; offsets are measured from it.
    const Geometry g;
    r.hyperfine = trajectory_to_hyperfine(q, g, p.offset, gamma_n);
    r.auto_tau_max = 10.0 / eta.front();
    for (double e : eta) r.auto_tau_max = std::max(r.auto_tau_max, 10.0 / e);
    r.positions = std::move(q);
  }
  return r;
}

void trajectory(Context& ctx) {
  const ModelRun r = run_model(ctx, gamma_n_from(ctx.config));
  if (r.angles) ctx.out.csv("trajectory.csv", to_table(*r.angles));
  if (r.positions) ctx.out.csv("trajectory.csv", to_table(*r.positions));
  ctx.out.csv("hyperfine.csv", to_table(r.hyperfine));
}

Table correlation_table(const HyperfineStats& s) {
  Table t(schema::correlation);
  for (std::size_t k = 0; k < s.correlation.size(); ++k) {
    const auto& m = s.correlation[k];
    t.add_row({static_cast<double>(k) * s.lag_dt, m(0, 0), m(0, 1), m(0, 2), m(1, 0), m(1, 1), m(1, 2), m(2, 0),
               m(2, 1), m(2, 2)});
  }
  return t;
}

Table spectrum_table(const HyperfineStats& s, double omega_max, std::size_t points) {
  const auto omega = linspace(0.0, omega_max, points);
  const auto spec = power_spectrum(s, omega);
  Table t(schema::spectrum);
  for (std::size_t i = 0; i < omega.size(); ++i) {
    const auto& m = spec[i];
    t.add_row({omega[i], m(0, 0).real(), m(1, 1).real(), m(2, 2).real(), m(0, 1).real(), m(0, 2).real(),
               m(1, 2).real()});
  }
  return t;
}

/// Histogram of A_x against the Gaussian with the same mean and variance.
Table ax_marginal_table(const HyperfineSeries& h, std::size_t bins) {
  std::vector<double> x(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) x[i] = h.values[i].x();
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it;
  const double hi = *hi_it > lo ? *hi_it : lo + 1.0;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size() > 1 ? x.size() - 1 : 1);

  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<double> count(bins, 0.0);
  for (double v : x) count[std::min(bins - 1, static_cast<std::size_t>((v - lo) / width))] += 1.0;
  Table t(schema::ax_marginal);
  for (std::size_t b = 0; b < bins; ++b) {
    const double centre = lo + (static_cast<double>(b) + 0.5) * width;
    const double gauss =
        var > 0.0 ? std::exp(-0.5 * (centre - mean) * (centre - mean) / var) / std::sqrt(two_pi * var) : 0.0;
    t.add_row({centre, count[b] / (static_cast<double>(x.size()) * width), gauss});
  }
  return t;
}

HyperfineStats write_stats(Context& ctx, const HyperfineSeries& h, double tau_max, const std::string& fit_name) {
  const Json& c = ctx.config;
  if (!(tau_max > 0.0)) throw ConfigError("stats.tau_max_s must be set (> 0) for this input");
  const CorrelationFit fit = fit_name == "exponential" ? CorrelationFit::exponential : CorrelationFit::integral;
  const HyperfineStats s = estimate_stats(h, tau_max, fit);
  double omega_max = get_double(c, "stats.omega_max_rad_s");
  if (omega_max == 0.0) omega_max = s.tau_hat > 0.0 ? 10.0 / s.tau_hat : units::pi / h.dt;

  Json j = to_json(s);
  j["samples"] = h.size();
  j["sample_dt_s"] = h.dt;
  j["tau_max_s"] = tau_max;
  j["gaussianity_pvalue_ax"] = [&] {
    std::vector<double> x(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) x[i] = h.values[i].x();
    return gaussianity_pvalue(x, std::max<std::size_t>(1, static_cast<std::size_t>(s.tau_hat / h.dt)));
  }();
  ctx.out.json("stats.json", j);
  ctx.out.csv("correlation.csv", correlation_table(s));
  ctx.out.csv("spectrum.csv", spectrum_table(s, omega_max, get_size(c, "stats.spectrum_points")));
  ctx.out.csv("ax_marginal.csv", ax_marginal_table(h, get_size(c, "stats.marginal_bins")));
  return s;
}

void stats(Context& ctx) {
  const Json& c = ctx.config;
  const std::string input = get_string(c, "stats.input_csv");
  double tau_max = get_double(c, "stats.tau_max_s");
  HyperfineSeries h;
  if (!input.empty()) {
    h = hyperfine_series_from_table(read_csv_file(input));
  } else {
    ModelRun r = run_model(ctx, gamma_n_from(c));
    if (tau_max == 0.0) tau_max = r.auto_tau_max;
    h = std::move(r.hyperfine);
  }
  write_stats(ctx, h, tau_max, get_string(c, "stats.fit"));
}

// ---------------------------------------------------------------- spin transfer

RegimeSetup regime_setup(const Context& ctx, double d_r, std::size_t trajectories) {
  const Json& c = ctx.config;
  RegimeSetup s;
  s.geometry = geometry_from(c);
  s.zone = zone_from(c);
  s.omega = two_pi * get_double(c, "spins.omega_hz");
  s.delta = two_pi * get_double(c, "spins.delta_hz");
  s.gamma_n = gamma_n_from(c);
  s.d_r = d_r;
  s.block_dt = get_double(c, "regime.block_dt_s");
  s.sample_stride = get_size(c, "regime.sample_stride");
  s.trajectories = trajectories;
  s.slow_samples = get_size(c, "regime.slow_samples");
  s.stats_steps = get_size(c, "regime.stats_steps");
  s.seed = derive_seed(ctx.seed, "regime");
  return s;
}

std::vector<double> regime_grid(const Context& ctx) {
  const Json& c = ctx.config;
  return block_grid(get_double(c, "regime.t_max_s"), get_size(c, "regime.points"), get_double(c, "regime.block_dt_s"));
}

Table regime_table(const RegimeCurves& r) {
  Table t(schema::regime_curves);
  for (std::size_t i = 0; i < r.t.size(); ++i)
    t.add_row({r.t[i], r.p_montecarlo[i], r.p_montecarlo_se[i], r.p_fast[i], r.p_slow[i], r.p_lindblad[i]});
  return t;
}

Json regime_json(const RegimeSetup& s, const RegimeCurves& r) {
  return {{"d_r_per_s", s.d_r},
          {"trajectories", s.trajectories},
          {"sde_dt_s", r.sde_dt},
          {"mean_a_rad_s", vec_json(r.mean_a)},
          {"b_field_t", vec_json(r.spin.b_field)},
          {"delta_rad_s", r.coupling.delta},
          {"j_rad_s", r.coupling.j},
          {"j_hz", units::angular_to_hz(r.coupling.j)},
          {"stats", to_json(r.stats)}};
}

/// Transfer probability for the averaged model of a regime: Lindblad when
/// the target moves, a static-disorder average when it does not.
struct AnalyticModel {
  Vec3 mean_a;
  HyperfineStats stats;
  std::vector<Vec3> samples;
  bool frozen = false;

  std::vector<double> curve(const SpinParams& p, std::span<const double> t) const {
    std::vector<double> out(t.size());
    if (frozen) {
      for (std::size_t i = 0; i < t.size(); ++i) out[i] = slow_regime_probability(samples, t[i], p).probability;
      return out;
    }
    const auto states =
        lindblad_evolve(build_average_hamiltonian(mean_a, p), stats, p, SpinState::polarized_nv_mixed_target(), t);
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = transfer_probability(states[i]);
    return out;
  }
};

AnalyticModel analytic_model(const RegimeSetup& s, const RegimeCurves& r) {
  AnalyticModel m;
  m.mean_a = r.mean_a;
  m.stats = r.stats;
  m.frozen = s.d_r == 0.0;
  if (m.frozen) m.samples = zone_hyperfine_samples(s.geometry, s.zone, s.gamma_n, s.slow_samples, derive_seed(s.seed, "omega"));
  return m;
}

/// Rabi frequencies around the resonance of the fixed field in `spin`.
std::vector<double> omega_scan(const Context& ctx, const RegimeCurves& r) {
  const double resonance = r.spin.gamma_n * r.spin.b_field.z() - 0.5 * r.mean_a.z();
  const double span = two_pi * get_double(ctx.config, "regime.omega_span_hz");
  return linspace(resonance - span, resonance + span, get_size(ctx.config, "regime.omega_points"));
}

Table omega_table(const Context& ctx, const AnalyticModel& m, const RegimeCurves& r) {
  const double tau = get_double(ctx.config, "regime.tau_int_s");
  const double grid[] = {0.0, tau};
  Table t(schema::omega_curve);
  for (double omega : omega_scan(ctx, r)) {
    SpinParams p = r.spin;
    p.omega = omega;
    t.add_row({omega, m.curve(p, grid)[1]});
  }
  return t;
}

Table pmax_table(const Context& ctx, const AnalyticModel& m, const RegimeCurves& r) {
  const auto grid = linspace(0.0, get_double(ctx.config, "regime.pmax_t_max_s"), get_size(ctx.config, "regime.pmax_points"));
  Table t(schema::omega_curve);
  for (double omega : omega_scan(ctx, r)) {
    SpinParams p = r.spin;
    p.omega = omega;
    const auto curve = m.curve(p, grid);
    t.add_row({omega, *std::max_element(curve.begin(), curve.end())});
  }
  return t;
}

void transfer(Context& ctx) {
  const RegimeSetup s = regime_setup(ctx, get_double(ctx.config, "regime.d_r_per_s"), 0);
  const auto grid = regime_grid(ctx);
  const RegimeCurves r = regime_curves(s, grid, ctx.exec);
  ctx.out.csv("regime_curves.csv", regime_table(r));
  const AnalyticModel m = analytic_model(s, r);
  Table curve(schema::transfer_curve);
  const auto p = m.curve(r.spin, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) curve.add_row({grid[i], p[i]});
  ctx.out.csv("transfer_curve.csv", curve);
  ctx.out.csv("omega_curve.csv", omega_table(ctx, m, r));
  Json j = regime_json(s, r);
  const auto check = cumulant_validity_check({r.stats.sigma_hat2, r.stats.tau_hat}, get_double(ctx.config, "regime.tau_int_s"));
  j["cumulant_valid"] = check.valid;
  j["cumulant_margin"] = check.margin;
  ctx.out.json("transfer_summary.json", j);
}

void montecarlo(Context& ctx) {
  const RegimeSetup s =
      regime_setup(ctx, get_double(ctx.config, "regime.d_r_per_s"), get_size(ctx.config, "regime.trajectories"));
  if (s.trajectories == 0) throw ConfigError("regime.trajectories must be >= 1 for montecarlo");
  const RegimeCurves r = regime_curves(s, regime_grid(ctx), ctx.exec);
  ctx.out.csv("regime_curves.csv", regime_table(r));
  ctx.out.json("montecarlo_summary.json", regime_json(s, r));
}

// ---------------------------------------------------------------- detection

ExperimentConfig direct_experiment(const Json& c, double j_hz, double contrast, double gamma_flip_hz) {
  ExperimentConfig cfg = ExperimentConfig::direct(two_pi * j_hz, two_pi * get_double(c, "spins.delta_hz"),
                                                  two_pi * gamma_flip_hz, contrast, get_double(c, "detection.tau0_s"),
                                                  two_pi * get_double(c, "spins.omega_hz"), gamma_n_from(c));
  cfg.snr_threshold = get_double(c, "detection.snr_threshold");
  return cfg;
}

ExperimentConfig experiment_from(const Json& c) {
  if (get_string(c, "detection.mode") == "direct")
    return direct_experiment(c, get_double(c, "detection.j_hz"), get_double(c, "detection.contrast"),
                             get_double(c, "spins.gamma_flip_hz"));
  const std::string path = get_string(c, "detection.stats_json");
  if (path.empty()) throw ConfigError("detection.stats_json is required when detection.mode is \"stats\"");
  const HyperfineStats stats = stats_from_json(read_json_file(path));
  const SpinParams spin =
      spin_params_for_detuning(stats.mean, two_pi * get_double(c, "spins.omega_hz"),
                               two_pi * get_double(c, "spins.delta_hz"), gamma_n_from(c),
                               two_pi * get_double(c, "spins.gamma_flip_hz"));
  ExperimentConfig cfg = ExperimentConfig::from_stats(spin, stats, get_double(c, "detection.contrast"),
                                                      get_double(c, "detection.tau0_s"));
  cfg.snr_threshold = get_double(c, "detection.snr_threshold");
  return cfg;
}

Json result_json(const DetectionResult& r) {
  return {{"tau_int_s", r.tau_int}, {"T_s", r.time}, {"delta_p", r.delta_p}, {"runs", r.runs}, {"boundary", r.boundary}};
}

Table sweep_table(const std::vector<SweepPoint>& sweep) {
  Table t(schema::flip_sweep);
  for (const auto& s : sweep)
    t.add_row({s.gamma_flip, s.result.tau_int, s.result.time, s.result.delta_p, s.result.boundary ? 1.0 : 0.0});
  return t;
}

std::vector<double> angular(std::vector<double> hz) {
  for (auto& v : hz) v *= two_pi;
  return hz;
}

void detect(Context& ctx) {
  const Json& c = ctx.config;
  const ExperimentConfig cfg = experiment_from(c);
  const DetectionResult r = optimize_interrogation_time(cfg, get_size(c, "detection.grid_points"));
  const EffectiveCoupling ec = cfg.coupling();
  Json j = result_json(r);
  j["mode"] = get_string(c, "detection.mode");
  j["j_rad_s"] = ec.j;
  j["j_hz"] = units::angular_to_hz(ec.j);
  j["delta_rad_s"] = ec.delta;
  j["gamma_flip_s"] = cfg.spin.gamma_flip;
  j["contrast"] = cfg.contrast;
  ctx.out.json("detect_summary.json", j);

  const auto grid = get_doubles(c, "detection.gamma_flip_grid_hz");
  if (!grid.empty()) ctx.out.csv("flip_sweep.csv", sweep_table(flip_rate_sweep(cfg, angular(grid), ctx.exec)));
}

Table coupling_table(const std::vector<CouplingPoint>& map) {
  Table t(schema::coupling_map);
  for (const auto& p : map) t.add_row({p.depth, p.lateral_offset, p.j, p.mean_a.x(), p.mean_a.y(), p.mean_a.z()});
  return t;
}

void coupling(Context& ctx) {
  const Json& c = ctx.config;
  const auto map = coupling_map(get_doubles(c, "coupling_map.depths_m"), get_doubles(c, "coupling_map.laterals_m"),
                                zone_from(c), gamma_n_from(c), ctx.exec);
  ctx.out.csv("coupling_map.csv", coupling_table(map));
}

// ---------------------------------------------------------------- reproduce

struct Table1Row {
  double depth, lateral, j_hz, contrast, gamma_flip_hz;
};

void table1(Context& ctx) {
  static constexpr Table1Row rows[] = {{2e-9, 1.5e-9, 700.0, 0.05, 500.0},
                                       {2e-9, 1.5e-9, 700.0, 0.05, 1000.0},
                                       {2e-9, 1.5e-9, 700.0, 0.05, 2000.0},
                                       {3e-9, 1.5e-9, 250.0, 0.05, 500.0},
                                       {3e-9, 1.5e-9, 250.0, 0.05, 1000.0}};
  const Json& c = ctx.config;
  const Zone zone = zone_from(c);
  Table t(schema::table1);
  Json doc = Json::array();
  for (const auto& row : rows) {
    const ExperimentConfig cfg = direct_experiment(c, row.j_hz, row.contrast, row.gamma_flip_hz);
    const DetectionResult r = optimize_interrogation_time(cfg, get_size(c, "detection.grid_points"));
    const Vec3 a = zone_average_hyperfine(Geometry::bulk(row.depth, row.lateral), zone, gamma_n_from(c));
    t.add_row({row.depth, row.lateral, row.j_hz, row.contrast, row.gamma_flip_hz, r.tau_int, r.time, r.delta_p,
               r.boundary ? 1.0 : 0.0});
    Json j = result_json(r);
    j["z_nv_m"] = row.depth;
    j["x_nv_m"] = row.lateral;
    j["j_hz"] = row.j_hz;
    j["j_geometry_hz"] = units::angular_to_hz(0.25 * std::hypot(a.x(), a.y()));
    j["contrast"] = row.contrast;
    j["gamma_flip_hz"] = row.gamma_flip_hz;
    doc.push_back(j);
  }
  ctx.out.csv("table1.csv", t);
  ctx.out.json("table1.json", doc);
}

void fig4(Context& ctx) {
  struct Regime {
    const char* name;
    double d_r;
  };
  // Time traces at the configured detuning.
  for (const Regime reg : {Regime{"slow", 0.0}, Regime{"moderate", 1e7}, Regime{"fast", 1e9}}) {
    const RegimeSetup s = regime_setup(ctx, reg.d_r, get_size(ctx.config, "regime.trajectories"));
    const RegimeCurves r = regime_curves(s, regime_grid(ctx), ctx.exec);
    ctx.out.csv(std::string("regime_curves_") + reg.name + ".csv", regime_table(r));
    ctx.out.json(std::string("regime_") + reg.name + ".json", regime_json(s, r));
    ctx.out.csv(std::string("omega_curve_") + reg.name + ".csv", omega_table(ctx, analytic_model(s, r), r));
  }
  // Peak transfer against Rabi frequency.
  for (const Regime reg : {Regime{"slow", 0.0}, Regime{"moderate", 1e6}, Regime{"fast", 1e9}}) {
    const RegimeSetup s = regime_setup(ctx, reg.d_r, 0);
    const double t0[] = {0.0};
    const RegimeCurves r = regime_curves(s, t0, ctx.exec);
    ctx.out.csv(std::string("pmax_curve_") + reg.name + ".csv", pmax_table(ctx, analytic_model(s, r), r));
  }
}

void fig5(Context& ctx) {
  Json c = ctx.config;
  c["stochastic"]["model"] = "sphere";
  Context sub{c, ctx.seed, ctx.exec, ctx.out};
  const ModelRun r = run_model(sub, gamma_n_from(c));
  double tau_max = get_double(c, "stats.tau_max_s");
  if (tau_max == 0.0) tau_max = r.auto_tau_max;
  write_stats(sub, r.hyperfine, tau_max, "exponential");
  const auto hist = angle_histograms(*r.angles, get_size(c, "anm.histogram_bins"));
  ctx.out.csv("theta_histogram.csv", histogram_table(hist.theta_centers, hist.p_theta));
  ctx.out.csv("phi_histogram.csv", histogram_table(hist.phi_centers, hist.p_phi));
}

void fig6(Context& ctx) {
  const Json& c = ctx.config;
  auto grid = get_doubles(c, "detection.gamma_flip_grid_hz");
  if (grid.empty()) grid = logspace(1e2, 1e4, 21);
  for (const double j_hz : {700.0, 250.0}) {
    const ExperimentConfig cfg = direct_experiment(c, j_hz, 0.05, 0.0);
    const auto sweep = flip_rate_sweep(cfg, angular(grid), ctx.exec);
    ctx.out.csv("flip_sweep_j" + std::to_string(static_cast<int>(j_hz)) + "hz.csv", sweep_table(sweep));
  }
  coupling(ctx);
}

void fig7(Context& ctx) {
  Json c = ctx.config;
  c["stochastic"]["model"] = "ou";
  c["spins"]["gamma_n_hz_per_t"] = units::angular_to_hz(units::gamma_electron);
  Context sub{c, ctx.seed, ctx.exec, ctx.out};
  const ModelRun r = run_model(sub, units::gamma_electron);
  double tau_max = get_double(c, "stats.tau_max_s");
  if (tau_max == 0.0) tau_max = r.auto_tau_max;
  write_stats(sub, r.hyperfine, tau_max, "exponential");

  const VectorSeries& q = *r.positions;
  std::vector<double> x(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) x[i] = q.values[i].x();
  const std::size_t lags = std::min<std::size_t>(q.size() - 1, static_cast<std::size_t>(r.auto_tau_max / q.dt));
  const auto msd = mean_square_displacement(x, lags);
  Table t(schema::position_msd);
  for (std::size_t k = 0; k < msd.size(); ++k) t.add_row({static_cast<double>(k) * q.dt, msd[k]});
  ctx.out.csv("msd.csv", t);

  const OUEstimate est = estimate_ou_parameters(q);
  ctx.out.json("ou_summary.json",
               {{"eta_per_s", vec_json(est.eta)}, {"d_m2_s", est.diffusion}, {"variance_m2", vec_json(est.variance)}});
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"anm-sim", "trajectory", "stats",        "transfer",
                                                 "montecarlo", "detect",  "coupling-map", "reproduce"};
  return names;
}

const std::vector<std::string>& reproduce_targets() {
  static const std::vector<std::string> targets = {"table1", "fig3", "fig4", "fig5", "fig6", "fig7"};
  return targets;
}

void run_command(const std::string& command, const std::string& target, Context& ctx) {
  if (command == "anm-sim") return anm_sim(ctx);
  if (command == "trajectory") return trajectory(ctx);
  if (command == "stats") return stats(ctx);
  if (command == "transfer") return transfer(ctx);
  if (command == "montecarlo") return montecarlo(ctx);
  if (command == "detect") return detect(ctx);
  if (command == "coupling-map") return coupling(ctx);
  if (command == "reproduce") {
    if (target == "table1") return table1(ctx);
    if (target == "fig3") return anm_sim(ctx);
    if (target == "fig4") return fig4(ctx);
    if (target == "fig5") return fig5(ctx);
    if (target == "fig6") return fig6(ctx);
    if (target == "fig7") return fig7(ctx);
    throw ConfigError("unknown reproduce target '" + target + "'");
  }
  throw ConfigError("unknown command '" + command + "'");
}

}  // namespace nvsense::cli
