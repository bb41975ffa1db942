#include <benchmark/benchmark.h>

#include <random>

#include "nvsense/detection.hpp"
#include "nvsense/kernels.hpp"

using namespace nvsense;

namespace {

const Molecule& molecule() {
  static const Molecule m = read_xyz_file(std::string(NVSENSE_DATA_DIR) + "/nhc_ru.xyz");
  return m;
}

void springs(benchmark::State& state, Execution exec) {
  const Molecule& m = molecule();
  const SpringForceField ff(build_spring_network(m, 10.0, 1.0), m.size());
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 0.1);
  std::vector<Vec3> x, f(m.size());
  for (const auto& a : m.atoms) x.push_back(a.position + Vec3(n(rng), n(rng), n(rng)));
  for (auto _ : state) {
    const double e = exec == Execution::serial ? ff.compute_serial(x, f) : ff.compute_parallel(x, f);
    benchmark::DoNotOptimize(e);
  }
}

void sphere_ensemble(benchmark::State& state, Execution exec) {
  SphereEnsembleSpec spec;
  spec.sphere = SphereDiffusionParams{1e9, 0.3, 1.54, 1.2e-9, 1e-11, 7};
  spec.geometry = Geometry::bulk(2e-9, 1.5e-9);
  spec.trajectories = static_cast<std::size_t>(state.range(0));
  spec.blocks = 100;
  spec.steps_per_block = 100;
  spec.sample_stride = 10;
  for (auto _ : state) benchmark::DoNotOptimize(sphere_hyperfine_ensemble(spec, exec));
  state.SetItemsProcessed(state.iterations() * spec.trajectories * spec.blocks * spec.steps_per_block);
}

void coupling(benchmark::State& state, Execution exec) {
  const std::vector<double> depths{1e-9, 2e-9, 3e-9, 4e-9};
  const std::vector<double> laterals{0.5e-9, 1e-9, 1.5e-9, 2e-9};
  const Zone zone{0.3, 1.54, 1.2e-9};
  for (auto _ : state) benchmark::DoNotOptimize(coupling_map(depths, laterals, zone, units::gamma_fluorine19, exec));
}

void flips(benchmark::State& state, Execution exec) {
  const auto cfg = ExperimentConfig::direct(units::two_pi * 700.0, 0.0, 0.0, 0.05);
  const std::vector<double> rates{units::two_pi * 1e2, units::two_pi * 1e3, units::two_pi * 1e4,
                                  units::two_pi * 3e4};
  for (auto _ : state) benchmark::DoNotOptimize(flip_rate_sweep(cfg, rates, exec));
}

}  // namespace

BENCHMARK_CAPTURE(springs, serial, Execution::serial);
BENCHMARK_CAPTURE(springs, parallel, Execution::parallel);
BENCHMARK_CAPTURE(sphere_ensemble, serial, Execution::serial)->Arg(8)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(sphere_ensemble, parallel, Execution::parallel)->Arg(8)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(coupling, serial, Execution::serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(coupling, parallel, Execution::parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(flips, serial, Execution::serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(flips, parallel, Execution::parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
