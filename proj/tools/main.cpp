#include <omp.h>

#include <iostream>

#include "CLI11.hpp"
#include "cli_config.hpp"
#include "commands.hpp"
#include "nvsense/diagnostics.hpp"

#ifndef NVSENSE_VERSION
#define NVSENSE_VERSION "0.0.0"
#endif

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

const char* describe(const std::string& name) {
  if (name == "anm-sim") return "Langevin dynamics of the anchored molecule; target angles, MSD and D_r";
  if (name == "trajectory") return "Stochastic target trajectory and its hyperfine series";
  if (name == "stats") return "Hyperfine mean, covariance, correlations and spectra";
  if (name == "transfer") return "Averaged-model transfer curves (fast, slow, Lindblad)";
  if (name == "montecarlo") return "Trajectory-resolved transfer curves against the averaged models";
  if (name == "detect") return "Optimal interrogation time and detection time";
  if (name == "coupling-map") return "Effective coupling over NV depth and lateral offset";
  if (name == "reproduce") return "Regenerate a table or figure data set";
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  using namespace nvsense;
  using namespace nvsense::cli;

  CLI::App app{"Nuclear-spin detection with a shallow NV centre"};
  app.set_version_flag("--version", NVSENSE_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  LoadOptions load;
  int workers = 0;
  bool print_config = false;
  app.add_option("-c,--config", load.path, "JSON config or an earlier manifest.json")->check(CLI::ExistingFile);
  app.add_option("-s,--set", load.overrides, "Override a config key, e.g. --set spins.delta_hz=1800")
      ->take_all()
      ->allow_extra_args(false);
  app.add_option("-w,--workers", workers, "OpenMP threads (0: runtime default, 1: serial kernels)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("-o,--out", load.out_dir, "Output directory");
  app.add_option("--seed", load.seed, "Master seed");
  app.add_flag("--print-config", print_config, "Print the resolved config and exit");

  std::string target;
  for (const auto& name : command_names()) {
    auto* sub = app.add_subcommand(name, describe(name));
    if (name == "reproduce")
      sub->add_option("target", target, "Data set to regenerate")->required()->check(CLI::IsMember(reproduce_targets()));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const Json config = load_config(load);
    if (print_config) {
      std::cout << config.dump(2) << '\n';
      return kOk;
    }
    if (workers > 0) omp_set_num_threads(workers);
    const int threads = workers > 0 ? workers : omp_get_max_threads();

    Output out(get_string(config, "output.directory"), at_path(config, "output.formats"));
    const std::uint64_t seed = config.at("seed").get<std::uint64_t>();
    Context ctx{config, seed, threads == 1 ? Execution::serial : Execution::parallel, out};
    run_command(command, target, ctx);

    Json manifest;
    manifest["manifest_version"] = 1;
    manifest["command"] = target.empty() ? command : command + " " + target;
    manifest["version"] = NVSENSE_VERSION;
    manifest["seed"] = seed;
    manifest["workers"] = threads;
    manifest["config_hash"] = config_hash(config);
    manifest["artifacts"] = out.artifacts();
    manifest["config"] = config;
    std::ofstream(out.directory() / "manifest.json", std::ios::binary) << manifest.dump(2) << '\n';
    std::cerr << "wrote " << out.artifacts().size() << " artifacts to " << out.directory().string() << '\n';
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
