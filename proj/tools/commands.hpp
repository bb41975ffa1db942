#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cli_config.hpp"
#include "nvsense/execution.hpp"
#include "nvsense/io.hpp"

namespace nvsense::cli {

/// Writes artifacts into the run directory and remembers their digests.
class Output {
 public:
  Output(std::filesystem::path dir, const Json& formats);

  void csv(const std::string& name, const Table& t);
  void json(const std::string& name, const Json& j);
  const std::filesystem::path& directory() const { return dir_; }
  Json artifacts() const { return artifacts_; }

 private:
  void store(const std::string& name, const std::string& bytes);

  std::filesystem::path dir_;
  bool csv_ = true;
  bool json_ = true;
  Json artifacts_ = Json::array();
};

struct Context {
  const Json& config;
  std::uint64_t seed = 0;
  Execution exec = Execution::parallel;
  Output& out;
};

/// Subcommand names in the order they are listed by --help.
const std::vector<std::string>& command_names();
const std::vector<std::string>& reproduce_targets();

/// Runs `command` ("reproduce" takes `target`). Throws ConfigError,
/// InputError or NumericalError.
void run_command(const std::string& command, const std::string& target, Context& ctx);

}  // namespace nvsense::cli
