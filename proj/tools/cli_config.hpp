#pragma once

// Run configuration for the command-line front end: built-in defaults,
// strict merging of user documents, dotted overrides and seed splitting.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace nvsense::cli {

using Json = nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every accepted key with its default value. Physical quantities carry
/// their unit in the key suffix.
Json default_config();

/// Merges `user` into `base`. Unknown keys and type mismatches throw
/// ConfigError naming the dotted path.
void merge_config(Json& base, const Json& user, const std::string& path = "");

/// Applies "a.b.c=value". The value is parsed as JSON when possible and
/// taken as a string otherwise.
void apply_override(Json& config, const std::string& assignment);

/// Range and consistency checks that do not depend on the subcommand.
void validate_config(const Json& config);

struct LoadOptions {
  std::optional<std::string> path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

/// Defaults <- file (a config or a manifest) <- --set <- --seed/--out.
Json load_config(const LoadOptions& opt);

std::uint64_t fnv1a64(const std::string& bytes);
/// master ^ fnv1a64(tag)
std::uint64_t derive_seed(std::uint64_t master, const std::string& tag);
/// Hex FNV-1a of the compact dump (keys are kept sorted).
std::string config_hash(const Json& config);

/// Typed accessors on dotted paths; throw ConfigError when absent.
const Json& at_path(const Json& config, const std::string& dotted);
double get_double(const Json& config, const std::string& dotted);
std::size_t get_size(const Json& config, const std::string& dotted);
std::vector<double> get_doubles(const Json& config, const std::string& dotted);
std::string get_string(const Json& config, const std::string& dotted);
bool get_bool(const Json& config, const std::string& dotted);

}  // namespace nvsense::cli
