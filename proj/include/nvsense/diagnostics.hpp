#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nvsense {

/// Malformed input files or invalid configuration values.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parse failure with the offending line number (1-based).
class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Divergence, invariant violation or failed estimation inside a solver.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Warnings are routed through a process-wide sink (stderr by default).
using WarningSink = std::function<void(const std::string&)>;

/// Installs `sink` and returns the previous one.
WarningSink set_warning_sink(WarningSink sink);
void warn(const std::string& message);

/// RAII helper that captures warnings for the lifetime of the object.
class ScopedWarningCapture {
 public:
  ScopedWarningCapture();
  ~ScopedWarningCapture();
  ScopedWarningCapture(const ScopedWarningCapture&) = delete;
  ScopedWarningCapture& operator=(const ScopedWarningCapture&) = delete;

  const std::vector<std::string>& messages() const { return messages_; }
  bool contains(const std::string& fragment) const;

 private:
  std::vector<std::string> messages_;
  WarningSink previous_;
};

}  // namespace nvsense
