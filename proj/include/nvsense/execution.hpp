#pragma once

namespace nvsense {

/// Serial reference or OpenMP-parallel evaluation of a kernel.
enum class Execution { serial, parallel };

}  // namespace nvsense
