#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "nvsense/molecule.hpp"

namespace test {

inline std::string fixture(const std::string& name) { return std::string(NVSENSE_DATA_DIR) + "/" + name; }

inline const nvsense::Molecule& nhc_ru() {
  static const nvsense::Molecule m = nvsense::read_xyz_file(fixture("nhc_ru.xyz"));
  return m;
}

/// Kolmogorov-Smirnov distance between samples and a continuous CDF.
template <class Cdf>
double ks_distance(std::vector<double> x, Cdf cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

inline double relative_error(double value, double expected) { return std::abs(value - expected) / std::abs(expected); }

}  // namespace test
