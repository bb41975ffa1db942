#pragma once

// FFT-backed time-series estimators shared by the anm and stochastic modules.

#include <cstddef>
#include <span>
#include <vector>

namespace nvsense {

/// Biased cross-correlation c(m) = (1/N) sum_t x(t+m) y(t), m = 0..max_lag.
/// Inputs are used as given (centre them first if needed).
std::vector<double> cross_correlation(std::span<const double> x, std::span<const double> y, std::size_t max_lag);

/// Mean square displacement over all time origins,
/// msd(m) = 1/(N-m) sum_t (x(t+m) - x(t))^2, m = 0..max_lag.
std::vector<double> mean_square_displacement(std::span<const double> x, std::size_t max_lag);

/// Integrated autocorrelation time (in samples) using Sokal's automatic
/// window with c = 5. Returns >= 1.
double integrated_autocorrelation_time(std::span<const double> x);

}  // namespace nvsense
