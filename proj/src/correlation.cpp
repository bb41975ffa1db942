#include "nvsense/correlation.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numeric>
#include <stdexcept>

namespace nvsense {
namespace {

// FFTW planning is not thread-safe.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

std::size_t fft_size(std::size_t n) {
  std::size_t m = 1;
  while (m < 2 * n) m <<= 1;
  return m;
}

// Unnormalized correlation sum s(m) = sum_{t} x(t+m) y(t) for m = 0..max_lag.
std::vector<double> correlation_sums(std::span<const double> x, std::span<const double> y, std::size_t max_lag) {
  const std::size_t n = x.size();
  const std::size_t m = fft_size(n);
  const std::size_t nc = m / 2 + 1;

  double* in = fftw_alloc_real(m);
  fftw_complex* fx = fftw_alloc_complex(nc);
  fftw_complex* fy = fftw_alloc_complex(nc);
  fftw_plan forward;
  fftw_plan backward;
  {
    std::lock_guard lock(plan_mutex());
    forward = fftw_plan_dft_r2c_1d(static_cast<int>(m), in, fx, FFTW_ESTIMATE);
    backward = fftw_plan_dft_c2r_1d(static_cast<int>(m), fx, in, FFTW_ESTIMATE);
  }

  std::fill(in, in + m, 0.0);
  std::copy(x.begin(), x.end(), in);
  fftw_execute_dft_r2c(forward, in, fx);
  std::fill(in, in + m, 0.0);
  std::copy(y.begin(), y.end(), in);
  fftw_execute_dft_r2c(forward, in, fy);

  // X(k) conj(Y(k)) -> sum_t x(t+m) y(t)
  for (std::size_t k = 0; k < nc; ++k) {
    const std::complex<double> a(fx[k][0], fx[k][1]);
    const std::complex<double> b(fy[k][0], fy[k][1]);
    const auto p = a * std::conj(b);
    fx[k][0] = p.real();
    fx[k][1] = p.imag();
  }
  fftw_execute_dft_c2r(backward, fx, in);

  std::vector<double> out(max_lag + 1);
  for (std::size_t lag = 0; lag <= max_lag; ++lag) out[lag] = in[lag] / static_cast<double>(m);

  {
    std::lock_guard lock(plan_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
  }
  fftw_free(in);
  fftw_free(fx);
  fftw_free(fy);
  return out;
}

}  // namespace

std::vector<double> cross_correlation(std::span<const double> x, std::span<const double> y, std::size_t max_lag) {
  if (x.size() != y.size()) throw std::invalid_argument("cross_correlation: length mismatch");
  if (x.empty()) throw std::invalid_argument("cross_correlation: empty series");
  if (max_lag >= x.size()) throw std::invalid_argument("cross_correlation: max_lag must be < series length");
  auto sums = correlation_sums(x, y, max_lag);
  for (auto& s : sums) s /= static_cast<double>(x.size());
  return sums;
}

std::vector<double> mean_square_displacement(std::span<const double> x, std::size_t max_lag) {
  const std::size_t n = x.size();
  if (n == 0) throw std::invalid_argument("mean_square_displacement: empty series");
  if (max_lag >= n) throw std::invalid_argument("mean_square_displacement: max_lag must be < series length");

  // Shift by the mean to limit cancellation in S1 - 2 S2.
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  std::vector<double> xc(x.begin(), x.end());
  for (auto& v : xc) v -= mean;

  const auto s2 = correlation_sums(xc, xc, max_lag);
  std::vector<double> sq(n);
  for (std::size_t t = 0; t < n; ++t) sq[t] = xc[t] * xc[t];

  std::vector<double> msd(max_lag + 1, 0.0);
  // q = sum over the overlapping window of x(t)^2 + x(t+m)^2
  double q = 2.0 * std::accumulate(sq.begin(), sq.end(), 0.0);
  for (std::size_t m = 0; m <= max_lag; ++m) {
    if (m > 0) q -= sq[m - 1] + sq[n - m];
    msd[m] = std::max(0.0, (q - 2.0 * s2[m]) / static_cast<double>(n - m));
  }
  msd[0] = 0.0;
  return msd;
}

double integrated_autocorrelation_time(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 4) return 1.0;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  std::vector<double> xc(x.begin(), x.end());
  for (auto& v : xc) v -= mean;
  const std::size_t max_lag = n - 1;
  auto c = correlation_sums(xc, xc, max_lag);
  if (c[0] <= 0.0) return 1.0;
  double tau = 1.0;
  for (std::size_t m = 1; m < n; ++m) {
    tau += 2.0 * c[m] / c[0];
    if (static_cast<double>(m) >= 5.0 * tau) break;
  }
  return std::max(1.0, tau);
}

}  // namespace nvsense
