#pragma once

// Detachment-detection planning: signal, measurement time, optimal
// interrogation time, flip-rate sweeps and coupling maps over NV placement.

#include <span>
#include <stdexcept>
#include <vector>

#include "nvsense/diagnostics.hpp"
#include "nvsense/kernels.hpp"
#include "nvsense/spins.hpp"
#include "nvsense/stochastic.hpp"

namespace nvsense {

/// Raised when the signal vanishes and no finite measurement time exists.
class UnboundedMeasurementTime : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

struct ExperimentConfig {
  SpinParams spin;
  Vec3 mean_a = Vec3::Zero();  // averaged hyperfine vector, rad/s
  DiffusionChannels channels;
  double contrast = 1.0;  // C in (0, 1]
  double tau0 = 100e-9;   // s
  double snr_threshold = 1.0;

  /// A = (4 J, 0, 0) and B_z chosen so the detuning equals `delta`.
  static ExperimentConfig direct(double j, double delta, double gamma_flip, double contrast,
                                 double tau0 = 100e-9, double omega = units::two_pi * 1e6,
                                 double gamma_n = units::gamma_fluorine19);
  static ExperimentConfig from_stats(const SpinParams& spin, const HyperfineStats& stats, double contrast,
                                     double tau0 = 100e-9);

  EffectiveCoupling coupling() const { return effective_coupling(mean_a, spin); }
};

void validate(const ExperimentConfig& cfg);

struct DetectionResult {
  double tau_int = 0.0;  // s
  double time = 0.0;     // T, s
  double delta_p = 0.0;
  double runs = 0.0;     // N
  bool boundary = false;  // optimum at the edge of the search bracket
};

/// Signal and reference transfer probabilities at one interrogation time.
struct SignalPair {
  double with_target = 0.0;
  double without_target = 0.0;
  double delta() const { return with_target - without_target; }
};

/// Evaluates P(tau) and P_{J=0}(tau) from rho0 = |+><+| (x) 1/2. The
/// reference drops A_x, A_y and the diffusion channels but keeps flips.
class SignalModel {
 public:
  explicit SignalModel(const ExperimentConfig& cfg);
  SignalPair evaluate(double tau_int) const;
  std::vector<SignalPair> evaluate(std::span<const double> tau) const;

 private:
  LindbladPropagator with_;
  LindbladPropagator without_;
};

double delta_p(const ExperimentConfig& cfg, double tau_int);

/// T = R^2 (tau_int + tau0) / (C^2 dP^2), N = T / (tau_int + tau0).
DetectionResult measurement_time(double delta_p, double contrast, double tau_int, double tau0,
                                 double snr_threshold = 1.0);

/// Minimizes T over [1e-6 s, 10/J] (10/gamma_flip when J = 0): log-grid scan
/// then golden-section refinement to relative 1e-3.
DetectionResult optimize_interrogation_time(const ExperimentConfig& cfg, std::size_t grid_points = 121);

struct SweepPoint {
  double gamma_flip = 0.0;
  DetectionResult result;
};

std::vector<SweepPoint> flip_rate_sweep(const ExperimentConfig& cfg, std::span<const double> gamma_flip,
                                        Execution exec = Execution::parallel);

struct Zone {
  double theta_min = 0.0;
  double theta_max = 0.0;
  double radius = 0.0;  // m
};

struct CouplingPoint {
  double depth = 0.0;           // m
  double lateral_offset = 0.0;  // m
  Vec3 mean_a = Vec3::Zero();   // rad/s
  double j = 0.0;               // rad/s
};

/// Zone-averaged hyperfine vector for one NV placement (adaptive
/// Gauss-Kronrod in cos(theta), trapezoid in phi). Throws NumericalError if
/// the quadrature does not converge.
Vec3 zone_average_hyperfine(const Geometry& g, const Zone& zone, double gamma_n);

std::vector<CouplingPoint> coupling_map(std::span<const double> depths, std::span<const double> lateral_offsets,
                                        const Zone& zone, double gamma_n, Execution exec = Execution::parallel);

}  // namespace nvsense
