#pragma once

// Coarse-grained Langevin dynamics on the spring network, and the
// statistics (rotational diffusion, angle distributions, OU parameters)
// extracted from the resulting trajectories.
//
// Internal units: A, ps, amu, kcal/mol. Series handed to other modules are
// converted to SI (seconds, metres).

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Geometry>

#include "nvsense/molecule.hpp"
#include "nvsense/series.hpp"

namespace nvsense {

/// Right-handed frame attached to the surface at the anchor: z is the
/// surface normal, x an arbitrary in-plane reference direction.
struct SurfaceFrame {
  Vec3 origin = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  Vec3 x_axis = Vec3::UnitX();

  Vec3 y_axis() const { return normal.cross(x_axis); }
};

/// Normal along anchor -> centre of mass of the remaining atoms.
SurfaceFrame surface_frame(const Molecule& m);

/// Harmonic half-space wall: atoms whose height above the anchor (along
/// `normal`) drops below `height` are pushed back with `stiffness`.
struct SurfaceWall {
  Vec3 normal = Vec3::UnitZ();
  double height = 0.0;     // A, relative to the anchor
  double stiffness = 10.0;  // kcal mol^-1 A^-2
};

/// Wall placed `clearance` A below the lowest equilibrium atom.
SurfaceWall default_surface_wall(const Molecule& m, const SurfaceFrame& frame, double clearance = 0.5,
                                 double stiffness = 10.0);

struct LangevinParams {
  double damping = 5.0;       // 1/ps
  double temperature = 300.0;  // K
  double dt = 0.002;          // ps
  std::size_t steps = 0;      // production steps after burn-in
  double burn_in = 100.0;     // ps, discarded
  std::size_t sample_every = 1;
  std::uint64_t seed = 0;
  std::optional<SurfaceWall> wall;
  /// Start from these positions instead of the equilibrium geometry.
  std::optional<std::vector<Vec3>> initial_positions;
};

struct LangevinRunInfo {
  std::size_t frames = 0;
  double max_angular_frequency = 0.0;   // 1/ps, fastest network mode
  double mean_kinetic_per_dof = 0.0;    // amu A^2 ps^-2, production average
  double thermal_energy = 0.0;          // k_B T, same units
  double initial_energy = 0.0;          // kcal/mol, potential + kinetic at the start of production
  double final_energy = 0.0;            // kcal/mol, at the last step
};

/// Receives sampled frames: time (ps, from the end of burn-in) and positions (A).
using FrameObserver = std::function<void(double, std::span<const Vec3>)>;

/// BAOAB Langevin integration with per-atom friction m*damping; the anchor is
/// held fixed. Throws InputError when dt violates the stability bounds and
/// NumericalError on divergence.
LangevinRunInfo simulate_langevin(const SpringNetwork& net, const Molecule& m, const LangevinParams& p,
                                  const FrameObserver& observer);

struct Trajectory {
  double sample_interval = 0.0;  // ps
  std::vector<std::vector<Vec3>> frames;
};

/// Stores every sampled frame; meant for short runs.
Trajectory record_trajectory(const SpringNetwork& net, const Molecule& m, const LangevinParams& p);

/// Potential energy of the network (+ wall) in kcal/mol.
double network_energy(const SpringNetwork& net, std::span<const Vec3> positions, const Molecule& m,
                      const std::optional<SurfaceWall>& wall = std::nullopt);

/// RMSD (A) after optimal rotation about `pivot` (Kabsch).
double aligned_rmsd(std::span<const Vec3> a, std::span<const Vec3> b, const Vec3& pivot);

/// Polar and azimuthal angle of `relative` (target - anchor) in `frame`.
/// At the pole phi is set to 0 and `pole` is raised.
struct SphericalAngles {
  double theta = 0.0;
  double phi = 0.0;
  bool pole = false;
};
SphericalAngles spherical_angles(const Vec3& relative, const SurfaceFrame& frame);

/// Angles of the target atom relative to the anchor for every frame.
/// Throws InputError if the target coincides with the anchor in any frame.
AngleSeries target_angles(const Trajectory& traj, const SurfaceFrame& frame, std::size_t anchor_index,
                          std::size_t target_index);

/// Runs `replicas` independent simulations (seed ^ replica index) in parallel
/// and returns the target angle series per replica, in replica order.
std::vector<AngleSeries> simulate_target_angles(const SpringNetwork& net, const Molecule& m,
                                                const LangevinParams& p, std::size_t target_index,
                                                std::size_t replicas);

struct DiffusionFit {
  double d_r = 0.0;                 // 1/s
  double window_min = 0.0;          // s
  double window_max = 0.0;          // s
  double residual = 0.0;            // relative rms residual of the linear fit
  std::vector<double> lag_time;     // s
  std::vector<double> msd;          // rad^2
};

struct DiffusionFitOptions {
  std::optional<double> initial_guess;  // 1/s
  double window_factor = 0.2;           // window upper bound = factor / D_r
  /// Also caps the window at this fraction of var(theta) / D_r, the time to
  /// cross the accessible zone. 0 disables the cap.
  double exploration_fraction = 0.1;
  /// Adds a -b t^(3/2) term for the deficit near reflecting boundaries.
  bool wall_correction = false;
  std::size_t min_points = 10;
  int max_iterations = 20;
};

/// D_r from the least-squares slope of <dtheta^2(t)> = 2 D_r t - b t^(3/2)
/// (b = 0 without wall correction), with the window refined iteratively to
/// [0, min(factor / D_r, fraction var(theta) / D_r)].
DiffusionFit fit_rotational_diffusion(const AngleSeries& a, const DiffusionFitOptions& opt = {});
/// Pools several independent series (same dt) into one MSD curve.
DiffusionFit fit_rotational_diffusion(std::span<const AngleSeries> series, const DiffusionFitOptions& opt = {});

struct AngleHistograms {
  std::vector<double> theta_centers;
  std::vector<double> p_theta;
  std::vector<double> phi_centers;
  std::vector<double> p_phi;
  double theta_min = 0.0;
  double theta_max = 0.0;
  double l2_distance = 0.0;
};

/// Normalized histograms of theta on [0, pi] and phi on [0, 2 pi), plus the
/// zone (theta_min, theta_max) whose law sin(s)/(cos theta_min - cos theta_max)
/// best fits p_theta in L2.
AngleHistograms angle_histograms(const AngleSeries& a, std::size_t bins);
AngleHistograms angle_histograms(std::span<const AngleSeries> series, std::size_t bins);

/// Chi-square p-value for uniformity of phi on [0, 2 pi). Samples are thinned
/// by the integrated autocorrelation time of (cos phi, sin phi).
double phi_uniformity_pvalue(std::span<const double> phi, std::size_t bins);

struct OUEstimate {
  Vec3 eta = Vec3::Zero();       // 1/s
  double diffusion = 0.0;        // m^2/s
  Vec3 variance = Vec3::Zero();  // m^2
};

/// D from the short-time MSD slope (averaged over axes), eta_k = D / var_k.
OUEstimate estimate_ou_parameters(const VectorSeries& q, std::size_t short_lags = 0);

/// Jarque-Bera p-value for normality; samples thinned by `stride`.
double gaussianity_pvalue(std::span<const double> x, std::size_t stride = 1);

}  // namespace nvsense
