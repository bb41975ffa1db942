#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace nvsense {

using Vec3 = Eigen::Vector3d;

/// Polar/azimuthal angles of a target on a sphere, uniformly sampled.
struct AngleSeries {
  double dt = 0.0;             // s
  std::vector<double> theta;   // [0, pi]
  std::vector<double> phi;     // [0, 2 pi)
  std::optional<double> exploration_time;  // s, estimated
  std::size_t pole_frames = 0;  // frames where phi is undefined (set to 0)

  std::size_t size() const { return theta.size(); }
};

/// Uniformly sampled Cartesian series (displacements in m, or anything 3D).
struct VectorSeries {
  double dt = 0.0;
  std::vector<Vec3> values;

  std::size_t size() const { return values.size(); }
};

/// Hyperfine vectors A(t) in rad/s.
struct HyperfineSeries {
  double dt = 0.0;
  std::vector<Vec3> values;

  std::size_t size() const { return values.size(); }
};

}  // namespace nvsense
