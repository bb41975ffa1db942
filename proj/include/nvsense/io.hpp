#pragma once

// CSV and JSON artifacts. Every CSV starts with a header row; the column
// sets below are the stable schemas consumed by downstream plotting.

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "nvsense/series.hpp"
#include "nvsense/spins.hpp"
#include "nvsense/stochastic.hpp"

namespace nvsense {

/// Column-major numeric table with named columns.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;

  Table() = default;
  explicit Table(std::vector<std::string> names);

  std::size_t rows() const { return data.empty() ? 0 : data.front().size(); }
  void add_row(const std::vector<double>& row);
  const std::vector<double>& column(const std::string& name) const;
};

namespace schema {
// clang-format off
inline const std::vector<std::string> anm_frames     = {"time_ps", "atom", "x_A", "y_A", "z_A"};
inline const std::vector<std::string> angle_series   = {"t_s", "theta_rad", "phi_rad"};
inline const std::vector<std::string> vector_series  = {"t_s", "qx_m", "qy_m", "qz_m"};
inline const std::vector<std::string> hyperfine      = {"t_s", "ax_rad_s", "ay_rad_s", "az_rad_s"};
inline const std::vector<std::string> msd            = {"t_s", "msd_rad2"};
inline const std::vector<std::string> histogram      = {"bin_center_rad", "density"};
inline const std::vector<std::string> correlation    = {"tau_s", "c_xx", "c_xy", "c_xz", "c_yx", "c_yy", "c_yz", "c_zx", "c_zy", "c_zz"};
inline const std::vector<std::string> spectrum       = {"omega_rad_s", "s_xx", "s_yy", "s_zz", "re_s_xy", "re_s_xz", "re_s_yz"};
inline const std::vector<std::string> transfer_curve = {"t_s", "p"};
inline const std::vector<std::string> omega_curve    = {"omega_rad_s", "p"};
inline const std::vector<std::string> regime_curves  = {"t_s", "p_montecarlo", "p_montecarlo_se", "p_fast", "p_slow", "p_lindblad"};
inline const std::vector<std::string> flip_sweep     = {"gamma_flip_s", "tau_int_s", "T_s", "delta_p", "boundary"};
inline const std::vector<std::string> coupling_map   = {"z_nv_m", "x_nv_m", "j_rad_s", "ax_rad_s", "ay_rad_s", "az_rad_s"};
inline const std::vector<std::string> position_msd   = {"t_s", "msd_m2"};
inline const std::vector<std::string> ax_marginal    = {"ax_rad_s", "density", "gaussian"};
inline const std::vector<std::string> table1         = {"z_nv_m", "x_nv_m", "j_hz", "contrast", "gamma_flip_hz", "tau_int_s", "T_s", "delta_p", "boundary"};
// clang-format on
}  // namespace schema

/// Numbers are written in shortest round-trip form.
void write_csv(std::ostream& out, const Table& t);
void write_csv_file(const std::string& path, const Table& t);
/// Throws ParseError on ragged rows or non-numeric fields.
Table read_csv(std::istream& in);
Table read_csv_file(const std::string& path);
/// Throws InputError naming the first missing or unexpected column.
void require_schema(const Table& t, const std::vector<std::string>& expected);

Table to_table(const AngleSeries& a);
Table to_table(const VectorSeries& q);
Table to_table(const HyperfineSeries& h);
AngleSeries angle_series_from_table(const Table& t);
VectorSeries vector_series_from_table(const Table& t);
HyperfineSeries hyperfine_series_from_table(const Table& t);

nlohmann::json to_json(const Vec3& v);
nlohmann::json to_json(const Eigen::Matrix3d& m);
nlohmann::json to_json(const HyperfineStats& s);
nlohmann::json to_json(const SpinState& s);
Vec3 vec3_from_json(const nlohmann::json& j);
Eigen::Matrix3d matrix3_from_json(const nlohmann::json& j);
/// Reads the summary fields (mean, covariance, gamma, rates, axes, scales);
/// the correlation table is not stored.
HyperfineStats stats_from_json(const nlohmann::json& j);
SpinState state_from_json(const nlohmann::json& j);

void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

}  // namespace nvsense
