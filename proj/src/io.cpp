#include "nvsense/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "nvsense/diagnostics.hpp"

namespace nvsense {
namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

void write_number(std::ostream& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
  out.write(buf, ptr - buf);
}

template <class Series>
Table vector_table(const Series& s, const std::vector<std::string>& names) {
  Table t(names);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& v = s.values[i];
    t.add_row({static_cast<double>(i) * s.dt, v.x(), v.y(), v.z()});
  }
  return t;
}

double uniform_step(const std::vector<double>& time) {
  if (time.size() < 2) throw InputError("series needs at least two rows to define a time step");
  const double dt = time[1] - time[0];
  if (!(dt > 0.0)) throw InputError("series time column must increase");
  for (std::size_t i = 1; i < time.size(); ++i)
    if (std::abs(time[i] - time[0] - static_cast<double>(i) * dt) > 1e-6 * dt * static_cast<double>(i))
      throw InputError("series is not uniformly sampled (row " + std::to_string(i + 2) + ")");
  return dt;
}

template <class Series>
Series vector_series(const Table& t, const std::vector<std::string>& names) {
  require_schema(t, names);
  Series s;
  s.dt = uniform_step(t.data[0]);
  s.values.resize(t.rows());
  for (std::size_t i = 0; i < t.rows(); ++i) s.values[i] = Vec3(t.data[1][i], t.data[2][i], t.data[3][i]);
  return s;
}

}  // namespace

Table::Table(std::vector<std::string> names) : columns(std::move(names)), data(columns.size()) {}

void Table::add_row(const std::vector<double>& row) {
  if (row.size() != columns.size()) throw InputError("row width does not match the table");
  for (std::size_t c = 0; c < row.size(); ++c) data[c].push_back(row[c]);
}

const std::vector<double>& Table::column(const std::string& name) const {
  for (std::size_t c = 0; c < columns.size(); ++c)
    if (columns[c] == name) return data[c];
  throw InputError("missing column '" + name + "'");
}

void write_csv(std::ostream& out, const Table& t) {
  for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
  out << '\n';
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      if (c) out << ',';
      write_number(out, t.data[c][r]);
    }
    out << '\n';
  }
}

void write_csv_file(const std::string& path, const Table& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  write_csv(out, t);
  if (!out) throw InputError("write failed for '" + path + "'");
}

Table read_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError("empty CSV", 1);
  ++lineno;
  std::vector<std::string> names;
  for (auto& c : split_commas(line)) names.push_back(trim(c));
  Table t(names);
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != names.size())
      throw ParseError("expected " + std::to_string(names.size()) + " fields, got " + std::to_string(cells.size()),
                       lineno);
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string cell = trim(cells[c]);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty())
        throw ParseError("non-numeric value '" + cell + "' in column '" + names[c] + "'", lineno);
      row[c] = v;
    }
    t.add_row(row);
  }
  return t;
}

Table read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return read_csv(in);
}

void require_schema(const Table& t, const std::vector<std::string>& expected) {
  for (std::size_t c = 0; c < expected.size(); ++c) {
    if (c >= t.columns.size()) throw InputError("missing column '" + expected[c] + "'");
    if (t.columns[c] != expected[c])
      throw InputError("unexpected column '" + t.columns[c] + "' (expected '" + expected[c] + "')");
  }
  if (t.columns.size() > expected.size()) throw InputError("unexpected column '" + t.columns[expected.size()] + "'");
}

Table to_table(const AngleSeries& a) {
  Table t(schema::angle_series);
  for (std::size_t i = 0; i < a.size(); ++i) t.add_row({static_cast<double>(i) * a.dt, a.theta[i], a.phi[i]});
  return t;
}

Table to_table(const VectorSeries& q) { return vector_table(q, schema::vector_series); }
Table to_table(const HyperfineSeries& h) { return vector_table(h, schema::hyperfine); }

AngleSeries angle_series_from_table(const Table& t) {
  require_schema(t, schema::angle_series);
  AngleSeries a;
  a.dt = uniform_step(t.data[0]);
  a.theta = t.data[1];
  a.phi = t.data[2];
  return a;
}

VectorSeries vector_series_from_table(const Table& t) { return vector_series<VectorSeries>(t, schema::vector_series); }
HyperfineSeries hyperfine_series_from_table(const Table& t) {
  return vector_series<HyperfineSeries>(t, schema::hyperfine);
}

nlohmann::json to_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

nlohmann::json to_json(const Eigen::Matrix3d& m) {
  auto j = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) j.push_back({m(r, 0), m(r, 1), m(r, 2)});
  return j;
}

nlohmann::json to_json(const HyperfineStats& s) {
  nlohmann::json j;
  j["mean_rad_s"] = to_json(s.mean);
  j["covariance_rad2_s2"] = to_json(s.covariance);
  j["gamma_s"] = to_json(s.gamma);
  j["rates_s"] = to_json(s.rates);
  j["axes"] = to_json(s.axes);
  j["tau_s"] = to_json(s.tau);
  j["sigma_hat2_rad2_s2"] = s.sigma_hat2;
  j["tau_hat_s"] = s.tau_hat;
  j["fit"] = s.fit == CorrelationFit::exponential ? "exponential" : "integral";
  j["lag_dt_s"] = s.lag_dt;
  j["lags"] = s.correlation.size();
  return j;
}

nlohmann::json to_json(const SpinState& s) {
  nlohmann::json re = nlohmann::json::array();
  nlohmann::json im = nlohmann::json::array();
  for (int r = 0; r < 4; ++r) {
    nlohmann::json rr = nlohmann::json::array();
    nlohmann::json ii = nlohmann::json::array();
    for (int c = 0; c < 4; ++c) {
      rr.push_back(s.rho(r, c).real());
      ii.push_back(s.rho(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ii);
  }
  return {{"real", re}, {"imag", im}};
}

Vec3 vec3_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw InputError("expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Eigen::Matrix3d matrix3_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw InputError("expected a 3x3 matrix");
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r) m.row(r) = vec3_from_json(j[r]).transpose();
  return m;
}

HyperfineStats stats_from_json(const nlohmann::json& j) {
  try {
    HyperfineStats s;
    s.mean = vec3_from_json(j.at("mean_rad_s"));
    s.covariance = matrix3_from_json(j.at("covariance_rad2_s2"));
    s.gamma = matrix3_from_json(j.at("gamma_s"));
    s.rates = vec3_from_json(j.at("rates_s"));
    s.axes = matrix3_from_json(j.at("axes"));
    s.tau = vec3_from_json(j.at("tau_s"));
    s.sigma_hat2 = j.at("sigma_hat2_rad2_s2").get<double>();
    s.tau_hat = j.at("tau_hat_s").get<double>();
    s.fit = j.value("fit", std::string("integral")) == "exponential" ? CorrelationFit::exponential
                                                                      : CorrelationFit::integral;
    s.lag_dt = j.value("lag_dt_s", 0.0);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("stats document: ") + e.what());
  }
}

SpinState state_from_json(const nlohmann::json& j) {
  try {
    SpinState s;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c)
        s.rho(r, c) = Complex(j.at("real").at(r).at(c).get<double>(), j.at("imag").at(r).at(c).get<double>());
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("state document: ") + e.what());
  }
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("'" + path + "': " + e.what());
  }
}

}  // namespace nvsense
