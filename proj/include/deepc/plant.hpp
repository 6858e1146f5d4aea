#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepc/num_io.hpp"

namespace deepc {

/// Monotone cubic interpolant (Fritsch-Carlson tangents) through strictly
/// increasing anchor points; strictly increasing on [x_front, x_back].
class MonotoneSpline {
 public:
  MonotoneSpline() = default;
  MonotoneSpline(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const size_t n = x_.size();
    if (n < 2 || y_.size() != n)
      throw std::invalid_argument("MonotoneSpline: need >= 2 matching anchor points");
    for (size_t i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1]) || !(y_[i] > y_[i - 1]))
        throw std::invalid_argument("MonotoneSpline: anchors must be strictly increasing");
    tan_.resize(n);
    std::vector<double> h(n - 1), d(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      d[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    tan_[0] = d[0];
    tan_[n - 1] = d[n - 2];
    for (size_t i = 1; i + 1 < n; ++i) {
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      tan_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
    }
    for (size_t i = 0; i + 1 < n; ++i) {
      tan_[i] = std::min(tan_[i], 3.0 * d[i]);
      tan_[i + 1] = std::min(tan_[i + 1], 3.0 * d[i]);
    }
  }

  double operator()(double x) const {
    const size_t n = x_.size();
    size_t i = static_cast<size_t>(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin());
    i = std::clamp<size_t>(i, 1, n - 1) - 1;
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return y_[i] * (2 * t3 - 3 * t2 + 1) + h * tan_[i] * (t3 - 2 * t2 + t) +
           y_[i + 1] * (-2 * t3 + 3 * t2) + h * tan_[i + 1] * (t3 - t2);
  }

  double front_x() const { return x_.front(); }
  double back_x() const { return x_.back(); }

 private:
  std::vector<double> x_, y_;
  std::vector<double> tan_;
};

/// Reduced-order battery surrogate: two-RC equivalent circuit with a monotone
/// OCV curve and a lumped thermal node. All quantities are per unit cell area.
struct PlantParams {
  double capacity = 30.0;      // Ah/m^2 (1C = 30 A/m^2)
  double r0 = 2.0e-3;          // ohm m^2
  double r1 = 1.2e-3;          // ohm m^2, tau1 = 30 s
  double c1 = 25000.0;         // F/m^2
  double r2 = 0.8e-3;          // ohm m^2, tau2 = 300 s
  double c2 = 375000.0;        // F/m^2
  double c_th = 1400.0;        // J/(m^2 K)
  double h_conv = 1.0;         // W/(m^2 K)
  double t_amb = 25.0;         // degC
  double entropic_coeff = 1.0e-4;  // V/K
  std::vector<double> ocv_soc{0.0, 0.1, 0.5, 0.9, 1.0};
  std::vector<double> ocv_volt{3.0, 3.5, 3.7, 3.95, 4.1};
  long substeps = 10;
  bool clamp_soc = true;

  void validate() const {
    const std::array<std::pair<const char*, double>, 8> pos{{{"capacity", capacity},
                                                             {"r0", r0},
                                                             {"r1", r1},
                                                             {"c1", c1},
                                                             {"r2", r2},
                                                             {"c2", c2},
                                                             {"c_th", c_th},
                                                             {"h_conv", h_conv}}};
    for (auto [name, v] : pos)
      if (!(v > 0.0))
        throw std::invalid_argument(std::string("PlantParams: ") + name + " must be > 0");
    if (substeps < 1) throw std::invalid_argument("PlantParams: substeps must be >= 1");
    MonotoneSpline check(ocv_soc, ocv_volt);  // throws unless strictly increasing
    if (ocv_soc.front() != 0.0 || ocv_soc.back() != 1.0)
      throw std::invalid_argument("PlantParams: OCV anchors must span soc [0, 1]");
  }
};

struct PlantState {
  double soc = 0.0;
  double v1 = 0.0;
  double v2 = 0.0;
  double t_emp = 25.0;
};

struct PlantOutput {
  double voltage = 0.0;
  double temperature = 0.0;
  double soc = 0.0;

  Eigen::Vector3d vec() const { return {voltage, temperature, soc}; }
};

class BatteryPlant {
 public:
  explicit BatteryPlant(PlantParams params = PlantParams{})
      : params_(std::move(params)), ocv_(params_.ocv_soc, params_.ocv_volt) {
    params_.validate();
  }

  const PlantParams& params() const { return params_; }

  double ocv(double soc) const {
    if (soc < 0.0 || soc > 1.0)
      throw std::domain_error("ocv: soc " + format_double(soc) + " outside [0, 1]");
    return ocv_(soc);
  }

  PlantState rest_state(double soc) const {
    return PlantState{soc, 0.0, 0.0, params_.t_amb};
  }

  PlantOutput output(const PlantState& s, double current) const {
    const double soc = std::clamp(s.soc, 0.0, 1.0);
    return PlantOutput{ocv_(soc) + current * params_.r0 + s.v1 + s.v2, s.t_emp, soc};
  }

  /// Advances the state by dt seconds under a held current (positive =
  /// charging) with fixed-step RK4 on the RC/thermal/soc dynamics.
  PlantOutput step(PlantState& s, double current, double dt) const {
    if (!(dt > 0.0)) throw std::invalid_argument("BatteryPlant::step: dt must be > 0");
    if (!std::isfinite(current))
      throw std::invalid_argument("BatteryPlant::step: current must be finite");
    const long n = std::max<long>(params_.substeps, 1);
    const double h = dt / static_cast<double>(n);
    for (long i = 0; i < n; ++i) {
      const auto k1 = deriv(s, current);
      const auto k2 = deriv(advanced(s, k1, 0.5 * h), current);
      const auto k3 = deriv(advanced(s, k2, 0.5 * h), current);
      const auto k4 = deriv(advanced(s, k3, h), current);
      s.soc += h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
      s.v1 += h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
      s.v2 += h / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]);
      s.t_emp += h / 6.0 * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3]);
      if (params_.clamp_soc) s.soc = std::clamp(s.soc, 0.0, 1.0);
    }
    return output(s, current);
  }

 private:
  std::array<double, 4> deriv(const PlantState& s, double current) const {
    const double heat = current * current * params_.r0 + s.v1 * s.v1 / params_.r1 +
                        s.v2 * s.v2 / params_.r2 +
                        current * (s.t_emp + 273.15) * params_.entropic_coeff;
    return {current / (3600.0 * params_.capacity),
            -s.v1 / (params_.r1 * params_.c1) + current / params_.c1,
            -s.v2 / (params_.r2 * params_.c2) + current / params_.c2,
            (heat + params_.h_conv * (params_.t_amb - s.t_emp)) / params_.c_th};
  }

  static PlantState advanced(const PlantState& s, const std::array<double, 4>& k, double h) {
    return PlantState{s.soc + h * k[0], s.v1 + h * k[1], s.v2 + h * k[2], s.t_emp + h * k[3]};
  }

  PlantParams params_;
  MonotoneSpline ocv_;
};

/// Plant parameter file: `key = value` lines, `#` comments. OCV anchors are
/// the comma-separated lists ocv_soc and ocv_volt.
inline PlantParams load_plant_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_plant_params: cannot open '" + path + "'");
  std::map<std::string, std::string, std::less<>> kv;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw std::runtime_error("load_plant_params: line " + std::to_string(lineno) +
                                 " is not 'key = value'");
      continue;
    }
    auto trim = [](std::string s) {
      const size_t a = s.find_first_not_of(" \t\r");
      const size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  PlantParams p;
  auto scalar = [&](const char* key, double& field) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    if (!parse_double(it->second, field))
      throw std::runtime_error(std::string("load_plant_params: ") + key +
                               " is not a number: '" + it->second + "'");
    kv.erase(it);
  };
  auto list = [&](const char* key, std::vector<double>& field) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    std::vector<std::string_view> parts;
    split_fields(it->second, ',', parts);
    field.clear();
    for (auto part : parts) {
      double v;
      if (!parse_double(part, v))
        throw std::runtime_error(std::string("load_plant_params: ") + key +
                                 " has a non-numeric entry: '" + std::string(part) + "'");
      field.push_back(v);
    }
    kv.erase(it);
  };
  scalar("capacity", p.capacity);
  scalar("r0", p.r0);
  scalar("r1", p.r1);
  scalar("c1", p.c1);
  scalar("r2", p.r2);
  scalar("c2", p.c2);
  scalar("c_th", p.c_th);
  scalar("h_conv", p.h_conv);
  scalar("t_amb", p.t_amb);
  scalar("entropic_coeff", p.entropic_coeff);
  list("ocv_soc", p.ocv_soc);
  list("ocv_volt", p.ocv_volt);
  double substeps = static_cast<double>(p.substeps);
  scalar("substeps", substeps);
  p.substeps = static_cast<long>(substeps);
  kv.erase("version");
  if (!kv.empty())
    throw std::runtime_error("load_plant_params: unknown key '" + kv.begin()->first + "'");
  p.validate();
  return p;
}

inline void save_plant_params(const PlantParams& p, const std::string& path,
                              const std::string& version = "1") {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_plant_params: cannot open '" + path + "'");
  out << "# battery surrogate parameters (per-area units: A/m^2, ohm m^2, F/m^2,"
         " J/(m^2 K), W/(m^2 K), degC, V/K)\n";
  out << "version = " << version << "\n";
  out << "capacity = " << format_double(p.capacity) << "\n";
  out << "r0 = " << format_double(p.r0) << "\n";
  out << "r1 = " << format_double(p.r1) << "\n";
  out << "c1 = " << format_double(p.c1) << "\n";
  out << "r2 = " << format_double(p.r2) << "\n";
  out << "c2 = " << format_double(p.c2) << "\n";
  out << "c_th = " << format_double(p.c_th) << "\n";
  out << "h_conv = " << format_double(p.h_conv) << "\n";
  out << "t_amb = " << format_double(p.t_amb) << "\n";
  out << "entropic_coeff = " << format_double(p.entropic_coeff) << "\n";
  out << "substeps = " << p.substeps << "\n";
  auto join = [](const std::vector<double>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
      if (i) s += ',';
      s += format_double(v[i]);
    }
    return s;
  };
  out << "ocv_soc = " << join(p.ocv_soc) << "\n";
  out << "ocv_volt = " << join(p.ocv_volt) << "\n";
}

}  // namespace deepc
