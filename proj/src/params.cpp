#include "multistab/params.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace multistab {

SystemParams SystemParams::stiffness_reduced() {
  SystemParams p;
  p.gamma0 = 1e-2;
  p.gamma2 = 1e-2;
  p.omega_a = 1e3;
  p.gN = 10.0;
  p.Omega = 2.0;
  p.alpha_in = 2.0;
  p.kappa = 1e2;
  return p;
}

namespace {

void require(bool ok, const char* field, const char* condition) {
  if (!ok) {
    throw ParamError(field, std::string("invalid parameter ") + field + ": must be " + condition);
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

}  // namespace

void validate(const SystemParams& p) {
  const auto finite_pos = [](double v) { return std::isfinite(v) && v > 0.0; };
  const auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  require(finite_pos(p.gamma1), "gamma1", "> 0");
  require(finite_pos(p.gamma0), "gamma0", "> 0");
  require(finite_pos(p.gamma2), "gamma2", "> 0");
  require(!p.gammaM || finite_pos(*p.gammaM), "gammaM", "> 0");
  require(finite_nonneg(p.Omega), "Omega", ">= 0");
  require(finite_nonneg(p.gN), "gN", ">= 0");
  require(finite_pos(p.alpha_in), "alpha_in", "> 0");
  require(finite_pos(p.omega_a), "omega_a", "> 0");
  require(std::isfinite(p.Delta_c), "Delta_c", "finite");
  require(finite_pos(p.kappa), "kappa", "> 0");
  require(finite_pos(p.omega_M), "omega_M", "> 0");
  require(finite_pos(p.l), "l", "> 0");
  require(finite_pos(p.F_scale), "F_scale", "> 0");
}

void validate_flow(const SystemParams& p) {
  const auto finite_pos = [](double v) { return std::isfinite(v) && v > 0.0; };
  const auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  require(finite_nonneg(p.gamma1), "gamma1", ">= 0");
  require(finite_nonneg(p.gamma0), "gamma0", ">= 0");
  require(finite_nonneg(p.gamma2), "gamma2", ">= 0");
  require(!p.gammaM || finite_nonneg(*p.gammaM), "gammaM", ">= 0");
  require(finite_nonneg(p.Omega), "Omega", ">= 0");
  require(finite_nonneg(p.gN), "gN", ">= 0");
  require(finite_nonneg(p.alpha_in), "alpha_in", ">= 0");
  require(std::isfinite(p.omega_a), "omega_a", "finite");
  require(std::isfinite(p.Delta_c), "Delta_c", "finite");
  require(finite_pos(p.kappa), "kappa", "> 0");
  require(finite_pos(p.omega_M), "omega_M", "> 0");
  require(finite_pos(p.l), "l", "> 0");
  require(finite_pos(p.F_scale), "F_scale", "> 0");
}

double mirror_damping(const SystemParams& p) {
  if (p.gammaM) return *p.gammaM;
  return 0.1 * mirror_mass(p) * p.omega_M;
}

void set_field(SystemParams& p, const std::string& key, double v) {
  if (key == "gamma1") p.gamma1 = v;
  else if (key == "gamma0") p.gamma0 = v;
  else if (key == "gamma2") p.gamma2 = v;
  else if (key == "gammaM") p.gammaM = v;
  else if (key == "Omega") p.Omega = v;
  else if (key == "gN") p.gN = v;
  else if (key == "alpha_in") p.alpha_in = v;
  else if (key == "omega_a") p.omega_a = v;
  else if (key == "Delta_c") p.Delta_c = v;
  else if (key == "kappa") p.kappa = v;
  else if (key == "omega_M") p.omega_M = v;
  else if (key == "l") p.l = v;
  else if (key == "F_scale") p.F_scale = v;
  else throw ParamError(key, "unknown config key: " + key);
}

SystemParams read_config(std::istream& in, SystemParams p) {
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParamError("", "config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string text = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) {
      throw ParamError(key, "config line " + std::to_string(lineno) + ": duplicate key " + key);
    }
    double value = 0.0;
    std::size_t used = 0;
    try {
      value = std::stod(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size()) {
      throw ParamError(key, "config line " + std::to_string(lineno) + ": bad number '" + text + "'");
    }
    set_field(p, key, value);
  }
  return p;
}

SystemParams read_config_file(const std::string& path, SystemParams base) {
  std::ifstream in(path);
  if (!in) throw ParamError("", "cannot open config file " + path);
  return read_config(in, base);
}

void write_config(std::ostream& out, const SystemParams& p, const std::string& prefix) {
  const auto line = [&](const char* k, double v) {
    out << prefix << k << " = " << format_value(v) << '\n';
  };
  line("gamma1", p.gamma1);
  line("gamma0", p.gamma0);
  line("gamma2", p.gamma2);
  line("gammaM", mirror_damping(p));
  line("Omega", p.Omega);
  line("gN", p.gN);
  line("alpha_in", p.alpha_in);
  line("omega_a", p.omega_a);
  line("Delta_c", p.Delta_c);
  line("kappa", p.kappa);
  line("omega_M", p.omega_M);
  line("l", p.l);
  line("F_scale", p.F_scale);
}

}  // namespace multistab
