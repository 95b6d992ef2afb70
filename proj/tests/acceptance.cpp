// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "multistab/dynamics.hpp"
#include "multistab/polynomial.hpp"
#include "multistab/stability.hpp"
#include "multistab/susceptibility.hpp"
#include "multistab/thresholds.hpp"
#include "oracles.hpp"

using namespace multistab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(const char* id, const char* title, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0 && secs > limit_s) {
    o.pass = false;
    o.detail += " [over the " + std::to_string(static_cast<int>(limit_s)) + " s budget]";
  }
  failures += !o.pass;
  std::printf("%-4s %s  %s: %s (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", title, o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

SystemParams with_kappa(double k) {
  SystemParams p;
  p.kappa = k;
  return p;
}

bool within_rel(double v, double target, double rel) { return std::abs(v - target) <= rel * std::abs(target); }

// Steady-state relations evaluated directly from the amplitudes, each scaled
// by its largest term.
double fixed_point_residual(const BranchSolution& b, double D0, const SystemParams& p) {
  const std::complex<double> I(0, 1);
  const double w0 = p.omega_a - D0;
  const double M = p.kappa / (p.omega_M * p.omega_M * p.l * p.l);
  const double force = w0 / p.l * std::norm(b.a_s), spring = M * p.omega_M * p.omega_M * b.x_s;
  const double drive = std::sqrt(p.gamma0) * p.alpha_in;
  const std::complex<double> h(p.gamma1, b.delta_ps), ot(p.gamma2, b.delta_ps - p.Delta_c);
  const auto rel = [](double r, double s) { return s > 0 ? std::abs(r) / s : std::abs(r); };
  double worst = rel(force - spring, std::max(std::abs(force), std::abs(spring)));
  worst = std::max(worst, rel(std::abs(-0.5 * p.gamma0 * b.a_s - I * p.gN * b.A_s + drive), drive));
  worst = std::max(worst, rel(std::abs(-h * b.A_s - I * p.Omega * b.C_s - I * p.gN * b.a_s),
                              std::max({std::abs(h * b.A_s), p.Omega * std::abs(b.C_s), p.gN * std::abs(b.a_s)})));
  worst = std::max(worst, rel(std::abs(-ot * b.C_s - I * p.Omega * b.A_s),
                              std::max(std::abs(ot * b.C_s), p.Omega * std::abs(b.A_s))));
  const double shift = b.delta_ps - D0, mirror = w0 / p.l * b.x_s;
  worst = std::max(worst, rel(shift - mirror, std::max({std::abs(b.delta_ps), std::abs(D0), std::abs(mirror)})));
  return worst;
}

double jacobian_deviation(const JacobianMatrix& a, const JacobianMatrix& ref) {
  const double scale = ref.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      worst = std::max(worst, std::abs(a(i, j) - ref(i, j)) / std::max(std::abs(ref(i, j)), 1e-9 * scale));
  return worst;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(EIT_BIN) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> data_rows(const fs::path& f) {
  std::ifstream in(f);
  std::vector<std::string> v;
  for (std::string l; std::getline(in, l);)
    if (!l.empty() && l[0] != '#') v.push_back(l);
  return v;
}

}  // namespace

int main() {
  criterion("AC1", "thresholds at kappa=1e2", 10, [] {
    const RegionReport rep = find_thresholds(with_kappa(1e2), -1e3, 1e3);
    const Threshold *cd = rep.find("cd"), *bc = rep.find("bc");
    if (!cd || !bc) return Outcome{false, "missing threshold"};
    const bool ok = within_rel(cd->delta0, 25.0, 0.1) && std::abs(bc->delta0 + 0.95) <= 0.1;
    return Outcome{ok, "upper " + fmt("%.4f", cd->delta0) + " (25 +-10%), lower " + fmt("%.5f", bc->delta0) +
                           " (-0.95 +-0.1)"};
  });

  criterion("AC2", "thresholds at kappa=1e4", 30, [] {
    const RegionReport rep = find_thresholds(with_kappa(1e4), -1e6, 1e6);
    const Threshold *cd = rep.find("cd"), *bc = rep.find("bc"), *ab = rep.find("ab");
    if (!cd || !bc || !ab) return Outcome{false, "missing threshold"};
    const bool ok = within_rel(cd->delta0, 2.5e3, 0.1) && within_rel(bc->delta0, -0.22, 0.1) &&
                    within_rel(ab->delta0, -2.5e5, 0.1);
    return Outcome{ok, "cd " + fmt("%.2f", cd->delta0) + ", bc " + fmt("%.6f", bc->delta0) + ", ab " +
                           fmt("%.2f", ab->delta0)};
  });

  criterion("AC3", "kappa lower bound", 60, [] {
    const double kL = kappa_lower_bound(SystemParams{}, 1e2, 1e5);
    return Outcome{within_rel(kL, 6400.0, 0.1), fmt("%.2f", kL) + " (6400 +-10%)"};
  });

  criterion("AC4", "root-count pattern at kappa=1e4", 0, [] {
    const SystemParams p = with_kappa(1e4);
    const RegionReport rep = find_thresholds(p, -1e6, 1e6);
    const std::map<char, int> expected{{'a', 0}, {'b', 2}, {'c', 4}, {'d', 2}};
    std::string seen;
    bool ok = true;
    for (const Region& r : rep.regions) {
      seen += r.label;
      if (!expected.count(r.label)) {
        ok = false;
        continue;
      }
      for (double f : {0.05, 0.3, 0.5, 0.7, 0.95}) {
        const double d0 = r.lo + f * (r.hi - r.lo);
        if (count_roots(d0, p) != expected.at(r.label)) ok = false;
      }
    }
    ok = ok && seen.find('a') != std::string::npos && seen.find('b') != std::string::npos &&
         seen.find('c') != std::string::npos && seen.find('d') != std::string::npos;
    return Outcome{ok, "regions (ascending) " + seen + ", 5 samples each"};
  });

  criterion("AC5", "solver roots equal bisection roots on 100 draws", 60, [] {
    std::mt19937_64 rng(20261016);
    std::uniform_real_distribution<double> log_kappa(1, 6), det(-1e3, 1e3);
    int mismatched = 0;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const SystemParams p = with_kappa(std::pow(10.0, log_kappa(rng)));
      const double D0 = det(rng);
      const auto r = find_steady_states(D0, p);
      const auto o = oracle::bisection_roots(D0, p);
      bool ok = static_cast<int>(o.size()) == r.count();
      for (std::size_t k = 0; ok && k < o.size(); ++k) {
        const double rel = std::abs(r.branches[k].delta_ps - o[k]) / std::abs(o[k]);
        worst = std::max(worst, rel);
        ok = rel <= 1e-8;
      }
      mismatched += !ok;
    }
    return Outcome{mismatched == 0, std::to_string(mismatched) + " mismatched, worst relative " + fmt("%.2e", worst)};
  });

  criterion("AC6", "fixed-point residuals", 0, [] {
    double worst = 0.0;
    int n = 0;
    for (double kappa : {1e2, 1e4, 1e6, 1.6e10}) {
      for (const SystemParams& base : {SystemParams{}, SystemParams::stiffness_reduced()}) {
        SystemParams p = base;
        p.kappa = kappa;
        for (int i = 0; i <= 200; ++i) {
          const double D0 = -30.0 + 60.0 * i / 200;
          for (const auto& b : find_steady_states(D0, p).branches) {
            worst = std::max(worst, fixed_point_residual(b, D0, p));
            ++n;
          }
        }
      }
    }
    return Outcome{worst < 1e-9 && n > 0, std::to_string(n) + " branches, worst scaled residual " + fmt("%.2e", worst)};
  });

  criterion("AC7", "stability claims", 0, [] {
    const SystemParams p;
    auto hi = find_steady_states(10.0, p);
    bool b1_unstable = false;
    for (auto& b : hi.branches)
      if (b.branch_index == 1) b1_unstable = classify(b, 10.0, p).label == Stability::Unstable;
    auto lo = find_steady_states(-5.0, p);
    int stable = 0;
    for (auto& b : lo.branches) stable += classify(b, -5.0, p).label == Stability::Stable;
    return Outcome{b1_unstable && stable >= 1 && stable <= 3,
                   std::string("branch 1 at 10 ") + (b1_unstable ? "unstable" : "not unstable") + ", " +
                       std::to_string(stable) + " of " + std::to_string(lo.count()) + " stable at -5"};
  });

  criterion("AC8", "fixed-mirror limit at kappa=1.6e10", 0, [] {
    const SystemParams p = with_kappa(1.6e10);
    double max_shift = 0.0, max_rel = 0.0, max_abs = 0.0, peak = 0.0;
    int bad = 0;
    const int n = 1201;
    for (int i = 0; i < n; ++i) {
      const double D0 = -6.0 + 12.0 * i / (n - 1);
      const auto r = find_steady_states(D0, p);
      const BranchSolution* near = nullptr;
      for (const auto& b : r.branches)
        if (!near || std::abs(b.delta_ps - D0) < std::abs(near->delta_ps - D0)) near = &b;
      if (!near) return Outcome{false, "no steady state at " + fmt("%g", D0)};
      max_shift = std::max(max_shift, std::abs(near->delta_ps - D0));
      const ChiValue c = chi(*near, p);
      const std::complex<double> got(c.re, c.im), ref = oracle::eit_chi(D0, p);
      const double rel = std::abs(got - ref) / std::abs(ref);
      max_rel = std::max(max_rel, rel);
      max_abs = std::max(max_abs, std::abs(got - ref));
      peak = std::max(peak, std::abs(ref));
      bad += rel >= 1e-3;
    }
    const bool ok = max_shift < 1e-3 && bad == 0;
    return Outcome{ok, "max shift " + fmt("%.3e", max_shift) + ", chi pointwise relative error max " +
                           fmt("%.3g", max_rel) + " (" + std::to_string(bad) + " of " + std::to_string(n) +
                           " points >= 1e-3; max deviation / peak " + fmt("%.2e", max_abs / peak) + ")"};
  });

  criterion("AC9", "transparency value", 0, [] {
    const SystemParams p;
    const ChiValue v = chi_at(0.0, p);
    const double expected = p.gamma2 / (p.Omega * p.Omega + p.gamma1 * p.gamma2);
    const double rel = std::abs(v.im / v.F - expected) / expected;
    return Outcome{v.re == 0.0 && rel <= 4 * std::numeric_limits<double>::epsilon(),
                   "re " + fmt("%g", v.re) + ", im/F relative error " + fmt("%.1e", rel)};
  });

  criterion("AC10", "jacobian against finite differences", 0, [] {
    const SystemParams p;
    double worst = 0.0, trace_err = 0.0;
    auto entries = oracle::battery(p, 20, -6.0, 24.0);
    for (auto& e : entries) {
      const JacobianMatrix J = jacobian(e.branch, e.Delta0, p);
      const JacobianMatrix F = oracle::fd_jacobian(MeanFieldState::at(e.branch).vec(), e.branch.x_s, e.Delta0, p);
      worst = std::max(worst, jacobian_deviation(J, F));
      const auto ev = eigen_decompose(J).values;
      trace_err = std::max(trace_err, std::abs(ev.sum() - J.trace()) / std::max(1.0, std::abs(J.trace())));
    }
    return Outcome{worst < 1e-4 && trace_err < 1e-8, std::to_string(entries.size()) + " branches, worst relative " +
                                                         fmt("%.2e", worst) + ", eigenvalue sum vs trace " +
                                                         fmt("%.1e", trace_err)};
  });

  criterion("AC11", "dynamics agree with the linear verdict", 120, [] {
    const SystemParams p = SystemParams::stiffness_reduced();
    int tested = 0, agree = 0, skipped = 0;
    auto entries = oracle::battery(p, 20, -12.0, 12.0);
    for (auto& e : entries) {
      const StabilityVerdict v = classify(e.branch, e.Delta0, p);
      if (v.label == Stability::Marginal) {
        ++skipped;
        continue;
      }
      ++tested;
      try {
        agree += basin_test(e.branch, e.Delta0, p, 1e-3).converged == (v.label == Stability::Stable);
      } catch (const Inconclusive&) {
      }
    }
    SystemParams q = p;
    q.gN = 0.0;
    q.Omega = 0.0;
    q.alpha_in = 0.0;
    MeanFieldState s;
    s.a_re = 1e-3;
    const Trajectory tr = integrate(s, 0.0, 0.0, q, 100.0, 1e-10);
    double decay = 0.0;
    for (std::size_t i = 0; i < tr.times.size(); ++i)
      decay = std::max(decay, std::abs(std::hypot(tr.states[i](2), tr.states[i](3)) / 1e-3 -
                                       std::exp(-q.gamma0 * tr.times[i] / 2)));
    return Outcome{agree == tested && decay < 1e-6,
                   std::to_string(agree) + "/" + std::to_string(tested) + " basin tests agree (" +
                       std::to_string(skipped) + " marginal skipped), decay error " + fmt("%.1e", decay)};
  });

  criterion("AC12", "sweep determinism across thread counts", 0, [] {
    const fs::path base = fs::temp_directory_path() / ("multistab_acceptance_" + std::to_string(::getpid()));
    const std::string args = std::string("sweep --config ") + CONFIG_DIR +
                             "/paper_defaults.cfg --delta0-min -6 --delta0-max 30 --steps 2048";
    const int c1 = run_cli(args + " --threads 1 --out " + (base / "t1").string());
    const int c8 = run_cli(args + " --threads 8 --out " + (base / "t8").string());
    bool same = c1 == 0 && c8 == 0;
    std::size_t rows = 0;
    for (const char* f : {"sweep_delta_ps.csv", "sweep_x_s.csv", "sweep_stability.csv"}) {
      const auto a = data_rows(base / "t1" / f), b = data_rows(base / "t8" / f);
      same = same && !a.empty() && a == b;
      rows += a.size();
    }
    fs::remove_all(base);
    return Outcome{same, std::to_string(rows) + " data rows compared, " + (same ? "identical" : "different")};
  });

  std::printf("%d criteria failed\n", failures);
  return failures;
}
