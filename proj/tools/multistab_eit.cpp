// multistab-eit: steady states, thresholds, susceptibility and dynamics of the
// atom-assisted optomechanical cavity from a flat config file.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "multistab/dynamics.hpp"
#include "multistab/params.hpp"
#include "multistab/parallel.hpp"
#include "multistab/stability.hpp"
#include "multistab/steady_state.hpp"
#include "multistab/susceptibility.hpp"
#include "multistab/sweep.hpp"
#include "multistab/thresholds.hpp"

#ifndef MULTISTAB_VERSION
#define MULTISTAB_VERSION "unknown"
#endif

namespace ms = multistab;

namespace {

enum ExitCode : int { kOk = 0, kConfig = 1, kNoRoot = 2, kNoTransition = 3, kStiff = 4 };

constexpr std::size_t kEvolveStepBudget = 2'000'000;

class CliError : public std::runtime_error {
 public:
  CliError(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
  int code() const noexcept { return code_; }

 private:
  int code_;
};

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Common {
  std::string config;
  unsigned threads = 0;
  std::string out = "out";
};

using Flags = std::vector<std::pair<std::string, std::string>>;

struct Manifest {
  std::string subcommand;
  Flags flags;
  ms::SystemParams params;
  std::string timestamp;
};

void write_manifest(std::ostream& os, const Manifest& m) {
  os << "# multistab-eit " << MULTISTAB_VERSION << '\n';
  os << "# subcommand: " << m.subcommand << '\n';
  os << "# timestamp: " << m.timestamp << '\n';
  os << "# flags:";
  for (const auto& [k, v] : m.flags) os << " --" << k << '=' << v;
  os << '\n';
  os << "# units: all rates/frequencies in units of gamma1\n";
  os << "# config:\n";
  ms::write_config(os, m.params, "#   ");
  os << "# derived: M = " << num(ms::mirror_mass(m.params)) << ", gammaM = " << num(ms::mirror_damping(m.params))
     << ", omega_M = " << num(m.params.omega_M) << ", l = " << num(m.params.l) << '\n';
}

class Output {
 public:
  Output(const Common& c, Manifest m) : dir_(c.out), manifest_(std::move(m)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw CliError(kConfig, "cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  // Opens <out>/<name> with the manifest already written.
  std::ofstream open(const std::string& name) {
    const auto path = dir_ / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw CliError(kConfig, "cannot write " + path.string());
    write_manifest(os, manifest_);
    written_.push_back(path.string());
    return os;
  }

  const std::vector<std::string>& written() const { return written_; }

 private:
  std::filesystem::path dir_;
  Manifest manifest_;
  std::vector<std::string> written_;
};

ms::SystemParams load(const Common& c) {
  ms::SystemParams p = ms::read_config_file(c.config);
  ms::validate(p);
  return p;
}

Manifest manifest(const std::string& sub, const Common& c, Flags flags, const ms::SystemParams& p) {
  flags.emplace_back("config", c.config);
  flags.emplace_back("threads", std::to_string(c.threads));
  flags.emplace_back("out", c.out);
  return {sub, std::move(flags), p, utc_now()};
}

void require_range(double lo, double hi, const char* what) {
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
    throw CliError(kConfig, std::string(what) + ": minimum must be below maximum");
  }
}

void join(std::ostream& os, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
  os << '\n';
}

// Wide table: one Delta0 column, then `fields.size()` columns per curve.
// Grid points a curve does not cover are left empty.
template <typename Point>
void write_curves(std::ostream& os, const std::vector<double>& grid,
                  const std::vector<ms::TrackedCurve<Point>>& curves,
                  const std::vector<std::pair<std::string, std::function<std::string(const Point&)>>>& fields) {
  std::vector<std::string> head{"Delta0"};
  for (const auto& c : curves) {
    for (const auto& [suffix, fn] : fields) {
      std::string name = "curve" + std::to_string(c.id) + "_branch" + std::to_string(c.branch_index);
      if (!suffix.empty()) name += "_" + suffix;
      head.push_back(name);
    }
  }
  join(os, head);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<std::string> row{num(grid[i])};
    for (const auto& c : curves) {
      const Point* pt = c.at(i);
      for (const auto& [suffix, fn] : fields) row.push_back(pt ? fn(*pt) : std::string());
    }
    join(os, row);
  }
}

std::string no_root_message(double Delta0) {
  return "no steady state in region a (Delta0 = " + num(Delta0) + ")";
}

// --- subcommands -----------------------------------------------------------

int cmd_solve(const Common& c, double delta0) {
  const ms::SystemParams p = load(c);
  ms::SteadyStateResult r = ms::find_steady_states(delta0, p);
  if (r.empty()) throw CliError(kNoRoot, no_root_message(delta0));

  Output out(c, manifest("solve", c, {{"delta0", num(delta0)}}, p));
  std::ostringstream table;
  join(table, {"branch_index", "delta_ps", "x_s", "a_re", "a_im", "A_re", "A_im", "C_re", "C_im", "stability",
               "two_photon_residual", "max_real_eigenvalue", "degenerate"});
  for (ms::BranchSolution& b : r.branches) {
    const ms::StabilityVerdict v = ms::classify(b, delta0, p);
    join(table, {std::to_string(b.branch_index), num(b.delta_ps), num(b.x_s), num(b.a_s.real()), num(b.a_s.imag()),
                 num(b.A_s.real()), num(b.A_s.imag()), num(b.C_s.real()), num(b.C_s.imag()),
                 std::string(ms::to_string(v.label)), num(ms::two_photon_residual(b, p)), num(v.max_real_eig),
                 b.degenerate ? "1" : "0"});
  }
  out.open("solve.csv") << table.str();
  std::cout << table.str();
  return kOk;
}

int cmd_sweep(const Common& c, double lo, double hi, int steps) {
  const ms::SystemParams p = load(c);
  require_range(lo, hi, "sweep");
  if (steps < 2) throw CliError(kConfig, "sweep: --steps must be at least 2");
  const auto grid = ms::linear_grid(lo, hi, static_cast<std::size_t>(steps));
  const ms::SteadySweep sw = ms::steady_sweep(p, grid, c.threads);

  Output out(c, manifest("sweep", c,
                         {{"delta0-min", num(lo)}, {"delta0-max", num(hi)}, {"steps", std::to_string(steps)}}, p));
  using F = std::function<std::string(const ms::SweepSample&)>;
  {
    auto os = out.open("sweep_delta_ps.csv");
    write_curves<ms::SweepSample>(os, sw.grid, sw.curves, {{"", F([](const auto& s) { return num(s.branch.delta_ps); })}});
  }
  {
    auto os = out.open("sweep_x_s.csv");
    write_curves<ms::SweepSample>(os, sw.grid, sw.curves, {{"", F([](const auto& s) { return num(s.branch.x_s); })}});
  }
  {
    auto os = out.open("sweep_stability.csv");
    write_curves<ms::SweepSample>(
        os, sw.grid, sw.curves, {{"", F([](const auto& s) { return std::string(ms::to_string(s.verdict.label)); })}});
  }
  std::size_t empty = 0;
  for (const auto& row : sw.samples) empty += row.empty();
  std::cout << "sweep: " << grid.size() << " points, " << sw.curves.size() << " curves, " << empty
            << " points without a steady state\n";
  for (const auto& f : out.written()) std::cout << "wrote " << f << '\n';
  return kOk;
}

int cmd_thresholds(const Common& c, std::optional<double> lo_opt, std::optional<double> hi_opt) {
  const ms::SystemParams p = load(c);
  const double lo = lo_opt.value_or(p.Delta_c - p.omega_a);
  const double hi = hi_opt.value_or(p.omega_a);
  require_range(lo, hi, "thresholds");
  ms::RegionReport rep;
  try {
    rep = ms::find_thresholds(p, lo, hi, c.threads);
  } catch (const ms::NoTransition& e) {
    throw CliError(kNoTransition, e.what());
  }

  Output out(c, manifest("thresholds", c, {{"delta0-min", num(lo)}, {"delta0-max", num(hi)}}, p));
  std::ostringstream th, rg, cut;
  join(th, {"name", "delta0", "count_above", "count_below", "merged_delta_ps"});
  for (const auto& t : rep.thresholds) {
    join(th, {t.name, num(t.delta0), std::to_string(t.count_above), std::to_string(t.count_below),
              num(t.merged_root)});
  }
  join(rg, {"lo", "hi", "root_count", "label"});
  for (const auto& r : rep.regions) {
    join(rg, {num(r.lo), num(r.hi), std::to_string(r.root_count), std::string(1, r.label)});
  }
  join(cut, {"delta0"});
  for (double d : rep.cutoff_crossings) join(cut, {num(d)});
  out.open("thresholds.csv") << th.str();
  out.open("regions.csv") << rg.str();
  out.open("cutoff_crossings.csv") << cut.str();
  std::cout << th.str() << '\n' << rg.str();
  return kOk;
}

int cmd_kappa_bound(const Common& c, double kmin, double kmax) {
  const ms::SystemParams p = load(c);
  if (!(kmin > 0.0 && kmax > kmin && std::isfinite(kmax))) {
    throw CliError(kConfig, "kappa-bound: need 0 < --kappa-min < --kappa-max");
  }
  double kL = 0.0;
  try {
    kL = ms::kappa_lower_bound(p, kmin, kmax, c.threads);
  } catch (const ms::SamePhase& e) {
    throw CliError(kNoTransition, e.what());
  }
  Output out(c, manifest("kappa-bound", c, {{"kappa-min", num(kmin)}, {"kappa-max", num(kmax)}}, p));
  std::ostringstream t;
  join(t, {"quantity", "value"});
  join(t, {"kappa_L", num(kL)});
  out.open("kappa_bound.csv") << t.str();
  std::cout << t.str();
  return kOk;
}

int cmd_chi(const Common& c, double lo, double hi, int steps, std::optional<double> delta_c) {
  ms::SystemParams p = load(c);
  if (delta_c) {
    p.Delta_c = *delta_c;
    ms::validate(p);
  }
  require_range(lo, hi, "chi");
  if (steps < 2) throw CliError(kConfig, "chi: --steps must be at least 2");
  const auto grid = ms::linear_grid(lo, hi, static_cast<std::size_t>(steps));
  const ms::ChiSweep sw = ms::chi_sweep(p, grid, c.threads);

  Flags flags{{"delta0-min", num(lo)}, {"delta0-max", num(hi)}, {"steps", std::to_string(steps)}};
  if (delta_c) flags.emplace_back("delta-c", num(*delta_c));
  Output out(c, manifest("chi", c, std::move(flags), p));
  using F = std::function<std::string(const ms::ChiPoint&)>;
  const std::vector<std::pair<std::string, F>> fields{
      {"re", F([](const ms::ChiPoint& pt) { return num(pt.value.re / pt.value.F); })},
      {"im", F([](const ms::ChiPoint& pt) { return num(pt.value.im / pt.value.F); })}};
  {
    auto os = out.open("chi_stable.csv");
    write_curves(os, sw.grid, sw.stable, fields);
  }
  {
    auto os = out.open("chi_unstable.csv");
    write_curves(os, sw.grid, sw.unstable, fields);
  }
  std::cout << "chi: " << sw.stable.size() << " stable curves, " << sw.unstable.size() << " unstable curves, "
            << sw.empty_points.size() << " points without a steady state\n";
  try {
    const auto env = ms::im_envelope(sw);
    const ms::WindowMetrics w = ms::window_metrics(sw.grid, env);
    std::cout << "window: center " << num(w.center) << ", width " << num(w.width) << ", peaks " << num(w.left_peak)
              << " " << num(w.right_peak) << '\n';
  } catch (const ms::NoWindow&) {
    std::cout << "window: none\n";
  }
  for (const auto& f : out.written()) std::cout << "wrote " << f << '\n';
  return kOk;
}

struct EvolveArgs {
  double delta0 = 0.0;
  int branch = 1;
  double perturb = 1e-3;
  double t_max = 0.0;
  double tol = 1e-9;
};

int cmd_evolve(const Common& c, const EvolveArgs& a) {
  const ms::SystemParams p = load(c);
  if (!(a.perturb >= 0.0 && a.perturb <= 0.1)) throw CliError(kConfig, "evolve: --perturb must lie in [0, 0.1]");
  if (!(a.tol >= 1e-12 && a.tol <= 1e-3)) throw CliError(kConfig, "evolve: --tol must lie in [1e-12, 1e-3]");
  if (!(a.t_max >= 0.0)) throw CliError(kConfig, "evolve: --t-max must be non-negative");

  ms::SteadyStateResult r = ms::find_steady_states(a.delta0, p);
  if (r.empty()) throw CliError(kNoRoot, no_root_message(a.delta0));
  ms::BranchSolution* branch = nullptr;
  for (auto& b : r.branches) {
    if (b.branch_index == a.branch) branch = &b;
  }
  if (!branch) {
    throw CliError(kNoRoot, "branch " + std::to_string(a.branch) + " does not exist at Delta0 = " + num(a.delta0));
  }
  const ms::StabilityVerdict verdict = ms::classify(*branch, a.delta0, p);
  const double t_max = a.t_max > 0.0 ? a.t_max : 100.0 / std::max(std::abs(verdict.max_real_eig), 1e-12);

  ms::BasinResult res;
  std::string outcome;
  try {
    if (a.perturb == 0.0) {
      // Start exactly on the fixed point and let it sit there.
      ms::IntegrateOptions io;
      io.scale = ms::fixed_point_scales(*branch, p);
      io.max_steps = kEvolveStepBudget;
      res.trajectory = ms::integrate(ms::MeanFieldState::at(*branch), branch->x_s, a.delta0, p, t_max, a.tol, io);
      res.converged = true;
      res.trajectory.converged_to = branch->branch_index;
    } else {
      ms::BasinOptions bo;
      bo.t_max = t_max;
      bo.tol = a.tol;
      bo.max_steps = kEvolveStepBudget;
      res = ms::basin_test(*branch, a.delta0, p, a.perturb, bo);
    }
    outcome = res.converged ? "true" : "false";
  } catch (const ms::StepSizeUnderflow& e) {
    throw CliError(kStiff, std::string(e.what()) +
                               "\nadvisory: these rates are too stiff for explicit time stepping; rerun with the "
                               "stiffness-reduced parameter set (configs/stiffness_reduced.cfg, "
                               "SystemParams::stiffness_reduced())");
  } catch (const ms::Inconclusive& e) {
    res = e.partial();
    outcome = "inconclusive";
    std::cerr << "multistab-eit: " << e.what() << '\n';
  }

  Output out(c, manifest("evolve", c,
                         {{"delta0", num(a.delta0)},
                          {"branch", std::to_string(a.branch)},
                          {"perturb", num(a.perturb)},
                          {"t-max", num(t_max)},
                          {"tol", num(a.tol)}},
                         p));
  const ms::StateVector fixed = ms::MeanFieldState::at(*branch).vec();
  const ms::StateVector scale = ms::fixed_point_scales(*branch, p);
  auto os = out.open("evolve.csv");
  join(os, {"t", "x", "p", "a_re", "a_im", "A_re", "A_im", "C_re", "C_im", "distance"});
  const auto& tr = res.trajectory;
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    std::vector<std::string> row{num(tr.times[i])};
    for (int k = 0; k < 8; ++k) row.push_back(num(tr.states[i](k)));
    row.push_back(num(ms::scaled_distance(tr.states[i], fixed, scale)));
    join(os, row);
  }
  os << "# converged=" << outcome << '\n';
  os << "# initial_stability=" << ms::to_string(verdict.label) << " max_real_eigenvalue=" << num(verdict.max_real_eig)
     << '\n';
  os << "# arrived_at_branch=" << (tr.converged_to ? std::to_string(*tr.converged_to) : std::string("none"))
     << " accepted_steps=" << tr.step_stats.accepted << " rejected_steps=" << tr.step_stats.rejected
     << " stiffness_detected=" << (tr.step_stats.stiffness_detected ? "true" : "false") << '\n';
  std::cout << "converged=" << outcome << '\n';
  for (const auto& f : out.written()) std::cout << "wrote " << f << '\n';
  return kOk;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "parameter file (key = value)")->required()->check(CLI::ExistingFile);
  sub->add_option("--threads", c.threads, "worker threads for sweeps (0: all cores)")->capture_default_str();
  sub->add_option("--out", c.out, "output directory")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multistable steady states of an atom-assisted optomechanical cavity"};
  app.set_version_flag("--version", std::string(MULTISTAB_VERSION));
  app.require_subcommand(1);

  Common common;
  double delta0 = 0.0, dmin = 0.0, dmax = 0.0;
  int steps = 2048;
  std::optional<double> tmin, tmax, delta_c;
  double kmin = 1e2, kmax = 1e5;
  EvolveArgs ev;

  auto* solve = app.add_subcommand("solve", "steady states and their stability at one detuning");
  add_common(solve, common);
  solve->add_option("--delta0", delta0, "atom-cavity detuning")->required();

  auto* sweep = app.add_subcommand("sweep", "branch-tracked steady states over a detuning range");
  add_common(sweep, common);
  sweep->add_option("--delta0-min", dmin)->required();
  sweep->add_option("--delta0-max", dmax)->required();
  sweep->add_option("--steps", steps, "grid points")->capture_default_str();

  auto* th = app.add_subcommand("thresholds", "root-count transitions and regions");
  add_common(th, common);
  th->add_option("--delta0-min", tmin, "default Delta_c - omega_a");
  th->add_option("--delta0-max", tmax, "default omega_a");

  auto* kb = app.add_subcommand("kappa-bound", "smallest kappa with a four-to-two transition");
  add_common(kb, common);
  kb->add_option("--kappa-min", kmin)->capture_default_str();
  kb->add_option("--kappa-max", kmax)->capture_default_str();

  auto* ch = app.add_subcommand("chi", "probe susceptibility along the stable branches");
  add_common(ch, common);
  ch->add_option("--delta0-min", dmin)->required();
  ch->add_option("--delta0-max", dmax)->required();
  ch->add_option("--steps", steps, "grid points")->capture_default_str();
  ch->add_option("--delta-c", delta_c, "control detuning (overrides the config)");

  auto* evo = app.add_subcommand("evolve", "time evolution from a perturbed steady state");
  add_common(evo, common);
  evo->add_option("--delta0", ev.delta0)->required();
  evo->add_option("--branch", ev.branch)->capture_default_str();
  evo->add_option("--perturb", ev.perturb, "scaled perturbation size")->capture_default_str();
  evo->add_option("--t-max", ev.t_max, "0: 100 / |max Re eigenvalue|")->capture_default_str();
  evo->add_option("--tol", ev.tol)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }
  if (common.threads == 0) common.threads = ms::default_threads();

  try {
    if (*solve) return cmd_solve(common, delta0);
    if (*sweep) return cmd_sweep(common, dmin, dmax, steps);
    if (*th) return cmd_thresholds(common, tmin, tmax);
    if (*kb) return cmd_kappa_bound(common, kmin, kmax);
    if (*ch) return cmd_chi(common, dmin, dmax, steps, delta_c);
    if (*evo) return cmd_evolve(common, ev);
  } catch (const CliError& e) {
    std::cerr << "multistab-eit: " << e.what() << '\n';
    return e.code();
  } catch (const ms::ParamError& e) {
    std::cerr << "multistab-eit: config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "multistab-eit: " << e.what() << '\n';
    return kConfig;
  }
  return kOk;
}
