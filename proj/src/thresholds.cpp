#include "multistab/thresholds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "multistab/parallel.hpp"
#include "multistab/steady_state.hpp"

namespace multistab {

const Threshold* RegionReport::find(const std::string& name) const {
  for (const auto& t : thresholds) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

int count_roots(double Delta0, const SystemParams& params) {
  return find_steady_states(Delta0, params).count();
}

namespace {

constexpr double kNearestOffset = 1e-9;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Largest Delta0 the solver accepts (omega0 > 0).
double upper_limit(const SystemParams& p) {
  return std::nextafter(p.omega_a, -std::numeric_limits<double>::infinity()) -
         4.0 * std::numeric_limits<double>::epsilon() * p.omega_a;
}

// Location of the extremum of P(.; Delta0) inside [lo, hi], or NaN if P' does
// not change sign there.
double extremum_in(double lo, double hi, double Delta0, const SystemParams& p) {
  double dlo = quintic_eval(lo, Delta0, p).derivative;
  const double dhi = quintic_eval(hi, Delta0, p).derivative;
  if (dlo == 0.0) return lo;
  if (dhi == 0.0) return hi;
  if ((dlo > 0) == (dhi > 0)) return kNaN;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double dm = quintic_eval(mid, Delta0, p).derivative;
    if (dm == 0.0) return mid;
    if ((dm > 0) == (dlo > 0)) {
      lo = mid;
      dlo = dm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Scaled value of P at its extremum near the merging pair; changes sign
// exactly at the tangency.
struct TangencyProbe {
  double lo, hi;  // delta window around the merging pair
  const SystemParams* p;

  double operator()(double Delta0, double* where = nullptr) const {
    const double d = extremum_in(lo, hi, Delta0, *p);
    if (std::isnan(d)) return kNaN;
    if (where) *where = d;
    const QuinticValue q = quintic_eval(d, Delta0, *p);
    return q.value / q.magnitude;
  }
};

// Moves a bisected threshold onto the exact double root. Leaves it alone if
// the merging pair cannot be isolated.
void polish_threshold(Threshold& th, double u, double v, const SystemParams& p) {
  const double high_side = th.count_above > th.count_below ? v : u;
  const SteadyStateResult r = find_steady_states(high_side, p);
  if (r.count() < 2) return;
  std::size_t best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < r.branches.size(); ++i) {
    const double a = r.branches[i].delta_ps, b = r.branches[i + 1].delta_ps;
    const double gap = (a - b) / (1.0 + std::abs(a) + std::abs(b));
    if (gap < best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  const double top = r.branches[best].delta_ps;
  const double bottom = r.branches[best + 1].delta_ps;
  const double pad = (top - bottom) + 1e-12 * (1.0 + std::abs(top));
  th.merged_root = 0.5 * (top + bottom);

  const TangencyProbe probe{bottom - pad, top + pad, &p};
  double eu = probe(u), ev = probe(v);
  if (std::isnan(eu) || std::isnan(ev) || (eu > 0) == (ev > 0)) return;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (u + v);
    if (mid <= u || mid >= v) break;
    const double em = probe(mid);
    if (std::isnan(em)) return;
    if (em == 0.0) {
      u = v = mid;
      break;
    }
    if ((em > 0) == (eu > 0)) {
      u = mid;
      eu = em;
    } else {
      v = mid;
    }
  }
  th.delta0 = 0.5 * (u + v);
  double where = th.merged_root;
  probe(th.delta0, &where);
  th.merged_root = where;
}

struct Bracket {
  double lo, hi;
  int count_lo, count_hi;
};

// Recursive bisection of every count change inside [lo, hi].
void bisect_changes(Bracket b, const SystemParams& p, std::vector<Bracket>& out) {
  if (b.count_lo == b.count_hi) return;
  const double mid = 0.5 * (b.lo + b.hi);
  const double width_tol = 1e-6 * (1.0 + std::abs(mid));
  if (b.hi - b.lo < width_tol || mid <= b.lo || mid >= b.hi) {
    out.push_back(b);
    return;
  }
  const int cm = count_roots(mid, p);
  bisect_changes({b.lo, mid, b.count_lo, cm}, p, out);
  bisect_changes({mid, b.hi, cm, b.count_hi}, p, out);
}

std::string transition_name(int above, int below, bool ab_seen) {
  if (above == 0 && below == 2) return "cd";
  if (above == 2 && below == 4) return ab_seen ? "dc" : "bc";
  if (above == 4 && below == 2) return "ab";
  return "n" + std::to_string(above) + "-" + std::to_string(below);
}

}  // namespace

std::vector<double> threshold_scan_grid(const SystemParams& p, double lo, double hi, int points) {
  hi = std::min(hi, upper_limit(p));
  std::vector<double> grid{lo, hi};
  const int per_side = std::max(2, points / 2);
  const double dmin = kNearestOffset * std::max(1.0, std::abs(p.Delta_c));
  auto side = [&](double sign, double reach) {
    if (reach <= dmin) return;
    const double step = std::log(reach / dmin) / (per_side - 1);
    for (int i = 0; i < per_side; ++i) {
      const double d = p.Delta_c + sign * dmin * std::exp(step * i);
      if (d > lo && d < hi) grid.push_back(d);
    }
  };
  side(+1.0, hi - p.Delta_c);
  side(-1.0, p.Delta_c - lo);
  if (p.Delta_c > lo && p.Delta_c < hi) grid.push_back(p.Delta_c);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

RegionReport find_thresholds(const SystemParams& p, double lo, double hi, unsigned threads) {
  validate(p);
  if (!(lo < hi)) throw std::invalid_argument("find_thresholds: Delta0_lo must be below Delta0_hi");
  const std::vector<double> grid = threshold_scan_grid(p, lo, hi);
  if (grid.size() < 2) throw std::invalid_argument("find_thresholds: range lies beyond omega_a");

  std::vector<int> counts(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) { counts[i] = count_roots(grid[i], p); });

  std::vector<Bracket> brackets;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    bisect_changes({grid[i], grid[i + 1], counts[i], counts[i + 1]}, p, brackets);
  }
  RegionReport report;
  report.kappa = p.kappa;
  report.window_lo = grid.front();
  report.window_hi = grid.back();

  // An odd change is a root crossing omega_L = 0, not a tangency.
  const auto odd = [](const Bracket& b) { return (b.count_hi - b.count_lo) % 2 != 0; };
  for (const Bracket& b : brackets) {
    if (odd(b)) report.cutoff_crossings.push_back(0.5 * (b.lo + b.hi));
  }
  brackets.erase(std::remove_if(brackets.begin(), brackets.end(), odd), brackets.end());
  if (brackets.empty()) throw NoTransition("root count is constant on the range");

  // Named from the top down so that re-entry below "ab" is recognized.
  bool ab_seen = false;
  for (auto it = brackets.rbegin(); it != brackets.rend(); ++it) {
    Threshold th;
    th.count_above = it->count_hi;
    th.count_below = it->count_lo;
    th.name = transition_name(th.count_above, th.count_below, ab_seen);
    if (th.name == "ab") ab_seen = true;
    th.delta0 = 0.5 * (it->lo + it->hi);
    polish_threshold(th, it->lo, it->hi, p);
    report.thresholds.push_back(th);
  }
  std::reverse(report.thresholds.begin(), report.thresholds.end());

  double edge = report.window_lo;
  int count = report.thresholds.front().count_below;
  ab_seen = false;
  for (std::size_t i = 0; i <= report.thresholds.size(); ++i) {
    const bool last = i == report.thresholds.size();
    Region r;
    r.lo = edge;
    r.hi = last ? report.window_hi : report.thresholds[i].delta0;
    r.root_count = count;
    report.regions.push_back(r);
    if (!last) {
      edge = r.hi;
      count = report.thresholds[i].count_above;
    }
  }
  // Region labels need to know whether an "ab" threshold lies above.
  for (std::size_t i = 0; i < report.regions.size(); ++i) {
    bool below_ab = false;
    for (std::size_t j = i; j < report.thresholds.size(); ++j) {
      if (report.thresholds[j].name == "ab") below_ab = true;
    }
    Region& r = report.regions[i];
    switch (r.root_count) {
      case 0: r.label = 'a'; break;
      case 2: r.label = below_ab ? 'd' : 'b'; break;
      case 4: r.label = 'c'; break;
      default: r.label = '?';
    }
  }
  return report;
}

KappaWindow kappa_window(const SystemParams& p) {
  return {p.Delta_c - 10.0 * p.omega_a, p.Delta_c};
}

bool has_ab_transition(const SystemParams& p, unsigned threads) {
  const KappaWindow w = kappa_window(p);
  try {
    return find_thresholds(p, w.lo, w.hi, threads).find("ab") != nullptr;
  } catch (const NoTransition&) {
    return false;
  }
}

double kappa_lower_bound(const SystemParams& params, double kappa_lo, double kappa_hi, unsigned threads) {
  if (!(kappa_lo > 0.0 && kappa_lo < kappa_hi)) {
    throw std::invalid_argument("kappa_lower_bound: need 0 < kappa_lo < kappa_hi");
  }
  SystemParams p = params;
  auto predicate = [&](double kappa) {
    p.kappa = kappa;
    return has_ab_transition(p, threads);
  };
  const bool at_lo = predicate(kappa_lo);
  const bool at_hi = predicate(kappa_hi);
  if (at_lo == at_hi) throw SamePhase("ab transition is equally present at both ends of the kappa bracket");
  while (kappa_hi / kappa_lo > 1.0 + 1e-3) {
    const double mid = std::sqrt(kappa_lo * kappa_hi);
    if (predicate(mid) == at_lo) {
      kappa_lo = mid;
    } else {
      kappa_hi = mid;
    }
  }
  return std::sqrt(kappa_lo * kappa_hi);
}

char classify_region(double Delta0, const RegionReport& report) {
  if (!(Delta0 >= report.window_lo && Delta0 <= report.window_hi) || report.regions.empty()) {
    throw OutOfRange("Delta0 outside the region report window");
  }
  for (const auto& r : report.regions) {
    if (Delta0 <= r.hi) return r.label;
  }
  return report.regions.back().label;
}

}  // namespace multistab
