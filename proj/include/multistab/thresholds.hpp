#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "multistab/params.hpp"

namespace multistab {

/// Root-count transition in Delta0. Names follow the transition, scanning
/// from large to small Delta0: 0->2 is "cd", the first 2->4 is "bc", 4->2 is
/// "ab", and a 2->4 re-entry below "ab" is "dc". Anything else is "n<above>-<below>".
/// (With kappa below kappa_L the "cd"/"bc" pair is sometimes written th^(a)/th^(b).)
struct Threshold {
  std::string name;
  double delta0 = 0.0;
  int count_above = 0;
  int count_below = 0;
  double merged_root = 0.0;  // delta_ps of the tangent root pair
};

struct Region {
  double lo = 0.0;
  double hi = 0.0;
  int root_count = 0;
  char label = '?';  // a: 0 roots, b: 2 above ab, c: 4, d: 2 below ab
};

struct RegionReport {
  double kappa = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::vector<Threshold> thresholds;  // ascending in delta0
  std::vector<Region> regions;        // ascending, covering [window_lo, window_hi]
  std::optional<double> kappa_L;
  // Delta0 values where a root leaves through omega_L = 0 (x_s = l). These
  // change the count by one and are not thresholds.
  std::vector<double> cutoff_crossings;

  const Threshold* find(const std::string& name) const;
};

class NoTransition : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class SamePhase : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class OutOfRange : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Number of physical steady states (degenerate pairs count as two).
int count_roots(double Delta0, const SystemParams& params);

/// Scan grid: `points` values log-spaced in |Delta0 - Delta_c| on both sides
/// of Delta_c, clipped to [lo, hi] and to Delta0 < omega_a.
std::vector<double> threshold_scan_grid(const SystemParams& params, double lo, double hi, int points = 4096);

/// Locates every root-count change in [lo, hi]. Each transition is bisected
/// to |interval| < 1e-6 (1 + |Delta_th|) and then polished onto the exact
/// tangency of the merging root pair. Throws NoTransition if none exists.
RegionReport find_thresholds(const SystemParams& params, double lo, double hi, unsigned threads = 1);

/// Window used by kappa_lower_bound: [Delta_c - 10 omega_a, Delta_c]. The
/// "ab" transition of a barely supercritical kappa sits near Delta0 = -omega_a.
struct KappaWindow {
  double lo, hi;
};
KappaWindow kappa_window(const SystemParams& params);

/// Whether an "ab" threshold exists in kappa_window() at the given kappa.
bool has_ab_transition(const SystemParams& params, unsigned threads = 1);

/// Bisection in log kappa (relative 1e-3) for the smallest kappa with an "ab"
/// transition. Throws SamePhase if both ends agree.
double kappa_lower_bound(const SystemParams& params, double kappa_lo, double kappa_hi, unsigned threads = 1);

/// Region label of Delta0 in a report; throws OutOfRange outside the window.
char classify_region(double Delta0, const RegionReport& report);

}  // namespace multistab
