#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "multistab/params.hpp"
#include "multistab/steady_state.hpp"
#include "multistab/sweep.hpp"

namespace multistab {

/// Probe susceptibility of the atomic medium. re/im are in the same units as
/// F (params.F_scale); with the default F = 1 they are chi/F.
struct ChiValue {
  double re = 0.0;
  double im = 0.0;
  double F = 1.0;
  double Xi = 0.0;     // gamma1 (d - Delta_c) + gamma2 d
  double Theta = 0.0;  // Omega^2 - d (d - Delta_c) + gamma1 gamma2
  double delta_ps = 0.0;
  int branch_index = 0;
};

class DegenerateDenominator : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// chi at an arbitrary probe detuning; the mirror enters only through delta.
ChiValue chi_at(double delta_ps, const SystemParams& params, int branch_index = 0);

/// chi of a steady-state branch.
ChiValue chi(const BranchSolution& branch, const SystemParams& params);

/// One grid point of a tracked curve.
struct ChiPoint {
  double Delta0 = 0.0;
  ChiValue value;
  Stability stability = Stability::Unclassified;
};

using ChiCurve = TrackedCurve<ChiPoint>;

struct ChiSweep {
  std::vector<double> grid;
  std::vector<ChiCurve> stable;    // Stable and Marginal branches
  std::vector<ChiCurve> unstable;  // kept apart from the plotted curves
  std::vector<std::size_t> empty_points;  // grid indices without any root
};

/// Solves, classifies and evaluates chi on every grid point (in parallel),
/// then links points into curves by nearest-neighbour continuity in
/// delta_ps. A point joins a curve when it lies within five times the
/// curve's expected delta_ps change over one grid step.
ChiSweep chi_sweep(const SystemParams& params, std::span<const double> Delta0_grid, unsigned threads = 1);

/// Pointwise maximum of Im chi over the stable curves; NaN where no curve exists.
std::vector<double> im_envelope(const ChiSweep& sweep);

struct WindowMetrics {
  double center = 0.0;  // argmin of the curve between its two largest peaks
  double width = 0.0;   // extent of the dip below 10% of the smaller peak
  double floor = 0.0;   // minimum between the peaks
  double left_peak = 0.0, right_peak = 0.0;  // peak positions
};

class NoWindow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Transparency window of a sampled curve y(x). NaN samples are gaps. Throws
/// NoWindow if the curve has fewer than two local maxima.
WindowMetrics window_metrics(std::span<const double> x, std::span<const double> y);

}  // namespace multistab
