#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <tuple>
#include <vector>

#include "multistab/params.hpp"
#include "multistab/stability.hpp"
#include "multistab/steady_state.hpp"

namespace multistab {

/// A continuous run of one branch across a Delta0 grid. points[i] belongs to
/// grid index first + i; a curve never spans a gap.
template <typename Point>
struct TrackedCurve {
  int id = 0;
  int branch_index = 0;  // label at the first point
  std::size_t first = 0;
  std::vector<Point> points;

  std::size_t last() const { return first + points.size() - 1; }
  const Point* at(std::size_t grid_index) const {
    if (grid_index < first || grid_index > last()) return nullptr;
    return &points[grid_index - first];
  }
};

/// Jump tolerance factor for continuity tracking.
inline constexpr double kTrackJumpFactor = 5.0;

/// Links per-grid-point samples into curves by nearest-neighbour continuity
/// in delta_ps. A curve's next value is extrapolated linearly from its last
/// two points (slope 1 after a single point) and a sample joins it when it
/// lies within kTrackJumpFactor times the expected change over the step.
/// Closest pairs are matched first; unmatched samples start new curves and
/// unmatched curves end. `delta_of(p)` and `label_of(p)` read a sample.
template <typename Point, typename DeltaOf, typename LabelOf>
std::vector<TrackedCurve<Point>> track_curves(const std::vector<std::vector<Point>>& samples,
                                              std::span<const double> grid, DeltaOf delta_of, LabelOf label_of,
                                              int& next_id) {
  std::vector<TrackedCurve<Point>> curves;
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& pts = samples[i];
    std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const auto& c = curves[active[a]];
      const double h = grid[i] - grid[c.last()];
      const double last = delta_of(c.points.back());
      double slope = 1.0;
      if (c.points.size() >= 2) {
        slope = (last - delta_of(c.points[c.points.size() - 2])) / (grid[c.last()] - grid[c.last() - 1]);
      }
      const double expected = last + slope * h;
      const double tol = kTrackJumpFactor * std::max(std::abs(slope * h), 1e-3 * std::abs(h)) + 1e-12;
      for (std::size_t k = 0; k < pts.size(); ++k) {
        const double dist = std::abs(delta_of(pts[k]) - expected);
        if (dist <= tol) pairs.emplace_back(dist, a, k);
      }
    }
    std::sort(pairs.begin(), pairs.end());
    std::vector<bool> slot_used(active.size(), false), point_used(pts.size(), false);
    std::vector<std::size_t> next_active;
    for (const auto& [dist, a, k] : pairs) {
      if (slot_used[a] || point_used[k]) continue;
      slot_used[a] = point_used[k] = true;
      curves[active[a]].points.push_back(pts[k]);
      next_active.push_back(active[a]);
    }
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (point_used[k]) continue;
      TrackedCurve<Point> c;
      c.id = next_id++;
      c.branch_index = label_of(pts[k]);
      c.first = i;
      c.points.push_back(pts[k]);
      curves.push_back(std::move(c));
      next_active.push_back(curves.size() - 1);
    }
    std::sort(next_active.begin(), next_active.end());
    active = std::move(next_active);
  }
  return curves;
}

/// n evenly spaced values from lo to hi inclusive (n >= 2).
std::vector<double> linear_grid(double lo, double hi, std::size_t n);

struct SweepSample {
  double Delta0 = 0.0;
  BranchSolution branch;
  StabilityVerdict verdict;
};

struct SteadySweep {
  std::vector<double> grid;
  std::vector<std::vector<SweepSample>> samples;  // per grid point, descending delta_ps
  std::vector<TrackedCurve<SweepSample>> curves;
};

/// Solves and classifies every grid point on `threads` workers (0: all
/// cores), then tracks branches into curves. Output does not depend on the
/// thread count. Grid points without roots leave gaps.
SteadySweep steady_sweep(const SystemParams& params, std::span<const double> Delta0_grid, unsigned threads = 1);

}  // namespace multistab
