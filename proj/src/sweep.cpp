#include "multistab/sweep.hpp"

#include <stdexcept>

#include "multistab/parallel.hpp"

namespace multistab {

std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
  if (n < 2) throw std::invalid_argument("linear_grid: need at least two points");
  if (!(lo < hi)) throw std::invalid_argument("linear_grid: lo must be below hi");
  std::vector<double> g(n);
  const double span = hi - lo;
  for (std::size_t i = 0; i < n; ++i) g[i] = lo + span * static_cast<double>(i) / static_cast<double>(n - 1);
  g.back() = hi;
  return g;
}

SteadySweep steady_sweep(const SystemParams& p, std::span<const double> grid, unsigned threads) {
  validate(p);
  SteadySweep out;
  out.grid.assign(grid.begin(), grid.end());
  for (std::size_t i = 1; i < out.grid.size(); ++i) {
    if (!(out.grid[i] > out.grid[i - 1])) throw std::invalid_argument("steady_sweep: grid must be strictly increasing");
  }
  out.samples.resize(out.grid.size());
  parallel_for(out.grid.size(), threads, [&](std::size_t i) {
    const double D0 = out.grid[i];
    SteadyStateResult r = find_steady_states(D0, p);
    auto& row = out.samples[i];
    for (BranchSolution& b : r.branches) {
      const StabilityVerdict v = classify(b, D0, p);
      row.push_back({D0, b, v});
    }
  });
  int next_id = 0;
  out.curves = track_curves(
      out.samples, out.grid, [](const SweepSample& s) { return s.branch.delta_ps; },
      [](const SweepSample& s) { return s.branch.branch_index; }, next_id);
  return out;
}

}  // namespace multistab
