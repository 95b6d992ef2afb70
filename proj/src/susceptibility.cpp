#include "multistab/susceptibility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "multistab/parallel.hpp"
#include "multistab/stability.hpp"

namespace multistab {

ChiValue chi_at(double d, const SystemParams& p, int branch_index) {
  const double dc = d - p.Delta_c;
  ChiValue v;
  v.F = p.F_scale;
  v.delta_ps = d;
  v.branch_index = branch_index;
  v.Xi = p.gamma1 * dc + p.gamma2 * d;
  v.Theta = p.Omega * p.Omega - d * dc + p.gamma1 * p.gamma2;
  const double den = v.Xi * v.Xi + v.Theta * v.Theta;
  if (den < 1e-30) throw DegenerateDenominator("chi: Xi^2 + Theta^2 vanishes");
  v.re = v.F * (p.gamma2 * v.Xi - dc * v.Theta) / den;
  v.im = v.F * (p.gamma2 * v.Theta + dc * v.Xi) / den;
  return v;
}

ChiValue chi(const BranchSolution& b, const SystemParams& p) {
  return chi_at(b.delta_ps, p, b.branch_index);
}

ChiSweep chi_sweep(const SystemParams& p, std::span<const double> Delta0_grid, unsigned threads) {
  validate(p);
  ChiSweep out;
  out.grid.assign(Delta0_grid.begin(), Delta0_grid.end());
  const std::size_t n = out.grid.size();
  for (std::size_t i = 1; i < n; ++i) {
    if (!(out.grid[i] > out.grid[i - 1])) throw std::invalid_argument("chi_sweep: grid must be strictly increasing");
  }

  std::vector<std::vector<ChiPoint>> stable(n), unstable(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const double D0 = out.grid[i];
    SteadyStateResult r = find_steady_states(D0, p);
    for (BranchSolution& b : r.branches) {
      const StabilityVerdict v = classify(b, D0, p);
      ChiPoint pt{D0, chi(b, p), v.label};
      (v.label == Stability::Unstable ? unstable[i] : stable[i]).push_back(pt);
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (stable[i].empty() && unstable[i].empty()) out.empty_points.push_back(i);
  }
  int next_id = 0;
  const auto delta_of = [](const ChiPoint& pt) { return pt.value.delta_ps; };
  const auto label_of = [](const ChiPoint& pt) { return pt.value.branch_index; };
  out.stable = track_curves(stable, out.grid, delta_of, label_of, next_id);
  out.unstable = track_curves(unstable, out.grid, delta_of, label_of, next_id);
  return out;
}

std::vector<double> im_envelope(const ChiSweep& sweep) {
  std::vector<double> env(sweep.grid.size(), std::numeric_limits<double>::quiet_NaN());
  for (const ChiCurve& c : sweep.stable) {
    for (std::size_t k = 0; k < c.points.size(); ++k) {
      double& e = env[c.first + k];
      const double im = c.points[k].value.im;
      if (std::isnan(e) || im > e) e = im;
    }
  }
  return env;
}

WindowMetrics window_metrics(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("window_metrics: size mismatch");
  const std::size_t n = y.size();
  std::vector<std::size_t> peaks;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (std::isnan(y[i]) || std::isnan(y[i - 1]) || std::isnan(y[i + 1])) continue;
    if (y[i] > y[i - 1] && y[i] >= y[i + 1]) peaks.push_back(i);
  }
  if (peaks.size() < 2) throw NoWindow("curve has fewer than two peaks");
  std::partial_sort(peaks.begin(), peaks.begin() + 2, peaks.end(),
                    [&](std::size_t a, std::size_t b) { return y[a] > y[b]; });
  const std::size_t lp = std::min(peaks[0], peaks[1]);
  const std::size_t rp = std::max(peaks[0], peaks[1]);

  std::size_t imin = lp;
  for (std::size_t i = lp; i <= rp; ++i) {
    if (!std::isnan(y[i]) && y[i] < y[imin]) imin = i;
  }
  WindowMetrics m;
  m.left_peak = x[lp];
  m.right_peak = x[rp];
  m.center = x[imin];
  m.floor = y[imin];

  const double level = 0.1 * std::min(y[lp], y[rp]);
  if (!(m.floor < level)) return m;  // dip never reaches 10%: zero width
  // Linear interpolation of the crossings on either side of the minimum.
  auto crossing = [&](std::size_t inside, std::size_t outside) {
    const double t = (level - y[inside]) / (y[outside] - y[inside]);
    return x[inside] + t * (x[outside] - x[inside]);
  };
  std::size_t l = imin, r = imin;
  while (l > lp && !std::isnan(y[l - 1]) && y[l - 1] < level) --l;
  while (r < rp && !std::isnan(y[r + 1]) && y[r + 1] < level) ++r;
  const double xl = (l > lp && !std::isnan(y[l - 1])) ? crossing(l, l - 1) : x[l];
  const double xr = (r < rp && !std::isnan(y[r + 1])) ? crossing(r, r + 1) : x[r];
  m.width = xr - xl;
  return m;
}

}  // namespace multistab
