#include "multistab/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "multistab/polynomial.hpp"

namespace multistab {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

double rms_scaled(const StateVector& v, const StateVector& y0, const StateVector& y1, const StateVector& floor,
                  double tol) {
  double sum = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double sc = tol * (floor(i) + std::max(std::abs(y0(i)), std::abs(y1(i))));
    const double r = v(i) / sc;
    sum += r * r;
  }
  return std::sqrt(sum / 8.0);
}

void thin(Trajectory& tr) {
  // Keeps even indices and the last sample.
  std::size_t w = 0;
  const std::size_t n = tr.times.size();
  for (std::size_t i = 0; i < n; i += 2, ++w) {
    tr.times[w] = tr.times[i];
    tr.states[w] = tr.states[i];
  }
  if ((n - 1) % 2 != 0) {
    tr.times[w] = tr.times[n - 1];
    tr.states[w] = tr.states[n - 1];
    ++w;
  }
  tr.times.resize(w);
  tr.states.resize(w);
}

// x, p, |a|, |A|, |C|: unchanged by the choice of rotating frame.
using Invariants = std::array<double, 5>;

Invariants invariants(const StateVector& y) {
  return {y(0), y(1), std::hypot(y(2), y(3)), std::hypot(y(4), y(5)), std::hypot(y(6), y(7))};
}

}  // namespace

Trajectory integrate(const MeanFieldState& initial, double frame_x, double Delta0, const SystemParams& p,
                     double t_max, double tol, const IntegrateOptions& opt) {
  validate_flow(p);
  if (!(tol >= 1e-12 && tol <= 1e-3)) throw std::invalid_argument("integrate: tol must lie in [1e-12, 1e-3]");
  if (!(t_max > 0.0)) throw std::invalid_argument("integrate: t_max must be positive");

  const auto f = [&](const StateVector& y) { return drift(y, frame_x, Delta0, p); };
  Trajectory tr;
  tr.frame_x = frame_x;
  StateVector y = initial.vec();
  double t = 0.0;
  tr.times.push_back(t);
  tr.states.push_back(y);
  if (opt.stop && opt.stop(t, y)) return tr;

  StateVector k1 = f(y);
  tr.step_stats.rhs_evaluations = 1;

  // Starting step from the size of y and y'.
  const StateVector floor = opt.scale ? *opt.scale : StateVector::Ones();
  const double d0 = rms_scaled(y, y, y, floor, tol) * tol;
  const double d1 = rms_scaled(k1, y, y, floor, tol) * tol;
  double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h = std::min(h, t_max);
  const double h_min = 1e-14 * t_max;

  int stiff_hits = 0, nonstiff = 0;
  bool last_rejected = false;
  while (t < t_max) {
    if (t + h > t_max) h = t_max - t;
    if (h < h_min && t + h < t_max) {
      throw StepSizeUnderflow("integrate: step size fell below 1e-14 t_max (stiff problem)", t);
    }
    const StateVector k2 = f(y + h * (a21 * k1));
    const StateVector k3 = f(y + h * (a31 * k1 + a32 * k2));
    const StateVector k4 = f(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const StateVector k5 = f(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const StateVector y6 = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    const StateVector k6 = f(y6);
    const StateVector y_new = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    const StateVector k7 = f(y_new);
    tr.step_stats.rhs_evaluations += 6;

    const StateVector err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double e = rms_scaled(err, y, y_new, floor, tol);
    if (!std::isfinite(e)) {
      h *= 0.1;
      last_rejected = true;
      ++tr.step_stats.rejected;
      continue;
    }
    if (e <= 1.0) {
      // Stiffness test: h |lambda| estimated from the last two stages.
      const double num = (k7 - k6).norm();
      const double den = (y_new - y6).norm();
      if (den > 0.0 && h * num / den > 3.25) {
        nonstiff = 0;
        if (++stiff_hits >= 15) tr.step_stats.stiffness_detected = true;
      } else if (++nonstiff >= 6) {
        stiff_hits = 0;
      }

      t += h;
      y = y_new;
      k1 = k7;
      ++tr.step_stats.accepted;
      tr.times.push_back(t);
      tr.states.push_back(y);
      if (tr.times.size() > opt.max_samples && opt.max_samples >= 4) thin(tr);
      if (opt.stop && opt.stop(t, y)) break;
      if (opt.max_steps > 0 && tr.step_stats.accepted >= opt.max_steps && t < t_max) {
        throw StepSizeUnderflow(tr.step_stats.stiffness_detected
                                    ? "integrate: step budget exhausted (stiffness detected)"
                                    : "integrate: step budget exhausted",
                                t);
      }

      double factor = 0.9 * std::pow(std::max(e, 1e-10), -0.2);
      factor = std::clamp(factor, 0.2, last_rejected ? 1.0 : 5.0);
      h *= factor;
      last_rejected = false;
    } else {
      ++tr.step_stats.rejected;
      h *= std::max(0.2, 0.9 * std::pow(e, -0.2));
      last_rejected = true;
    }
  }
  return tr;
}

StateVector fixed_point_scales(const BranchSolution& b, const SystemParams& p) {
  const double M = mirror_mass(p);
  StateVector s;
  s << std::abs(b.x_s), M * p.omega_M * std::abs(b.x_s), std::abs(b.a_s), std::abs(b.a_s), std::abs(b.A_s),
      std::abs(b.A_s), std::abs(b.C_s), std::abs(b.C_s);
  const double floor = 1e-12 * std::max(s.maxCoeff(), 1e-300);
  for (int i = 0; i < 8; ++i) s(i) = std::max(s(i), floor);
  return s;
}

double scaled_distance(const StateVector& y, const StateVector& ref, const StateVector& scale) {
  return (y - ref).cwiseQuotient(scale).cwiseAbs().maxCoeff();
}

BasinResult basin_test(const BranchSolution& b, double Delta0, const SystemParams& p, double epsilon,
                       const BasinOptions& opt) {
  if (!(epsilon >= 0.0 && epsilon <= 0.1)) throw std::invalid_argument("basin_test: epsilon must lie in [0, 0.1]");
  const StateVector fixed = MeanFieldState::at(b).vec();
  const StateVector scale = fixed_point_scales(b, p);

  BasinResult res;
  if (epsilon == 0.0) {
    res.converged = true;
    res.trajectory.times = {0.0};
    res.trajectory.states = {fixed};
    res.trajectory.frame_x = b.x_s;
    res.trajectory.converged_to = b.branch_index;
    return res;
  }

  const EigenDecomposition eig = eigen_decompose(jacobian(b, Delta0, p), true);
  Eigen::Index lead = 0;
  for (Eigen::Index i = 1; i < eig.values.size(); ++i) {
    if (eig.values(i).real() > eig.values(lead).real()) lead = i;
  }
  const double lambda = eig.values(lead).real();
  StateVector dir = eig.vectors.col(lead).real();
  if (dir.norm() < 1e-3 * eig.vectors.col(lead).norm()) dir = eig.vectors.col(lead).imag();
  dir /= scaled_distance(dir, StateVector::Zero(), scale);

  double t_max = opt.t_max;
  if (t_max <= 0.0) t_max = 100.0 / std::max(std::abs(lambda), 1e-12);

  // Other steady states at the same detuning. In the frozen frame they are
  // not fixed points (their phases rotate), so arrival is judged on the
  // frame-independent part of the state.
  std::vector<std::pair<int, Invariants>> others;
  for (const BranchSolution& o : find_steady_states(Delta0, p).branches) {
    if (o.branch_index != b.branch_index) others.emplace_back(o.branch_index, invariants(MeanFieldState::at(o).vec()));
  }
  const Invariants inv_scale = invariants(scale.cwiseAbs());

  double dist = epsilon;
  int outcome = 0;  // 1 converged, -1 diverged
  std::optional<int> arrived_at;
  IntegrateOptions io;
  io.scale = scale;
  io.max_steps = opt.max_steps;
  io.stop = [&](double, const StateVector& y) {
    dist = scaled_distance(y, fixed, scale);
    if (!std::isfinite(dist) || dist > std::min(opt.diverged_factor * epsilon, opt.escape_level)) {
      outcome = -1;
    } else if (dist < opt.converged_below) {
      outcome = 1;
    } else if (dist > 10.0 * opt.converged_below) {
      const Invariants now = invariants(y);
      for (const auto& [index, target] : others) {
        double d = 0.0;
        for (std::size_t k = 0; k < now.size(); ++k) {
          d = std::max(d, std::abs(now[k] - target[k]) / std::max(inv_scale[k], std::abs(target[k])));
        }
        if (d < opt.converged_below) {
          outcome = -1;
          arrived_at = index;
        }
      }
    }
    return outcome != 0;
  };
  const StateVector start = fixed + epsilon * dir;
  res.trajectory = integrate(MeanFieldState::from(start), b.x_s, Delta0, p, t_max, opt.tol, io);
  res.final_distance = dist;
  if (outcome == 0) throw Inconclusive("basin_test: neither converged nor diverged before t_max", res);
  res.converged = outcome == 1;
  res.trajectory.converged_to = res.converged ? std::optional<int>(b.branch_index) : arrived_at;
  return res;
}

}  // namespace multistab
