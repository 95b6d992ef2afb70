#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "multistab/params.hpp"
#include "multistab/stability.hpp"
#include "multistab/steady_state.hpp"

namespace multistab {

struct StepStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evaluations = 0;
  bool stiffness_detected = false;  // h * |lambda| sat on the stability boundary repeatedly
};

struct Trajectory {
  std::vector<double> times;  // strictly increasing, starts at 0
  std::vector<StateVector> states;
  double frame_x = 0.0;
  std::optional<int> converged_to;  // branch_index reached by a basin test
  StepStats step_stats;
};

class StepSizeUnderflow : public std::runtime_error {
 public:
  StepSizeUnderflow(const std::string& what, double t) : std::runtime_error(what), time_(t) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

struct IntegrateOptions {
  // Stored samples are thinned by two whenever this many accumulate; the
  // first and last states are always kept.
  std::size_t max_samples = 4096;
  // Called after every accepted step; returning true stops the integration.
  std::function<bool(double t, const StateVector& y)> stop;
  // Per-component size floor of the error weights; defaults to ones.
  std::optional<StateVector> scale;
  // Accepted-step budget (0: none); exhausting it before t_max throws
  // StepSizeUnderflow, as the mean step is then below t_max / max_steps.
  std::size_t max_steps = 0;
};

/// Adaptive Dormand-Prince 5(4) integration of drift() with the frame frozen
/// at frame_x. The scaled local error |err_i| / (tol (s_i + max(|y_i|, |y_i'|)))
/// is kept below one in RMS, with s = options.scale or ones. Throws
/// StepSizeUnderflow if the step falls below 1e-14 t_max, and
/// std::invalid_argument unless tol is in [1e-12, 1e-3]. A zero drive
/// (alpha_in = 0) is allowed here.
Trajectory integrate(const MeanFieldState& initial, double frame_x, double Delta0, const SystemParams& params,
                     double t_max, double tol, const IntegrateOptions& options = {});

/// Per-component scales of a fixed point used by basin_test distances:
/// |x_s| for x, M omega_M |x_s| for p and the complex moduli for the field
/// and coherences. Zero moduli fall back to a small fraction of the largest.
StateVector fixed_point_scales(const BranchSolution& branch, const SystemParams& params);

/// max_i |y_i - y_ref_i| / scale_i.
double scaled_distance(const StateVector& y, const StateVector& y_ref, const StateVector& scale);

struct BasinOptions {
  double t_max = 0.0;  // 0: 100 / |max Re lambda|
  double tol = 1e-9;
  double converged_below = 1e-6;
  double diverged_factor = 1e3;  // diverged once distance > factor * epsilon
  // ... or once it exceeds this absolute level. Hopf-unstable branches settle
  // on a small limit cycle (~10% in the scaled norm) and would never reach
  // 1e3 epsilon; stable branches peak near 4 epsilon on their way in.
  double escape_level = 5e-2;
  std::size_t max_steps = 0;  // forwarded to integrate()
};

struct BasinResult {
  bool converged = false;
  double final_distance = 0.0;
  Trajectory trajectory;
};

class Inconclusive : public std::runtime_error {
 public:
  Inconclusive(const std::string& what, BasinResult partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const BasinResult& partial() const noexcept { return partial_; }

 private:
  BasinResult partial_;
};

/// Perturbs the branch fixed point by epsilon along the least-stable
/// eigendirection of the Jacobian (unit scaled norm) and integrates with
/// frame_x = branch.x_s until the distance drops below converged_below or
/// exceeds min(diverged_factor * epsilon, escape_level). Arriving (within
/// converged_below, on x, p and the moduli) at another steady state of the
/// same Delta0 also counts as diverged and sets trajectory.converged_to to
/// that branch. Throws Inconclusive if t_max is reached first. epsilon must
/// lie in [0, 0.1].
BasinResult basin_test(const BranchSolution& branch, double Delta0, const SystemParams& params, double epsilon,
                       const BasinOptions& options = {});

}  // namespace multistab
