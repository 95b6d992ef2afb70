#pragma once

#include <array>

#include <Eigen/Dense>

#include "multistab/params.hpp"
#include "multistab/steady_state.hpp"

namespace multistab {

using StateVector = Eigen::Matrix<double, 8, 1>;
using JacobianMatrix = Eigen::Matrix<double, 8, 8>;

/// Mean values of the mirror, cavity and collective atomic operators in the
/// frame rotating at omega_L(frame_x).
struct MeanFieldState {
  double x = 0.0;
  double p = 0.0;
  double a_re = 0.0, a_im = 0.0;
  double A_re = 0.0, A_im = 0.0;
  double C_re = 0.0, C_im = 0.0;

  StateVector vec() const;
  static MeanFieldState from(const StateVector& v);
  /// Fixed point of a branch (p = 0).
  static MeanFieldState at(const BranchSolution& branch);
};

/// Deterministic mean-field flow (noise means zero):
///   x' = p/M
///   p' = -(gammaM/2M) p + (omega0/l)|a|^2 - M omega_M^2 x
///   a' = -[gamma0/2 - i (omega0/l)(frame_x - x)] a - i gN A + sqrt(gamma0) alpha_in
///   A' = -(gamma1 + i Delta_p) A - i Omega C - i gN a
///   C' = -[gamma2 + i (Delta_p - Delta_c)] C - i Omega A
/// with Delta_p = Delta0 + (omega0/l) frame_x.
StateVector drift(const StateVector& y, double frame_x, double Delta0, const SystemParams& params);

/// Analytic Jacobian of drift() at an arbitrary state.
JacobianMatrix jacobian_at(const StateVector& y, double frame_x, double Delta0, const SystemParams& params);

/// Jacobian at a branch fixed point with the frame frozen at branch.x_s.
JacobianMatrix jacobian(const BranchSolution& branch, double Delta0, const SystemParams& params);

struct StabilityVerdict {
  Stability label = Stability::Unclassified;
  double max_real_eig = 0.0;
  double tolerance = 0.0;
  double gammaM = 0.0;  // mirror damping used for the linearization
  std::array<cplx, 8> eigenvalues{};
};

/// Relative eigenvalue threshold: |Re lambda| <= kStabilityTol * max(1, rho) is Marginal.
inline constexpr double kStabilityTol = 1e-10;

/// Linear stability of the branch; also writes the label into branch.stability.
/// Degenerate (near-tangent) branches are Marginal regardless of the spectrum.
StabilityVerdict classify(BranchSolution& branch, double Delta0, const SystemParams& params);

}  // namespace multistab
