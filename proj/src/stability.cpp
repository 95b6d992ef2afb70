#include "multistab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "multistab/polynomial.hpp"

namespace multistab {

StateVector MeanFieldState::vec() const {
  StateVector v;
  v << x, p, a_re, a_im, A_re, A_im, C_re, C_im;
  return v;
}

MeanFieldState MeanFieldState::from(const StateVector& v) {
  return {v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7)};
}

MeanFieldState MeanFieldState::at(const BranchSolution& b) {
  return {b.x_s, 0.0, b.a_s.real(), b.a_s.imag(), b.A_s.real(), b.A_s.imag(), b.C_s.real(), b.C_s.imag()};
}

namespace {

struct Rates {
  double M, spring, damp, c, dp, dpc;
};

Rates rates(double frame_x, double Delta0, const SystemParams& p) {
  Rates r;
  r.M = mirror_mass(p);
  r.spring = r.M * p.omega_M * p.omega_M;
  r.damp = mirror_damping(p) / (2.0 * r.M);
  r.c = omega0(p, Delta0) / p.l;
  r.dp = Delta0 + r.c * frame_x;
  r.dpc = r.dp - p.Delta_c;
  return r;
}

}  // namespace

StateVector drift(const StateVector& y, double frame_x, double Delta0, const SystemParams& p) {
  const Rates r = rates(frame_x, Delta0, p);
  const double x = y(0), mom = y(1), ar = y(2), ai = y(3), Ar = y(4), Ai = y(5), Cr = y(6), Ci = y(7);
  const double theta = r.c * (frame_x - x);
  const double g0h = 0.5 * p.gamma0;
  StateVector d;
  d(0) = mom / r.M;
  d(1) = -r.damp * mom + r.c * (ar * ar + ai * ai) - r.spring * x;
  d(2) = -g0h * ar - theta * ai + p.gN * Ai + std::sqrt(p.gamma0) * p.alpha_in;
  d(3) = -g0h * ai + theta * ar - p.gN * Ar;
  d(4) = -p.gamma1 * Ar + r.dp * Ai + p.Omega * Ci + p.gN * ai;
  d(5) = -p.gamma1 * Ai - r.dp * Ar - p.Omega * Cr - p.gN * ar;
  d(6) = -p.gamma2 * Cr + r.dpc * Ci + p.Omega * Ai;
  d(7) = -p.gamma2 * Ci - r.dpc * Cr - p.Omega * Ar;
  return d;
}

JacobianMatrix jacobian_at(const StateVector& y, double frame_x, double Delta0, const SystemParams& p) {
  const Rates r = rates(frame_x, Delta0, p);
  const double x = y(0), ar = y(2), ai = y(3);
  const double theta = r.c * (frame_x - x);
  const double g0h = 0.5 * p.gamma0;
  JacobianMatrix J = JacobianMatrix::Zero();
  J(0, 1) = 1.0 / r.M;

  J(1, 0) = -r.spring;
  J(1, 1) = -r.damp;
  J(1, 2) = 2.0 * r.c * ar;
  J(1, 3) = 2.0 * r.c * ai;

  J(2, 0) = r.c * ai;
  J(2, 2) = -g0h;
  J(2, 3) = -theta;
  J(2, 5) = p.gN;

  J(3, 0) = -r.c * ar;
  J(3, 2) = theta;
  J(3, 3) = -g0h;
  J(3, 4) = -p.gN;

  J(4, 3) = p.gN;
  J(4, 4) = -p.gamma1;
  J(4, 5) = r.dp;
  J(4, 7) = p.Omega;

  J(5, 2) = -p.gN;
  J(5, 4) = -r.dp;
  J(5, 5) = -p.gamma1;
  J(5, 6) = -p.Omega;

  J(6, 5) = p.Omega;
  J(6, 6) = -p.gamma2;
  J(6, 7) = r.dpc;

  J(7, 4) = -p.Omega;
  J(7, 6) = -r.dpc;
  J(7, 7) = -p.gamma2;
  return J;
}

JacobianMatrix jacobian(const BranchSolution& b, double Delta0, const SystemParams& p) {
  return jacobian_at(MeanFieldState::at(b).vec(), b.x_s, Delta0, p);
}

StabilityVerdict classify(BranchSolution& b, double Delta0, const SystemParams& p) {
  const JacobianMatrix J = jacobian(b, Delta0, p);
  const EigenDecomposition eig = eigen_decompose(J);

  StabilityVerdict v;
  v.gammaM = mirror_damping(p);
  double rho = 0.0;
  v.max_real_eig = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 8; ++i) {
    v.eigenvalues[static_cast<std::size_t>(i)] = eig.values(i);
    rho = std::max(rho, std::abs(eig.values(i)));
    v.max_real_eig = std::max(v.max_real_eig, eig.values(i).real());
  }
  v.tolerance = kStabilityTol * std::max(1.0, rho);
  if (b.degenerate || std::abs(v.max_real_eig) <= v.tolerance) {
    v.label = Stability::Marginal;
  } else {
    v.label = v.max_real_eig < 0.0 ? Stability::Stable : Stability::Unstable;
  }
  b.stability = v.label;
  return v;
}

}  // namespace multistab
