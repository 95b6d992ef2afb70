#pragma once

#include <array>
#include <complex>
#include <string_view>
#include <vector>

#include "multistab/params.hpp"

namespace multistab {

using cplx = std::complex<double>;

enum class Stability { Unclassified, Stable, Unstable, Marginal };

std::string_view to_string(Stability s);

/// One real root of the self-consistency equation with all derived
/// steady-state amplitudes, in the frame rotating at omega_L.
struct BranchSolution {
  double delta_ps = 0.0;  // omega_a - omega_L
  double x_s = 0.0;       // mirror displacement
  cplx a_s;               // cavity field
  cplx A_s;               // collective |b>-|a> coherence
  cplx C_s;               // collective |b>-|c> coherence
  double omega_L = 0.0;   // effective cavity frequency
  int branch_index = 0;   // 1 = large-displacement branch; see label_branches()
  Stability stability = Stability::Unclassified;
  bool degenerate = false;  // member of a near-tangent root pair
};

struct SteadyStateResult {
  std::vector<BranchSolution> branches;  // sorted by descending delta_ps
  // Real roots of the quintic rejected as unphysical: below Delta0 would need
  // x_s < 0; at or beyond omega_a would need omega_L <= 0 (x_s >= l).
  int discarded_below_detuning = 0;
  int discarded_beyond_cutoff = 0;
  bool degenerate = false;

  bool empty() const { return branches.empty(); }
  int count() const { return static_cast<int>(branches.size()); }
};

/// Omega~(delta) = gamma2 + i (delta - Delta_c).
cplx omega_tilde(double delta, const SystemParams& params);

/// G(delta) = g^2 N + (gamma0/2)(gamma1 + i delta).
cplx g_func(double delta, const SystemParams& params);

/// D(delta) = G Omega~ + gamma0 Omega^2 / 2, the common denominator.
cplx denominator(double delta, const SystemParams& params);

/// D - g^2 N Omega~, expanded so that the large g^2 N terms cancel analytically.
cplx numerator(double delta, const SystemParams& params);

/// Left side of the self-consistency equation, |1 - g^2N Omega~ / D|^2.
double y_left(double delta, const SystemParams& params);

/// Slope of the right side: gamma0 kappa / (4 alpha_in^2 omega0^2).
double response_slope(double Delta0, const SystemParams& params);

/// Right side of the self-consistency equation, slope * (delta - Delta0).
double y_right(double delta, double Delta0, const SystemParams& params);

/// Coefficients c0..c5 (lowest degree first) of
/// P(d) = |N(d)|^2 - slope * (d - Delta0) |D(d)|^2, computed in long double.
std::array<double, 6> quintic_coeffs(double Delta0, const SystemParams& params);

/// P(d) and P'(d) evaluated from the factored form, which is far better
/// conditioned than the monomial expansion.
struct QuinticValue {
  double value;
  double derivative;
  double magnitude;  // |N|^2 + |slope (d - Delta0)| |D|^2, the cancellation scale
};
QuinticValue quintic_eval(double delta, double Delta0, const SystemParams& params);

/// Fills every steady-state amplitude for a given root delta_ps.
BranchSolution make_branch(double delta_ps, double Delta0, const SystemParams& params);

/// Scaled residuals of the five steady-state relations at a branch:
/// radiation-pressure balance, cavity, |a> coherence, |c> coherence and the
/// detuning/displacement identity. Each is divided by its largest term.
std::array<double, 5> steady_state_residual(const BranchSolution& branch, double Delta0,
                                            const SystemParams& params);

/// All physical steady states at Delta0, sorted by descending delta_ps.
/// An empty result means Delta0 lies in the no-root region.
SteadyStateResult find_steady_states(double Delta0, const SystemParams& params);

/// Assigns branch_index following the branch topology of the multistable
/// region: 1 = largest delta_ps; 2 = remaining root on or above Delta_c;
/// 3 = lowest root below Delta_c (tracks Delta0); 4 = the other root below
/// Delta_c. Unexpected extra roots get 5, 6, ...
void label_branches(std::vector<BranchSolution>& sorted_desc, const SystemParams& params);

/// delta_ps - Delta_c; zero means two-photon resonance on this branch.
double two_photon_residual(const BranchSolution& branch, const SystemParams& params);

}  // namespace multistab
