#include <doctest.h>

#include <cmath>
#include <complex>

#include "multistab/dynamics.hpp"
#include "oracles.hpp"

using namespace multistab;

namespace {

using cd = std::complex<double>;

// Undriven cavity and mirror, atoms only.
SystemParams atoms_only() {
  SystemParams p = SystemParams::stiffness_reduced();
  p.gN = 0.0;
  p.alpha_in = 0.0;
  return p;
}

// exp(M t) applied to (A0, C0) for the 2x2 atom block in closed form.
std::pair<cd, cd> atom_block(double t, double D0, const SystemParams& p, cd A0, cd C0) {
  const cd I(0, 1);
  const cd m11 = -(p.gamma1 + I * D0), m22 = -(p.gamma2 + I * (D0 - p.Delta_c)), m12 = -I * p.Omega;
  const cd mid = (m11 + m22) / 2.0;
  const cd root = std::sqrt((m11 - mid) * (m11 - mid) + m12 * m12);
  const cd ch = std::cosh(root * t), sh = std::abs(root) > 0 ? std::sinh(root * t) / root : cd(t);
  const cd e = std::exp(mid * t);
  return {e * (ch * A0 + sh * ((m11 - mid) * A0 + m12 * C0)), e * (ch * C0 + sh * (m12 * A0 + (m22 - mid) * C0))};
}

double rabi_error(double tol) {
  const SystemParams p = atoms_only();
  MeanFieldState s;
  s.A_re = 0.6;
  s.C_im = -0.3;
  const double D0 = 0.7;
  const Trajectory tr = integrate(s, 0.0, D0, p, 20.0, tol);
  double worst = 0.0;
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    const auto [A, C] = atom_block(tr.times[i], D0, p, {0.6, 0.0}, {0.0, -0.3});
    const StateVector& y = tr.states[i];
    worst = std::max({worst, std::abs(cd(y(4), y(5)) - A), std::abs(cd(y(6), y(7)) - C)});
  }
  return worst;
}

}  // namespace

TEST_CASE("free cavity decay") {
  SystemParams p = SystemParams::stiffness_reduced();
  p.gN = 0.0;
  p.Omega = 0.0;
  p.alpha_in = 0.0;
  MeanFieldState s;
  s.a_re = 1e-3;  // weak field: radiation pressure barely moves the mirror
  const Trajectory tr = integrate(s, 0.0, 0.0, p, 100.0, 1e-10);
  REQUIRE(tr.times.back() == doctest::Approx(100.0));
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    const StateVector& y = tr.states[i];
    CHECK(std::abs(std::hypot(y(2), y(3)) / 1e-3 - std::exp(-p.gamma0 * tr.times[i] / 2)) < 1e-6);
  }
}

TEST_CASE("driven two-level coherence matches the closed form") {
  const double err = rabi_error(1e-10);
  CHECK(err < 1e-7);
  // Rabi period 2 pi / Omega is resolved: the state moved by O(1).
  const Trajectory tr = integrate(MeanFieldState{0, 0, 0, 0, 0.6, 0, 0, -0.3}, 0.0, 0.7, atoms_only(), 20.0, 1e-10);
  CHECK(tr.step_stats.accepted > 20);
}

TEST_CASE("error shrinks with the tolerance") {
  const double e6 = rabi_error(1e-6), e9 = rabi_error(1e-9), e12 = rabi_error(1e-12);
  CHECK(e9 < e6);
  CHECK(e12 < e9);
  CHECK(e6 < 1e-3);
}

TEST_CASE("a fixed point stays put") {
  const SystemParams p = SystemParams::stiffness_reduced();
  for (double D0 : {-5.0, 4.0}) {
    auto found = find_steady_states(D0, p);
    for (auto& b : found.branches) {
      const StabilityVerdict v = classify(b, D0, p);
      // Unstable points amplify roundoff as exp(lambda t); stop well before.
      const double t_max = v.max_real_eig > 0 ? std::min(50.0, 5.0 / v.max_real_eig) : 50.0;
      const StateVector scale = fixed_point_scales(b, p);
      IntegrateOptions opt;
      opt.scale = scale;
      const Trajectory tr = integrate(MeanFieldState::at(b), b.x_s, D0, p, t_max, 1e-10, opt);
      const StateVector ref = MeanFieldState::at(b).vec();
      CAPTURE(b.branch_index);
      for (const auto& y : tr.states) CHECK(scaled_distance(y, ref, scale) < 1e-8);
    }
  }
}

TEST_CASE("lossless flow conserves the field excitation") {
  SystemParams p = SystemParams::stiffness_reduced();
  p.gamma0 = p.gamma1 = p.gamma2 = 0.0;
  p.alpha_in = 0.0;
  MeanFieldState s{0, 0, 1e-3, 0, 0, 2e-3, -1e-3, 0};
  const double n0 = 1e-6 + 4e-6 + 1e-6;
  const Trajectory tr = integrate(s, 0.0, -1.0, p, 30.0, 1e-11);
  for (const auto& y : tr.states) CHECK(y.tail<6>().squaredNorm() == doctest::Approx(n0).epsilon(1e-8));
}

TEST_CASE("trajectory bookkeeping") {
  const SystemParams p = SystemParams::stiffness_reduced();
  const auto b = find_steady_states(-5.0, p).branches.front();
  IntegrateOptions opt;
  opt.max_samples = 64;
  MeanFieldState s = MeanFieldState::at(b);
  s.a_re *= 1.01;
  const Trajectory tr = integrate(s, b.x_s, -5.0, p, 30.0, 1e-9, opt);
  REQUIRE(tr.times.size() == tr.states.size());
  CHECK(tr.times.front() == 0.0);
  CHECK(tr.times.back() == doctest::Approx(30.0));
  CHECK(tr.times.size() <= 64);
  for (std::size_t i = 1; i < tr.times.size(); ++i) CHECK(tr.times[i] > tr.times[i - 1]);
  CHECK(tr.states.front() == s.vec());
  CHECK(tr.frame_x == b.x_s);

  // Stopping early.
  opt.stop = [](double t, const StateVector&) { return t > 5.0; };
  const Trajectory early = integrate(s, b.x_s, -5.0, p, 30.0, 1e-9, opt);
  CHECK(early.times.back() > 5.0);
  CHECK(early.times.back() < 30.0);
}

TEST_CASE("argument checks") {
  const SystemParams p = SystemParams::stiffness_reduced();
  MeanFieldState s;
  CHECK_THROWS_AS(integrate(s, 0.0, 0.0, p, 1.0, 1e-2), std::invalid_argument);
  CHECK_THROWS_AS(integrate(s, 0.0, 0.0, p, 1.0, 1e-13), std::invalid_argument);
  const auto b = find_steady_states(-5.0, p).branches.front();
  CHECK_THROWS_AS(basin_test(b, -5.0, p, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(basin_test(b, -5.0, p, -1e-3), std::invalid_argument);
}

TEST_CASE("step budget reports a stiff system") {
  const SystemParams p;  // mirror frequency far above every other rate
  const auto b = find_steady_states(-5.0, p).branches.front();
  IntegrateOptions opt;
  opt.max_steps = 10000;
  MeanFieldState s = MeanFieldState::at(b);
  s.a_re *= 1.001;
  CHECK_THROWS_AS(integrate(s, b.x_s, -5.0, p, 100.0, 1e-9, opt), StepSizeUnderflow);
}

TEST_CASE("basin test agrees with the linear verdict") {
  const SystemParams p = SystemParams::stiffness_reduced();
  int tested = 0, stable = 0;
  for (auto& e : oracle::battery(p, 16, -12.0, 12.0)) {
    const StabilityVerdict v = classify(e.branch, e.Delta0, p);
    if (v.label == Stability::Marginal) continue;
    CAPTURE(e.Delta0);
    CAPTURE(e.branch.branch_index);
    const BasinResult r = basin_test(e.branch, e.Delta0, p, 1e-3);
    CHECK(r.converged == (v.label == Stability::Stable));
    if (r.converged) CHECK(r.final_distance < 1e-6);
    ++tested;
    stable += v.label == Stability::Stable;
  }
  CHECK(tested >= 12);
  CHECK(stable > 0);
  CHECK(stable < tested);
}

TEST_CASE("zero perturbation converges immediately") {
  const SystemParams p = SystemParams::stiffness_reduced();
  for (const auto& b : find_steady_states(-5.0, p).branches) {
    const BasinResult r = basin_test(b, -5.0, p, 0.0);
    CHECK(r.converged);
    CHECK(r.final_distance < 1e-6);
  }
}

TEST_CASE("unstable branch escapes to a stable one") {
  const SystemParams p = SystemParams::stiffness_reduced();
  for (const auto& b : find_steady_states(-2.5, p).branches) {
    if (b.branch_index != 1) continue;
    BasinOptions opt;
    opt.escape_level = 1e300;
    opt.diverged_factor = 1e300;
    opt.t_max = 5000.0;
    try {
      const BasinResult r = basin_test(b, -2.5, p, 1e-3, opt);
      CHECK_FALSE(r.converged);
      REQUIRE(r.trajectory.converged_to);
      CHECK(*r.trajectory.converged_to != 1);
    } catch (const Inconclusive& e) {
      // Still on its way (or on a limit cycle): it has left branch 1.
      const Trajectory& tr = e.partial().trajectory;
      const StateVector scale = fixed_point_scales(b, p);
      CHECK(scaled_distance(tr.states.back(), MeanFieldState::at(b).vec(), scale) > 1e-2);
    }
  }
}
