#include "multistab/steady_state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "multistab/polynomial.hpp"

namespace multistab {

namespace {

using ld = long double;
using lcplx = std::complex<long double>;

// Complex polynomial in delta, lowest degree first.
using CPoly = std::vector<lcplx>;

CPoly mul(const CPoly& a, const CPoly& b) {
  CPoly r(a.size() + b.size() - 1, lcplx{0});
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

// |q(d)|^2 for real d: q(d) * conj(q)(d).
std::vector<ld> abs2(const CPoly& q) {
  CPoly qc(q.size());
  std::transform(q.begin(), q.end(), qc.begin(), [](lcplx c) { return std::conj(c); });
  const CPoly prod = mul(q, qc);
  std::vector<ld> r(prod.size());
  std::transform(prod.begin(), prod.end(), r.begin(), [](lcplx c) { return c.real(); });
  return r;
}

struct Factored {
  lcplx num, dnum, den, dden;
};

Factored factored(ld d, const SystemParams& p) {
  const ld g0 = p.gamma0, g1 = p.gamma1, g2 = p.gamma2;
  const ld om2 = ld(p.Omega) * p.Omega;
  const ld gn2 = ld(p.gN) * p.gN;
  const lcplx I{0, 1};
  const lcplx ot{g2, d - ld(p.Delta_c)};
  const lcplx g{gn2 + g0 * g1 / 2, g0 * d / 2};
  const lcplx h{g1, d};  // gamma1 + i d
  Factored f;
  f.num = (g0 / 2) * (h * ot + om2);
  f.dnum = (g0 / 2) * (I * ot + I * h);
  f.den = g * ot + g0 * om2 / 2;
  f.dden = I * (g0 / 2) * ot + I * g;
  return f;
}

ld slope_ld(double Delta0, const SystemParams& p) {
  const ld w0 = ld(p.omega_a) - Delta0;
  return ld(p.gamma0) * p.kappa / (4 * ld(p.alpha_in) * p.alpha_in * w0 * w0);
}

// Safeguarded Newton (Newton steps kept inside a shrinking sign bracket).
double polish_in_bracket(double a, double b, double Delta0, const SystemParams& p) {
  double fa = quintic_eval(a, Delta0, p).value;
  if (fa == 0.0) return a;
  if (quintic_eval(b, Delta0, p).value == 0.0) return b;
  double x = 0.5 * (a + b);
  for (int it = 0; it < 300; ++it) {
    const QuinticValue q = quintic_eval(x, Delta0, p);
    if (q.value == 0.0) return x;
    if ((q.value < 0.0) == (fa < 0.0)) {
      a = x;
      fa = q.value;
    } else {
      b = x;
    }
    double next = (q.derivative != 0.0) ? x - q.value / q.derivative : 0.5 * (a + b);
    const double lo = std::min(a, b), hi = std::max(a, b);
    if (!(next > lo && next < hi)) next = 0.5 * (a + b);
    const double step = std::abs(next - x);
    x = next;
    if (step <= 1e-15 * std::abs(x) || hi - lo <= 4 * std::numeric_limits<double>::epsilon() * std::abs(x)) {
      break;
    }
  }
  return x;
}

struct Candidate {
  double re;
  double im;
};

struct RootOut {
  double value;
  bool degenerate;
};

// Local extremum of P between a and b (where P' changes sign), if any.
bool extremum(double a, double b, double Delta0, const SystemParams& p, double& at) {
  double da = quintic_eval(a, Delta0, p).derivative;
  double db = quintic_eval(b, Delta0, p).derivative;
  if ((da < 0.0) == (db < 0.0)) return false;
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    const double dm = quintic_eval(m, Delta0, p).derivative;
    if ((dm < 0.0) == (da < 0.0)) {
      a = m;
      da = dm;
    } else {
      b = m;
    }
    if (b - a <= 1e-15 * std::max(std::abs(a), std::abs(b))) break;
  }
  at = 0.5 * (a + b);
  return true;
}

constexpr double kTangentRel = 1e-11;
constexpr double kSameRoot = 1e-9;

// Resolves a cluster of nearly coincident candidates into real roots.
void resolve_cluster(const std::vector<Candidate>& cl, double Delta0, const SystemParams& p,
                     std::vector<RootOut>& out) {
  double lo = cl.front().re, hi = cl.front().re, max_im = 0.0, max_abs = 0.0;
  for (const auto& c : cl) {
    lo = std::min(lo, c.re);
    hi = std::max(hi, c.re);
    max_im = std::max(max_im, std::abs(c.im));
    max_abs = std::max(max_abs, std::abs(c.re));
  }
  const double w = std::max({4.0 * (hi - lo), 4.0 * max_im, 1e-10 * max_abs, 1e-300});

  // Grows a symmetric bracket around the cluster centre until P changes sign.
  const auto expand = [&](double centre) {
    double h = w;
    const double hmax = 0.25 * max_abs + 1e-12;
    while (h <= hmax) {
      const double a = centre - h, b = centre + h;
      if ((quintic_eval(a, Delta0, p).value < 0.0) != (quintic_eval(b, Delta0, p).value < 0.0)) {
        out.push_back({polish_in_bracket(a, b, Delta0, p), false});
        return;
      }
      h *= 2.0;
    }
    // no sign change: spurious real part of a complex root
  };

  if (cl.size() == 1) {
    expand(cl.front().re);
    return;
  }

  // Several candidates: sample the interval for sign changes.
  const double a = lo - w, b = hi + w;
  constexpr int samples = 512;
  std::vector<double> xs(samples + 1), fs(samples + 1);
  for (int i = 0; i <= samples; ++i) {
    xs[i] = a + (b - a) * i / samples;
    fs[i] = quintic_eval(xs[i], Delta0, p).value;
  }
  std::size_t found = 0;
  for (int i = 0; i < samples; ++i) {
    if (fs[i] == 0.0) {
      out.push_back({xs[i], false});
      ++found;
    } else if ((fs[i] < 0.0) != (fs[i + 1] < 0.0) && fs[i + 1] != 0.0) {
      out.push_back({polish_in_bracket(xs[i], xs[i + 1], Delta0, p), false});
      ++found;
    }
  }
  if (found >= 2 || cl.size() < 2) return;

  // No resolvable crossing pair: a tangency shows up as |P| ~ 0 at the extremum.
  double at = 0.0;
  if (found == 0 && extremum(a, b, Delta0, p, at)) {
    const QuinticValue q = quintic_eval(at, Delta0, p);
    if (std::abs(q.value) <= kTangentRel * q.magnitude) {
      out.push_back({at, true});
      out.push_back({at, true});
      return;
    }
  }
  // Duplicate candidates of one simple root (from the two companion solves)
  // may sit just outside the sampled span.
  if (found == 0) expand(0.5 * (lo + hi));
}

}  // namespace

std::string_view to_string(Stability s) {
  switch (s) {
    case Stability::Stable: return "stable";
    case Stability::Unstable: return "unstable";
    case Stability::Marginal: return "marginal";
    case Stability::Unclassified: break;
  }
  return "unclassified";
}

cplx omega_tilde(double delta, const SystemParams& p) {
  return {p.gamma2, delta - p.Delta_c};
}

cplx g_func(double delta, const SystemParams& p) {
  return {p.gN * p.gN + 0.5 * p.gamma0 * p.gamma1, 0.5 * p.gamma0 * delta};
}

cplx denominator(double delta, const SystemParams& p) {
  const Factored f = factored(delta, p);
  return {static_cast<double>(f.den.real()), static_cast<double>(f.den.imag())};
}

cplx numerator(double delta, const SystemParams& p) {
  const Factored f = factored(delta, p);
  return {static_cast<double>(f.num.real()), static_cast<double>(f.num.imag())};
}

double y_left(double delta, const SystemParams& p) {
  const Factored f = factored(delta, p);
  return static_cast<double>(std::norm(f.num) / std::norm(f.den));
}

double response_slope(double Delta0, const SystemParams& p) {
  return static_cast<double>(slope_ld(Delta0, p));
}

double y_right(double delta, double Delta0, const SystemParams& p) {
  return static_cast<double>(slope_ld(Delta0, p) * (ld(delta) - Delta0));
}

std::array<double, 6> quintic_coeffs(double Delta0, const SystemParams& p) {
  const ld g0 = p.gamma0, g1 = p.gamma1, g2 = p.gamma2;
  const ld om2 = ld(p.Omega) * p.Omega;
  const ld gn2 = ld(p.gN) * p.gN;
  const CPoly ot{lcplx{g2, -ld(p.Delta_c)}, lcplx{0, 1}};
  const CPoly g{lcplx{gn2 + g0 * g1 / 2, 0}, lcplx{0, g0 / 2}};
  const CPoly h{lcplx{g0 * g1 / 2, 0}, lcplx{0, g0 / 2}};  // (gamma0/2)(gamma1 + i d)

  CPoly den = mul(g, ot);
  den[0] += g0 * om2 / 2;
  CPoly num = mul(h, ot);
  num[0] += g0 * om2 / 2;

  const std::vector<ld> n2 = abs2(num);
  const std::vector<ld> d2 = abs2(den);
  const ld s = slope_ld(Delta0, p);
  std::array<ld, 6> c{};
  for (std::size_t i = 0; i < n2.size(); ++i) c[i] += n2[i];
  for (std::size_t i = 0; i < d2.size(); ++i) {
    c[i + 1] -= s * d2[i];
    c[i] += s * ld(Delta0) * d2[i];
  }
  std::array<double, 6> out{};
  for (std::size_t i = 0; i < 6; ++i) out[i] = static_cast<double>(c[i]);
  return out;
}

QuinticValue quintic_eval(double delta, double Delta0, const SystemParams& p) {
  const Factored f = factored(delta, p);
  const ld s = slope_ld(Delta0, p);
  const ld off = ld(delta) - Delta0;
  const ld n2 = std::norm(f.num);
  const ld d2 = std::norm(f.den);
  const ld value = n2 - s * off * d2;
  const ld dn2 = 2 * (std::conj(f.num) * f.dnum).real();
  const ld dd2 = 2 * (std::conj(f.den) * f.dden).real();
  const ld deriv = dn2 - s * d2 - s * off * dd2;
  return {static_cast<double>(value), static_cast<double>(deriv),
          static_cast<double>(n2 + std::abs(s * off) * d2)};
}

BranchSolution make_branch(double delta_ps, double Delta0, const SystemParams& p) {
  const Factored f = factored(delta_ps, p);
  const lcplx I{0, 1};
  const ld w0 = ld(p.omega_a) - Delta0;
  const ld M = mirror_mass(p);
  const ld sg0 = std::sqrt(ld(p.gamma0));
  const lcplx ot{ld(p.gamma2), ld(delta_ps) - p.Delta_c};
  const lcplx a = (2 * ld(p.alpha_in) / sg0) * (f.num / f.den);
  const lcplx A = -I * ld(p.gN) * sg0 * ld(p.alpha_in) * ot / f.den;
  const lcplx C = -I * ld(p.Omega) * A / ot;
  const ld x = w0 * std::norm(a) / (M * p.omega_M * p.omega_M * p.l);

  BranchSolution b;
  b.delta_ps = delta_ps;
  b.x_s = static_cast<double>(x);
  b.a_s = {static_cast<double>(a.real()), static_cast<double>(a.imag())};
  b.A_s = {static_cast<double>(A.real()), static_cast<double>(A.imag())};
  b.C_s = {static_cast<double>(C.real()), static_cast<double>(C.imag())};
  b.omega_L = static_cast<double>(w0 - w0 * x / p.l);
  return b;
}

std::array<double, 5> steady_state_residual(const BranchSolution& b, double Delta0,
                                            const SystemParams& p) {
  const cplx I{0, 1};
  const double w0 = omega0(p, Delta0);
  const double c = w0 / p.l;
  const double M = mirror_mass(p);
  const double spring = M * p.omega_M * p.omega_M;
  const double force = c * std::norm(b.a_s);
  const double drive = std::sqrt(p.gamma0) * p.alpha_in;
  const cplx h{p.gamma1, b.delta_ps};
  const cplx ot = omega_tilde(b.delta_ps, p);

  const auto scaled = [](double r, double scale) { return scale > 0.0 ? std::abs(r) / scale : std::abs(r); };
  const auto scaled_c = [](cplx r, double scale) { return scale > 0.0 ? std::abs(r) / scale : std::abs(r); };

  std::array<double, 5> r{};
  r[0] = scaled(force - spring * b.x_s, std::max(force, spring * std::abs(b.x_s)));
  const cplx cav = -0.5 * p.gamma0 * b.a_s - I * p.gN * b.A_s + drive;
  r[1] = scaled_c(cav, drive);
  const cplx coh_a = -h * b.A_s - I * p.Omega * b.C_s - I * p.gN * b.a_s;
  r[2] = scaled_c(coh_a, std::max({std::abs(h * b.A_s), p.Omega * std::abs(b.C_s), p.gN * std::abs(b.a_s)}));
  const cplx coh_c = -ot * b.C_s - I * p.Omega * b.A_s;
  r[3] = scaled_c(coh_c, std::max(std::abs(ot * b.C_s), p.Omega * std::abs(b.A_s)));
  const double shift = b.delta_ps - Delta0;
  r[4] = scaled(shift - c * b.x_s, std::max({std::abs(b.delta_ps), std::abs(Delta0), c * std::abs(b.x_s)}));
  return r;
}

void label_branches(std::vector<BranchSolution>& br, const SystemParams& p) {
  if (br.empty()) return;
  br.front().branch_index = 1;
  std::vector<BranchSolution*> above, below;  // both descending
  for (std::size_t i = 1; i < br.size(); ++i) {
    (br[i].delta_ps >= p.Delta_c ? above : below).push_back(&br[i]);
  }
  int next_extra = 5;
  for (std::size_t i = 0; i < above.size(); ++i) {
    above[i]->branch_index = (i + 1 == above.size()) ? 2 : next_extra++;
  }
  for (std::size_t i = 0; i < below.size(); ++i) {
    if (i + 1 == below.size()) below[i]->branch_index = 3;
    else if (i + 2 == below.size()) below[i]->branch_index = 4;
    else below[i]->branch_index = next_extra++;
  }
}

SteadyStateResult find_steady_states(double Delta0, const SystemParams& p) {
  validate(p);
  if (!(omega0(p, Delta0) > 0.0)) {
    throw std::domain_error("find_steady_states: Delta0 must be below omega_a (omega0 > 0)");
  }
  const std::array<double, 6> c = quintic_coeffs(Delta0, p);

  // Rescale d = s z so that every coefficient is O(1)-representable before
  // the balanced companion solve.
  const double s = std::max({1.0, std::abs(Delta0), 1.0 / response_slope(Delta0, p)});
  std::array<long double, 6> cs{};
  long double big = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    cs[i] = static_cast<long double>(c[i]) * std::pow(static_cast<long double>(s), static_cast<int>(i));
    big = std::max(big, std::abs(cs[i]));
  }
  std::array<double, 6> scaled{};
  for (std::size_t i = 0; i < 6; ++i) scaled[i] = static_cast<double>(cs[i] / big);

  // The rescaled solve resolves the large roots, the unscaled one the pair
  // near Delta_c; duplicates merge in the clustering below.
  std::vector<Candidate> cand;
  const auto collect = [&cand](const std::vector<cplx>& zs, double scale) {
    for (const cplx z : zs) {
      const cplx d = z * scale;
      if (std::abs(d.imag()) <= 1e-3 * std::abs(d)) cand.push_back({d.real(), d.imag()});
    }
  };
  collect(polynomial_roots(scaled), s);
  collect(polynomial_roots(c), 1.0);
  std::sort(cand.begin(), cand.end(), [](const Candidate& x, const Candidate& y) { return x.re < y.re; });

  std::vector<RootOut> roots;
  for (std::size_t i = 0; i < cand.size();) {
    std::vector<Candidate> cluster{cand[i]};
    std::size_t j = i + 1;
    while (j < cand.size()) {
      const Candidate& prev = cluster.back();
      const double gap = cand[j].re - prev.re;
      const double tol = 1e-6 * std::max(std::abs(prev.re), std::abs(cand[j].re)) +
                         2.0 * (std::abs(prev.im) + std::abs(cand[j].im));
      if (gap > tol) break;
      cluster.push_back(cand[j++]);
    }
    resolve_cluster(cluster, Delta0, p, roots);
    i = j;
  }

  std::sort(roots.begin(), roots.end(), [](const RootOut& x, const RootOut& y) { return x.value > y.value; });
  // Both solves can polish onto the same simple root. Near a tangency the
  // polished copies only agree to the root's conditioning.
  roots.erase(std::unique(roots.begin(), roots.end(),
                          [](const RootOut& x, const RootOut& y) {
                            return !x.degenerate && !y.degenerate &&
                                   std::abs(x.value - y.value) <= kSameRoot * (std::abs(x.value) + std::abs(y.value));
                          }),
              roots.end());
  // A real quintic has an odd number of real roots; an even count means a
  // near-double root was merged above, so restore it as a degenerate pair.
  if (roots.size() % 2 == 0 && !roots.empty()) {
    std::size_t flattest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < roots.size(); ++i) {
      const QuinticValue q = quintic_eval(roots[i].value, Delta0, p);
      const double rel = std::abs(q.derivative) * (1.0 + std::abs(roots[i].value)) / q.magnitude;
      if (rel < best) {
        best = rel;
        flattest = i;
      }
    }
    roots[flattest].degenerate = true;
    roots.insert(roots.begin() + static_cast<std::ptrdiff_t>(flattest), roots[flattest]);
  }
  for (std::size_t i = 0; i + 1 < roots.size(); ++i) {
    const double gap_tol = 1e-8 * (1.0 + std::abs(roots[i].value) + std::abs(roots[i + 1].value));
    if (roots[i].value - roots[i + 1].value < gap_tol) {
      roots[i].degenerate = roots[i + 1].degenerate = true;
    }
  }

  SteadyStateResult result;
  for (const RootOut& r : roots) {
    if (r.value < Delta0) {
      ++result.discarded_below_detuning;
      continue;
    }
    if (r.value >= p.omega_a) {
      ++result.discarded_beyond_cutoff;
      continue;
    }
    BranchSolution b = make_branch(r.value, Delta0, p);
    b.degenerate = r.degenerate;
    result.degenerate = result.degenerate || r.degenerate;
    result.branches.push_back(b);
  }
  label_branches(result.branches, p);
  return result;
}

double two_photon_residual(const BranchSolution& b, const SystemParams& p) {
  return b.delta_ps - p.Delta_c;
}

}  // namespace multistab
