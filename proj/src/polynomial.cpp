#include "multistab/polynomial.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <lapacke.h>

namespace multistab {

void balance(Eigen::MatrixXd& m) {
  constexpr double radix = 2.0;
  constexpr double sqrdx = radix * radix;
  const Eigen::Index n = m.rows();
  bool done = false;
  while (!done) {
    done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double r = 0.0;
      double c = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(m(j, i));
        r += std::abs(m(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix;
      double f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= sqrdx;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= sqrdx;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        g = 1.0 / f;
        m.row(i) *= g;
        m.col(i) *= f;
      }
    }
  }
}

EigenDecomposition eigen_decompose(const Eigen::MatrixXd& m, bool want_vectors) {
  const Eigen::Index n = m.rows();
  if (m.cols() != n) throw std::invalid_argument("eigen_decompose: matrix must be square");
  Eigen::MatrixXd a = m;  // column-major copy, overwritten by LAPACK
  Eigen::VectorXd wr(n), wi(n);
  Eigen::MatrixXd vr(want_vectors ? n : 1, want_vectors ? n : 1);
  double dummy = 0.0;
  const lapack_int info =
      LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', want_vectors ? 'V' : 'N', static_cast<lapack_int>(n), a.data(),
                    static_cast<lapack_int>(n), wr.data(), wi.data(), &dummy, 1, vr.data(),
                    static_cast<lapack_int>(want_vectors ? n : 1));
  if (info != 0) throw std::runtime_error("eigen_decompose: dgeev failed, info=" + std::to_string(info));

  EigenDecomposition out;
  out.values.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) out.values(i) = {wr(i), wi(i)};
  if (want_vectors) {
    // Conjugate pairs share storage: columns j, j+1 hold the real and imaginary parts.
    out.vectors.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (wi(j) != 0.0 && j + 1 < n) {
        out.vectors.col(j) = vr.col(j).cast<std::complex<double>>() + std::complex<double>(0, 1) * vr.col(j + 1);
        out.vectors.col(j + 1) = out.vectors.col(j).conjugate();
        ++j;
      } else {
        out.vectors.col(j) = vr.col(j).cast<std::complex<double>>();
      }
    }
  }
  return out;
}

std::vector<std::complex<double>> polynomial_roots(std::span<const double> coeffs) {
  std::size_t hi = coeffs.size();
  while (hi > 0 && coeffs[hi - 1] == 0.0) --hi;
  if (hi == 0) throw std::invalid_argument("polynomial_roots: zero polynomial");
  std::size_t lo = 0;
  while (lo < hi && coeffs[lo] == 0.0) ++lo;

  std::vector<std::complex<double>> roots(lo, {0.0, 0.0});
  const auto degree = static_cast<Eigen::Index>(hi - 1 - lo);
  if (degree <= 0) return roots;

  // Companion matrix of the monic polynomial, last column holding -a_i.
  const double lead = coeffs[hi - 1];
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(degree, degree);
  for (Eigen::Index i = 1; i < degree; ++i) comp(i, i - 1) = 1.0;
  for (Eigen::Index i = 0; i < degree; ++i) {
    comp(i, degree - 1) = -coeffs[lo + static_cast<std::size_t>(i)] / lead;
  }
  balance(comp);

  const EigenDecomposition eig = eigen_decompose(comp);
  for (Eigen::Index i = 0; i < degree; ++i) roots.push_back(eig.values(i));
  return roots;
}

}  // namespace multistab
