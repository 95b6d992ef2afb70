#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace multistab {

/// In-place radix-2 diagonal balancing of a square matrix (Parlett-Reinsch,
/// as in LAPACK xGEBAL without permutations). Eigenvalues are preserved
/// exactly; graded companion matrices become well-scaled.
void balance(Eigen::MatrixXd& m);

/// Eigenvalues and right eigenvectors of a general real matrix (LAPACK dgeev,
/// whose deflation criterion keeps small eigenvalues of graded matrices
/// accurate relative to their own size).
struct EigenDecomposition {
  Eigen::VectorXcd values;
  Eigen::MatrixXcd vectors;  // column i belongs to values(i); empty unless requested
};
EigenDecomposition eigen_decompose(const Eigen::MatrixXd& m, bool want_vectors = false);

/// All complex roots of sum_i c[i] x^i (coefficients lowest degree first)
/// from the eigenvalues of the balanced companion matrix. Trailing zero
/// leading coefficients are dropped; zero roots are split off exactly.
std::vector<std::complex<double>> polynomial_roots(std::span<const double> coeffs);

/// Evaluates sum_i c[i] x^i by Horner's rule.
template <typename T>
T horner(std::span<const double> coeffs, T x) {
  T acc{0};
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + T(*it);
  return acc;
}

}  // namespace multistab
