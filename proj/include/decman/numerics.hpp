#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace decman {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Seeded generator used everywhere randomness enters (data, graphs, init).
using Rng = std::mt19937_64;

/// Thin SVD m = U diag(S) V^T with U p x q, S descending, V q x q.
struct ThinSvd {
  Matrix u;
  Vector s;
  Matrix v;
};

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending.
struct SymEig {
  Vector values;
  Matrix vectors;
};

/// Requires rows >= cols and finite entries.
ThinSvd thin_svd(const Matrix& m);

/// Input must be symmetric to 1e-8 relative; it is symmetrized internally.
SymEig sym_eig(const Matrix& m);

/// R with R m R = I for SPD m. Throws SingularityError when the smallest
/// eigenvalue is below 1e-12 of the largest.
Matrix spd_inverse_sqrt(const Matrix& m);

/// Minimum-norm minimizer of ||a x - b||; singular values below
/// 1e-10 * sigma_max are dropped.
Vector least_squares(const Matrix& a, const Vector& b);

/// Symmetric S with m S + S m = 2 c, for SPD m and symmetric c.
Matrix lyapunov_solve(const Matrix& m, const Matrix& c);

inline Matrix sym(const Matrix& a) { return 0.5 * (a + a.transpose()); }

inline bool all_finite(const Matrix& a) { return a.allFinite(); }

/// i.i.d. standard normal entries, filled column by column.
Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// Haar-ish random orthogonal matrix from the QR of a Gaussian matrix
/// (column signs fixed so that R has a positive diagonal).
Matrix random_orthogonal(Eigen::Index d, Rng& rng);

}  // namespace decman
