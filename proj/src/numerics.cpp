#include "decman/numerics.hpp"

#include <cmath>
#include <string>

#include "decman/errors.hpp"

namespace decman {

namespace {

void require_finite(const Matrix& m, const char* op) {
  if (!m.allFinite()) {
    throw InvalidInput(std::string(op) + ": non-finite input");
  }
}

void require_square(const Matrix& m, const char* op) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw InvalidInput(std::string(op) + ": expected a non-empty square matrix, got " +
                       std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

void require_symmetric(const Matrix& m, const char* op) {
  const double scale = m.norm();
  if ((m - m.transpose()).norm() > 1e-8 * scale) {
    throw InvalidInput(std::string(op) + ": matrix is not symmetric");
  }
}

// Shared by spd_inverse_sqrt and lyapunov_solve.
SymEig spd_eig(const Matrix& m, const char* op) {
  SymEig eig = sym_eig(m);
  const double lmax = eig.values(eig.values.size() - 1);
  const double lmin = eig.values(0);
  if (!(lmax > 0.0) || lmin <= 1e-12 * lmax) {
    throw SingularityError(std::string(op) + ": matrix is not positive definite (min eig " +
                           std::to_string(lmin) + ", max eig " + std::to_string(lmax) + ")");
  }
  return eig;
}

}  // namespace

ThinSvd thin_svd(const Matrix& m) {
  require_finite(m, "thin_svd");
  if (m.rows() < m.cols()) {
    throw InvalidInput("thin_svd: expected rows >= cols, got " + std::to_string(m.rows()) + "x" +
                       std::to_string(m.cols()));
  }
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

SymEig sym_eig(const Matrix& m) {
  require_square(m, "sym_eig");
  require_finite(m, "sym_eig");
  require_symmetric(m, "sym_eig");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym(m));
  if (solver.info() != Eigen::Success) {
    throw SingularityError("sym_eig: eigensolver did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Matrix spd_inverse_sqrt(const Matrix& m) {
  const SymEig eig = spd_eig(m, "spd_inverse_sqrt");
  const Vector inv_sqrt = eig.values.array().rsqrt();
  Matrix r = eig.vectors * inv_sqrt.asDiagonal() * eig.vectors.transpose();
  return sym(r);
}

Vector least_squares(const Matrix& a, const Vector& b) {
  if (a.rows() < 1 || a.cols() < 1) {
    throw InvalidInput("least_squares: empty system");
  }
  if (a.rows() != b.size()) {
    throw InvalidInput("least_squares: right-hand side has " + std::to_string(b.size()) +
                       " entries, expected " + std::to_string(a.rows()));
  }
  require_finite(a, "least_squares");
  require_finite(b, "least_squares");
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-10);
  return svd.solve(b);
}

Matrix lyapunov_solve(const Matrix& m, const Matrix& c) {
  require_square(c, "lyapunov_solve");
  if (c.rows() != m.rows()) {
    throw InvalidInput("lyapunov_solve: dimension mismatch");
  }
  require_finite(c, "lyapunov_solve");
  require_symmetric(c, "lyapunov_solve");
  const SymEig eig = spd_eig(m, "lyapunov_solve");
  const Matrix& q = eig.vectors;
  Matrix ct = q.transpose() * sym(c) * q;
  const Eigen::Index r = ct.rows();
  for (Eigen::Index j = 0; j < r; ++j) {
    for (Eigen::Index i = 0; i < r; ++i) {
      ct(i, j) = 2.0 * ct(i, j) / (eig.values(i) + eig.values(j));
    }
  }
  return sym(q * ct * q.transpose());
}

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      g(i, j) = normal(rng);
    }
  }
  return g;
}

Matrix random_orthogonal(Eigen::Index d, Rng& rng) {
  const Matrix g = gaussian_matrix(d, d, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

}  // namespace decman
