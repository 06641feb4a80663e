#include "doctest.h"

#include <cmath>
#include <limits>

#include "decman/errors.hpp"
#include "decman/numerics.hpp"

using namespace decman;

namespace {

Matrix random_spd(Eigen::Index n, Rng& rng) {
  const Matrix g = gaussian_matrix(n, n, rng);
  return g.transpose() * g + Matrix::Identity(n, n);
}

}  // namespace

TEST_CASE("thin_svd on identity and diagonal inputs") {
  const ThinSvd id = thin_svd(Matrix::Identity(3, 3));
  CHECK(id.s.isApprox(Vector::Ones(3)));
  CHECK((id.u * id.s.asDiagonal() * id.v.transpose() - Matrix::Identity(3, 3)).norm() < 1e-12);

  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 3, 2, 1;
  const ThinSvd svd = thin_svd(d);
  CHECK(svd.s(0) == doctest::Approx(3.0));
  CHECK(svd.s(1) == doctest::Approx(2.0));
  CHECK(svd.s(2) == doctest::Approx(1.0));
}

TEST_CASE("thin_svd reconstruction and orthonormality on random inputs") {
  Rng rng(11);
  std::uniform_int_distribution<int> cols(1, 20);
  for (int trial = 0; trial < 1000; ++trial) {
    const int q = cols(rng);
    std::uniform_int_distribution<int> rows(q, 100);
    const Matrix m = gaussian_matrix(rows(rng), q, rng);
    const ThinSvd svd = thin_svd(m);
    REQUIRE(svd.u.cols() == q);
    const double tol = 1e-10 * std::max(1.0, m.norm());
    CHECK((svd.u * svd.s.asDiagonal() * svd.v.transpose() - m).norm() <= tol);
    CHECK((svd.u.transpose() * svd.u - Matrix::Identity(q, q)).norm() <= 1e-10);
    CHECK((svd.v.transpose() * svd.v - Matrix::Identity(q, q)).norm() <= 1e-10);
    for (int j = 1; j < q; ++j) CHECK(svd.s(j - 1) >= svd.s(j));
  }
}

TEST_CASE("thin_svd rejects bad input") {
  Matrix m = Matrix::Ones(3, 2);
  m(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(thin_svd(m), InvalidInput);
  CHECK_THROWS_AS(thin_svd(Matrix::Ones(2, 3)), InvalidInput);
}

TEST_CASE("sym_eig small cases and residuals") {
  const SymEig id = sym_eig(Matrix::Identity(2, 2));
  CHECK(id.values(0) == doctest::Approx(1.0));
  CHECK(id.values(1) == doctest::Approx(1.0));

  Matrix swap(2, 2);
  swap << 0, 1, 1, 0;
  const SymEig e = sym_eig(swap);
  CHECK(e.values(0) == doctest::Approx(-1.0));
  CHECK(e.values(1) == doctest::Approx(1.0));

  Rng rng(3);
  const Matrix g = gaussian_matrix(5, 5, rng);
  const Matrix m = sym(g);
  const SymEig eig = sym_eig(m);
  for (int j = 0; j < 5; ++j) {
    CHECK((m * eig.vectors.col(j) - eig.values(j) * eig.vectors.col(j)).norm() <= 1e-9 * m.norm());
  }
  CHECK((eig.vectors.transpose() * eig.vectors - Matrix::Identity(5, 5)).norm() < 1e-10);
}

TEST_CASE("sym_eig rejects asymmetric input") {
  Matrix m(2, 2);
  m << 1, 2, 3, 4;
  CHECK_THROWS_AS(sym_eig(m), InvalidInput);
}

TEST_CASE("spd_inverse_sqrt") {
  CHECK((spd_inverse_sqrt(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)).norm() < 1e-14);

  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 4, 9;
  const Matrix r = spd_inverse_sqrt(d);
  CHECK(r(0, 0) == doctest::Approx(0.5));
  CHECK(r(1, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(std::abs(r(0, 1)) < 1e-15);

  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix m = random_spd(6, rng);
    const Matrix s = spd_inverse_sqrt(m);
    CHECK((s * m * s - Matrix::Identity(6, 6)).norm() < 1e-9);
    CHECK((s * m - m * s).norm() < 1e-9 * m.norm());
  }

  Matrix singular = Matrix::Zero(2, 2);
  singular(0, 0) = 1.0;
  CHECK_THROWS_AS(spd_inverse_sqrt(singular), SingularityError);
}

TEST_CASE("least_squares") {
  Vector b(2);
  b << 1, 2;
  CHECK((least_squares(Matrix::Identity(2, 2), b) - b).norm() < 1e-14);

  Matrix col = Matrix::Ones(2, 1);
  Vector rhs(2);
  rhs << 1, 3;
  CHECK(least_squares(col, rhs)(0) == doctest::Approx(2.0));

  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = gaussian_matrix(12, 4, rng);
    const Vector y = gaussian_matrix(12, 1, rng).col(0);
    const Vector x = least_squares(a, y);
    CHECK((a.transpose() * (a * x - y)).norm() < 1e-8);
    const Vector normal = (a.transpose() * a).ldlt().solve(a.transpose() * y);
    CHECK((x - normal).norm() < 1e-8);
  }

  // Rank deficient: min-norm solution splits the weight evenly.
  Matrix dup(1, 2);
  dup << 1, 1;
  Vector one(1);
  one << 2;
  const Vector mn = least_squares(dup, one);
  CHECK(mn(0) == doctest::Approx(1.0));
  CHECK(mn(1) == doctest::Approx(1.0));
}

TEST_CASE("lyapunov_solve") {
  Rng rng(2);
  const Matrix c0 = sym(gaussian_matrix(3, 3, rng));
  CHECK((lyapunov_solve(Matrix::Identity(3, 3), c0) - c0).norm() < 1e-12);

  Matrix m = Matrix::Zero(2, 2);
  m.diagonal() << 1, 3;
  Matrix c(2, 2);
  c << 2, 4, 4, 6;
  Matrix expected(2, 2);
  expected << 2, 2, 2, 2;
  CHECK((lyapunov_solve(m, c) - expected).norm() < 1e-12);

  for (int trial = 0; trial < 20; ++trial) {
    const Matrix spd = random_spd(5, rng);
    const Matrix sc = sym(gaussian_matrix(5, 5, rng));
    const Matrix s = lyapunov_solve(spd, sc);
    CHECK((spd * s + s * spd - 2.0 * sc).norm() <= 1e-9 * sc.norm());
    CHECK((s - s.transpose()).norm() < 1e-12);
  }

  Matrix indefinite = Matrix::Identity(2, 2);
  indefinite(1, 1) = -1.0;
  CHECK_THROWS_AS(lyapunov_solve(indefinite, c), SingularityError);
}

TEST_CASE("factorizations are bitwise deterministic") {
  Rng a(77), b(77);
  const Matrix m1 = gaussian_matrix(30, 7, a);
  const Matrix m2 = gaussian_matrix(30, 7, b);
  REQUIRE(m1 == m2);
  const ThinSvd s1 = thin_svd(m1);
  const ThinSvd s2 = thin_svd(m2);
  CHECK(s1.u == s2.u);
  CHECK(s1.s == s2.s);
  CHECK(s1.v == s2.v);
}

TEST_CASE("random_orthogonal is orthogonal") {
  Rng rng(4);
  const Matrix q = random_orthogonal(7, rng);
  CHECK((q.transpose() * q - Matrix::Identity(7, 7)).norm() < 1e-12);
}
