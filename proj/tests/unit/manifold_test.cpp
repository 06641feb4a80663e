#include "doctest.h"

#include <cmath>
#include <vector>

#include "decman/errors.hpp"
#include "decman/manifold.hpp"
#include "decman/problem.hpp"

using namespace decman;

namespace {

double inner(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

ManifoldSpec gstiefel(Eigen::Index d, Eigen::Index r, Rng& rng) {
  const Matrix g = gaussian_matrix(d, d, rng);
  return ManifoldSpec::generalized_stiefel(g.transpose() * g / static_cast<double>(d) +
                                               Matrix::Identity(d, d),
                                           r);
}

// Local optimization oracle for the nearest point: projected gradient descent
// on ||z - y||^2 over St(d, r), started from many random points.
Matrix nearest_point_oracle(const ManifoldSpec& spec, const Matrix& y, Rng& rng) {
  Matrix best;
  double best_dist = 1e300;
  for (int restart = 0; restart < 20; ++restart) {
    ManifoldPoint z = spec.random_point(rng);
    for (int it = 0; it < 2000; ++it) {
      const Matrix g = spec.project_tangent(z, z.value() - y).value();
      if (g.norm() < 1e-13) break;
      z = spec.project(z.value() - 0.2 * g);
    }
    const double dist = (z.value() - y).norm();
    if (dist < best_dist) {
      best_dist = dist;
      best = z.value();
    }
  }
  return best;
}

}  // namespace

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(ManifoldSpec::stiefel(3, 4), InvalidInput);
  CHECK_THROWS_AS(ManifoldSpec::stiefel(3, 2, 0.0), InvalidInput);
  Matrix b = Matrix::Identity(3, 3);
  b(2, 2) = -1.0;
  CHECK_THROWS_AS(ManifoldSpec::generalized_stiefel(b, 2), InvalidInput);

  const ManifoldSpec st = ManifoldSpec::stiefel(10, 5);
  CHECK(st.gamma() == 0.5);
  CHECK(st.diameter_bound() == doctest::Approx(2.0 * std::sqrt(5.0)));
  CHECK(st.b() == nullptr);

  Matrix diag = Matrix::Zero(3, 3);
  diag.diagonal() << 1, 2, 4;
  const ManifoldSpec gs = ManifoldSpec::generalized_stiefel(diag, 2);
  CHECK(gs.gamma() == doctest::Approx(0.125));
  CHECK(gs.diameter_bound() == doctest::Approx(2.0 * std::sqrt(2.0)));
}

TEST_CASE("point and tangent validation") {
  const ManifoldSpec st = ManifoldSpec::stiefel(4, 2);
  CHECK_THROWS_AS(st.point(Matrix::Ones(4, 2)), InvalidInput);
  CHECK_THROWS_AS(st.point(Matrix::Identity(3, 2)), InvalidInput);
  const ManifoldPoint x = st.point(Matrix::Identity(4, 2));
  CHECK_THROWS_AS(st.tangent(x, Matrix::Identity(4, 2)), InvalidInput);
  Matrix u = Matrix::Zero(4, 2);
  u(3, 0) = 1.0;
  CHECK_NOTHROW(st.tangent(x, u));
}

TEST_CASE("project fixes feasible points and removes scaling") {
  Rng rng(1);
  for (const ManifoldSpec& spec : {ManifoldSpec::stiefel(10, 5), gstiefel(10, 5, rng)}) {
    const ManifoldPoint x = spec.random_point(rng);
    CHECK((spec.project(x.value()).value() - x.value()).norm() < 1e-10);
    CHECK((spec.project(2.5 * x.value()).value() - x.value()).norm() < 1e-10);
    for (int trial = 0; trial < 50; ++trial) {
      const Matrix y = gaussian_matrix(10, 5, rng);
      const ManifoldPoint p = spec.project(y);
      CHECK(spec.feasibility_residual(p.value()) <= 1e-8);
      CHECK((spec.project(p.value()).value() - p.value()).norm() <= 1e-8);
    }
  }
}

TEST_CASE("project matches a nearest-point search on St(10,5)") {
  Rng rng(8);
  const ManifoldSpec spec = ManifoldSpec::stiefel(10, 5);
  for (int trial = 0; trial < 3; ++trial) {
    const Matrix y = gaussian_matrix(10, 5, rng);
    const Matrix oracle = nearest_point_oracle(spec, y, rng);
    const Matrix p = spec.project(y).value();
    CHECK((p - y).norm() <= (oracle - y).norm() + 1e-9);
    CHECK((p - oracle).norm() < 1e-6);
  }
}

TEST_CASE("project rejects rank-deficient input") {
  const ManifoldSpec spec = ManifoldSpec::stiefel(4, 2);
  Matrix y = Matrix::Zero(4, 2);
  y(0, 0) = 1.0;
  y(0, 1) = 1.0;
  CHECK_THROWS_AS(spec.project(y), SingularityError);
  Rng rng(1);
  const ManifoldSpec gs = gstiefel(4, 2, rng);
  CHECK_THROWS_AS(gs.project(y), SingularityError);
}

TEST_CASE("tangent projection properties") {
  Rng rng(6);
  for (const ManifoldSpec& spec : {ManifoldSpec::stiefel(10, 5), gstiefel(10, 5, rng)}) {
    const ManifoldPoint x = spec.random_point(rng);
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix u = gaussian_matrix(10, 5, rng);
      const Matrix w = gaussian_matrix(10, 5, rng);
      const Matrix pu = spec.project_tangent(x, u).value();
      const Matrix pw = spec.project_tangent(x, w).value();
      CHECK(spec.tangency_residual(x.value(), pu) <= 1e-8);
      CHECK((spec.project_tangent(x, pu).value() - pu).norm() <= 1e-9 * std::max(1.0, u.norm()));
      CHECK(std::abs(inner(pu, w) - inner(u, pw)) <= 1e-9 * u.norm() * w.norm());
      for (int k = 0; k < 20; ++k) {
        const Matrix t = spec.random_tangent(x, 1.0, rng).value();
        CHECK(std::abs(inner(u - pu, t)) <= 1e-8 * std::max(1.0, u.norm()));
      }
    }
    const Matrix normal = spec.random_normal(x, rng);
    CHECK(spec.riemannian_gradient(x, normal).value().norm() <= 1e-9 * normal.norm());
  }
  const ManifoldSpec st = ManifoldSpec::stiefel(6, 3);
  const ManifoldPoint x = st.random_point(rng);
  CHECK(st.project_tangent(x, x.value()).value().norm() < 1e-12);
}

TEST_CASE("riemannian gradient of PCA matches finite differences along tangent directions") {
  PcaParams p;
  p.n = 2;
  p.m_i = 20;
  p.d = 10;
  p.r = 5;
  p.seed = 3;
  const PcaProblem problem = gen_pca_data(p);
  const ManifoldSpec& spec = problem.manifold();
  Rng rng(4);
  const ManifoldPoint x = spec.random_point(rng);
  const Matrix g = spec.riemannian_gradient(x, problem.local_gradient(0, x.value())).value();
  const double h = 1e-6;
  for (int k = 0; k < 10; ++k) {
    const Matrix xi = spec.random_tangent(x, 1.0, rng).value();
    const double fp = problem.local_objective(0, spec.project(x.value() + h * xi).value());
    const double fm = problem.local_objective(0, spec.project(x.value() - h * xi).value());
    const double fd = (fp - fm) / (2.0 * h);
    const double exact = inner(g, xi);
    CHECK(std::abs(fd - exact) <= 1e-5 * std::max(1.0, std::abs(exact)));
  }
}

TEST_CASE("projection Lipschitz and second-order ratios on St(10,5)") {
  const ManifoldSpec spec = ManifoldSpec::stiefel(10, 5);
  const ProjectionReport rep = check_projection_lipschitz(spec, 1000, 0.3, 12);
  CHECK(rep.samples + rep.skipped == 1000);
  CHECK(rep.max_ratio_lip <= 2.0);
  CHECK(std::isfinite(rep.max_ratio_quad));

  const std::vector<double> scales = {1e-2, 1e-3, 1e-4};
  const auto ratios = quadratic_ratio_profile(spec, scales, 100, true, 5);
  REQUIRE(ratios.size() == 3);
  for (std::size_t i = 1; i < ratios.size(); ++i) CHECK(ratios[i] <= ratios[i - 1] * 1.05);
  CHECK(ratios.back() > 0.0);

  CHECK_THROWS_AS(check_projection_lipschitz(spec, 10, 0.6, 1), InvalidInput);
  CHECK_THROWS_AS(check_projection_lipschitz(spec, 0, 0.1, 1), InvalidInput);
}

TEST_CASE("normal-vector inequality holds on the Stiefel manifold") {
  const ManifoldSpec spec = ManifoldSpec::stiefel(10, 5);
  CHECK(normal_inequality_gap(spec, 2000, 3) <= 1e-9);
}
