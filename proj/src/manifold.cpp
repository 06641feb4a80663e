#include "decman/manifold.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <string>

#include "decman/errors.hpp"

namespace decman {

ManifoldSpec::ManifoldSpec(ManifoldKind kind, Eigen::Index d, Eigen::Index r, double gamma,
                           std::shared_ptr<const Matrix> b)
    : kind_(kind), d_(d), r_(r), gamma_(gamma), b_(std::move(b)) {
  if (r_ < 1 || d_ < r_) {
    throw InvalidInput("manifold: need 1 <= r <= d, got d=" + std::to_string(d_) +
                       " r=" + std::to_string(r_));
  }
  if (!(gamma_ > 0.0) || !std::isfinite(gamma_)) {
    throw InvalidInput("manifold: gamma must be positive");
  }
}

ManifoldSpec ManifoldSpec::stiefel(Eigen::Index d, Eigen::Index r, double gamma) {
  return ManifoldSpec(ManifoldKind::Stiefel, d, r, gamma, nullptr);
}

ManifoldSpec ManifoldSpec::generalized_stiefel(Matrix b, Eigen::Index r,
                                               std::optional<double> gamma) {
  if (b.rows() != b.cols()) {
    throw InvalidInput("manifold: B must be square");
  }
  const SymEig eig = sym_eig(b);
  const double lmin = eig.values(0);
  const double lmax = eig.values(eig.values.size() - 1);
  if (!(lmin > 1e-12 * lmax) || !(lmax > 0.0)) {
    throw InvalidInput("manifold: B must be symmetric positive definite");
  }
  const Eigen::Index d = b.rows();
  ManifoldSpec spec(ManifoldKind::GeneralizedStiefel, d, r, gamma.value_or(0.5 / lmax),
                    std::make_shared<const Matrix>(sym(b)));
  spec.b_lambda_min_ = lmin;
  return spec;
}

double ManifoldSpec::diameter_bound() const {
  return 2.0 * std::sqrt(static_cast<double>(r_) / b_lambda_min_);
}

void ManifoldSpec::require_shape(const Matrix& m, const char* op) const {
  if (m.rows() != d_ || m.cols() != r_) {
    throw InvalidInput(std::string(op) + ": expected " + std::to_string(d_) + "x" +
                       std::to_string(r_) + ", got " + std::to_string(m.rows()) + "x" +
                       std::to_string(m.cols()));
  }
}

double ManifoldSpec::feasibility_residual(const Matrix& x) const {
  require_shape(x, "feasibility_residual");
  const Matrix eye = Matrix::Identity(r_, r_);
  if (kind_ == ManifoldKind::Stiefel) {
    return (x.transpose() * x - eye).norm();
  }
  return (x.transpose() * (*b_) * x - eye).norm();
}

Matrix ManifoldSpec::tangent_residual_matrix(const Matrix& x, const Matrix& u) const {
  if (kind_ == ManifoldKind::Stiefel) {
    return sym(x.transpose() * u);
  }
  return sym(x.transpose() * ((*b_) * u));
}

double ManifoldSpec::tangency_residual(const Matrix& x, const Matrix& u) const {
  require_shape(x, "tangency_residual");
  require_shape(u, "tangency_residual");
  return tangent_residual_matrix(x, u).norm();
}

ManifoldPoint ManifoldSpec::point(Matrix x) const {
  const double res = feasibility_residual(x);
  if (!(res <= kFeasibilityTol)) {
    throw InvalidInput("manifold point is infeasible (residual " + std::to_string(res) + ")");
  }
  return ManifoldPoint(std::move(x));
}

TangentVector ManifoldSpec::tangent(const ManifoldPoint& x, Matrix u) const {
  const double res = tangency_residual(x.value(), u);
  if (!(res <= kFeasibilityTol * std::max(1.0, u.norm()))) {
    throw InvalidInput("vector is not tangent (residual " + std::to_string(res) + ")");
  }
  return TangentVector(std::move(u));
}

ManifoldPoint ManifoldSpec::project(const Matrix& y) const {
  require_shape(y, "project");
  if (!y.allFinite()) {
    throw InvalidInput("project: non-finite input");
  }
  if (kind_ == ManifoldKind::Stiefel) {
    const ThinSvd svd = thin_svd(y);
    const double smax = svd.s(0);
    const double smin = svd.s(svd.s.size() - 1);
    // y^T y must be SPD with min eigenvalue > 1e-12 * max eigenvalue.
    if (!(smax > 0.0) || smin * smin <= 1e-12 * smax * smax) {
      throw SingularityError("project: input is column-rank deficient (sigma_min " +
                             std::to_string(smin) + ")");
    }
    return ManifoldPoint(svd.u * svd.v.transpose());
  }
  const Matrix gram = y.transpose() * (*b_) * y;
  if (!gram.allFinite()) throw SingularityError("project: y^T B y overflowed");
  return ManifoldPoint(y * spd_inverse_sqrt(gram));
}

TangentVector ManifoldSpec::project_tangent(const ManifoldPoint& x, const Matrix& u) const {
  require_shape(u, "project_tangent");
  const Matrix& xv = x.value();
  if (kind_ == ManifoldKind::Stiefel) {
    return TangentVector(u - xv * sym(xv.transpose() * u));
  }
  // Normal space at x is {B x S : S symmetric}; pick S so that the remainder
  // satisfies sym(x^T B (u - B x S)) = 0.
  const Matrix bx = (*b_) * xv;
  const Matrix m = bx.transpose() * bx;
  const Matrix s = lyapunov_solve(m, sym(bx.transpose() * u));
  return TangentVector(u - bx * s);
}

ManifoldPoint ManifoldSpec::random_point(Rng& rng) const {
  for (int attempt = 0; attempt < 16; ++attempt) {
    try {
      return project(gaussian_matrix(d_, r_, rng));
    } catch (const SingularityError&) {
      // a Gaussian draw is rank deficient with probability zero
    }
  }
  throw SingularityError("random_point: could not draw a full-rank matrix");
}

TangentVector ManifoldSpec::random_tangent(const ManifoldPoint& x, double norm, Rng& rng) const {
  Matrix u = project_tangent(x, gaussian_matrix(d_, r_, rng)).value();
  const double un = u.norm();
  if (un > 0.0) u *= norm / un;
  return TangentVector(std::move(u));
}

Matrix ManifoldSpec::random_normal(const ManifoldPoint& x, Rng& rng) const {
  const Matrix s = sym(gaussian_matrix(r_, r_, rng));
  if (kind_ == ManifoldKind::Stiefel) {
    return x.value() * s;
  }
  return (*b_) * x.value() * s;
}

namespace {

Matrix random_direction(Eigen::Index d, Eigen::Index r, double norm, Rng& rng) {
  Matrix u = gaussian_matrix(d, r, rng);
  return u * (norm / u.norm());
}

}  // namespace

ProjectionReport check_projection_lipschitz(const ManifoldSpec& spec, long trials,
                                            double noise_scale, std::uint64_t seed) {
  if (trials < 1) throw InvalidInput("check_projection_lipschitz: trials must be >= 1");
  if (!(noise_scale > 0.0) || noise_scale > spec.gamma()) {
    throw InvalidInput("check_projection_lipschitz: noise_scale must lie in (0, gamma]");
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> radius(0.0, 1.0);
  ProjectionReport report;
  for (long trial = 0; trial < trials; ++trial) {
    const ManifoldPoint x = spec.random_point(rng);
    const Matrix u = random_direction(spec.d(), spec.r(), noise_scale * radius(rng), rng);
    const Matrix w = random_direction(spec.d(), spec.r(), noise_scale * radius(rng), rng);
    try {
      const Matrix pu = spec.project(x.value() + u).value();
      const Matrix pw = spec.project(x.value() + w).value();
      const double du = (u - w).norm();
      if (du > 0.0) {
        report.max_ratio_lip = std::max(report.max_ratio_lip, (pu - pw).norm() / du);
      }
      const double nu = u.norm();
      if (nu > 0.0) {
        const Matrix second = pu - x.value() - spec.project_tangent(x, u).value();
        report.max_ratio_quad = std::max(report.max_ratio_quad, second.norm() / (nu * nu));
      }
      ++report.samples;
    } catch (const SingularityError&) {
      ++report.skipped;
    }
  }
  return report;
}

std::vector<double> quadratic_ratio_profile(const ManifoldSpec& spec, std::span<const double> scales,
                                            long trials, bool tangent_only, std::uint64_t seed) {
  std::vector<double> out;
  out.reserve(scales.size());
  for (const double scale : scales) {
    // Same sample points at every scale so the sequence isolates the scale.
    Rng rng(seed);
    double worst = 0.0;
    for (long trial = 0; trial < trials; ++trial) {
      const ManifoldPoint x = spec.random_point(rng);
      const Matrix u = tangent_only ? spec.random_tangent(x, scale, rng).value()
                                    : random_direction(spec.d(), spec.r(), scale, rng);
      const Matrix second =
          spec.project(x.value() + u).value() - x.value() - spec.project_tangent(x, u).value();
      worst = std::max(worst, second.norm() / (scale * scale));
    }
    out.push_back(worst);
  }
  return out;
}

double normal_inequality_gap(const ManifoldSpec& spec, long trials, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = -std::numeric_limits<double>::infinity();
  for (long trial = 0; trial < trials; ++trial) {
    const ManifoldPoint x = spec.random_point(rng);
    // Alternate between nearby and unrelated second points.
    const ManifoldPoint y =
        (trial % 2 == 0) ? spec.project(x.value() + spec.random_tangent(x, unit(rng), rng).value())
                         : spec.random_point(rng);
    const Matrix v = spec.random_normal(x, rng);
    const Matrix diff = y.value() - x.value();
    const double lhs = (v.array() * diff.array()).sum();
    const double rhs = v.norm() / (4.0 * spec.gamma()) * diff.squaredNorm();
    worst = std::max(worst, lhs - rhs);
  }
  return worst;
}

}  // namespace decman
