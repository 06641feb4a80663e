#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "decman/numerics.hpp"

namespace decman {

enum class ManifoldKind { Stiefel, GeneralizedStiefel };

class ManifoldSpec;

/// A d x r matrix known to satisfy the manifold constraint to 1e-8.
/// Only ManifoldSpec can mint one.
class ManifoldPoint {
 public:
  const Matrix& value() const { return value_; }

 private:
  friend class ManifoldSpec;
  explicit ManifoldPoint(Matrix value) : value_(std::move(value)) {}

  Matrix value_;
};

/// A d x r matrix in the tangent space at some ManifoldPoint.
class TangentVector {
 public:
  const Matrix& value() const { return value_; }

 private:
  friend class ManifoldSpec;
  explicit TangentVector(Matrix value) : value_(std::move(value)) {}

  Matrix value_;
};

/// St(d,r) = {x : x^T x = I} or St_B(d,r) = {x : x^T B x = I}, plus the
/// proximal-smoothness parameter gamma used by neighbourhood checks.
///
/// On St(d,r) `project` is the exact Frobenius nearest point (polar factor).
/// On St_B it is the B-polar map y (y^T B y)^{-1/2}, which is a retraction
/// onto St_B but not the Euclidean nearest point.
/// Tangent projections are orthogonal in the Euclidean metric for both kinds.
class ManifoldSpec {
 public:
  static constexpr double kFeasibilityTol = 1e-8;

  static ManifoldSpec stiefel(Eigen::Index d, Eigen::Index r, double gamma = 0.5);
  /// gamma defaults to 0.5 / lambda_max(B).
  static ManifoldSpec generalized_stiefel(Matrix b, Eigen::Index r,
                                          std::optional<double> gamma = std::nullopt);

  ManifoldKind kind() const { return kind_; }
  Eigen::Index d() const { return d_; }
  Eigen::Index r() const { return r_; }
  double gamma() const { return gamma_; }
  /// Null for the plain Stiefel manifold.
  const Matrix* b() const { return b_.get(); }

  /// Upper bound on max ||x - y|| over the manifold: 2 sqrt(r) on St(d,r),
  /// 2 sqrt(r / lambda_min(B)) on St_B.
  double diameter_bound() const;

  double feasibility_residual(const Matrix& x) const;
  double tangency_residual(const Matrix& x, const Matrix& u) const;

  /// Throws InvalidInput when x is not feasible to kFeasibilityTol.
  ManifoldPoint point(Matrix x) const;
  /// Throws InvalidInput when u is not tangent at x to kFeasibilityTol.
  TangentVector tangent(const ManifoldPoint& x, Matrix u) const;

  /// Throws SingularityError when y is (numerically) column-rank deficient.
  ManifoldPoint project(const Matrix& y) const;
  TangentVector project_tangent(const ManifoldPoint& x, const Matrix& u) const;
  /// Riemannian gradient under the Euclidean metric.
  TangentVector riemannian_gradient(const ManifoldPoint& x, const Matrix& egrad) const {
    return project_tangent(x, egrad);
  }

  ManifoldPoint random_point(Rng& rng) const;
  /// Random tangent direction at x with Frobenius norm `norm`.
  TangentVector random_tangent(const ManifoldPoint& x, double norm, Rng& rng) const;
  /// Random element of the normal space at x (x S or B x S with S symmetric).
  Matrix random_normal(const ManifoldPoint& x, Rng& rng) const;

 private:
  ManifoldSpec(ManifoldKind kind, Eigen::Index d, Eigen::Index r, double gamma,
               std::shared_ptr<const Matrix> b);

  Matrix tangent_residual_matrix(const Matrix& x, const Matrix& u) const;
  void require_shape(const Matrix& m, const char* op) const;

  ManifoldKind kind_;
  Eigen::Index d_;
  Eigen::Index r_;
  double gamma_;
  std::shared_ptr<const Matrix> b_;
  double b_lambda_min_ = 1.0;
};

struct ProjectionReport {
  double max_ratio_lip = 0.0;
  double max_ratio_quad = 0.0;
  long samples = 0;
  long skipped = 0;
};

/// Samples x on the manifold and perturbations u, u' with norm at most
/// noise_scale and reports max ||P(x+u) - P(x+u')|| / ||u - u'|| and
/// max ||P(x+u) - x - P_T(u)|| / ||u||^2.
ProjectionReport check_projection_lipschitz(const ManifoldSpec& spec, long trials,
                                            double noise_scale, std::uint64_t seed);

/// For each scale s, the max over trials of ||P(x+u) - x - P_T(u)|| / s^2
/// with ||u|| = s. With tangent_only the perturbation is tangent, which makes
/// this the retraction second-order term ||R_x(u) - x - u|| / ||u||^2.
std::vector<double> quadratic_ratio_profile(const ManifoldSpec& spec, std::span<const double> scales,
                                            long trials, bool tangent_only, std::uint64_t seed);

/// max over samples of <v, y - x> - ||v|| / (4 gamma) ||y - x||^2 for x, y on
/// the manifold and v normal at x. Non-positive for a 2 gamma-proximally smooth set.
double normal_inequality_gap(const ManifoldSpec& spec, long trials, std::uint64_t seed);

}  // namespace decman
