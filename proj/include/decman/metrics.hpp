#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "decman/manifold.hpp"
#include "decman/parallel.hpp"
#include "decman/problem.hpp"

namespace decman {

/// One row of a run trace.
struct TraceRecord {
  long iter = 0;
  double step_size = 0.0;
  double consensus_error = 0.0;    // (1/n) sum_i ||x_i - xbar||^2
  double objective_at_mean = 0.0;  // f(xbar)
  double grad_norm_sq = 0.0;       // ||grad f(xbar)||^2
  std::optional<double> dist_to_truth;        // d_s(xbar, x*)
  std::optional<double> mean_agent_distance;  // (1/n) sum_i d_s(x_i, x*), opt-in
  long long wall_ns = 0;

  bool operator==(const TraceRecord&) const = default;
};

/// Euclidean average xhat of the agents and its projection xbar = P_M(xhat).
struct InducedMean {
  Matrix euclidean;
  ManifoldPoint projected;
};

/// Throws SingularityError when xhat is outside the projection tube.
InducedMean induced_mean(const ManifoldSpec& spec, std::span<const ManifoldPoint> points);

double consensus_error(std::span<const ManifoldPoint> points, const Matrix& center);

struct Stationarity {
  double consensus_error = 0.0;
  double grad_norm_sq = 0.0;
};

/// Both halves of the epsilon-stationarity test at the induced mean. The
/// gradient is the tangent projection of (1/n) sum_i grad f_i(xbar).
Stationarity stationarity(const Problem& problem, std::span<const ManifoldPoint> points,
                          WorkerPool* pool = nullptr);

/// min over orthogonal Q of ||x Q - x_star||, via the Procrustes solution.
double subspace_distance(const Matrix& x, const Matrix& x_star);

/// ||xbar - xhat|| / ((1/n) sum_i ||x_i - xbar||^2); 0 when the agents agree to rounding.
double mean_gap_ratio(const ManifoldSpec& spec, std::span<const ManifoldPoint> points);

struct QuadraticBoundProbe {
  /// Smallest L making f_i(y) - f_i(x) <= <grad f_i(x), y - x> + L/2 ||y - x||^2
  /// hold on every sample (0 if the linear model already dominates).
  double lg_hat = 0.0;
  /// max ||grad f_i(x) - grad f_i(y)|| / ||x - y||.
  double grad_lipschitz_ratio = 0.0;
  /// max ||grad f_i(x)|| (Euclidean), the empirical gradient bound.
  double max_grad_norm = 0.0;
};

QuadraticBoundProbe quadratic_upper_bound_probe(const Problem& problem, long trials, std::uint64_t seed);

/// max of the three probe quantities; a stand-in for the analysis constant L.
double estimate_lipschitz(const Problem& problem, long trials, std::uint64_t seed);

// Trace CSV ------------------------------------------------------------------

/// iter,step_size,consensus_error,objective_at_mean,grad_norm_sq,dist_to_truth,wall_ns
/// plus a trailing mean_agent_distance column when `with_agent_distance`.
std::string format_trace_csv(std::span<const TraceRecord> records, bool with_agent_distance = false);
std::vector<TraceRecord> parse_trace_csv(const std::string& text);

}  // namespace decman
