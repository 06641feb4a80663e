#include "decman/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "decman/errors.hpp"

namespace decman {

InducedMean induced_mean(const ManifoldSpec& spec, std::span<const ManifoldPoint> points) {
  if (points.empty()) throw InvalidInput("induced_mean: no agents");
  Matrix mean = Matrix::Zero(spec.d(), spec.r());
  for (const auto& p : points) mean += p.value();
  mean /= static_cast<double>(points.size());
  ManifoldPoint bar = spec.project(mean);
  return {std::move(mean), std::move(bar)};
}

double consensus_error(std::span<const ManifoldPoint> points, const Matrix& center) {
  if (points.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& p : points) acc += (p.value() - center).squaredNorm();
  return acc / static_cast<double>(points.size());
}

Stationarity stationarity(const Problem& problem, std::span<const ManifoldPoint> points,
                          WorkerPool* pool) {
  const ManifoldSpec& spec = problem.manifold();
  const InducedMean mean = induced_mean(spec, points);
  const Matrix egrad = problem.gradient(mean.projected.value(), pool);
  return {consensus_error(points, mean.projected.value()),
          spec.project_tangent(mean.projected, egrad).value().squaredNorm()};
}

double subspace_distance(const Matrix& x, const Matrix& x_star) {
  if (x.rows() != x_star.rows() || x.cols() != x_star.cols()) {
    throw InvalidInput("subspace_distance: shape mismatch");
  }
  const ThinSvd svd = thin_svd(x.transpose() * x_star);
  const Matrix q = svd.u * svd.v.transpose();
  return (x * q - x_star).norm();
}

double mean_gap_ratio(const ManifoldSpec& spec, std::span<const ManifoldPoint> points) {
  const InducedMean mean = induced_mean(spec, points);
  const double spread = consensus_error(points, mean.projected.value());
  // Below rounding level the ratio is noise over noise.
  const double floor = 1e-24 * mean.projected.value().squaredNorm();
  if (spread <= floor) return 0.0;
  return (mean.projected.value() - mean.euclidean).norm() / spread;
}

QuadraticBoundProbe quadratic_upper_bound_probe(const Problem& problem, long trials,
                                                std::uint64_t seed) {
  if (trials < 1) throw InvalidInput("quadratic_upper_bound_probe: trials must be >= 1");
  const ManifoldSpec& spec = problem.manifold();
  Rng rng(seed);
  std::uniform_int_distribution<int> pick(0, problem.agents() - 1);
  QuadraticBoundProbe out;
  for (long trial = 0; trial < trials; ++trial) {
    const int i = pick(rng);
    const ManifoldPoint x = spec.random_point(rng);
    const ManifoldPoint y = spec.random_point(rng);
    const Matrix gx_e = problem.local_gradient(i, x.value());
    const Matrix gy_e = problem.local_gradient(i, y.value());
    const Matrix gx = spec.riemannian_gradient(x, gx_e).value();
    const Matrix gy = spec.riemannian_gradient(y, gy_e).value();
    const Matrix diff = y.value() - x.value();
    const double dist_sq = diff.squaredNorm();
    out.max_grad_norm = std::max({out.max_grad_norm, gx_e.norm(), gy_e.norm()});
    if (dist_sq == 0.0) continue;
    const double gap = problem.local_objective(i, y.value()) - problem.local_objective(i, x.value()) -
                       (gx.array() * diff.array()).sum();
    out.lg_hat = std::max(out.lg_hat, 2.0 * gap / dist_sq);
    out.grad_lipschitz_ratio = std::max(out.grad_lipschitz_ratio, (gx - gy).norm() / std::sqrt(dist_sq));
  }
  if (!std::isfinite(out.lg_hat) || !std::isfinite(out.grad_lipschitz_ratio)) {
    throw SingularityError("quadratic_upper_bound_probe: non-finite estimate");
  }
  return out;
}

double estimate_lipschitz(const Problem& problem, long trials, std::uint64_t seed) {
  const QuadraticBoundProbe p = quadratic_upper_bound_probe(problem, trials, seed);
  return std::max({p.lg_hat, p.grad_lipschitz_ratio, p.max_grad_norm});
}

// Trace CSV ------------------------------------------------------------------

namespace {

constexpr const char* kHeader =
    "iter,step_size,consensus_error,objective_at_mean,grad_norm_sq,dist_to_truth,wall_ns";

void put(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

template <typename T>
T field_as(std::string_view s, std::size_t line) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError("trace: bad field '" + std::string(s) + "'", line);
  }
  return v;
}

}  // namespace

std::string format_trace_csv(std::span<const TraceRecord> records, bool with_agent_distance) {
  std::string out = kHeader;
  if (with_agent_distance) out += ",mean_agent_distance";
  out.push_back('\n');
  for (const auto& r : records) {
    out += std::to_string(r.iter);
    out.push_back(',');
    put(out, r.step_size);
    out.push_back(',');
    put(out, r.consensus_error);
    out.push_back(',');
    put(out, r.objective_at_mean);
    out.push_back(',');
    put(out, r.grad_norm_sq);
    out.push_back(',');
    if (r.dist_to_truth) put(out, *r.dist_to_truth);
    out.push_back(',');
    out += std::to_string(r.wall_ns);
    if (with_agent_distance) {
      out.push_back(',');
      if (r.mean_agent_distance) put(out, *r.mean_agent_distance);
    }
    out.push_back('\n');
  }
  return out;
}

std::vector<TraceRecord> parse_trace_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("trace: empty file", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  bool extra = false;
  if (line == std::string(kHeader) + ",mean_agent_distance") {
    extra = true;
  } else if (line != kHeader) {
    throw FormatError("trace: unexpected header", 1);
  }
  const std::size_t expected = extra ? 8 : 7;
  std::vector<TraceRecord> records;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      f.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (f.size() != expected) {
      throw FormatError("trace: expected " + std::to_string(expected) + " fields", lineno);
    }
    TraceRecord r;
    r.iter = field_as<long>(f[0], lineno);
    r.step_size = field_as<double>(f[1], lineno);
    r.consensus_error = field_as<double>(f[2], lineno);
    r.objective_at_mean = field_as<double>(f[3], lineno);
    r.grad_norm_sq = field_as<double>(f[4], lineno);
    if (!f[5].empty()) r.dist_to_truth = field_as<double>(f[5], lineno);
    r.wall_ns = field_as<long long>(f[6], lineno);
    if (extra && !f[7].empty()) r.mean_agent_distance = field_as<double>(f[7], lineno);
    records.push_back(r);
  }
  return records;
}

}  // namespace decman
