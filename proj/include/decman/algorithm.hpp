#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "decman/manifold.hpp"
#include "decman/metrics.hpp"
#include "decman/network.hpp"
#include "decman/parallel.hpp"
#include "decman/problem.hpp"

namespace decman {

enum class AlgorithmKind { Consensus, Dprgd, Dprgt };

std::string to_string(AlgorithmKind kind);
AlgorithmKind parse_algorithm(const std::string& name);

/// Constant: alpha_k = beta. Diminishing: alpha_k = beta / sqrt(k + 1).
struct StepSchedule {
  enum class Kind { Constant, Diminishing };
  Kind kind = Kind::Constant;
  double beta = 0.0;

  double at(long k) const;
};

struct RunConfig {
  AlgorithmKind algorithm = AlgorithmKind::Dprgt;
  int t = 1;
  StepSchedule schedule;
  long max_iters = 100;
  std::uint64_t seed = 1;
  /// Stop once consensus error and grad_norm_sq at the mean are both <= eps.
  std::optional<double> stop_eps;
  long trace_every = 1;
  bool per_agent_distance = false;
  bool wall_clock = false;
};

struct AgentSystem {
  std::vector<ManifoldPoint> points;
  /// s_i, present for gradient tracking only.
  std::optional<std::vector<Matrix>> tracker;
  /// Riemannian gradients at the current points, reused by the tracker update.
  std::optional<std::vector<Matrix>> last_grads;

  int n() const { return static_cast<int>(points.size()); }
  StackedState values() const;
};

struct InitMode {
  enum class Kind { Identical, Perturbed };
  Kind kind = Kind::Identical;
  double delta = 0.0;
};

/// Identical copies of one seeded random point, or copies perturbed along
/// random tangent directions of norm delta and projected back. delta is
/// halved until max_i ||x_i - xbar|| <= gamma / 2.
AgentSystem init_system(const ManifoldSpec& spec, int n, const InitMode& mode, std::uint64_t seed);
AgentSystem init_system(const Problem& problem, const InitMode& mode, std::uint64_t seed);

/// s_i = grad f_i(x_i), also cached into last_grads.
void init_tracker(AgentSystem& sys, const Problem& problem, WorkerPool* pool = nullptr);

/// All step functions throw TubeViolation(iteration, agent, ...) when a
/// projection fails; `iteration` is the index of the iterate being produced.
AgentSystem consensus_step(const AgentSystem& sys, const ManifoldSpec& spec, const MixingMatrix& m,
                           int t, WorkerPool* pool = nullptr, long iteration = 1);
AgentSystem dprgd_step(const AgentSystem& sys, const Problem& problem, const MixingMatrix& m, int t,
                       double alpha, WorkerPool* pool = nullptr, long iteration = 1);
AgentSystem dprgt_step(const AgentSystem& sys, const Problem& problem, const MixingMatrix& m, int t,
                       double alpha, WorkerPool* pool = nullptr, long iteration = 1);

struct AbortInfo {
  long iteration = 0;
  int agent = -1;
  std::string message;
};

struct Trace {
  std::vector<TraceRecord> records;
  long iterations = 0;
  bool stopped_early = false;
  std::optional<AbortInfo> abort;
  /// Gradient tracking only: ||(1/n) sum_i s_i||^2 for every k = 0..iterations,
  /// the largest deviation of the tracker mean from the gradient mean, and
  /// the largest ||s_i|| seen.
  std::vector<double> tracker_mean_sq;
  double max_tracking_gap = 0.0;
  double max_tracker_norm = 0.0;
  std::optional<AgentSystem> final_state;
};

/// Records are taken at k = 0, every trace_every iterations, and at the last
/// iteration. A projection failure ends the run and is reported in `abort`.
Trace run(const RunConfig& cfg, const Problem& problem, const MixingMatrix& m, AgentSystem init,
          WorkerPool* pool = nullptr);

}  // namespace decman
