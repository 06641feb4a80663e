#include "decman/algorithm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "decman/errors.hpp"

namespace decman {

std::string to_string(AlgorithmKind kind) {
  switch (kind) {
    case AlgorithmKind::Consensus: return "consensus";
    case AlgorithmKind::Dprgd: return "dprgd";
    case AlgorithmKind::Dprgt: return "dprgt";
  }
  return "?";
}

AlgorithmKind parse_algorithm(const std::string& name) {
  if (name == "consensus") return AlgorithmKind::Consensus;
  if (name == "dprgd") return AlgorithmKind::Dprgd;
  if (name == "dprgt") return AlgorithmKind::Dprgt;
  throw ConfigError("algo.kind", "unknown algorithm '" + name + "' (consensus|dprgd|dprgt)");
}

double StepSchedule::at(long k) const {
  if (kind == Kind::Constant) return beta;
  return beta / std::sqrt(static_cast<double>(k) + 1.0);
}

StackedState AgentSystem::values() const {
  StackedState out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.value());
  return out;
}

namespace {

template <typename Body>
void for_agents(WorkerPool* pool, int n, Body&& body) {
  if (pool && pool->workers() > 1) {
    pool->parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) { body(static_cast<int>(i)); });
  } else {
    for (int i = 0; i < n; ++i) body(i);
  }
}

ManifoldPoint project_agent(const ManifoldSpec& spec, const Matrix& y, long iteration, int agent) {
  if (!y.allFinite()) throw TubeViolation(iteration, agent, "iterate overflowed before projection");
  try {
    return spec.project(y);
  } catch (const SingularityError& e) {
    throw TubeViolation(iteration, agent, e.what());
  }
}

double max_deviation(const ManifoldSpec& spec, const std::vector<ManifoldPoint>& points) {
  Matrix mean = Matrix::Zero(spec.d(), spec.r());
  for (const auto& p : points) mean += p.value();
  mean /= static_cast<double>(points.size());
  const Matrix bar = spec.project(mean).value();
  double worst = 0.0;
  for (const auto& p : points) worst = std::max(worst, (p.value() - bar).norm());
  return worst;
}

std::vector<ManifoldPoint> build_points(const ManifoldSpec& spec, const ManifoldPoint& base,
                                        const std::vector<Matrix>& directions, double delta) {
  std::vector<ManifoldPoint> points;
  points.reserve(directions.size());
  for (const auto& u : directions) points.push_back(spec.project(base.value() + delta * u));
  return points;
}

}  // namespace

AgentSystem init_system(const ManifoldSpec& spec, int n, const InitMode& mode, std::uint64_t seed) {
  if (n < 1) throw InvalidInput("init_system: need at least one agent");
  if (!(mode.delta >= 0.0)) throw InvalidInput("init_system: delta must be >= 0");
  // Separate stream from the data generators, which may share the seed value.
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x696e6974u};
  Rng rng(seq);
  const ManifoldPoint base = spec.random_point(rng);
  AgentSystem sys;
  if (mode.kind == InitMode::Kind::Identical || mode.delta == 0.0) {
    sys.points.assign(static_cast<std::size_t>(n), base);
    return sys;
  }
  std::vector<Matrix> directions;
  directions.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) directions.push_back(spec.random_tangent(base, 1.0, rng).value());
  double delta = mode.delta;
  for (;;) {
    try {
      sys.points = build_points(spec, base, directions, delta);
      if (max_deviation(spec, sys.points) <= 0.5 * spec.gamma()) return sys;
    } catch (const SingularityError&) {
      // too far out; shrink
    }
    delta *= 0.5;
    if (delta < 1e-300) {
      sys.points.assign(static_cast<std::size_t>(n), base);
      return sys;
    }
  }
}

AgentSystem init_system(const Problem& problem, const InitMode& mode, std::uint64_t seed) {
  return init_system(problem.manifold(), problem.agents(), mode, seed);
}

void init_tracker(AgentSystem& sys, const Problem& problem, WorkerPool* pool) {
  const ManifoldSpec& spec = problem.manifold();
  std::vector<Matrix> grads(sys.points.size());
  for_agents(pool, sys.n(), [&](int i) {
    grads[i] = spec.riemannian_gradient(sys.points[i], problem.local_gradient(i, sys.points[i].value())).value();
  });
  sys.tracker = grads;
  sys.last_grads = std::move(grads);
}

AgentSystem consensus_step(const AgentSystem& sys, const ManifoldSpec& spec, const MixingMatrix& m,
                           int t, WorkerPool* pool, long iteration) {
  const StackedState y = mix(m, sys.values(), t, pool);
  std::vector<std::optional<ManifoldPoint>> next(y.size());
  for_agents(pool, sys.n(), [&](int i) { next[i] = project_agent(spec, y[i], iteration, i); });
  AgentSystem out;
  out.tracker = sys.tracker;
  out.last_grads = sys.last_grads;
  for (auto& p : next) out.points.push_back(std::move(*p));
  return out;
}

AgentSystem dprgd_step(const AgentSystem& sys, const Problem& problem, const MixingMatrix& m, int t,
                       double alpha, WorkerPool* pool, long iteration) {
  const ManifoldSpec& spec = problem.manifold();
  std::vector<Matrix> grads(sys.points.size());
  for_agents(pool, sys.n(), [&](int i) {
    grads[i] = spec.riemannian_gradient(sys.points[i], problem.local_gradient(i, sys.points[i].value())).value();
  });
  const StackedState y = mix(m, sys.values(), t, pool);
  std::vector<std::optional<ManifoldPoint>> next(y.size());
  for_agents(pool, sys.n(), [&](int i) {
    next[i] = project_agent(spec, y[i] - alpha * grads[i], iteration, i);
  });
  AgentSystem out;
  for (auto& p : next) out.points.push_back(std::move(*p));
  return out;
}

AgentSystem dprgt_step(const AgentSystem& sys, const Problem& problem, const MixingMatrix& m, int t,
                       double alpha, WorkerPool* pool, long iteration) {
  if (!sys.tracker || !sys.last_grads) {
    throw InvalidInput("dprgt_step: tracker is not initialized");
  }
  const ManifoldSpec& spec = problem.manifold();
  const int n = sys.n();
  const std::vector<Matrix>& s = *sys.tracker;
  const std::vector<Matrix>& g = *sys.last_grads;

  std::vector<Matrix> v(s.size());
  for_agents(pool, n, [&](int i) { v[i] = spec.project_tangent(sys.points[i], s[i]).value(); });

  const StackedState y = mix(m, sys.values(), t, pool);
  std::vector<std::optional<ManifoldPoint>> next(y.size());
  std::vector<Matrix> g_next(s.size());
  for_agents(pool, n, [&](int i) {
    next[i] = project_agent(spec, y[i] - alpha * v[i], iteration, i);
    g_next[i] =
        spec.riemannian_gradient(*next[i], problem.local_gradient(i, next[i]->value())).value();
  });

  StackedState s_next = mix(m, s, t, pool);
  for (int i = 0; i < n; ++i) s_next[i] += g_next[i] - g[i];

  AgentSystem out;
  for (auto& p : next) out.points.push_back(std::move(*p));
  out.tracker = std::move(s_next);
  out.last_grads = std::move(g_next);
  return out;
}

namespace {

struct Recorder {
  const RunConfig& cfg;
  const Problem& problem;
  WorkerPool* pool;
  std::chrono::steady_clock::time_point start;

  TraceRecord take(const AgentSystem& sys, long k, long abort_iteration) const {
    const ManifoldSpec& spec = problem.manifold();
    InducedMean mean = [&] {
      try {
        return induced_mean(spec, sys.points);
      } catch (const SingularityError& e) {
        throw TubeViolation(abort_iteration, -1, e.what());
      }
    }();
    const Matrix& bar = mean.projected.value();
    TraceRecord r;
    r.iter = k;
    r.step_size = cfg.algorithm == AlgorithmKind::Consensus ? 0.0 : cfg.schedule.at(k);
    r.consensus_error = consensus_error(sys.points, bar);
    r.objective_at_mean = problem.objective(bar, pool);
    r.grad_norm_sq =
        spec.project_tangent(mean.projected, problem.gradient(bar, pool)).value().squaredNorm();
    if (const auto& truth = problem.truth().point) {
      r.dist_to_truth = subspace_distance(bar, *truth);
      if (cfg.per_agent_distance) {
        double acc = 0.0;
        for (const auto& p : sys.points) acc += subspace_distance(p.value(), *truth);
        r.mean_agent_distance = acc / static_cast<double>(sys.points.size());
      }
    }
    if (cfg.wall_clock) {
      r.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    }
    return r;
  }
};

void track(Trace& trace, const AgentSystem& sys) {
  if (!sys.tracker || !sys.last_grads) return;
  const auto& s = *sys.tracker;
  const auto& g = *sys.last_grads;
  Matrix s_mean = Matrix::Zero(s.front().rows(), s.front().cols());
  Matrix g_mean = s_mean;
  for (std::size_t i = 0; i < s.size(); ++i) {
    s_mean += s[i];
    g_mean += g[i];
    trace.max_tracker_norm = std::max(trace.max_tracker_norm, s[i].norm());
  }
  s_mean /= static_cast<double>(s.size());
  g_mean /= static_cast<double>(s.size());
  trace.tracker_mean_sq.push_back(s_mean.squaredNorm());
  trace.max_tracking_gap = std::max(trace.max_tracking_gap, (s_mean - g_mean).norm());
}

}  // namespace

Trace run(const RunConfig& cfg, const Problem& problem, const MixingMatrix& m, AgentSystem init,
          WorkerPool* pool) {
  if (cfg.max_iters < 0) throw ConfigError("run.K", "must be >= 0");
  if (cfg.t < 1) throw ConfigError("algo.t", "must be >= 1");
  if (cfg.trace_every < 1) throw ConfigError("run.trace_every", "must be >= 1");
  if (cfg.algorithm != AlgorithmKind::Consensus && !(cfg.schedule.beta > 0.0)) {
    throw ConfigError("algo.beta", "step size must be positive");
  }
  if (init.n() != problem.agents() || m.n() != problem.agents()) {
    throw ConfigError("problem.n", "agent count differs between problem, network and initial state");
  }

  Recorder rec{cfg, problem, pool, std::chrono::steady_clock::now()};
  Trace trace;
  AgentSystem sys = std::move(init);
  if (cfg.algorithm == AlgorithmKind::Dprgt) {
    if (!sys.tracker) init_tracker(sys, problem, pool);
  } else {
    sys.tracker.reset();
    sys.last_grads.reset();
  }

  auto stop_now = [&](const TraceRecord& r) {
    return cfg.stop_eps && r.consensus_error <= *cfg.stop_eps && r.grad_norm_sq <= *cfg.stop_eps;
  };

  long k = 0;
  try {
    track(trace, sys);
    trace.records.push_back(rec.take(sys, 0, 0));
    if (stop_now(trace.records.back())) {
      trace.stopped_early = cfg.max_iters > 0;
    } else {
      for (; k < cfg.max_iters; ++k) {
        const double alpha = cfg.schedule.at(k);
        switch (cfg.algorithm) {
          case AlgorithmKind::Consensus:
            sys = consensus_step(sys, problem.manifold(), m, cfg.t, pool, k + 1);
            break;
          case AlgorithmKind::Dprgd:
            sys = dprgd_step(sys, problem, m, cfg.t, alpha, pool, k + 1);
            break;
          case AlgorithmKind::Dprgt:
            sys = dprgt_step(sys, problem, m, cfg.t, alpha, pool, k + 1);
            break;
        }
        track(trace, sys);
        const long done = k + 1;
        if (done % cfg.trace_every == 0 || done == cfg.max_iters) {
          trace.records.push_back(rec.take(sys, done, done));
          if (stop_now(trace.records.back())) {
            trace.stopped_early = done < cfg.max_iters;
            k = done;
            break;
          }
        }
      }
    }
  } catch (const TubeViolation& e) {
    trace.abort = AbortInfo{e.iteration(), e.agent(), e.what()};
  }
  trace.iterations = trace.abort ? trace.abort->iteration : k;
  trace.final_state = std::move(sys);
  return trace;
}

}  // namespace decman
