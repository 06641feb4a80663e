#include "decman/harness.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "decman/errors.hpp"
#include "decman/matrix_io.hpp"
#include "decman/metrics.hpp"

namespace decman {

namespace fs = std::filesystem;

namespace {

int positive_int(const Config& cfg, const std::string& key) {
  const long v = cfg.get_int(key);
  if (v < 1 || v > std::numeric_limits<int>::max()) throw ConfigError(key, "must be a positive integer");
  return static_cast<int>(v);
}

PcaParams pca_params(const Config& cfg) {
  PcaParams p;
  p.n = positive_int(cfg, "problem.n");
  p.m_i = positive_int(cfg, "problem.m_i");
  p.d = positive_int(cfg, "problem.d");
  p.r = positive_int(cfg, "problem.r");
  p.xi = cfg.get_double("problem.xi");
  p.scale = cfg.get_double("problem.scale");
  p.seed = cfg.get_u64("problem.seed");
  if (p.r > p.d) throw ConfigError("problem.r", "must not exceed problem.d");
  if (!(p.xi > 0.0 && p.xi <= 1.0)) throw ConfigError("problem.xi", "must lie in (0, 1]");
  return p;
}

std::unique_ptr<Problem> load_dense_pca(const Config& cfg) {
  if (cfg.get("problem.kind") != "pca") {
    throw ConfigError("problem.data", "dense data files are supported for problem.kind = pca only");
  }
  const int n = positive_int(cfg, "problem.n");
  const int r = positive_int(cfg, "problem.r");
  MatrixFormat format;
  try {
    format = parse_matrix_format(cfg.get("problem.format"));
  } catch (const InvalidInput& e) {
    throw ConfigError("problem.format", e.what());
  }
  const double divisor = cfg.get_double("problem.data_scale");
  if (!(divisor > 0.0)) throw ConfigError("problem.data_scale", "must be positive");
  const Matrix a = load_matrix(cfg.get("problem.data"), format, divisor);
  if (a.rows() % n != 0) {
    throw ConfigError("problem.n", std::to_string(a.rows()) + " data rows do not split into " +
                                       std::to_string(n) + " equal blocks");
  }
  if (r > a.cols() || a.rows() < a.cols()) throw ConfigError("problem.r", "incompatible with data shape");
  const ThinSvd svd = thin_svd(a);
  GroundTruth truth;
  truth.point = svd.v.leftCols(r);
  truth.value = -svd.s.head(r).squaredNorm() / (2.0 * n);
  return std::make_unique<PcaProblem>(split_rows(a, n), r, std::move(truth));
}

}  // namespace

std::unique_ptr<Problem> make_problem(const Config& cfg) {
  if (!cfg.empty("problem.path")) return read_bundle(cfg.get("problem.path"));
  if (!cfg.empty("problem.data")) return load_dense_pca(cfg);

  const std::string& kind = cfg.get("problem.kind");
  try {
    if (kind == "pca") return std::make_unique<PcaProblem>(gen_pca_data(pca_params(cfg)));
    if (kind == "gevp") {
      GevpParams p;
      p.data = pca_params(cfg);
      p.lambda_exponents = cfg.get_doubles("problem.lambda_exponents");
      p.gamma = cfg.get_optional_double("manifold.gamma");
      if (!p.lambda_exponents.empty() && static_cast<int>(p.lambda_exponents.size()) != p.data.d) {
        throw ConfigError("problem.lambda_exponents", "expected problem.d entries");
      }
      return std::make_unique<GevpProblem>(gen_gevp_data(p));
    }
    if (kind == "lrmc") {
      LrmcParams p;
      p.n = positive_int(cfg, "problem.n");
      p.m = positive_int(cfg, "problem.m");
      p.T = positive_int(cfg, "problem.T");
      p.r = positive_int(cfg, "problem.r");
      p.nu = cfg.get_double("problem.nu");
      p.seed = cfg.get_u64("problem.seed");
      if (p.r > p.m) throw ConfigError("problem.r", "must not exceed problem.m");
      if (p.T < p.n) throw ConfigError("problem.T", "must be at least problem.n");
      if (p.nu > 1.0) throw ConfigError("problem.nu", "must not exceed 1");
      return std::make_unique<LrmcProblem>(gen_lrmc_data(p));
    }
  } catch (const InvalidInput& e) {
    throw ConfigError("problem", e.what());
  }
  throw ConfigError("problem.kind", "unknown problem '" + kind + "' (pca|gevp|lrmc)");
}

Graph make_graph(const Config& cfg, int n) {
  if (!cfg.empty("graph.path")) {
    Graph g = Graph::from_edge_list(read_file(cfg.get("graph.path")));
    if (g.n() != n) {
      throw ConfigError("graph.path", "graph has " + std::to_string(g.n()) + " nodes but the problem has " +
                                          std::to_string(n) + " agents");
    }
    if (!g.connected()) throw ConfigError("graph.path", "graph is not connected");
    return g;
  }
  TopologySpec spec;
  const std::string& topo = cfg.get("graph.topology");
  if (topo == "ring") {
    spec.kind = Topology::Ring;
  } else if (topo == "complete") {
    spec.kind = Topology::Complete;
  } else if (topo == "er") {
    spec.kind = Topology::ErdosRenyi;
    spec.p = cfg.get_double("graph.p");
    if (!(spec.p >= 0.0 && spec.p <= 1.0)) throw ConfigError("graph.p", "must lie in [0, 1]");
  } else {
    throw ConfigError("graph.topology", "unknown topology '" + topo + "' (ring|complete|er)");
  }
  return build_graph(spec, n, cfg.get_u64("graph.seed"));
}

Experiment build_experiment(const Config& cfg) {
  Experiment ex;
  ex.problem = make_problem(cfg);
  const Problem& problem = *ex.problem;
  const ManifoldSpec& spec = problem.manifold();
  const int n = problem.agents();
  ex.graph = make_graph(cfg, n);

  RunConfig& run = ex.run;
  run.algorithm = parse_algorithm(cfg.get("algo.kind"));
  const MixingMatrix base = metropolis_weights(*ex.graph, 1);
  if (cfg.get("algo.t") == "auto") {
    run.t = consensus_radius_t(base.sigma2(), spec.gamma(), spec.diameter_bound(), n);
  } else {
    run.t = positive_int(cfg, "algo.t");
  }
  ex.mixing = base.with_steps(run.t);

  const long k = cfg.get_int("run.K");
  if (k < 0) throw ConfigError("run.K", "must be >= 0");
  run.max_iters = k;
  run.seed = cfg.get_u64("run.seed");
  run.trace_every = positive_int(cfg, "run.trace_every");
  run.stop_eps = cfg.get_optional_double("run.eps");
  run.per_agent_distance = cfg.get_bool("metrics.per_agent_distance");
  run.wall_clock = cfg.get_bool("out.wall_clock");

  const double beta = cfg.get_double("algo.beta");
  const std::string& step = cfg.get("algo.step");
  StepSchedule& sched = run.schedule;
  if (step == "constant") {
    sched = {StepSchedule::Kind::Constant, beta};
  } else if (step == "sample") {
    sched = {StepSchedule::Kind::Constant, beta * n / static_cast<double>(problem.total_samples())};
  } else if (step == "agents") {
    sched = {StepSchedule::Kind::Constant, beta * n};
  } else if (step == "horizon") {
    sched = {StepSchedule::Kind::Constant, beta / std::sqrt(static_cast<double>(std::max(k, 1L)))};
  } else if (step == "diminishing") {
    sched = {StepSchedule::Kind::Diminishing, beta};
  } else if (step == "theory") {
    const double lip = estimate_lipschitz(problem, 200, run.seed);
    sched = {StepSchedule::Kind::Diminishing, beta * std::min(spec.gamma() / (24.0 * lip), 1.0)};
  } else {
    throw ConfigError("algo.step", "unknown rule '" + step + "'");
  }
  if (run.algorithm != AlgorithmKind::Consensus && !(sched.beta > 0.0)) {
    throw ConfigError("algo.beta", "step size must be positive");
  }

  const std::string& mode = cfg.get("init.mode");
  if (mode == "identical") {
    ex.init.kind = InitMode::Kind::Identical;
  } else if (mode == "perturbed") {
    ex.init.kind = InitMode::Kind::Perturbed;
  } else {
    throw ConfigError("init.mode", "unknown mode '" + mode + "' (identical|perturbed)");
  }
  ex.init.delta = cfg.get_double("init.delta");
  if (ex.init.delta < 0.0) throw ConfigError("init.delta", "must be >= 0");
  return ex;
}

namespace {

fs::path out_dir(const Config& cfg) {
  if (cfg.empty("out.dir")) throw ConfigError("out.dir", "must not be empty");
  return cfg.get("out.dir");
}

void guard(const fs::path& file, bool no_clobber) {
  if (no_clobber && fs::exists(file)) {
    throw ConfigError("out.dir", "'" + file.string() + "' exists and --no-clobber is set");
  }
}

std::string summary_line(const std::string& key, const std::string& value) {
  return "summary." + key + " = " + value + "\n";
}

struct Executed {
  Experiment ex;
  Trace trace;
  long long wall_ns = 0;
};

Executed execute(const Config& cfg, WorkerPool* pool) {
  Executed out{build_experiment(cfg), {}, 0};
  const auto start = std::chrono::steady_clock::now();
  AgentSystem init = init_system(*out.ex.problem, out.ex.init, out.ex.run.seed);
  out.trace = run(out.ex.run, *out.ex.problem, *out.ex.mixing, std::move(init), pool);
  out.wall_ns =
      std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::string manifest_text(const Config& cfg, const Executed& run) {
  std::string text = cfg.to_text();
  const Trace& trace = run.trace;
  const Experiment& ex = run.ex;
  text += summary_line("agents", std::to_string(ex.problem->agents()));
  text += summary_line("edges", std::to_string(ex.graph->edges().size()));
  text += summary_line("sigma2", format_double(ex.mixing->sigma2()));
  text += summary_line("t", std::to_string(ex.run.t));
  text += summary_line("alpha0", format_double(ex.run.schedule.at(0)));
  text += summary_line("iterations", std::to_string(trace.iterations));
  text += summary_line("stopped_early", trace.stopped_early ? "true" : "false");
  if (!trace.records.empty()) {
    const TraceRecord& last = trace.records.back();
    text += summary_line("final_consensus_error", format_double(last.consensus_error));
    text += summary_line("final_objective", format_double(last.objective_at_mean));
    text += summary_line("final_grad_norm_sq", format_double(last.grad_norm_sq));
    if (last.dist_to_truth) text += summary_line("final_dist_to_truth", format_double(*last.dist_to_truth));
  }
  if (ex.problem->truth().value) text += summary_line("f_star", format_double(*ex.problem->truth().value));
  if (ex.run.algorithm == AlgorithmKind::Dprgt) {
    text += summary_line("max_tracking_gap", format_double(trace.max_tracking_gap));
    text += summary_line("max_tracker_norm", format_double(trace.max_tracker_norm));
  }
  if (trace.abort) {
    text += summary_line("abort_iteration", std::to_string(trace.abort->iteration));
    text += summary_line("abort_agent", std::to_string(trace.abort->agent));
    text += summary_line("abort_message", trace.abort->message);
  }
  text += summary_line("wall_ns", std::to_string(run.wall_ns));
  return text;
}

void write_outputs(const Config& cfg, const Executed& run, const fs::path& dir) {
  write_file(dir / "trace.csv", format_trace_csv(run.trace.records, run.ex.run.per_agent_distance));
  if (cfg.get_bool("out.save_points") && run.trace.final_state) {
    const auto& points = run.trace.final_state->points;
    for (std::size_t i = 0; i < points.size(); ++i) {
      save_matrix(dir / "points" / ("agent_" + std::to_string(i) + ".csv"), points[i].value(),
                  MatrixFormat::Csv);
    }
  }
  write_file(dir / "manifest.txt", manifest_text(cfg, run));
}

}  // namespace

RunOutcome run_experiment(const Config& cfg, WorkerPool* pool, bool no_clobber) {
  const fs::path dir = out_dir(cfg);
  guard(dir / "trace.csv", no_clobber);
  Executed run = execute(cfg, pool);
  write_outputs(cfg, run, dir);
  return {dir / "trace.csv", std::move(run.trace), cfg, run.wall_ns};
}

SweepOutcome sweep(const Config& cfg, WorkerPool* pool, bool no_clobber) {
  const std::vector<double> betas = cfg.get_doubles("sweep.betas");
  if (betas.empty()) throw ConfigError("sweep.betas", "needs at least one candidate");
  const std::string& metric = cfg.get("sweep.metric");
  if (metric != "grad_norm_sq" && metric != "objective") {
    throw ConfigError("sweep.metric", "unknown metric '" + metric + "' (grad_norm_sq|objective)");
  }
  const fs::path dir = out_dir(cfg);
  guard(dir / "sweep.csv", no_clobber);

  SweepOutcome out;
  for (std::size_t i = 0; i < betas.size(); ++i) {
    Config candidate = cfg;
    candidate.set("algo.beta", format_double(betas[i]));
    const fs::path sub = dir / ("candidate_" + std::to_string(i));
    candidate.set("out.dir", sub.string());
    Executed run = execute(candidate, pool);
    write_outputs(candidate, run, sub);

    SweepEntry entry;
    entry.beta = betas[i];
    entry.alpha = run.ex.run.schedule.at(0);
    entry.aborted = run.trace.abort.has_value();
    if (entry.aborted || run.trace.records.empty()) {
      entry.score = std::numeric_limits<double>::infinity();
    } else {
      const TraceRecord& last = run.trace.records.back();
      entry.score = metric == "objective" ? last.objective_at_mean : last.grad_norm_sq;
      if (!std::isfinite(entry.score)) entry.score = std::numeric_limits<double>::infinity();
    }
    out.entries.push_back(entry);
    const SweepEntry& best = out.entries[out.best];
    if (entry.score < best.score || (entry.score == best.score && entry.beta < best.beta)) {
      out.best = out.entries.size() - 1;
    }
  }

  std::string csv = "candidate,beta,alpha,score,aborted,best\n";
  for (std::size_t i = 0; i < out.entries.size(); ++i) {
    const SweepEntry& e = out.entries[i];
    csv += std::to_string(i) + "," + format_double(e.beta) + "," + format_double(e.alpha) + "," +
           (std::isinf(e.score) ? std::string("inf") : format_double(e.score)) + "," +
           (e.aborted ? "true" : "false") + "," + (i == out.best ? "true" : "false") + "\n";
  }
  write_file(dir / "sweep.csv", csv);
  return out;
}

double tail_geometric_fit(const std::vector<double>& ratios) {
  if (ratios.empty()) return 0.0;
  const std::size_t len = (ratios.size() + 1) / 2;
  double log_sum = 0.0;
  for (std::size_t i = ratios.size() - len; i < ratios.size(); ++i) {
    if (!(ratios[i] > 0.0)) return 0.0;
    log_sum += std::log(ratios[i]);
  }
  return std::exp(log_sum / static_cast<double>(len));
}

RateStudy rate_study(const Config& cfg_in, WorkerPool* pool, bool no_clobber) {
  Config cfg = cfg_in;
  cfg.set("algo.kind", "consensus");
  cfg.set("run.trace_every", "1");
  const fs::path dir = out_dir(cfg);
  guard(dir / "rates.csv", no_clobber);
  Executed run = execute(cfg, pool);
  write_outputs(cfg, run, dir);

  RateStudy study;
  study.sigma2 = run.ex.mixing->sigma2();
  study.t = run.ex.run.t;
  study.rate = std::pow(study.sigma2, study.t);
  study.bound = 2.0 * study.rate + 1e-6;
  study.abort = run.trace.abort;
  const double n = run.ex.problem->agents();
  for (const auto& r : run.trace.records) study.errors.push_back(std::sqrt(n * r.consensus_error));
  for (std::size_t k = 0; k + 1 < study.errors.size(); ++k) {
    if (study.errors[k] < 1e-13 || study.errors[k + 1] < 1e-13) break;
    study.ratios.push_back(study.errors[k + 1] / study.errors[k]);
  }
  for (const double r : study.ratios) study.within_bound = study.within_bound && r <= study.bound;
  study.tail_fit = tail_geometric_fit(study.ratios);

  std::string csv = "k,error,ratio\n";
  for (std::size_t k = 0; k < study.errors.size(); ++k) {
    csv += std::to_string(k) + "," + format_double(study.errors[k]) + ",";
    if (k < study.ratios.size()) csv += format_double(study.ratios[k]);
    csv += "\n";
  }
  write_file(dir / "rates.csv", csv);

  std::string manifest = manifest_text(cfg, run);
  manifest += summary_line("rate", format_double(study.rate));
  manifest += summary_line("ratio_bound", format_double(study.bound));
  manifest += summary_line("tail_fit", format_double(study.tail_fit));
  manifest += summary_line("ratios_within_bound", study.within_bound ? "true" : "false");
  write_file(dir / "manifest.txt", manifest);
  return study;
}

fs::path gen_data(const Config& cfg) {
  const fs::path dir = out_dir(cfg);
  const auto problem = make_problem(cfg);
  BundleMeta meta;
  meta.kind = problem->kind();
  meta.n = problem->agents();
  meta.r = static_cast<int>(problem->manifold().r());
  meta.d = static_cast<int>(problem->manifold().d());
  meta.seed = cfg.get_u64("problem.seed");
  if (meta.kind == "lrmc") {
    meta.m_i = 0;
    const double nu = cfg.get_double("problem.nu");
    meta.nu = nu > 0.0 ? nu : default_nu(meta.d, cfg.get_int("problem.T"), meta.r);
  } else {
    meta.m_i = static_cast<int>(problem->total_samples() / meta.n);
    meta.xi = cfg.get_double("problem.xi");
  }
  write_bundle(dir, *problem, meta);
  return dir;
}

}  // namespace decman
