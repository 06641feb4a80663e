#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "decman/algorithm.hpp"
#include "decman/config.hpp"
#include "decman/network.hpp"
#include "decman/parallel.hpp"
#include "decman/problem.hpp"

namespace decman {

/// Everything a run needs, resolved from a Config.
struct Experiment {
  std::unique_ptr<Problem> problem;
  std::optional<Graph> graph;
  std::optional<MixingMatrix> mixing;
  RunConfig run;
  InitMode init;
};

/// Generated from problem.* keys, or loaded from problem.path / problem.data.
std::unique_ptr<Problem> make_problem(const Config& cfg);
Graph make_graph(const Config& cfg, int n);
Experiment build_experiment(const Config& cfg);

struct RunOutcome {
  std::filesystem::path trace_path;
  Trace trace;
  Config resolved;
  long long wall_ns = 0;
};

/// Writes <out.dir>/trace.csv and <out.dir>/manifest.txt (plus points/ when
/// out.save_points). With no_clobber an existing trace is an error.
RunOutcome run_experiment(const Config& cfg, WorkerPool* pool = nullptr, bool no_clobber = false);

struct SweepEntry {
  double beta = 0.0;
  double alpha = 0.0;
  double score = 0.0;  // +inf when the candidate aborted
  bool aborted = false;
};

struct SweepOutcome {
  std::vector<SweepEntry> entries;
  std::size_t best = 0;
  double best_beta() const { return entries[best].beta; }
};

/// Runs every sweep.betas candidate with identical seeds into
/// <out.dir>/candidate_<i>/ and writes <out.dir>/sweep.csv. Lowest final
/// score wins; ties go to the earlier candidate.
SweepOutcome sweep(const Config& cfg, WorkerPool* pool = nullptr, bool no_clobber = false);

struct RateStudy {
  double sigma2 = 0.0;
  int t = 1;
  double rate = 0.0;   // sigma2^t
  double bound = 0.0;  // 2 sigma2^t + 1e-6
  /// e_k = ||x_k - xbar_k|| over the stacked state.
  std::vector<double> errors;
  /// e_{k+1} / e_k while both errors are >= 1e-13; below that the ratio
  /// measures rounding noise.
  std::vector<double> ratios;
  double tail_fit = 0.0;
  bool within_bound = true;
  std::optional<AbortInfo> abort;
};

/// Geometric mean of the last ceil(len/2) ratios; 0 for an empty window.
double tail_geometric_fit(const std::vector<double>& ratios);

/// Forces algo.kind = consensus. Writes trace.csv, rates.csv and manifest.txt.
RateStudy rate_study(const Config& cfg, WorkerPool* pool = nullptr, bool no_clobber = false);

/// Generates the configured problem and writes it as a bundle to out.dir.
std::filesystem::path gen_data(const Config& cfg);

}  // namespace decman
