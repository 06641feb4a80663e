#include "decman/cli.hpp"

#include <cmath>
#include <iostream>
#include <map>
#include <memory>
#include <optional>

#include "CLI11.hpp"

#include "decman/config.hpp"
#include "decman/errors.hpp"
#include "decman/harness.hpp"
#include "decman/manifold.hpp"
#include "decman/parallel.hpp"
#include "decman/problem.hpp"

namespace decman {

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kAbort = 2;

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> sets;
  long workers = 0;
  bool no_clobber = false;
  std::map<std::string, std::string> keys;
};

void add_common(CLI::App* sub, CommonFlags& flags) {
  sub->add_option("--config", flags.config_path, "config file of 'key = value' lines");
  sub->add_option("--set", flags.sets, "override a config key, key=value (repeatable)");
  sub->add_option("--workers", flags.workers, "worker threads (default: MC_WORKERS, then all cores)");
  sub->add_flag("--no-clobber", flags.no_clobber, "refuse to overwrite existing outputs");
  for (const auto& key : Config::keys()) {
    std::string help = key.help;
    if (*key.default_value) help += " [" + std::string(key.default_value) + "]";
    sub->add_option_function<std::string>(
        std::string("--") + key.name,
        [&flags, name = std::string(key.name)](const std::string& v) { flags.keys[name] = v; }, help);
  }
}

Config resolve(const CommonFlags& flags) {
  Config cfg = flags.config_path.empty() ? Config() : Config::load(flags.config_path);
  for (const auto& [k, v] : flags.keys) cfg.set(k, v);
  for (const auto& s : flags.sets) cfg.assign(s);
  return cfg;
}

struct CheckFlags {
  std::string manifold = "stiefel";
  int d = 10;
  int r = 5;
  long trials = 1000;
  double noise = 0.0;
  std::uint64_t seed = 1;
};

int do_check(const CheckFlags& f, std::ostream& out) {
  if (f.d < 1 || f.r < 1 || f.r > f.d) throw ConfigError("--r", "need 1 <= r <= d");
  if (f.trials < 1) throw ConfigError("--trials", "must be >= 1");
  std::optional<ManifoldSpec> spec;
  if (f.manifold == "stiefel") {
    spec = ManifoldSpec::stiefel(f.d, f.r);
  } else if (f.manifold == "gstiefel") {
    Rng rng(f.seed);
    const Matrix q = random_orthogonal(f.d, rng);
    const auto exps = default_lambda_exponents(f.d);
    Vector lambda(f.d);
    for (int j = 0; j < f.d; ++j) lambda(j) = std::pow(1.1, exps[j]);
    spec = ManifoldSpec::generalized_stiefel(q * lambda.asDiagonal() * q.transpose(), f.r);
  } else {
    throw ConfigError("--manifold", "unknown manifold '" + f.manifold + "' (stiefel|gstiefel)");
  }
  const double noise = f.noise > 0.0 ? f.noise : spec->gamma();
  if (noise > spec->gamma()) throw ConfigError("--noise", "must not exceed gamma");
  const ProjectionReport rep = check_projection_lipschitz(*spec, f.trials, noise, f.seed);
  const std::vector<double> scales = {1e-1, 1e-2, 1e-3, 1e-4};
  const auto profile = quadratic_ratio_profile(*spec, scales, std::min(f.trials, 200L), true, f.seed);
  const double gap = normal_inequality_gap(*spec, f.trials, f.seed);
  out << "manifold = " << f.manifold << "\n";
  out << "gamma = " << format_double(spec->gamma()) << "\n";
  out << "samples = " << rep.samples << "\n";
  out << "skipped = " << rep.skipped << "\n";
  out << "max_ratio_lip = " << format_double(rep.max_ratio_lip) << "\n";
  out << "max_ratio_quad = " << format_double(rep.max_ratio_quad) << "\n";
  for (std::size_t i = 0; i < scales.size(); ++i) {
    out << "quad_ratio[" << format_double(scales[i]) << "] = " << format_double(profile[i]) << "\n";
  }
  out << "normal_inequality_gap = " << format_double(gap) << "\n";
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Decentralized optimization on Stiefel manifolds", "decman"};
  app.require_subcommand(0, 1);

  CommonFlags gen_flags, run_flags, sweep_flags, rate_flags;
  CheckFlags check_flags;
  auto* gen = app.add_subcommand("gen-data", "generate a dataset bundle into out.dir");
  auto* run = app.add_subcommand("run", "run one experiment, writing trace.csv and manifest.txt");
  auto* sw = app.add_subcommand("sweep", "grid search over sweep.betas");
  auto* rate = app.add_subcommand("rate-study", "consensus-only run with per-step contraction ratios");
  auto* check = app.add_subcommand("check", "projection inequality probes");
  add_common(gen, gen_flags);
  add_common(run, run_flags);
  add_common(sw, sweep_flags);
  add_common(rate, rate_flags);
  check->add_option("--manifold", check_flags.manifold, "stiefel | gstiefel")->capture_default_str();
  check->add_option("--d", check_flags.d, "rows")->capture_default_str();
  check->add_option("--r", check_flags.r, "columns")->capture_default_str();
  check->add_option("--trials", check_flags.trials, "samples")->capture_default_str();
  check->add_option("--noise", check_flags.noise, "perturbation radius, 0 = gamma")->capture_default_str();
  check->add_option("--seed", check_flags.seed, "sampling seed")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kConfigError;
  }
  if (app.get_subcommands().empty()) {
    err << app.help();
    return kConfigError;
  }

  auto pool_for = [](const CommonFlags& f) {
    return std::make_unique<WorkerPool>(WorkerPool::resolve_workers(f.workers));
  };

  try {
    if (check->parsed()) return do_check(check_flags, out);
    if (gen->parsed()) {
      const Config cfg = resolve(gen_flags);
      out << "bundle: " << gen_data(cfg).string() << "\n";
      return kOk;
    }
    if (run->parsed()) {
      const Config cfg = resolve(run_flags);
      auto pool = pool_for(run_flags);
      const RunOutcome res = run_experiment(cfg, pool.get(), run_flags.no_clobber);
      out << "trace: " << res.trace_path.string() << "\n";
      if (res.trace.abort) {
        err << "error: " << res.trace.abort->message << "\n";
        return kAbort;
      }
      return kOk;
    }
    if (sw->parsed()) {
      const Config cfg = resolve(sweep_flags);
      auto pool = pool_for(sweep_flags);
      const SweepOutcome res = sweep(cfg, pool.get(), sweep_flags.no_clobber);
      out << "best_beta = " << format_double(res.best_beta()) << "\n";
      return kOk;
    }
    if (rate->parsed()) {
      const Config cfg = resolve(rate_flags);
      auto pool = pool_for(rate_flags);
      const RateStudy res = rate_study(cfg, pool.get(), rate_flags.no_clobber);
      out << "sigma2 = " << format_double(res.sigma2) << "\n";
      out << "t = " << res.t << "\n";
      out << "tail_fit = " << format_double(res.tail_fit) << "\n";
      out << "ratios_within_bound = " << (res.within_bound ? "true" : "false") << "\n";
      if (res.abort) {
        err << "error: " << res.abort->message << "\n";
        return kAbort;
      }
      return kOk;
    }
  } catch (const TubeViolation& e) {
    err << "error: " << e.what() << "\n";
    return kAbort;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kConfigError;
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace decman
