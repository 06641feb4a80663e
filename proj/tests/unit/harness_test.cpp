#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "decman/errors.hpp"
#include "decman/harness.hpp"
#include "decman/matrix_io.hpp"

using namespace decman;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("decman_harness_" + name);
  fs::remove_all(dir);
  return dir;
}

Config small(const fs::path& dir) {
  Config cfg;
  cfg.set("problem.n", "4");
  cfg.set("problem.m_i", "30");
  cfg.set("problem.d", "6");
  cfg.set("problem.r", "2");
  cfg.set("run.K", "50");
  cfg.set("out.dir", dir.string());
  return cfg;
}

std::string field_of(const Config& cfg) {
  try {
    build_experiment(cfg);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_CASE("config parsing") {
  const Config cfg = Config::parse("# comment\nproblem.n = 4\n\nalgo.kind=dprgd  # trailing\nsummary.iterations = 9\n");
  CHECK(cfg.get_int("problem.n") == 4);
  CHECK(cfg.get("algo.kind") == "dprgd");
  CHECK(cfg.get("graph.topology") == "ring");
  try {
    Config::parse("problem.nn = 4\n");
    FAIL("unknown key must fail");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "problem.nn");
  }
  CHECK_THROWS_AS(Config::parse("just words\n"), FormatError);
  CHECK_THROWS_AS(Config::load("/nonexistent/decman.cfg"), ConfigError);

  Config c;
  c.assign("sweep.betas=0.1,0.3, 1");
  CHECK(c.get_doubles("sweep.betas") == std::vector<double>{0.1, 0.3, 1.0});
  CHECK(!c.get_optional_double("run.eps"));
  CHECK_THROWS_AS(c.assign("no equals sign"), ConfigError);
  c.set("run.K", "abc");
  CHECK_THROWS_AS(c.get_int("run.K"), ConfigError);

  // A printed config reads back unchanged.
  CHECK(Config::parse(cfg.to_text()).to_text() == cfg.to_text());
  CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("experiment construction") {
  Config cfg = small(scratch("build"));
  const Experiment ex = build_experiment(cfg);
  CHECK(ex.problem->agents() == 4);
  CHECK(ex.run.t == 1);
  CHECK(ex.run.schedule.beta == doctest::Approx(0.3 * 4 / 120.0));

  cfg.set("algo.t", "auto");
  cfg.set("problem.n", "8");
  cfg.set("problem.d", "10");
  cfg.set("problem.r", "5");
  CHECK(build_experiment(cfg).run.t == 31);

  cfg = small(scratch("build"));
  cfg.set("algo.step", "horizon");
  cfg.set("algo.beta", "0.5");
  cfg.set("run.K", "100");
  CHECK(build_experiment(cfg).run.schedule.beta == doctest::Approx(0.05));
  cfg.set("algo.step", "diminishing");
  CHECK(build_experiment(cfg).run.schedule.kind == StepSchedule::Kind::Diminishing);
  cfg.set("algo.step", "theory");
  CHECK(build_experiment(cfg).run.schedule.beta > 0.0);
}

TEST_CASE("configuration errors name their field") {
  const fs::path dir = scratch("errors");
  Config cfg = small(dir);
  cfg.set("problem.kind", "svd");
  CHECK(field_of(cfg) == "problem.kind");
  cfg = small(dir);
  cfg.set("problem.r", "9");
  CHECK(field_of(cfg) == "problem.r");
  cfg = small(dir);
  cfg.set("graph.topology", "star");
  CHECK(field_of(cfg) == "graph.topology");
  cfg = small(dir);
  cfg.set("algo.kind", "adam");
  CHECK(field_of(cfg) == "algo.kind");
  cfg = small(dir);
  cfg.set("algo.step", "lucky");
  CHECK(field_of(cfg) == "algo.step");
  cfg = small(dir);
  cfg.set("algo.t", "0");
  CHECK(field_of(cfg) == "algo.t");
  cfg = small(dir);
  cfg.set("run.K", "-1");
  CHECK(field_of(cfg) == "run.K");
  cfg = small(dir);
  cfg.set("init.mode", "zero");
  CHECK(field_of(cfg) == "init.mode");
  cfg = small(dir);
  cfg.set("algo.beta", "0");
  CHECK(field_of(cfg) == "algo.beta");
}

TEST_CASE("run writes trace and manifest") {
  const fs::path dir = scratch("run");
  Config cfg = small(dir);
  cfg.set("out.save_points", "true");
  const RunOutcome res = run_experiment(cfg);
  REQUIRE(fs::exists(dir / "trace.csv"));
  REQUIRE(fs::exists(dir / "manifest.txt"));
  CHECK(fs::exists(dir / "points" / "agent_3.csv"));
  const auto records = parse_trace_csv(read_file(dir / "trace.csv"));
  CHECK(records == res.trace.records);
  CHECK(records.back().iter == 50);

  const std::string manifest = read_file(dir / "manifest.txt");
  CHECK(manifest.find("summary.iterations = 50") != std::string::npos);
  CHECK(manifest.find("summary.max_tracking_gap") != std::string::npos);
  // The manifest doubles as a config.
  const Config echo = Config::parse(manifest);
  CHECK(echo.to_text() == cfg.to_text());

  CHECK_THROWS_AS(run_experiment(cfg, nullptr, true), ConfigError);
  CHECK_NOTHROW(run_experiment(cfg, nullptr, false));
}

TEST_CASE("runs are reproducible from the manifest and across worker counts") {
  const fs::path a = scratch("repro_a");
  const fs::path b = scratch("repro_b");
  Config cfg = small(a);
  cfg.set("graph.topology", "er");
  cfg.set("init.mode", "perturbed");
  cfg.set("init.delta", "0.1");
  run_experiment(cfg);
  Config again = Config::load(a / "manifest.txt");
  again.set("out.dir", b.string());
  WorkerPool pool(4);
  run_experiment(again, &pool);
  CHECK(read_file(a / "trace.csv") == read_file(b / "trace.csv"));
}

TEST_CASE("data file and bundle inputs") {
  const fs::path dir = scratch("inputs");
  fs::create_directories(dir);
  Rng rng(1);
  const Matrix a = gaussian_matrix(40, 6, rng);
  save_matrix(dir / "a.csv", a, MatrixFormat::Csv);
  Config cfg = small(dir / "out");
  cfg.set("problem.data", (dir / "a.csv").string());
  const auto p = make_problem(cfg);
  CHECK(p->agents() == 4);
  CHECK(p->total_samples() == 40);
  REQUIRE(p->truth().point.has_value());

  cfg.set("problem.n", "7");
  CHECK_THROWS_AS(make_problem(cfg), ConfigError);

  Config gen = small(dir / "bundle");
  gen.set("problem.kind", "lrmc");
  gen.set("problem.m", "20");
  gen.set("problem.T", "40");
  gen.set("problem.r", "2");
  const fs::path bundle = gen_data(gen);
  Config from = small(dir / "out2");
  from.set("problem.path", bundle.string());
  const auto lrmc = make_problem(from);
  CHECK(lrmc->kind() == "lrmc");
  CHECK(lrmc->agents() == 4);
}

TEST_CASE("sweep picks the smallest final score") {
  const fs::path dir = scratch("sweep");
  Config cfg = small(dir);
  cfg.set("run.K", "200");
  cfg.set("sweep.betas", "0.01,0.3,0.3");
  const SweepOutcome res = sweep(cfg);
  REQUIRE(res.entries.size() == 3);
  CHECK(res.best == 1);
  CHECK(res.entries[1].score == res.entries[2].score);
  CHECK(fs::exists(dir / "candidate_0" / "trace.csv"));
  CHECK(fs::exists(dir / "sweep.csv"));
  cfg.set("sweep.betas", "");
  CHECK_THROWS_AS(sweep(cfg), ConfigError);
}

TEST_CASE("tail geometric fit") {
  CHECK(tail_geometric_fit({}) == 0.0);
  CHECK(tail_geometric_fit({0.5}) == doctest::Approx(0.5));
  CHECK(tail_geometric_fit({9.0, 0.25, 0.25, 0.25}) == doctest::Approx(0.25));
  CHECK(tail_geometric_fit({9.0, 0.1, 0.4}) == doctest::Approx(0.2));
}

TEST_CASE("rate study on Ring n=8") {
  const fs::path dir = scratch("rate");
  Config cfg;
  cfg.set("problem.m_i", "20");
  cfg.set("init.mode", "perturbed");
  cfg.set("init.delta", "0.1");
  cfg.set("run.K", "200");
  cfg.set("out.dir", dir.string());
  const RateStudy rs = rate_study(cfg);
  CHECK(rs.sigma2 == doctest::Approx(1.0 / 3.0 + 2.0 / 3.0 * std::cos(M_PI / 4.0)));
  CHECK(rs.t == 1);
  CHECK(rs.within_bound);
  CHECK(rs.tail_fit >= 0.9 * rs.rate);
  CHECK(rs.tail_fit <= 2.0 * rs.rate);
  CHECK(fs::exists(dir / "rates.csv"));
  CHECK(!rs.abort);
}
