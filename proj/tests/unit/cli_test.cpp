#include "doctest.h"

#include <filesystem>
#include <sstream>

#include "decman/cli.hpp"
#include "decman/matrix_io.hpp"

using namespace decman;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("decman_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::vector<std::string> small_run(const std::string& sub, const fs::path& dir) {
  return {sub, "--problem.n", "4", "--problem.m_i", "30", "--problem.d", "6", "--problem.r", "2",
          "--run.K", "30", "--out.dir", dir.string(), "--workers", "1"};
}

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(cli({"--help"}).code == 0);
  const Result none = cli({});
  CHECK(none.code == 1);
  CHECK(!none.err.empty());
  CHECK(cli({"frobnicate"}).code == 1);
  CHECK(cli({"run", "--not-a-flag", "1"}).code == 1);
}

TEST_CASE("run subcommand writes outputs") {
  const fs::path dir = scratch("run");
  const Result r = cli(small_run("run", dir));
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "trace.csv"));
  CHECK(fs::exists(dir / "manifest.txt"));

  auto again = small_run("run", dir);
  again.push_back("--no-clobber");
  const Result clobber = cli(again);
  CHECK(clobber.code == 1);
  CHECK(clobber.err.find("out.dir") != std::string::npos);
}

TEST_CASE("config files and overrides") {
  const fs::path dir = scratch("config");
  fs::create_directories(dir);
  write_file(dir / "exp.cfg", "problem.n = 4\nproblem.m_i = 30\nproblem.d = 6\nproblem.r = 2\nrun.K = 10\n");
  const Result r = cli({"run", "--config", (dir / "exp.cfg").string(), "--set", "algo.kind=dprgd", "--set",
                        "out.dir=" + (dir / "out").string()});
  CHECK(r.code == 0);
  CHECK(read_file(dir / "out" / "manifest.txt").find("algo.kind = dprgd") != std::string::npos);

  const Result bad = cli({"run", "--set", "problem.kind=tensor", "--out.dir", (dir / "x").string()});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("problem.kind") != std::string::npos);
  CHECK(cli({"run", "--config", (dir / "missing.cfg").string()}).code == 1);
}

TEST_CASE("gen-data, sweep and rate-study") {
  const fs::path dir = scratch("subs");
  const Result g = cli({"gen-data", "--problem.kind", "gevp", "--problem.n", "2", "--problem.m_i", "10",
                        "--problem.d", "4", "--problem.r", "2", "--out.dir", (dir / "bundle").string()});
  CHECK(g.code == 0);
  CHECK(fs::exists(dir / "bundle" / "meta.json"));

  auto sw = small_run("sweep", dir / "sweep");
  sw.insert(sw.end(), {"--sweep.betas", "0.1,0.3"});
  const Result s = cli(sw);
  CHECK(s.code == 0);
  CHECK(s.out.find("best_beta") != std::string::npos);

  const Result rs = cli({"rate-study", "--problem.m_i", "20", "--init.mode", "perturbed", "--init.delta", "0.1",
                         "--run.K", "100", "--out.dir", (dir / "rate").string()});
  CHECK(rs.code == 0);
  CHECK(rs.out.find("ratios_within_bound = true") != std::string::npos);
}

TEST_CASE("check subcommand") {
  const Result r = cli({"check", "--manifold", "stiefel", "--d", "10", "--r", "5", "--trials", "200"});
  CHECK(r.code == 0);
  CHECK(r.out.find("max_ratio_lip") != std::string::npos);
  CHECK(r.out.find("normal_inequality_gap") != std::string::npos);
  CHECK(cli({"check", "--manifold", "sphere"}).code == 1);
}

TEST_CASE("projection failures exit with code 2") {
  const fs::path dir = scratch("abort");
  // Plain DPRGD with a huge step on LRMC collapses an agent's columns.
  const Result r = cli({"run", "--problem.kind", "lrmc", "--problem.n", "4", "--problem.m", "20", "--problem.T", "40",
                        "--problem.r", "2", "--algo.kind", "dprgd", "--algo.step", "constant", "--algo.beta", "1e3",
                        "--run.K", "50", "--out.dir", dir.string(), "--workers", "1"});
  CHECK(r.code == 2);
  CHECK(r.err.find("projection failed at iteration 14, agent 1") != std::string::npos);
  const std::string manifest = read_file(dir / "manifest.txt");
  CHECK(manifest.find("summary.abort_iteration = 14") != std::string::npos);
  CHECK(manifest.find("summary.abort_agent = 1") != std::string::npos);
  // The trace up to the failure is kept.
  CHECK(!read_file(dir / "trace.csv").empty());
}
