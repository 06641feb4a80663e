#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <memory>
#include <sstream>

#include "decman/algorithm.hpp"
#include "decman/cli.hpp"
#include "decman/errors.hpp"
#include "decman/harness.hpp"
#include "decman/metrics.hpp"

namespace py = pybind11;
using namespace decman;

namespace {

Config to_config(const std::map<std::string, std::string>& values) {
  Config cfg;
  for (const auto& [k, v] : values) cfg.set(k, v);
  return cfg;
}

Topology parse_topology(const std::string& name) {
  if (name == "ring") return Topology::Ring;
  if (name == "complete") return Topology::Complete;
  if (name == "er") return Topology::ErdosRenyi;
  throw InvalidInput("unknown topology '" + name + "' (ring|complete|er)");
}

py::dict trace_columns(const Trace& trace) {
  const std::size_t n = trace.records.size();
  std::vector<long> iter(n);
  std::vector<double> step(n), ce(n), obj(n), grad(n), dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const TraceRecord& r = trace.records[i];
    iter[i] = r.iter;
    step[i] = r.step_size;
    ce[i] = r.consensus_error;
    obj[i] = r.objective_at_mean;
    grad[i] = r.grad_norm_sq;
    dist[i] = r.dist_to_truth.value_or(std::numeric_limits<double>::quiet_NaN());
  }
  py::dict out;
  out["iter"] = iter;
  out["step_size"] = step;
  out["consensus_error"] = ce;
  out["objective_at_mean"] = obj;
  out["grad_norm_sq"] = grad;
  out["dist_to_truth"] = dist;
  out["iterations"] = trace.iterations;
  out["stopped_early"] = trace.stopped_early;
  out["max_tracking_gap"] = trace.max_tracking_gap;
  out["tracker_mean_sq"] = trace.tracker_mean_sq;
  if (trace.abort) {
    out["abort"] = py::dict(py::arg("iteration") = trace.abort->iteration, py::arg("agent") = trace.abort->agent,
                            py::arg("message") = trace.abort->message);
  } else {
    out["abort"] = py::none();
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_decman, m) {
  m.doc() = "Decentralized optimization on Stiefel manifolds";

  static py::exception<Error> base(m, "Error");
  static py::exception<InvalidInput> invalid(m, "InvalidInput", base.ptr());
  static py::exception<SingularityError> singular(m, "SingularityError", base.ptr());
  static py::exception<FormatError> format(m, "FormatError", base.ptr());
  static py::exception<ConfigError> config(m, "ConfigError", base.ptr());
  static py::exception<TubeViolation> tube(m, "TubeViolation", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InvalidInput& e) {
      py::set_error(invalid, e.what());
    } catch (const SingularityError& e) {
      py::set_error(singular, e.what());
    } catch (const FormatError& e) {
      py::set_error(format, e.what());
    } catch (const ConfigError& e) {
      py::set_error(config, e.what());
    } catch (const TubeViolation& e) {
      py::set_error(tube, e.what());
    } catch (const Error& e) {
      py::set_error(base, e.what());
    }
  });

  py::class_<ManifoldSpec>(m, "ManifoldSpec")
      .def_static("stiefel", &ManifoldSpec::stiefel, py::arg("d"), py::arg("r"), py::arg("gamma") = 0.5)
      .def_static("generalized_stiefel", &ManifoldSpec::generalized_stiefel, py::arg("b"), py::arg("r"),
                  py::arg("gamma") = py::none())
      .def_property_readonly("kind",
                             [](const ManifoldSpec& s) {
                               return s.kind() == ManifoldKind::Stiefel ? "stiefel" : "gstiefel";
                             })
      .def_property_readonly("d", &ManifoldSpec::d)
      .def_property_readonly("r", &ManifoldSpec::r)
      .def_property_readonly("gamma", &ManifoldSpec::gamma)
      .def("diameter_bound", &ManifoldSpec::diameter_bound)
      .def("feasibility_residual", &ManifoldSpec::feasibility_residual, py::arg("x"))
      .def("project", [](const ManifoldSpec& s, const Matrix& y) { return s.project(y).value(); }, py::arg("y"))
      .def(
          "project_tangent",
          [](const ManifoldSpec& s, const Matrix& x, const Matrix& u) {
            return s.project_tangent(s.point(x), u).value();
          },
          py::arg("x"), py::arg("u"))
      .def(
          "random_point",
          [](const ManifoldSpec& s, std::uint64_t seed) {
            Rng rng(seed);
            return s.random_point(rng).value();
          },
          py::arg("seed") = 1);

  py::class_<Problem, std::shared_ptr<Problem>>(m, "Problem")
      .def_property_readonly("kind", &Problem::kind)
      .def_property_readonly("agents", &Problem::agents)
      .def_property_readonly("total_samples", &Problem::total_samples)
      .def_property_readonly("manifold", &Problem::manifold, py::return_value_policy::copy)
      .def_property_readonly("truth_point", [](const Problem& p) { return p.truth().point; })
      .def_property_readonly("truth_value", [](const Problem& p) { return p.truth().value; })
      .def("local_objective", &Problem::local_objective, py::arg("agent"), py::arg("x"))
      .def("local_gradient", &Problem::local_gradient, py::arg("agent"), py::arg("x"))
      .def("objective", [](const Problem& p, const Matrix& x) { return p.objective(x); }, py::arg("x"))
      .def("gradient", [](const Problem& p, const Matrix& x) { return p.gradient(x); }, py::arg("x"));

  m.def(
      "gen_pca",
      [](int n, int m_i, int d, int r, double xi, double scale, std::uint64_t seed) -> std::shared_ptr<Problem> {
        return std::make_shared<PcaProblem>(gen_pca_data({n, m_i, d, r, xi, scale, seed}));
      },
      py::arg("n") = 8, py::arg("m_i") = 1000, py::arg("d") = 10, py::arg("r") = 5, py::arg("xi") = 0.8,
      py::arg("scale") = 0.0, py::arg("seed") = 1);
  m.def(
      "gen_gevp",
      [](int n, int m_i, int d, int r, double xi, std::uint64_t seed,
         std::vector<double> lambda_exponents) -> std::shared_ptr<Problem> {
        GevpParams p;
        p.data = {n, m_i, d, r, xi, 0.0, seed};
        p.lambda_exponents = std::move(lambda_exponents);
        return std::make_shared<GevpProblem>(gen_gevp_data(p));
      },
      py::arg("n") = 8, py::arg("m_i") = 1000, py::arg("d") = 10, py::arg("r") = 5, py::arg("xi") = 0.8,
      py::arg("seed") = 1, py::arg("lambda_exponents") = std::vector<double>{});
  m.def(
      "gen_lrmc",
      [](int n, int rows, int cols, int r, double nu, std::uint64_t seed) -> std::shared_ptr<Problem> {
        return std::make_shared<LrmcProblem>(gen_lrmc_data({n, rows, cols, r, nu, seed}));
      },
      py::arg("n") = 8, py::arg("m") = 100, py::arg("T") = 1000, py::arg("r") = 5, py::arg("nu") = 0.0,
      py::arg("seed") = 1);

  m.def(
      "mixing_matrix",
      [](const std::string& topology, int n, double p, std::uint64_t seed) {
        const MixingMatrix w = metropolis_weights(build_graph({parse_topology(topology), p}, n, seed));
        return py::make_tuple(w.weights(), w.sigma2());
      },
      py::arg("topology") = "ring", py::arg("n") = 8, py::arg("p") = 0.6, py::arg("seed") = 1,
      "Metropolis weights of a generated graph; returns (W, sigma2).");
  m.def("consensus_radius_t", &consensus_radius_t, py::arg("sigma2"), py::arg("gamma"), py::arg("zeta"),
        py::arg("n"));
  m.def("subspace_distance", &subspace_distance, py::arg("x"), py::arg("x_star"));
  m.def(
      "check_projection_lipschitz",
      [](const ManifoldSpec& spec, long trials, double noise, std::uint64_t seed) {
        const ProjectionReport r = check_projection_lipschitz(spec, trials, noise, seed);
        return py::dict(py::arg("max_ratio_lip") = r.max_ratio_lip, py::arg("max_ratio_quad") = r.max_ratio_quad,
                        py::arg("samples") = r.samples, py::arg("skipped") = r.skipped);
      },
      py::arg("spec"), py::arg("trials") = 1000, py::arg("noise") = 0.5, py::arg("seed") = 1);

  m.def("config_keys", [] {
    std::vector<std::tuple<std::string, std::string, std::string>> out;
    for (const auto& k : Config::keys()) out.emplace_back(k.name, k.default_value, k.help);
    return out;
  });
  m.def(
      "run",
      [](const std::map<std::string, std::string>& values, std::size_t workers) {
        Trace trace;
        {
          py::gil_scoped_release release;
          const Experiment ex = build_experiment(to_config(values));
          WorkerPool pool(workers);
          trace = run(ex.run, *ex.problem, *ex.mixing, init_system(*ex.problem, ex.init, ex.run.seed), &pool);
        }
        return trace_columns(trace);
      },
      py::arg("config"), py::arg("workers") = 1, "Runs in memory and returns the trace as columns.");
  m.def(
      "run_experiment",
      [](const std::map<std::string, std::string>& values, std::size_t workers, bool no_clobber) {
        py::gil_scoped_release release;
        WorkerPool pool(workers);
        return run_experiment(to_config(values), &pool, no_clobber).trace_path.string();
      },
      py::arg("config"), py::arg("workers") = 1, py::arg("no_clobber") = false,
      "Runs and writes trace.csv and manifest.txt to out.dir; returns the trace path.");
  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in process; returns (exit_code, stdout, stderr).");
}
