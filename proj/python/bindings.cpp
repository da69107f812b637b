#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "mixdyn/cli.hpp"
#include "mixdyn/errors.hpp"
#include "mixdyn/experiments.hpp"
#include "mixdyn/rng.hpp"

namespace py = pybind11;
using namespace mixdyn;

namespace {

cli::RunConfig config_from_dict(const py::dict& settings) {
  KeyValueMap kv;
  for (const auto& [k, v] : settings) kv[py::str(k)] = py::str(v);
  return cli::config_from_map(kv);
}

py::dict conditions_dict(const ConditionReport& c) {
  py::dict d;
  d["cond6_margin"] = c.cond6_margin;
  d["cond7_margin"] = c.cond7_margin;
  d["cond8_margin"] = c.cond8_margin;
  d["cond6_exact"] = c.cond6_exact;
  d["cond7_exact"] = c.cond7_exact;
  d["cond8_exact"] = c.cond8_exact;
  d["eps_nonincreasing"] = c.eps_nonincreasing;
  d["fast_integral"] = c.fast_integral;
  d["slow_integral"] = c.slow_integral;
  d["all_pass"] = c.all_pass();
  return d;
}

py::dict report_dict(const RunReport& r) {
  py::dict d;
  std::vector<double> t, lag_gap, feas, dist, speed;
  for (const MetricSample& m : r.metrics) {
    t.push_back(m.t);
    lag_gap.push_back(m.lag_gap);
    feas.push_back(m.feas);
    dist.push_back(m.dist_min_norm);
    speed.push_back(m.scaled_speed);
  }
  d["t"] = t;
  d["lag_gap"] = lag_gap;
  d["feas"] = feas;
  d["dist_min_norm"] = dist;
  d["scaled_speed"] = speed;
  py::dict slopes;
  for (const NamedFit& f : r.fits) {
    if (f.fit) slopes[py::str(f.quantity)] = f.fit->slope;
  }
  d["slopes"] = slopes;
  d["conditions"] = conditions_dict(r.conditions);
  d["failed"] = r.failed;
  d["failure"] = r.failure;
  d["t_reached"] = r.t_reached;
  d["metrics_csv"] = metrics_csv(r);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the mixdyn primal-dual dynamics library.";

  // Translators are tried newest first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def(
      "run",
      [](const py::dict& settings) {
        const cli::RunConfig cfg = config_from_dict(settings);
        std::optional<RunReport> r;
        {
          py::gil_scoped_release release;
          r.emplace(run_experiment(cfg.spec));
        }
        return report_dict(*r);
      },
      py::arg("settings") = py::dict(),
      "Run one experiment. Keys and values are the configuration-file ones.");

  m.def(
      "audit",
      [](const py::dict& settings) {
        const ExperimentSpec s = resolve_defaults(config_from_dict(settings).spec);
        return conditions_dict(audit_conditions(make_schedule(s)));
      },
      py::arg("settings") = py::dict(), "Condition audit of the configured schedule.");

  m.def(
      "toy_reference",
      [](double mc, double nc, double ec) {
        const ProblemSetup s = build_toy(mc, nc, ec);
        return py::make_tuple(s.min_norm.primal, s.saddle.dual);
      },
      py::arg("m") = 1.0, py::arg("n") = 1.0, py::arg("e") = 1.0,
      "Minimal-norm solution and multiplier of the toy problem.");

  m.def(
      "splitmix64",
      [](std::uint64_t seed, int count) {
        SplitMix64 rng(seed);
        std::vector<std::uint64_t> out;
        for (int i = 0; i < count; ++i) out.push_back(rng.next());
        return out;
      },
      py::arg("seed"), py::arg("count"));

  m.def(
      "main",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"mixdyn"};
        for (const std::string& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the command-line tool; returns (exit code, stdout, stderr).");
}
