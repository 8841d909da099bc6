#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "conelab/evolve.hpp"
#include "conelab/harness.hpp"
#include "conelab/specfun.hpp"

namespace py = pybind11;
using namespace conelab;

namespace {

py::list scan(double re0, double re1, double im0, double im1) {
  const sf::ScanResult r = sf::spectrum_scan(sf::Rect{re0, re1, im0, im1});
  py::list out;
  for (const auto& z : r.zeros) out.append(py::make_tuple(z.location, z.multiplicity));
  return out;
}

py::dict tune(double amplitude, std::uint64_t seed, int order, double window, double tau_max) {
  ExperimentConfig cfg;
  cfg.amplitude = amplitude;
  cfg.seed = seed;
  cfg.grid_order = order;
  cfg.window = window;
  cfg.tau_max = tau_max;
  cfg.shape = random_shape(seed, order, cfg.data_radius());
  StabilityReport r;
  {
    py::gil_scoped_release nogil;
    r = tune_blowup_time(cfg);
  }
  py::dict d;
  d["T_star"] = r.T_star;
  d["strichartz_integral"] = r.strichartz_integral;
  d["sup_H_norm"] = r.sup_H_norm;
  d["initial_H_norm"] = r.initial_H_norm;
  d["terminal_coefficient"] = r.terminal_coefficient;
  d["tail_fraction"] = r.tail_fraction;
  d["correction"] = r.correction;
  d["iterations"] = r.iterations;
  d["converged"] = r.converged;
  d["times"] = r.times;
  d["projection"] = r.projection;
  return d;
}

// Runs suites against a config given as text; returns (exit code, manifest json).
py::tuple run(const std::vector<std::string>& suites, const std::string& config_text, const std::string& out) {
  try {
    const harness::Config cfg = harness::Config::parse(config_text, "<python>");
    harness::RunManifest m;
    {
      py::gil_scoped_release nogil;
      m = harness::run_experiment(cfg, suites);
    }
    if (!out.empty()) harness::emit_report(m, out);
    return py::make_tuple(harness::exit_code(m), harness::manifest_json(m));
  } catch (const harness::ConfigError& e) {
    return py::make_tuple(2, std::string(e.what()));
  }
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the conelab numerical core.";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<DegenerateError>(m, "DegenerateError", PyExc_ArithmeticError);

  m.def("c5", &c5);
  m.def("hyp2f1", [](cplx a, cplx b, cplx c, cplx z) { return sf::hyp2f1({a, b, c}, z); }, py::arg("a"),
        py::arg("b"), py::arg("c"), py::arg("z"));
  m.def("connection_coefficient", [](cplx lam) { return sf::connection_coefficient(lam); }, py::arg("lam"));
  m.def("spectrum_scan", &scan, py::arg("re_min") = 0.05, py::arg("re_max") = 2.0, py::arg("im_min") = -10.0,
        py::arg("im_max") = 10.0, "Zeros of the connection coefficient in a rectangle as (location, multiplicity).");
  m.def("w0", [](cplx lam) { return compute_w0(lam, PotentialSpec::linearised()); }, py::arg("lam"));
  m.def(
      "unstable_eigenvalue",
      [](int order) { return riesz_setup(RadialGrid::make(order)).eigenvalue; }, py::arg("order"),
      "Discrete eigenvalue of the linearised operator nearest 1.");
  m.def("nonlinearity", &nonlinearity, py::arg("x"));
  m.def("tune_blowup_time", &tune, py::arg("amplitude"), py::arg("seed") = 20241014, py::arg("order") = 32,
        py::arg("window") = 0.1, py::arg("tau_max") = 10.0);
  m.def("suite_names", &harness::suite_names);
  m.def("run", &run, py::arg("suites"), py::arg("config") = "", py::arg("out") = "");
  m.def("version", &harness::tool_version);
}
