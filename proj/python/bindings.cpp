#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ibf/control.hpp"
#include "ibf/covariance.hpp"
#include "ibf/errors.hpp"
#include "ibf/flow.hpp"
#include "ibf/harness.hpp"
#include "ibf/radial.hpp"
#include "ibf/rng.hpp"
#include "ibf/stats.hpp"
#include "ibf/version.hpp"

namespace py = pybind11;
using namespace ibf;

namespace {

// Points as an n x d array on the Python side.
Points from_rows(const Matrix& rows) { return rows.transpose(); }
Matrix to_rows(const Points& pts) { return pts.transpose(); }

Matrix advance_points(const CorrelationFamily& family, const Matrix& rows, double horizon,
                      double dt, std::uint64_t seed, const std::string& sampler) {
  StepScheme scheme;
  scheme.dt = dt;
  scheme.sampler = sampler_from_string(sampler);
  RngStream rng(seed);
  PointCloud cloud{from_rows(rows), 0.0};
  const long long steps = step_count(horizon, dt);
  for (long long s = 0; s < steps; ++s) {
    StepScheme h = scheme;
    h.dt = std::min(dt, horizon - cloud.time);
    cloud = step_points(family, cloud, h, rng);
  }
  return to_rows(cloud.points);
}

// py::vectorize cannot bind through a const self reference.
template <class F>
auto elementwise(F fn) {
  return [fn](const PiecewiseLyapunov& f, py::array_t<double> r) {
    return py::vectorize([&](double x) { return fn(f, x); })(r);
  };
}

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Isotropic Brownian flow experiments";
  m.attr("__version__") = kVersion;

  auto base = py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_RuntimeError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<InsufficientDataError>(m, "InsufficientDataError", PyExc_RuntimeError);
  (void)base;

  py::class_<CorrelationFamily>(m, "CorrelationFamily")
      .def_property_readonly("kind", [](const CorrelationFamily& f) { return to_string(f.kind); })
      .def_readonly("length_scale", &CorrelationFamily::length_scale)
      .def_readonly("mix_weight", &CorrelationFamily::mix_weight)
      .def_readonly("dimension", &CorrelationFamily::dimension)
      .def("__repr__", [](const CorrelationFamily& f) {
        return "CorrelationFamily(" + to_string(f.kind) + ", l=" + std::to_string(f.length_scale) +
               ", d=" + std::to_string(f.dimension) + ")";
      });

  m.def("solenoidal", &solenoidal, py::arg("length_scale") = 1.0, py::arg("dimension") = 2);
  m.def("potential", &potential, py::arg("length_scale") = 1.0, py::arg("dimension") = 2);
  m.def("mixture", &mixture, py::arg("weight"), py::arg("length_scale") = 1.0,
        py::arg("dimension") = 2);

  m.def("correlations", [](const CorrelationFamily& f, double r) {
    const Correlations c = eval_correlations(f, r);
    py::dict d;
    d["bl"] = c.bl;
    d["dbl"] = c.dbl;
    d["d2bl"] = c.d2bl;
    d["bn"] = c.bn;
    d["dbn"] = c.dbn;
    d["d2bn"] = c.d2bn;
    return d;
  });
  m.def("tensor", &eval_tensor, py::arg("family"), py::arg("x"));
  m.def(
      "block_covariance",
      [](const CorrelationFamily& f, const Matrix& rows) { return block_covariance(f, from_rows(rows)); },
      py::arg("family"), py::arg("points"), "Covariance of the stacked velocities at n x d points.");
  m.def("lyapunov_exponents", [](const CorrelationFamily& f) {
    const LyapunovSpectrum s = lyapunov_exponents(f);
    py::dict d;
    d["mu"] = s.mu;
    d["beta_l"] = s.beta_l;
    d["beta_n"] = s.beta_n;
    d["top_positive"] = s.top_positive;
    return d;
  });
  m.def("taylor_radius", &taylor_radius, py::arg("family"), py::arg("eps"));

  m.def("advance_points", &advance_points, py::arg("family"), py::arg("points"),
        py::arg("horizon"), py::arg("dt") = 0.01, py::arg("seed") = 0,
        py::arg("sampler") = "automatic",
        "Moves n x d points along one realisation of the flow.");

  m.def("joint_separations", &joint_separations, py::arg("family"), py::arg("r0"),
        py::arg("horizon"), py::arg("dt"), py::arg("samples"), py::arg("seed"));
  m.def("radial_separations", &radial_separations, py::arg("family"), py::arg("r0"),
        py::arg("horizon"), py::arg("dt"), py::arg("samples"), py::arg("seed"));

  py::class_<PiecewiseLyapunov>(m, "LyapunovFunction")
      .def(py::init(&build_lyapunov_f), py::arg("family"), py::arg("dimension") = 2)
      .def("__call__", elementwise([](const PiecewiseLyapunov& f, double r) { return f.value(r); }))
      .def("d1", elementwise([](const PiecewiseLyapunov& f, double r) { return f.d1(r); }))
      .def("d2", elementwise([](const PiecewiseLyapunov& f, double r) { return f.d2(r); }))
      .def("g", elementwise([](const PiecewiseLyapunov& f, double r) { return eval_g(f, r); }))
      .def_property_readonly("drift_floor", &PiecewiseLyapunov::drift_floor)
      .def_readonly("c8", &PiecewiseLyapunov::c8)
      .def_readonly("c9", &PiecewiseLyapunov::c9)
      .def_readonly("delta", &PiecewiseLyapunov::delta);

  py::class_<SquareChart>(m, "SquareChart")
      .def(py::init([](const CorrelationFamily& f, std::pair<double, double> q, int n) {
             return build_square(f, Vec2(q.first, q.second), n);
           }),
           py::arg("family"), py::arg("q") = std::make_pair(0.0, 0.0), py::arg("n") = 102)
      .def_readonly("eps", &SquareChart::eps)
      .def_readonly("c13", &SquareChart::c13)
      .def_readonly("t_u", &SquareChart::t_u)
      .def_readonly("n", &SquareChart::n)
      .def("sweep_covers", [](const SquareChart& c) {
        const SweepReport r = sweep_certificate(c, straight_test_curve(c), c.eps / 200.0);
        return py::make_tuple(r.covered_cells, r.raster_cells, r.passed());
      });

  m.def("ks_two_sample", [](std::vector<double> a, std::vector<double> b) {
    const KsResult r = ks_two_sample(std::move(a), std::move(b));
    return py::make_tuple(r.statistic, r.p_value);
  });
  m.def("derive_seed", &derive_seed, py::arg("master"), py::arg("index"));

  m.def("normalize_config", [](const std::string& text) { return serialize_config(parse_config(text)); });
  m.def(
      "run_suite",
      [](const std::string& config_text, const std::string& suite, const std::string& out_dir) {
        const ExperimentConfig cfg = parse_config(config_text);
        RunRecord rec;
        {
          py::gil_scoped_release release;
          rec = run_suite(cfg, suite_from_string(suite), out_dir);
        }
        return json_to_py(rec.to_json());
      },
      py::arg("config"), py::arg("suite"), py::arg("out_dir"),
      "Runs a suite from JSON config text; returns the run record.");
}
