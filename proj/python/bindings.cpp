/* Python surface for the core operations: boundary grids, the visual
   embedding and its barycenter inverse, natural maps on the symmetric
   backend, entropy, comass sampling, and the experiment driver. Vectors
   cross the boundary as plain lists; configs and results as JSON strings. */

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "natmaplab/backend.hpp"
#include "natmaplab/barycenter.hpp"
#include "natmaplab/calib.hpp"
#include "natmaplab/errors.hpp"
#include "natmaplab/experiments.hpp"
#include "natmaplab/geometry.hpp"
#include "natmaplab/grid.hpp"
#include "natmaplab/natmap.hpp"

namespace py = pybind11;
using namespace natmaplab;

namespace {

Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> from_vec(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

/* shared_ptr<const QuadratureGrid> wrapped by value to keep the holder simple */
struct PyGrid {
  GridPtr grid;
};

Json parse(const std::string& text) {
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigInvalid("config is not valid JSON");
  return j;
}

}  // namespace

PYBIND11_MODULE(_natmaplab, m) {
  m.doc() = "boundary kernel maps on the hyperbolic ball";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigInvalid& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const Error& e) {
      PyErr_SetString(PyExc_RuntimeError, e.what());
    }
  });

  py::class_<PyGrid>(m, "Grid")
      .def_property_readonly("dim", [](const PyGrid& g) { return g.grid->dim(); })
      .def_property_readonly("size", [](const PyGrid& g) { return g.grid->size(); })
      .def_property_readonly("resolution",
                             [](const PyGrid& g) { return g.grid->resolution(); })
      .def_property_readonly(
          "scheme", [](const PyGrid& g) { return scheme_name(g.grid->scheme()); })
      .def("node",
           [](const PyGrid& g, int i) { return from_vec(g.grid->node(i).dir()); })
      .def("weights", [](const PyGrid& g) { return from_vec(g.grid->weights()); })
      .def("__repr__", [](const PyGrid& g) {
        return "Grid(" + scheme_name(g.grid->scheme()) + ", n=" +
               std::to_string(g.grid->dim()) + ", size=" +
               std::to_string(g.grid->size()) + ")";
      });

  m.def(
      "make_grid",
      [](int n, const std::string& scheme, int resolution) {
        return PyGrid{QuadratureGrid::make(n, scheme_from_name(scheme), resolution)};
      },
      py::arg("n"), py::arg("scheme"), py::arg("resolution"),
      "quadrature rule on the ideal boundary: circle_uniform, "
      "fibonacci_sphere, or product_gauss");

  m.def(
      "hyp_distance",
      [](const std::vector<double>& p, const std::vector<double>& q) {
        return hyp_distance(BallPoint(to_vec(p)), BallPoint(to_vec(q)));
      },
      py::arg("p"), py::arg("q"), "geodesic distance in the ball model");

  m.def(
      "busemann",
      [](const std::vector<double>& theta, const std::vector<double>& x) {
        return busemann(IdealPoint(to_vec(theta)), BallPoint(to_vec(x)));
      },
      py::arg("theta"), py::arg("x"),
      "Busemann function of the ideal point theta, zero at the origin");

  m.def(
      "phi0_values",
      [](const std::vector<double>& p, const PyGrid& g) {
        return from_vec(phi0(BallPoint(to_vec(p)), g.grid).values);
      },
      py::arg("p"), py::arg("grid"),
      "visual embedding at p, sampled on the grid and unit in L^2");

  m.def(
      "solve_barycenter",
      [](const std::vector<double>& values, const PyGrid& g) {
        BarycenterSolution s =
            solve_barycenter(BoundaryFunction(g.grid, to_vec(values)));
        py::dict out;
        out["point"] = from_vec(s.point.coords());
        out["residual"] = s.residual;
        out["iterations"] = s.iterations;
        return out;
      },
      py::arg("values"), py::arg("grid"),
      "barycenter of the squared-density measure on the boundary");

  m.def(
      "natural_map",
      [](const std::vector<double>& p, const PyGrid& g, double c, int mc_count,
         uint64_t seed) {
        BackendPtr backend = std::make_shared<ExactBackend>(g.grid->dim());
        NaturalMapConfig cfg{c, mc_count, seed, 0.0};
        return from_vec(natural_map_fc(backend, cfg, BallPoint(to_vec(p)), g.grid)
                            .coords());
      },
      py::arg("p"), py::arg("grid"), py::arg("c"), py::arg("mc_count") = 20000,
      py::arg("seed") = 1,
      "composition of the decayed kernel map with the barycenter, on the "
      "symmetric backend");

  m.def(
      "entropy_estimate",
      [](int n, const std::vector<double>& radii, int mc_count, uint64_t seed) {
        BackendPtr backend = std::make_shared<ExactBackend>(n);
        return entropy_estimate(backend, radii, BallPoint(Vec::Zero(n)), mc_count,
                                seed);
      },
      py::arg("n"), py::arg("radii"), py::arg("mc_count") = 200000,
      py::arg("seed") = 1,
      "volume-growth exponent fit from ball volumes at the given radii");

  m.def("unit_comass_bound", &unit_comass_bound, py::arg("n"),
        "(4n/h^2)^(n/2), the comass of the calibrating form");

  m.def(
      "comass_estimate",
      [](const PyGrid& g, int trials, uint64_t seed) {
        FrameSampler sampler(g.grid, seed, 1.0, 1.0, 0.6);
        return comass_estimate(sampler, trials);
      },
      py::arg("grid"), py::arg("trials"), py::arg("seed") = 1,
      "running maximum of the form over sampled unit frames");

  m.def("experiment_names", &experiment_names, "registered experiment names");
  m.def("experiment_summary", &experiment_summary, py::arg("name"),
        "one-line summary of a registered experiment");

  m.def(
      "resolve_config",
      [](const std::string& config) { return resolve_config(parse(config)).dump(2); },
      py::arg("config"),
      "validate a config string and materialize every default");

  m.def(
      "run_experiment",
      [](const std::string& config) {
        return run_experiment(resolve_config(parse(config))).to_json().dump(2);
      },
      py::arg("config"),
      "run one experiment from a config string; returns the serialized result");
}
