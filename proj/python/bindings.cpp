#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "tfmean/bounds.hpp"
#include "tfmean/error.hpp"
#include "tfmean/estimators.hpp"
#include "tfmean/experiments.hpp"
#include "tfmean/sampling.hpp"
#include "tfmean/spaces.hpp"
#include "tfmean/transforms.hpp"

namespace py = pybind11;
using namespace tfm;

namespace {

// Euclidean points travel as 1-D arrays, SPD points as square arrays and
// tree points as (edge, offset) tuples.
py::object to_py(const Point& p) {
  if (const auto* v = std::get_if<Vector>(&p)) return py::cast(*v);
  if (const auto* m = std::get_if<Matrix>(&p)) return py::cast(*m);
  const auto& t = std::get<TreePoint>(p);
  return py::make_tuple(t.edge, t.offset);
}

Point from_py(const Space& s, const py::handle& h) {
  if (s.as_euclidean()) {
    auto v = h.cast<Vector>();
    if (v.size() != s.dim()) throw ShapeError("point has the wrong dimension");
    return v;
  }
  if (s.as_spd()) {
    auto m = h.cast<Matrix>();
    if (m.rows() != s.dim() || m.cols() != s.dim()) throw ShapeError("matrix has the wrong shape");
    return m;
  }
  auto t = h.cast<std::pair<std::size_t, double>>();
  return TreePoint{t.first, t.second};
}

std::vector<Point> points_from_py(const Space& s, const py::iterable& pts) {
  std::vector<Point> out;
  for (auto h : pts) out.push_back(from_py(s, h));
  return out;
}

py::object ext(ExtReal x) {
  if (x.is_infinite()) return py::float_(std::numeric_limits<double>::infinity());
  return py::float_(x.value());
}

}  // namespace

PYBIND11_MODULE(_tfmean, m) {
  m.doc() = "Transformed Frechet means in Hadamard spaces";

  auto base = py::register_exception<Error>(m, "TfmError", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<InapplicableError>(m, "InapplicableError", base.ptr());
  py::register_exception<MissingMomentError>(m, "MissingMomentError", base.ptr());

  py::class_<Transform>(m, "Transform")
      .def(py::init([](const std::string& spec) { return Transform::parse(spec); }), py::arg("spec"))
      .def("tau", &Transform::tau, py::arg("x"))
      .def("dtau", &Transform::dtau, py::arg("x"))
      .def("ddtau_plus", &Transform::ddtau_plus, py::arg("x"))
      .def("inv_dtau", &Transform::inv_dtau, py::arg("z"))
      .def_property_readonly("quadruple_constant", &Transform::quadruple_constant)
      .def_property_readonly("robustness", [](const Transform& t) { return std::string(to_string(t.classify())); })
      .def("__repr__", [](const Transform& t) { return "Transform('" + t.to_string() + "')"; })
      .def("__str__", &Transform::to_string);

  py::class_<Space>(m, "Space")
      .def(py::init([](const std::string& spec) { return Space::parse(spec); }), py::arg("spec"))
      .def_property_readonly("dim", &Space::dim)
      .def("distance", [](const Space& s, py::handle a, py::handle b) {
        return s.distance(from_py(s, a), from_py(s, b));
      }, py::arg("a"), py::arg("b"))
      .def("geodesic_point", [](const Space& s, py::handle a, py::handle b, double t) {
        return to_py(s.geodesic_point(from_py(s, a), from_py(s, b), t));
      }, py::arg("a"), py::arg("b"), py::arg("t"))
      .def("__repr__", [](const Space& s) { return "Space('" + s.describe() + "')"; });

  m.def("sample", [](const std::string& spec, std::size_t n, std::uint64_t seed) {
    const auto d = DistributionSpec::parse(spec);
    py::list out;
    for (const auto& p : d.sample(n, seed)) out.append(to_py(p));
    return out;
  }, py::arg("distribution"), py::arg("n"), py::arg("seed") = 0,
     "n seeded draws; the i-th draw depends only on (seed, i).");

  m.def("estimate", [](const Space& s, const Transform& t, const py::iterable& pts, const std::string& method,
                       std::size_t max_epochs, std::uint64_t seed) {
    SolverConfig cfg;
    cfg.method = parse_solver_method(method);
    cfg.max_epochs = max_epochs;
    cfg.shuffle_seed = seed;
    const auto sample = points_from_py(s, pts);
    EstimateResult r;
    {
      py::gil_scoped_release release;
      r = estimate(s, t, sample, cfg);
    }
    py::dict d;
    d["point"] = to_py(r.point);
    d["objective"] = r.objective;
    d["epochs"] = r.epochs_used;
    d["converged"] = r.converged;
    d["method"] = std::string(to_string(r.method));
    return d;
  }, py::arg("space"), py::arg("transform"), py::arg("points"), py::arg("method") = "auto",
     py::arg("max_epochs") = 500, py::arg("seed") = 0);

  m.def("objective", [](const Space& s, const Transform& t, const py::iterable& pts, py::handle q) {
    return objective(s, t, points_from_py(s, pts), from_py(s, q));
  }, py::arg("space"), py::arg("transform"), py::arg("points"), py::arg("q"));

  m.def("threehalfs_bound", [](double a, double b, double c, double n) {
    return ext(threehalfs_bound(ExtReal::from_double(a), ExtReal::from_double(b), ExtReal::from_double(c), n));
  }, py::arg("sigma_half"), py::arg("sigma_one"), py::arg("sigma_three_halfs"), py::arg("n"));

  m.def("power_rate_constants", [](double alpha) {
    const auto c = power_rate_constants(alpha);
    return py::make_tuple(c.c0, c.c1, c.c2);
  }, py::arg("alpha"));

  m.def("tail_bound", [](double lambda, double eta, double rho, double r, double n) {
    const auto b = tail_bound(lambda, eta, rho, r, n);
    return py::make_tuple(b.radius_multiplier, b.probability_bound);
  }, py::arg("lam"), py::arg("eta"), py::arg("rho"), py::arg("r"), py::arg("n"));

  m.def("median_tail_bound", [](double eta, double rho, double r, double n) {
    const auto b = median_tail_bound(eta, rho, r, n);
    return py::make_tuple(b.radius_multiplier, b.probability_bound);
  }, py::arg("eta"), py::arg("rho"), py::arg("r"), py::arg("n"));

  m.def("run_experiment", [](const std::string& config_json) {
    const auto cfg = ExperimentConfig::from_json_text(config_json);
    ExperimentResult r;
    {
      py::gil_scoped_release release;
      r = run_experiment(cfg);
    }
    py::dict d;
    py::list recs, aggs;
    for (const auto& x : r.records)
      recs.append(py::make_tuple(x.n, x.rep, x.seed, x.dist, x.loss, x.bound, x.aux1, x.aux2));
    for (const auto& a : r.aggregates) aggs.append(py::make_tuple(a.n, a.mean_loss, a.stderr_, a.bound, a.pass));
    py::dict meta;
    for (const auto& [k, v] : r.metadata) meta[py::str(k)] = v;
    d["records"] = recs;
    d["aggregates"] = aggs;
    d["metadata"] = meta;
    d["slope"] = r.slope;
    d["pass"] = r.pass;
    d["notes"] = r.notes;
    return d;
  }, py::arg("config_json"),
     "Runs one experiment from a JSON config. records rows are "
     "(n, rep, seed, dist, loss, bound, aux1, aux2); aggregates rows are "
     "(n, mean_loss, stderr, bound, pass).");
}
