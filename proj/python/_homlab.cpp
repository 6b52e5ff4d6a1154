#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "homlab/config.hpp"
#include "homlab/corrector.hpp"
#include "homlab/errors.hpp"
#include "homlab/experiments.hpp"

namespace py = pybind11;
using namespace homlab;

namespace {

EnsembleSpec make_spec(int dim, const std::string& law, double lambda, double alpha, double beta, double prob,
                       std::uint64_t seed) {
  EnsembleSpec s;
  s.dim = dim;
  s.law = parse_law(law);
  s.lambda = lambda;
  s.alpha = alpha;
  s.beta = beta;
  s.prob = prob;
  s.seed = seed;
  s.validate();
  return s;
}

// (count, extent, ..., extent) view of `count` node arrays stored back to back.
py::array_t<double> node_array(const std::vector<const NodeField*>& fields, const DomainGrid& g) {
  std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(fields.size())};
  for (int k = 0; k < g.dim(); ++k) shape.push_back(g.extent());
  py::array_t<double> out(shape);
  double* p = out.mutable_data();
  for (const NodeField* f : fields) p = std::copy(f->begin(), f->end(), p);
  return out;
}

py::array_t<double> tensor_array(const Tensor& t) {
  py::array_t<double> out({t.dim, t.dim});
  auto m = out.mutable_unchecked<2>();
  for (int i = 0; i < t.dim; ++i)
    for (int j = 0; j < t.dim; ++j) m(i, j) = t(i, j);
  return out;
}

CoefficientField field_from(py::array_t<double, py::array::c_style | py::array::forcecast> values, int side,
                            bool box, double lambda) {
  const int dim = static_cast<int>(values.ndim()) - 1;
  if (dim < 1 || dim > 3 || values.shape(0) != dim) throw ArgumentError("expected an array of shape (d, n, ..., n)");
  const DomainGrid g = box ? DomainGrid::box(side, dim) : DomainGrid::torus(side, dim);
  if (static_cast<std::size_t>(values.size()) != g.edge_slots()) throw ArgumentError("array does not match the domain");
  CoefficientField f = constant_field(g, 1.0, lambda);
  std::copy(values.data(), values.data() + values.size(), f.values.begin());
  return f;
}

py::dict run(const std::string& command, const py::dict& options) {
  std::ostringstream text;
  text << "command = " << command << '\n';
  for (const auto& [key, value] : options) {
    std::string v;
    if (py::isinstance<py::list>(value) || py::isinstance<py::tuple>(value)) {
      for (const auto& item : value) v += (v.empty() ? "" : ", ") + py::str(item).cast<std::string>();
    } else {
      v = py::str(value).cast<std::string>();
    }
    text << py::str(key).cast<std::string>() << " = " << v << '\n';
  }
  std::istringstream in(text.str());
  const RunConfig cfg = parse_config(in, "<python>");
  ExperimentResult res;
  {
    py::gil_scoped_release release;
    res = run_experiment(cfg);
  }
  py::list rows;
  for (const Record& r : res.records) rows.append(py::cast(r.cells));
  py::dict out;
  out["name"] = res.name;
  out["header"] = res.header;
  out["rows"] = rows;
  out["summary"] = py::module_::import("json").attr("loads")(res.summary.dump());
  out["passed"] = res.passed();
  return out;
}

}  // namespace

PYBIND11_MODULE(_homlab, m) {
  m.doc() = "Random conductance homogenization: samplers, correctors and the experiment suite.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  m.def(
      "sample_field",
      [](int side, int dim, const std::string& law, double lambda, double alpha, double beta, double prob,
         std::uint64_t seed, std::uint64_t sample, const std::string& domain) {
        const EnsembleSpec spec = make_spec(dim, law, lambda, alpha, beta, prob, seed);
        if (domain != "torus" && domain != "box") throw ArgumentError("domain must be torus or box");
        const DomainGrid g = domain == "box" ? DomainGrid::box(side, dim) : DomainGrid::torus(side, dim);
        const CoefficientField f = sample_field(spec, g, sample);
        std::vector<NodeField> axes(static_cast<std::size_t>(dim), NodeField(g.node_count()));
        for (int k = 0; k < dim; ++k)
          for (std::size_t x = 0; x < g.node_count(); ++x)
            if (g.edge_active(k, x)) axes[static_cast<std::size_t>(k)][x] = f.values[g.edge_index(k, x)];
        std::vector<const NodeField*> ptrs;
        for (const auto& a : axes) ptrs.push_back(&a);
        return node_array(ptrs, g);
      },
      py::arg("side"), py::arg("dim") = 2, py::arg("law") = "two-phase", py::arg("lam") = 0.25,
      py::arg("alpha") = 0.25, py::arg("beta") = 4.0, py::arg("prob") = 0.5, py::arg("seed") = 0,
      py::arg("sample") = 0, py::arg("domain") = "torus",
      "Conductances a[k, x]: the edge from node x to x + e_k. Inactive box edges are zero.");

  m.def(
      "correctors",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> a, double lambda, double tol) {
        const int side = a.ndim() > 1 ? static_cast<int>(a.shape(1)) : 0;
        const CoefficientField f = field_from(a, side, false, lambda);
        SolveOptions opts;
        opts.tolerance = tol;
        CorrectorSet set;
        {
          py::gil_scoped_release release;
          set = compute_correctors(f, opts, false);
        }
        std::vector<const NodeField*> ptrs;
        for (const auto& p : set.phi) ptrs.push_back(&p);
        py::dict out;
        out["phi"] = node_array(ptrs, set.grid);
        out["abar"] = tensor_array(set.abar);
        out["residual"] = set.phi_residual;
        return out;
      },
      py::arg("a"), py::arg("lam") = 0.25, py::arg("tol") = 1e-10,
      "Periodic correctors phi_i (mean zero) and the flux-average tensor of one torus sample.");

  m.def(
      "reference_abar",
      [](int dim, const std::string& law, double lambda, double alpha, double beta, double prob, std::uint64_t seed) {
        const auto r = reference_abar(make_spec(dim, law, lambda, alpha, beta, prob, seed), {});
        return py::make_tuple(r.value, r.exact);
      },
      py::arg("dim") = 2, py::arg("law") = "two-phase", py::arg("lam") = 0.25, py::arg("alpha") = 0.25,
      py::arg("beta") = 4.0, py::arg("prob") = 0.5, py::arg("seed") = 0,
      "Scalar reference value of abar and whether it is exact.");

  m.def("experiment_names", &experiment_names);
  m.def("run", &run, py::arg("command"), py::arg("options") = py::dict(),
        "Run one experiment. Options use the configuration-file keys (L, N, dim, law, ...).");
}
