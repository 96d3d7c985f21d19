#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "semiclab/dynamics.hpp"
#include "semiclab/error.hpp"
#include "semiclab/estimates.hpp"
#include "semiclab/io.hpp"
#include "semiclab/lab.hpp"
#include "semiclab/quantize.hpp"
#include "semiclab/schatten.hpp"

namespace py = pybind11;
using namespace semiclab;

namespace {

using Array2 = py::array_t<double, py::array::c_style | py::array::forcecast>;

// One-dimensional phase-space field from a (n_x, n_xi) array.
PhaseSpaceField field_from_array(const Array2& a, const Grid1D& x, const Grid1D& xi) {
  if (a.ndim() != 2 || static_cast<std::size_t>(a.shape(0)) != x.n_points || static_cast<std::size_t>(a.shape(1)) != xi.n_points)
    throw Error(ErrorCode::GridMismatch, "array shape does not match the grid");
  PhaseSpaceField f(PhaseSpaceGrid(1, x, xi));
  std::copy(a.data(), a.data() + a.size(), f.values.begin());
  return f;
}

Array2 field_to_array(const PhaseSpaceField& f) {
  Array2 out({f.grid.spatial_size(), f.grid.momentum_size()});
  std::copy(f.values.begin(), f.values.end(), out.mutable_data());
  return out;
}

KernelSpec make_kernel(double a, bool logarithmic, double strength, double softening) {
  KernelSpec k;
  k.a = a;
  k.logarithmic = logarithmic;
  k.strength = strength;
  k.softening = softening;
  return k;
}

// Negative softening resolves to the per-grid default.
KernelSpec on_grid(KernelSpec k, const Grid1D& x) {
  if (k.softening < 0.0) k.softening = default_softening(k, x.spacing());
  return k;
}

std::string dump(const nlohmann::json& j) { return j.dump(); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Semiclassical mean-field lab: Weyl calculus, Schatten norms, propagators and bound checks";

  static py::exception<Error> error(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = error;
      py::object instance = exc(e.what());
      instance.attr("code") = error_code_name(e.code());
      PyErr_SetObject(error.ptr(), instance.ptr());
    }
  });

  m.def("conjugate_momentum_length", [](std::size_t n, double length, double hbar) { return conjugate_grid(Grid1D(n, length), hbar).length; },
        py::arg("n"), py::arg("length"), py::arg("hbar"));

  m.def(
      "weyl_quantize",
      [](const Array2& f, double length, double hbar) {
        const Grid1D x(f.shape(0), length);
        return weyl_quantize(field_from_array(f, x, conjugate_grid(x, hbar)), hbar).matrix;
      },
      py::arg("symbol"), py::arg("length"), py::arg("hbar"), "Matrix of op_hbar(f) scaled by dx; f lives on the conjugate momentum grid.");
  m.def(
      "wigner_transform",
      [](const CMatrix& rho, double length, double hbar) {
        return field_to_array(wigner_transform(DensityOperator(Grid1D(rho.rows(), length), hbar, rho)));
      },
      py::arg("matrix"), py::arg("length"), py::arg("hbar"));

  m.def(
      "schatten",
      [](const CMatrix& a, double hbar, const std::vector<double>& ps) { return dump(to_json(schatten(a, hbar, ps))); },
      py::arg("matrix"), py::arg("hbar"), py::arg("p"), "SchattenReport as a JSON string.");
  m.def("trace_norm", &trace_norm, py::arg("matrix"));
  m.def(
      "holder_oracle",
      [](const CMatrix& a, const CMatrix& b, double p, double q, double r) {
        const OracleSides s = holder_oracle(a, b, p, q, r);
        return py::make_tuple(s.lhs, s.rhs);
      },
      py::arg("a"), py::arg("b"), py::arg("p"), py::arg("q"), py::arg("r"));
  m.def(
      "alt_oracle",
      [](const CMatrix& a, const CMatrix& b, double q, double r) {
        const OracleSides s = alt_oracle(a, b, q, r);
        return py::make_tuple(s.lhs, s.rhs);
      },
      py::arg("a"), py::arg("b"), py::arg("q"), py::arg("r"));
  m.def(
      "mixing_oracle",
      [](const CMatrix& a, const CMatrix& b, double p, double r) {
        const OracleSides s = mixing_oracle(a, b, p, r);
        return py::make_tuple(s.lhs, s.rhs);
      },
      py::arg("a"), py::arg("b"), py::arg("p"), py::arg("r"));

  m.def(
      "hartree_evolve",
      [](const CMatrix& rho, double length, double hbar, double dt, int steps, bool exchange, double a, bool logarithmic, double strength,
         double softening) {
        const Grid1D x(rho.rows(), length);
        const HartreeSolver solver(x, hbar, on_grid(make_kernel(a, logarithmic, strength, softening), x), exchange);
        DensityOperator state(x, hbar, rho);
        py::gil_scoped_release release;
        solver.advance(state, dt, steps);
        return state.matrix;
      },
      py::arg("matrix"), py::arg("length"), py::arg("hbar"), py::arg("dt"), py::arg("steps"), py::arg("exchange") = false, py::arg("a") = 0.5,
      py::arg("logarithmic") = false, py::arg("strength") = 1.0, py::arg("softening") = -1.0);
  m.def(
      "vlasov_evolve",
      [](const Array2& f, double length, double xi_length, double dt, int steps, double a, bool logarithmic, double strength, double softening) {
        const Grid1D x(f.shape(0), length), xi(f.shape(1), xi_length);
        const VlasovSolver solver(PhaseSpaceGrid(1, x, xi), on_grid(make_kernel(a, logarithmic, strength, softening), x));
        PhaseSpaceField state = field_from_array(f, x, xi);
        {
          py::gil_scoped_release release;
          solver.advance(state, dt, steps);
        }
        return field_to_array(state);
      },
      py::arg("field"), py::arg("length"), py::arg("xi_length"), py::arg("dt"), py::arg("steps"), py::arg("a") = 0.5,
      py::arg("logarithmic") = false, py::arg("strength") = 1.0, py::arg("softening") = -1.0);

  m.def(
      "rate_fit",
      [](const std::vector<double>& param, const std::vector<double>& error) {
        const RateFit fit = rate_fit(param, error);
        return py::dict(py::arg("slope") = fit.slope, py::arg("intercept") = fit.intercept, py::arg("r2") = fit.r2);
      },
      py::arg("param"), py::arg("error"));

  m.def(
      "parse_config", [](const std::string& text) { return dump(to_json(parse_config(text))); }, py::arg("text"),
      "Validated configuration as a JSON string.");
  m.def(
      "run_experiment",
      [](const std::string& text) {
        const ExperimentConfig cfg = parse_config(text);
        py::gil_scoped_release release;
        return dump(to_json(run_experiment(cfg)));
      },
      py::arg("config_text"), "Report JSON string.");
  m.def(
      "run_bound_check",
      [](const std::string& name, const std::string& text) {
        const ExperimentConfig cfg = parse_config(text);
        py::gil_scoped_release release;
        return dump(to_json(run_bound_check(name, cfg)));
      },
      py::arg("name"), py::arg("config_text"));

  m.def(
      "write_psf1",
      [](const std::string& path, const Array2& f, double length, double xi_length) {
        write_psf1(path, field_from_array(f, Grid1D(f.shape(0), length), Grid1D(f.shape(1), xi_length)));
      },
      py::arg("path"), py::arg("field"), py::arg("length"), py::arg("xi_length"));
  m.def(
      "read_psf1",
      [](const std::string& path) {
        const PhaseSpaceField f = read_psf1(path);
        if (f.grid.dim != 1) throw Error(ErrorCode::Dimension, "only one-dimensional fields convert to arrays");
        return py::make_tuple(field_to_array(f), f.grid.x.length, f.grid.xi.length);
      },
      py::arg("path"));
  m.def(
      "write_dop1",
      [](const std::string& path, const CMatrix& rho, double length, double hbar) {
        write_dop1(path, DensityOperator(Grid1D(rho.rows(), length), hbar, rho));
      },
      py::arg("path"), py::arg("matrix"), py::arg("length"), py::arg("hbar"));
  m.def(
      "read_dop1",
      [](const std::string& path) {
        const DensityOperator rho = read_dop1(path);
        return py::make_tuple(rho.matrix, rho.grid.length, rho.hbar);
      },
      py::arg("path"));
}
