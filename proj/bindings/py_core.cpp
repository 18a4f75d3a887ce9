#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>

#include "switchheat/closed_forms.hpp"
#include "switchheat/errors.hpp"
#include "switchheat/spectral.hpp"
#include "switchheat/switching.hpp"
#include "switchheat/verify.hpp"

namespace py = pybind11;

namespace {

using namespace switchheat;
using spectral::Example;
using spectral::Params;

Example example_from(const std::string& name) {
    if (name == "dd") return Example::dd;
    if (name == "dn") return Example::dn;
    throw config_error("example must be 'dd' or 'dn' (got '" + name + "')");
}

closedform::Family family_from(const std::string& name) {
    if (name == "y0") return closedform::Family::Y0;
    if (name == "y1") return closedform::Family::Y1;
    throw config_error("family must be 'y0' or 'y1' (got '" + name + "')");
}

Eigen::MatrixXd sample_holding_pairs(const Params& params, std::int64_t count,
                                     std::uint64_t seed) {
    if (count < 0) throw config_error("count must be nonnegative");
    params.validate();
    Environment env(exponential_laws(params.r0, params.r1), seed);
    Eigen::MatrixXd pairs(count, 2);
    for (std::int64_t i = 0; i < count; ++i) {
        pairs(i, 0) = env.tau0(std::size_t(i));
        pairs(i, 1) = env.tau1(std::size_t(i));
    }
    return pairs;
}

Eigen::MatrixXd stationary_coefficients(const std::string& example, const Params& params,
                                        int modes, std::int64_t count, std::uint64_t seed,
                                        double tol, std::size_t max_depth) {
    if (count < 0) throw config_error("count must be nonnegative");
    verify::McOptions opts;
    opts.n_samples = count;
    opts.seed = seed;
    opts.tol = tol;
    opts.max_depth = max_depth;
    verify::StationarySampler sampler(example_from(example), params, modes, opts);
    Eigen::MatrixXd out(count, modes);
    for (std::int64_t i = 0; i < count; ++i) out.row(i) = sampler.stationary(i).transpose();
    return out;
}

Eigen::MatrixXd evaluate_fields(const std::string& example, const Params& params,
                                int modes, const Eigen::MatrixXd& coeffs, int grid) {
    if (coeffs.cols() != modes)
        throw config_error("coeffs must have one column per mode");
    const auto model = spectral::make_heat_model(example_from(example), params, modes);
    const Eigen::MatrixXd eval = spectral::evaluation_matrix(model.basis, grid);
    return coeffs * eval.transpose();
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Heat equation with randomly switching boundary conditions: "
              "closed forms, environment sampling, and stationary fields";

    py::class_<Params>(m, "Params")
        .def(py::init([](double r0, double r1, double D, double L, double b) {
                 return Params{r0, r1, D, L, b};
             }),
             py::arg("r0") = 1.0, py::arg("r1") = 1.0, py::arg("D") = 1.0,
             py::arg("L") = 1.0, py::arg("b") = 1.0)
        .def_readwrite("r0", &Params::r0)
        .def_readwrite("r1", &Params::r1)
        .def_readwrite("D", &Params::D)
        .def_readwrite("L", &Params::L)
        .def_readwrite("b", &Params::b)
        .def("validate", &Params::validate)
        .def("occupancy", &Params::occupancy,
             "long-run probability of the relaxing phase, r0/(r0+r1)")
        .def("__repr__", [](const Params& p) {
            return "Params(r0=" + std::to_string(p.r0) + ", r1=" + std::to_string(p.r1) +
                   ", D=" + std::to_string(p.D) + ", L=" + std::to_string(p.L) +
                   ", b=" + std::to_string(p.b) + ")";
        });

    m.def("dn_slope", &closedform::dn_slope, py::arg("params"),
          "slope of the mean stationary profile in the Dirichlet/Neumann example");
    m.def("dn_slope_series", &closedform::dn_slope_series, py::arg("params"),
          py::arg("k_terms"));
    m.def("dd_mean", &closedform::dd_mean, py::arg("params"), py::arg("x"),
          "mean stationary profile of the Dirichlet/Dirichlet example at x");
    m.def("dd_l2_variance", &closedform::dd_l2_variance, py::arg("params"));
    m.def("dd_l2_variance_series", &closedform::dd_l2_variance_series, py::arg("params"),
          py::arg("k_terms"));
    m.def("dd_joint_second_moment", &closedform::dd_joint_second_moment,
          py::arg("params"), py::arg("n"), py::arg("m"));
    m.def("insect_flux", &closedform::insect_flux, py::arg("params"),
          "mean boundary flux, D times the Dirichlet/Neumann slope");

    m.def(
        "beta_marginal",
        [](const Params& params, int k, const std::string& family) {
            const auto marg = closedform::beta_marginal(params, k, family_from(family));
            py::dict out;
            out["alpha"] = marg.alpha;
            out["beta"] = marg.beta;
            out["scale"] = marg.scale;
            out["mean"] = marg.scale * marg.mean();
            return out;
        },
        py::arg("params"), py::arg("k"), py::arg("family"),
        "scaled Beta law of stationary mode k: coefficient = scale * Beta(alpha, beta)");

    m.def(
        "sandwich_bounds",
        [](int k, int n, double xk) {
            const auto iv = closedform::sandwich_bounds(k, n, xk);
            return py::make_tuple(iv.lo, iv.hi);
        },
        py::arg("k"), py::arg("n"), py::arg("xk"),
        "pathwise envelope for normalized mode n given normalized mode k < n");

    m.def("occupancy_p",
          [](const Params& params) {
              return occupancy_p(exponential_laws(params.r0, params.r1));
          },
          py::arg("params"));

    m.def("sample_holding_pairs", &sample_holding_pairs, py::arg("params"),
          py::arg("count"), py::arg("seed"),
          "draw (tau0, tau1) holding-time pairs as a (count, 2) array");

    m.def("stationary_coefficients", &stationary_coefficients, py::arg("example"),
          py::arg("params"), py::arg("modes"), py::arg("count"), py::arg("seed"),
          py::arg("tol") = 1e-10, py::arg("max_depth") = std::size_t(512),
          "draw stationary fields as a (count, modes) coefficient array");

    m.def("evaluate_fields", &evaluate_fields, py::arg("example"), py::arg("params"),
          py::arg("modes"), py::arg("coeffs"), py::arg("grid"),
          "evaluate coefficient rows on the interior grid, one row per field");

    m.def(
        "interior_grid",
        [](double L, int grid) { return spectral::interior_grid(L, grid); },
        py::arg("L"), py::arg("grid"), "interior points j*L/grid, j = 1..grid-1");
}
