#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mixsel/divergence.hpp"
#include "mixsel/em.hpp"
#include "mixsel/geometry.hpp"
#include "mixsel/order.hpp"

namespace py = pybind11;
using namespace mixsel;

namespace {

LocationFamily make_family(int dim, double sigma) {
    return sigma == 1.0 ? LocationFamily::gaussian(dim)
                        : LocationFamily::gaussian_scaled(dim, sigma);
}

MixtureParams make_mixture(const std::vector<double>& weights,
                           const std::vector<std::vector<double>>& locations) {
    if (locations.empty()) throw std::invalid_argument("locations must be nonempty");
    const int d = static_cast<int>(locations[0].size());
    std::vector<double> flat;
    for (const auto& row : locations) {
        if (static_cast<int>(row.size()) != d)
            throw std::invalid_argument("location rows must share a dimension");
        flat.insert(flat.end(), row.begin(), row.end());
    }
    return MixtureParams(weights, std::move(flat), d);
}

}  // namespace

PYBIND11_MODULE(_mixsel, m) {
    m.doc() = "Penalized-likelihood order estimation for location mixtures";

    py::register_exception<GridTooSmallError>(m, "GridTooSmallError");
    py::register_exception<DegenerateWeightingError>(m, "DegenerateWeightingError");
    py::register_exception<InvalidModelError>(m, "InvalidModelError");

    py::class_<LocationFamily>(m, "LocationFamily")
        .def(py::init(&make_family), py::arg("dim") = 1, py::arg("sigma") = 1.0)
        .def_readonly("dim", &LocationFamily::dim)
        .def_readonly("sigma", &LocationFamily::sigma);

    py::class_<MixtureParams>(m, "MixtureParams")
        .def(py::init(&make_mixture), py::arg("weights"), py::arg("locations"))
        .def_property_readonly("q", &MixtureParams::order)
        .def_property_readonly("dim", &MixtureParams::dim)
        .def_readonly("weights", &MixtureParams::weights)
        .def_readonly("locations", &MixtureParams::locations);

    py::class_<Dataset>(m, "Dataset")
        .def_property_readonly("n", &Dataset::size)
        .def_readonly("dim", &Dataset::dim)
        .def_readonly("points", &Dataset::points);

    py::class_<QuadratureGrid>(m, "QuadratureGrid")
        .def_property_readonly("size", &QuadratureGrid::size)
        .def_readonly("tail_mass", &QuadratureGrid::tail_mass)
        .def_readonly("norm_defect", &QuadratureGrid::norm_defect);

    py::class_<FitResult>(m, "FitResult")
        .def_readonly("params", &FitResult::params)
        .def_readonly("loglik", &FitResult::loglik)
        .def_readonly("iterations", &FitResult::iterations)
        .def_readonly("converged", &FitResult::converged)
        .def_readonly("best_start_index", &FitResult::best_start_index)
        .def("to_json", [](const FitResult& f) { return to_json(f); });

    py::class_<OrderRow>(m, "OrderRow")
        .def_readonly("q", &OrderRow::q)
        .def_readonly("score", &OrderRow::score)
        .def_readonly("penalty", &OrderRow::penalty)
        .def_readonly("criterion", &OrderRow::criterion);

    py::class_<OrderEstimate>(m, "OrderEstimate")
        .def_readonly("q_hat", &OrderEstimate::q_hat)
        .def_readonly("table", &OrderEstimate::table)
        .def_readonly("scan_bound", &OrderEstimate::scan_bound)
        .def_readonly("sieve_radius", &OrderEstimate::sieve_radius);

    m.def("eval_log_density",
          [](const MixtureParams& mix, const LocationFamily& fam, const std::vector<double>& x) {
              return eval_log_density(mix, fam, x);
          },
          py::arg("mix"), py::arg("family"), py::arg("x"));

    m.def("sample",
          [](const MixtureParams& mix, const LocationFamily& fam, long n, std::uint64_t seed) {
              return sample(mix, fam, n, seed);
          },
          py::arg("mix"), py::arg("family"), py::arg("n"), py::arg("seed"));

    m.def("write_csv", &write_csv, py::arg("data"), py::arg("path"));
    m.def("read_csv", &read_csv, py::arg("path"), py::arg("dim"));

    m.def("build_grid",
          [](const MixtureParams& fstar, const LocationFamily& fam, double step, double radius) {
              return build_grid(fstar, fam, GridSpec::uniform(step, radius));
          },
          py::arg("fstar"), py::arg("family"), py::arg("step") = 0.01, py::arg("radius") = 0.0);

    m.def("hellinger", &hellinger, py::arg("f"), py::arg("g"), py::arg("grid"));
    m.def("chi_square", &chi_square, py::arg("f"), py::arg("fstar"), py::arg("grid"));
    m.def("kl", &kl, py::arg("fstar"), py::arg("f"), py::arg("grid"));

    m.def("pseudodistance",
          [](const MixtureParams& f, const MixtureParams& fstar, std::uint64_t seed) {
              auto part = build_partition(fstar, seed);
              return pseudodistance(f, fstar, part);
          },
          py::arg("f"), py::arg("fstar"), py::arg("partition_seed") = 1);

    m.def("sieve_radius",
          [](const std::string& rule, double c, double exponent, long n) {
              SieveSchedule s = rule == "constant"      ? SieveSchedule::constant(c)
                                : rule == "sqrt-loglog" ? SieveSchedule::sqrt_loglog(c)
                                                        : SieveSchedule::sqrt_log_little_o(c, exponent);
              return sieve_radius(s, n);
          },
          py::arg("rule"), py::arg("c"), py::arg("exponent"), py::arg("n"));

    m.def("fit",
          [](int q, const Dataset& data, const LocationFamily& fam, double radius, int starts,
             std::uint64_t seed, double tol, int max_iter, int threads) {
              FitOptions opts;
              opts.starts = starts;
              opts.seed = seed;
              opts.tol = tol;
              opts.max_iter = max_iter;
              opts.threads = threads;
              return fit_constrained(q, data, fam, {radius}, opts);
          },
          py::arg("q"), py::arg("data"), py::arg("family"), py::arg("radius"),
          py::arg("starts") = 20, py::arg("seed") = 1, py::arg("tol") = 1e-7,
          py::arg("max_iter") = 300, py::arg("threads") = 1);

    m.def("estimate_order",
          [](const Dataset& data, const LocationFamily& fam, const std::string& penalty,
             double radius, int starts, std::uint64_t seed, int q_cap, int threads) {
              FitOptions opts;
              opts.starts = starts;
              opts.seed = seed;
              opts.threads = threads;
              return estimate_order(data, fam, Penalty::parse(penalty),
                                    SieveSchedule::constant(radius), opts, q_cap);
          },
          py::arg("data"), py::arg("family"), py::arg("penalty") = "bic", py::arg("radius") = 10.0,
          py::arg("starts") = 20, py::arg("seed") = 1, py::arg("q_cap") = 8,
          py::arg("threads") = 1);

    m.def("penalty_value",
          [](const std::string& spec, long n, int q, int dim) {
              return Penalty::parse(spec).value(n, q, dim);
          },
          py::arg("spec"), py::arg("n"), py::arg("q"), py::arg("dim") = 1);

#ifdef VERSION_INFO
    m.attr("__version__") = VERSION_INFO;
#else
    m.attr("__version__") = "dev";
#endif
}
