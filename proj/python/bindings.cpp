#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <stdexcept>

#include "pprdyn/embedding.hpp"
#include "pprdyn/graph.hpp"
#include "pprdyn/ppr.hpp"

namespace py = pybind11;
using namespace pprdyn;

namespace {

// Rows index nodes on the Python side; storage here is per-node columns.
FeatureMatrix matrix_from_numpy(const py::array_t<float, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw std::invalid_argument("features must be a 2d array");
    FeatureMatrix X;
    X.resize(static_cast<std::size_t>(arr.shape(1)), static_cast<std::size_t>(arr.shape(0)));
    auto view = arr.unchecked<2>();
    for (py::ssize_t j = 0; j < arr.shape(0); ++j)
        for (py::ssize_t k = 0; k < arr.shape(1); ++k)
            X.data[static_cast<std::size_t>(j) * X.dim + static_cast<std::size_t>(k)] =
                view(j, k);
    return X;
}

py::array_t<double> vector_to_numpy(const std::vector<double>& v) {
    py::array_t<double> out({static_cast<py::ssize_t>(v.size())},
                            {static_cast<py::ssize_t>(sizeof(double))});
    std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(double));
    return out;
}

} // namespace

PYBIND11_MODULE(_pprdyn, m) {
    m.doc() = "Dynamic personalized PageRank solvers and node representations";

    py::register_exception<DegreeZeroError>(m, "DegreeZeroError");
    py::register_exception<DanglingNodeError>(m, "DanglingNodeError");

    py::class_<DynamicGraph>(m, "DynamicGraph")
        .def(py::init<std::size_t>(), py::arg("node_count"))
        .def("insert_edge", &DynamicGraph::insert_edge, py::arg("u"), py::arg("v"),
             "Insert an undirected edge; false if it was already present")
        .def("has_edge", &DynamicGraph::has_edge, py::arg("u"), py::arg("v"))
        .def("degree", &DynamicGraph::degree, py::arg("u"))
        .def("node_count", &DynamicGraph::node_count)
        .def("edge_count", &DynamicGraph::edge_count)
        .def("epoch", &DynamicGraph::epoch);

    py::class_<PprConfig>(m, "PprConfig")
        .def(py::init([](double alpha, double eps) {
                 PprConfig cfg;
                 cfg.alpha = alpha;
                 cfg.eps = eps;
                 cfg.validate();
                 return cfg;
             }),
             py::arg("alpha") = 0.15, py::arg("eps") = 1e-8)
        .def_readwrite("alpha", &PprConfig::alpha)
        .def_readwrite("eps", &PprConfig::eps);

    py::class_<PprVector>(m, "PprVector")
        .def_readonly("source", &PprVector::source)
        .def("l1", &PprVector::l1)
        .def(
            "items",
            [](const PprVector& pi) {
                py::list out;
                for (std::size_t k = 0; k < pi.entries.size(); ++k)
                    out.append(py::make_tuple(pi.entries.idx[k], pi.entries.val[k]));
                return out;
            },
            "Nonzero (node, value) pairs")
        .def(
            "dense",
            [](const PprVector& pi, std::size_t n) {
                py::array_t<double> out({static_cast<py::ssize_t>(n)},
                                        {static_cast<py::ssize_t>(sizeof(double))});
                auto view = out.mutable_unchecked<1>();
                for (std::size_t i = 0; i < n; ++i) view(static_cast<py::ssize_t>(i)) = 0.0;
                for (std::size_t k = 0; k < pi.entries.size(); ++k) {
                    if (pi.entries.idx[k] >= n)
                        throw std::invalid_argument("dense: node id beyond requested length");
                    view(static_cast<py::ssize_t>(pi.entries.idx[k])) = pi.entries.val[k];
                }
                return out;
            },
            py::arg("n"));

    py::class_<PprState>(m, "PprState")
        .def_readonly("source", &PprState::source)
        .def_readonly("op_count", &PprState::op_count)
        .def_readonly("epoch", &PprState::epoch);

    py::class_<PushState>(m, "PushState")
        .def_readonly("source", &PushState::source)
        .def_readonly("op_count", &PushState::op_count)
        .def_readonly("epoch", &PushState::epoch);

    py::class_<CertificateReport>(m, "CertificateReport")
        .def_readonly("ok", &CertificateReport::ok)
        .def_readonly("max_violation", &CertificateReport::max_violation);

    m.def("make_ista_state", &make_ista_state, py::arg("g"), py::arg("source"), py::arg("cfg"));
    m.def("make_push_state", &make_push_state, py::arg("g"), py::arg("source"));

    m.def(
        "ista_solve",
        [](const DynamicGraph& g, PprState& st, const PprConfig& cfg) { ista_solve(g, st, cfg); },
        py::arg("g"), py::arg("state"), py::arg("cfg"));
    m.def(
        "forward_push",
        [](const DynamicGraph& g, PushState& st, const PprConfig& cfg) {
            forward_push(g, st, cfg);
        },
        py::arg("g"), py::arg("state"), py::arg("cfg"));

    // Adjustments consume the graph BEFORE the edge exists; call both
    // directions, then insert the edge, then resolve.
    m.def(
        "ista_adjust_edge",
        [](PprState& st, const DynamicGraph& g_before, NodeId u, NodeId v, const PprConfig& cfg) {
            ista_adjust_edge(st, g_before, u, v, cfg);
        },
        py::arg("state"), py::arg("g_before"), py::arg("u"), py::arg("v"), py::arg("cfg"));
    m.def(
        "push_adjust_edge",
        [](PushState& st, const DynamicGraph& g_before, NodeId u, NodeId v, const PprConfig& cfg) {
            push_adjust_edge(st, g_before, u, v, cfg);
        },
        py::arg("state"), py::arg("g_before"), py::arg("u"), py::arg("v"), py::arg("cfg"));

    m.def(
        "to_ppr",
        [](const DynamicGraph& g, const PprState& st, double tol) { return to_ppr(g, st, tol); },
        py::arg("g"), py::arg("state"), py::arg("tol") = 1e-12);
    m.def(
        "to_ppr", [](const PushState& st, double tol) { return to_ppr(st, tol); },
        py::arg("state"), py::arg("tol") = 1e-12);

    m.def(
        "residual_check",
        [](const DynamicGraph& g, const PprState& st, const PprConfig& cfg) {
            return residual_check(g, st, cfg);
        },
        py::arg("g"), py::arg("state"), py::arg("cfg"));
    m.def(
        "residual_check",
        [](const DynamicGraph& g, const PushState& st, const PprConfig& cfg) {
            return residual_check(g, st, cfg);
        },
        py::arg("g"), py::arg("state"), py::arg("cfg"));

    m.def(
        "certificate_check",
        [](const DynamicGraph& g, const PprState& st, const PprConfig& cfg) {
            return certificate_check(g, st, cfg);
        },
        py::arg("g"), py::arg("state"), py::arg("cfg"));
    m.def(
        "certificate_check",
        [](const DynamicGraph& g, const PushState& st, const PprConfig& cfg) {
            return certificate_check(g, st, cfg);
        },
        py::arg("g"), py::arg("state"), py::arg("cfg"));

    m.def("push_mass", &push_mass, py::arg("state"));

    m.def(
        "power_iteration_dense",
        [](const DynamicGraph& g, NodeId source, double alpha, double tol) {
            return vector_to_numpy(power_iteration_dense(g, source, alpha, tol));
        },
        py::arg("g"), py::arg("source"), py::arg("alpha") = 0.15, py::arg("tol") = 1e-12);

    m.def(
        "aggregate",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& X,
           const PprVector& pi) { return vector_to_numpy(aggregate(matrix_from_numpy(X), pi)); },
        py::arg("features"), py::arg("pi"),
        "Proximity-weighted attribute aggregation; features has one row per node");

    m.def(
        "hash_reduce",
        [](const PprVector& pi, std::size_t d_pe, std::uint64_t seed) {
            return vector_to_numpy(hash_reduce(pi, d_pe, seed).vec);
        },
        py::arg("pi"), py::arg("d_pe"), py::arg("seed"));
    m.def(
        "sparse_random_project",
        [](const PprVector& pi, std::size_t d_pe, std::uint64_t seed) {
            return vector_to_numpy(sparse_random_project(pi, d_pe, seed).vec);
        },
        py::arg("pi"), py::arg("d_pe"), py::arg("seed"));
    m.def("default_pe_dim", &default_pe_dim, py::arg("n"));
}
