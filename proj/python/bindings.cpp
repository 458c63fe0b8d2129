#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "minnet/io.hpp"

namespace py = pybind11;

namespace {

minnet::SolveInput make_input(const std::vector<std::array<double, 3>>& points,
                              const std::optional<std::vector<std::array<int, 3>>>& triangles) {
    minnet::SolveInput in;
    for (const auto& p : points)
        in.data.points.push_back({p[0], p[1], p[2]});
    if (triangles)
        for (const auto& t : *triangles)
            in.triangles.push_back({{t[0], t[1], t[2]}});
    return in;
}

} // namespace

PYBIND11_MODULE(pyminnet, m) {
    m.doc() = "Minimum-norm interpolation curve networks over triangulated scattered data";

    py::register_exception<minnet::Error>(m, "SolverError", PyExc_RuntimeError);
    py::register_exception<minnet::NonConvexData>(m, "NonConvexData", PyExc_ValueError);
    py::register_exception<minnet::InvalidInput>(m, "InvalidInput", PyExc_ValueError);

    m.def(
        "solve",
        [](const std::vector<std::array<double, 3>>& points, double p,
           const std::optional<std::vector<std::array<int, 3>>>& triangles, double tol) {
            return minnet::report_to_json(minnet::run_solve(make_input(points, triangles), p, tol));
        },
        py::arg("points"), py::arg("p") = 2.0, py::arg("triangles") = py::none(),
        py::arg("tol") = 1e-10,
        "Solve for the minimum L_p (or, with p = math.inf, minimum L_inf) norm network; "
        "returns the report as a JSON string.");

    m.def(
        "solve_json",
        [](const std::string& input_json, double p, double tol) {
            return minnet::report_to_json(
                minnet::run_solve(minnet::parse_input_json(input_json), p, tol));
        },
        py::arg("input_json"), py::arg("p") = 2.0, py::arg("tol") = 1e-10,
        "Solve from an input JSON document; returns the report as a JSON string.");

    m.def(
        "validate",
        [](const std::vector<std::array<double, 3>>& points,
           const std::optional<std::vector<std::array<int, 3>>>& triangles) {
            minnet::SolveInput in = make_input(points, triangles);
            minnet::Triangulation tri = minnet::build_triangulation(in.data, in.triangles);
            return minnet::convexity_to_json(minnet::check_convexity(in.data, tri), tri);
        },
        py::arg("points"), py::arg("triangles") = py::none(),
        "Triangulate and check convexity; returns the convexity report as a JSON string.");

    m.def(
        "sample_csv",
        [](const std::string& network_json, int density) {
            minnet::ScatteredData data;
            minnet::Triangulation tri;
            minnet::CurveNetwork net = minnet::network_from_json(network_json, &data, &tri);
            std::ostringstream out;
            minnet::export_samples(net, tri, density, out);
            return out.str();
        },
        py::arg("network_json"), py::arg("density") = 50,
        "Sample every edge of a network JSON document into CSV text.");

    m.def(
        "evaluate",
        [](const std::string& network_json, int i, int j, double t, int order) {
            minnet::Triangulation tri;
            minnet::CurveNetwork net = minnet::network_from_json(network_json, nullptr, &tri);
            int idx = tri.find_edge(i, j);
            if (idx < 0)
                throw minnet::InvalidInput("no such edge in the network");
            return minnet::evaluate(net, idx, t, order);
        },
        py::arg("network_json"), py::arg("i"), py::arg("j"), py::arg("t"), py::arg("order") = 0,
        "Evaluate f (order 0), f' (1) or f'' (2) on edge (i, j) at parameter t.");

    m.def(
        "rescore",
        [](const std::string& report_json) {
            minnet::SolveReport rep = minnet::report_from_json(report_json);
            minnet::Residuals rescored = minnet::residuals(rep.network, rep.data, rep.basics);
            minnet::SolveReport out = rep;
            out.resid = rescored;
            std::string text = minnet::report_to_json(out);
            nlohmann::json a = nlohmann::json::parse(minnet::report_to_json(rep));
            nlohmann::json b = nlohmann::json::parse(text);
            return py::make_tuple(text, a["residuals"] == b["residuals"]);
        },
        py::arg("report_json"),
        "Recompute the residuals of a stored report; returns (report_json, bool match).");
}
