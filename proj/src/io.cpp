#include "minnet/io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include "minnet/basis.hpp"
#include "minnet/lp_solver.hpp"

namespace minnet {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InvalidInput("cannot read file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json_text(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded())
        throw InvalidInput("malformed JSON");
    return j;
}

double as_number(const json& v, const char* what) {
    if (!v.is_number())
        throw InvalidInput(std::string(what) + " must be a number");
    return v.get<double>();
}

int as_index(const json& v, const char* what) {
    if (!v.is_number_integer())
        throw InvalidInput(std::string(what) + " must be an integer");
    return v.get<int>();
}

std::vector<Triangle> triangles_from_json(const json& arr) {
    if (!arr.is_array())
        throw InvalidInput("triangles must be an array of index triples");
    std::vector<Triangle> tris;
    for (const json& t : arr) {
        if (!t.is_array() || t.size() != 3)
            throw InvalidInput("each triangle must be an index triple");
        tris.push_back({{as_index(t[0], "triangle index"), as_index(t[1], "triangle index"),
                         as_index(t[2], "triangle index")}});
    }
    return tris;
}

json model_to_json(const SecondDerivModel& m) {
    json j;
    if (std::holds_alternative<ZeroModel>(m)) {
        j["type"] = "zero";
    } else if (const auto* p = std::get_if<PositivePartPower>(&m)) {
        j["type"] = "positive_part_power";
        j["slope"] = p->slope;
        j["intercept"] = p->intercept;
        j["exponent"] = p->exponent;
    } else {
        const auto& pc = std::get<PiecewiseConstant>(m);
        j["type"] = "piecewise_constant";
        j["knot"] = pc.knot;
        j["left"] = pc.left;
        j["right"] = pc.right;
    }
    return j;
}

SecondDerivModel model_from_json(const json& j) {
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
        throw InvalidInput("model must be an object with a type");
    const std::string type = j["type"].get<std::string>();
    if (type == "zero")
        return ZeroModel{};
    if (type == "positive_part_power")
        return PositivePartPower{as_number(j.at("slope"), "slope"),
                                 as_number(j.at("intercept"), "intercept"),
                                 as_number(j.at("exponent"), "exponent")};
    if (type == "piecewise_constant")
        return PiecewiseConstant{as_number(j.at("knot"), "knot"),
                                 as_number(j.at("left"), "left"),
                                 as_number(j.at("right"), "right")};
    throw InvalidInput("unknown model type: " + type);
}

json network_json_object(const CurveNetwork& net, const ScatteredData& data,
                         const Triangulation& tri) {
    json j;
    json pts = json::array();
    for (const Point3& p : data.points)
        pts.push_back(json::array({p.x, p.y, p.z}));
    j["points"] = std::move(pts);
    json tris = json::array();
    for (const Triangle& t : tri.triangles)
        tris.push_back(json::array({t.v[0], t.v[1], t.v[2]}));
    j["triangles"] = std::move(tris);
    json edges = json::array();
    for (const EdgeFunction& e : net.edges) {
        json rec;
        rec["edge"] = json::array({e.lo, e.hi});
        rec["fprime0"] = e.fprime0;
        rec["model"] = model_to_json(e.model);
        edges.push_back(std::move(rec));
    }
    j["edges"] = std::move(edges);
    return j;
}

CurveNetwork network_from_json_object(const json& j, ScatteredData* data_out,
                                      Triangulation* tri_out) {
    if (!j.is_object() || !j.contains("points") || !j.contains("triangles") ||
        !j.contains("edges"))
        throw InvalidInput("network JSON must contain points, triangles and edges");
    ScatteredData data;
    for (const json& p : j["points"]) {
        if (!p.is_array() || p.size() != 3)
            throw InvalidInput("each point must be an [x, y, z] triple");
        data.points.push_back(
            {as_number(p[0], "x"), as_number(p[1], "y"), as_number(p[2], "z")});
    }
    Triangulation tri = build_triangulation(data, triangles_from_json(j["triangles"]));
    CurveNetwork net;
    net.edges.resize(tri.n_edges());
    std::vector<char> seen(tri.n_edges(), 0);
    for (const json& rec : j["edges"]) {
        if (!rec.is_object() || !rec.contains("edge") || !rec["edge"].is_array() ||
            rec["edge"].size() != 2)
            throw InvalidInput("each edge record needs an [i, j] pair");
        int i = as_index(rec["edge"][0], "edge index");
        int k = as_index(rec["edge"][1], "edge index");
        int idx = tri.find_edge(i, k);
        if (idx < 0)
            throw InvalidInput("edge record does not match the triangulation");
        if (seen[idx])
            throw InvalidInput("duplicate edge record");
        seen[idx] = 1;
        EdgeFunction f;
        f.lo = tri.edges[idx].lo;
        f.hi = tri.edges[idx].hi;
        f.length = tri.edges[idx].length;
        f.z_lo = data.points[f.lo].z;
        f.z_hi = data.points[f.hi].z;
        f.fprime0 = as_number(rec.at("fprime0"), "fprime0");
        f.model = model_from_json(rec.at("model"));
        net.edges[idx] = f;
    }
    for (char s : seen)
        if (!s)
            throw InvalidInput("missing edge record");
    if (data_out)
        *data_out = data;
    if (tri_out)
        *tri_out = tri;
    return net;
}

json convexity_json_object(const ConvexityReport& rep, const Triangulation& tri) {
    json j;
    j["is_convex"] = rep.is_convex;
    j["is_strictly_convex"] = rep.is_strictly_convex;
    j["tolerance"] = rep.tolerance;
    json jumps = json::array();
    for (const EdgeJump& ej : rep.gradient_jumps) {
        json rec;
        rec["edge"] = json::array({tri.edges[ej.edge].lo, tri.edges[ej.edge].hi});
        rec["jump"] = ej.jump;
        jumps.push_back(std::move(rec));
    }
    j["gradient_jumps"] = std::move(jumps);
    json off = json::array();
    for (int ei : rep.offending_edges)
        off.push_back(json::array({tri.edges[ei].lo, tri.edges[ei].hi}));
    j["offending_edges"] = std::move(off);
    return j;
}

ConvexityReport convexity_from_json_object(const json& j, const Triangulation& tri) {
    ConvexityReport rep;
    rep.is_convex = j.at("is_convex").get<bool>();
    rep.is_strictly_convex = j.at("is_strictly_convex").get<bool>();
    rep.tolerance = as_number(j.at("tolerance"), "tolerance");
    for (const json& rec : j.at("gradient_jumps")) {
        EdgeJump ej;
        ej.edge = tri.find_edge(as_index(rec.at("edge")[0], "edge index"),
                                as_index(rec.at("edge")[1], "edge index"));
        if (ej.edge < 0)
            throw InvalidInput("gradient jump edge not in the triangulation");
        ej.jump = as_number(rec.at("jump"), "jump");
        rep.gradient_jumps.push_back(ej);
    }
    if (j.contains("offending_edges"))
        for (const json& rec : j.at("offending_edges")) {
            int ei = tri.find_edge(as_index(rec[0], "edge index"), as_index(rec[1], "edge index"));
            if (ei < 0)
                throw InvalidInput("offending edge not in the triangulation");
            rep.offending_edges.push_back(ei);
        }
    return rep;
}

json window_residuals_json(const std::vector<WindowResidual>& v) {
    json arr = json::array();
    for (const WindowResidual& r : v) {
        json rec;
        rec["vertex"] = r.vertex;
        rec["window"] = r.window;
        rec["value"] = r.value;
        arr.push_back(std::move(rec));
    }
    return arr;
}

std::vector<WindowResidual> window_residuals_from_json(const json& arr) {
    std::vector<WindowResidual> v;
    for (const json& rec : arr)
        v.push_back({as_index(rec.at("vertex"), "vertex"), as_index(rec.at("window"), "window"),
                     as_number(rec.at("value"), "value")});
    return v;
}

json residuals_json_object(const Residuals& r) {
    json j;
    j["smoothness"] = window_residuals_json(r.smoothness);
    j["lemma4"] = window_residuals_json(r.lemma4);
    j["interpolation"] = r.interpolation;
    j["max_smoothness"] = r.max_smoothness;
    j["max_lemma4"] = r.max_lemma4;
    j["max_interpolation"] = r.max_interpolation;
    return j;
}

Residuals residuals_from_json_object(const json& j) {
    Residuals r;
    r.smoothness = window_residuals_from_json(j.at("smoothness"));
    r.lemma4 = window_residuals_from_json(j.at("lemma4"));
    for (const json& v : j.at("interpolation"))
        r.interpolation.push_back(as_number(v, "interpolation residual"));
    r.max_smoothness = as_number(j.at("max_smoothness"), "max_smoothness");
    r.max_lemma4 = as_number(j.at("max_lemma4"), "max_lemma4");
    r.max_interpolation = as_number(j.at("max_interpolation"), "max_interpolation");
    return r;
}

json certificate_json_object(const Certificate& c) {
    json j;
    if (std::holds_alternative<NotAttempted>(c)) {
        j["status"] = "not_attempted";
    } else if (std::holds_alternative<NotRepresentable>(c)) {
        j["status"] = "not_representable";
    } else {
        const Certified& cert = std::get<Certified>(c);
        j["status"] = "certified";
        j["C"] = cert.C;
        j["alpha"] = cert.alpha;
    }
    return j;
}

Certificate certificate_from_json_object(const json& j) {
    const std::string status = j.at("status").get<std::string>();
    if (status == "not_attempted")
        return NotAttempted{};
    if (status == "not_representable")
        return NotRepresentable{};
    if (status == "certified") {
        Certified c;
        c.C = as_number(j.at("C"), "C");
        for (const json& v : j.at("alpha"))
            c.alpha.push_back(as_number(v, "alpha"));
        return c;
    }
    throw InvalidInput("unknown certificate status: " + status);
}

json basics_json_object(const BasicCurveNetworks& basics, const Triangulation& tri) {
    json arr = json::array();
    for (const BasicWindow& w : basics.windows) {
        json rec;
        rec["vertex"] = w.vertex;
        rec["window"] = w.window;
        json edges = json::array();
        for (int r = 0; r < 3; ++r) {
            const Edge& e = tri.edges[w.edge_indices[r]];
            edges.push_back(json::array({e.lo, e.hi}));
        }
        rec["edges"] = std::move(edges);
        rec["lambda"] = json::array({w.lambda[0], w.lambda[1], w.lambda[2]});
        rec["d"] = w.d;
        arr.push_back(std::move(rec));
    }
    return arr;
}

BasicCurveNetworks basics_from_json_object(const json& arr, const Triangulation& tri) {
    BasicCurveNetworks basics;
    for (const json& rec : arr) {
        BasicWindow w;
        w.vertex = as_index(rec.at("vertex"), "vertex");
        w.window = as_index(rec.at("window"), "window");
        const json& edges = rec.at("edges");
        if (!edges.is_array() || edges.size() != 3)
            throw InvalidInput("basic window needs three edges");
        for (int r = 0; r < 3; ++r) {
            int idx = tri.find_edge(as_index(edges[r][0], "edge index"),
                                    as_index(edges[r][1], "edge index"));
            if (idx < 0)
                throw InvalidInput("basic window edge not in the triangulation");
            w.edge_indices[r] = idx;
            w.from_lo[r] = tri.edges[idx].lo == w.vertex;
            w.neighbors[r] = tri.other_end(idx, w.vertex);
            w.lengths[r] = tri.edges[idx].length;
            w.lambda[r] = as_number(rec.at("lambda")[r], "lambda");
        }
        w.d = as_number(rec.at("d"), "d");
        basics.windows.push_back(w);
    }
    return basics;
}

std::string fmt_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace

SolveInput parse_input_json(const std::string& text) {
    json j = parse_json_text(text);
    if (!j.is_object() || !j.contains("points") || !j["points"].is_array())
        throw InvalidInput("input must be an object with a points array");
    SolveInput in;
    for (const json& p : j["points"]) {
        if (!p.is_array() || p.size() != 3)
            throw InvalidInput("each point must be an [x, y, z] triple");
        in.data.points.push_back(
            {as_number(p[0], "x"), as_number(p[1], "y"), as_number(p[2], "z")});
    }
    if (j.contains("triangles"))
        in.triangles = triangles_from_json(j["triangles"]);
    return in;
}

SolveInput load_input_json(const std::string& path) { return parse_input_json(read_file(path)); }

std::string network_to_json(const CurveNetwork& net, const ScatteredData& data,
                            const Triangulation& tri) {
    return network_json_object(net, data, tri).dump(2);
}

CurveNetwork network_from_json(const std::string& text, ScatteredData* data,
                               Triangulation* tri) {
    return network_from_json_object(parse_json_text(text), data, tri);
}

std::string convexity_to_json(const ConvexityReport& rep, const Triangulation& tri) {
    return convexity_json_object(rep, tri).dump(2);
}

std::string report_to_json(const SolveReport& rep) {
    json j;
    if (std::isinf(rep.p))
        j["p"] = "inf";
    else
        j["p"] = rep.p;
    j["achieved_norm"] = rep.achieved_norm;
    j["iterations"] = rep.iterations;
    j["final_residual"] = rep.final_residual;
    j["convexity"] = convexity_json_object(rep.convexity, rep.tri);
    j["residuals"] = residuals_json_object(rep.resid);
    j["certificate"] = certificate_json_object(rep.certificate);
    j["basics"] = basics_json_object(rep.basics, rep.tri);
    j["network"] = network_json_object(rep.network, rep.data, rep.tri);
    return j.dump(2);
}

SolveReport report_from_json(const std::string& text) {
    json j = parse_json_text(text);
    SolveReport rep;
    if (j.at("p").is_string()) {
        if (j["p"].get<std::string>() != "inf")
            throw InvalidInput("p must be a number or \"inf\"");
        rep.p = std::numeric_limits<double>::infinity();
    } else {
        rep.p = as_number(j.at("p"), "p");
    }
    rep.network = network_from_json_object(j.at("network"), &rep.data, &rep.tri);
    rep.achieved_norm = as_number(j.at("achieved_norm"), "achieved_norm");
    rep.iterations = as_index(j.at("iterations"), "iterations");
    rep.final_residual = as_number(j.at("final_residual"), "final_residual");
    rep.convexity = convexity_from_json_object(j.at("convexity"), rep.tri);
    rep.resid = residuals_from_json_object(j.at("residuals"));
    rep.certificate = certificate_from_json_object(j.at("certificate"));
    rep.basics = basics_from_json_object(j.at("basics"), rep.tri);
    return rep;
}

SolveReport run_solve(const SolveInput& in, double p, double tol) {
    if (std::isnan(p) || !(p > 1.0))
        throw InvalidInput("p must be greater than 1 (or infinity)");
    SolveReport rep;
    rep.p = p;
    rep.data = in.data;
    rep.tri = build_triangulation(in.data, in.triangles);
    rep.convexity = check_convexity(in.data, rep.tri);
    if (!rep.convexity.is_convex)
        throw NonConvexData();
    rep.basics = build_basic_networks(in.data, rep.tri);

    if (std::isinf(p)) {
        MinimaxOptions opts;
        opts.tol = tol;
        LinfSolution sol = minimax_solve(in.data, rep.tri, rep.basics, opts);
        sol.certificate = certificate_theorem3(sol, in.data, rep.tri, rep.basics);
        rep.network = sol.network;
        rep.achieved_norm = sol.achieved_norm;
        rep.iterations = sol.iterations;
        rep.certificate = sol.certificate;
    } else {
        NewtonOptions opts;
        opts.tol = tol;
        LpSolution sol = solve_lp(in.data, rep.tri, p, opts);
        rep.network = sol.network;
        rep.achieved_norm = sol.achieved_norm;
        rep.iterations = sol.iterations;
        rep.final_residual = sol.final_residual;
    }
    rep.resid = residuals(rep.network, in.data, rep.basics);
    if (std::isinf(p))
        rep.final_residual = rep.resid.max_smoothness;
    return rep;
}

void export_samples(const CurveNetwork& net, const Triangulation& tri, int density,
                    std::ostream& out) {
    if (density < 2)
        throw InvalidInput("sample density must be at least 2");
    if (static_cast<int>(net.edges.size()) != tri.n_edges())
        throw InvalidInput("network does not match the triangulation");
    out << "edge_i,edge_j,t,x,y,z\n";
    for (int e = 0; e < tri.n_edges(); ++e) {
        const EdgeFunction& f = net.edges[e];
        const Vec2 lo = tri.vertices[f.lo], hi = tri.vertices[f.hi];
        for (int k = 0; k <= density; ++k) {
            const double s = static_cast<double>(k) / density;
            const double t = s * f.length;
            const double x = lo.x + s * (hi.x - lo.x);
            const double y = lo.y + s * (hi.y - lo.y);
            out << f.lo << ',' << f.hi << ',' << fmt_double(t) << ',' << fmt_double(x) << ','
                << fmt_double(y) << ',' << fmt_double(evaluate(net, e, t)) << '\n';
        }
    }
}

namespace {

std::vector<Triangle> resolve_triangles(const SolveInput& in, const std::string& source) {
    if (source == "auto")
        return in.triangles;
    json j = parse_json_text(read_file(source));
    if (j.is_object() && j.contains("triangles"))
        return triangles_from_json(j["triangles"]);
    return triangles_from_json(j);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InvalidInput("cannot write file: " + path);
    out << text;
    if (!out.good())
        throw Error("failed writing " + path);
}

std::string sibling_network_path(const std::string& out) {
    const std::string suffix = ".json";
    if (out.size() > suffix.size() &&
        out.compare(out.size() - suffix.size(), suffix.size(), suffix) == 0)
        return out.substr(0, out.size() - suffix.size()) + ".network.json";
    return out + ".network.json";
}

int cmd_validate(const std::string& input, const std::string& tri_source,
                 const std::string& out) {
    SolveInput in = load_input_json(input);
    Triangulation tri = build_triangulation(in.data, resolve_triangles(in, tri_source));
    ConvexityReport conv = check_convexity(in.data, tri);
    std::string text = convexity_to_json(conv, tri) + "\n";
    if (out.empty())
        std::cout << text;
    else
        write_text(out, text);
    return conv.is_convex ? 0 : 3;
}

int cmd_solve(const std::string& input, const std::string& pstr, const std::string& tri_source,
              double tol, const std::string& out) {
    SolveInput in = load_input_json(input);
    in.triangles = resolve_triangles(in, tri_source);

    double p;
    if (pstr == "inf") {
        p = std::numeric_limits<double>::infinity();
    } else {
        try {
            size_t pos = 0;
            p = std::stod(pstr, &pos);
            if (pos != pstr.size())
                throw std::invalid_argument(pstr);
        } catch (const std::exception&) {
            throw InvalidInput("--p must be a number or \"inf\"");
        }
    }

    SolveReport rep = run_solve(in, p, tol);
    std::string text = report_to_json(rep) + "\n";
    if (out.empty()) {
        std::cout << text;
    } else {
        write_text(out, text);
        write_text(sibling_network_path(out),
                   network_to_json(rep.network, rep.data, rep.tri) + "\n");
    }
    return 0;
}

int cmd_sample(const std::string& input, int density, const std::string& out) {
    ScatteredData data;
    Triangulation tri;
    CurveNetwork net = network_from_json(read_file(input), &data, &tri);
    if (out.empty()) {
        export_samples(net, tri, density, std::cout);
    } else {
        std::ofstream os(out, std::ios::binary);
        if (!os)
            throw InvalidInput("cannot write file: " + out);
        export_samples(net, tri, density, os);
    }
    return 0;
}

bool residuals_identical(const Residuals& x, const Residuals& y) {
    if (x.smoothness.size() != y.smoothness.size() || x.lemma4.size() != y.lemma4.size() ||
        x.interpolation.size() != y.interpolation.size())
        return false;
    for (size_t i = 0; i < x.smoothness.size(); ++i)
        if (x.smoothness[i].value != y.smoothness[i].value ||
            x.smoothness[i].vertex != y.smoothness[i].vertex ||
            x.smoothness[i].window != y.smoothness[i].window)
            return false;
    for (size_t i = 0; i < x.lemma4.size(); ++i)
        if (x.lemma4[i].value != y.lemma4[i].value || x.lemma4[i].vertex != y.lemma4[i].vertex ||
            x.lemma4[i].window != y.lemma4[i].window)
            return false;
    for (size_t i = 0; i < x.interpolation.size(); ++i)
        if (x.interpolation[i] != y.interpolation[i])
            return false;
    return x.max_smoothness == y.max_smoothness && x.max_lemma4 == y.max_lemma4 &&
           x.max_interpolation == y.max_interpolation;
}

int cmd_report(const std::string& input) {
    SolveReport rep = report_from_json(read_file(input));
    Residuals rescored = residuals(rep.network, rep.data, rep.basics);
    bool match = residuals_identical(rescored, rep.resid);
    SolveReport out = rep;
    out.resid = rescored;
    json j = parse_json_text(report_to_json(out));
    j["rescore_match"] = match;
    std::cout << j.dump(2) << "\n";
    return 0;
}

} // namespace

int run(int argc, const char* const* argv) {
    if (const char* threads = std::getenv("MINNET_THREADS")) {
        int n = std::atoi(threads);
        if (n > 0)
            Eigen::setNbThreads(n);
    }

    CLI::App app{"minimum-norm interpolation curve networks over triangulated scattered data"};
    app.require_subcommand(1);

    std::string input, tri_source = "auto", out, pstr = "2";
    double tol = 1e-10;
    int density = 50;

    CLI::App* validate = app.add_subcommand("validate", "validate input and report convexity");
    validate->add_option("--input", input, "input JSON")->required();
    validate->add_option("--triangulation", tri_source, "auto or a triangles JSON file");
    validate->add_option("--out", out, "output path (stdout if omitted)");

    CLI::App* solve = app.add_subcommand("solve", "compute the minimum-norm network");
    solve->add_option("--input", input, "input JSON")->required();
    solve->add_option("--p", pstr, "norm exponent in (1, inf) or \"inf\"");
    solve->add_option("--triangulation", tri_source, "auto or a triangles JSON file");
    solve->add_option("--tol", tol, "solver tolerance");
    solve->add_option("--out", out, "report path; network lands next to it (stdout if omitted)");

    CLI::App* sample = app.add_subcommand("sample", "sample a network JSON to CSV");
    sample->add_option("--input", input, "network JSON")->required();
    sample->add_option("--density", density, "samples per edge (>= 2)");
    sample->add_option("--out", out, "output path (stdout if omitted)");

    CLI::App* report = app.add_subcommand("report", "re-score and pretty-print a report");
    report->add_option("--input", input, "report JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const auto t0 = std::chrono::steady_clock::now();
    int code = 0;
    try {
        if (validate->parsed())
            code = cmd_validate(input, tri_source, out);
        else if (solve->parsed())
            code = cmd_solve(input, pstr, tri_source, tol, out);
        else if (sample->parsed())
            code = cmd_sample(input, density, out);
        else if (report->parsed())
            code = cmd_report(input);
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NonConvexData& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    const auto t1 = std::chrono::steady_clock::now();
    std::cerr << "elapsed: "
              << std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count()
              << " ms\n";
    return code;
}

} // namespace minnet
