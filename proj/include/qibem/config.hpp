#pragma once

// JSON run configuration for the command line tool.
//
//   {
//     "problem": "circle",                    // or a custom object, see below
//     "quadrature": {"procedure": "QI2", "p": 2, "nodes": 5, "variant": "derivative-free",
//                    "near_radius": null, "theta": 10, "double_layer_order": 8},
//     "levels": 6, "level": 0, "output": "out.csv",
//     "potential_points": [[0.1, 0.2]],
//     "quadtest": {"kind": "inner-singular", "nodes": [7, 13]},
//     "inner_profile": {"samples": 1601}
//   }
//
// A custom problem gives a B-form boundary, a linear Dirichlet datum
// u = c0 + c1 x1 + c2 x2 and a uniform discrete mesh:
//
//   {"geometry": {"degree": 2, "kind": "open", "knots": [...], "control_points": [[x, y], ...]},
//    "datum": {"linear": [c0, c1, c2]}, "mesh": {"degree": 2, "elements": 10},
//    "formulation": "exterior-indirect"}

#include "qibem/curve.hpp"
#include "qibem/galerkin.hpp"
#include "qibem/presets.hpp"
#include "qibem/quadrature.hpp"
#include "qibem/spline.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace qibem {

/// Malformed or inconsistent configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    ProblemPreset problem;
    QuadratureConfig quadrature;
    int levels = 6;
    int level = 0;
    std::string output;  // empty: standard output
    std::vector<Point> potential_points;
    std::string quadtest_kind = "all";
    std::vector<int> quadtest_nodes{7, 13};
    int profile_samples = 1601;
};

namespace detail {

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

inline void only_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

template <class T>
T get(const nlohmann::json& j, const std::string& key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

inline Point to_point(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ConfigError(where + ": points are [x, y] pairs");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline ProblemPreset custom_problem(const nlohmann::json& j) {
    only_keys(j, {"name", "geometry", "datum", "mesh", "formulation"}, "problem");
    const auto& g = j.at("geometry");
    only_keys(g, {"degree", "kind", "knots", "control_points"}, "problem.geometry");
    const int gd = get<int>(g, "degree", "problem.geometry");
    const std::string kind = lower(g.value("kind", std::string("open")));
    if (kind != "open" && kind != "periodic") throw ConfigError("problem.geometry.kind: open or periodic");
    const bool closed = kind == "periodic";
    std::vector<Point> cps;
    for (const auto& p : g.at("control_points")) cps.push_back(to_point(p, "problem.geometry.control_points"));

    ProblemPreset p;
    p.name = j.value("name", std::string("custom"));
    try {
        SplineSpace gs(KnotVector(get<std::vector<double>>(g, "knots", "problem.geometry"), gd,
                                  closed ? KnotKind::periodic : KnotKind::open));
        p.geometry = std::make_shared<BSplineCurve>(gs, cps);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("problem.geometry: ") + e.what());
    }
    p.formulation = closed ? Formulation::interior_direct : Formulation::exterior_indirect;
    if (j.contains("formulation")) {
        const std::string f = lower(get<std::string>(j, "formulation", "problem"));
        if (f != to_string(p.formulation))
            throw ConfigError("problem.formulation: '" + f + "' does not fit a " + kind + " boundary");
    }

    const auto& dj = j.at("datum");
    only_keys(dj, {"linear"}, "problem.datum");
    const auto c = get<std::vector<double>>(dj, "linear", "problem.datum");
    if (c.size() != 3) throw ConfigError("problem.datum.linear: three coefficients c0, c1, c2");
    auto geom = p.geometry;
    p.datum = [geom, c](double s) {
        const Point f = geom->eval(s);
        return c[0] + c[1] * f.x() + c[2] * f.y();
    };
    if (closed) {
        // A linear datum is its own harmonic extension; the flux is grad u . n.
        const double orient = geom->signed_area() < 0.0 ? -1.0 : 1.0;
        p.exact = [geom, c, orient](double s) {
            const Point f1 = geom->eval(s, 1);
            return orient * (c[1] * f1.y() - c[2] * f1.x()) / f1.norm();
        };
        p.exact_potential = [c](const Point& x) { return c[0] + c[1] * x.x() + c[2] * x.y(); };
    }

    const auto& m = j.at("mesh");
    only_keys(m, {"degree", "elements"}, "problem.mesh");
    const int md = get<int>(m, "degree", "problem.mesh");
    const int E = get<int>(m, "elements", "problem.mesh");
    if (md < 1 || E < 1) throw ConfigError("problem.mesh: degree and elements must be positive");
    const double a = geom->a(), b = geom->b();
    p.space = [=](int level) {
        const int n = E << level;
        if (closed)
            return SplineSpace(KnotVector::periodic(uniform_breaks(a, b, n), std::vector<int>(n + 1, 1), md));
        return SplineSpace(KnotVector::open_uniform(a, b, md, n));
    };
    return p;
}

inline void read_quadrature(const nlohmann::json& j, QuadratureConfig& q) {
    only_keys(j, {"procedure", "p", "nodes", "variant", "near_radius", "theta", "double_layer_order"}, "quadrature");
    if (j.contains("procedure")) {
        const std::string p = lower(get<std::string>(j, "procedure", "quadrature"));
        if (p == "qi1") q.procedure = Procedure::qi1;
        else if (p == "qi2") q.procedure = Procedure::qi2;
        else throw ConfigError("quadrature.procedure: QI1 or QI2");
    }
    if (j.contains("p")) q.qi_degree = get<int>(j, "p", "quadrature");
    if (j.contains("nodes")) q.nodes = get<int>(j, "nodes", "quadrature");
    if (j.contains("variant")) {
        const std::string v = lower(get<std::string>(j, "variant", "quadrature"));
        if (v == "hermite") q.variant = QiVariant::hermite;
        else if (v == "derivative-free") q.variant = QiVariant::derivative_free;
        else throw ConfigError("quadrature.variant: hermite or derivative-free");
    }
    if (j.contains("near_radius"))
        q.near_radius = j["near_radius"].is_null() ? std::numeric_limits<double>::infinity()
                                                   : get<double>(j, "near_radius", "quadrature");
    if (j.contains("theta")) q.theta = get<double>(j, "theta", "quadrature");
    if (j.contains("double_layer_order")) q.double_layer_order = get<int>(j, "double_layer_order", "quadrature");
}

} // namespace detail

inline ProblemPreset problem_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        try {
            return make_preset(j.get<std::string>());
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    return detail::custom_problem(j);
}

/// Checks the ranges the drivers rely on.
inline void validate(const RunConfig& c) {
    const auto& q = c.quadrature;
    if (q.qi_degree < 1) throw ConfigError("quadrature.p must be >= 1");
    if (q.nodes < q.qi_degree + 1) throw ConfigError("quadrature.nodes must be at least p + 1");
    if (!(q.near_radius >= 0.0)) throw ConfigError("quadrature.near_radius must be >= 0");
    if (!(q.theta > 0.0)) throw ConfigError("quadrature.theta must be positive");
    if (q.double_layer_order < 0) throw ConfigError("quadrature.double_layer_order must be >= 0");
    if (c.levels < 1) throw ConfigError("levels must be >= 1");
    if (c.level < 0) throw ConfigError("level must be >= 0");
    if (c.profile_samples < 3) throw ConfigError("inner_profile.samples must be >= 3");
    for (int n : c.quadtest_nodes)
        if (n < q.qi_degree + 1) throw ConfigError("quadtest.nodes must be at least p + 1");
    static const std::set<std::string> kinds{"all", "rhs-regular", "inner-singular", "outer"};
    if (!kinds.count(c.quadtest_kind)) throw ConfigError("quadtest.kind: all, rhs-regular, inner-singular or outer");
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    detail::only_keys(j, {"problem", "quadrature", "levels", "level", "output", "potential_points", "quadtest",
                          "inner_profile"},
                      "config");
    RunConfig c;
    c.problem = problem_from_json(j.contains("problem") ? j["problem"] : nlohmann::json("circle"));
    if (j.contains("quadrature")) detail::read_quadrature(j["quadrature"], c.quadrature);
    if (j.contains("levels")) c.levels = detail::get<int>(j, "levels", "config");
    if (j.contains("level")) c.level = detail::get<int>(j, "level", "config");
    if (j.contains("output")) c.output = detail::get<std::string>(j, "output", "config");
    if (j.contains("potential_points"))
        for (const auto& p : j["potential_points"]) c.potential_points.push_back(detail::to_point(p, "potential_points"));
    if (j.contains("quadtest")) {
        const auto& q = j["quadtest"];
        detail::only_keys(q, {"kind", "nodes"}, "quadtest");
        if (q.contains("kind")) c.quadtest_kind = detail::lower(detail::get<std::string>(q, "kind", "quadtest"));
        if (q.contains("nodes")) c.quadtest_nodes = detail::get<std::vector<int>>(q, "nodes", "quadtest");
    }
    if (j.contains("inner_profile")) {
        detail::only_keys(j["inner_profile"], {"samples"}, "inner_profile");
        c.profile_samples = detail::get<int>(j["inner_profile"], "samples", "inner_profile");
    }
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    return config_from_json(j);
}

} // namespace qibem
