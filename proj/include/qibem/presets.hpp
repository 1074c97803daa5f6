#pragma once

// Benchmark problems: exterior problem on a parabolic arc, interior problems on
// a circle of radius 1/2 and on a closed cubic "S" curve.

#include "qibem/curve.hpp"
#include "qibem/galerkin.hpp"
#include "qibem/spline.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qibem {

struct ProblemPreset {
    std::string name;
    std::shared_ptr<const CurveGeometry> geometry;
    Formulation formulation = Formulation::exterior_indirect;
    std::function<double(double)> datum;
    std::function<double(double)> exact;
    std::function<double(const Point&)> exact_potential;  // may be empty
    std::function<SplineSpace(int level)> space;          // discrete space after `level` dyadic refinements

    BoundaryProblem problem(int level) const { return {geometry, formulation, datum, exact, space(level)}; }
};

namespace detail {

// x log x with its limit at 0.
inline double xlogx(double coeff, double x) { return coeff == 0.0 || x <= 0.0 ? 0.0 : coeff * std::log(x); }

inline std::vector<double> uniform_breaks(double a, double b, int elements) {
    std::vector<double> br(elements + 1);
    for (int e = 0; e <= elements; ++e) br[e] = a + (b - a) * e / elements;
    br.back() = b;
    return br;
}

} // namespace detail

inline ProblemPreset parabola_preset() {
    ProblemPreset p;
    p.name = "parabola";
    SplineSpace gs(KnotVector({-1, -1, -1, 1, 1, 1}, 2));
    p.geometry = std::make_shared<BSplineCurve>(gs, std::vector<Point>{Point(-1, 0), Point(0, 2), Point(1, 0)});
    p.formulation = Formulation::exterior_indirect;
    p.datum = [](double s) {
        const double pi = std::numbers::pi, s2 = s * s, s3 = s2 * s;
        double v = (-(7 - 9 * s + 4 * s3) * std::log(2 + 2 * s + s2) - (7 + 9 * s - 4 * s3) * std::log(2 - 2 * s + s2)) /
                   (12 * pi);
        v += (14 + 24 * s2) / (9 * pi);
        // The coefficients of log(1 +- s) vanish at s = -+1, so both terms tend to 0 at the ends.
        const double ends = -detail::xlogx(7 + 3 * s + 4 * s3, 1 + s) - detail::xlogx(7 - 3 * s - 4 * s3, 1 - s);
        v += (ends - (-1 + 12 * s2) * std::atan2(2.0, s2)) / (6 * pi);
        return v;
    };
    p.exact = [](double s) { return std::sqrt(1 + 4 * s * s); };
    p.space = [](int level) { return SplineSpace(KnotVector::open_uniform(-1, 1, 2, 10 << level)); };
    return p;
}

/// Circle of radius r (1/2 in the benchmark), u = x1.
inline ProblemPreset circle_preset(double radius = 0.5) {
    ProblemPreset p;
    p.name = "circle";
    p.geometry = make_circle(radius);
    p.formulation = Formulation::interior_direct;
    const double pi = std::numbers::pi;
    p.datum = [radius, pi](double s) { return radius * std::cos(pi * s); };
    p.exact = [pi](double s) { return std::cos(pi * s); };
    p.exact_potential = [](const Point& x) { return x.x(); };
    p.space = [](int level) {
        const int E = 6 << level;
        return SplineSpace(KnotVector::periodic(detail::uniform_breaks(-1, 1, E), std::vector<int>(E + 1, 1), 3));
    };
    return p;
}

/// Closed cubic curve with 12 uniform elements on [-1, 1]; the last three control
/// points repeat the first three.
inline std::shared_ptr<const CurveGeometry> make_s_curve() {
    std::vector<double> t;
    for (int k = -9; k <= 9; ++k) t.push_back(k / 6.0);
    SplineSpace gs(KnotVector(t, 3, KnotKind::periodic));
    const double xs[] = {3, 4, 7, 6.5, 5.2, 7.3, 7.1, 6.4, 3.8, 4.7, 5.3, 3, 3, 4, 7};
    const double ys[] = {3.2, 2.2, 4, 5.8, 7.3, 8.5, 9.2, 9.5, 8, 6.6, 5, 4.3, 3.2, 2.2, 4};
    std::vector<Point> cps;
    for (int i = 0; i < 15; ++i) cps.emplace_back(xs[i], ys[i]);
    return std::make_shared<BSplineCurve>(gs, cps);
}

enum class SCurveVariant { cubic, quadratic, cubic_double_knots };

/// Interior problem on the S curve, u = x1 + x2.
inline ProblemPreset s_curve_preset(SCurveVariant variant) {
    ProblemPreset p;
    p.name = variant == SCurveVariant::cubic          ? "s-curve"
             : variant == SCurveVariant::quadratic    ? "s-curve-quadratic"
                                                      : "s-curve-double-knot";
    p.geometry = make_s_curve();
    p.formulation = Formulation::interior_direct;
    auto geom = p.geometry;
    p.datum = [geom](double s) {
        const Point f = geom->eval(s);
        return f.x() + f.y();
    };
    const double orient = geom->signed_area() < 0.0 ? -1.0 : 1.0;
    p.exact = [geom, orient](double s) {
        const Point f1 = geom->eval(s, 1);
        return orient * (f1.y() - f1.x()) / f1.norm();
    };
    p.exact_potential = [](const Point& x) { return x.x() + x.y(); };
    p.space = [variant](int level) {
        const int E = 12 << level;
        const auto br = detail::uniform_breaks(-1, 1, E);
        std::vector<int> mu(E + 1, 1);
        int d = 3;
        if (variant == SCurveVariant::quadratic) d = 2;
        if (variant == SCurveVariant::cubic_double_knots)
            for (int e = 0; e <= E; e += (1 << level)) mu[e] = 2;
        return SplineSpace(KnotVector::periodic(br, mu, d));
    };
    return p;
}

inline std::vector<std::string> preset_names() {
    return {"parabola", "circle", "s-curve", "s-curve-quadratic", "s-curve-double-knot"};
}

inline ProblemPreset make_preset(const std::string& name) {
    if (name == "parabola") return parabola_preset();
    if (name == "circle") return circle_preset();
    if (name == "s-curve") return s_curve_preset(SCurveVariant::cubic);
    if (name == "s-curve-quadratic") return s_curve_preset(SCurveVariant::quadratic);
    if (name == "s-curve-double-knot") return s_curve_preset(SCurveVariant::cubic_double_knots);
    throw std::invalid_argument("unknown problem preset '" + name + "'");
}

} // namespace qibem
