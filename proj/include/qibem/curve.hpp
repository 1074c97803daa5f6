#pragma once

// Boundary curves F: [a, b] -> R^2. A curve is either a B-form curve over a
// spline space or an analytic map given by a callable.

#include "qibem/gauss.hpp"
#include "qibem/spline.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>

namespace qibem {

using Point = Eigen::Vector2d;

class CurveGeometry {
public:
    virtual ~CurveGeometry() = default;

    /// F(t), F'(t) or F''(t).
    virtual Point eval(double t, int deriv = 0) const = 0;
    virtual double a() const = 0;
    virtual double b() const = 0;
    virtual bool closed() const = 0;

    double gamma() const { return b() - a(); }

    /// J(t) = |F'(t)|.
    double speed(double t) const { return eval(t, 1).norm(); }

    /// Signed enclosed area (positive for counterclockwise closed curves).
    double signed_area() const {
        return composite_gauss(
            [this](double t) {
                const Point p = eval(t, 0), dp = eval(t, 1);
                return 0.5 * (p.x() * dp.y() - p.y() * dp.x());
            },
            a(), b(), 16, 64);
    }
};

/// F = sum_i d_i B_i over a spline space. Periodic curves repeat the first rho
/// control points at the end (d_i = d_{N-rho+i}).
class BSplineCurve final : public CurveGeometry {
public:
    BSplineCurve(SplineSpace space, std::vector<Point> control_points)
        : space_(std::move(space)), cps_(std::move(control_points)) {
        if (static_cast<int>(cps_.size()) != space_.dimension())
            throw std::invalid_argument("BSplineCurve: control point count must equal the space dimension");
        if (space_.kind() == KnotKind::periodic) {
            const int N = space_.dimension(), r = space_.knot_vector().rho();
            for (int i = 0; i < r; ++i)
                if ((cps_[i] - cps_[N - r + i]).norm() > 1e-12 * (1.0 + cps_[i].norm()))
                    throw std::invalid_argument("BSplineCurve: periodic control points must repeat");
        }
    }

    Point eval(double t, int deriv = 0) const override {
        if (space_.kind() == KnotKind::periodic && (t < a() || t > b())) {
            t = a() + std::fmod(t - a(), gamma());
            if (t < a()) t += gamma();
        }
        const int d = space_.degree();
        Point v = Point::Zero();
        if (deriv > d) return v;
        const auto sb = space_.basis_at(t, deriv);
        for (int r = 0; r <= d; ++r) v += cps_[sb.span - d + r] * sb.ders(deriv, r);
        return v;
    }

    double a() const override { return space_.a(); }
    double b() const override { return space_.b(); }
    bool closed() const override { return space_.kind() == KnotKind::periodic; }

    const SplineSpace& space() const { return space_; }
    const std::vector<Point>& control_points() const { return cps_; }

private:
    SplineSpace space_;
    std::vector<Point> cps_;
};

/// Analytic map; the callable returns F^{(deriv)}(t) for deriv in {0, 1, 2}.
class ParametricCurve final : public CurveGeometry {
public:
    using Map = std::function<Point(double, int)>;

    ParametricCurve(Map map, double a, double b, bool closed)
        : map_(std::move(map)), a_(a), b_(b), closed_(closed) {}

    Point eval(double t, int deriv = 0) const override { return map_(t, deriv); }
    double a() const override { return a_; }
    double b() const override { return b_; }
    bool closed() const override { return closed_; }

private:
    Map map_;
    double a_, b_;
    bool closed_;
};

inline Point curve_eval(const CurveGeometry& geom, double t, int deriv = 0) { return geom.eval(t, deriv); }

inline double parametric_speed(const CurveGeometry& geom, double t) { return geom.speed(t); }

/// Circle of given radius centred at the origin, F(s) = r (cos(pi s), sin(pi s)), s in [-1, 1].
inline std::shared_ptr<const CurveGeometry> make_circle(double radius) {
    constexpr double pi = std::numbers::pi;
    return std::make_shared<ParametricCurve>(
        [radius](double s, int deriv) -> Point {
            const double c = std::cos(pi * s), sn = std::sin(pi * s);
            switch (deriv) {
            case 0: return radius * Point(c, sn);
            case 1: return radius * pi * Point(-sn, c);
            case 2: return -radius * pi * pi * Point(c, sn);
            default: return Point::Zero();
            }
        },
        -1.0, 1.0, true);
}

} // namespace qibem
