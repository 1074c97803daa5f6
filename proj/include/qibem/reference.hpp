#pragma once

// Brute-force assembly of the Galerkin matrix and right-hand side, used to
// measure the consistency error of the QI rules on small meshes. Every integral
// is done with composite Gauss-Legendre refined geometrically toward the
// singular points of the integrand; the log singularity is carried by log delta
// exactly and the remainder K1 is smooth.

#include "qibem/galerkin.hpp"
#include "qibem/gauss.hpp"
#include "qibem/kernels.hpp"
#include "qibem/spline.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace qibem {

struct ReferenceOptions {
    int order = 20;        // Gauss points per subinterval
    double ratio = 0.2;    // geometric grading factor
    double floor = 1e-15;  // smallest graded piece, relative to the interval
};

namespace detail {

// Calls visit(t, w) for the nodes of a graded composite rule on [lo, hi].
// Pieces shrink geometrically toward every centre inside or close to the interval.
template <class Visit>
void graded_nodes(double lo, double hi, const std::vector<double>& centres, const ReferenceOptions& opt,
                  Visit&& visit) {
    const GaussRule& g = gauss_rule(opt.order);
    auto plain = [&](double p, double e) {
        const double h = 0.5 * (e - p), m = 0.5 * (e + p);
        for (int k = 0; k < opt.order; ++k) visit(m + h * g.nodes[k], h * g.weights[k]);
    };
    auto dist = [&](double x) {
        double d = std::numeric_limits<double>::infinity();
        for (double c : centres) d = std::min(d, std::abs(x - c));
        return d;
    };
    // Grades from `end` toward the opposite side of a piece of length L.
    auto graded = [&](double end, double L, double dir, double stop) {
        double outer = L;
        while (outer * opt.ratio > stop) {
            const double inner = outer * opt.ratio;
            dir > 0 ? plain(end + inner, end + outer) : plain(end - outer, end - inner);
            outer = inner;
        }
        dir > 0 ? plain(end, end + outer) : plain(end - outer, end);
    };
    std::vector<double> cuts{lo};
    for (double c : centres)
        if (c > lo && c < hi) cuts.push_back(c);
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double p = cuts[k], e = cuts[k + 1], L = e - p;
        if (L <= 0.0) continue;
        const double dp = dist(p), de = dist(e);
        const bool gp = dp < L, ge = de < L;
        const double tiny = opt.floor * L;
        if (gp && ge) {
            graded(p, 0.5 * L, 1.0, std::max(dp, tiny));
            graded(e, 0.5 * L, -1.0, std::max(de, tiny));
        } else if (gp) {
            graded(p, L, 1.0, std::max(dp, tiny));
        } else if (ge) {
            graded(e, L, -1.0, std::max(de, tiny));
        } else {
            plain(p, e);
        }
    }
}

inline std::vector<double> singular_centres(const KernelSplit& ks, double s) {
    if (ks.kind() == DomainKind::open_arc) return {s};
    return {s, s - ks.gamma(), s + ks.gamma()};
}

} // namespace detail

/// Reference single-layer Galerkin matrix in the physical basis.
inline Eigen::MatrixXd reference_matrix(const BoundaryProblem& problem, const ReferenceOptions& opt = {}) {
    problem.validate();
    const SplineSpace& sp = problem.space;
    const KernelSplit ks(problem.geometry);
    const CurveGeometry& geom = *problem.geometry;
    const int N = sp.dimension(), d = sp.degree();
    const auto spans = sp.spans();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
    Eigen::VectorXd inner(N);
    for (int mu : spans) {
        detail::graded_nodes(sp.knot(mu), sp.knot(mu + 1), {}, opt, [&](double s, double ws) {
            inner.setZero();
            const auto centres = detail::singular_centres(ks, s);
            for (int nu : spans)
                detail::graded_nodes(sp.knot(nu), sp.knot(nu + 1), centres, opt, [&](double t, double wt) {
                    if (t == s) return;
                    const double u = ks.k1(s, t) + ks.k2(s, t);
                    const double f = wt * u * geom.speed(t);
                    const auto b = sp.span_basis(nu, t, 0);
                    for (int j = 0; j <= d; ++j) inner(nu - d + j) += f * b.ders(0, j);
                });
            const auto b = sp.span_basis(mu, s, 0);
            const double js = ws * geom.speed(s);
            for (int i = 0; i <= d; ++i) A.row(mu - d + i) += js * b.ders(0, i) * inner.transpose();
        });
    }
    const Eigen::MatrixXd P = sp.pairing_matrix();
    return -(P.transpose() * A * P) / (2.0 * std::numbers::pi);
}

/// Reference right-hand side in the physical basis.
inline Eigen::VectorXd reference_rhs(const BoundaryProblem& problem, const ReferenceOptions& opt = {}) {
    problem.validate();
    const SplineSpace& sp = problem.space;
    const KernelSplit ks(problem.geometry);
    const CurveGeometry& geom = *problem.geometry;
    const int N = sp.dimension(), d = sp.degree();
    const auto spans = sp.spans();
    const bool interior = problem.formulation == Formulation::interior_direct;
    // The datum of an open arc may have unbounded derivatives at the ends.
    const std::vector<double> ends =
        interior ? std::vector<double>{} : std::vector<double>{geom.a(), geom.b()};
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(N);
    for (int mu : spans) {
        detail::graded_nodes(sp.knot(mu), sp.knot(mu + 1), ends, opt, [&](double s, double ws) {
            double g = problem.datum(s);
            if (interior) {
                double dl = 0.0;
                const auto centres = detail::singular_centres(ks, s);
                for (int nu : spans)
                    detail::graded_nodes(sp.knot(nu), sp.knot(nu + 1), centres, opt,
                                         [&](double t, double wt) { dl += wt * ks.dlp(s, t) * problem.datum(t); });
                g = 0.5 * g - dl / (2.0 * std::numbers::pi);
            }
            const auto b = sp.span_basis(mu, s, 0);
            for (int i = 0; i <= d; ++i) beta(mu - d + i) += ws * geom.speed(s) * b.ders(0, i) * g;
        });
    }
    return sp.pairing_matrix().transpose() * beta;
}

} // namespace qibem
