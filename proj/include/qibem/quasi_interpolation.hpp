#pragma once

// Local quasi-interpolants on a uniform open knot vector over one interval.
// The Hermite variant uses values and first derivatives at the breakpoints,
// the derivative-free variant replaces derivatives by fourth-order finite
// differences. Both are linear in the data, so they are exposed as matrices.

#include "qibem/spline.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace qibem {

enum class QiVariant { hermite, derivative_free };

/// Uniform open knot vector of degree p with breakpoints lo = tau_0 < ... < tau_n = hi.
class QiSpace {
public:
    QiSpace(double lo, double hi, int degree, int n) : lo_(lo), hi_(hi), p_(degree), n_(n) {
        if (!(hi > lo)) throw std::invalid_argument("QiSpace: empty interval");
        if (degree < 1) throw std::invalid_argument("QiSpace: degree must be >= 1");
        if (n < degree) throw std::invalid_argument("QiSpace: need n >= p");
    }

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    int degree() const { return p_; }
    int n() const { return n_; }
    int node_count() const { return n_ + 1; }
    int dimension() const { return n_ + p_; }
    double spacing() const { return (hi_ - lo_) / n_; }

    double node(int j) const { return j == n_ ? hi_ : lo_ + j * spacing(); }

    std::vector<double> nodes() const {
        std::vector<double> x(n_ + 1);
        for (int j = 0; j <= n_; ++j) x[j] = node(j);
        return x;
    }

    SplineSpace spline_space() const { return SplineSpace(KnotVector::open_uniform(lo_, hi_, p_, n_)); }

    /// Integral of each basis function, |supp B_k| / (p + 1).
    Eigen::VectorXd basis_integrals() const {
        const auto sp = spline_space();
        Eigen::VectorXd w(dimension());
        for (int k = 0; k < dimension(); ++k) w(k) = sp.bspline_integral(k);
        return w;
    }

private:
    double lo_, hi_;
    int p_, n_;
};

/// lambda = value * g(nodes) + deriv * g'(nodes).
struct QiOperator {
    Eigen::MatrixXd value;
    Eigen::MatrixXd deriv;
};

struct QuasiInterpolant {
    QiSpace space;
    std::vector<double> lambda;

    SplineFunction spline() const { return SplineFunction{space.spline_space(), lambda}; }
    double operator()(double t, int deriv = 0) const { return spline()(t, deriv); }
};

namespace detail {

// Blossom coefficients of the cubic Hermite interpolant on [tau_r, tau_r+1]
// at local arguments u1, u2, u3 (in units of H). Returns weights on
// (g_r, g_r+1, H g'_r, H g'_r+1).
inline Eigen::Vector4d cubic_hermite_blossom(double u1, double u2, double u3) {
    const double e1 = (u1 + u2 + u3) / 3.0;
    const double e2 = (u1 * u2 + u1 * u3 + u2 * u3) / 3.0;
    const double e3 = u1 * u2 * u3;
    // c0 = g0, c1 = Hg0', c2 = 3(g1-g0) - 2Hg0' - Hg1', c3 = 2(g0-g1) + Hg0' + Hg1'
    Eigen::Vector4d w;
    w(0) = 1.0 - 3.0 * e2 + 2.0 * e3;
    w(1) = 3.0 * e2 - 2.0 * e3;
    w(2) = e1 - 2.0 * e2 + e3;
    w(3) = -e2 + e3;
    return w;
}

} // namespace detail

/// Hermite operator matrices for the given space (p in {2, 3}).
inline QiOperator hermite_operator(const QiSpace& space) {
    const int p = space.degree(), n = space.n(), dim = space.dimension();
    const double H = space.spacing();
    QiOperator op{Eigen::MatrixXd::Zero(dim, n + 1), Eigen::MatrixXd::Zero(dim, n + 1)};
    if (p == 2) {
        op.value(0, 0) = 1.0;
        op.value(dim - 1, n) = 1.0;
        for (int k = 1; k < dim - 1; ++k) {
            // blossom at (tau_{k-1}, tau_k)
            const int l = k - 1, r = k;
            op.value(k, l) += 0.5;
            op.value(k, r) += 0.5;
            op.deriv(k, l) += 0.25 * H;
            op.deriv(k, r) -= 0.25 * H;
        }
        return op;
    }
    if (p != 3) throw std::invalid_argument("hermite_qi: degree must be 2 or 3");
    for (int k = 0; k < dim; ++k) {
        // Blossom arguments t_{k+1}, t_{k+2}, t_{k+3} as node positions (clamped).
        double arg[3];
        for (int q = 0; q < 3; ++q) arg[q] = std::clamp(k + 1 + q - p, 0, n);
        std::vector<int> spans;
        for (int r = k - 2; r <= k - 1; ++r)
            if (r >= 0 && r <= n - 1) spans.push_back(r);
        if (spans.empty()) spans.push_back(std::clamp(k - 2, 0, n - 1));
        const double share = 1.0 / spans.size();
        for (int r : spans) {
            const auto w = detail::cubic_hermite_blossom(arg[0] - r, arg[1] - r, arg[2] - r);
            op.value(k, r) += share * w(0);
            op.value(k, r + 1) += share * w(1);
            op.deriv(k, r) += share * H * w(2);
            op.deriv(k, r + 1) += share * H * w(3);
        }
    }
    return op;
}

/// Fourth-order first-derivative finite differences on the nodes: g' ~ D g.
inline Eigen::MatrixXd finite_difference_matrix(const QiSpace& space) {
    const int n = space.n();
    if (n < 4) throw std::invalid_argument("derivative_free_qi: need at least 5 nodes");
    const double c = 1.0 / (12.0 * space.spacing());
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n + 1, n + 1);
    const double edge0[5] = {-25.0, 48.0, -36.0, 16.0, -3.0};
    const double edge1[5] = {-3.0, -10.0, 18.0, -6.0, 1.0};
    for (int q = 0; q < 5; ++q) {
        D(0, q) = c * edge0[q];
        D(1, q) = c * edge1[q];
        D(n, n - q) = -c * edge0[q];
        D(n - 1, n - q) = -c * edge1[q];
    }
    const double centre[5] = {1.0, -8.0, 0.0, 8.0, -1.0};
    for (int j = 2; j <= n - 2; ++j)
        for (int q = 0; q < 5; ++q) D(j, j - 2 + q) = c * centre[q];
    return D;
}

/// Coefficient map from node values for the derivative-free variant.
inline Eigen::MatrixXd derivative_free_operator(const QiSpace& space) {
    const auto op = hermite_operator(space);
    return op.value + op.deriv * finite_difference_matrix(space);
}

inline QuasiInterpolant hermite_qi(const std::vector<double>& g_values, const std::vector<double>& g_derivs,
                                   const QiSpace& space) {
    const int m = space.node_count();
    if (static_cast<int>(g_values.size()) != m || static_cast<int>(g_derivs.size()) != m)
        throw std::invalid_argument("hermite_qi: need values and derivatives at every node");
    const auto op = hermite_operator(space);
    const Eigen::VectorXd lam = op.value * Eigen::Map<const Eigen::VectorXd>(g_values.data(), m) +
                                op.deriv * Eigen::Map<const Eigen::VectorXd>(g_derivs.data(), m);
    return {space, std::vector<double>(lam.data(), lam.data() + lam.size())};
}

inline QuasiInterpolant derivative_free_qi(const std::vector<double>& g_values, const QiSpace& space) {
    const int m = space.node_count();
    if (static_cast<int>(g_values.size()) != m)
        throw std::invalid_argument("derivative_free_qi: need values at every node");
    const Eigen::VectorXd lam = derivative_free_operator(space) * Eigen::Map<const Eigen::VectorXd>(g_values.data(), m);
    return {space, std::vector<double>(lam.data(), lam.data() + lam.size())};
}

/// Observed order: minus the least-squares slope of log(sup error) against log(1/H) on [0, 1] over the given n values.
/// dg is required for the Hermite variant.
inline double qi_error_order_probe(const std::function<double(double)>& g, int p, const std::vector<int>& n_sweep,
                                   QiVariant variant = QiVariant::derivative_free,
                                   const std::function<double(double)>& dg = {}) {
    if (n_sweep.size() < 2) throw std::invalid_argument("qi_error_order_probe: need at least two meshes");
    std::vector<double> xs, ys;
    for (int n : n_sweep) {
        QiSpace space(0.0, 1.0, p, n);
        std::vector<double> v, d;
        for (double x : space.nodes()) {
            v.push_back(g(x));
            if (variant == QiVariant::hermite) d.push_back(dg(x));
        }
        const auto qi = variant == QiVariant::hermite ? hermite_qi(v, d, space) : derivative_free_qi(v, space);
        const auto s = qi.spline();
        double err = 0.0;
        const int samples = 40 * n;
        for (int k = 0; k <= samples; ++k) {
            const double t = static_cast<double>(k) / samples;
            err = std::max(err, std::abs(s(t) - g(t)));
        }
        xs.push_back(std::log(1.0 / space.spacing()));
        ys.push_back(std::log(err));
    }
    const double m = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sx += xs[k];
        sy += ys[k];
        sxx += xs[k] * xs[k];
        sxy += xs[k] * ys[k];
    }
    return -(m * sxy - sx * sy) / (m * sxx - sx * sx);
}

} // namespace qibem
