#pragma once

// Gauss-Legendre rules and the cubic Telles transformation.

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace qibem {

struct GaussRule {
    std::vector<double> nodes;   // on [-1, 1]
    std::vector<double> weights;
};

namespace detail {

inline GaussRule compute_gauss_rule(int n) {
    GaussRule r;
    if (n == 1) return GaussRule{{0.0}, {2.0}};
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // Recompute derivative at the converged node.
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = w;
        r.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) r.nodes[n / 2] = 0.0;
    return r;
}

} // namespace detail

/// Cached n-point Gauss-Legendre rule on [-1, 1].
inline const GaussRule& gauss_rule(int n) {
    if (n < 1) throw std::invalid_argument("gauss_rule: order must be >= 1");
    static std::mutex mutex;
    static std::map<int, GaussRule> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, detail::compute_gauss_rule(n)).first;
    return it->second;
}

template <class F>
double gauss_legendre(F&& f, double a, double b, int order) {
    const auto& r = gauss_rule(order);
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    double sum = 0.0;
    for (int q = 0; q < order; ++q) sum += r.weights[q] * f(mid + half * r.nodes[q]);
    return half * sum;
}

/// Composite rule on `panels` equal subintervals.
template <class F>
double composite_gauss(F&& f, double a, double b, int order, int panels) {
    double sum = 0.0;
    const double h = (b - a) / panels;
    for (int k = 0; k < panels; ++k) sum += gauss_legendre(f, a + k * h, a + (k + 1) * h, order);
    return sum;
}

namespace detail {

/// Cubic Telles map on [-1, 1] with vanishing Jacobian at eta_bar (|eta_bar| <= 1).
template <class F>
double telles_reference(F&& f, double eta_bar, int order) {
    const double es = eta_bar * eta_bar - 1.0;
    const double gb = std::cbrt(eta_bar * es + std::abs(es)) + std::cbrt(eta_bar * es - std::abs(es)) + eta_bar;
    const double denom = 1.0 + 3.0 * gb * gb;
    const auto& r = gauss_rule(order);
    double sum = 0.0;
    for (int q = 0; q < order; ++q) {
        const double g = r.nodes[q];
        const double eta = ((g - gb) * (g - gb) * (g - gb) + gb * (gb * gb + 3.0)) / denom;
        const double jac = 3.0 * (g - gb) * (g - gb) / denom;
        sum += r.weights[q] * f(eta) * jac;
    }
    return sum;
}

} // namespace detail

/// Integral of f_regular(t) * log|s - t| over [a, b] with the cubic Telles
/// transformation. An interior singular point splits the interval and each half
/// is transformed toward s; for s outside [a, b] the nearer endpoint is used.
template <class F>
double telles(F&& f_regular, double s, double a, double b, int order) {
    auto integrand = [&](double t) {
        const double d = std::abs(s - t);
        return d == 0.0 ? 0.0 : f_regular(t) * std::log(d);
    };
    auto side = [&](double lo, double hi, double sing, int n) {
        const double half = 0.5 * (hi - lo), mid = 0.5 * (lo + hi);
        const double eta_bar = std::clamp((sing - mid) / half, -1.0, 1.0);
        return half * detail::telles_reference([&](double eta) { return integrand(mid + half * eta); }, eta_bar, n);
    };
    if (s > a && s < b) {
        const int half_order = std::max(1, (order + 1) / 2);
        return side(a, s, s, half_order) + side(s, b, s, half_order);
    }
    return side(a, b, s <= a ? a : b, order);
}

} // namespace qibem
