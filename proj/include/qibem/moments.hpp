#pragma once

// Modified moments: integrals of log delta(s, t) against B-splines of a given
// space, via per-span local polynomial forms and closed-form log-power
// integrals, with a Gauss-Legendre fallback when s is far from the support.

#include "qibem/gauss.hpp"
#include "qibem/kernels.hpp"
#include "qibem/spline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <tuple>
#include <vector>

namespace qibem {

namespace detail {

inline double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Integral of u^j over [-1, 1].
inline double monomial_integral(int j) { return j % 2 == 0 ? 2.0 / (j + 1) : 0.0; }

} // namespace detail

/// Closed-form integral of t^m log|t - c| over [alpha, beta].
inline double log_power_moment(int m, double c, double alpha, double beta) {
    // t^m = sum_k C(m, k) c^(m-k) u^k with u = t - c, and
    // int u^k log|u| du = u^(k+1) / (k+1) (log|u| - 1/(k+1)).
    auto antiderivative = [&](double t) {
        const double u = t - c;
        double sum = 0.0, upow = u;  // u^(k+1)
        for (int k = 0; k <= m; ++k) {
            const double kk = k + 1.0;
            const double term = (u == 0.0 ? 0.0 : upow * std::log(std::abs(u))) - upow / kk;
            sum += detail::binomial(m, k) * std::pow(c, m - k) * term / kk;
            upow *= u;
        }
        return sum;
    };
    return antiderivative(beta) - antiderivative(alpha);
}

/// Integral of u^m log|u - c| over [-1, 1]. Far from the interval the series
/// log|c| - sum_k (u/c)^k / k replaces the antiderivative, which cancels badly there.
inline double normalized_log_moment(int m, double c) {
    if (std::abs(c) < 2.0) return log_power_moment(m, c, -1.0, 1.0);
    double sum = std::log(std::abs(c)) * detail::monomial_integral(m);
    double cinv = 1.0 / c, ck = 1.0;
    for (int k = 1; k < 200; ++k) {
        ck *= cinv;
        const double term = ck / k * detail::monomial_integral(m + k);
        sum -= term;
        if (k > 4 && std::abs(ck) < 1e-18) break;
    }
    return sum;
}

struct MomentOptions {
    double theta = 10.0;       // Gauss path when dist(c, supp) > theta |supp|
    bool use_switch = true;
};

/// Moments of all basis functions of `space` (or of their derivatives when
/// deriv = 1) against log delta(s, .) with the given kind and period gamma.
inline std::vector<double> modified_moments(const SplineSpace& space, double s, DomainKind kind, double gamma,
                                            int deriv = 0, const MomentOptions& opt = {}) {
    const int d = space.degree();
    const int N = space.dimension();
    std::vector<double> mu(N, 0.0);
    if (deriv > d) return mu;
    std::vector<double> centres{s};
    if (kind == DomainKind::closed_curve) {
        centres.push_back(s - gamma);
        centres.push_back(s + gamma);
    }
    std::vector<double> supp_lo(N), supp_hi(N);
    for (int k = 0; k < N; ++k) std::tie(supp_lo[k], supp_hi[k]) = space.support(k);

    const int q = d - deriv;  // polynomial degree of the integrand factor
    const int gauss_order = d + 6;
    std::vector<double> fact(d + 2, 1.0);
    for (int r = 1; r <= d + 1; ++r) fact[r] = fact[r - 1] * r;

    for (int mu_idx : space.spans()) {
        const double lo = space.knot(mu_idx), hi = space.knot(mu_idx + 1);
        const double mid = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
        const auto sb = space.span_basis(mu_idx, mid, d);
        std::vector<double> L(q + 1);
        const double loghw = std::log(hw);
        for (double c : centres) {
            bool any_analytic = false;
            std::vector<char> gauss_k(d + 1, 0);
            for (int r = 0; r <= d; ++r) {
                const int k = mu_idx - d + r;
                const double w = supp_hi[k] - supp_lo[k];
                const double dist = std::max({0.0, supp_lo[k] - c, c - supp_hi[k]});
                gauss_k[r] = opt.use_switch && dist > opt.theta * w;
                any_analytic = any_analytic || !gauss_k[r];
            }
            if (any_analytic) {
                const double cc = (c - mid) / hw;
                for (int j = 0; j <= q; ++j) L[j] = loghw * detail::monomial_integral(j) + normalized_log_moment(j, cc);
            }
            for (int r = 0; r <= d; ++r) {
                const int k = mu_idx - d + r;
                double v;
                if (gauss_k[r]) {
                    v = gauss_legendre(
                        [&](double t) {
                            return space.span_basis(mu_idx, t, deriv).ders(deriv, r) * std::log(std::abs(t - c));
                        },
                        lo, hi, gauss_order);
                } else {
                    // Taylor coefficients about the midpoint in u = (t - mid) / hw.
                    v = 0.0;
                    double hpow = 1.0;
                    for (int j = 0; j <= q; ++j) {
                        v += sb.ders(deriv + j, r) * hpow / fact[j] * L[j];
                        hpow *= hw;
                    }
                    v *= hw;
                }
                mu[k] += v;
            }
        }
    }
    if (kind == DomainKind::closed_curve) {
        const double lg = 2.0 * std::log(gamma);
        for (int mu_idx : space.spans()) {
            if (deriv == 0) {
                for (int r = 0; r <= d; ++r) {
                    const int k = mu_idx - d + r;
                    // span integral of B_k
                    const double lo = space.knot(mu_idx), hi = space.knot(mu_idx + 1);
                    mu[k] -= lg * gauss_legendre([&](double t) { return space.span_basis(mu_idx, t, 0).ders(0, r); },
                                                 lo, hi, d / 2 + 1);
                }
            } else {
                for (int r = 0; r <= d; ++r) {
                    const int k = mu_idx - d + r;
                    const double lo = space.knot(mu_idx), hi = space.knot(mu_idx + 1);
                    mu[k] -= lg * (space.span_basis(mu_idx, hi, 0).ders(0, r) - space.span_basis(mu_idx, lo, 0).ders(0, r));
                }
            }
        }
    }
    return mu;
}

/// Single-moment request.
struct MomentRequest {
    const SplineSpace* space = nullptr;
    int k = 0;
    double s = 0.0;
    DomainKind kind = DomainKind::open_arc;
    double gamma = 1.0;
};

/// Analytic path only.
inline double modified_moment(const MomentRequest& req) {
    MomentOptions opt;
    opt.use_switch = false;
    return modified_moments(*req.space, req.s, req.kind, req.gamma, 0, opt)[req.k];
}

/// Analytic path near the support, Gauss path beyond theta |supp|.
inline double stable_moment(const MomentRequest& req, double theta = 10.0) {
    MomentOptions opt;
    opt.theta = theta;
    return modified_moments(*req.space, req.s, req.kind, req.gamma, 0, opt)[req.k];
}

/// Cache of moment rows keyed by translation-invariant data: the knot vector
/// relative to its first knot, the relative source position, gamma and the width.
class MomentTable {
public:
    explicit MomentTable(MomentOptions opt = {}, double resolution = 1e-12) : opt_(opt), res_(resolution) {}

    std::vector<double> row(const SplineSpace& space, double s, DomainKind kind, double gamma, int deriv = 0) {
        const auto key = make_key(space, s, kind, gamma, deriv);
        {
            std::shared_lock lock(mutex_);
            auto it = cache_.find(key);
            if (it != cache_.end()) {
                ++hits_;
                return it->second;
            }
        }
        auto value = modified_moments(space, s, kind, gamma, deriv, opt_);
        std::unique_lock lock(mutex_);
        ++misses_;
        cache_.emplace(key, value);
        return value;
    }

    void clear() {
        std::unique_lock lock(mutex_);
        cache_.clear();
        hits_ = misses_ = 0;
    }

    std::size_t size() const {
        std::shared_lock lock(mutex_);
        return cache_.size();
    }
    std::size_t hits() const { return hits_; }
    std::size_t misses() const { return misses_; }
    const MomentOptions& options() const { return opt_; }

private:
    std::vector<long long> make_key(const SplineSpace& space, double s, DomainKind kind, double gamma,
                                    int deriv) const {
        const auto& t = space.knot_vector().knots();
        const double lo = t.front(), w = t.back() - t.front();
        auto q = [&](double x) { return static_cast<long long>(std::llround(x / res_)); };
        std::vector<long long> key{static_cast<long long>(kind), space.degree(), deriv,
                                   static_cast<long long>(t.size()), q(std::log(w))};
        for (double x : t) key.push_back(q((x - lo) / w));
        key.push_back(q((s - lo) / w));
        if (kind == DomainKind::closed_curve) key.push_back(q(gamma / w));
        return key;
    }

    MomentOptions opt_;
    double res_;
    mutable std::shared_mutex mutex_;
    std::map<std::vector<long long>, std::vector<double>> cache_;
    std::atomic<std::size_t> hits_{0}, misses_{0};
};

} // namespace qibem
