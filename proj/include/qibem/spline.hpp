#pragma once

// Univariate B-spline spaces: knot vectors (open and periodic), basis
// evaluation by the local Cox-de Boor triangle, spline functions, exact
// B-spline integrals, product spaces and local-interpolation fitting.
//
// Indices are 0-based throughout: a space with knots t_0..t_{N+d} has basis
// functions B_0..B_{N-1} on the parametric domain [a, b] = [t_d, t_N].

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qibem {

enum class KnotKind { open, periodic };

namespace detail {

inline bool nearly_equal(double x, double y, double scale) {
    return std::abs(x - y) <= 1e-12 * std::max(1.0, scale);
}

} // namespace detail

class KnotVector {
public:
    KnotVector(std::vector<double> knots, int degree, KnotKind kind = KnotKind::open)
        : knots_(std::move(knots)), degree_(degree), kind_(kind) {
        validate();
    }

    /// Clamped vector on [a, b] with `elements` equal spans and simple interior knots.
    static KnotVector open_uniform(double a, double b, int degree, int elements) {
        if (elements < 1) throw std::invalid_argument("open_uniform: elements must be >= 1");
        std::vector<double> breaks(elements + 1);
        for (int e = 0; e <= elements; ++e) breaks[e] = a + (b - a) * e / elements;
        breaks.back() = b;
        return clamped(breaks, std::vector<int>(elements + 1, 1), degree);
    }

    /// Clamped vector from distinct breakpoints; end multiplicities are ignored (always d+1).
    static KnotVector clamped(const std::vector<double>& breaks, const std::vector<int>& mults,
                              int degree) {
        check_breaks(breaks, mults, degree);
        std::vector<double> t(degree + 1, breaks.front());
        for (std::size_t e = 1; e + 1 < breaks.size(); ++e)
            t.insert(t.end(), mults[e], breaks[e]);
        t.insert(t.end(), degree + 1, breaks.back());
        return KnotVector(std::move(t), degree, KnotKind::open);
    }

    /// Periodic vector from one period of breakpoints a = x_0 < ... < x_E = b.
    /// mults[0] is the multiplicity of a (and of b); auxiliary knots are the
    /// periodic continuation, with t_d the last copy of a and t_N the first copy of b.
    static KnotVector periodic(const std::vector<double>& breaks, const std::vector<int>& mults,
                               int degree) {
        check_breaks(breaks, mults, degree);
        const double a = breaks.front();
        const double gamma = breaks.back() - a;
        const std::size_t E = breaks.size() - 1;
        int per_period = 0;
        for (std::size_t e = 0; e < E; ++e) per_period += mults[e];
        const int reps = degree / std::max(per_period, 1) + 2;
        std::vector<double> seq;
        for (int k = -reps; k <= reps; ++k)
            for (std::size_t e = 0; e < E; ++e)
                seq.insert(seq.end(), mults[e], breaks[e] + k * gamma);
        // Last copy of a in block k = 0.
        const std::size_t block = static_cast<std::size_t>(reps) * per_period;
        const std::size_t last_a = block + mults[0] - 1;
        const std::size_t first_b = block + per_period;
        std::vector<double> t(seq.begin() + (last_a - degree), seq.begin() + (first_b + degree + 1));
        t[degree] = a;
        t[t.size() - 1 - degree] = breaks.back();
        return KnotVector(std::move(t), degree, KnotKind::periodic);
    }

    const std::vector<double>& knots() const { return knots_; }
    int degree() const { return degree_; }
    KnotKind kind() const { return kind_; }
    int dimension() const { return static_cast<int>(knots_.size()) - degree_ - 1; }
    double a() const { return knots_[degree_]; }
    double b() const { return knots_[dimension()]; }
    double operator[](int i) const { return knots_[i]; }

    /// Multiplicity of a counted within t_0..t_d.
    int multiplicity_of_a() const {
        int m = 0;
        for (int j = degree_; j >= 0 && knots_[j] == a(); --j) ++m;
        return m;
    }

    /// Number of leading basis functions paired with trailing ones (periodic only).
    int rho() const { return degree_ - multiplicity_of_a() + 1; }

    /// Distinct knot values in [a, b].
    std::vector<double> breaks() const {
        std::vector<double> out;
        for (int i = degree_; i <= dimension(); ++i)
            if (out.empty() || knots_[i] != out.back()) out.push_back(knots_[i]);
        return out;
    }

    /// Multiplicities matching breaks(); the entries for a and b are
    /// the multiplicity of a for periodic vectors and d+1 for open ones.
    std::vector<int> multiplicities() const {
        const auto br = breaks();
        std::vector<int> m(br.size(), 0);
        for (std::size_t e = 1; e + 1 < br.size(); ++e)
            m[e] = static_cast<int>(std::count(knots_.begin(), knots_.end(), br[e]));
        const int end = kind_ == KnotKind::open ? degree_ + 1 : multiplicity_of_a();
        m.front() = end;
        m.back() = end;
        return m;
    }

    int elements() const { return static_cast<int>(breaks().size()) - 1; }

    /// Dyadic refinement: one simple knot at the midpoint of every nonzero span.
    KnotVector refined() const {
        const auto br = breaks();
        const auto mu = multiplicities();
        std::vector<double> nb;
        std::vector<int> nm;
        for (std::size_t e = 0; e < br.size(); ++e) {
            nb.push_back(br[e]);
            nm.push_back(mu[e]);
            if (e + 1 < br.size()) {
                nb.push_back(0.5 * (br[e] + br[e + 1]));
                nm.push_back(1);
            }
        }
        return kind_ == KnotKind::open ? clamped(nb, nm, degree_) : periodic(nb, nm, degree_);
    }

private:
    static void check_breaks(const std::vector<double>& breaks, const std::vector<int>& mults,
                             int degree) {
        if (breaks.size() < 2 || mults.size() != breaks.size())
            throw std::invalid_argument("knot vector: need >= 2 breakpoints with one multiplicity each");
        for (std::size_t e = 1; e < breaks.size(); ++e)
            if (!(breaks[e] > breaks[e - 1]))
                throw std::invalid_argument("knot vector: breakpoints must increase strictly");
        for (int m : mults)
            if (m < 1 || m > degree + 1)
                throw std::invalid_argument("knot vector: multiplicity out of range");
    }

    void validate() const {
        if (degree_ < 0) throw std::invalid_argument("knot vector: negative degree");
        if (static_cast<int>(knots_.size()) < 2 * degree_ + 2)
            throw std::invalid_argument("knot vector: too few knots for degree");
        for (std::size_t i = 1; i < knots_.size(); ++i)
            if (knots_[i] < knots_[i - 1])
                throw std::invalid_argument("knot vector: knots must be nondecreasing");
        for (std::size_t i = 0; i < knots_.size();) {
            std::size_t j = i;
            while (j < knots_.size() && knots_[j] == knots_[i]) ++j;
            if (static_cast<int>(j - i) > degree_ + 1)
                throw std::invalid_argument("knot vector: multiplicity exceeds degree + 1");
            i = j;
        }
        if (!(a() < b())) throw std::invalid_argument("knot vector: empty parametric domain");
        const int N = dimension();
        const double scale = b() - a();
        if (kind_ == KnotKind::open) {
            for (int i = 0; i < degree_; ++i)
                if (knots_[i] != a() || knots_[N + 1 + i] != b())
                    throw std::invalid_argument("knot vector: open kind requires clamped ends");
        } else {
            if (knots_[degree_ + 1] == a())
                throw std::invalid_argument("knot vector: periodic kind requires t_d to be the last copy of a");
            const int r = rho();
            if (N - r < 1) throw std::invalid_argument("knot vector: periodic space too small");
            for (int i = 0; i < 2 * r && N - r + i + 1 < static_cast<int>(knots_.size()); ++i) {
                const double left = knots_[i + 1] - knots_[i];
                const double right = knots_[N - r + i + 1] - knots_[N - r + i];
                if (!detail::nearly_equal(left, right, scale))
                    throw std::invalid_argument("knot vector: periodic knot differences do not match");
            }
        }
    }

    std::vector<double> knots_;
    int degree_;
    KnotKind kind_;
};

/// Values and derivatives of the d+1 basis functions active on one span.
/// ders(k, r) is the k-th derivative of B_{span-d+r}.
struct SpanBasis {
    int span = 0;
    Eigen::MatrixXd ders;
};

class SplineSpace {
public:
    explicit SplineSpace(KnotVector kv) : kv_(std::move(kv)) {}

    const KnotVector& knot_vector() const { return kv_; }
    int degree() const { return kv_.degree(); }
    int dimension() const { return kv_.dimension(); }
    double a() const { return kv_.a(); }
    double b() const { return kv_.b(); }
    KnotKind kind() const { return kv_.kind(); }
    double knot(int i) const { return kv_[i]; }

    /// Span index mu in [d, N-1] with t_mu <= t < t_mu+1; t = b maps to the last nonzero span.
    int find_span(double t) const {
        const auto& k = kv_.knots();
        const int d = degree(), N = dimension();
        if (t >= b()) return find_span_left(b());
        auto first = k.begin() + d, last = k.begin() + N + 1;
        int mu = static_cast<int>(std::upper_bound(first, last, t) - k.begin()) - 1;
        return std::clamp(mu, d, N - 1);
    }

    /// Span index mu with t_mu < t <= t_mu+1 (left limit convention), t > a.
    int find_span_left(double t) const {
        const auto& k = kv_.knots();
        const int d = degree(), N = dimension();
        if (t <= a()) return find_span(a());
        auto first = k.begin() + d, last = k.begin() + N + 1;
        int mu = static_cast<int>(std::lower_bound(first, last, t) - k.begin()) - 1;
        return std::clamp(mu, d, N - 1);
    }

    /// Local Cox-de Boor triangle with derivatives up to nderiv on the given span.
    SpanBasis span_basis(int span, double t, int nderiv) const {
        const int p = degree();
        const auto& U = kv_.knots();
        Eigen::MatrixXd ndu(p + 1, p + 1);
        std::vector<double> left(p + 1), right(p + 1);
        ndu(0, 0) = 1.0;
        for (int j = 1; j <= p; ++j) {
            left[j] = t - U[span + 1 - j];
            right[j] = U[span + j] - t;
            double saved = 0.0;
            for (int r = 0; r < j; ++r) {
                ndu(j, r) = right[r + 1] + left[j - r];
                const double temp = ndu(r, j - 1) / ndu(j, r);
                ndu(r, j) = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu(j, j) = saved;
        }
        SpanBasis out{span, Eigen::MatrixXd::Zero(nderiv + 1, p + 1)};
        for (int j = 0; j <= p; ++j) out.ders(0, j) = ndu(j, p);
        Eigen::MatrixXd a(2, p + 1);
        for (int r = 0; r <= p; ++r) {
            int s1 = 0, s2 = 1;
            a(0, 0) = 1.0;
            for (int k = 1; k <= std::min(nderiv, p); ++k) {
                double dval = 0.0;
                const int rk = r - k, pk = p - k;
                if (r >= k) {
                    a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
                    dval = a(s2, 0) * ndu(rk, pk);
                }
                const int j1 = rk >= -1 ? 1 : -rk;
                const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
                for (int j = j1; j <= j2; ++j) {
                    a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
                    dval += a(s2, j) * ndu(rk + j, pk);
                }
                if (r <= pk) {
                    a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
                    dval += a(s2, k) * ndu(r, pk);
                }
                out.ders(k, r) = dval;
                std::swap(s1, s2);
            }
        }
        int factor = p;
        for (int k = 1; k <= std::min(nderiv, p); ++k) {
            out.ders.row(k) *= factor;
            factor *= (p - k);
        }
        return out;
    }

    SpanBasis basis_at(double t, int nderiv = 0) const { return span_basis(find_span(t), t, nderiv); }

    /// B_i^{(deriv)}(t); i in [0, N), t in [a, b].
    double eval_basis(int i, double t, int deriv = 0) const {
        check_index(i);
        check_param(t);
        return value_in_span(i, find_span(t), t, deriv);
    }

    /// Left-limit evaluation (span chosen with t_mu < t <= t_mu+1).
    double eval_basis_left(int i, double t, int deriv = 0) const {
        check_index(i);
        check_param(t);
        return value_in_span(i, find_span_left(t), t, deriv);
    }

    double value_in_span(int i, int span, double t, int deriv) const {
        const int d = degree();
        if (i < span - d || i > span || deriv > d) return 0.0;
        return span_basis(span, t, deriv).ders(deriv, i - (span - d));
    }

    std::pair<double, double> support(int i) const {
        check_index(i);
        return {kv_[i], kv_[i + degree() + 1]};
    }

    /// Support intersected with the parametric domain.
    std::pair<double, double> restricted_support(int i) const {
        auto [lo, hi] = support(i);
        return {std::max(lo, a()), std::min(hi, b())};
    }

    /// Exact integral of B_i over its full support: |supp| / (d + 1).
    double bspline_integral(int i) const {
        auto [lo, hi] = support(i);
        return (hi - lo) / (degree() + 1);
    }

    /// Nonzero spans [t_mu, t_mu+1] of the parametric domain, as span indices.
    std::vector<int> spans() const {
        std::vector<int> out;
        for (int mu = degree(); mu < dimension(); ++mu)
            if (kv_[mu] < kv_[mu + 1]) out.push_back(mu);
        return out;
    }

    /// Physical shape functions: each entry lists the parametric indices merged into it.
    std::vector<std::vector<int>> periodic_pairing() const {
        const int N = dimension();
        std::vector<std::vector<int>> out;
        if (kind() == KnotKind::open) {
            for (int i = 0; i < N; ++i) out.push_back({i});
            return out;
        }
        const int r = kv_.rho();
        for (int i = 0; i < N - r; ++i) {
            if (i < r) out.push_back({i, N - r + i});
            else out.push_back({i});
        }
        return out;
    }

    /// N x n_physical assembly matrix: parametric coefficients = P * physical coefficients.
    Eigen::MatrixXd pairing_matrix() const {
        const auto pairs = periodic_pairing();
        Eigen::MatrixXd P = Eigen::MatrixXd::Zero(dimension(), static_cast<Eigen::Index>(pairs.size()));
        for (std::size_t p = 0; p < pairs.size(); ++p)
            for (int i : pairs[p]) P(i, static_cast<Eigen::Index>(p)) = 1.0;
        return P;
    }

    int physical_dimension() const { return static_cast<int>(periodic_pairing().size()); }

private:
    void check_index(int i) const {
        if (i < 0 || i >= dimension())
            throw std::out_of_range("basis index " + std::to_string(i) + " out of range");
    }
    void check_param(double t) const {
        const double tol = 1e-13 * (b() - a());
        if (t < a() - tol || t > b() + tol)
            throw std::out_of_range("parameter " + std::to_string(t) + " outside [a, b]");
    }

    KnotVector kv_;
};

/// A spline in B-form over a given space.
struct SplineFunction {
    SplineSpace space;
    std::vector<double> coefficients;

    double operator()(double t, int deriv = 0) const { return eval(space.find_span(t), t, deriv); }

    double eval(int span, double t, int deriv) const {
        const int d = space.degree();
        if (deriv > d) return 0.0;
        const auto sb = space.span_basis(span, t, deriv);
        double v = 0.0;
        for (int r = 0; r <= d; ++r) v += coefficients[span - d + r] * sb.ders(deriv, r);
        return v;
    }
};

/// Product space of two open spaces on the same interval: degree d_a + d_b,
/// breakpoints the union, smoothness at each breakpoint the minimum of the factors'.
inline SplineSpace product_space(const SplineSpace& sa, const SplineSpace& sb) {
    if (sa.kind() != KnotKind::open || sb.kind() != KnotKind::open)
        throw std::invalid_argument("product_space: both factors must be open spaces");
    const double scale = sa.b() - sa.a();
    if (!detail::nearly_equal(sa.a(), sb.a(), scale) || !detail::nearly_equal(sa.b(), sb.b(), scale))
        throw std::invalid_argument("product_space: mismatched parametric intervals");
    const int deg = sa.degree() + sb.degree();
    constexpr int smooth = std::numeric_limits<int>::max();
    struct Break { double x; int r; };
    std::vector<Break> all;
    auto collect = [&](const SplineSpace& s) {
        const auto br = s.knot_vector().breaks();
        const auto mu = s.knot_vector().multiplicities();
        for (std::size_t e = 1; e + 1 < br.size(); ++e) all.push_back({br[e], s.degree() - mu[e]});
    };
    collect(sa);
    collect(sb);
    std::sort(all.begin(), all.end(), [](const Break& l, const Break& r) { return l.x < r.x; });
    std::vector<double> breaks{sa.a()};
    std::vector<int> mults{deg + 1};
    for (std::size_t k = 0; k < all.size();) {
        std::size_t j = k;
        int r = smooth;
        while (j < all.size() && detail::nearly_equal(all[j].x, all[k].x, scale)) r = std::min(r, all[j++].r);
        const int m = std::clamp(deg - r, 1, deg + 1);
        breaks.push_back(all[k].x);
        mults.push_back(m);
        k = j;
    }
    breaks.push_back(sa.b());
    mults.push_back(deg + 1);
    return SplineSpace(KnotVector::clamped(breaks, mults, deg));
}

/// Recovers B-form coefficients of any function in the space by per-span
/// interpolation at Chebyshev points (exact for members of the space).
class SplineFitter {
public:
    explicit SplineFitter(SplineSpace space) : space_(std::move(space)) {
        const int d = space_.degree();
        const int q = d + 1;
        const auto spans = space_.spans();
        for (int mu : spans) {
            const double lo = space_.knot(mu), hi = space_.knot(mu + 1);
            Local loc;
            loc.span = mu;
            loc.points.resize(q);
            Eigen::MatrixXd V(q, q);
            for (int r = 0; r < q; ++r) {
                const double x = std::cos((2.0 * r + 1.0) * std::numbers::pi / (2.0 * q));
                loc.points[r] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x;
                V.row(r) = space_.span_basis(mu, loc.points[r], 0).ders.row(0);
            }
            loc.lu = Eigen::PartialPivLU<Eigen::MatrixXd>(V);
            loc.weight = V.colwise().maxCoeff();
            locals_.push_back(std::move(loc));
        }
        // Each coefficient is read from the span where its basis function is largest.
        source_.assign(space_.dimension(), {-1, -1});
        std::vector<double> best(space_.dimension(), -1.0);
        for (std::size_t s = 0; s < locals_.size(); ++s) {
            const int mu = locals_[s].span;
            for (int r = 0; r <= d; ++r) {
                const int m = mu - d + r;
                if (locals_[s].weight(r) > best[m]) {
                    best[m] = locals_[s].weight(r);
                    source_[m] = {static_cast<int>(s), r};
                }
            }
        }
    }

    const SplineSpace& space() const { return space_; }

    /// f is evaluated as f(t, span) so piecewise callers can pick the right branch.
    template <class F>
    std::vector<double> fit(F&& f) const {
        const int q = space_.degree() + 1;
        std::vector<Eigen::VectorXd> sol(locals_.size());
        std::vector<char> needed(locals_.size(), 0);
        for (const auto& src : source_) if (src.first >= 0) needed[src.first] = 1;
        for (std::size_t s = 0; s < locals_.size(); ++s) {
            if (!needed[s]) continue;
            Eigen::VectorXd rhs(q);
            for (int r = 0; r < q; ++r) rhs(r) = f(locals_[s].points[r], locals_[s].span);
            sol[s] = locals_[s].lu.solve(rhs);
        }
        std::vector<double> c(space_.dimension(), 0.0);
        for (int m = 0; m < space_.dimension(); ++m)
            if (source_[m].first >= 0) c[m] = sol[source_[m].first](source_[m].second);
        return c;
    }

private:
    struct Local {
        int span = 0;
        std::vector<double> points;
        Eigen::PartialPivLU<Eigen::MatrixXd> lu;
        Eigen::RowVectorXd weight;
    };
    SplineSpace space_;
    std::vector<Local> locals_;
    std::vector<std::pair<int, int>> source_;
};

/// Coefficients of f * g in product_space(f.space, g.space).
inline SplineFunction product_coefficients(const SplineFunction& f, const SplineFunction& g) {
    SplineSpace pi = product_space(f.space, g.space);
    SplineFitter fitter(pi);
    auto coeffs = fitter.fit([&](double t, int span) {
        // Evaluate each factor on the span containing the sample point's open interval.
        const double lo = pi.knot(span), hi = pi.knot(span + 1);
        const double mid = 0.5 * (lo + hi);
        const int sf = f.space.find_span(mid), sg = g.space.find_span(mid);
        return f.eval(sf, t, 0) * g.eval(sg, t, 0);
    });
    return SplineFunction{std::move(pi), std::move(coeffs)};
}

} // namespace qibem
