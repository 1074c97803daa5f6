#pragma once

// Quasi-interpolation quadrature on the support D_i of one B-spline B_i:
//   regular   int_{D_i} B_i(t) g(t) dt
//   singular  int_{D_i} B_i(t) g(t) log delta(s, t) dt
// Procedure QI1 quasi-interpolates the whole product B_i g, procedure QI2
// only g and expands B_i sigma_g in the product space. Both reduce to linear
// rules acting on g (and g' for the Hermite variant) at the uniform QI nodes.

#include "qibem/moments.hpp"
#include "qibem/quasi_interpolation.hpp"
#include "qibem/spline.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qibem {

enum class Procedure { qi1, qi2 };
enum class IntegralClass { regular, nearly_singular, singular };

struct QuadratureConfig {
    Procedure procedure = Procedure::qi2;
    int qi_degree = 2;
    int nodes = 7;  // n + 1
    QiVariant variant = QiVariant::derivative_free;
    // Supports within near_radius |D_i| of s use moments, the rest the regular rule.
    // Unbounded by default: any fixed multiple of |D_i| stalls Galerkin convergence.
    double near_radius = std::numeric_limits<double>::infinity();
    double theta = 10.0;
    // Gauss order per element for the double-layer integral over the boundary,
    // split at the source point; 0 falls back to the shape functions' regular rules.
    int double_layer_order = 8;
};

inline IntegralClass classify_integral(double s, double lo, double hi, double near_radius) {
    if (s >= lo && s <= hi) return IntegralClass::singular;
    const double dist = s < lo ? lo - s : s - hi;
    return dist <= near_radius * (hi - lo) ? IntegralClass::nearly_singular : IntegralClass::regular;
}

/// As classify_integral, but on a closed curve also the images s -/+ gamma count.
inline IntegralClass classify_integral(double s, double lo, double hi, double near_radius, DomainKind kind,
                                       double gamma) {
    IntegralClass c = classify_integral(s, lo, hi, near_radius);
    if (kind == DomainKind::open_arc) return c;
    for (double img : {s - gamma, s + gamma}) c = std::max(c, classify_integral(img, lo, hi, near_radius));
    return c;
}

/// sum_j value_j g(x_j) + deriv_j g'(x_j); deriv is empty for derivative-free rules.
struct LinearRule {
    Eigen::VectorXd value;
    Eigen::VectorXd deriv;

    bool uses_derivatives() const { return deriv.size() > 0; }

    double apply(const Eigen::VectorXd& g, const Eigen::VectorXd* dg = nullptr) const {
        double v = value.dot(g);
        if (uses_derivatives()) {
            if (!dg) throw std::invalid_argument("LinearRule: derivative values required");
            v += deriv.dot(*dg);
        }
        return v;
    }
};

namespace detail {

/// Clamped space of degree d on [lo, hi] carrying the knots of `space` inside (lo, hi).
inline SplineSpace local_space(const SplineSpace& space, double lo, double hi) {
    const auto& t = space.knot_vector().knots();
    const double tol = 1e-12 * (hi - lo);
    std::vector<double> br{lo};
    std::vector<int> mu{space.degree() + 1};
    for (double x : t) {
        if (x <= lo + tol || x >= hi - tol) continue;
        if (br.size() > 1 && x == br.back()) ++mu.back();
        else {
            br.push_back(x);
            mu.push_back(1);
        }
    }
    br.push_back(hi);
    mu.push_back(space.degree() + 1);
    return SplineSpace(KnotVector::clamped(br, mu, space.degree()));
}

// Span of `space` whose interior contains the open interval (lo, hi).
inline int span_containing(const SplineSpace& space, double lo, double hi) {
    return space.find_span(0.5 * (lo + hi));
}

} // namespace detail

/// Precomputed QI1 / QI2 rules for one B-spline of a (global) space,
/// integrated over its support restricted to [a, b].
class SupportRule {
public:
    SupportRule(const SplineSpace& space, int i, const QuadratureConfig& cfg)
        : SupportRule(space, i, cfg, cfg.procedure, cfg.variant) {}

    SupportRule(const SplineSpace& space, int i, const QuadratureConfig& cfg, Procedure procedure, QiVariant variant)
        : procedure_(procedure), variant_(variant), theta_(cfg.theta),
          qi_(make_qi(space, i, cfg)), basis_index_(i) {
        const int m = qi_.node_count();
        nodes_ = qi_.nodes();
        if (variant_ == QiVariant::hermite) {
            const auto op = hermite_operator(qi_);
            Lv_ = op.value;
            Ld_ = op.deriv;
        } else {
            Lv_ = derivative_free_operator(qi_);
        }
        // B_i and B_i' at the nodes, one-sided at the ends of the support.
        bval_.resize(m);
        bder_.resize(m);
        for (int j = 0; j < m; ++j) {
            const double x = nodes_[j];
            const int span = j + 1 < m ? space.find_span(x) : space.find_span_left(x);
            const auto sb = space.span_basis(span, x, 1);
            const int r = i - (span - space.degree());
            bval_(j) = (r >= 0 && r <= space.degree()) ? sb.ders(0, r) : 0.0;
            bder_(j) = (r >= 0 && r <= space.degree()) ? sb.ders(1, r) : 0.0;
        }
        if (procedure_ == Procedure::qi1) {
            if (variant_ == QiVariant::hermite) check_subset(space);
            regular_ = combine_qi1(qi_.basis_integrals());
        } else {
            build_product(space);
            regular_ = combine_qi2(product_->basis_integrals_vec());
        }
    }

    double lo() const { return qi_.lo(); }
    double hi() const { return qi_.hi(); }
    int basis_index() const { return basis_index_; }
    const std::vector<double>& nodes() const { return nodes_; }
    const QiSpace& qi_space() const { return qi_; }
    Procedure procedure() const { return procedure_; }
    QiVariant variant() const { return variant_; }
    bool uses_derivatives() const { return variant_ == QiVariant::hermite; }

    const LinearRule& regular() const { return regular_; }

    /// Rule for int B_i g log delta(s, .) over the support.
    LinearRule singular(double s, DomainKind kind, double gamma, MomentTable* table = nullptr) const {
        MomentOptions opt;
        opt.theta = theta_;
        if (procedure_ == Procedure::qi1) {
            const SplineSpace tau = qi_.spline_space();
            const auto mu = table ? table->row(tau, s, kind, gamma) : modified_moments(tau, s, kind, gamma, 0, opt);
            return combine_qi1(Eigen::Map<const Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size())));
        }
        const auto mu = table ? table->row(product_->space, s, kind, gamma)
                              : modified_moments(product_->space, s, kind, gamma, 0, opt);
        return combine_qi2(Eigen::Map<const Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size())));
    }

    /// Convenience: evaluate g (and g') at the nodes and apply the regular rule.
    double integrate_regular(const std::function<double(double)>& g,
                             const std::function<double(double)>& dg = {}) const {
        return apply(regular_, g, dg);
    }

    double integrate_singular(const std::function<double(double)>& g, double s, DomainKind kind, double gamma,
                              const std::function<double(double)>& dg = {}, MomentTable* table = nullptr) const {
        return apply(singular(s, kind, gamma, table), g, dg);
    }

    double apply(const LinearRule& rule, const std::function<double(double)>& g,
                 const std::function<double(double)>& dg) const {
        Eigen::VectorXd gv(nodes_.size()), dv;
        for (std::size_t j = 0; j < nodes_.size(); ++j) gv(j) = g(nodes_[j]);
        if (rule.uses_derivatives()) {
            if (!dg) throw std::invalid_argument("SupportRule: Hermite variant needs g'");
            dv.resize(nodes_.size());
            for (std::size_t j = 0; j < nodes_.size(); ++j) dv(j) = dg(nodes_[j]);
            return rule.apply(gv, &dv);
        }
        return rule.apply(gv);
    }

private:
    struct Product {
        SplineSpace space;
        Eigen::MatrixXd Av;  // (n+1) x dim(Pi)
        Eigen::MatrixXd Ad;
        Eigen::VectorXd basis_integrals_vec() const {
            Eigen::VectorXd w(space.dimension());
            for (int m = 0; m < space.dimension(); ++m) w(m) = space.bspline_integral(m);
            return w;
        }
    };

    static QiSpace make_qi(const SplineSpace& space, int i, const QuadratureConfig& cfg) {
        const auto [lo, hi] = space.restricted_support(i);
        return QiSpace(lo, hi, cfg.qi_degree, cfg.nodes - 1);
    }

    void check_subset(const SplineSpace& space) const {
        if (qi_.degree() < space.degree())
            throw std::invalid_argument("QI1 Hermite rule needs QI degree >= spline degree");
        const double H = qi_.spacing();
        for (double x : space.knot_vector().breaks()) {
            if (x <= lo() || x >= hi()) continue;
            const double r = (x - lo()) / H;
            if (std::abs(r - std::round(r)) > 1e-9)
                throw std::invalid_argument("QI1 Hermite rule needs the spline knots among the QI nodes");
        }
    }

    LinearRule combine_qi1(const Eigen::VectorXd& w) const {
        LinearRule out;
        const Eigen::VectorXd c = Lv_.transpose() * w;
        out.value = c.cwiseProduct(bval_);
        if (variant_ == QiVariant::hermite) {
            const Eigen::VectorXd e = Ld_.transpose() * w;
            out.value += e.cwiseProduct(bder_);
            out.deriv = e.cwiseProduct(bval_);
        }
        return out;
    }

    LinearRule combine_qi2(const Eigen::VectorXd& w) const {
        LinearRule out;
        out.value = product_->Av * w;
        if (variant_ == QiVariant::hermite) out.deriv = product_->Ad * w;
        return out;
    }

    void build_product(const SplineSpace& space) {
        const SplineSpace local = detail::local_space(space, lo(), hi());
        SplineFitter local_fit(local);
        const auto bi = local_fit.fit([&](double t, int span) {
            const int g = detail::span_containing(space, local.knot(span), local.knot(span + 1));
            return space.value_in_span(basis_index_, g, t, 0);
        });
        const SplineFunction bfun{local, bi};
        const SplineSpace tau = qi_.spline_space();
        SplineSpace pi = product_space(local, tau);
        SplineFitter pfit(pi);
        Eigen::MatrixXd M(pi.dimension(), tau.dimension());
        for (int k = 0; k < tau.dimension(); ++k) {
            const auto eta = pfit.fit([&](double t, int span) {
                const double a = pi.knot(span), b = pi.knot(span + 1);
                const int sl = detail::span_containing(local, a, b), st = detail::span_containing(tau, a, b);
                return bfun.eval(sl, t, 0) * tau.value_in_span(k, st, t, 0);
            });
            for (int m = 0; m < pi.dimension(); ++m) M(m, k) = eta[m];
        }
        Eigen::MatrixXd Av = Lv_.transpose() * M.transpose();
        Eigen::MatrixXd Ad;
        if (variant_ == QiVariant::hermite) Ad = Ld_.transpose() * M.transpose();
        product_.emplace(Product{std::move(pi), std::move(Av), std::move(Ad)});
    }

    Procedure procedure_;
    QiVariant variant_;
    double theta_;
    QiSpace qi_;
    int basis_index_;
    std::vector<double> nodes_;
    Eigen::MatrixXd Lv_, Ld_;
    Eigen::VectorXd bval_, bder_;
    std::optional<Product> product_;
    LinearRule regular_;
};

/// int_{D_i} B_i g dt.
inline double qi1_regular(const std::function<double(double)>& g, const SplineSpace& space, int i,
                          const QuadratureConfig& cfg, const std::function<double(double)>& dg = {}) {
    return SupportRule(space, i, cfg, Procedure::qi1, cfg.variant).integrate_regular(g, dg);
}

inline double qi2_regular(const std::function<double(double)>& g, const SplineSpace& space, int i,
                          const QuadratureConfig& cfg, const std::function<double(double)>& dg = {}) {
    return SupportRule(space, i, cfg, Procedure::qi2, cfg.variant).integrate_regular(g, dg);
}

/// int_{D_i} B_i g log delta(s, .) dt; s far from the support (beyond near_radius
/// support widths) is routed to the regular rule with log delta folded into g.
inline double singular_routed(const SupportRule& rule, const std::function<double(double)>& g, double s,
                              DomainKind kind, double gamma, double near_radius,
                              const std::function<double(double)>& dg = {}, MomentTable* table = nullptr) {
    if (classify_integral(s, rule.lo(), rule.hi(), near_radius, kind, gamma) != IntegralClass::regular)
        return rule.integrate_singular(g, s, kind, gamma, dg, table);
    auto gk = [&](double t) { return g(t) * k2(s, t, kind, gamma); };
    std::function<double(double)> dgk;
    if (rule.uses_derivatives()) {
        dgk = [&](double t) {
            // d/dt log|s - t - c| = -1 / (s - t - c)
            double dk = -1.0 / (s - t);
            if (kind == DomainKind::closed_curve) dk += -1.0 / (s - t - gamma) - 1.0 / (s - t + gamma);
            return dg(t) * k2(s, t, kind, gamma) + g(t) * dk;
        };
    }
    return rule.integrate_regular(gk, dgk);
}

inline double qi1_singular(const std::function<double(double)>& g, double s, const SplineSpace& space, int i,
                           DomainKind kind, double gamma, const QuadratureConfig& cfg,
                           const std::function<double(double)>& dg = {}, MomentTable* table = nullptr) {
    const SupportRule rule(space, i, cfg, Procedure::qi1, cfg.variant);
    return singular_routed(rule, g, s, kind, gamma, cfg.near_radius, dg, table);
}

inline double qi2_singular(const std::function<double(double)>& g, double s, const SplineSpace& space, int i,
                           DomainKind kind, double gamma, const QuadratureConfig& cfg,
                           const std::function<double(double)>& dg = {}, MomentTable* table = nullptr) {
    const SupportRule rule(space, i, cfg, Procedure::qi2, cfg.variant);
    return singular_routed(rule, g, s, kind, gamma, cfg.near_radius, dg, table);
}

/// Baselines with n+1 points over the whole support: plain Gauss-Legendre and
/// the cubic Telles transformation for the integrand f(t) log|s - t|.
inline double gauss_log_baseline(const std::function<double(double)>& f, double s, double lo, double hi,
                                 int points) {
    return gauss_legendre(
        [&](double t) {
            const double d = std::abs(s - t);
            return d == 0.0 ? 0.0 : f(t) * std::log(d);
        },
        lo, hi, points);
}

inline double telles_log_baseline(const std::function<double(double)>& f, double s, double lo, double hi,
                                  int points) {
    return telles(f, s, lo, hi, points);
}

inline std::string to_string(Procedure p) { return p == Procedure::qi1 ? "QI1" : "QI2"; }
inline std::string to_string(QiVariant v) { return v == QiVariant::hermite ? "hermite" : "derivative-free"; }

} // namespace qibem
