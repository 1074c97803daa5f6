#pragma once

// Galerkin discretisation of Symm's equation V phi = f on a B-spline boundary.
// Exterior problems on open arcs use the single-layer (indirect) form; interior
// problems on closed curves use the direct form with a double-layer right-hand side.

#include "qibem/curve.hpp"
#include "qibem/gauss.hpp"
#include "qibem/kernels.hpp"
#include "qibem/moments.hpp"
#include "qibem/quadrature.hpp"
#include "qibem/spline.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace qibem {

/// Raised when a solve or an evaluation cannot produce a trustworthy number.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Formulation { exterior_indirect, interior_direct };

inline std::string to_string(Formulation f) {
    return f == Formulation::exterior_indirect ? "exterior-indirect" : "interior-direct";
}

struct BoundaryProblem {
    std::shared_ptr<const CurveGeometry> geometry;
    Formulation formulation = Formulation::exterior_indirect;
    std::function<double(double)> datum;  // u_D(F(t))
    std::function<double(double)> exact;  // phi(F(t)); may be empty
    SplineSpace space;

    void validate() const {
        if (!geometry) throw std::invalid_argument("BoundaryProblem: missing geometry");
        if (!datum) throw std::invalid_argument("BoundaryProblem: missing Dirichlet datum");
        const bool periodic = space.kind() == KnotKind::periodic;
        if (formulation == Formulation::exterior_indirect && (geometry->closed() || periodic))
            throw std::invalid_argument("exterior-indirect formulation needs an open arc and an open space");
        if (formulation == Formulation::interior_direct && (!geometry->closed() || !periodic))
            throw std::invalid_argument("interior-direct formulation needs a closed curve and a periodic space");
        const double tol = 1e-12 * geometry->gamma();
        if (std::abs(space.a() - geometry->a()) > tol || std::abs(space.b() - geometry->b()) > tol)
            throw std::invalid_argument("discrete space and geometry must share the parameter interval");
    }
};

struct GalerkinSystem {
    SplineSpace space;
    Eigen::MatrixXd P;      // parametric coefficients = P * physical coefficients
    Eigen::MatrixXd A;      // physical DoF
    Eigen::VectorXd beta;
    Eigen::VectorXd alpha;  // physical DoF, filled by solve()
    double rcond = 0.0;
    double residual = 0.0;
    bool ill_conditioned = false;

    int dof() const { return static_cast<int>(A.rows()); }
    Eigen::VectorXd parametric_coefficients() const { return P * alpha; }
};

namespace detail {

/// A clamped open space whose interior B-splines reproduce the periodic basis
/// functions with their full (unwrapped) supports, plus the index of each
/// physical shape function in it. Open spaces map to themselves.
struct UnrolledSpace {
    SplineSpace space;
    std::vector<int> index;
};

inline UnrolledSpace unroll_periodic(const SplineSpace& sp) {
    const int N = sp.dimension();
    if (sp.kind() == KnotKind::open) {
        std::vector<int> idx(N);
        for (int i = 0; i < N; ++i) idx[i] = i;
        return {sp, idx};
    }
    const int d = sp.degree();
    const int period = sp.physical_dimension();  // t_{k + period} = t_k + gamma
    const double gamma = sp.b() - sp.a();
    const auto& t = sp.knot_vector().knots();
    auto knot = [&](int k) {
        const int q = static_cast<int>(std::floor(static_cast<double>(k) / period));
        return t[k - q * period] + q * gamma;
    };
    std::vector<double> br;
    std::vector<int> mu;
    for (int k = -(d + 2); k <= N + 2 * d + 2; ++k) {
        const double v = knot(k);
        if (!br.empty() && std::abs(v - br.back()) <= 1e-13 * gamma) {
            ++mu.back();
        } else {
            br.push_back(v);
            mu.push_back(1);
        }
    }
    for (int& m : mu) m = std::min(m, d + 1);
    SplineSpace ext(KnotVector::clamped(br, mu, d));
    const auto& e = ext.knot_vector().knots();
    std::vector<int> idx;
    for (int p = 0; p < period; ++p) {
        int found = -1;
        for (int m = 0; m + d + 1 < static_cast<int>(e.size()) && found < 0; ++m) {
            bool same = true;
            for (int r = 0; r <= d + 1 && same; ++r) same = std::abs(e[m + r] - t[p + r]) <= 1e-13 * gamma;
            if (same) found = m;
        }
        if (found < 0) throw std::logic_error("unroll_periodic: shape function not found");
        idx.push_back(found);
    }
    return {std::move(ext), std::move(idx)};
}

} // namespace detail

/// Holds the node grid, per-support rules and geometry samples shared by the
/// matrix and right-hand-side assembly.
class GalerkinAssembler {
public:
    GalerkinAssembler(const BoundaryProblem& problem, const QuadratureConfig& cfg)
        : problem_(problem), cfg_(cfg), unrolled_(detail::unroll_periodic(problem.space)), ks_(problem.geometry) {
        problem_.validate();
        const SplineSpace& sp = unrolled_.space;
        for (int i : unrolled_.index) {
            outer_.emplace_back(sp, i, cfg_, cfg_.procedure, QiVariant::derivative_free);
            if (cfg_.variant == QiVariant::hermite) inner_.emplace_back(sp, i, cfg_, cfg_.procedure, QiVariant::hermite);
        }
        build_grid();
        sample_geometry();
    }

    int dof() const { return static_cast<int>(outer_.size()); }
    const std::vector<double>& grid() const { return x_; }
    const KernelSplit& kernels() const { return ks_; }
    MomentTable& moment_table() { return table_; }

    /// A_ij = -1/(2 pi) int B_i J int B_j U J over physical shape functions.
    Eigen::MatrixXd matrix() {
        const int N = dof();
        const int M = static_cast<int>(x_.size());
        const DomainKind kind = ks_.kind();
        const double gamma = ks_.gamma();
        const bool hermite = cfg_.variant == QiVariant::hermite;
        Eigen::MatrixXd I(M, N);  // I(a, j) = int B_j(t) U(s_a, t) J(t) dt
        Eigen::VectorXd k1j(M), uj(M), dk1j(M), duj(M);
        for (int a = 0; a < M; ++a) {
            const double s = x_[a];
            for (int b = 0; b < M; ++b) {
                const double t = x_[b];
                const double k1 = kernel_k1(a, b);
                const double del = ks_.delta(s, t);
                const double logdel = del > 0.0 ? std::log(del) : 0.0;
                k1j(b) = k1 * J_[b];
                uj(b) = k1j(b) + logdel * J_[b];
                if (hermite) {
                    dk1j(b) = ks_.k1_dt(s, t) * J_[b] + k1 * dJ_[b];
                    double dk = 0.0;
                    if (del > 0.0) {
                        dk = -1.0 / (s - t);
                        if (kind == DomainKind::closed_curve) dk += -1.0 / (s - t - gamma) - 1.0 / (s - t + gamma);
                    }
                    duj(b) = dk1j(b) + dk * J_[b] + logdel * dJ_[b];
                }
            }
            for (int j = 0; j < N; ++j) {
                const SupportRule& rule = inner_rule(j);
                const auto& idx = inner_nodes(j);
                const LinearRule& reg = rule.regular();
                const bool near =
                    classify_integral(s, rule.lo(), rule.hi(), cfg_.near_radius, kind, gamma) != IntegralClass::regular;
                const Eigen::VectorXd& f = near ? k1j : uj;
                const Eigen::VectorXd& df = near ? dk1j : duj;
                double v = 0.0;
                for (std::size_t m = 0; m < idx.size(); ++m) {
                    v += reg.value(m) * f(idx[m]);
                    if (hermite) v += reg.deriv(m) * df(idx[m]);
                }
                if (near) {
                    const LinearRule sing = rule.singular(s, kind, gamma, &table_);
                    for (std::size_t m = 0; m < idx.size(); ++m) {
                        v += sing.value(m) * J_[idx[m]];
                        if (hermite) v += sing.deriv(m) * dJ_[idx[m]];
                    }
                }
                I(a, j) = v;
            }
        }
        Eigen::MatrixXd WJ = outer_weights();
        for (int a = 0; a < M; ++a) WJ.col(a) *= J_[a];
        return -(WJ * I) / (2.0 * std::numbers::pi);
    }

    /// beta_i: int B_i J u_D (exterior) or 1/2 of it minus 1/(2 pi) times the
    /// double-layer term (interior).
    Eigen::VectorXd rhs() const {
        const int M = static_cast<int>(x_.size());
        Eigen::VectorXd ud(M), g(M);
        for (int a = 0; a < M; ++a) {
            ud(a) = datum(x_[a]);
            g(a) = ud(a) * J_[a];
        }
        const Eigen::MatrixXd W = outer_weights();
        if (problem_.formulation == Formulation::exterior_indirect) return W * g;
        // int over one period of Kbar(s, .) u_D: the shape functions sum to one.
        Eigen::VectorXd c = Eigen::VectorXd::Zero(M);
        for (int j = 0; j < dof(); ++j) {
            const LinearRule& reg = outer_[j].regular();
            for (std::size_t m = 0; m < nodes_of_[j].size(); ++m) c(nodes_of_[j][m]) += reg.value(m);
        }
        Eigen::VectorXd dl(M);
        for (int a = 0; a < M; ++a) {
            double v = 0.0;
            if (cfg_.double_layer_order > 0) v = double_layer_gauss(a);
            else
                for (int b = 0; b < M; ++b)
                    if (c(b) != 0.0) v += c(b) * kernel_dlp(a, b) * ud(b);
            dl(a) = v * J_[a];
        }
        return 0.5 * (W * g) - (W * dl) / (2.0 * std::numbers::pi);
    }

private:
    const SupportRule& inner_rule(int j) const { return inner_.empty() ? outer_[j] : inner_[j]; }
    const std::vector<int>& inner_nodes(int j) const { return inner_.empty() ? nodes_of_[j] : inner_nodes_of_[j]; }

    // Periodic shape functions extend past [a, b]; the datum is periodic there.
    double datum(double t) const {
        if (ks_.kind() == DomainKind::closed_curve) {
            const double a = problem_.geometry->a(), g = ks_.gamma();
            if (t < a) t += g;
            else if (t > a + g) t -= g;
        }
        return problem_.datum(t);
    }

    void build_grid() {
        std::vector<double> all;
        for (const auto* rules : {&outer_, &inner_})
            for (const auto& r : *rules) all.insert(all.end(), r.nodes().begin(), r.nodes().end());
        std::sort(all.begin(), all.end());
        const double tol = 1e-12 * ks_.gamma();
        for (double v : all)
            if (x_.empty() || v - x_.back() > tol) x_.push_back(v);
        auto index = [&](const SupportRule& r) {
            std::vector<int> idx;
            for (double v : r.nodes())
                idx.push_back(static_cast<int>(std::lower_bound(x_.begin(), x_.end(), v - tol) - x_.begin()));
            return idx;
        };
        for (const auto& r : outer_) nodes_of_.push_back(index(r));
        for (const auto& r : inner_) inner_nodes_of_.push_back(index(r));
    }

    void sample_geometry() {
        const auto& g = ks_.geometry();
        for (double t : x_) {
            const Point f1 = g.eval(t, 1), f2 = g.eval(t, 2);
            F_.push_back(g.eval(t, 0));
            F1_.push_back(f1);
            J_.push_back(f1.norm());
            dJ_.push_back(f1.dot(f2) / f1.norm());
        }
    }

    Eigen::MatrixXd outer_weights() const {
        Eigen::MatrixXd W = Eigen::MatrixXd::Zero(dof(), static_cast<Eigen::Index>(x_.size()));
        for (int i = 0; i < dof(); ++i) {
            const LinearRule& reg = outer_[i].regular();
            for (std::size_t m = 0; m < nodes_of_[i].size(); ++m) W(i, nodes_of_[i][m]) += reg.value(m);
        }
        return W;
    }

    bool on_diagonal(double s, double t) const {
        const double e = ks_.patch_radius(), d = std::abs(s - t);
        return d < e || (ks_.kind() == DomainKind::closed_curve && std::abs(d - ks_.gamma()) < e);
    }

    // The double-layer kernel K(s, .) is only as smooth as the geometry, and near s
    // it inherits the jumps of F''' at the knots, which costs the shape-function
    // rules two orders. Element-wise Gauss split at s does not see this.
    double double_layer_gauss(int a) const {
        if (dl_.t.empty()) sample_double_layer();
        const double lo = problem_.geometry->a(), g = ks_.gamma();
        double s = x_[a];
        while (s < lo) s += g;
        while (s > lo + g) s -= g;
        const int q = cfg_.double_layer_order;
        const auto& r = gauss_rule(q);
        auto point = [&](double t, const Point& f, const Point& f1, double u) {
            if (on_diagonal(x_[a], t)) return ks_.dlp(x_[a], t) * u;
            const Point df = f - F_[a];
            return ks_.orientation() * (df.x() * f1.y() - df.y() * f1.x()) / df.squaredNorm() * u;
        };
        auto piece = [&](double p, double e) {
            double acc = 0.0;
            for (int k = 0; k < q; ++k) {
                const double t = 0.5 * (p + e) + 0.5 * (e - p) * r.nodes[k];
                const auto& geom = ks_.geometry();
                acc += r.weights[k] * point(t, geom.eval(t), geom.eval(t, 1), problem_.datum(t));
            }
            return 0.5 * (e - p) * acc;
        };
        double v = 0.0;
        const int E = static_cast<int>(dl_.breaks.size()) - 1;
        for (int e = 0; e < E; ++e) {
            const double p = dl_.breaks[e], h = dl_.breaks[e + 1];
            if (s > p && s < h) {
                v += piece(p, s) + piece(s, h);
                continue;
            }
            for (int k = e * q; k < (e + 1) * q; ++k) v += dl_.w[k] * point(dl_.t[k], dl_.f[k], dl_.f1[k], dl_.u[k]);
        }
        return v;
    }

    void sample_double_layer() const {
        dl_.breaks = problem_.space.knot_vector().breaks();
        const int q = cfg_.double_layer_order;
        const auto& r = gauss_rule(q);
        const auto& geom = ks_.geometry();
        for (std::size_t e = 0; e + 1 < dl_.breaks.size(); ++e) {
            const double p = dl_.breaks[e], h = dl_.breaks[e + 1];
            for (int k = 0; k < q; ++k) {
                const double t = 0.5 * (p + h) + 0.5 * (h - p) * r.nodes[k];
                dl_.t.push_back(t);
                dl_.w.push_back(0.5 * (h - p) * r.weights[k]);
                dl_.f.push_back(geom.eval(t));
                dl_.f1.push_back(geom.eval(t, 1));
                dl_.u.push_back(problem_.datum(t));
            }
        }
    }

    // K1 from the cached samples away from the diagonal and its images.
    double kernel_k1(int a, int b) const {
        const double s = x_[a], t = x_[b];
        if (on_diagonal(s, t)) return ks_.k1(s, t);
        return 0.5 * std::log((F_[a] - F_[b]).squaredNorm()) - std::log(ks_.delta(s, t));
    }

    double kernel_dlp(int a, int b) const {
        const double s = x_[a], t = x_[b];
        if (on_diagonal(s, t)) return ks_.dlp(s, t);
        const Point df = F_[b] - F_[a];
        const Point& f1 = F1_[b];
        return ks_.orientation() * (df.x() * f1.y() - df.y() * f1.x()) / df.squaredNorm();
    }

    BoundaryProblem problem_;
    QuadratureConfig cfg_;
    detail::UnrolledSpace unrolled_;
    KernelSplit ks_;
    std::vector<SupportRule> outer_, inner_;
    std::vector<double> x_;
    std::vector<std::vector<int>> nodes_of_, inner_nodes_of_;
    struct DoubleLayerSamples {
        std::vector<double> breaks, t, w, u;
        std::vector<Point> f, f1;
    };
    mutable DoubleLayerSamples dl_;
    std::vector<Point> F_, F1_;
    std::vector<double> J_, dJ_;
    MomentTable table_;
};

inline Eigen::MatrixXd assemble_matrix(const BoundaryProblem& problem, const QuadratureConfig& cfg) {
    return GalerkinAssembler(problem, cfg).matrix();
}

inline Eigen::VectorXd assemble_rhs(const BoundaryProblem& problem, const QuadratureConfig& cfg) {
    return GalerkinAssembler(problem, cfg).rhs();
}

/// Builds A and beta; alpha stays empty until solve().
inline GalerkinSystem assemble(const BoundaryProblem& problem, const QuadratureConfig& cfg) {
    GalerkinAssembler asmb(problem, cfg);
    GalerkinSystem sys{problem.space, problem.space.pairing_matrix(), asmb.matrix(), asmb.rhs(), {}};
    return sys;
}

/// Dense LU with partial pivoting. Throws NumericalFailure for a numerically
/// singular matrix; flags (but keeps) solutions with a small reciprocal condition.
inline void solve(GalerkinSystem& sys, double rcond_fail = 1e-15, double rcond_warn = 1e-10) {
    if (!sys.A.allFinite() || !sys.beta.allFinite()) throw NumericalFailure("non-finite entries in the system");
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys.A);
    sys.rcond = lu.rcond();
    if (!(sys.rcond > rcond_fail))
        throw NumericalFailure("system matrix is singular (rcond estimate " + std::to_string(sys.rcond) + ")");
    sys.ill_conditioned = sys.rcond < rcond_warn;
    sys.alpha = lu.solve(sys.beta);
    const double nb = sys.beta.norm();
    sys.residual = (sys.A * sys.alpha - sys.beta).norm() / (nb > 0.0 ? nb : 1.0);
    if (!sys.alpha.allFinite()) throw NumericalFailure("solution has non-finite coefficients");
}

/// phi_h(F(t)) = sum_j alpha_j B_j(t).
inline double eval_solution(const GalerkinSystem& sys, double t) {
    const Eigen::VectorXd c = sys.parametric_coefficients();
    const SpanBasis sb = sys.space.basis_at(t, 0);
    const int d = sys.space.degree();
    double v = 0.0;
    for (int r = 0; r <= d; ++r) v += c(sb.span - d + r) * sb.ders(0, r);
    return v;
}

struct L2Error {
    double absolute = 0.0;
    double relative = 0.0;
    double parametric_relative = 0.0;  // same ratio with dt in place of J dt
};

/// L2(Gamma) distance between phi_h and phi, Gauss order d+5 per element, weight J.
inline L2Error l2_error(const GalerkinSystem& sys, const CurveGeometry& geom, const std::function<double(double)>& exact) {
    const Eigen::VectorXd c = sys.parametric_coefficients();
    const SplineSpace& sp = sys.space;
    const int d = sp.degree();
    const GaussRule& q = gauss_rule(d + 5);
    double err2 = 0.0, ref2 = 0.0, perr2 = 0.0, pref2 = 0.0;
    for (int mu : sp.spans()) {
        const double lo = sp.knot(mu), hi = sp.knot(mu + 1);
        const double hw = 0.5 * (hi - lo), mid = 0.5 * (lo + hi);
        for (std::size_t k = 0; k < q.nodes.size(); ++k) {
            const double t = mid + hw * q.nodes[k];
            const auto sb = sp.span_basis(mu, t, 0);
            double ph = 0.0;
            for (int r = 0; r <= d; ++r) ph += c(mu - d + r) * sb.ders(0, r);
            const double ex = exact(t), w0 = hw * q.weights[k], w = w0 * geom.speed(t);
            err2 += w * (ex - ph) * (ex - ph);
            ref2 += w * ex * ex;
            perr2 += w0 * (ex - ph) * (ex - ph);
            pref2 += w0 * ex * ex;
        }
    }
    L2Error e;
    e.absolute = std::sqrt(err2);
    e.relative = ref2 > 0.0 ? e.absolute / std::sqrt(ref2) : e.absolute;
    e.parametric_relative = pref2 > 0.0 ? std::sqrt(perr2 / pref2) : std::sqrt(perr2);
    return e;
}

inline L2Error l2_error(const GalerkinSystem& sys, const BoundaryProblem& problem) {
    if (!problem.exact) throw std::invalid_argument("l2_error: problem has no exact solution");
    return l2_error(sys, *problem.geometry, problem.exact);
}

struct PotentialOptions {
    double cutoff_factor = 0.25;  // refuse points closer than this times the longest element
    int order = 16;
};

/// u(x) for x in the domain from the representation formula with density phi_h.
inline double evaluate_potential(const GalerkinSystem& sys, const BoundaryProblem& problem, const Point& x,
                                 const PotentialOptions& opt = {}) {
    const CurveGeometry& g = *problem.geometry;
    const SplineSpace& sp = sys.space;
    const Eigen::VectorXd c = sys.parametric_coefficients();
    const int d = sp.degree();
    const GaussRule& q = gauss_rule(opt.order);
    // Element arclengths and a sampled distance to the boundary.
    double hmax = 0.0, dist = std::numeric_limits<double>::infinity();
    std::vector<double> len;
    for (int mu : sp.spans()) {
        const double lo = sp.knot(mu), hi = sp.knot(mu + 1);
        const double l = gauss_legendre([&](double t) { return g.speed(t); }, lo, hi, 16);
        len.push_back(l);
        hmax = std::max(hmax, l);
        for (int k = 0; k <= 32; ++k) dist = std::min(dist, (g.eval(lo + (hi - lo) * k / 32.0) - x).norm());
    }
    if (dist < opt.cutoff_factor * hmax)
        throw NumericalFailure("evaluation point is too close to the boundary (distance " + std::to_string(dist) +
                               ")");
    const double orient = g.closed() && g.signed_area() < 0.0 ? -1.0 : 1.0;
    double single = 0.0, dbl = 0.0;
    std::size_t e = 0;
    for (int mu : sp.spans()) {
        const double lo = sp.knot(mu), hi = sp.knot(mu + 1);
        const int panels = std::max(1, static_cast<int>(std::ceil(2.0 * len[e++] / dist)));
        const double pw = (hi - lo) / panels;
        for (int p = 0; p < panels; ++p) {
            const double plo = lo + p * pw, hw = 0.5 * pw, mid = plo + hw;
            for (std::size_t k = 0; k < q.nodes.size(); ++k) {
                const double t = mid + hw * q.nodes[k], w = hw * q.weights[k];
                const Point f = g.eval(t, 0), f1 = g.eval(t, 1);
                const Point r = f - x;
                const auto sb = sp.span_basis(mu, t, 0);
                double ph = 0.0;
                for (int j = 0; j <= d; ++j) ph += c(mu - d + j) * sb.ders(0, j);
                single += w * std::log(r.norm()) * ph * f1.norm();
                if (problem.formulation == Formulation::interior_direct)
                    dbl += w * orient * (r.x() * f1.y() - r.y() * f1.x()) / r.squaredNorm() * problem.datum(t);
            }
        }
    }
    return (dbl - single) / (2.0 * std::numbers::pi);
}

} // namespace qibem
