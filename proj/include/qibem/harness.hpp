#pragma once

// Drivers behind the command line tool: convergence studies, quadrature
// accuracy sweeps, inner-integral profiles and consistency checks against the
// brute-force reference assembly. Results come back as plain rows plus a CSV
// rendering.

#include "qibem/galerkin.hpp"
#include "qibem/moments.hpp"
#include "qibem/presets.hpp"
#include "qibem/quadrature.hpp"
#include "qibem/reference.hpp"
#include "qibem/spline.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qibem {

// ---------------------------------------------------------------- CSV

/// Header plus rows of preformatted cells. Doubles use 17 significant digits so
/// values survive a round trip; NaN renders as an empty cell.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    struct Cell {
        std::string text;
        Cell(double v) : text(format(v)) {}
        Cell(int v) : text(std::to_string(v)) {}
        Cell(std::size_t v) : text(std::to_string(v)) {}
        Cell(bool v) : text(v ? "1" : "0") {}
        Cell(std::string v) : text(std::move(v)) {}
        Cell(const char* v) : text(v) {}
    };

    void add(std::vector<Cell> cells) {
        if (cells.size() != header_.size()) throw std::logic_error("CsvTable: row width does not match header");
        std::vector<std::string> row;
        for (auto& c : cells) row.push_back(std::move(c.text));
        rows_.push_back(std::move(row));
    }

    const std::vector<std::string>& header() const { return header_; }
    const std::vector<std::vector<std::string>>& rows() const { return rows_; }

    void write(std::ostream& os) const {
        line(os, header_);
        for (const auto& r : rows_) line(os, r);
    }

    static std::string format(double v) {
        if (std::isnan(v)) return "";
        if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

private:
    static void line(std::ostream& os, const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) os << (k ? "," : "") << cells[k];
        os << '\n';
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Least-squares slope of log(y) against log(x); pairs with y <= 0 are skipped.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (!(y[k] > 0.0) || !(x[k] > 0.0)) continue;
        const double lx = std::log(x[k]), ly = std::log(y[k]);
        sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
        ++n;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline double log_ratio(double num, double den) {
    return num > 0.0 && den > 0.0 ? std::log(num / den) : std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------- convergence

struct ConvergenceRow {
    int level = 0;
    int dof = 0;
    double h = 0.0;  // largest parametric element
    double error = 0.0;
    double error_param = 0.0;
    double order_log2 = std::numeric_limits<double>::quiet_NaN();
    double order_dof = std::numeric_limits<double>::quiet_NaN();
    double order_param_dof = std::numeric_limits<double>::quiet_NaN();
    double residual = 0.0;
    double rcond = 0.0;
    bool ill_conditioned = false;
    double seconds = 0.0;
};

inline double max_element_length(const SplineSpace& sp) {
    const auto br = sp.knot_vector().breaks();
    double h = 0.0;
    for (std::size_t e = 0; e + 1 < br.size(); ++e) h = std::max(h, br[e + 1] - br[e]);
    return h;
}

/// Solves one refinement level. Needs an exact solution for the error columns.
inline ConvergenceRow solve_level(const ProblemPreset& preset, const QuadratureConfig& cfg, int level) {
    const auto t0 = std::chrono::steady_clock::now();
    const BoundaryProblem prob = preset.problem(level);
    GalerkinSystem sys = assemble(prob, cfg);
    solve(sys);
    ConvergenceRow r;
    r.level = level;
    r.dof = sys.dof();
    r.h = max_element_length(prob.space);
    r.residual = sys.residual;
    r.rcond = sys.rcond;
    r.ill_conditioned = sys.ill_conditioned;
    if (prob.exact) {
        const L2Error e = l2_error(sys, prob);
        r.error = e.relative;
        r.error_param = e.parametric_relative;
    } else {
        r.error = r.error_param = std::numeric_limits<double>::quiet_NaN();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

/// Dyadic refinement study. Levels are independent and may run concurrently;
/// each assembly is serial, so results do not depend on the schedule.
inline std::vector<ConvergenceRow> run_convergence(const ProblemPreset& preset, const QuadratureConfig& cfg,
                                                   int levels, bool parallel = true) {
    if (levels < 1) throw std::invalid_argument("levels must be >= 1");
    std::vector<ConvergenceRow> rows(levels);
    if (parallel) {
        std::vector<std::future<ConvergenceRow>> jobs;
        for (int l = 0; l < levels; ++l)
            jobs.push_back(std::async(std::launch::async, [&, l] { return solve_level(preset, cfg, l); }));
        for (int l = 0; l < levels; ++l) rows[l] = jobs[l].get();
    } else {
        for (int l = 0; l < levels; ++l) rows[l] = solve_level(preset, cfg, l);
    }
    for (int l = 1; l < levels; ++l) {
        auto& r = rows[l];
        const auto& p = rows[l - 1];
        const double dofs = std::log(static_cast<double>(r.dof) / p.dof);
        r.order_log2 = log_ratio(p.error, r.error) / std::log(2.0);
        r.order_dof = log_ratio(p.error, r.error) / dofs;
        r.order_param_dof = log_ratio(p.error_param, r.error_param) / dofs;
    }
    return rows;
}

inline CsvTable convergence_table(const std::vector<ConvergenceRow>& rows) {
    CsvTable t({"level", "dof", "h", "error", "order_log2", "order_dof", "error_param", "order_param_dof", "residual",
                "rcond", "ill_conditioned", "seconds"});
    for (const auto& r : rows)
        t.add({r.level, r.dof, r.h, r.error, r.order_log2, r.order_dof, r.error_param, r.order_param_dof, r.residual,
               r.rcond, r.ill_conditioned, r.seconds});
    return t;
}

// ---------------------------------------------------------------- quadrature sweeps

struct SweepRow {
    double h = 0.0;
    std::string rule;
    int nodes = 0;
    double max_error = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;

    std::vector<double> errors(const std::string& rule, int nodes) const {
        std::vector<double> out;
        for (const auto& r : rows)
            if (r.rule == rule && r.nodes == nodes) out.push_back(r.max_error);
        return out;
    }
    std::vector<double> hs(const std::string& rule, int nodes) const {
        std::vector<double> out;
        for (const auto& r : rows)
            if (r.rule == rule && r.nodes == nodes) out.push_back(r.h);
        return out;
    }
    double slope(const std::string& rule, int nodes) const { return fit_slope(hs(rule, nodes), errors(rule, nodes)); }
};

/// Rows of several sweeps in one table, tagged with the sweep name.
inline CsvTable sweep_table(const std::vector<std::pair<std::string, SweepResult>>& sweeps) {
    CsvTable t({"kind", "h", "rule", "nodes", "max_error"});
    for (const auto& [kind, s] : sweeps)
        for (const auto& r : s.rows) t.add({kind, r.h, r.rule, r.nodes, r.max_error});
    return t;
}

/// Fitted slope per (rule, node count), in order of first appearance.
inline CsvTable slope_table(const std::vector<std::pair<std::string, SweepResult>>& sweeps) {
    CsvTable t({"kind", "rule", "nodes", "slope"});
    for (const auto& [kind, s] : sweeps) {
        std::vector<std::pair<std::string, int>> seen;
        for (const auto& r : s.rows) {
            const std::pair<std::string, int> key{r.rule, r.nodes};
            if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
            seen.push_back(key);
            t.add({kind, r.rule, r.nodes, s.slope(r.rule, r.nodes)});
        }
    }
    return t;
}

struct SweepOptions {
    std::vector<double> hs;
    std::vector<int> nodes{7, 13};
    int degree = 2;     // d of the test space
    int qi_degree = 2;  // p
    // QI1 needs the projector property, QI2 does not need derivatives.
    QiVariant qi1_variant = QiVariant::hermite;
    QiVariant qi2_variant = QiVariant::derivative_free;
};

namespace detail {

inline QuadratureConfig sweep_config(Procedure proc, int nodes, const SweepOptions& opt) {
    QuadratureConfig c;
    c.procedure = proc;
    c.qi_degree = opt.qi_degree;
    c.nodes = nodes;
    c.variant = proc == Procedure::qi1 ? opt.qi1_variant : opt.qi2_variant;
    return c;
}

inline SplineSpace sweep_space(double h, int degree) {
    const int E = static_cast<int>(std::lround(2.0 / h));
    return SplineSpace(KnotVector::open_uniform(-1.0, 1.0, degree, E));
}

// Span-wise graded Gauss of B_i(t) f(t) over supp B_i, refined toward `centres`.
template <class F>
double reference_support_integral(const SplineSpace& sp, int i, F&& f, const std::vector<double>& centres,
                                  const ReferenceOptions& opt = {}) {
    const int d = sp.degree();
    double sum = 0.0;
    for (int mu : sp.spans()) {
        if (i < mu - d || i > mu) continue;
        graded_nodes(sp.knot(mu), sp.knot(mu + 1), centres, opt, [&](double t, double w) {
            sum += w * sp.span_basis(mu, t, 0).ders(0, i - (mu - d)) * f(t);
        });
    }
    return sum;
}

} // namespace detail

/// Regular integrals int B_i g over uniform meshes of [-1, 1], g = 3 sin(pi (t+1)) cos(t+1).
inline SweepResult quadtest_regular(SweepOptions opt = {}) {
    if (opt.hs.empty()) opt.hs = {1.0 / 5, 1.0 / 10, 1.0 / 20, 1.0 / 40};
    constexpr double pi = std::numbers::pi;
    auto g = [](double t) { return 3.0 * std::sin(pi * (t + 1.0)) * std::cos(t + 1.0); };
    auto dg = [](double t) {
        return 3.0 * (pi * std::cos(pi * (t + 1.0)) * std::cos(t + 1.0) - std::sin(pi * (t + 1.0)) * std::sin(t + 1.0));
    };
    SweepResult out;
    for (double h : opt.hs) {
        const SplineSpace sp = detail::sweep_space(h, opt.degree);
        std::vector<double> ref(sp.dimension());
        for (int i = 0; i < sp.dimension(); ++i) ref[i] = detail::reference_support_integral(sp, i, g, {});
        for (Procedure proc : {Procedure::qi1, Procedure::qi2})
            for (int n : opt.nodes) {
                const auto cfg = detail::sweep_config(proc, n, opt);
                double err = 0.0;
                for (int i = 0; i < sp.dimension(); ++i)
                    err = std::max(err, std::abs(SupportRule(sp, i, cfg).integrate_regular(g, dg) - ref[i]));
                out.rows.push_back({h, to_string(proc), n, err});
            }
    }
    return out;
}

/// Integrals int log|s - t| B_i(t) g(t) dt, g = sqrt(1 + 4 t^2), for every B_i and
/// every s among the knots and knot midpoints. QI rules use exact moments; the
/// Telles and Gauss baselines spend the same number of points on the support.
inline SweepResult quadtest_inner(SweepOptions opt = {}) {
    if (opt.hs.empty()) opt.hs = {1.0 / 5, 1.0 / 10, 1.0 / 20, 1.0 / 40};
    auto g = [](double t) { return std::sqrt(1.0 + 4.0 * t * t); };
    auto dg = [](double t) { return 4.0 * t / std::sqrt(1.0 + 4.0 * t * t); };
    SweepResult out;
    for (double h : opt.hs) {
        const SplineSpace sp = detail::sweep_space(h, opt.degree);
        const int E = static_cast<int>(std::lround(2.0 / h));
        std::vector<double> svals;
        for (int k = 0; k <= 2 * E; ++k) svals.push_back(-1.0 + k * h / 2.0);
        svals.back() = 1.0;
        const int N = sp.dimension();
        std::vector<std::vector<double>> ref(N, std::vector<double>(svals.size()));
        for (int i = 0; i < N; ++i)
            for (std::size_t k = 0; k < svals.size(); ++k) {
                const double s = svals[k];
                ref[i][k] = detail::reference_support_integral(
                    sp, i, [&](double t) { return t == s ? 0.0 : g(t) * std::log(std::abs(s - t)); }, {s});
            }
        for (Procedure proc : {Procedure::qi1, Procedure::qi2})
            for (int n : opt.nodes) {
                const auto cfg = detail::sweep_config(proc, n, opt);
                double err = 0.0;
                for (int i = 0; i < N; ++i) {
                    const SupportRule rule(sp, i, cfg);
                    for (std::size_t k = 0; k < svals.size(); ++k)
                        err = std::max(err, std::abs(rule.integrate_singular(g, svals[k], DomainKind::open_arc, 2.0, dg) -
                                                     ref[i][k]));
                }
                out.rows.push_back({h, to_string(proc), n, err});
            }
        for (int n : opt.nodes) {
            double et = 0.0, eg = 0.0;
            for (int i = 0; i < N; ++i) {
                const auto [lo, hi] = sp.support(i);
                auto f = [&](double t) { return sp.eval_basis(i, t, 0) * g(t); };
                for (std::size_t k = 0; k < svals.size(); ++k) {
                    et = std::max(et, std::abs(telles_log_baseline(f, svals[k], lo, hi, n) - ref[i][k]));
                    eg = std::max(eg, std::abs(gauss_log_baseline(f, svals[k], lo, hi, n) - ref[i][k]));
                }
            }
            out.rows.push_back({h, "Telles", n, et});
            out.rows.push_back({h, "Gauss", n, eg});
        }
    }
    return out;
}

/// Exact inner integral I_j(s) = int log|s - t| B_j(t) dt (J = 1, g = 1).
inline double inner_integral(const SplineSpace& sp, int j, double s, double theta = 10.0) {
    return stable_moment({&sp, j, s, DomainKind::open_arc, sp.b() - sp.a()}, theta);
}

/// Outer integrals -1/(2 pi) int B_i(s) I_j(s) ds with exact inner integrals, max over i, j.
/// I_j has no bounded derivative at the ends of an open arc, so both QI rules
/// run derivative-free here whatever variant is requested.
inline SweepResult quadtest_outer(SweepOptions opt = {}) {
    if (opt.hs.empty()) opt.hs = {2.0 / 5, 1.0 / 5, 1.0 / 10, 1.0 / 20};
    opt.qi1_variant = opt.qi2_variant = QiVariant::derivative_free;
    SweepResult out;
    ReferenceOptions ro;
    ro.floor = 1e-10;
    const double c = -1.0 / (2.0 * std::numbers::pi);
    for (double h : opt.hs) {
        const SplineSpace sp = detail::sweep_space(h, opt.degree);
        const int N = sp.dimension();
        const auto breaks = sp.knot_vector().breaks();
        auto moments = [&](double s) { return modified_moments(sp, s, DomainKind::open_arc, sp.b() - sp.a()); };
        Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(N, N);
        for (int mu : sp.spans())
            detail::graded_nodes(sp.knot(mu), sp.knot(mu + 1), breaks, ro, [&](double s, double w) {
                const auto m = moments(s);
                const auto b = sp.span_basis(mu, s, 0);
                for (int r = 0; r <= opt.degree; ++r)
                    for (int j = 0; j < N; ++j) ref(mu - opt.degree + r, j) += c * w * b.ders(0, r) * m[j];
            });
        for (Procedure proc : {Procedure::qi1, Procedure::qi2})
            for (int n : opt.nodes) {
                const auto cfg = detail::sweep_config(proc, n, opt);
                double err = 0.0;
                for (int i = 0; i < N; ++i) {
                    const SupportRule rule(sp, i, cfg);
                    std::vector<std::vector<double>> m;
                    for (double s : rule.nodes()) m.push_back(moments(s));
                    for (int j = 0; j < N; ++j) {
                        std::size_t k = 0;
                        const double v = c * rule.integrate_regular([&](double) { return m[k++][j]; });
                        err = std::max(err, std::abs(v - ref(i, j)));
                    }
                }
                out.rows.push_back({h, to_string(proc), n, err});
            }
    }
    return out;
}

// ---------------------------------------------------------------- inner profile

struct ProfileCurve {
    double h = 0.0;
    int index = 0;  // zero-based B-spline index
    std::vector<double> s, value;
    double max_curvature = 0.0;
};

/// I_i(s) sampled over [-1, 1] for the central B-spline of each mesh. The
/// curvature |I''| / (1 + I'^2)^(3/2) uses centred differences on the samples.
inline std::vector<ProfileCurve> inner_profile(std::vector<double> hs = {}, std::vector<int> indices = {},
                                               int samples = 1601, int degree = 2) {
    if (hs.empty()) hs = {2.0 / 5, 1.0 / 5, 1.0 / 10, 1.0 / 20};
    if (indices.empty()) indices = {3, 6, 11, 21};
    if (indices.size() != hs.size()) throw std::invalid_argument("inner_profile: one index per mesh");
    if (samples < 3) throw std::invalid_argument("inner_profile: need at least 3 samples");
    std::vector<ProfileCurve> out;
    for (std::size_t m = 0; m < hs.size(); ++m) {
        const SplineSpace sp = detail::sweep_space(hs[m], degree);
        ProfileCurve c;
        c.h = hs[m];
        c.index = indices[m];
        if (c.index < 0 || c.index >= sp.dimension()) throw std::invalid_argument("inner_profile: index out of range");
        const double ds = 2.0 / (samples - 1);
        for (int k = 0; k < samples; ++k) {
            const double s = k + 1 == samples ? 1.0 : -1.0 + k * ds;
            c.s.push_back(s);
            c.value.push_back(inner_integral(sp, c.index, s));
        }
        for (int k = 1; k + 1 < samples; ++k) {
            const double d1 = (c.value[k + 1] - c.value[k - 1]) / (2 * ds);
            const double d2 = (c.value[k + 1] - 2 * c.value[k] + c.value[k - 1]) / (ds * ds);
            c.max_curvature = std::max(c.max_curvature, std::abs(d2) / std::pow(1 + d1 * d1, 1.5));
        }
        out.push_back(std::move(c));
    }
    return out;
}

inline CsvTable profile_table(const std::vector<ProfileCurve>& curves) {
    CsvTable t({"h", "index", "s", "value"});
    for (const auto& c : curves)
        for (std::size_t k = 0; k < c.s.size(); ++k) t.add({c.h, c.index, c.s[k], c.value[k]});
    return t;
}

inline CsvTable curvature_table(const std::vector<ProfileCurve>& curves) {
    CsvTable t({"h", "index", "max_curvature"});
    for (const auto& c : curves) t.add({c.h, c.index, c.max_curvature});
    return t;
}

// ---------------------------------------------------------------- consistency

struct BoundRow {
    int level = 0;
    int dof = 0;
    double h = 0.0;
    double error_A = 0.0;
    double error_beta = 0.0;
};

struct BoundCheck {
    std::vector<BoundRow> rows;
    double exponent_A = 0.0;
    double exponent_beta = 0.0;
    int degree = 0;
    // Exponents the error analysis asks for, with half an order of slack.
    bool matrix_ok() const { return exponent_A >= degree + 2.5; }
    bool rhs_ok() const { return exponent_beta >= degree + 1.5; }
};

/// Max entry errors of A and beta against the brute-force assembly, per level.
inline BoundCheck bound_check(const ProblemPreset& preset, const QuadratureConfig& cfg, int levels,
                              const ReferenceOptions& ref = {}) {
    if (levels < 2) throw std::invalid_argument("bound check needs at least 2 levels");
    BoundCheck out;
    std::vector<double> hs, ea, eb;
    for (int l = 0; l < levels; ++l) {
        const BoundaryProblem prob = preset.problem(l);
        const Eigen::MatrixXd A = assemble_matrix(prob, cfg);
        const Eigen::VectorXd b = assemble_rhs(prob, cfg);
        const Eigen::MatrixXd Ar = reference_matrix(prob, ref);
        const Eigen::VectorXd br = reference_rhs(prob, ref);
        BoundRow r{l, static_cast<int>(b.size()), max_element_length(prob.space), (A - Ar).cwiseAbs().maxCoeff(),
                   (b - br).cwiseAbs().maxCoeff()};
        out.rows.push_back(r);
        hs.push_back(r.h);
        ea.push_back(r.error_A);
        eb.push_back(r.error_beta);
        out.degree = prob.space.degree();
    }
    out.exponent_A = fit_slope(hs, ea);
    out.exponent_beta = fit_slope(hs, eb);
    return out;
}

inline CsvTable bound_table(const BoundCheck& b) {
    CsvTable t({"level", "dof", "h", "error_A", "order_A", "error_beta", "order_beta"});
    for (std::size_t k = 0; k < b.rows.size(); ++k) {
        const auto& r = b.rows[k];
        double oa = std::numeric_limits<double>::quiet_NaN(), ob = oa;
        if (k > 0) {
            const auto& p = b.rows[k - 1];
            oa = log_ratio(p.error_A, r.error_A) / std::log(p.h / r.h);
            ob = log_ratio(p.error_beta, r.error_beta) / std::log(p.h / r.h);
        }
        t.add({r.level, r.dof, r.h, r.error_A, oa, r.error_beta, ob});
    }
    return t;
}

} // namespace qibem
