// qibem: command line front end for the spline Galerkin BEM solver.
//
//   qibem solve         one refinement level; summary, coefficients, potential samples
//   qibem convergence   dyadic refinement study with error and order columns
//   qibem quadtest      quadrature accuracy sweeps on model integrals
//   qibem inner-profile inner log integrals of a central B-spline versus s
//   qibem bound-check   entry errors of A and beta against the brute-force assembly
//
// Exit status: 0 success, 1 usage or configuration error, 2 numerical failure.

#include "qibem/qibem.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace qibem;

struct Overrides {
    std::string config;
    std::optional<std::string> problem, procedure, variant, out, kind;
    std::optional<int> nodes, qi_degree, levels, level;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "JSON configuration file");
    cmd->add_option("--problem", o.problem, "preset name (overrides the config)");
    cmd->add_option("--procedure", o.procedure, "QI1 or QI2");
    cmd->add_option("--variant", o.variant, "hermite or derivative-free");
    cmd->add_option("--nodes", o.nodes, "quadrature nodes per support (n + 1)");
    cmd->add_option("--qi-degree", o.qi_degree, "degree p of the quasi-interpolant");
    cmd->add_option("--levels", o.levels, "number of refinement levels");
    cmd->add_option("--out", o.out, "output CSV path (default: standard output)");
}

RunConfig resolve(const Overrides& o) {
    nlohmann::json j = nlohmann::json::object();
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in) throw ConfigError("cannot open config file '" + o.config + "'");
        try {
            in >> j;
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError("config '" + o.config + "': " + e.what());
        }
    }
    if (o.problem) j["problem"] = *o.problem;
    if (o.procedure) j["quadrature"]["procedure"] = *o.procedure;
    if (o.variant) j["quadrature"]["variant"] = *o.variant;
    if (o.nodes) j["quadrature"]["nodes"] = *o.nodes;
    if (o.qi_degree) j["quadrature"]["p"] = *o.qi_degree;
    if (o.levels) j["levels"] = *o.levels;
    if (o.level) j["level"] = *o.level;
    if (o.out) j["output"] = *o.out;
    if (o.kind) j["quadtest"]["kind"] = *o.kind;
    RunConfig c = config_from_json(j);
    validate(c);
    return c;
}

// "dir/run.csv" + "coefficients" -> "dir/run_coefficients.csv"
std::string sibling(const std::string& out, const std::string& tag) {
    const std::filesystem::path p(out);
    return (p.parent_path() / (p.stem().string() + "_" + tag + p.extension().string())).string();
}

void emit(const CsvTable& t, const std::string& path) {
    if (path.empty()) {
        t.write(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + path + "'");
    t.write(f);
}

int run_solve(const RunConfig& c) {
    const BoundaryProblem prob = c.problem.problem(c.level);
    GalerkinSystem sys = assemble(prob, c.quadrature);
    solve(sys);
    if (sys.ill_conditioned) std::fprintf(stderr, "warning: ill-conditioned system (rcond %.3g)\n", sys.rcond);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    L2Error e{nan, nan, nan};
    if (prob.exact) e = l2_error(sys, prob);

    CsvTable summary({"problem", "formulation", "level", "dof", "procedure", "qi_degree", "nodes", "variant",
                      "error_abs", "error", "error_param", "residual", "rcond", "ill_conditioned"});
    const auto& q = c.quadrature;
    summary.add({c.problem.name, to_string(prob.formulation), c.level, sys.dof(), to_string(q.procedure), q.qi_degree,
                 q.nodes, to_string(q.variant), e.absolute, e.relative, e.parametric_relative, sys.residual, sys.rcond,
                 sys.ill_conditioned});
    emit(summary, c.output);
    if (c.output.empty()) return 0;

    CsvTable coef({"index", "coefficient"});
    for (int k = 0; k < sys.dof(); ++k) coef.add({k, sys.alpha(k)});
    emit(coef, sibling(c.output, "coefficients"));

    if (!c.potential_points.empty()) {
        CsvTable pot({"x1", "x2", "u", "exact", "abs_error"});
        for (const Point& x : c.potential_points) {
            const double u = evaluate_potential(sys, prob, x);
            const double ex = c.problem.exact_potential ? c.problem.exact_potential(x) : nan;
            pot.add({x.x(), x.y(), u, ex, std::abs(u - ex)});
        }
        emit(pot, sibling(c.output, "potential"));
    }
    return 0;
}

int run_convergence(const RunConfig& c) {
    if (!c.problem.exact) throw ConfigError("convergence needs a problem with a known exact solution");
    emit(convergence_table(qibem::run_convergence(c.problem, c.quadrature, c.levels)), c.output);
    return 0;
}

int run_quadtest(const RunConfig& c) {
    SweepOptions opt;
    opt.nodes = c.quadtest_nodes;
    opt.qi_degree = c.quadrature.qi_degree;
    std::vector<std::pair<std::string, SweepResult>> sweeps;
    const auto& k = c.quadtest_kind;
    if (k == "all" || k == "rhs-regular") sweeps.emplace_back("rhs-regular", quadtest_regular(opt));
    if (k == "all" || k == "inner-singular") sweeps.emplace_back("inner-singular", quadtest_inner(opt));
    if (k == "all" || k == "outer") sweeps.emplace_back("outer", quadtest_outer(opt));
    emit(sweep_table(sweeps), c.output);
    const CsvTable slopes = slope_table(sweeps);
    if (c.output.empty()) slopes.write(std::cerr);
    else emit(slopes, sibling(c.output, "slopes"));
    return 0;
}

int run_inner_profile(const RunConfig& c) {
    const auto curves = inner_profile({}, {}, c.profile_samples);
    emit(profile_table(curves), c.output);
    const CsvTable curv = curvature_table(curves);
    if (c.output.empty()) curv.write(std::cerr);
    else emit(curv, sibling(c.output, "curvature"));
    return 0;
}

int run_bound_check(const RunConfig& c) {
    const BoundCheck b = bound_check(c.problem, c.quadrature, c.levels);
    emit(bound_table(b), c.output);
    CsvTable ex({"degree", "exponent_A", "required_A", "matrix_ok", "exponent_beta", "required_beta", "rhs_ok"});
    ex.add({b.degree, b.exponent_A, b.degree + 2.5, b.matrix_ok(), b.exponent_beta, b.degree + 1.5, b.rhs_ok()});
    if (c.output.empty()) ex.write(std::cerr);
    else emit(ex, sibling(c.output, "exponents"));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spline Galerkin boundary element solver with quasi-interpolation quadrature"};
    app.require_subcommand(1);
    Overrides o;
    auto* solve = app.add_subcommand("solve", "solve one refinement level");
    auto* conv = app.add_subcommand("convergence", "dyadic refinement study");
    auto* quad = app.add_subcommand("quadtest", "quadrature accuracy sweeps");
    auto* prof = app.add_subcommand("inner-profile", "inner integral profiles");
    auto* bound = app.add_subcommand("bound-check", "entry errors against the brute-force assembly");
    for (auto* cmd : {solve, conv, quad, prof, bound}) add_common(cmd, o);
    solve->add_option("--level", o.level, "refinement level");
    quad->add_option("--kind", o.kind, "all, rhs-regular, inner-singular or outer");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        const RunConfig c = resolve(o);
        if (solve->parsed()) return run_solve(c);
        if (conv->parsed()) return run_convergence(c);
        if (quad->parsed()) return run_quadtest(c);
        if (prof->parsed()) return run_inner_profile(c);
        if (bound->parsed()) return run_bound_check(c);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const NumericalFailure& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 2;
    }
    return 1;
}
