#include "qibem/config.hpp"
#include "qibem/harness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace qibem;

TEST(Csv, FullPrecisionAndEmptyNaN) {
    CsvTable t({"a", "b", "c"});
    t.add({0.1, std::numeric_limits<double>::quiet_NaN(), 3});
    std::ostringstream os;
    t.write(os);
    const std::string s = os.str();
    EXPECT_EQ(s, "a,b,c\n0.10000000000000001,,3\n");
    EXPECT_EQ(std::stod("0.10000000000000001"), 0.1);
    EXPECT_EQ(s.find('\r'), std::string::npos);
    EXPECT_THROW(t.add({1.0}), std::logic_error);
}

TEST(Slope, ExactPowerLaw) {
    std::vector<double> h{0.4, 0.2, 0.1, 0.05}, e;
    for (double x : h) e.push_back(3.0 * std::pow(x, 4.5));
    EXPECT_NEAR(fit_slope(h, e), 4.5, 1e-12);
    EXPECT_TRUE(std::isnan(fit_slope({0.1}, {1.0})));
}

TEST(Convergence, OrdersMatchEmittedErrors) {
    QuadratureConfig cfg;
    cfg.nodes = 5;
    const auto rows = run_convergence(circle_preset(), cfg, 3);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_TRUE(std::isnan(rows[0].order_log2));
    for (std::size_t k = 1; k < rows.size(); ++k) {
        EXPECT_DOUBLE_EQ(rows[k].order_log2, std::log2(rows[k - 1].error / rows[k].error));
        EXPECT_DOUBLE_EQ(rows[k].order_dof, std::log(rows[k - 1].error / rows[k].error) /
                                                std::log(double(rows[k].dof) / rows[k - 1].dof));
        EXPECT_EQ(rows[k].dof, 2 * rows[k - 1].dof);
    }
    // Parallel and serial runs agree bit for bit.
    const auto serial = run_convergence(circle_preset(), cfg, 3, false);
    for (std::size_t k = 0; k < rows.size(); ++k) EXPECT_EQ(rows[k].error, serial[k].error);
}

TEST(InnerProfile, SymmetricAndSharpening) {
    const auto curves = inner_profile({}, {}, 401);
    ASSERT_EQ(curves.size(), 4u);
    for (const auto& c : curves) {
        // The central B-spline of an even mesh is not centred; mirror through its own support instead.
        const SplineSpace sp = SplineSpace(KnotVector::open_uniform(-1, 1, 2, static_cast<int>(std::lround(2 / c.h))));
        const auto [lo, hi] = sp.support(c.index);
        const double m = 0.5 * (lo + hi);
        const double v1 = inner_integral(sp, c.index, m + 0.3), v2 = inner_integral(sp, c.index, m - 0.3);
        EXPECT_NEAR(v1, v2, 1e-13);
    }
    for (std::size_t k = 1; k < curves.size(); ++k) EXPECT_GT(curves[k].max_curvature, curves[k - 1].max_curvature);
}

TEST(InnerProfile, RejectsBadArguments) {
    EXPECT_THROW(inner_profile({0.2}, {0, 1}), std::invalid_argument);
    EXPECT_THROW(inner_profile({0.2}, {500}), std::invalid_argument);
}

TEST(Sweeps, CoarseRegularSlopes) {
    SweepOptions opt;
    opt.hs = {0.2, 0.1};
    opt.nodes = {7};
    const SweepResult s = quadtest_regular(opt);
    EXPECT_EQ(s.rows.size(), 4u);
    EXPECT_GT(s.slope("QI2", 7), 4.5);
    EXPECT_LT(s.errors("QI2", 7)[1], s.errors("QI1", 7)[1]);
}

TEST(Config, PresetAndQuadrature) {
    const auto j = nlohmann::json::parse(R"({
        "problem": "parabola",
        "quadrature": {"procedure": "qi1", "p": 3, "nodes": 25, "variant": "hermite", "near_radius": null},
        "levels": 3, "output": "x.csv", "potential_points": [[0.1, 0.2]]})");
    const RunConfig c = config_from_json(j);
    EXPECT_EQ(c.problem.name, "parabola");
    EXPECT_EQ(c.quadrature.procedure, Procedure::qi1);
    EXPECT_EQ(c.quadrature.variant, QiVariant::hermite);
    EXPECT_EQ(c.quadrature.nodes, 25);
    EXPECT_TRUE(std::isinf(c.quadrature.near_radius));
    EXPECT_EQ(c.levels, 3);
    ASSERT_EQ(c.potential_points.size(), 1u);
    EXPECT_NO_THROW(validate(c));
}

TEST(Config, Rejections) {
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"problem": "torus"})")), ConfigError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"levelz": 3})")), ConfigError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"quadrature": {"procedure": "QI3"}})")), ConfigError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"levels": "six"})")), ConfigError);
    RunConfig c = config_from_json(nlohmann::json::parse(R"({"quadrature": {"p": 3, "nodes": 3}})"));
    EXPECT_THROW(validate(c), ConfigError);
}

TEST(Config, CustomClosedProblemSolves) {
    const auto j = nlohmann::json::parse(R"({"problem": {
        "geometry": {"degree": 2, "kind": "periodic",
                     "knots": [-2, -1.5, -1, -0.5, 0, 0.5, 1, 1.5, 2],
                     "control_points": [[1, 1], [-1, 1], [-1, -1], [1, -1], [1, 1], [-1, 1]]},
        "datum": {"linear": [0.5, 1.0, -2.0]}, "mesh": {"degree": 2, "elements": 16}}})");
    const RunConfig c = config_from_json(j);
    const BoundaryProblem prob = c.problem.problem(0);
    EXPECT_EQ(prob.formulation, Formulation::interior_direct);
    GalerkinSystem sys = assemble(prob, c.quadrature);
    solve(sys);
    EXPECT_LT(l2_error(sys, prob).relative, 0.02);
    EXPECT_NEAR(evaluate_potential(sys, prob, Point(0, 0)), 0.5, 1e-4);
}

TEST(Config, CustomFormulationMismatch) {
    const auto j = nlohmann::json::parse(R"({"problem": {
        "geometry": {"degree": 1, "kind": "open", "knots": [0, 0, 1, 1], "control_points": [[0, 0], [1, 0]]},
        "datum": {"linear": [1, 0, 0]}, "mesh": {"degree": 1, "elements": 4},
        "formulation": "interior-direct"}})");
    EXPECT_THROW(config_from_json(j), ConfigError);
}

// ---------------------------------------------------------------- executable

namespace {

int run_cli(const std::string& args) {
    const int status = std::system((std::string(QIBEM_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

TEST(Cli, ExitCodesAndFiles) {
    const auto dir = std::filesystem::temp_directory_path() / "qibem_cli_test";
    std::filesystem::create_directories(dir);
    const auto out = dir / "circle.csv";
    EXPECT_EQ(run_cli("solve --problem circle --nodes 5 --out " + out.string()), 0);
    const std::string summary = slurp(out);
    EXPECT_EQ(summary.rfind("problem,formulation,level,dof,", 0), 0u);
    EXPECT_NE(summary.find("\ncircle,interior-direct,0,6,QI2,2,5,"), std::string::npos);
    EXPECT_EQ(summary.find('\r'), std::string::npos);
    EXPECT_TRUE(std::filesystem::exists(dir / "circle_coefficients.csv"));

    EXPECT_EQ(run_cli(""), 1);
    EXPECT_EQ(run_cli("solve --problem torus"), 1);
    EXPECT_EQ(run_cli("solve --config /nonexistent.json"), 1);
    EXPECT_EQ(run_cli("convergence --problem circle --levels 0"), 1);
    EXPECT_EQ(run_cli("quadtest --kind sideways"), 1);

    // A potential point on the boundary cannot be evaluated reliably.
    const auto cfg = dir / "bad_point.json";
    std::ofstream(cfg) << R"({"problem": "circle", "quadrature": {"nodes": 5}, "potential_points": [[0.5, 0.0]]})";
    EXPECT_EQ(run_cli("solve --config " + cfg.string() + " --out " + (dir / "p.csv").string()), 2);
    std::filesystem::remove_all(dir);
}
