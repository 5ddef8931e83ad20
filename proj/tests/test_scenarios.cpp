#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "carroll/carroll.hpp"

using namespace carroll;

namespace {

const double kPi = std::numbers::pi;
const std::string kData = CARROLL_DATA_DIR;

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

const CheckResult* find_check(const CheckReport& r, const std::string& name) {
    for (const auto& c : r.checks)
        if (c.name == name) return &c;
    return nullptr;
}

Scenario parse_text(const std::string& text) { return parse_scenario(ini::parse(text), kData); }

}  // namespace

TEST(Catalog, EveryScenarioPassesItsChecks) {
    for (const auto& name : catalog_names()) {
        const Scenario s = load_scenario(name);
        EXPECT_TRUE(s.warnings.empty()) << name;
        EXPECT_FALSE(catalog_summary(name).empty());
        CheckConfig cfg;
        cfg.samples = 8;
        const auto rep = run_checks(s, cfg);
        for (const auto& c : rep.checks) EXPECT_FALSE(c.failed()) << name << ": " << c.name << " = " << c.value;
    }
}

TEST(Catalog, EulerClassification) {
    CheckConfig cfg;
    cfg.samples = 6;
    EXPECT_EQ(run_checks(make_schwarzschild({}), cfg).euler_kind, "killing");
    EXPECT_EQ(run_checks(make_lightcone({}), cfg).euler_kind, "homogeneous");
    EXPECT_EQ(run_checks(make_thakurta({}), cfg).euler_kind, "conformal");
}

TEST(Catalog, Parameters) {
    const Scenario s = make_schwarzschild({{"GM", "1"}});
    const Point p(v2(kPi / 2, 0.3), 1.0);
    EXPECT_NEAR(s.g.base(p)(1, 1), 4.0, 1e-15);
    const Scenario r = make_sphere_pullback({{"R", "3"}, {"n", "1"}});
    EXPECT_EQ(r.dim, 1);
    EXPECT_DOUBLE_EQ(r.g.base(Point(Vec::Zero(1), 1.0))(0, 0), 9.0);
    const Scenario q = make_sphere_pullback({{"R", "2"}});
    EXPECT_NEAR(q.g.base(Point(v2(kPi / 6, 0.0), 1.0))(1, 1), 4.0 * 0.25, 1e-14);
    const Scenario th = make_thakurta({{"U", "2*t"}, {"GM", "0.5"}});
    EXPECT_NEAR(th.g.base(Point(v2(kPi / 2, 0.0), 0.5))(0, 0), std::exp(-1.0), 1e-15);
    EXPECT_EQ(make_flat({{"n", "4"}}).dim, 4);
}

TEST(Catalog, BadParameters) {
    EXPECT_THROW(load_scenario("nowhere"), ContractViolation);
    EXPECT_THROW(make_flat({{"n", "0"}}), ContractViolation);
    EXPECT_THROW(make_flat({{"gauge", "twisted"}}), ContractViolation);
    EXPECT_THROW(make_schwarzschild({{"gauge", "twisted"}}), ContractViolation);
    EXPECT_THROW(make_sphere_pullback({{"n", "3"}}), ContractViolation);
    EXPECT_THROW(make_schwarzschild({{"GM", "1 +"}}), ParseError);
}

TEST(Catalog, FlatGauges) {
    const Vec x = v2(0.4, -0.3);
    EXPECT_NEAR(make_flat({{"gauge", "shear"}}).A.at(x)(0), -0.3, 1e-15);
    EXPECT_NEAR(make_flat({{"gauge", "quadratic"}}).A.at(x)(0), 0.16, 1e-15);
    EXPECT_NEAR(curvature_numeric(make_flat({{"gauge", "shear"}}).A, x)(0, 1), -1.0, 1e-8);
    EXPECT_NEAR(curvature_numeric(make_flat({{"gauge", "magnetic"}, {"B", "3"}}).A, x)(0, 1), 3.0, 1e-8);
}

TEST(SphereCharts, AnalyticJacobiansMatchDifferences) {
    const auto atlas = sphere::atlas();
    const std::vector<std::pair<int, Vec>> points = {{0, v2(1.0, 0.4)}, {0, v2(2.5, -2.0)}, {1, v2(0.3, -0.8)},
                                                     {2, v2(-1.2, 0.5)}};
    for (const auto& [from, x] : points)
        for (int to = 0; to < 3; ++to) {
            if (to == from) continue;
            const auto& tr = atlas->transition(from, to);
            EXPECT_LT((tr.jacobian(x) - jacobian(tr.base, x)).cwiseAbs().maxCoeff(), 1e-7) << from << "->" << to;
        }
}

TEST(SphereCharts, MonopoleGaugeAgreesOnOverlaps) {
    const Scenario s = make_schwarzschild({{"gauge", "monopole"}, {"b", "0.7"}});
    const auto pts = s.sample_points(30, 12);
    for (int to : {1, 2}) EXPECT_LT(gauge_overlap_defect(*s.atlas, s.A, pts, to), 1e-8);
    // The flux density is regular through the north pole in the projection from the south.
    const Mat f = curvature(s.A, v2(0.0, 0.0), 2);
    EXPECT_NEAR(f(0, 1), 4.0 * 0.7, 1e-8);
}

// ---------------------------------------------------------------------------
// Scenario files.

TEST(ScenarioFile, WarpedPlane) {
    const Scenario s = load_scenario(kData + "/warped_plane.scn");
    EXPECT_EQ(s.name, "warped_plane");
    EXPECT_TRUE(s.g.time_dependent);
    EXPECT_TRUE(s.warnings.empty());
    const Point p(v2(0.5, -0.2), 2.0);
    EXPECT_NEAR(s.g.base(p)(0, 0), 4.0 * 1.125, 1e-14);
    EXPECT_NEAR(s.g.base(p)(0, 1), 0.1 * 4.0 * 0.5 * -0.2, 1e-15);
    EXPECT_NEAR(s.A.at(p.x)(1), 0.25, 1e-15);
    CheckConfig cfg;
    cfg.samples = 8;
    const auto rep = run_checks(s, cfg);
    EXPECT_TRUE(rep.passed());
    EXPECT_EQ(rep.euler_kind, "homogeneous");
    const Scenario o = load_scenario(kData + "/warped_plane.scn", {{"a", "0"}});
    EXPECT_NEAR(o.g.base(p)(0, 0), 4.0, 1e-14);
}

TEST(ScenarioFile, TiltedGrid) {
    const Scenario s = load_scenario(kData + "/tilted_grid.scn");
    EXPECT_FALSE(s.g.time_dependent);
    const Mat node = s.g.base(Point(v2(-1.0, -0.5), 1.0));
    EXPECT_DOUBLE_EQ(node(0, 0), 1.5);
    EXPECT_DOUBLE_EQ(node(0, 1), -0.1);
    EXPECT_DOUBLE_EQ(node(1, 1), 1.625);
    CheckConfig cfg;
    cfg.samples = 8;
    EXPECT_TRUE(run_checks(s, cfg).passed());
}

TEST(ScenarioFile, AsymmetricMetricIsReported) {
    const Scenario s = load_scenario(kData + "/asymmetric.scn");
    EXPECT_FALSE(s.warnings.empty());
    const auto rep = run_checks(s);
    EXPECT_FALSE(rep.passed());
    const auto* c = find_check(rep, "base_block_symmetry");
    ASSERT_NE(c, nullptr);
    EXPECT_TRUE(c->failed());
    EXPECT_NEAR(c->value, 0.2, 1e-15);
}

TEST(ScenarioFile, FalseExpectationsAreCaught) {
    const Scenario s = parse_text(
        "[meta]\ndim = 1\nvars = x\n[metric]\ng11 = t^2\n[expects]\neuler_killing = true\nweight = 3\n");
    EXPECT_EQ(s.warnings.size(), 2u);
    EXPECT_FALSE(run_checks(s).passed());
}

TEST(ScenarioFile, ParseErrors) {
    EXPECT_THROW(parse_text("[meta]\nvars = x\n[metric]\ng11 = 1\n"), ParseError);
    EXPECT_THROW(parse_text("[meta]\ndim = 2\nvars = x\n[metric]\ng11 = 1\n"), ParseError);
    EXPECT_THROW(parse_text("[meta]\ndim = 2\nvars = x, y\n[metric]\ng11 = 1\n"), ParseError);
    EXPECT_THROW(parse_text("[meta]\ndim = 1\nvars = x\n[metric]\ng11 = 1\n[gauge]\nA1 = t\n"), ParseError);
    EXPECT_THROW(parse_text("[meta]\ndim = 1\nvars = x\n[metric]\ng11 = z\n"), ParseError);
    EXPECT_THROW(parse_text("[meta]\ndim = 1\nvars = x\n[metric]\ngrid = missing.csv\n"), ParseError);
    EXPECT_THROW(parse_text("[meta]\ndim = 1\nvars = x\n"), ParseError);
}

TEST(ScenarioFile, ChartDomainBoundsGeodesics) {
    const Scenario s = parse_text("[meta]\ndim = 1\nvars = x\n[charts]\nx = -1, 1\n[metric]\ng11 = 1\n");
    GeodesicState s0;
    s0.x = Vec::Zero(1);
    s0.vx = Vec::Constant(1, 1.0);
    s0.vt = 0.0;
    IntegratorConfig cfg;
    cfg.lambda_max = 3.0;
    const auto tr = s.flow().integrate(s0, cfg);
    EXPECT_EQ(tr.event, GeodesicEvent::ChartExit);
}

// ---------------------------------------------------------------------------
// Reports and output formats.

TEST(Report, Json) {
    CheckConfig cfg;
    cfg.samples = 4;
    const auto rep = run_checks(make_flat({}), cfg);
    const auto j = to_json(rep);
    EXPECT_EQ(j["scenario"], "flat");
    EXPECT_EQ(j["passed"], true);
    EXPECT_EQ(j["failures"], 0);
    EXPECT_EQ(j["checks"].size(), rep.checks.size());
    EXPECT_EQ(j["checks"][0]["status"], "pass");
    EXPECT_TRUE(j["euler"].contains("kind"));
}

TEST(Report, CheckBelow) {
    EXPECT_FALSE(check_below("x", 1.0, 2.0).failed());
    EXPECT_TRUE(check_below("x", 3.0, 2.0).failed());
    EXPECT_TRUE(check_below("x", std::nan(""), 2.0).failed());
    EXPECT_FALSE(info("x", 1e9).failed());
}

TEST(Output, NumbersRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) EXPECT_EQ(std::stod(fmt(v)), v);
}

TEST(Output, TrajectoryCsv) {
    const Scenario s = make_schwarzschild({});
    NullShootSpec spec;
    spec.x0 = v2(kPi / 2, 0.0);
    spec.u = v2(0.0, 1.0);
    spec.Q = 1.0;
    IntegratorConfig cfg;
    cfg.lambda_max = 1.0;
    const auto tr = s.flow().integrate(shoot_null(spec, s.g, s.A), cfg);
    const std::string csv = trajectory_csv(tr, s.coords);
    std::istringstream in(csv);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "lambda,chart,th,ph,t,v_th,v_ph,vt,Q,null_residual,base_speed2");
    std::size_t rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    EXPECT_EQ(rows, tr.size());
    const auto j = trajectory_json(tr);
    EXPECT_FALSE(j.dump().empty());
    const std::string svg = trajectory_svg(tr, s.coords);
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
}

TEST(Output, ChristoffelTable) {
    const Scenario s = make_schwarzschild({});
    const auto rows = christoffel_rows(s.kk(+1), {Point(v2(kPi / 2, 0.0), 1.0)}, s.base_christoffel);
    EXPECT_EQ(rows.size(), 3u * 6u);
    for (const auto& r : rows) EXPECT_LT(std::abs(r.closed - r.numeric), 1e-6);
    const std::string csv = christoffel_csv(rows, s.coords);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "th,ph,t,A_th,A_ph,upper,lower1,lower2,closed,numeric,deviation");
    EXPECT_EQ(christoffel_json(rows, s.coords).size(), rows.size());
}

TEST(Output, CocycleTable) {
    const auto lc = linearize(shift_transitions(builtin_atlas("moebius")));
    const std::string csv = cocycle_csv(lc);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "to,from,m,c");
    const auto j = cocycle_json(lc);
    EXPECT_EQ(j["table"].size(), lc.table.size());
    EXPECT_EQ(j["origin_defect"], 0.0);
}
