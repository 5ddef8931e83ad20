#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "carroll/carroll.hpp"

using namespace carroll;

namespace {

const double kPi = std::numbers::pi;

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

GeodesicState equator_start(const Scenario& s, double Q) {
    NullShootSpec spec;
    spec.x0 = v2(kPi / 2, 0.0);
    spec.u = v2(0.0, 1.0);
    spec.Q = Q;
    return shoot_null(spec, s.g, s.A);
}

}  // namespace

// ---------------------------------------------------------------------------
// ODE layer.

TEST(Ode, ExponentialDecayRK45) {
    const ode::Rhs f = [](double, const Vec& y) { return Vec(-y); };
    Vec last;
    double xl = 0.0;
    ode::Config cfg;
    const auto out = ode::solve(f, Vec::Ones(1), 0.0, 3.0, cfg, [](const Vec& y) { return Vec::Ones(y.size()); },
                                [&](double x, Vec& y) {
                                    last = y;
                                    xl = x;
                                    return ode::Verdict::Continue;
                                });
    EXPECT_EQ(out.stop, ode::Stop::Completed);
    EXPECT_DOUBLE_EQ(xl, 3.0);
    EXPECT_NEAR(last(0), std::exp(-3.0), 1e-10);
}

TEST(Ode, RK4IsFourthOrder) {
    // Harmonic oscillator, endpoint error at x = 2 for h and h/2.
    const ode::Rhs f = [](double, const Vec& y) { return (Vec(2) << y(1), -y(0)).finished(); };
    auto error = [&](double h) {
        ode::Config cfg;
        cfg.method = ode::Method::RK4;
        cfg.h_fixed = h;
        Vec last;
        ode::solve(f, (Vec(2) << 1.0, 0.0).finished(), 0.0, 2.0, cfg,
                   [](const Vec& y) { return Vec::Ones(y.size()); }, [&](double, Vec& y) {
                       last = y;
                       return ode::Verdict::Continue;
                   });
        return std::abs(last(0) - std::cos(2.0));
    };
    const double ratio = error(0.1) / error(0.05);
    EXPECT_GT(ratio, 14.0);
    EXPECT_LT(ratio, 18.0);
}

TEST(Ode, ObserverStops) {
    const ode::Rhs f = [](double, const Vec&) { return Vec::Ones(1); };
    const auto out = ode::solve(f, Vec::Zero(1), 0.0, 10.0, ode::Config{},
                                [](const Vec& y) { return Vec::Ones(y.size()); },
                                [](double x, Vec&) { return x > 1.0 ? ode::Verdict::Stop : ode::Verdict::Continue; });
    EXPECT_EQ(out.stop, ode::Stop::Observer);
    EXPECT_LT(out.lambda, 10.0);
    EXPECT_THROW(ode::solve(f, Vec::Zero(1), 1.0, 1.0, ode::Config{}, [](const Vec& y) { return Vec::Ones(y.size()); },
                            [](double, Vec&) { return ode::Verdict::Continue; }),
                 ContractViolation);
}

TEST(Ode, HermiteQuadratureExactForCubics) {
    std::vector<double> l, f, fp;
    for (int k = 0; k <= 7; ++k) {
        const double x = 0.3 * k;
        l.push_back(x);
        f.push_back(x * x * x - x);
        fp.push_back(3 * x * x - 1);
    }
    const auto c = hermite_cumulative(l, f, fp);
    const double x = l.back();
    EXPECT_NEAR(c.back(), x * x * x * x / 4 - x * x / 2, 1e-13);
}

// ---------------------------------------------------------------------------
// Charge and null shooting.

TEST(Charge, Definition) {
    GeodesicState s;
    s.x = v2(0.0, 0.0);
    s.t = 2.0;
    s.vx = v2(1.0, 2.0);
    s.vt = -1.0;
    const GaugeField A = GaugeField::constant(v2(0.25, -0.5));
    EXPECT_DOUBLE_EQ(carroll_charge(s, A), -(-0.5 + 0.25 - 1.0));
    const Scenario flat = make_flat({{"n", "2"}});
    EXPECT_DOUBLE_EQ(null_residual(s, flat.g, A), 5.0 - 1.25 * 1.25);
    s.t = 0.0;
    EXPECT_THROW(carroll_charge(s, A), DomainError);
}

TEST(NullShoot, ProducesNullStateWithCharge) {
    const Scenario s = make_schwarzschild({{"gauge", "monopole"}, {"b", "0.4"}});
    for (double Q : {-1.3, -0.2, 0.5, 2.0}) {
        NullShootSpec spec;
        spec.x0 = v2(1.0, 0.3);
        spec.u = v2(0.6, 0.8 / std::sin(1.0));
        spec.Q = Q;
        spec.t0 = -1.7;
        const auto st = shoot_null(spec, s.g, s.A);
        EXPECT_NEAR(carroll_charge(st, s.A), Q, 1e-14);
        EXPECT_NEAR(null_residual(st, s.g, s.A), 0.0, 1e-14);
        // |t| grows exactly when Q < 0: d ln|t|/dlambda = -(Q + v.A), here with v.A folded in.
        EXPECT_NEAR(st.vt / st.t + st.vx.dot(s.A.at(st.x)), -Q, 1e-14);
    }
}

TEST(NullShoot, Contracts) {
    const Scenario s = make_schwarzschild({});
    NullShootSpec spec;
    spec.x0 = v2(1.0, 0.3);
    spec.u = v2(2.0, 0.0);
    spec.Q = 1.0;
    EXPECT_THROW(shoot_null(spec, s.g, s.A), ContractViolation);  // not unit
    spec.u = v2(1.0, 0.0);
    spec.delta = 1;
    EXPECT_THROW(shoot_null(spec, s.g, s.A), ContractViolation);  // Q > 0 decays
    spec.delta = -1;
    EXPECT_NO_THROW(shoot_null(spec, s.g, s.A));
    spec.eps = 0;
    EXPECT_THROW(shoot_null(spec, s.g, s.A), ContractViolation);
    spec.eps = 1;
    spec.t0 = 0.0;
    EXPECT_THROW(shoot_null(spec, s.g, s.A), DomainError);
}

// ---------------------------------------------------------------------------
// Integration.

TEST(Geodesic, EquatorialOrbit) {
    // phi = lambda and t = exp(-lambda) for Q = 1 along the equator.
    const Scenario s = make_schwarzschild({});
    IntegratorConfig cfg;
    cfg.lambda_max = 4.0;
    const auto tr = s.flow().integrate(equator_start(s, 1.0), cfg);
    EXPECT_EQ(tr.event, GeodesicEvent::None);
    EXPECT_DOUBLE_EQ(tr.back().lambda, 4.0);
    for (const auto& x : tr.samples) {
        EXPECT_NEAR(x.x(0), kPi / 2, 1e-12);
        EXPECT_NEAR(x.x(1), x.lambda, 1e-9);
        EXPECT_NEAR(x.t, std::exp(-x.lambda), 1e-9);
    }
    EXPECT_LT(tr.max_charge_drift(), 1e-9);
    EXPECT_LT(tr.max_null_drift(), 1e-9);
}

TEST(Geodesic, ClosedFormSourceAgrees) {
    const Scenario s = make_schwarzschild({});
    IntegratorConfig a, b;
    a.lambda_max = b.lambda_max = 2.0;
    b.source = ChristoffelSource::ClosedForm;
    NullShootSpec spec;
    spec.x0 = v2(1.0, 0.2);
    spec.u = v2(0.8, 0.6 / std::sin(1.0));
    spec.Q = -0.5;
    const auto s0 = shoot_null(spec, s.g, s.A);
    const auto ta = s.flow().integrate(s0, a), tb = s.flow().integrate(s0, b);
    EXPECT_LT((ta.back().packed() - tb.back().packed()).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(Geodesic, FrozenPhotonStaysPut) {
    const Scenario s = make_lightcone({});
    IntegratorConfig cfg;
    cfg.lambda_max = 3.0;
    const auto s0 = equator_start(s, 0.0);
    EXPECT_EQ(s0.vx.norm(), 0.0);
    EXPECT_EQ(s0.vt, 0.0);
    const auto tr = s.flow().integrate(s0, cfg);
    for (const auto& x : tr.samples) EXPECT_EQ((x.packed() - s0.packed()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Geodesic, TemporalLawWithTrivialConnection) {
    const Scenario s = make_flat({{"n", "3"}});
    GeodesicState s0;
    s0.x = Vec::Zero(3);
    s0.t = 1.5;
    s0.vx = (Vec(3) << 0.6, 0.0, 0.8).finished();
    s0.vt = -s0.t * 0.7;  // Q = 0.7, not null
    IntegratorConfig cfg;
    cfg.lambda_max = 3.0;
    const auto tr = s.flow().integrate(s0, cfg);
    for (const auto& x : tr.samples) {
        EXPECT_NEAR(x.t, 1.5 * std::exp(-0.7 * x.lambda), 1e-8);
        EXPECT_NEAR((x.x - x.lambda * s0.vx).norm(), 0.0, 1e-8);
    }
}

TEST(Geodesic, FormalTemporalSolutionWithGauge) {
    const Scenario s = make_flat({{"n", "2"}, {"gauge", "magnetic"}, {"B", "0.9"}});
    NullShootSpec spec;
    spec.x0 = v2(0.3, -0.1);
    spec.u = v2(0.6, 0.8);
    spec.Q = 0.6;
    const auto s0 = shoot_null(spec, s.g, s.A);
    IntegratorConfig cfg;
    cfg.lambda_max = 3.0;
    const GeodesicFlow flow = s.flow();
    const auto tr = flow.integrate(s0, cfg);
    const auto t = formal_temporal_solution(flow, tr, spec.Q, s0.t, -1);
    for (std::size_t k = 0; k < t.size(); ++k) EXPECT_NEAR(t[k], tr.samples[k].t, 1e-6 * std::abs(t[k]));
}

TEST(Geodesic, TemporalEquationHolds) {
    const Scenario s = make_flat({{"n", "2"}, {"gauge", "shear"}});
    GeodesicState st;
    st.x = v2(0.4, 0.2);
    st.t = 1.3;
    st.vx = v2(0.3, -0.7);
    st.vt = 0.4;
    EXPECT_LT(s.flow().temporal_consistency(st), 1e-6);
}

TEST(Geodesic, TranscribedEquationsWithoutGauge) {
    const Scenario s = make_schwarzschild({});
    GeodesicState st;
    st.x = v2(1.1, 0.4);
    st.t = 0.8;
    st.vx = v2(0.3, -0.7);
    st.vt = 0.5;
    const GeodesicFlow flow = s.flow();
    EXPECT_LT((flow.transcribed_acceleration(st) - flow.acceleration(st)).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(Geodesic, FiberGuardStops) {
    const Scenario s = make_schwarzschild({});
    IntegratorConfig cfg;
    cfg.lambda_max = 20.0;
    const auto tr = s.flow().integrate(equator_start(s, 1.0), cfg);
    EXPECT_EQ(tr.event, GeodesicEvent::TGuard);
    EXPECT_LT(std::abs(tr.back().t), 1e-6 * 1.01);
}

TEST(Geodesic, ChartExit) {
    auto atlas = std::make_shared<Atlas>();
    atlas->add_chart({0, "disk", 2, [](const Vec& x) { return x.norm() < 1.0; }});
    const Scenario flat = make_flat({{"n", "2"}});
    const GeodesicFlow flow(flat.kk(-1), atlas);
    GeodesicState s0;
    s0.x = v2(0.0, 0.0);
    s0.vx = v2(1.0, 0.0);
    s0.vt = 0.0;
    IntegratorConfig cfg;
    cfg.lambda_max = 5.0;
    const auto tr = flow.integrate(s0, cfg);
    EXPECT_EQ(tr.event, GeodesicEvent::ChartExit);
    EXPECT_LT(tr.back().lambda, 1.01);
    EXPECT_THROW(GeodesicFlow(flat.kk(+1)), ContractViolation);
}

TEST(Geodesic, CrossesPoleThroughCharts) {
    // A meridian through the north pole: leaves the angular chart and comes back.
    const Scenario s = make_schwarzschild({{"gauge", "monopole"}, {"b", "0.2"}});
    NullShootSpec spec;
    spec.x0 = v2(1.0, 0.5);
    spec.u = v2(-1.0, 0.0);
    spec.Q = -0.5;
    IntegratorConfig cfg;
    cfg.lambda_max = 10.0;
    const auto tr = s.flow().integrate(shoot_null(spec, s.g, s.A), cfg);
    EXPECT_EQ(tr.event, GeodesicEvent::None);
    std::set<int> charts;
    for (const auto& x : tr.samples) charts.insert(x.chart);
    EXPECT_GE(charts.size(), 2u);
    EXPECT_LT(tr.max_charge_drift(), 1e-8);
    EXPECT_LT(tr.max_null_drift(), 1e-8);
}

TEST(Geodesic, BatchMatchesSerial) {
    const Scenario s = make_schwarzschild({});
    std::vector<GeodesicState> starts;
    for (double Q : {0.3, -0.4, 0.8}) starts.push_back(equator_start(s, Q));
    IntegratorConfig cfg;
    cfg.lambda_max = 2.0;
    const auto batch = integrate_batch(s.flow(), starts, cfg, 3);
    for (std::size_t k = 0; k < starts.size(); ++k) {
        const auto one = s.flow().integrate(starts[k], cfg);
        ASSERT_EQ(one.size(), batch[k].size());
        EXPECT_TRUE(one.back().packed() == batch[k].back().packed());
    }
}

TEST(Geodesic, LogTime) {
    const Scenario s = make_schwarzschild({});
    IntegratorConfig cfg;
    cfg.lambda_max = 2.0;
    const auto lt = log_time(s.flow().integrate(equator_start(s, 1.0), cfg));
    for (std::size_t k = 0; k < lt.u.size(); ++k) EXPECT_NEAR(lt.u[k], -lt.lambda[k], 1e-9);
    const auto frozen = s.flow().integrate(equator_start(s, 0.0), cfg);
    if (frozen.size() > 1) {
        EXPECT_THROW(log_time(frozen), ContractViolation);
    }
}

// ---------------------------------------------------------------------------
// Small-A reduction.

TEST(SmallA, UniformFieldGivesUnitCircles) {
    const Scenario s = make_flat({{"n", "2"}, {"gauge", "magnetic"}, {"B", "1"}});
    for (int sign : {+1, -1}) {
        SmallAProblem prob{s.g, s.A, s.base_christoffel, 1.0, 0};
        const auto bt = integrate_small_A(prob, v2(0, 0), v2(1, 0), sign, 2 * kPi);
        const Vec center = v2(0.0, -sign);
        for (const auto& x : bt.x) EXPECT_NEAR((x - center).norm(), 1.0, 1e-7);
        EXPECT_LT(bt.x.back().norm(), 1e-7);
    }
    SmallAProblem prob{s.g, s.A, s.base_christoffel, 1.0, 0};
    EXPECT_THROW(integrate_small_A(prob, v2(0, 0), v2(1, 0), 0, 1.0), ContractViolation);
}

TEST(SmallA, RadiusScalesInverselyWithField) {
    const Scenario s = make_flat({{"n", "2"}, {"gauge", "magnetic"}, {"B", "2"}});
    SmallAProblem prob{s.g, s.A, nullptr, 1.0, 0};
    const auto bt = integrate_small_A(prob, v2(0, 0), v2(1, 0), 1, kPi);
    const Vec center = v2(0.0, -0.5);
    for (const auto& x : bt.x) EXPECT_NEAR((x - center).norm(), 0.5, 1e-6);
}
