#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "carroll/carroll.hpp"

using namespace carroll;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

DegenerateMetric skew_plane() {
    DegenerateMetric g;
    g.gM = [](const Point& p) {
        Mat m(2, 2);
        m << 2.0 + std::sin(p.x(0)), 0.4, 0.4, 1.5 + p.x(1) * p.x(1);
        return m;
    };
    return g;
}

}  // namespace

TEST(KKMetric, AdaptedBlocks) {
    const GaugeField A = GaugeField::constant(v2(0.3, -0.2));
    const Point p(v2(0.1, 0.7), 1.6);
    for (int sigma : {+1, -1}) {
        const KKMetric G(skew_plane(), A, sigma);
        const Mat m = G.adapted(p);
        const Mat g = skew_plane().base(p);
        const Vec a = v2(0.3, -0.2);
        EXPECT_LT((m.topLeftCorner(2, 2) - (g + sigma * a * a.transpose())).cwiseAbs().maxCoeff(), 1e-15);
        EXPECT_DOUBLE_EQ(m(0, 2), sigma * 0.3);
        EXPECT_DOUBLE_EQ(m(1, 2), sigma * -0.2);
        EXPECT_DOUBLE_EQ(m(2, 2), sigma);
        // Raw form: G_tt = sigma / t^2.
        EXPECT_NEAR(G.raw(p)(2, 2), sigma / (1.6 * 1.6), 1e-15);
    }
}

TEST(KKMetric, DeterminantIdentity) {
    const GaugeField A = GaugeField::from_function([](const Vec& x) { return v2(x(1), -0.5 * x(0)); });
    for (int sigma : {+1, -1}) {
        const KKMetric G(skew_plane(), A, sigma);
        for (double t : {-2.0, 0.3, 1.0, 4.0}) {
            const Point p(v2(0.4, -0.9), t);
            const double expect = sigma * skew_plane().base(p).determinant() / (t * t);
            EXPECT_NEAR(kk_raw_determinant(G, p), expect, 1e-13 * std::abs(expect));
        }
    }
}

TEST(KKMetric, Signatures) {
    const Scenario s = make_schwarzschild({{"gauge", "monopole"}, {"b", "0.5"}});
    for (const auto& p : s.sample_points(20, 4)) {
        EXPECT_EQ(signature(s.kk(-1), p), std::make_pair(2, 1));
        EXPECT_EQ(signature(s.kk(+1), p), std::make_pair(3, 0));
    }
}

TEST(KKMetric, EulerNormAndHorizontalOrthogonality) {
    const Scenario s = make_flat({{"n", "2"}, {"gauge", "magnetic"}});
    const Point p(v2(0.2, 0.5), -1.1);
    for (int sigma : {+1, -1}) {
        const KKMetric G = s.kk(sigma);
        const auto delta = TangentVector::euler(p);
        EXPECT_DOUBLE_EQ(G.eval(delta, delta), sigma);
        const auto h = split(s.omega(), TangentVector(p, v2(0.7, -0.4), 2.0)).horizontal;
        EXPECT_NEAR(G.eval(h, delta), 0.0, 1e-15);
        EXPECT_NEAR(G.eval(h, h), h.vx.squaredNorm(), 1e-14);
    }
}

TEST(KKMetric, BuildFromConnection) {
    const Scenario s = make_flat({{"n", "2"}, {"gauge", "shear"}});
    const KKMetric G = build_kk(s.g, s.omega(), -1);
    const Point p(v2(0.3, 0.6), 1.0);
    EXPECT_LT((G.adapted(p) - s.kk(-1).adapted(p)).norm(), 1e-15);
    EXPECT_THROW(KKMetric(s.g, s.A, 0), ContractViolation);
}

TEST(KKMetric, IllConditionedInverse) {
    const KKMetric G(make_flat({{"n", "2"}}).g, GaugeField::constant(v2(1e7, 0.0)), -1);
    EXPECT_THROW(G.raw_inverse(Point(v2(0, 0), 1.0)), NumericError);
}

// ---------------------------------------------------------------------------
// Levi-Civita symbols.

TEST(Christoffel, FiberSymbolOfFlatBundle) {
    // G_tt = sigma / t^2 gives Gamma^t_tt = -1/t and nothing else.
    const Scenario s = make_flat({{"n", "2"}});
    for (int sigma : {+1, -1}) {
        const Point p(v2(0.3, -0.4), 0.8);
        const Christoffel gam = christoffel_numeric(s.kk(sigma), p);
        EXPECT_NEAR(gam(2, 2, 2), -1.0 / 0.8, 1e-8);
        double rest = 0.0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                for (int c = 0; c < 3; ++c)
                    if (a != 2 || b != 2 || c != 2) rest = std::max(rest, std::abs(gam(a, b, c)));
        EXPECT_LT(rest, 1e-8);
    }
}

TEST(Christoffel, SymmetricInLowerIndices) {
    const Scenario s = make_schwarzschild({{"gauge", "monopole"}});
    for (const auto& p : s.sample_points(10, 3)) EXPECT_LT(christoffel_numeric(s.kk(-1), p).max_lower_asymmetry(), 1e-10);
}

TEST(Christoffel, ClosedFormMatchesOracle) {
    const std::vector<Scenario> scen = {make_schwarzschild({}), make_lightcone({}), make_thakurta({}),
                                        make_flat({{"n", "3"}})};
    for (const auto& s : scen)
        for (int sigma : {+1, -1})
            for (const auto& p : s.sample_points(10, 21)) {
                const KKMetric G = s.kk(sigma);
                EXPECT_LT(christoffel_closed_form(G, p, s.base_christoffel).max_abs_difference(christoffel_numeric(G, p)),
                          1e-6)
                    << s.name << " sigma " << sigma;
            }
}

TEST(Christoffel, ClosedFormWithGaugePositiveSign) {
    const Scenario s = make_flat({{"n", "2"}, {"gauge", "magnetic"}, {"B", "0.8"}});
    const Point p(v2(0.5, -0.3), 1.4);
    EXPECT_LT(christoffel_closed_form(s.kk(+1), p).max_abs_difference(christoffel_numeric(s.kk(+1), p)), 1e-6);
    EXPECT_THROW(christoffel_closed_form(s.kk(-1), p), ContractViolation);
}

TEST(Christoffel, ThakurtaFiberBlock) {
    // U(t) = t: Gamma^c_{a t} = -delta^c_a / 2 and Gamma^t_ab = t^2 g_ab / 2 for the + sign.
    const Scenario s = make_thakurta({});
    const Point p(v2(1.1, 0.4), 0.9);
    const Christoffel gam = christoffel_numeric(s.kk(+1), p);
    const Mat g = s.g.base(p);
    for (int a = 0; a < 2; ++a)
        for (int c = 0; c < 2; ++c) {
            EXPECT_NEAR(gam(c, a, 2), c == a ? -0.5 : 0.0, 1e-7);
            EXPECT_NEAR(gam(2, c, a), 0.5 * 0.81 * g(c, a), 1e-7);
        }
}

// ---------------------------------------------------------------------------
// Metricity.

TEST(Metricity, KaluzaKleinIsCompatible) {
    const Scenario s = make_flat({{"n", "2"}, {"gauge", "shear"}});
    for (int sigma : {+1, -1}) {
        const KKMetric G = s.kk(sigma);
        const Point p(v2(0.3, 0.5), 2.0);
        EXPECT_LT(max_abs(covariant_derivative_metric(christoffel_numeric(G, p), G.raw_field(), p)), 1e-7);
    }
}

TEST(Metricity, DegenerateMetricIsNotParallel) {
    // nabla_C g_AB = -sigma/2 (F_CA w_B + w_A F_CB) with w = (A, 1/t), F_12 = -1 for A = (x2, 0).
    const Scenario s = make_flat({{"n", "2"}, {"gauge", "shear"}});
    const double t = 2.0;
    const Point p(v2(0.3, 0.5), t);
    for (int sigma : {+1, -1}) {
        const auto ng = metric_compatibility_residual(christoffel_numeric(s.kk(sigma), p), s.g, p);
        EXPECT_NEAR(ng[1](0, 2), -0.5 * sigma / t, 1e-7);
        EXPECT_NEAR(ng[0](1, 2), 0.5 * sigma / t, 1e-7);
        EXPECT_NEAR(ng[0](0, 2), 0.0, 1e-7);
        EXPECT_NEAR(ng[2](0, 0), 0.0, 1e-7);
    }
}

TEST(Metricity, PureGaugeIsParallel) {
    const Scenario s = make_flat({{"n", "2"}, {"gauge", "quadratic"}});
    const Point p(v2(0.6, -0.2), 1.3);
    EXPECT_LT(max_abs(metric_compatibility_residual(christoffel_numeric(s.kk(-1), p), s.g, p)), 1e-7);
}

// ---------------------------------------------------------------------------
// Volume and divergence.

TEST(Divergence, EulerFieldOnLightCone) {
    // rho = |t| sin(th), so Div Delta = rho^-1 d_t(rho t) = 2.
    const Scenario s = make_lightcone({});
    for (const auto& p : s.sample_points(6, 8)) {
        EXPECT_NEAR(divergence(VectorField::euler(), s.g, p), 2.0, 1e-7);
        EXPECT_NEAR(divergence_lie(VectorField::euler(), s.kk(-1), p), 2.0, 1e-7);
        EXPECT_NEAR(divergence_lie(VectorField::euler(), s.kk(+1), p), 2.0, 1e-7);
    }
}

TEST(Divergence, RoutesAgreeForGenericField) {
    const Scenario s = make_schwarzschild({{"gauge", "monopole"}});
    const auto X = VectorField::from_raw([](const Point& p) {
        Vec r(3);
        r << std::sin(p.x(1)), p.t * std::cos(p.x(0)), p.t * p.x(0);
        return r;
    });
    for (const auto& p : s.sample_points(6, 2)) {
        EXPECT_NEAR(divergence(X, s.g, p), divergence_lie(X, s.kk(-1), p), 1e-6);
    }
}

TEST(Divergence, VolumeDensity) {
    const Scenario s = make_schwarzschild({});
    const Point p(v2(0.7, 0.0), -2.0);
    EXPECT_NEAR(volume_density(s.g, p), std::sin(0.7) / 2.0, 1e-15);
}

TEST(Regularity, FiberCoordinateFieldBlowsUp) {
    const Scenario s = make_flat({{"n", "2"}});
    const auto dt = VectorField::from_raw([](const Point&) { return (Vec(3) << 0.0, 0.0, 1.0).finished(); });
    const auto bad = regularity_probe(s.kk(-1), dt, dt, v2(0.1, 0.2));
    EXPECT_FALSE(bad.bounded);
    EXPECT_NEAR(bad.values.back()(2), -1e6, 1e-2);
    const auto good = regularity_probe(s.kk(-1), VectorField::euler(), VectorField::euler(), v2(0.1, 0.2));
    EXPECT_TRUE(good.bounded);
}
