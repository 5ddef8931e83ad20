#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "carroll/carroll.hpp"

using namespace carroll;

namespace {

const double kPi = std::numbers::pi;

double S(double m) { return 0.5 * std::sin(m); }

}  // namespace

TEST(Arcs, WrapAndIntersect) {
    EXPECT_NEAR(canonical_base(-1.0, 2 * kPi), 2 * kPi - 1.0, 1e-15);
    EXPECT_EQ(canonical_base(-1.0, 0.0), -1.0);
    const ArcSet w = arc_set({5.0, 7.0}, 2 * kPi);
    ASSERT_EQ(w.pieces.size(), 2u);
    EXPECT_NEAR(w.pieces[1].hi, 7.0 - 2 * kPi, 1e-15);
    EXPECT_TRUE(contains(w, 0.5));
    EXPECT_FALSE(contains(w, 1.0));
    const ArcSet x = intersect(w, arc_set({0.2, 3.0}, 2 * kPi));
    ASSERT_EQ(x.pieces.size(), 1u);
    EXPECT_NEAR(x.pieces[0].lo, 0.2, 1e-15);
    EXPECT_TRUE(arc_set({1.0, 1.0}, 0.0).empty());
    EXPECT_EQ(arc_set({0.0, 10.0}, 2 * kPi).pieces.size(), 1u);
}

TEST(Linearize, MoebiusCocycle) {
    const auto lc = linearize(shift_transitions(builtin_atlas("moebius")));
    EXPECT_DOUBLE_EQ(lc.c(1, 0, kPi), 1.0);
    EXPECT_DOUBLE_EQ(lc.c(1, 0, 0.1), -1.0);
    EXPECT_DOUBLE_EQ(lc.c(0, 1, 2 * kPi + 0.1), -1.0);
    EXPECT_LT(lc.cocycle_residual, 1e-12);
    EXPECT_LT(lc.linearity_defect, 1e-12);
    EXPECT_THROW(lc.c(1, 0, kPi / 2), DomainError);
}

TEST(Linearize, ThreeChartNonlinearCocycle) {
    // r_i = h_i(R) with h0 = R, h1 = sinh R, h2 = e^{cos m} R; shifting by R = S(m) gives
    // c_ij(m) = h_i'(S) / h_j'(S).
    const auto lc = linearize(shift_transitions(builtin_atlas("circle3")));
    for (double m : {2.5, 3.3, 4.3}) EXPECT_NEAR(lc.c(1, 0, m), std::cosh(S(m)), 1e-9);
    for (double m : {4.3, 4.4}) {
        EXPECT_NEAR(lc.c(2, 0, m), std::exp(std::cos(m)), 1e-9);
        EXPECT_NEAR(lc.c(2, 1, m), std::exp(std::cos(m)) / std::cosh(S(m)), 1e-9);
    }
    EXPECT_NEAR(lc.c(0, 2, 0.3), std::exp(-std::cos(0.3)), 1e-9);
    EXPECT_LT(lc.cocycle_residual, 1e-8);
    EXPECT_LT(lc.identity_residual, 1e-12);
    EXPECT_GT(lc.linearity_defect, 1e-2);  // the transitions themselves are not linear
}

TEST(Linearize, ShiftedTransitionsFixTheZeroSection) {
    const auto shifted = shift_transitions(builtin_atlas("circle3"));
    EXPECT_LT(origin_defect(shifted), 1e-14);
    for (int i = 0; i < shifted.size(); ++i) EXPECT_EQ(shifted.section(i, 1.0), 0.0);
}

TEST(Linearize, NonGlobalSectionRejected) {
    auto a = builtin_atlas("circle3");
    a.charts[1].section = [](double m) { return S(m); };
    EXPECT_THROW(shift_transitions(a), ConstructionError);
}

TEST(Linearize, DegenerateTransitionRejected) {
    auto a = builtin_atlas("quadratic");
    a.transitions[0].psi = [](double, double r) { return r * r * r; };
    a.transitions[0].derivative = nullptr;
    EXPECT_THROW(linearize(shift_transitions(a)), DegeneracyError);
}

TEST(Linearize, RegisteredDerivativeAgrees) {
    const auto shifted = shift_transitions(builtin_atlas("expcubic"));
    const auto num = linearize(shifted);
    const auto reg = linearize(shifted, 1e-6, true);
    for (double m : {0.1, 3.0, 6.4}) {
        EXPECT_NEAR(num.c(1, 0, m), std::exp(canonical_base(m, 2 * kPi)), 1e-8);
        EXPECT_DOUBLE_EQ(reg.c(1, 0, m), std::exp(canonical_base(m, 2 * kPi)));
    }
    EXPECT_LT(num.cocycle_residual, 1e-8);
}

TEST(Linearize, QuadraticTransitionIsIdentityToFirstOrder) {
    const auto lc = linearize(shift_transitions(builtin_atlas("quadratic")));
    EXPECT_NEAR(lc.c(1, 0, 3.0), 1.0, 1e-10);
    EXPECT_GT(lc.linearity_defect, 1.0);
}

TEST(Linearize, FiberPointsAndShift) {
    const auto original = builtin_atlas("circle3");
    const auto lc = linearize(shift_transitions(original));
    const FiberPoint p{0, 3.0, 0.2};
    const FiberPoint q = transfer(lc, p, 1);
    EXPECT_EQ(q.chart, 1);
    EXPECT_NEAR(q.r, std::cosh(S(3.0)) * 0.2, 1e-9);
    const FiberPoint e = embed_section_diffeo(original, p);
    EXPECT_NEAR(e.r, 0.2 + S(3.0), 1e-15);
    const auto back = unembed_section_diffeo(original, e);
    EXPECT_TRUE(back.in_bundle);
    EXPECT_NEAR(back.point.r, 0.2, 1e-15);
    EXPECT_FALSE(unembed_section_diffeo(original, {0, 3.0, S(3.0)}).in_bundle);
}

TEST(Linearize, BundleAtlasCarriesCocycle) {
    const auto lc = linearize(shift_transitions(builtin_atlas("moebius")));
    const Atlas atlas = bundle_atlas(lc);
    ASSERT_EQ(atlas.size(), 2u);
    const Point p(Vec::Constant(1, 0.2), 1.5, 0);
    const Point q = atlas.transform(p, 1);
    EXPECT_NEAR(q.x(0), 0.2 + 2 * kPi, 1e-12);
    EXPECT_NEAR(q.t, -1.5, 1e-15);
    const Point r = atlas.transform(Point(Vec::Constant(1, 3.0), 1.5, 0), 1);
    EXPECT_NEAR(r.t, 1.5, 1e-15);
}

TEST(AtlasFile, MatchesBuiltin) {
    const auto file = linearize(shift_transitions(load_atlas_file(std::string(CARROLL_DATA_DIR) + "/circle3.atlas")));
    const auto builtin = linearize(shift_transitions(builtin_atlas("circle3")));
    ASSERT_EQ(file.table.size(), builtin.table.size());
    for (std::size_t k = 0; k < file.table.size(); ++k) EXPECT_NEAR(file.table[k].c, builtin.table[k].c, 1e-10);
    const auto moebius = load_atlas_file(std::string(CARROLL_DATA_DIR) + "/moebius.atlas");
    EXPECT_LT(linearize(shift_transitions(moebius)).cocycle_residual, 1e-12);
}

TEST(AtlasFile, Errors) {
    EXPECT_THROW(parse_atlas(ini::parse("[atlas]\nname = x\n")), ParseError);
    EXPECT_THROW(parse_atlas(ini::parse("[atlas]\n[chart]\ndomain = 2, 1\n")), ParseError);
    EXPECT_THROW(parse_atlas(ini::parse("[atlas]\n[chart]\ndomain = 0, 1\n[transition]\nto = 0\nfrom = 0\npsi = r\n")),
                 ParseError);
    EXPECT_THROW(parse_atlas(ini::parse("[atlas]\n[chart]\ndomain = 0, 1\n[chart]\ndomain = 0.5, 2\n"
                                        "[transition]\nto = 1\nfrom = 0\npsi = q\n")),
                 ParseError);
    EXPECT_THROW(load_atlas_file("/nonexistent.atlas"), ParseError);
}

TEST(Ini, Sections) {
    const auto doc = ini::parse("# header\n[a x y]\nk = v # trailing\n\n[a]\nk = w\n[b]\n");
    ASSERT_EQ(doc.sections.size(), 3u);
    EXPECT_EQ(doc.all("a").size(), 2u);
    EXPECT_EQ(doc.sections[0].args, (std::vector<std::string>{"x", "y"}));
    EXPECT_EQ(doc.require("a").get("k"), "v");
    EXPECT_EQ(doc.require("b").get_or("k", "z"), "z");
    EXPECT_THROW(doc.require("c"), ParseError);
    EXPECT_THROW(ini::parse("k = v\n"), ParseError);
    EXPECT_THROW(ini::parse("[a\n"), ParseError);
    EXPECT_THROW(ini::parse("[a]\njunk\n"), ParseError);
}
