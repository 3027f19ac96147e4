#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "hyperconf/identities.hpp"

using namespace hyperconf;

namespace {

ConePoint P(double t, double x1 = 0, double x2 = 0, double x3 = 0) { return ConePoint::make(t, {x1, x2, x3}); }

Jet bump(const ConePoint& p, int K) {
    Jet t = Jet::coordinate(0, p, K);
    Jet r2 = Jet(p, K);
    for (int a = 1; a <= 3; ++a) r2 += Jet::coordinate(a, p, K) * Jet::coordinate(a, p, K);
    return exp(-(t - 4.0) * (t - 4.0) - r2);
}

Jet poly_bump(const ConePoint& p, int K) { return test_field_suite()[3].eval(p, K); }

}  // namespace

TEST(BoxDecomposition, Examples) {
    ConePoint p = P(3, 1, 0.5, -0.2);
    Jet t = Jet::coordinate(0, p, 2);
    Jet r2 = Jet(p, 2);
    for (int a = 1; a <= 3; ++a) r2 += Jet::coordinate(a, p, 2) * Jet::coordinate(a, p, 2);
    Residual r = box_decomposition_residual(t * t - r2, p);
    EXPECT_LE(r.residual, 1e-11);
    EXPECT_NEAR(r.scale, 8.0, 1e-10);  // □(t² − r²) = 2 + 6
    EXPECT_EQ(box_decomposition_residual(Jet::constant(2.0, p, 2), p).residual, 0.0);
    for (const auto& q : sample_cone_points(50, 2, 6, 51)) EXPECT_LE(box_decomposition_residual(bump(q, 2), q).residual, 1e-9);
    EXPECT_THROW(box_decomposition_residual(Jet::constant(1, p, 1), p), Error);
}

TEST(FlatMultiplier, Examples) {
    ConePoint p = P(4, 1, 2, 0.5);
    EXPECT_EQ(flat_multiplier_residual(Jet::constant(1.0, p, 3), p).residual, 0.0);
    EXPECT_LE(flat_multiplier_residual(Jet::coordinate(0, p, 3), p).residual, 1e-10);
    for (const auto& q : sample_cone_points(100, 2, 10, 53)) {
        Residual r = flat_multiplier_residual(poly_bump(q, 3), q);
        EXPECT_LE(r.residual, 1e-9 * r.scale);
    }
    EXPECT_THROW(flat_multiplier_residual(Jet::constant(1, p, 2), p), Error);
}

TEST(CurvedMultiplier, FlatCalibration) {
    for (const auto& q : sample_cone_points(50, 2, 10, 55)) {
        Jet u = poly_bump(q, 3);
        auto res = curved_multiplier_residual(u, MetricPerturbation::zero(), q);
        const auto& T = res.terms;
        EXPECT_NEAR(T.N, 2.0, 1e-12);
        auto fm = frame_matrices(q);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) EXPECT_NEAR(T.L[a][b], 2 * fm.mbar[a + 1][b + 1], 1e-12);
        FrameContext ctx(q, 2);
        double K = apply_field(VectorField::conformal(), u, ctx).value();
        EXPECT_NEAR(T.Ku, K, 1e-12 * (1 + std::abs(K)));
        EXPECT_LE(std::abs(T.S), 1e-12);
        EXPECT_LE(std::abs(T.T), 1e-12);
        EXPECT_LE(std::abs(T.R), 1e-12 * (1 + std::abs(T.lhs)));
        EXPECT_LE(res.residual.residual, 1e-10 * (1 + res.residual.scale));
        // the flat identity is twice the curved one with h = 0
        Residual flat = flat_multiplier_residual(u, q);
        EXPECT_NEAR(2 * T.lhs, 2 * q.s() * (K + 2 * u.value()) * (u.partial(unit_index(0, 2)) - u.partial(unit_index(1, 2)) -
                                                                  u.partial(unit_index(2, 2)) - u.partial(unit_index(3, 2))),
                    1e-10 * (1 + flat.scale));
    }
}

TEST(CurvedMultiplier, PerturbedMetrics) {
    auto conf = MetricPerturbation::conformal(0.01);
    auto ql = MetricPerturbation::quasilinear(CubicForm::minkowski_times({1, 0, 0, 0}), [](const ConePoint& p, int K) {
        return 0.1 * bump(p, K);
    });
    CubicForm nonnull = CubicForm::time_cubed();
    nonnull(1, 2, 0) = 0.4;
    auto ql2 = MetricPerturbation::quasilinear(nonnull, perturbation_source);
    for (const auto& q : sample_cone_points(100, 2, 10, 57)) {
        Jet u = poly_bump(q, 3);
        for (const auto* h : {&conf, &ql, &ql2}) {
            Residual r = curved_multiplier_residual(u, *h, q).residual;
            EXPECT_LE(r.residual, 1e-8 * r.scale);
        }
    }
}

TEST(CurvedMultiplier, Errors) {
    ConePoint p = P(3, 1);
    EXPECT_THROW(curved_multiplier_residual(Jet::constant(1, p, 3), MetricPerturbation::conformal(-1.5), p), Error);
    try {
        curved_multiplier_residual(Jet::constant(1, p, 3), MetricPerturbation::conformal(-1.5), p);
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NonLorentzian);
    }
    MetricPerturbation low{[](const ConePoint& q, int) {
        JetMatrix h;
        for (auto& row : h)
            for (auto& e : row) e = Jet(q, 1);
        return h;
    }};
    EXPECT_THROW(curved_multiplier_residual(Jet::constant(1, p, 3), low, p), Error);
}

TEST(Hessian, Examples) {
    ConePoint p = P(3, 1);
    Jet t = Jet::coordinate(0, p, 2);
    auto h = hessian_residual(t * t, p);
    for (const Residual& r : {h.bar_ss, h.tt, h.ta, h.ab}) EXPECT_LE(r.residual, 1e-11);
    auto c = hessian_residual(Jet::constant(3, p, 2), p);
    for (const Residual& r : {c.bar_ss, c.tt, c.ta, c.ab}) EXPECT_EQ(r.residual, 0.0);
    for (const auto& q : sample_cone_points(100, 2, 10, 59)) {
        auto b = hessian_residual(poly_bump(q, 2), q);
        for (const Residual& r : {b.bar_ss, b.tt, b.ta, b.ab}) EXPECT_LE(r.residual, 1e-9 * r.scale);
    }
}

TEST(NullDecomposition, Examples) {
    ConePoint p = P(5, 3, 0.5, 0);
    EXPECT_EQ(null_decomposition_residual(CubicForm{}, bump(p, 2), p).residual, 0.0);
    for (const auto& q : sample_cone_points(50, 2, 8, 61)) {
        Residual r = null_decomposition_residual(CubicForm::time_cubed(), poly_bump(q, 2), q);
        EXPECT_LE(r.residual, 1e-9 * r.scale);
    }
    Jet tx = Jet::coordinate(0, p, 2) * Jet::coordinate(1, p, 2);
    EXPECT_LE(null_decomposition_residual(CubicForm::minkowski_times({1, 0, 0, 0}), tx, p).residual, 1e-10);
}

TEST(Commutators, ClosedFormExamples) {
    ConePoint p = P(2, 0.5);
    Jet u = Jet::coordinate(1, p, 3) * Jet::coordinate(0, p, 3);
    EXPECT_LE(commutator_residual({CommutatorKind::BoostPartial, 1, 0, {}}, u, p).residual, 1e-14);
    for (const auto& q : sample_cone_points(50, 2, 10, 63))
        EXPECT_LE(commutator_residual({CommutatorKind::BoostBar, 1, 2, {}}, bump(q, 3), q).residual, 1e-10);
    ConePoint r = P(4, 1, -0.5, 0.7);
    Jet t = Jet::coordinate(0, r, 3);
    EXPECT_LE(commutator_residual({CommutatorKind::PartialBar, 0, 1, {}}, t * t * t, r).residual, 1e-11);
    for (const auto& q : sample_cone_points(20, 2, 10, 65)) {
        Residual c = closed_commutators_residual(poly_bump(q, 3), q);
        EXPECT_LE(c.residual, 1e-9 * std::max(c.scale, 1e-300));
    }
}

TEST(Commutators, UnknownId) {
    EXPECT_EQ(parse_commutator_kind("word_bar_ss"), CommutatorKind::WordBarSS);
    try {
        parse_commutator_kind("bogus");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnknownIdentity);
    }
}

// Lemma ratios |[∂^I L^J, X]u| / bound stay finite and do not grow with the region.
TEST(Commutators, LemmaRatiosBounded) {
    const CommutatorKind kinds[] = {CommutatorKind::WordBarS, CommutatorKind::WordBarSS, CommutatorKind::WordBarSA,
                                    CommutatorKind::WordBarAB};
    for (CommutatorKind k : kinds) {
        double worst[2] = {0, 0};
        for (int region = 0; region < 2; ++region) {
            auto pts = sample_cone_points(12, 2, region == 0 ? 6 : 12, 67);
            for (const auto& q : pts) {
                Jet u = poly_bump(q, 6);
                for (const auto& w : words_up_to(3)) {
                    if (w.order() == 0) continue;
                    CommutatorId id{k, 1, 2, w};
                    Residual r = commutator_residual(id, u, q);
                    EXPECT_TRUE(std::isfinite(r.residual)) << to_string(k) << " " << to_string(w);
                    worst[region] = std::max(worst[region], r.residual);
                }
            }
        }
        EXPECT_GT(worst[0], 0.0) << to_string(k);
        EXPECT_LE(worst[1], 10.0) << to_string(k) << " " << worst[0] << " " << worst[1];
    }
}

TEST(TestFields, OutgoingWaveIsInBoxKernel) {
    auto suite = test_field_suite();
    ASSERT_EQ(suite.size(), 5u);
    const auto& wave = suite[4];
    int nonzero = 0;
    for (const auto& q : sample_cone_points(400, 2, 10, 69)) {
        Jet u = wave.eval(q, 2);
        if (u.value() == 0.0) continue;
        ++nonzero;
        double box = u.partial(unit_index(0, 2));
        double scale = std::abs(u.partial(unit_index(0, 2)));
        for (int a = 1; a <= 3; ++a) box -= u.partial(unit_index(a, 2)), scale += std::abs(u.partial(unit_index(a, 2)));
        EXPECT_LE(std::abs(box), 1e-10 * scale);
    }
    EXPECT_GT(nonzero, 10);
}

TEST(Suite, AllIdentitiesPass) {
    auto start = std::chrono::steady_clock::now();
    auto pts = sample_cone_points(100, 2, 10, 71);
    auto cases = identity_cases();
    ASSERT_EQ(cases.size(), 9u);
    for (const auto& c : cases)
        for (const auto& f : test_field_suite()) {
            auto rep = sweep_identity(c, f, pts);
            EXPECT_TRUE(rep.pass(1e-9)) << rep.identity << " / " << rep.field << " residual " << rep.max_residual
                                        << " scale " << rep.max_scale;
            auto j = to_json(rep);
            EXPECT_EQ(j["identity"], c.name);
        }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    EXPECT_LE(secs, 60.0);
}
