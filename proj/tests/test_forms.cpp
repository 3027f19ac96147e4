#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "hyperconf/forms.hpp"

using namespace hyperconf;

namespace {

ConePoint P(double t, double x1 = 0, double x2 = 0, double x3 = 0) { return ConePoint::make(t, {x1, x2, x3}); }

CubicForm random_cubic(unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1, 1);
    CubicForm f;
    for (double& v : f.Q) v = U(rng);
    return f;
}

QuadraticForm random_quadratic(unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1, 1);
    QuadraticForm f;
    for (auto& row : f.T)
        for (double& v : row) v = U(rng);
    return f;
}

/// Null quadratic form c*m plus an antisymmetric part.
QuadraticForm null_quadratic_with_skew(double c, double k) {
    QuadraticForm f = QuadraticForm::minkowski();
    for (auto& row : f.T)
        for (double& v : row) v *= c;
    f.T[0][2] += k;
    f.T[2][0] -= k;
    f.T[1][3] += 2 * k;
    f.T[3][1] -= 2 * k;
    return f;
}

}  // namespace

TEST(Icosphere, VertexCountAndNorm) {
    const auto& mesh = null_mesh();
    ASSERT_EQ(mesh.size(), 642u);
    for (const auto& w : mesh) EXPECT_NEAR(w[0] * w[0] + w[1] * w[1] + w[2] * w[2], 1.0, 1e-14);
    // deterministic
    EXPECT_EQ(icosphere(3), mesh);
}

TEST(IsNull, Examples) {
    EXPECT_TRUE(is_null(QuadraticForm::minkowski()).null);
    EXPECT_TRUE(is_null(CubicForm::minkowski_times({1, 0, 0, 0})).null);
    EXPECT_TRUE(is_null(CubicForm::minkowski_times({0.3, -2, 1, 5})).null);
    auto c = is_null(CubicForm::time_cubed());
    EXPECT_FALSE(c.null);
    EXPECT_DOUBLE_EQ(c.max_contraction, 1.0);
    const Vec3 w = c.witness;
    EXPECT_NEAR(w[0] * w[0] + w[1] * w[1] + w[2] * w[2], 1.0, 1e-14);
}

TEST(IsNull, WitnessMaximizesContraction) {
    QuadraticForm f;
    f.T[1][1] = 1.0;  // contraction = w1^2, maximal at w = (+-1, 0, 0)
    auto c = is_null(f);
    EXPECT_FALSE(c.null);
    EXPECT_NEAR(std::abs(c.witness[0]), 1.0, 1e-14);
}

TEST(IsNull, RandomFormsAreNotNull) {
    for (unsigned seed = 1; seed <= 20; ++seed) {
        EXPECT_FALSE(is_null(random_cubic(seed)).null);
        EXPECT_FALSE(is_null(random_quadratic(seed)).null);
    }
}

TEST(IsNull, InvariantUnderSymmetrization) {
    for (unsigned seed = 1; seed <= 20; ++seed) {
        CubicForm q = random_cubic(seed);
        QuadraticForm t = random_quadratic(seed + 100);
        EXPECT_EQ(is_null(q).null, is_null(q.symmetrized()).null);
        EXPECT_NEAR(is_null(q).max_contraction, is_null(q.symmetrized()).max_contraction, 1e-13);
        EXPECT_EQ(is_null(t).null, is_null(t.symmetrized()).null);
        // a null form with an antisymmetric part stays null
        QuadraticForm n = null_quadratic_with_skew(1.5 + seed, 0.3 * seed);
        EXPECT_TRUE(is_null(n).null);
        EXPECT_TRUE(is_null(n.symmetrized()).null);
        CubicForm m = CubicForm::minkowski_times({1, 0.5, 0, -1});
        m(0, 1, 2) += seed;
        m(1, 0, 2) -= seed;
        EXPECT_TRUE(is_null(m).null);
    }
}

TEST(HyperbolicComponents, Examples) {
    auto q = hyperbolic_components(CubicForm::time_cubed(), P(5, 3));
    EXPECT_NEAR(q(0, 0, 0), std::pow(5.0 / 4.0, 3), 1e-14);
    auto n = hyperbolic_components(CubicForm::minkowski_times({1, 0, 0, 0}), P(5, 3));
    EXPECT_NEAR(n(0, 0, 0), 5.0 / 4.0, 1e-14);
    auto m = hyperbolic_components(QuadraticForm::minkowski(), P(2));
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) EXPECT_NEAR(m[a][b], a == b ? minkowski(a, a) : 0.0, 1e-15);
    EXPECT_THROW(hyperbolic_components(QuadraticForm::minkowski(), ConePoint{2, {1.5, 0, 0}}), Error);
}

TEST(HyperbolicComponents, MinkowskiGivesFrameMetric) {
    for (const auto& p : sample_cone_points(200, 2, 20, 7)) {
        auto Tb = hyperbolic_components(QuadraticForm::minkowski(), p);
        auto fm = frame_matrices(p);
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) EXPECT_NEAR(Tb[a][b], fm.mbar[a][b], 1e-10 * (1 + std::abs(fm.mbar[a][b])));
    }
}

// Contraction V_a V_b T^{ab} computed directly and through the frame with V = Phi-transformed.
TEST(HyperbolicComponents, JetAgreesWithValues) {
    CubicForm q = random_cubic(3);
    QuadraticForm t = random_quadratic(4);
    for (const auto& p : sample_cone_points(20, 2, 10, 9)) {
        FrameContext ctx(p, 2);
        auto Qb = hyperbolic_components(q, p);
        auto Tb = hyperbolic_components(t, p);
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) {
                EXPECT_NEAR(hyperbolic_component_jet(t, a, b, ctx, 2).value(), Tb[a][b], 1e-11 * (1 + std::abs(Tb[a][b])));
                EXPECT_NEAR(hyperbolic_component_jet(q, a, b, 0, ctx, 2).value(), Qb(a, b, 0),
                            1e-11 * (1 + std::abs(Qb(a, b, 0))));
            }
        // first derivative against a central difference in t
        const double h = 1e-5;
        Jet j = hyperbolic_component_jet(q, 0, 0, 0, ctx, 1);
        double fd = (hyperbolic_components(q, P(p.t + h, p.x[0], p.x[1], p.x[2]))(0, 0, 0) -
                     hyperbolic_components(q, P(p.t - h, p.x[0], p.x[1], p.x[2]))(0, 0, 0)) /
                    (2 * h);
        EXPECT_NEAR(j.derivative(0).value(), fd, 1e-6 * (1 + std::abs(fd)));
    }
}

TEST(Decomposition, Tbar00ForNullForms) {
    for (const auto& p : sample_cone_points(500, 2, 30, 11)) {
        if (p.r() < p.t / 2) continue;
        for (double c : {1.0, -2.5})
            EXPECT_LE(tbar00_decomposition_residual(null_quadratic_with_skew(c, 0.7), p), 1e-12);
    }
}

TEST(Decomposition, FailsForNonNullForms) {
    // residual equals (t/s)^2 T(xi, xi) with xi = (r/t, -x/t)
    QuadraticForm f;
    f.T[0][0] = 1.0;
    ConePoint p = P(5, 3);
    EXPECT_NEAR(tbar00_decomposition_residual(f, p), std::pow(5.0 / 4.0, 2) * std::pow(3.0 / 5.0, 2), 1e-13);
}

TEST(WeightedComponents, DegreeZeroHomogeneous) {
    CubicForm q = random_cubic(5);
    QuadraticForm t = random_quadratic(6);
    for (const auto& p : sample_cone_points(5, 2, 8, 13)) {
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) {
                auto fT = [&](const ConePoint& x) {
                    return std::pow(x.s() / x.t, zero_count(a, b)) * hyperbolic_components(t, x)[a][b];
                };
                auto h = homogeneity_degree(fT, p);
                EXPECT_EQ(h.nearest, 0);
                EXPECT_LE(h.deviation, 1e-8);
                for (int c = 0; c < 4; ++c) {
                    auto fQ = [&](const ConePoint& x) {
                        return std::pow(x.s() / x.t, zero_count(a, b, c)) * hyperbolic_components(q, x)(a, b, c);
                    };
                    auto g = homogeneity_degree(fQ, p);
                    EXPECT_EQ(g.nearest, 0);
                    EXPECT_LE(g.deviation, 1e-8);
                }
            }
    }
}

TEST(BoundProfile, RegionStaysInCone) {
    Region r{2, 50, 30, 25, 0.95};
    auto pts = r.points();
    EXPECT_FALSE(pts.empty());
    for (const auto& p : pts) {
        EXPECT_GT(p.t - p.r(), 1.0);
        EXPECT_LE(p.r() / p.t, 0.95 + 1e-12);
    }
}

TEST(BoundProfile, Examples) {
    Region small{2, 10, 16, 19, 0.9}, large{2, 100, 24, 19, 0.95};
    auto n1 = null_bound_profile(CubicForm::minkowski_times({1, 0, 0, 0}), small);
    auto n2 = null_bound_profile(CubicForm::minkowski_times({1, 0, 0, 0}), large);
    EXPECT_NEAR(n1.sup_main, 1.0, 1e-12);
    EXPECT_NEAR(n2.sup_main, 1.0, 1e-12);

    auto c = null_bound_profile(CubicForm::time_cubed(), small);
    EXPECT_NEAR(c.sup_main, c.sup_t_over_s * c.sup_t_over_s, 1e-12 * c.sup_main);

    auto m = null_bound_profile(QuadraticForm::minkowski(), large);
    EXPECT_NEAR(m.sup_main, 1.0, 1e-12);
    EXPECT_LE(m.sup_frame_derivative, 1e-12);
}

// Same radial cap in both regions: only growth in s is probed.
TEST(BoundProfile, NullStableNonNullGrows) {
    Region small{2, 10, 16, 19, 0.9}, large{2, 200, 30, 19, 0.9};
    for (const auto& n : {std::array<double, 4>{1, 0, 0, 0}, {0.5, 1, -1, 2}}) {
        CubicForm f = CubicForm::minkowski_times(n);
        auto a = null_bound_profile(f, small), b = null_bound_profile(f, large);
        EXPECT_LE(b.sup_main, 1.05 * a.sup_main + 1e-12);
        EXPECT_LE(b.sup_frame_derivative, 1.05 * a.sup_frame_derivative + 1e-12);
    }
    // t/s only grows when r/t approaches 1
    Region wide{2, 200, 30, 400, 0.999};
    EXPECT_NEAR(null_bound_profile(CubicForm::minkowski_times({1, 0, 0, 0}), wide).sup_main, 1.0, 1e-12);
    CubicForm q = CubicForm::time_cubed();
    auto a = null_bound_profile(q, small), b = null_bound_profile(q, wide);
    double growth = b.sup_main / a.sup_main, ts_growth = b.sup_t_over_s / a.sup_t_over_s;
    EXPECT_GT(growth, 2.0);
    EXPECT_GE(growth, ts_growth);
}

TEST(BoundProfile, AuxiliaryRelationsBounded) {
    Region small{2, 10, 16, 19, 0.9}, large{2, 200, 30, 39, 0.99};
    auto a = auxiliary_bounds(small), b = auxiliary_bounds(large);
    EXPECT_LE(b.dbar_s_ratio, 2.0);
    EXPECT_LE(b.dbar_a_ratio, 2.0);
    EXPECT_LE(b.d_r_over_t_plus_r, 2.0);
    EXPECT_GT(a.dbar_s_ratio, 0.0);
    EXPECT_GT(a.dbar_a_ratio, 0.0);
}

TEST(Semilinear, Examples) {
    EXPECT_EQ(semilinear_eliminate(QuadraticForm::minkowski()).sigma, 1.0);
    auto z = semilinear_eliminate(QuadraticForm{});
    EXPECT_EQ(z.sigma, 0.0);
    EXPECT_EQ(z.transform(0.7), 0.7);
    QuadraticForm n;
    n.T[0][0] = -2;
    auto e = semilinear_eliminate(n);
    EXPECT_EQ(e.sigma, -2.0);
    EXPECT_DOUBLE_EQ(e.transform(0.5), 0.5 - 0.25);
}

TEST(FormFile, ParseAndRoundTrip) {
    std::istringstream in("# forms\nQ 0 0 0 1.5\nT 1 2 -3  # trailing\n\nQ 3 2 1 2e-1\n");
    auto f = parse_forms(in);
    EXPECT_TRUE(f.has_Q);
    EXPECT_TRUE(f.has_T);
    EXPECT_EQ(f.Q(0, 0, 0), 1.5);
    EXPECT_EQ(f.Q(3, 2, 1), 0.2);
    EXPECT_EQ(f.T.T[1][2], -3.0);
    EXPECT_EQ(f.T.T[2][1], 0.0);
    std::istringstream again(format_forms(f));
    auto g = parse_forms(again);
    EXPECT_EQ(g.Q.Q, f.Q.Q);
    EXPECT_EQ(g.T.T, f.T.T);
}

TEST(FormFile, Errors) {
    for (const char* bad : {"Q 0 0 1\n", "T 0 4 1\n", "X 0 0 1\n", "T 0 0 abc\n", "Q 0 0 0 1 2\n", "T 0 0 nan\n"}) {
        std::istringstream in(bad);
        try {
            parse_forms(in);
            FAIL() << bad;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::ParseError) << bad;
        }
    }
    EXPECT_THROW(load_forms("/nonexistent/forms.txt"), Error);
}

TEST(MetricPerturbation, ConformalAndLorentzian) {
    ConePoint p = P(3, 1);
    EXPECT_TRUE(is_lorentzian(MetricPerturbation::zero().values(p)));
    EXPECT_TRUE(is_lorentzian(MetricPerturbation::conformal(0.2).values(p)));
    // m + h = -0.5 m has signature (-,+,+,+)
    EXPECT_FALSE(is_lorentzian(MetricPerturbation::conformal(-1.5).values(p)));
}

TEST(MetricPerturbation, QuasilinearMatchesFiniteDifference) {
    CubicForm Q = random_cubic(8);
    JetField v = [](const ConePoint& p, int K) {
        Jet t = Jet::coordinate(0, p, K), x = Jet::coordinate(1, p, K), y = Jet::coordinate(2, p, K);
        return 0.1 * sin(t - x) * cos(0.5 * y) / t;
    };
    auto h = MetricPerturbation::quasilinear(Q, v);
    CubicForm S = Q.symmetrized();
    const double eps = 1e-6;
    for (const auto& p : sample_cone_points(10, 2, 8, 15)) {
        std::array<double, 4> grad{};
        for (int c = 0; c < 4; ++c) {
            std::array<double, 4> dp{}, dm{};
            dp[c] = eps;
            dm[c] = -eps;
            auto shift = [&](const std::array<double, 4>& d) {
                return v(P(p.t + d[0], p.x[0] + d[1], p.x[1] + d[2], p.x[2] + d[3]), 0).value();
            };
            grad[c] = (shift(dp) - shift(dm)) / (2 * eps);
        }
        Mat4 hv = h.values(p);
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) {
                double ref = 0;
                for (int c = 0; c < 4; ++c) ref += S(a, b, c) * grad[c];
                EXPECT_NEAR(hv[a][b], ref, 1e-8);
            }
        EXPECT_TRUE(is_lorentzian(hv));
        EXPECT_EQ(h.jets(p, 2)[0][1].order(), 2);
    }
}
