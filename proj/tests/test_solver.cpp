#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "hyperconf/energy.hpp"
#include "hyperconf/solver.hpp"

using namespace hyperconf;

namespace {

/// Max error of u against the closed form after evolving the exact data to t = 4 on a fixed grid.
double linear_error(int N) {
    Profile p;
    p.kind = ProfileKind::ExactLinear;
    const double dr = 1.0 / N;
    RadialState st = init_radial_data(p, 1.0, dr, 8);
    st.lo = 0;
    st.hi = st.size() - 3;
    int nsteps = static_cast<int>(std::round(2.0 / (0.8 * dr)));
    double dt = 2.0 / nsteps;
    Stepper S({}, nullptr, dr);
    for (int k = 0; k < nsteps; ++k) S(st, dt);
    double e = 0;
    for (int j = 0; j < st.size() - 3; ++j) e = std::max(e, std::abs(p.exact_linear(st.t, j * dr)[0] - st.u(j)));
    return e;
}

RunOptions small_run(RadialForm form, double eps, double dr, std::vector<double> slices) {
    RunOptions o;
    o.form = form;
    o.eps = eps;
    o.dr = dr;
    o.slices = std::move(slices);
    return o;
}

}  // namespace

TEST(Stepper, FourthOrderOnClosedForm) {
    double e1 = linear_error(50), e2 = linear_error(100), e3 = linear_error(200);
    EXPECT_GT(e1 / e2, 12.0);
    EXPECT_GT(e2 / e3, 12.0);
    EXPECT_LT(e3, 1e-5);
}

TEST(Profile, GaussianPeak) {
    Profile p;
    p.kind = ProfileKind::Gaussian;
    p.amplitude = 1;
    p.width = 0.1;
    p.center = 0.25;
    RadialState st = init_radial_data(p, 0.01, 1.0 / 400, 1.0);
    double m = 0, at = 0;
    for (int j = 0; j < st.size(); ++j)
        if (std::abs(st.u(j)) > m) {
            m = std::abs(st.u(j));
            at = st.r(j);
        }
    EXPECT_NEAR(m, 0.01, 1e-6);
    EXPECT_NEAR(at, 0.25, 1.0 / 400);
}

TEST(Profile, SupportRules) {
    Profile b;
    b.radius = 0.7;
    EXPECT_THROW(
        try { b.validate(); } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::SupportViolation);
            throw;
        },
        Error);
    Profile g;
    g.kind = ProfileKind::Gaussian;
    g.center = 0.45;
    g.width = 0.1;
    EXPECT_THROW(g.validate(), Error);
    // the smooth cutoff leaves nothing beyond r = 1/2
    g.center = 0.3;
    g.width = 0.2;
    EXPECT_EQ(g.value(0.5), 0.0);
    EXPECT_EQ(g.value(0.6), 0.0);
}

TEST(Profile, FileRoundTrip) {
    Profile p;
    p.radius = 0.4;
    auto path = std::filesystem::temp_directory_path() / "hyperconf_profile_roundtrip.txt";
    const double dr = 1.0 / 64;
    write_profile_file(path.string(), p, dr);
    Profile f;
    f.kind = ProfileKind::File;
    f.file = path.string();
    RadialState a = init_radial_data(p, 0.1, dr, 2), b = init_radial_data(f, 0.1, dr, 2);
    ASSERT_EQ(a.size(), b.size());
    for (int j = 0; j < a.size(); ++j) {
        EXPECT_NEAR(a.w[j], b.w[j], 1e-15);
        EXPECT_NEAR(a.wt[j], b.wt[j], 1e-15);
    }
    std::filesystem::remove(path);
}

TEST(Profile, FileBeyondSupport) {
    auto path = std::filesystem::temp_directory_path() / "hyperconf_profile_wide.txt";
    {
        std::FILE* f = std::fopen(path.c_str(), "w");
        std::fprintf(f, "0 1 0\n0.25 1 0\n0.75 0.5 0\n");
        std::fclose(f);
    }
    Profile p;
    p.kind = ProfileKind::File;
    p.file = path.string();
    try {
        init_radial_data(p, 1, 0.25, 2);
        ADD_FAILURE() << "expected SupportViolation";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::SupportViolation);
    }
    std::filesystem::remove(path);
}

TEST(RadialFormTest, RejectsNonRadialCubic) {
    CubicForm q = RadialForm{1, 0, -1, 0}.cubic();
    EXPECT_NO_THROW(RadialForm::from_cubic(q));
    q(0, 1, 2) = 0.5;
    try {
        RadialForm::from_cubic(q);
        ADD_FAILURE() << "expected FormNotRadial";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::FormNotRadial);
    }
}

TEST(Run, ZeroDataGivesZeroSlices) {
    auto res = run_radial(small_run({1, 0, -1, 0}, 0.0, 1.0 / 50, slice_times(2, 10, 1)));
    ASSERT_FALSE(res.blew_up);
    ASSERT_EQ(res.slices.size(), 9u);
    for (const auto& sl : res.slices)
        for (const auto& n : sl.nodes)
            for (double v : n.d) EXPECT_EQ(v, 0.0);
    try {
        decay_profile(res.slices);
        ADD_FAILURE() << "expected Degenerate";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Degenerate);
    }
}

TEST(Run, SupportStaysInsideCone) {
    auto res = run_radial(small_run({1, 0, -1, 0}, 1e-3, 1.0 / 100, {4, 8}));
    ASSERT_FALSE(res.blew_up);
    EXPECT_LT(res.leak, 1e-6);
    for (const auto& sl : res.slices)
        for (const auto& n : sl.nodes)
            if (n.t - n.r < 1.25) {
                EXPECT_LT(std::abs(n.d[kU]), 1e-9);
            }
}

TEST(Run, NonNullFormBlowsUp) {
    auto res = run_radial(small_run({1, 0, 0, 0}, 0.5, 1.0 / 50, {10}));
    EXPECT_TRUE(res.blew_up);
    EXPECT_FALSE(res.reason.empty());
    EXPECT_LT(res.t_blowup, 10.0);
}

TEST(Run, NullTimeFormSurvivesLargeData) {
    auto res = run_radial(small_run({1, -1, 0, 0}, 0.5, 1.0 / 50, {10}));
    EXPECT_FALSE(res.blew_up) << res.reason;
    ASSERT_EQ(res.slices.size(), 1u);
}

TEST(Run, ResampleMatchesOnTheFlyCapture) {
    auto o = small_run({1, 0, -1, 0}, 1e-2, 1.0 / 50, {3, 5});
    o.record_buffer = true;
    auto res = run_radial(o);
    ASSERT_EQ(res.slices.size(), 2u);
    for (const auto& live : res.slices) {
        HyperboloidSlice again = resample_to_hyperboloid(res.buffer, live.s);
        ASSERT_EQ(again.first, live.first);
        ASSERT_EQ(again.nodes.size(), live.nodes.size());
        for (std::size_t k = 0; k < live.nodes.size(); ++k)
            for (int e = 0; e < kTabSize; ++e) EXPECT_NEAR(again.nodes[k].d[e], live.nodes[k].d[e], 1e-14);
    }
}

TEST(Run, InnerCutLeavesSlicesUnchanged) {
    auto cut = small_run({1, 0, -1, 0}, 1e-3, 1.0 / 50, {4, 6});
    auto full = cut;
    full.inner_cut = false;
    auto a = run_radial(cut), b = run_radial(full);
    EXPECT_LT(a.node_updates, b.node_updates);
    for (std::size_t i = 0; i < a.slices.size(); ++i) {
        double m = 0, d = 0;
        const auto& A = a.slices[i];
        const auto& B = b.slices[i];
        for (const auto& n : B.nodes) m = std::max(m, std::abs(n.d[kU]));
        for (const auto& n : A.nodes) {
            int k = static_cast<int>(std::lround(n.r / B.dr)) - B.first;
            double other = (k >= 0 && k < static_cast<int>(B.nodes.size())) ? B.nodes[k].d[kU] : 0.0;
            d = std::max(d, std::abs(n.d[kU] - other));
        }
        EXPECT_LT(d, 1e-8 * m) << "s = " << A.s;
    }
}

TEST(Run, RejectsHyperboloidsBeforeStart) {
    EXPECT_THROW(run_radial(small_run({}, 1, 0.02, {1.5})), Error);
    EXPECT_THROW(run_radial(small_run({}, 1, 0.02, {})), Error);
}

TEST(Boosts, TimeFunction) {
    // u = t at (5, 3 e_1): L_1 u = x^1 d_t u = 3
    SliceNode n;
    n.t = 5;
    n.r = 3;
    n.d[kV] = 1;
    EXPECT_DOUBLE_EQ(radial_boost(n), 3.0);
    LorentzStack st = lorentz_stack(n, 1);
    bool found = false;
    for (std::size_t k = 0; k < st.words.size(); ++k)
        if (to_string(st.words[k]) == "d(0000)L[1]") {
            EXPECT_NEAR(st.values[k], 3.0, 1e-12);
            found = true;
        }
    EXPECT_TRUE(found);
    EXPECT_EQ(st.rotation, 0.0);
    EXPECT_THROW(lorentz_stack(n, 3), Error);
}

namespace {

/// Worst |stack - closed form| over sampled nodes of the s = 5 slice, relative to the largest closed-form value.
double stack_error(int N) {
    auto o = small_run({}, 1.0, 1.0 / N, {5});
    o.profile.kind = ProfileKind::ExactLinear;
    auto res = run_radial(o);
    const auto& sl = res.slices.at(0);
    double worst = 0, scale = 0;
    for (const auto& n : sl.nodes) {
        if (n.r <= 0 || std::lround(n.r * 8) != n.r * 8) continue;
        LorentzStack st = lorentz_stack(n, 2);
        Jet ex = exact_linear_jet(ConePoint::make(n.t, {n.r, 0, 0}), 3);
        FrameContext ctx(ex.base(), 3);
        for (std::size_t w = 0; w < st.words.size(); ++w) {
            double v = apply_word(st.words[w], ex, ctx).value();
            worst = std::max(worst, std::abs(v - st.values[w]));
            scale = std::max(scale, std::abs(v));
        }
        EXPECT_EQ(st.rotation, 0.0);
    }
    return worst / scale;
}

/// The same slices with tables replaced by the closed form.
std::vector<HyperboloidSlice> closed_form_slices(std::vector<HyperboloidSlice> slices) {
    for (auto& sl : slices)
        for (auto& n : sl.nodes) {
            if (n.r <= 0) continue;
            Jet j = exact_linear_jet(ConePoint::make(n.t, {n.r, 0, 0}), 1);
            n.d[kU] = j.value();
            n.d[kV] = j.partial({1, 0, 0, 0});
            n.d[kUr] = j.partial({0, 1, 0, 0});
        }
    return slices;
}

}  // namespace

TEST(Boosts, StackConvergesToClosedFormJets) {
    double e1 = stack_error(100), e2 = stack_error(200);
    EXPECT_LT(e1, 1e-3);
    EXPECT_GT(e1 / e2, 10.0);
}

TEST(Decay, FitsMatchClosedForm) {
    auto o = small_run({}, 1.0, 1.0 / 100, slice_times(4, 20, 2));
    o.profile.kind = ProfileKind::ExactLinear;
    auto res = run_radial(o);
    DecayFit f = decay_profile(res.slices), g = decay_profile(closed_form_slices(res.slices));
    EXPECT_NEAR(f.slope_u, g.slope_u, 1e-3);
    EXPECT_NEAR(f.slope_dsu, g.slope_dsu, 5e-3);
    EXPECT_NEAR(f.slope_dau, g.slope_dau, 5e-3);
    // a free wave is bounded in every weighted norm
    EXPECT_LE(f.slope_u, 0.05);
    EXPECT_LE(f.slope_dsu, 0.05);
    EXPECT_LE(f.slope_dau, 0.05);
    EXPECT_THROW(decay_profile(res.slices, 4, 6), Error);
}

TEST(Bootstrap, ZeroSolutionNeverFlagged) {
    auto res = run_radial(small_run({1, 0, -1, 0}, 0.0, 1.0 / 50, {2, 3, 4}));
    BootstrapLedger L;
    L.eps = 1e-3;
    L.C0 = 1;
    L.C1 = 10;
    for (const auto& sl : res.slices) L = bootstrap_monitor(L, sl.s, word_norms(slice_source(sl), 2, 1));
    EXPECT_FALSE(L.first_violation.has_value());
    for (const auto& [s, v] : L.sums) EXPECT_EQ(v, 0.0);
}

TEST(Bootstrap, FlagsFirstExcess) {
    WordNorms big;
    big.words = {Word{}};
    big.energy = {4.0};
    BootstrapLedger L;
    L.eps = 1;
    L.C1 = 1;
    L = bootstrap_monitor(L, 3, big);
    L = bootstrap_monitor(L, 4, big);
    ASSERT_TRUE(L.first_violation.has_value());
    EXPECT_EQ(*L.first_violation, 3.0);
}
