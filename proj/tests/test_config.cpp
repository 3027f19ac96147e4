#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hyperconf/scenarios.hpp"

using namespace hyperconf;

namespace {

RunConfig parse(const std::string& text, const std::filesystem::path& base = {}) {
    std::istringstream in(text);
    return parse_run_config(in, base);
}

ErrorKind kind_of(const std::string& text) {
    try {
        parse(text);
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error for: " << text;
    return ErrorKind::Degenerate;
}

}  // namespace

TEST(Config, ParsesKeysCommentsAndFractions) {
    RunConfig c = parse(
        "# null run\n"
        "eps = 1e-3   # amplitude\n"
        "grid.dr = 1/200\n"
        "time.smax = 24\n"
        "output.stride = 0.5\n"
        "bootstrap.C1overC0 = 12\n"
        "structure.eps_s = 0.1\n"
        "profile.kind = gaussian\n"
        "profile.width = 0.1\n"
        "profile.center = 0.25\n"
        "profile.velocity = zero\n"
        "forcing = bump\n");
    EXPECT_DOUBLE_EQ(c.eps, 1e-3);
    EXPECT_DOUBLE_EQ(c.dr, 1.0 / 200);
    EXPECT_DOUBLE_EQ(c.smax, 24);
    EXPECT_DOUBLE_EQ(c.slice_ds, 0.5);
    EXPECT_DOUBLE_EQ(c.C1_over_C0, 12);
    EXPECT_DOUBLE_EQ(c.eps_s, 0.1);
    EXPECT_EQ(c.profile.kind, ProfileKind::Gaussian);
    EXPECT_EQ(c.profile.velocity, VelocityMode::Zero);
    EXPECT_EQ(c.forcing, "bump");
    EXPECT_EQ(c.entries.size(), 11u);
}

TEST(Config, Errors) {
    EXPECT_EQ(kind_of(""), ErrorKind::ParseError);
    EXPECT_EQ(kind_of("# only a comment\n"), ErrorKind::ParseError);
    EXPECT_EQ(kind_of("eps 1e-3\n"), ErrorKind::ParseError);
    EXPECT_EQ(kind_of("eps =\n"), ErrorKind::ParseError);
    EXPECT_EQ(kind_of("colour = red\n"), ErrorKind::ParseError);
    EXPECT_EQ(kind_of("eps = small\n"), ErrorKind::ParseError);
    EXPECT_EQ(kind_of("eps = 1/0\n"), ErrorKind::ParseError);
    EXPECT_EQ(kind_of("grid.dr = 0.5\n"), ErrorKind::ParseError);
    EXPECT_EQ(kind_of("time.smax = 1\n"), ErrorKind::ParseError);
    EXPECT_EQ(kind_of("bootstrap.C1overC0 = 1\n"), ErrorKind::ParseError);
    EXPECT_EQ(kind_of("profile.kind = square\n"), ErrorKind::ParseError);
    EXPECT_EQ(kind_of("profile.kind = file\n"), ErrorKind::ParseError);
    EXPECT_EQ(kind_of("profile.radius = 0.8\n"), ErrorKind::SupportViolation);
    EXPECT_EQ(kind_of("profile.file = /nonexistent/profile.txt\n"), ErrorKind::NotFound);
    EXPECT_EQ(kind_of("form.file = /nonexistent/q.form\n"), ErrorKind::NotFound);
    try {
        load_run_config("/nonexistent/run.conf");
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NotFound);
    }
}

TEST(Config, FormFilesResolveRelativeToConfig) {
    RunConfig c = load_run_config(std::string(HYPERCONF_CONFIGS) + "/e4.conf");
    EXPECT_EQ(c.form.A, 1);
    EXPECT_EQ(c.form.B, 0);
    EXPECT_EQ(c.form.C, 0);
    EXPECT_EQ(c.null_form.A, 1);
    EXPECT_EQ(c.null_form.B, -1);
    EXPECT_TRUE(is_null(c.null_form.cubic()).null);
    EXPECT_FALSE(is_null(c.form.cubic()).null);
    RunConfig n = load_run_config(std::string(HYPERCONF_CONFIGS) + "/e3.conf");
    EXPECT_EQ(n.form.C, -1);
    EXPECT_TRUE(is_null(n.form.cubic()).null);
}

TEST(Config, NonRadialFormRejected) {
    auto dir = std::filesystem::temp_directory_path();
    {
        std::ofstream f(dir / "hyperconf_skew.form");
        f << "Q 0 1 2 1\n";
    }
    try {
        parse("form.file = hyperconf_skew.form\n", dir);
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::FormNotRadial);
    }
    std::filesystem::remove(dir / "hyperconf_skew.form");
}

TEST(Config, BundledFilesMatchBuiltInDefaults) {
    for (const auto& id : scenario_ids()) {
        std::string file = std::string(HYPERCONF_CONFIGS) + "/e" + id.substr(1, 1) + ".conf";
        RunConfig d = default_config(id);
        RunConfig c = load_run_config(file, d);
        EXPECT_DOUBLE_EQ(c.eps, d.eps) << id;
        EXPECT_DOUBLE_EQ(c.dr, d.dr) << id;
        EXPECT_DOUBLE_EQ(c.smax, d.smax) << id;
        EXPECT_DOUBLE_EQ(c.slice_ds, d.slice_ds) << id;
        EXPECT_EQ(c.profile.kind, d.profile.kind) << id;
        EXPECT_EQ(c.forcing, d.forcing) << id;
        EXPECT_EQ(c.form.A, d.form.A) << id;
        EXPECT_EQ(c.form.B, d.form.B) << id;
        EXPECT_EQ(c.form.C, d.form.C) << id;
    }
}

TEST(Config, HashIsCanonical) {
    RunConfig a = parse("eps = 1e-3\ngrid.dr = 1/100\n");
    RunConfig b = parse("# reordered\ngrid.dr = 1/100\n\n  eps   =   1e-3 \n");
    RunConfig c = parse("eps = 2e-3\ngrid.dr = 1/100\n");
    EXPECT_EQ(a.hash(), b.hash());
    EXPECT_NE(a.hash(), c.hash());
    EXPECT_EQ(a.hash().size(), 16u);
    EXPECT_EQ(a.to_json()["grid.dr"], "1/100");
}

TEST(Config, RunOptionsFollowConfig) {
    RunConfig c = parse("time.smax = 6\noutput.stride = 2\nforcing = bump\neps = 0.01\n");
    RunOptions o = run_options(c);
    EXPECT_EQ(o.slices, (std::vector<double>{2, 4, 6}));
    ASSERT_TRUE(static_cast<bool>(o.forcing));
    EXPECT_GT(std::abs(o.forcing(3.0, 0.0)), 0.0);
    EXPECT_EQ(o.forcing(3.0, 0.6), 0.0);
    EXPECT_EQ(o.forcing(4.0, 0.0), 0.0);
    RunConfig tight = parse("time.smax = 20\ngrid.rmax = 10\n");
    EXPECT_THROW(run_options(tight), Error);
}
