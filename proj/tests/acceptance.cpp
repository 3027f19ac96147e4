// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <cmath>
#include <cstdio>
#include <iostream>

#include "hyperconf/scenarios.hpp"

using namespace hyperconf;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    if (!pass) ++failures;
    std::printf("[%s] %2d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
}

const Check* find_check(const ScenarioOutput& r, const std::string& prefix) {
    for (const auto& c : r.checks)
        if (c.name.rfind(prefix, 0) == 0) return &c;
    return nullptr;
}

bool check_passed(const ScenarioOutput& r, const std::string& prefix, std::string& detail) {
    const Check* c = find_check(r, prefix);
    detail = c ? c->detail : "missing check '" + prefix + "'";
    return c && c->pass;
}

struct Timed {
    ScenarioOutput out;
    double seconds = 0;
};

Timed run_timed(const std::string& id) {
    ScenarioOptions so;
    so.cfg = default_config(id);
    auto t0 = std::chrono::steady_clock::now();
    Timed t;
    t.out = run_scenario(id, so);
    t.seconds = seconds_since(t0);
    return t;
}

/// Null run at dr = 1/400 on s = 4 * 2^{k/2} up to 32; M_g per slice with a node stride of 4.
struct MgRun {
    std::vector<double> s, Mg;
    NormRatios ratios;
    double seconds = 0;
    bool blew_up = false;
};

MgRun mg_run() {
    MgRun out;
    auto t0 = std::chrono::steady_clock::now();
    RunOptions o;
    o.form = RadialForm{1, 0, -1, 0};
    o.eps = 1e-3;
    o.dr = 1.0 / 400;
    for (int k = 0; k <= 6; ++k) o.slices.push_back(4.0 * std::pow(2.0, k / 2.0));
    o.keep_slices = false;
    o.on_slice = [&](const HyperboloidSlice& sl) {
        EnergyReport e = flat_conformal_energy(sl);
        out.ratios.u_over_r = std::max(out.ratios.u_over_r, e.ratio_u_over_r());
        out.ratios.dsu = std::max(out.ratios.dsu, e.ratio_dsu());
        out.s.push_back(sl.s);
        out.Mg.push_back(mg_measure(sl, induced_metric(sl), 4));
    };
    RunResult r = run_radial(o);
    out.blew_up = r.blew_up;
    out.seconds = seconds_since(t0);
    return out;
}

}  // namespace

int main() {
    std::printf("acceptance: %d worker thread(s)\n", thread_count());

    // 1. identity suite
    {
        Timed e6 = run_timed("E6-identity-suite");
        report(1, "identity suite (E6)", e6.out.pass() && e6.seconds <= 60,
               e6.out.summary.at(0) + ", " + fmt(e6.seconds, 3) + " s (limit 60 s)");
    }

    // 2. flat calibration
    {
        double dev = flat_calibration_deviation(sample_cone_points(100, 2, 10, 1));
        report(2, "flat calibration", dev <= 1e-12, "max deviation " + fmt(dev, 3) + " (limit 1e-12)");
    }

    // 3. conservation
    Timed e1 = run_timed("E1-conservation");
    {
        std::string d1, d2;
        bool a = check_passed(e1.out, "conservation drift", d1);
        bool b = check_passed(e1.out, "drift ratio", d2);
        report(3, "conservation (E1)", a && b && e1.seconds <= 120,
               d1 + "; " + d2 + "; " + fmt(e1.seconds, 3) + " s (limit 120 s)");
    }

    Timed e2 = run_timed("E2-forced-inequality");
    Timed e3 = run_timed("E3-null-decay");
    Timed e4 = run_timed("E4-contrast");
    Timed e5 = run_timed("E5-bootstrap");
    MgRun mg = mg_run();

    // 4. norm-control constants on every run
    {
        double a = mg.ratios.u_over_r, b = mg.ratios.dsu;
        bool ok = true;
        for (const Timed* t : {&e1, &e2, &e3, &e4, &e5}) {
            std::string d;
            ok = check_passed(t->out, "norm ||(s/r)u||", d) && ok;
            ok = check_passed(t->out, "norm ||(s^2/t)", d) && ok;
            a = std::max(a, t->out.results.value("max_ratio_u_over_r", 0.0));
            b = std::max(b, t->out.results.value("max_ratio_dsu", 0.0));
        }
        ok = ok && a <= 2.0 && b <= 7.0;
        report(4, "norm-control constants", ok,
               "max ||(s/r)u||/E^1/2 = " + fmt(a) + " (<= 2), max ||(s^2/t)dbar_s u||/E^1/2 = " + fmt(b) +
                   " (<= 7) over E1-E5 and the M_g run");
    }

    // 5. Hardy
    {
        double worst = 0;
        for (const auto& c : hardy_cases()) worst = std::max(worst, hardy_check(c.w, c.dw, c.rmax, 8000).ratio);
        report(5, "Hardy inequality", worst <= 1.0, "max ratio " + fmt(worst) + " over 10 functions (<= 1)");
    }

    // 6. energy inequalities
    {
        std::string d1, d2;
        bool a = check_passed(e2.out, "energy inequality slack", d1);
        bool b = check_passed(e3.out, "curved estimate slack", d2);
        report(6, "energy inequalities (E2, E3)", a && b, "forced: " + d1 + "; null curved: " + d2);
    }

    // 7. null bounds
    {
        NullBoundsCheck c = null_bounds_check();
        bool a = std::abs(c.null_sup_small - 1) <= 1e-12 && std::abs(c.null_sup_large - 1) <= 1e-12;
        double g = c.q000_growth / c.ts_growth_squared;
        bool b = std::abs(g - 1) <= 0.05;
        double tr = c.t00_large / c.t00_small;
        bool t = std::isfinite(c.t00_small) && std::isfinite(c.t00_large) && std::abs(tr - 1) <= 0.05;
        report(7, "null bounds", a && b && t,
               "null sup " + fmt(c.null_sup_small, 16) + ", " + fmt(c.null_sup_large, 16) + "; Q000 growth / (t/s)^2 growth " +
                   fmt(g, 5) + "; T00 sup " + fmt(c.t00_small, 5) + " -> " + fmt(c.t00_large, 5));
    }

    // 8. decay
    {
        std::string d;
        bool ok = check_passed(e3.out, "decay slopes", d);
        report(8, "decay (E3)", ok && e3.seconds <= 600, d + "; " + fmt(e3.seconds, 3) + " s (limit 600 s)");
    }

    // 9. M_g scaling
    {
        if (mg.blew_up || mg.s.size() < 2) {
            report(9, "M_g scaling", false, "null run did not reach s = 32");
        } else {
            InverseSquareFit f = inverse_square_fit(mg.s, mg.Mg);
            std::string series;
            for (std::size_t k = 0; k < mg.s.size(); ++k)
                series += (k ? ", " : "") + fmt(mg.s[k], 3) + ":" + fmt(mg.s[k] * mg.s[k] * mg.Mg[k], 3);
            report(9, "M_g scaling", f.within_factor2,
                   "fitted exponent " + fmt(f.slope, 3) + ", s^2 M_g max/min " + fmt(f.spread, 3) +
                       " (factor-2 band needs <= 4); s:s^2 M_g = " + series + "; " + fmt(mg.seconds, 3) + " s");
        }
    }

    // 10. contrast and bootstrap
    {
        std::string d1, d2, d3;
        bool a = check_passed(e4.out, "non-null form has a finite", d1);
        bool b = check_passed(e4.out, "null form survives", d2);
        bool c = check_passed(e5.out, "bootstrap monitor", d3);
        report(10, "contrast (E4) and bootstrap (E5)", a && b && c,
               d1 + "; null form at 10x: " + d2 + "; bootstrap up to s = " + fmt(default_config("E5-bootstrap").smax) +
                   ": " + d3);
    }

    // 11. Sobolev constant
    {
        bool ok = true;
        double worst = 0, lo = 1e300, hi = 0;
        std::string series;
        for (double delta : {1.2, 0.8, 0.5, 0.3, 0.2}) {
            double c1 = sobolev_measure(delta, 40), c2 = sobolev_measure(delta, 80);
            double change = std::abs(c1 - c2) / c2;
            worst = std::max(worst, change);
            ok = ok && change <= 0.10 && std::isfinite(c2) && c2 > 0;
            lo = std::min(lo, c2);
            hi = std::max(hi, c2);
            series += (series.empty() ? "" : ", ") + fmt(delta, 2) + ":" + fmt(c2, 4);
        }
        report(11, "Sobolev constant", ok,
               "max change under refinement " + fmt(100 * worst, 3) + "% (<= 10%); width:C = " + series +
                   "; bounded by " + fmt(hi, 4) + ", max/min over widths " + fmt(hi / lo, 3));
    }

    std::printf("acceptance: %d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
