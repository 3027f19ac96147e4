#pragma once

// Reproducible experiments built from the solver and energy modules, and the
// standalone checks the acceptance runner needs.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "energy.hpp"
#include "forms.hpp"
#include "identities.hpp"
#include "solver.hpp"

namespace hyperconf {

// ---------------------------------------------------------------- threads

/// HYPERCONF_THREADS, else the hardware concurrency.
inline int thread_count() {
    if (const char* e = std::getenv("HYPERCONF_THREADS")) {
        int n = std::atoi(e);
        if (n > 0) return n;
    }
    unsigned h = std::thread::hardware_concurrency();
    return h ? static_cast<int>(h) : 1;
}

/// f(i) for i in [0, n) on a small pool; the first exception is rethrown.
template <class F>
void parallel_for(std::size_t n, F&& f, int threads = thread_count()) {
    threads = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex m;
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k)
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next++;
                if (i >= n) break;
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(m);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- outputs

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ScenarioOutput {
    std::string id;
    std::vector<Check> checks;
    std::vector<std::string> summary;
    std::map<std::string, std::string> files;  // file name -> contents
    nlohmann::json results = nlohmann::json::object();
    nlohmann::json detectors = nlohmann::json::array();
    nlohmann::json timings = nlohmann::json::object();

    bool pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
    void check(const std::string& name, bool ok, const std::string& detail) { checks.push_back({name, ok, detail}); }
};

struct ScenarioOptions {
    RunConfig cfg;
    std::uint64_t seed = 1;
    double tolerance_scale = 1.0;
    int threads = thread_count();
};

inline std::string fmt(double v, int prec = 4) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

inline nlohmann::json detector_json(const std::string& run, const RunResult& r) {
    return {{"run", run},
            {"blew_up", r.blew_up},
            {"reason", r.blew_up ? r.reason : "none"},
            {"t_blowup", r.blew_up ? nlohmann::json(r.t_blowup) : nlohmann::json(nullptr)},
            {"t_final", r.t_final},
            {"steps", r.steps},
            {"leak", r.leak}};
}

// ------------------------------------------------------------ run helpers

/// Space-time bump source, supported in t in [2.5, 3.5], r <= 1/2.
inline RadialForcing bump_forcing(double amplitude) {
    return [amplitude](double t, double r) {
        return amplitude * detail::poly_bump3((t - 3.0) / 0.5)[0] * detail::poly_bump3(r / 0.5)[0];
    };
}

inline RunOptions run_options(const RunConfig& cfg) {
    RunOptions o;
    o.form = cfg.form;
    o.profile = cfg.profile;
    o.eps = cfg.eps;
    o.dr = cfg.dr;
    if (cfg.forcing == "bump") o.forcing = bump_forcing(10.0 * cfg.eps);
    o.slices = slice_times(2.0, cfg.smax, cfg.slice_ds);
    if (cfg.rmax > 0) {
        double need = std::sqrt(cfg.smax * cfg.smax + slice_rmax(cfg.smax) * slice_rmax(cfg.smax));
        if (cfg.rmax < need)
            throw Error(ErrorKind::ParseError, "grid.rmax = " + fmt(cfg.rmax) + " cannot hold hyperboloids up to s = " +
                                                   fmt(cfg.smax) + " (needs " + fmt(need) + ")");
    }
    return o;
}

struct SliceDiagnostics {
    EnergyReport flat;
    SourceNorms source;
    std::optional<CurvedReport> curved;
};

/// Flat energy and source norms on every slice, plus the curved energy when asked; the curved
/// integrals use a node stride that keeps each slice near max_nodes samples.
inline std::vector<SliceDiagnostics> diagnose(const std::vector<HyperboloidSlice>& slices, bool curved, double eps_s,
                                              int threads, int max_nodes = 6000) {
    std::vector<SliceDiagnostics> out(slices.size());
    parallel_for(
        slices.size(),
        [&](std::size_t k) {
            const auto& sl = slices[k];
            out[k].flat = flat_conformal_energy(sl);
            out[k].source = source_norms(sl);
            if (curved) {
                CurvedOptions co;
                co.eps_s = eps_s;
                co.throw_on_violation = false;
                co.stride = std::max(1, (sl.total + max_nodes - 1) / max_nodes);
                out[k].curved = curved_conformal_energy(sl, induced_metric(sl), co);
                out[k].flat.E_curved = out[k].curved->E_curved;
            }
        },
        threads);
    return out;
}

struct NormRatios {
    double u_over_r = 0, dsu = 0;
};

inline NormRatios max_norm_ratios(const std::vector<SliceDiagnostics>& d) {
    NormRatios m;
    for (const auto& x : d) {
        m.u_over_r = std::max(m.u_over_r, x.flat.ratio_u_over_r());
        m.dsu = std::max(m.dsu, x.flat.ratio_dsu());
    }
    return m;
}

inline void norm_checks(ScenarioOutput& out, const std::vector<SliceDiagnostics>& d) {
    NormRatios m = max_norm_ratios(d);
    out.results["max_ratio_u_over_r"] = m.u_over_r;
    out.results["max_ratio_dsu"] = m.dsu;
    out.check("norm ||(s/r)u|| <= 2 E^1/2", m.u_over_r <= 2.0, "max ratio " + fmt(m.u_over_r));
    out.check("norm ||(s^2/t)dbar_s u|| <= 7 E^1/2", m.dsu <= 7.0, "max ratio " + fmt(m.dsu));
}

inline std::string trajectory_csv(const std::vector<SliceDiagnostics>& d, const SlackSeries* slack = nullptr) {
    std::vector<TrajectoryRow> rows;
    for (std::size_t k = 0; k < d.size(); ++k) {
        TrajectoryRow r;
        r.s = d[k].flat.s;
        r.E_flat = d[k].flat.E_flat;
        r.norm_u_over_r = d[k].flat.norm_u_over_r;
        r.norm_dsu = d[k].flat.norm_dsu;
        r.norm_da = d[k].flat.norm_da;
        if (d[k].curved) {
            r.E_curved = d[k].curved->E_curved;
            r.Mg = d[k].curved->Mg;
            r.kappa = d[k].curved->kappa;
        }
        if (slack) r.slack = slack->slack[k];
        rows.push_back(r);
    }
    std::ostringstream os;
    write_trajectory_csv(os, rows);
    return os.str();
}

// ------------------------------------------------------------ power fits

/// M(s) against C s^{-2}: C is the geometric mean of s^2 M, spread = max/min of s^2 M.
struct InverseSquareFit {
    double slope = 0, C = 0, spread = 0;
    bool within_factor2 = false;
};

inline InverseSquareFit inverse_square_fit(const std::vector<double>& s, const std::vector<double>& M) {
    InverseSquareFit f;
    if (s.size() < 2) throw Error(ErrorKind::Degenerate, "need at least two values");
    std::vector<double> ls, lm;
    double lo = std::numeric_limits<double>::infinity(), hi = 0, logsum = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (!(M[k] > 0)) throw Error(ErrorKind::Degenerate, "non-positive value in power fit");
        ls.push_back(std::log(s[k]));
        lm.push_back(std::log(M[k]));
        double w = s[k] * s[k] * M[k];
        lo = std::min(lo, w);
        hi = std::max(hi, w);
        logsum += std::log(w);
    }
    f.slope = ls_slope(ls, lm);
    f.C = std::exp(logsum / static_cast<double>(s.size()));
    f.spread = hi / lo;
    f.within_factor2 = hi <= 2 * f.C && lo >= f.C / 2;
    return f;
}

// ================================================================ E1

inline ScenarioOutput scenario_conservation(const ScenarioOptions& so) {
    ScenarioOutput out;
    out.id = "E1-conservation";
    RunConfig cfg = so.cfg;
    cfg.profile.kind = ProfileKind::ExactLinear;
    std::vector<std::vector<SliceDiagnostics>> diags;
    std::vector<double> drift;
    double u_err = 0;
    for (double dr : {cfg.dr, cfg.dr / 2}) {
        RunConfig c = cfg;
        c.dr = dr;
        RunOptions o = run_options(c);
        auto t0 = std::chrono::steady_clock::now();
        RunResult res = run_radial(o);
        std::string tag = "dr=" + fmt(dr, 6);
        out.timings["run " + tag] = res.seconds;
        out.detectors.push_back(detector_json(tag, res));
        if (res.blew_up) throw Error(ErrorKind::Degenerate, "linear run reported blow-up: " + res.reason);
        diags.push_back(diagnose(res.slices, false, cfg.eps_s, so.threads));
        out.timings["diagnostics " + tag] = seconds_since(t0) - res.seconds;
        double d = 0;
        const double E0 = diags.back().front().flat.E_flat;
        for (const auto& x : diags.back()) d = std::max(d, std::abs(x.flat.E_flat - E0) / E0);
        drift.push_back(d);
        if (dr == cfg.dr / 2) {
            for (const auto& sl : res.slices)
                for (const auto& n : sl.nodes)
                    u_err = std::max(u_err, std::abs(n.d[kU] - c.eps * c.profile.exact_linear(n.t, n.r)[0]));
        }
    }
    const auto& fine = diags[1];
    const double ratio = drift[0] / drift[1];
    double cross = 0;
    for (const auto& x : fine) cross = std::max(cross, x.flat.cross_check());
    out.results["drift"] = {{"dr", cfg.dr}, {"value", drift[0]}};
    out.results["drift_fine"] = {{"dr", cfg.dr / 2}, {"value", drift[1]}};
    out.results["drift_ratio"] = ratio;
    out.results["max_u_error_fine"] = u_err;
    out.results["display_cross_check"] = cross;
    out.check("conservation drift <= 1% at dr = " + fmt(cfg.dr / 2, 6), drift[1] <= 0.01, "drift " + fmt(drift[1]));
    out.check("drift ratio under halving near 16", ratio >= 10.0 && ratio <= 24.0, "ratio " + fmt(ratio));
    out.check("display forms agree", cross <= 1e-10 * so.tolerance_scale, "max relative gap " + fmt(cross));
    std::vector<SliceDiagnostics> all = diags[0];
    all.insert(all.end(), fine.begin(), fine.end());
    norm_checks(out, all);
    out.summary.push_back("conservation: drift " + fmt(drift[0]) + " at dr=" + fmt(cfg.dr, 6) + ", " + fmt(drift[1]) +
                          " at dr=" + fmt(cfg.dr / 2, 6) + ", ratio " + fmt(ratio, 3));
    std::ostringstream cs;
    cs << "s,E_coarse,E_fine,drift_coarse,drift_fine\n";
    for (std::size_t k = 0; k < fine.size() && k < diags[0].size(); ++k) {
        double e0 = diags[0][k].flat.E_flat, e1 = fine[k].flat.E_flat;
        cs << format_g17(fine[k].flat.s) << ',' << format_g17(e0) << ',' << format_g17(e1) << ','
           << format_g17((e0 - diags[0][0].flat.E_flat) / diags[0][0].flat.E_flat) << ','
           << format_g17((e1 - fine[0].flat.E_flat) / fine[0].flat.E_flat) << '\n';
    }
    out.files["conservation.csv"] = cs.str();
    out.files["trajectory.csv"] = trajectory_csv(fine);
    return out;
}

// ================================================================ E2

inline ScenarioOutput scenario_forced(const ScenarioOptions& so) {
    ScenarioOutput out;
    out.id = "E2-forced-inequality";
    RunOptions o = run_options(so.cfg);
    if (!o.forcing) o.forcing = bump_forcing(10.0 * so.cfg.eps);
    auto t0 = std::chrono::steady_clock::now();
    RunResult res = run_radial(o);
    out.timings["run"] = res.seconds;
    out.detectors.push_back(detector_json("forced", res));
    if (res.blew_up) throw Error(ErrorKind::Degenerate, "forced run reported blow-up: " + res.reason);
    auto d = diagnose(res.slices, false, so.cfg.eps_s, so.threads);
    out.timings["diagnostics"] = seconds_since(t0) - res.seconds;
    std::vector<EnergyReport> traj;
    std::vector<double> box;
    for (const auto& x : d) {
        traj.push_back(x.flat);
        box.push_back(x.source.box);
    }
    SlackSeries sl = energy_inequality_slack(traj, box, so.tolerance_scale);
    double min_slack = *std::min_element(sl.slack.begin(), sl.slack.end());
    out.results["min_slack"] = min_slack;
    out.results["worst_slack_plus_tolerance"] = sl.worst;
    out.check("energy inequality slack >= -tolerance", sl.ok(),
              "min slack " + fmt(min_slack) + ", min(slack + tol) " + fmt(sl.worst));
    norm_checks(out, d);
    out.summary.push_back("forced wave: min slack " + fmt(min_slack) + " over s in [2, " + fmt(so.cfg.smax) + "]");
    out.files["trajectory.csv"] = trajectory_csv(d, &sl);
    return out;
}

// ================================================================ E3

struct NullRun {
    RunResult run;
    std::vector<SliceDiagnostics> diag;
};

inline ScenarioOutput scenario_null_decay(const ScenarioOptions& so, NullRun* keep = nullptr) {
    ScenarioOutput out;
    out.id = "E3-null-decay";
    const RunConfig& cfg = so.cfg;
    if (!is_null(cfg.form.cubic()).null)
        throw Error(ErrorKind::ParseError, "the decay scenario needs a null form (form.file)");
    RunOptions o = run_options(cfg);
    auto t0 = std::chrono::steady_clock::now();
    RunResult res = run_radial(o);
    out.timings["run"] = res.seconds;
    out.detectors.push_back(detector_json("null", res));
    out.check("no blow-up", !res.blew_up, res.blew_up ? res.reason : "reached s = " + fmt(cfg.smax));
    if (res.blew_up) return out;
    auto d = diagnose(res.slices, true, cfg.eps_s, so.threads);
    out.timings["diagnostics"] = seconds_since(t0) - res.seconds;

    // decay
    DecayFit fit = decay_profile(res.slices, 4.0, cfg.smax);
    out.results["slopes"] = {{"u", fit.slope_u}, {"dsu", fit.slope_dsu}, {"dau", fit.slope_dau}};
    out.check("decay slopes <= 0.1", fit.slope_u <= 0.1 && fit.slope_dsu <= 0.1 && fit.slope_dau <= 0.1,
              "slopes " + fmt(fit.slope_u) + ", " + fmt(fit.slope_dsu) + ", " + fmt(fit.slope_dau));
    std::ostringstream ds;
    ds << "s,supW_u,supW_dsu,supW_dau\n";
    for (std::size_t k = 0; k < fit.s.size(); ++k)
        ds << format_g17(fit.s[k]) << ',' << format_g17(fit.sup_u[k]) << ',' << format_g17(fit.sup_dsu[k]) << ','
           << format_g17(fit.sup_dau[k]) << '\n';
    out.files["decay.csv"] = ds.str();

    // curved energy, structure conditions and the curved estimate
    std::vector<EnergyReport> traj;
    std::vector<double> op, mg, kap, s_mg, v_mg;
    double worst_structure = 0, kappa_max = 1, kappa_held = 1;
    std::vector<double> violated;
    for (const auto& x : d) {
        traj.push_back(x.flat);
        op.push_back(x.source.curved);
        mg.push_back(x.curved->Mg);
        kap.push_back(x.curved->kappa);
        worst_structure = std::max(worst_structure, x.curved->worst_structure_ratio);
        kappa_max = std::max(kappa_max, x.curved->kappa);
        if (x.curved->worst_structure_ratio <= 1.0) kappa_held = std::max(kappa_held, x.curved->kappa);
        else violated.push_back(x.flat.s);
        if (x.flat.s >= 4.0 - 1e-9 && x.flat.s <= 32.0 + 1e-9) {
            s_mg.push_back(x.flat.s);
            v_mg.push_back(x.curved->Mg);
        }
    }
    SlackSeries sl = curved_energy_slack(traj, op, mg, kap, so.tolerance_scale);
    out.results["kappa_max"] = kappa_max;
    out.results["structure_ratio_max"] = worst_structure;
    out.results["curved_min_slack"] = *std::min_element(sl.slack.begin(), sl.slack.end());
    out.results["structure_violated_at"] = violated;
    std::string where = violated.empty() ? "none" : "s = " + fmt(violated.front());
    for (std::size_t k = 1; k < violated.size(); ++k) where += ", " + fmt(violated[k]);
    out.summary.push_back("structure conditions: max value/bound " + fmt(worst_structure) + ", violated on " + where);
    out.check("kappa <= 1.25 where the structure conditions hold", kappa_held <= 1.25, "max kappa " + fmt(kappa_held));
    out.check("curved estimate slack >= -tolerance", sl.ok(), "min(slack + tol) " + fmt(sl.worst));
    if (s_mg.size() >= 2) {
        InverseSquareFit f = inverse_square_fit(s_mg, v_mg);
        out.results["Mg_fit"] = {{"slope", f.slope}, {"C", f.C}, {"spread", f.spread}};
        out.summary.push_back("M_g on [4, 32]: fitted exponent " + fmt(f.slope, 3) + ", max/min of s^2 M_g " +
                              fmt(f.spread, 3) + (f.within_factor2 ? " (within" : " (outside") +
                              " a factor 2 of C s^-2 at this resolution)");
    }
    norm_checks(out, d);
    out.summary.push_back("null decay: slopes " + fmt(fit.slope_u, 3) + " " + fmt(fit.slope_dsu, 3) + " " +
                          fmt(fit.slope_dau, 3) + ", kappa <= " + fmt(kappa_max, 8));
    out.files["trajectory.csv"] = trajectory_csv(d, &sl);
    if (keep) *keep = NullRun{std::move(res), std::move(d)};
    return out;
}

// ================================================================ E4

struct SweepPoint {
    std::string form;
    double amplitude = 0;
    bool blew_up = false;
    std::string reason;
    double t_blowup = 0;
};

inline ScenarioOutput scenario_contrast(const ScenarioOptions& so) {
    ScenarioOutput out;
    out.id = "E4-contrast";
    const RunConfig& cfg = so.cfg;
    if (is_null(cfg.form.cubic()).null) throw Error(ErrorKind::ParseError, "form.file must be non-null for the contrast");
    if (!is_null(cfg.null_form.cubic()).null) throw Error(ErrorKind::ParseError, "contrast.null_form is not null");
    std::vector<SweepPoint> pts;
    NormRatios ratios;
    std::mutex m;
    auto probe = [&](const std::string& name, const RadialForm& form, double amp) {
        RunOptions o = run_options(cfg);
        o.form = form;
        o.eps = amp;
        o.slices = {cfg.smax};
        o.keep_slices = false;
        o.on_slice = [&](const HyperboloidSlice& sl) {
            EnergyReport e = flat_conformal_energy(sl);
            std::lock_guard<std::mutex> lock(m);
            ratios.u_over_r = std::max(ratios.u_over_r, e.ratio_u_over_r());
            ratios.dsu = std::max(ratios.dsu, e.ratio_dsu());
        };
        RunResult r = run_radial(o);
        SweepPoint p{name, amp, r.blew_up, r.blew_up ? r.reason : "none", r.blew_up ? r.t_blowup : r.t_final};
        std::lock_guard<std::mutex> lock(m);
        pts.push_back(p);
        return p;
    };
    auto t0 = std::chrono::steady_clock::now();
    // geometric scan, then bisection on the first bracket
    std::vector<double> grid;
    for (int k = 0; k <= 13; ++k) grid.push_back(1e-3 * std::pow(2.0, k));
    std::vector<SweepPoint> scan(grid.size());
    parallel_for(grid.size(), [&](std::size_t k) { scan[k] = probe("non-null", cfg.form, grid[k]); }, so.threads);
    std::optional<double> threshold;
    std::size_t first = grid.size();
    for (std::size_t k = 0; k < grid.size(); ++k)
        if (scan[k].blew_up) {
            first = k;
            break;
        }
    if (first < grid.size()) {
        double lo = first > 0 ? grid[first - 1] : 0.0, hi = grid[first];
        for (int it = 0; it < 8; ++it) {
            double mid = 0.5 * (lo + hi);
            (probe("non-null", cfg.form, mid).blew_up ? hi : lo) = mid;
        }
        threshold = hi;
    }
    out.timings["sweep"] = seconds_since(t0);
    out.check("non-null form has a finite blow-up threshold", threshold.has_value(),
              threshold ? "threshold " + fmt(*threshold) : "no blow-up up to amplitude " + fmt(grid.back()));
    if (threshold) {
        out.results["threshold"] = *threshold;
        auto t1 = std::chrono::steady_clock::now();
        SweepPoint nul = probe("null", cfg.null_form, 10 * *threshold);
        out.check("null form survives 10x the threshold to s = " + fmt(cfg.smax), !nul.blew_up,
                  nul.blew_up ? "blew up (" + nul.reason + ") at t = " + fmt(nul.t_blowup) : "no blow-up");
        // the quasilinear null form with the same leading coefficient, for reference
        SweepPoint ref = probe("null-quasilinear", RadialForm{1, 0, -1, 0}, 10 * *threshold);
        out.results["null_at_10x"] = {{"blew_up", nul.blew_up}, {"reason", nul.reason}};
        out.results["null_quasilinear_at_10x"] = {{"blew_up", ref.blew_up}, {"reason", ref.reason}};
        out.timings["null runs"] = seconds_since(t1);
        out.summary.push_back("contrast: non-null threshold " + fmt(*threshold) + "; null form at 10x: " +
                              (nul.blew_up ? "blow-up (" + nul.reason + ")" : "no blow-up") +
                              "; quasilinear null form at 10x: " + (ref.blew_up ? "blow-up (" + ref.reason + ")" : "no blow-up"));
    }
    out.results["max_ratio_u_over_r"] = ratios.u_over_r;
    out.results["max_ratio_dsu"] = ratios.dsu;
    out.check("norm ||(s/r)u|| <= 2 E^1/2", ratios.u_over_r <= 2.0, "max ratio " + fmt(ratios.u_over_r));
    out.check("norm ||(s^2/t)dbar_s u|| <= 7 E^1/2", ratios.dsu <= 7.0, "max ratio " + fmt(ratios.dsu));
    std::sort(pts.begin(), pts.end(), [](const SweepPoint& a, const SweepPoint& b) {
        return a.form != b.form ? a.form < b.form : a.amplitude < b.amplitude;
    });
    std::ostringstream os;
    os << "form,amplitude,blew_up,reason,t_end\n";
    for (const auto& p : pts) {
        os << p.form << ',' << format_g17(p.amplitude) << ',' << (p.blew_up ? 1 : 0) << ',' << p.reason << ','
           << format_g17(p.t_blowup) << '\n';
        out.detectors.push_back({{"run", p.form + " eps=" + format_g17(p.amplitude)},
                                 {"blew_up", p.blew_up},
                                 {"reason", p.reason}});
    }
    out.files["sweep.csv"] = os.str();
    return out;
}

// ================================================================ E5

inline ScenarioOutput scenario_bootstrap(const ScenarioOptions& so) {
    ScenarioOutput out;
    out.id = "E5-bootstrap";
    const RunConfig& cfg = so.cfg;
    RunOptions o = run_options(cfg);
    auto t0 = std::chrono::steady_clock::now();
    RunResult res = run_radial(o);
    out.timings["run"] = res.seconds;
    out.detectors.push_back(detector_json("bootstrap", res));
    out.check("no blow-up", !res.blew_up, res.blew_up ? res.reason : "reached s = " + fmt(cfg.smax));
    if (res.blew_up) return out;
    std::vector<WordNorms> W(res.slices.size());
    parallel_for(res.slices.size(), [&](std::size_t k) { W[k] = word_norms(slice_source(res.slices[k]), 2, 1); },
                 so.threads);
    out.timings["word norms"] = seconds_since(t0) - res.seconds;
    norm_checks(out, diagnose(res.slices, false, cfg.eps_s, so.threads));
    BootstrapLedger L;
    L.eps = cfg.eps;
    L.C0 = W.front().energy_root_sum() / cfg.eps;
    L.C1 = cfg.C1_over_C0 * L.C0;
    for (std::size_t k = 0; k < W.size(); ++k) L = bootstrap_monitor(L, res.slices[k].s, W[k]);
    double worst = 0;
    for (const auto& [s, v] : L.sums) worst = std::max(worst, v / (L.C0 * L.eps));
    out.results["C0"] = L.C0;
    out.results["C1"] = L.C1;
    out.results["max_sum_over_C0eps"] = worst;
    out.results["first_violation"] = L.first_violation ? nlohmann::json(*L.first_violation) : nlohmann::json(nullptr);
    out.check("bootstrap monitor flags no violation", !L.first_violation,
              L.first_violation ? "first violation at s = " + fmt(*L.first_violation)
                                : "max sum / (C0 eps) = " + fmt(worst) + " < " + fmt(cfg.C1_over_C0));
    std::ostringstream os;
    os << "s,energy_root_sum,bound\n";
    for (const auto& [s, v] : L.sums) os << format_g17(s) << ',' << format_g17(v) << ',' << format_g17(L.C1 * L.eps) << '\n';
    out.files["bootstrap.csv"] = os.str();
    out.summary.push_back("bootstrap: " + std::to_string(W.front().words.size()) + " words, max sum " + fmt(worst, 4) +
                          " x C0 eps against C1 = " + fmt(cfg.C1_over_C0) + " C0");
    return out;
}

// ================================================================ E6

inline ScenarioOutput scenario_identities(const ScenarioOptions& so) {
    ScenarioOutput out;
    out.id = "E6-identity-suite";
    auto t0 = std::chrono::steady_clock::now();
    const double tol = 1e-9 * so.tolerance_scale;
    auto pts = sample_cone_points(100, 2, 10, so.seed);
    auto cases = identity_cases();
    auto fields = test_field_suite();
    std::vector<std::vector<IdentityResidualReport>> reps(cases.size());
    parallel_for(
        cases.size(),
        [&](std::size_t k) {
            for (const auto& f : fields) reps[k].push_back(sweep_identity(cases[k], f, pts));
        },
        so.threads);
    int passed = 0;
    double worst = 0;
    std::ostringstream os;
    os << "identity,field,max_residual,max_scale,worst_relative\n";
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t k = 0; k < cases.size(); ++k) {
        bool ok = true;
        for (const auto& r : reps[k]) {
            ok = ok && r.pass(tol);
            worst = std::max(worst, r.max_residual / std::max(r.max_scale, 1.0));
            os << r.identity << ',' << r.field << ',' << format_g17(r.max_residual) << ',' << format_g17(r.max_scale)
               << ',' << format_g17(r.worst_relative) << '\n';
            arr.push_back(to_json(r));
        }
        passed += ok;
        out.check("identity " + cases[k].name, ok, ok ? "all fields within tolerance" : "residual above tolerance");
    }
    double secs = seconds_since(t0);
    out.timings["suite"] = secs;
    out.results["identities"] = arr;
    out.results["passed"] = passed;
    out.results["max_scaled_residual"] = worst;
    out.summary.push_back("identities: " + std::to_string(passed) + "/" + std::to_string(cases.size()) +
                          " pass, max_residual <= " + fmt(tol));
    out.files["identities.csv"] = os.str();
    return out;
}

// ======================================================= standalone checks

/// With h = 0: N = 2, L = 2 mbar, the curved multiplier is K and S = T = 0; returns the largest deviation.
inline double flat_calibration_deviation(const std::vector<ConePoint>& pts) {
    double worst = 0;
    const auto fields = test_field_suite();
    for (const auto& p : pts)
        for (const auto& f : fields) {
            Jet u = f.eval(p, 3);
            auto res = curved_multiplier_residual(u, MetricPerturbation::zero(), p);
            const auto& T = res.terms;
            auto fm = frame_matrices(p);
            FrameContext ctx(p, 2);
            double K = apply_field(VectorField::conformal(), u, ctx).value();
            worst = std::max(worst, std::abs(T.N - 2.0));
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) worst = std::max(worst, std::abs(T.L[a][b] - 2 * fm.mbar[a + 1][b + 1]));
            // S and T are products with a factor that vanishes for h = 0; measure that factor
            double grad = 0;
            for (int a = 0; a < 4; ++a) grad += std::abs(u.derivative(a).value());
            const double P = std::abs(T.Ku + T.N * u.value()), scale_S = 1 + P * p.s() * grad,
                         scale_T = 1 + std::abs(u.value()) * (P + p.s() * grad);
            worst = std::max({worst, std::abs(T.Ku - K) / (1 + std::abs(K)), std::abs(T.S) / scale_S,
                              std::abs(T.T) / scale_T});
        }
    return worst;
}

struct HardyCase {
    std::string name;
    std::function<double(double)> w, dw;
    double rmax;
};

/// Ten radial test functions with closed-form derivatives.
inline std::vector<HardyCase> hardy_cases() {
    std::vector<HardyCase> c;
    for (double a : {0.5, 1.0, 2.0})
        c.push_back({"gaussian a=" + fmt(a), [a](double r) { return std::exp(-a * r * r); },
                     [a](double r) { return -2 * a * r * std::exp(-a * r * r); }, 12.0 / std::sqrt(a)});
    for (double k : {1.0, 2.0})
        c.push_back({"r^" + fmt(k) + " gaussian", [k](double r) { return std::pow(r, k) * std::exp(-r * r); },
                     [k](double r) { return (k * std::pow(r, k - 1) - 2 * std::pow(r, k + 1)) * std::exp(-r * r); }, 12.0});
    c.push_back({"1/(1+r^2)^2", [](double r) { return 1 / ((1 + r * r) * (1 + r * r)); },
                 [](double r) { return -4 * r / std::pow(1 + r * r, 3); }, 2000.0});
    c.push_back({"sech", [](double r) { return 1 / std::cosh(r); },
                 [](double r) { return -std::tanh(r) / std::cosh(r); }, 40.0});
    c.push_back({"exp(-r)(1+r)", [](double r) { return std::exp(-r) * (1 + r); },
                 [](double r) { return -r * std::exp(-r); }, 45.0});
    c.push_back({"polynomial bump", [](double r) { return detail::poly_bump3(r)[0]; },
                 [](double r) { return detail::poly_bump3(r)[1]; }, 1.0});
    c.push_back({"shifted gaussian", [](double r) { return std::exp(-(r - 3) * (r - 3)); },
                 [](double r) { return -2 * (r - 3) * std::exp(-(r - 3) * (r - 3)); }, 12.0});
    return c;
}

/// sup (s/t)|Qbar^000| for the null form, growth of the Q^000 profile against (t/s)^2, and |Tbar^00| stability.
struct NullBoundsCheck {
    double null_sup_small = 0, null_sup_large = 0;
    double q000_growth = 0, ts_growth_squared = 0;
    double t00_small = 0, t00_large = 0;
};

inline NullBoundsCheck null_bounds_check() {
    NullBoundsCheck c;
    Region small{2, 10, 16, 19, 0.9}, large{2, 100, 24, 39, 0.99};
    CubicForm nul = CubicForm::minkowski_times({1, 0, 0, 0});
    c.null_sup_small = null_bound_profile(nul, small).sup_main;
    c.null_sup_large = null_bound_profile(nul, large).sup_main;
    auto a = null_bound_profile(CubicForm::time_cubed(), small), b = null_bound_profile(CubicForm::time_cubed(), large);
    c.q000_growth = b.sup_main / a.sup_main;
    double g = b.sup_t_over_s / a.sup_t_over_s;
    c.ts_growth_squared = g * g;
    QuadraticForm T = QuadraticForm::minkowski();
    c.t00_small = null_bound_profile(T, small).sup_main;
    c.t00_large = null_bound_profile(T, large).sup_main;
    return c;
}

/// u = phi(r/delta)(1 + (t - 2)/2) with phi(z) = (1 - z^2)^8.
inline JetField sobolev_test_field(double delta) {
    return [delta](const ConePoint& p, int K) {
        if (p.r() >= delta) return Jet(p, K);
        Jet t = Jet::coordinate(0, p, K);
        Jet r2(p, K);
        for (int a = 1; a <= 3; ++a) r2 += Jet::coordinate(a, p, K) * Jet::coordinate(a, p, K);
        Jet y = 1.0 - r2 / (delta * delta);
        Jet y2 = y * y, y4 = y2 * y2;
        return y4 * y4 * (1.0 + 0.5 * (t - 2.0));
    };
}

inline double sobolev_measure(double delta, int nodes_per_width) {
    return sobolev_constant(field_source(sobolev_test_field(delta), 2.0, delta, delta / nodes_per_width));
}

// ============================================================== dispatch

inline const std::vector<std::string>& scenario_ids() {
    static const std::vector<std::string> ids = {"E1-conservation", "E2-forced-inequality", "E3-null-decay",
                                                 "E4-contrast",     "E5-bootstrap",         "E6-identity-suite"};
    return ids;
}

/// Built-in configuration of each scenario (mirrored by the files in configs/).
inline RunConfig default_config(const std::string& id) {
    RunConfig c;
    if (id == "E1-conservation") {
        c.profile.kind = ProfileKind::ExactLinear;
        c.eps = 1;
        c.dr = 1.0 / 200;
        c.smax = 20;
        c.slice_ds = 1;
    } else if (id == "E2-forced-inequality") {
        c.forcing = "bump";
        c.dr = 1.0 / 100;
        c.smax = 20;
        c.slice_ds = 0.5;
    } else if (id == "E3-null-decay") {
        c.form = RadialForm{1, 0, -1, 0};
        c.dr = 1.0 / 100;
        c.smax = 50;
        c.slice_ds = 2;
    } else if (id == "E4-contrast") {
        c.form = RadialForm{1, 0, 0, 0};
        c.dr = 1.0 / 50;
        c.smax = 50;
    } else if (id == "E5-bootstrap") {
        c.form = RadialForm{1, 0, -1, 0};
        c.dr = 1.0 / 200;
        c.smax = 16;
        c.slice_ds = 1;
    } else if (id != "E6-identity-suite") {
        throw Error(ErrorKind::NotFound, "unknown scenario " + id);
    }
    return c;
}

inline ScenarioOutput run_scenario(const std::string& id, const ScenarioOptions& so) {
    if (id == "E1-conservation") return scenario_conservation(so);
    if (id == "E2-forced-inequality") return scenario_forced(so);
    if (id == "E3-null-decay") return scenario_null_decay(so);
    if (id == "E4-contrast") return scenario_contrast(so);
    if (id == "E5-bootstrap") return scenario_bootstrap(so);
    if (id == "E6-identity-suite") return scenario_identities(so);
    throw Error(ErrorKind::NotFound, "unknown scenario " + id);
}

}  // namespace hyperconf
