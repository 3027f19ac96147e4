#pragma once

// Radially reduced evolution of □u + Q^{abc} d_c u d_a d_b u = F with data on {t = 2},
// captured on hyperboloids as the run proceeds.
//
// The unknown is w = r u on r_j = j dr, odd across the axis. Time stepping is RK4 with
// fourth-order centered differences. Only the window
//     sqrt(t^2 - s_cut^2) - margin <= r <= t - 1 + margin
// is advanced: inside, every node already lies on hyperboloids beyond the last one
// requested; outside, the solution vanishes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "commutators.hpp"
#include "errors.hpp"
#include "forms.hpp"
#include "slice.hpp"

namespace hyperconf {

// ------------------------------------------------------------------ profiles

namespace detail {

/// (1-z^2)^8 on |z| < 1 and its first two derivatives.
inline std::array<double, 3> poly_bump3(double z) {
    if (std::abs(z) >= 1.0) return {0, 0, 0};
    double q = 1.0 - z * z;
    double q6 = q * q * q * q * q * q;
    return {q6 * q * q, -16.0 * z * q6 * q, -16.0 * q6 * q + 224.0 * z * z * q6};
}

/// 1 on r <= a, 0 on r >= b, smooth in between.
inline double cutoff(double r, double a, double b) {
    auto psi = [](double x) { return x > 0 ? std::exp(-1.0 / x) : 0.0; };
    double p = psi(b - r), q = psi(r - a);
    return p / (p + q);
}

}  // namespace detail

enum class ProfileKind { Bump, Gaussian, ExactLinear, File };
enum class VelocityMode { Outgoing, Zero };

/// Initial data family on {t = 2}; all kinds are supported in r <= 1/2.
struct Profile {
    ProfileKind kind = ProfileKind::Bump;
    double amplitude = 1.0;
    double width = 0.1;    // gaussian
    double center = 0.25;  // gaussian
    double radius = 0.5;   // bump
    std::string file;
    VelocityMode velocity = VelocityMode::Outgoing;

    /// g(q) = (1 - ((q - 2)/0.5)^2)^8 in the exact linear solution (g(t-r) - g(t+r))/r.
    static constexpr double kWaveCenter = 2.0, kWaveHalfWidth = 0.5;

    void validate() const {
        switch (kind) {
            case ProfileKind::Bump:
                if (!(radius > 0 && radius <= 0.5))
                    throw Error(ErrorKind::SupportViolation, "bump radius must lie in (0, 1/2]");
                break;
            case ProfileKind::Gaussian:
                if (!(width > 0) || center < 0 || center + width > 0.5)
                    throw Error(ErrorKind::SupportViolation, "gaussian needs width > 0 and center + width <= 1/2");
                break;
            default: break;
        }
    }

    /// Unscaled u(2, r).
    double value(double r) const {
        switch (kind) {
            case ProfileKind::Bump: return amplitude * detail::poly_bump3(r / radius)[0];
            case ProfileKind::Gaussian: {
                double a = (r - center) / width, b = (r + center) / width;
                return amplitude * (std::exp(-a * a) + std::exp(-b * b)) * detail::cutoff(r, 0.4, 0.5);
            }
            case ProfileKind::ExactLinear: return exact_linear(2.0, r)[0];
            case ProfileKind::File: break;
        }
        throw Error(ErrorKind::ParseError, "file profiles are sampled through load_profile_file");
    }

    /// Unscaled d_t u(2, r).
    double velocity_at(double r) const {
        if (kind == ProfileKind::ExactLinear) return exact_linear(2.0, r)[1];
        if (velocity == VelocityMode::Zero) return 0.0;
        // outgoing: d_t (r u) = -d_r (r u)
        double dp;
        if (kind == ProfileKind::Bump) {
            dp = amplitude * detail::poly_bump3(r / radius)[1] / radius;
        } else {
            const double h = 1e-4;
            auto f = [&](double x) { return value(std::abs(x)); };
            dp = (-f(r + 3 * h) + 9 * f(r + 2 * h) - 45 * f(r + h) + 45 * f(r - h) - 9 * f(r - 2 * h) + f(r - 3 * h)) /
                 (-60 * h);
        }
        return -(value(r) + r * dp);
    }

    /// {u, u_t} of amplitude * (g(t-r) - g(t+r))/r.
    std::array<double, 2> exact_linear(double t, double r) const {
        auto g = [](double q) {
            auto b = detail::poly_bump3((q - kWaveCenter) / kWaveHalfWidth);
            return std::array<double, 3>{b[0], b[1] / kWaveHalfWidth, b[2] / (kWaveHalfWidth * kWaveHalfWidth)};
        };
        if (r == 0.0) {
            auto gt = g(t);
            // limit r -> 0: -2 g'(t), -2 g''(t)
            return {amplitude * -2.0 * gt[1], amplitude * -2.0 * gt[2]};
        }
        auto gm = g(t - r), gp = g(t + r);
        return {amplitude * (gm[0] - gp[0]) / r, amplitude * (gm[1] - gp[1]) / r};
    }
};

/// Jet of amplitude * (g(t-|x|) - g(t+|x|))/|x| at p (closed-form oracle).
inline Jet exact_linear_jet(const ConePoint& p, int order, double amplitude = 1.0) {
    if (p.r() <= 0) throw Error(ErrorKind::Degenerate, "exact linear jets need r > 0");
    Jet t = Jet::coordinate(0, p, order);
    Jet r2(p, order);
    for (int a = 1; a <= 3; ++a) {
        Jet x = Jet::coordinate(a, p, order);
        r2 += x * x;
    }
    Jet r = sqrt(r2);
    auto g = [&](const Jet& q) {
        Jet z = (q - Profile::kWaveCenter) / Profile::kWaveHalfWidth;
        if (std::abs(z.value()) >= 1.0) return Jet(p, order);
        Jet y = 1.0 - z * z;
        Jet q2 = y * y, q4 = q2 * q2;
        return q4 * q4;
    };
    return (g(t - r) - g(t + r)) * recip(r) * amplitude;
}

/// Nodal data file: one "r u0 u1" line per node, r_j = j dr; '#' starts a comment.
struct ProfileSamples {
    std::vector<double> r, u0, u1;
};

inline ProfileSamples load_profile_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::NotFound, "cannot open profile file " + path);
    ProfileSamples out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        std::istringstream ls(line);
        double r, a, b;
        if (!(ls >> r)) continue;
        if (!(ls >> a >> b)) throw Error(ErrorKind::ParseError, "profile line " + std::to_string(lineno));
        out.r.push_back(r);
        out.u0.push_back(a);
        out.u1.push_back(b);
    }
    return out;
}

inline void write_profile_file(const std::string& path, const Profile& p, double dr, double rmax = 0.5) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::NotFound, "cannot write profile file " + path);
    out << "# r u0 u1\n" << std::setprecision(17);
    for (int j = 0; j * dr <= rmax + 1e-12; ++j) out << j * dr << ' ' << p.value(j * dr) << ' ' << p.velocity_at(j * dr) << '\n';
}

// ------------------------------------------------------------------- state

struct RadialState {
    double t = 2.0;
    double dr = 0.01;
    std::vector<double> w, wt;  // r u and r u_t on r_j = j dr
    int lo = 0, hi = 0;         // active window

    int size() const { return static_cast<int>(w.size()); }
    double r(int j) const { return j * dr; }
    /// u = w / r, with the axis value from the odd extension of w.
    double u(int j) const { return j > 0 ? w[j] / r(j) : (16.0 * w[1] - 2.0 * w[2]) / (12.0 * dr); }
    double v(int j) const { return j > 0 ? wt[j] / r(j) : (16.0 * wt[1] - 2.0 * wt[2]) / (12.0 * dr); }
};

/// Data scaled by eps on a grid reaching rmax.
inline RadialState init_radial_data(const Profile& profile, double eps, double dr, double rmax) {
    profile.validate();
    RadialState st;
    st.t = 2.0;
    st.dr = dr;
    const int n = static_cast<int>(std::ceil(rmax / dr)) + 1;
    st.w.assign(n, 0.0);
    st.wt.assign(n, 0.0);
    if (profile.kind == ProfileKind::File) {
        ProfileSamples ps = load_profile_file(profile.file);
        for (std::size_t k = 0; k < ps.r.size(); ++k) {
            double jf = ps.r[k] / dr;
            int j = static_cast<int>(std::lround(jf));
            if (std::abs(jf - j) > 1e-9 || j >= n)
                throw Error(ErrorKind::ParseError, "profile node r = " + std::to_string(ps.r[k]) + " is off the grid");
            if (j * dr > 0.5 + 1e-12 && (ps.u0[k] != 0.0 || ps.u1[k] != 0.0))
                throw Error(ErrorKind::SupportViolation, "file profile is nonzero beyond r = 1/2");
            st.w[j] = j * dr * eps * ps.u0[k];
            st.wt[j] = j * dr * eps * ps.u1[k];
        }
    } else {
        for (int j = 1; j < n; ++j) {
            double r = j * dr;
            if (r > 0.5 && profile.kind != ProfileKind::ExactLinear) break;
            st.w[j] = r * eps * profile.value(r);
            st.wt[j] = r * eps * profile.velocity_at(r);
        }
    }
    st.hi = std::min(n - 1, static_cast<int>(std::ceil(2.0 / dr)));
    return st;
}

// ---------------------------------------------------------------- stencils

namespace detail {

inline double d1(const double* f, double h) { return (f[-2] - 8 * f[-1] + 8 * f[1] - f[2]) / (12 * h); }
inline double d2(const double* f, double h) { return (-f[-2] + 16 * f[-1] - 30 * f[0] + 16 * f[1] - f[2]) / (12 * h * h); }
inline double d3(const double* f, double h) {
    return (-f[3] + 8 * f[2] - 13 * f[1] + 13 * f[-1] - 8 * f[-2] + f[-3]) / (8 * h * h * h);
}

/// Lagrange weights on nodes 0..4 evaluated at x = -1, -2.
inline const std::array<std::array<double, 5>, 2>& extrapolation_weights() {
    static const auto W = [] {
        std::array<std::array<double, 5>, 2> w{};
        for (int g = 0; g < 2; ++g) {
            double x = -(g + 1);
            for (int k = 0; k < 5; ++k) {
                double l = 1;
                for (int m = 0; m < 5; ++m)
                    if (m != k) l *= (x - m) / (k - m);
                w[g][k] = l;
            }
        }
        return w;
    }();
    return W;
}

inline constexpr int kGhost = 2;

/// Copies f[lo-2 .. hi+2] into out with the odd extension at the axis,
/// polynomial extrapolation at an interior cut and zeros past the window.
inline void pad(const std::vector<double>& f, int lo, int hi, std::vector<double>& out) {
    const int n = hi - lo + 1 + 2 * kGhost;
    out.resize(n);
    for (int k = 0; k < n; ++k) {
        int i = lo - kGhost + k;
        if (i > hi) out[k] = 0.0;
        else if (i >= lo) out[k] = f[i];
        else if (i < 0 && lo == 0) out[k] = -f[-i];
    }
    if (lo > 0) {
        const auto& W = extrapolation_weights();
        for (int g = 0; g < kGhost; ++g) {
            double v = 0;
            for (int k = 0; k < 5; ++k) v += W[g][k] * f[lo + k];
            out[kGhost - 1 - g] = v;
        }
    }
}

}  // namespace detail

/// Right-hand side w_tt on the window, from padded w and w_t.
struct RadialOperator {
    RadialForm form;
    RadialForcing forcing;
    double dr;

    // scratch
    mutable std::vector<double> pw, pwt, pu, pv;

    void operator()(double t, const std::vector<double>& w, const std::vector<double>& wt, int lo, int hi,
                    std::vector<double>& wtt) const {
        detail::pad(w, lo, hi, pw);
        const int G = detail::kGhost;
        const bool lin = form.linear();
        if (!lin) {
            detail::pad(wt, lo, hi, pwt);
            to_u(pw, lo, pu);
            to_u(pwt, lo, pv);
        }
        for (int i = std::max(lo, 1); i <= hi; ++i) {
            const int k = i - lo + G;
            const double r = i * dr;
            double wrr = detail::d2(&pw[k], dr);
            double f = forcing ? r * forcing(t, r) : 0.0;
            if (lin) {
                wtt[i] = wrr + f;
            } else {
                double ut = pv[k], ur = detail::d1(&pu[k], dr), utr = detail::d1(&pv[k], dr);
                auto p = form.principal(ut, ur);
                wtt[i] = (p.c * wrr - p.b * r * utr + f) / p.a;
            }
        }
        if (lo == 0) wtt[0] = 0.0;
    }

    /// u = w / r on a padded array (axis value from the odd extension).
    void to_u(const std::vector<double>& pw_, int lo, std::vector<double>& out) const {
        const int G = detail::kGhost;
        out.resize(pw_.size());
        for (std::size_t k = 0; k < pw_.size(); ++k) {
            int i = lo - G + static_cast<int>(k);
            if (i != 0) out[k] = pw_[k] / (i * dr);
            else out[k] = (16.0 * pw_[k + 1] - 2.0 * pw_[k + 2]) / (12.0 * dr);
        }
    }
};

struct StepReport {
    double max_speed = 1.0;
    double sup_du = 0.0;
    bool finite = true;
    bool hyperbolic = true;
};

/// Characteristic speeds and sup |du| over the window.
inline StepReport scan_state(const RadialState& st, const RadialForm& form) {
    StepReport rep;
    std::vector<double> pw, pwt, pu, pv;
    detail::pad(st.w, st.lo, st.hi, pw);
    detail::pad(st.wt, st.lo, st.hi, pwt);
    RadialOperator op{form, nullptr, st.dr, {}, {}, {}, {}};
    op.to_u(pw, st.lo, pu);
    op.to_u(pwt, st.lo, pv);
    const int G = detail::kGhost;
    for (int i = st.lo; i <= st.hi; ++i) {
        const int k = i - st.lo + G;
        double ut = pv[k], ur = detail::d1(&pu[k], st.dr);
        if (!std::isfinite(ut) || !std::isfinite(ur) || !std::isfinite(pu[k])) {
            rep.finite = false;
            return rep;
        }
        rep.sup_du = std::max({rep.sup_du, std::abs(ut), std::abs(ur)});
        if (form.linear()) continue;
        auto p = form.principal(ut, ur);
        // a and c of one sign: hyperbolic in t (possibly with the overall sign flipped)
        double disc = p.b * p.b + 4 * p.a * p.c;
        if (!(p.a * p.c > 0) || disc <= 0) {
            rep.hyperbolic = false;
            return rep;
        }
        rep.max_speed = std::max(rep.max_speed, (std::abs(p.b) + std::sqrt(disc)) / (2 * std::abs(p.a)));
    }
    return rep;
}

/// RK4 on the active window with persistent scratch.
struct Stepper {
    RadialOperator op;
    std::vector<double> k1, k2, k3, k4, w1, w2, w3, v1, v2, v3;

    Stepper(const RadialForm& form, const RadialForcing& forcing, double dr) : op{form, forcing, dr, {}, {}, {}, {}} {}

    void operator()(RadialState& st, double dt) {
        const int n = st.size();
        if (st.hi >= n - detail::kGhost)
            throw Error(ErrorKind::SupportLeak, "active window reached the end of the radial grid");
        for (auto* v : {&k1, &k2, &k3, &k4, &w1, &w2, &w3, &v1, &v2, &v3})
            if (static_cast<int>(v->size()) != n) v->assign(n, 0.0);
        const int lo = st.lo, hi = st.hi;
        op(st.t, st.w, st.wt, lo, hi, k1);
        for (int i = lo; i <= hi; ++i) {
            w1[i] = st.w[i] + 0.5 * dt * st.wt[i];
            v1[i] = st.wt[i] + 0.5 * dt * k1[i];
        }
        op(st.t + 0.5 * dt, w1, v1, lo, hi, k2);
        for (int i = lo; i <= hi; ++i) {
            w2[i] = st.w[i] + 0.5 * dt * v1[i];
            v2[i] = st.wt[i] + 0.5 * dt * k2[i];
        }
        op(st.t + 0.5 * dt, w2, v2, lo, hi, k3);
        for (int i = lo; i <= hi; ++i) {
            w3[i] = st.w[i] + dt * v2[i];
            v3[i] = st.wt[i] + dt * k3[i];
        }
        op(st.t + dt, w3, v3, lo, hi, k4);
        for (int i = lo; i <= hi; ++i) {
            st.w[i] += dt / 6.0 * (st.wt[i] + 2 * v1[i] + 2 * v2[i] + v3[i]);
            st.wt[i] += dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        }
        st.t += dt;
    }
};

/// One RK4 step of size dt on the active window.
inline void step(RadialState& st, const RadialForm& form, double dt, const RadialForcing& forcing = nullptr) {
    Stepper stepper(form, forcing, st.dr);
    stepper(st, dt);
}

// --------------------------------------------------------- time levels

/// Windowed copy of a state at one time.
struct Level {
    double t = 0;
    int lo = 0, hi = 0;
    std::vector<double> w, wt;

    static Level of(const RadialState& st, int extra = 0) {
        Level L;
        L.t = st.t;
        L.lo = st.lo;
        L.hi = std::min(st.size() - 1, st.hi + extra);
        L.w.assign(st.w.begin() + L.lo, st.w.begin() + L.hi + 1);
        L.wt.assign(st.wt.begin() + L.lo, st.wt.begin() + L.hi + 1);
        return L;
    }

    double get(const std::vector<double>& f, int i) const {
        if (i < 0) return -get(f, -i);
        if (i < lo) throw Error(ErrorKind::InsufficientHistory, "node inside the discarded region");
        if (i > hi) return 0.0;
        return f[i - lo];
    }
};

namespace detail {

/// Derivative table at node j from one level.
inline std::array<double, kTabSize> level_table(const Level& L, int j, double dr, const RadialForm& form,
                                                const RadialForcing& forcing) {
    double u[9], v[9];
    auto uval = [&](const std::vector<double>& f, int i) {
        if (i != 0) return L.get(f, i) / (i * dr);
        return (16.0 * L.get(f, 1) - 2.0 * L.get(f, 2)) / (12.0 * dr);
    };
    for (int m = -4; m <= 4; ++m) {
        u[m + 4] = uval(L.w, j + m);
        v[m + 4] = uval(L.wt, j + m);
    }
    auto lap = [&](double rr, double fr, double frr) { return rr > 0 ? frr + 2.0 * fr / rr : 3.0 * frr; };
    double a[5], ur[5], urr[5], vr[5];
    for (int m = -2; m <= 2; ++m) {
        const double* pu = &u[m + 4];
        const double* pv = &v[m + 4];
        double rr = std::abs(j + m) * dr;
        ur[m + 2] = d1(pu, dr);
        urr[m + 2] = d2(pu, dr);
        vr[m + 2] = d1(pv, dr);
        auto p = form.principal(*pv, ur[m + 2]);
        // odd derivatives flip sign across the axis, but only |r| enters the coefficients
        double rs = (j + m) * dr;
        double f = forcing ? forcing(L.t, std::abs(rs)) : 0.0;
        a[m + 2] = (p.c * lap(rr, (j + m) < 0 ? -ur[m + 2] : ur[m + 2], urr[m + 2]) - p.b * vr[m + 2] + f) / p.a;
    }
    std::array<double, kTabSize> d{};
    const double r = j * dr;
    d[kU] = u[4];
    d[kUr] = ur[2];
    d[kUrr] = urr[2];
    d[kUrrr] = d3(&u[4], dr);
    d[kV] = v[4];
    d[kVr] = vr[2];
    d[kVrr] = d2(&v[4], dr);
    d[kA] = a[2];
    d[kAr] = d1(&a[2], dr);
    double ft = 0.0;
    if (forcing) {
        const double h = 1e-3;
        ft = (-forcing(L.t + 2 * h, r) + 8 * forcing(L.t + h, r) - 8 * forcing(L.t - h, r) + forcing(L.t - 2 * h, r)) /
             (12 * h);
    }
    auto p = form.principal(d[kV], d[kUr]);
    double du = lap(r, d[kUr], d[kUrr]), dv = lap(r, d[kVr], d[kVrr]);
    d[kAt] = (ft - form.A * d[kA] * d[kA] - (form.C + form.D) * (d[kVr] * d[kVr] + d[kUr] * d[kAr]) -
              form.B * d[kA] * du + p.c * dv) /
             p.a;
    return d;
}

}  // namespace detail

/// Node table at time ts by cubic Lagrange interpolation across four levels.
inline SliceNode interpolate_node(const Level* levels, int j, double ts, double dr, const RadialForm& form,
                                  const RadialForcing& forcing) {
    SliceNode n;
    n.r = j * dr;
    n.t = ts;
    for (int k = 0; k < 4; ++k) {
        double l = 1;
        for (int m = 0; m < 4; ++m)
            if (m != k) l *= (ts - levels[m].t) / (levels[k].t - levels[m].t);
        auto d = detail::level_table(levels[k], j, dr, form, forcing);
        for (int e = 0; e < kTabSize; ++e) n.d[e] += l * d[e];
    }
    return n;
}

/// Every stored level of a run; used for resampling after the fact.
struct TrajectoryBuffer {
    double dr = 0;
    RadialForm form;
    RadialForcing forcing;
    std::vector<Level> levels;
};

/// Drops leading and trailing nodes whose table is negligible relative to the slice.
inline void trim_slice(HyperboloidSlice& sl, double rel = 1e-16) {
    double m = 0;
    for (const auto& n : sl.nodes)
        for (double v : n.d) m = std::max(m, std::abs(v));
    auto live = [&](const SliceNode& n) {
        for (double v : n.d)
            if (std::abs(v) > rel * m) return true;
        return false;
    };
    std::size_t a = 0, b = sl.nodes.size();
    while (a < b && !live(sl.nodes[a])) ++a;
    while (b > a && !live(sl.nodes[b - 1])) --b;
    sl.first += static_cast<int>(a);
    sl.nodes = std::vector<SliceNode>(sl.nodes.begin() + a, sl.nodes.begin() + b);
}

inline int slice_node_count(double s, double dr) { return static_cast<int>(std::floor(slice_rmax(s) / dr + 1e-9)) + 1; }

inline HyperboloidSlice resample_to_hyperboloid(const TrajectoryBuffer& buf, double s) {
    HyperboloidSlice sl;
    sl.s = s;
    sl.dr = buf.dr;
    sl.form = buf.form;
    sl.forcing = buf.forcing;
    sl.total = slice_node_count(s, buf.dr);
    if (buf.levels.size() < 4) throw Error(ErrorKind::InsufficientHistory, "need at least four time levels");
    const auto& L = buf.levels;
    for (int j = 0; j < sl.total; ++j) {
        double ts = std::sqrt(s * s + j * buf.dr * j * buf.dr);
        if (ts < L.front().t - 1e-12 || ts > L.back().t + 1e-12)
            throw Error(ErrorKind::InsufficientHistory, "slice node outside the stored time range");
        auto it = std::upper_bound(L.begin(), L.end(), ts, [](double x, const Level& l) { return x < l.t; });
        long k = std::clamp<long>(static_cast<long>(it - L.begin()) - 2, 0, static_cast<long>(L.size()) - 4);
        sl.nodes.push_back(interpolate_node(&L[k], j, ts, buf.dr, buf.form, buf.forcing));
    }
    trim_slice(sl);
    return sl;
}

// ------------------------------------------------------------------- runs

struct RunOptions {
    RadialForm form;
    RadialForcing forcing;
    Profile profile;
    double eps = 1e-3;
    double dr = 0.02;
    double cfl = 0.8;
    std::vector<double> slices;  // hyperboloid times to capture, ascending
    bool inner_cut = true;
    double cut_margin = 1.0;
    double t_limit = std::numeric_limits<double>::infinity();  // stop early (slices beyond are dropped)
    bool record_buffer = false;
    /// Called once per completed slice; slices are not kept when it is set and keep_slices is false.
    std::function<void(const HyperboloidSlice&)> on_slice;
    bool keep_slices = true;
};

struct RunResult {
    std::vector<HyperboloidSlice> slices;
    bool blew_up = false;
    std::string reason;  // nonfinite | gradient | hyperbolicity | cfl
    double t_blowup = std::numeric_limits<double>::quiet_NaN();
    double t_final = 2.0;
    long steps = 0;
    double node_updates = 0;
    double initial_sup_du = 0;
    double max_speed = 1.0;
    double seconds = 0;
    double leak = 0;  // max |u| past t - r < 1.25 relative to max |u| over the run
    TrajectoryBuffer buffer;
};

inline RunResult run_radial(const RunOptions& opt) {
    auto clock0 = std::chrono::steady_clock::now();
    RunResult res;
    if (opt.slices.empty()) throw Error(ErrorKind::Degenerate, "no hyperboloids requested");
    const double smax = opt.slices.back();
    double t_end = 2.0;
    for (double s : opt.slices) {
        if (s < 2.0) throw Error(ErrorKind::OutsideCone, "hyperboloids start at s = 2");
        double rr = (slice_node_count(s, opt.dr) - 1) * opt.dr;
        t_end = std::max(t_end, std::sqrt(s * s + rr * rr));
    }
    t_end = std::min(t_end, opt.t_limit);
    const double rmax = t_end + opt.cut_margin + 1.0;
    RadialState st = init_radial_data(opt.profile, opt.eps, opt.dr, rmax);
    const double s_cut = smax + 1.0;
    auto window = [&](RadialState& s) {
        double lo_r = 0;
        if (opt.inner_cut && s.t > s_cut) lo_r = std::sqrt(s.t * s.t - s_cut * s_cut) - opt.cut_margin;
        s.lo = std::max(0, static_cast<int>(std::floor(lo_r / s.dr)));
        s.hi = std::min(s.size() - 1 - detail::kGhost, static_cast<int>(std::ceil((s.t - 1.0 + opt.cut_margin) / s.dr)));
    };
    window(st);

    double data_max = 0;
    for (int i = 0; i <= st.hi; ++i) data_max = std::max(data_max, std::abs(st.u(i)));

    // capture bookkeeping
    struct Pending {
        HyperboloidSlice slice;
        int next = 0;
        bool done = false;
    };
    std::vector<Pending> pend(opt.slices.size());
    for (std::size_t k = 0; k < pend.size(); ++k) {
        auto& sl = pend[k].slice;
        sl.s = opt.slices[k];
        sl.dr = opt.dr;
        sl.form = opt.form;
        sl.forcing = opt.forcing;
        sl.total = slice_node_count(sl.s, opt.dr);
        sl.nodes.reserve(sl.total);
    }
    std::vector<Level> ring;
    const int extra = 4;
    auto push_level = [&]() {
        ring.push_back(Level::of(st, extra));
        if (opt.record_buffer) res.buffer.levels.push_back(ring.back());
        if (ring.size() > 4) ring.erase(ring.begin());
    };
    auto capture = [&](double t_upto) {
        for (auto& p : pend) {
            if (p.done) continue;
            while (p.next < p.slice.total) {
                double r = p.next * opt.dr;
                double ts = std::sqrt(p.slice.s * p.slice.s + r * r);
                if (ts > t_upto) break;
                p.slice.nodes.push_back(interpolate_node(ring.data(), p.next, ts, opt.dr, opt.form, opt.forcing));
                ++p.next;
            }
            if (p.next == p.slice.total) {
                p.done = true;
                trim_slice(p.slice);
                if (opt.on_slice) opt.on_slice(p.slice);
                if (opt.keep_slices || !opt.on_slice) res.slices.push_back(std::move(p.slice));
                p.slice = HyperboloidSlice{};
            }
        }
    };
    res.buffer.dr = opt.dr;
    res.buffer.form = opt.form;
    res.buffer.forcing = opt.forcing;

    Stepper stepper(opt.form, opt.forcing, opt.dr);
    StepReport rep0 = scan_state(st, opt.form);
    res.initial_sup_du = rep0.sup_du;
    push_level();
    const double tiny = 1e-300;
    while (true) {
        bool all_done = std::all_of(pend.begin(), pend.end(), [](const Pending& p) { return p.done; });
        if (all_done || st.t >= t_end - 1e-12) break;
        StepReport rep = scan_state(st, opt.form);
        std::string why;
        if (!rep.finite) why = "nonfinite";
        else if (!rep.hyperbolic) why = "hyperbolicity";
        else if (res.initial_sup_du > tiny && rep.sup_du > 1e3 * res.initial_sup_du) why = "gradient";
        double dt = opt.cfl * opt.dr / rep.max_speed;
        if (why.empty() && dt < opt.dr / 1e3) why = "cfl";
        if (!why.empty()) {
            res.blew_up = true;
            res.reason = why;
            res.t_blowup = st.t;
            break;
        }
        res.max_speed = std::max(res.max_speed, rep.max_speed);
        dt = std::min(dt, t_end - st.t);
        if (dt < 1e-12) break;
        stepper(st, dt);
        window(st);
        ++res.steps;
        res.node_updates += st.hi - st.lo + 1;
        // leak: support past t - r = 1.25
        int edge = static_cast<int>(std::ceil((st.t - kSliceEdge) / st.dr));
        for (int i = std::max(edge, st.lo); i <= st.hi; ++i) res.leak = std::max(res.leak, std::abs(st.u(i)));
        for (int i = std::max(st.lo, 1); i <= st.hi; i += 4) data_max = std::max(data_max, std::abs(st.u(i)));
        push_level();
        if (ring.size() == 4) capture(ring[2].t);
    }
    if (!res.blew_up && ring.size() == 4) capture(ring[3].t);
    if (data_max > 0) res.leak /= data_max;
    res.t_final = st.t;
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock0).count();
    return res;
}

/// Ascending hyperboloid times s0, s0 + ds, ..., up to smax.
inline std::vector<double> slice_times(double s0, double smax, double ds) {
    std::vector<double> out;
    for (int k = 0;; ++k) {
        double s = s0 + k * ds;
        if (s > smax + 1e-9) break;
        out.push_back(s);
    }
    return out;
}

// ----------------------------------------------------------- boost stacks

struct LorentzStack {
    std::vector<Word> words;
    std::vector<double> values;  // d^I L^J u at (t, r e_1)
    double rotation = 0.0;       // Ω_ab u, identically zero for radial u
};

/// d^I L^J u for |I| + |J| <= order at a slice node, along the first axis.
inline LorentzStack lorentz_stack(const SliceNode& n, int order) {
    if (order > 2) throw Error(ErrorKind::OrderTooHigh, "stacks are built up to |I| + |J| = 2");
    LorentzStack out;
    Jet u = slice_jet(n, {1, 0, 0}, 3);
    FrameContext ctx(u.base(), 3);
    for (const auto& w : words_up_to(order)) {
        out.words.push_back(w);
        out.values.push_back(apply_word(w, u, ctx).value());
    }
    // Ω_12 u = x^1 d_2 u - x^2 d_1 u
    out.rotation = n.r * u.derivative(2).value();
    return out;
}

/// L_1 u at (t, r e_1) for radial u: r u_t + t u_r.
inline double radial_boost(const SliceNode& n) { return n.r * n.d[kV] + n.t * n.d[kUr]; }

// ---------------------------------------------------------- decay profile

struct DecayFit {
    std::vector<double> s, sup_u, sup_dsu, sup_dau, sup_abs_u, t_at_sup;
    double slope_u = 0, slope_dsu = 0, slope_dau = 0;
    double exponent_t = 0;  // sup |u| ~ t^p at the maximizing node
};

inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
    }
    return sxy / sxx;
}

/// Weighted sups t^{1/2}s|u|, t^{1/2}s^2|dbar_s u|, t^{3/2}s|dbar_a u| per slice and their log-log slopes in s.
inline DecayFit decay_profile(const std::vector<HyperboloidSlice>& slices, double s_lo = 0,
                              double s_hi = std::numeric_limits<double>::infinity()) {
    DecayFit f;
    for (const auto& sl : slices) {
        if (sl.s < s_lo - 1e-12 || sl.s > s_hi + 1e-12) continue;
        double a = 0, b = 0, c = 0, m = 0, tm = 0;
        for (const auto& n : sl.nodes) {
            double s = sl.s, sq = std::sqrt(n.t);
            a = std::max(a, sq * s * std::abs(n.d[kU]));
            b = std::max(b, sq * s * s * std::abs(sl.dbar_s(n)));
            c = std::max(c, n.t * sq * s * std::abs(sl.dbar_r(n)));
            if (std::abs(n.d[kU]) > m) {
                m = std::abs(n.d[kU]);
                tm = n.t;
            }
        }
        f.s.push_back(sl.s);
        f.sup_u.push_back(a);
        f.sup_dsu.push_back(b);
        f.sup_dau.push_back(c);
        f.sup_abs_u.push_back(m);
        f.t_at_sup.push_back(tm);
    }
    if (f.s.size() < 5 || f.s.back() < 4 * f.s.front())
        throw Error(ErrorKind::Degenerate, "decay fits need at least 5 slices spanning a factor 4 in s");
    for (double v : f.sup_u)
        if (!(v > 0)) throw Error(ErrorKind::Degenerate, "zero solution has no decay profile");
    std::vector<double> ls, lu, ld, la, lt, lm;
    for (std::size_t k = 0; k < f.s.size(); ++k) {
        ls.push_back(std::log(f.s[k]));
        lu.push_back(std::log(f.sup_u[k]));
        ld.push_back(std::log(f.sup_dsu[k]));
        la.push_back(std::log(f.sup_dau[k]));
        lt.push_back(std::log(f.t_at_sup[k]));
        lm.push_back(std::log(f.sup_abs_u[k]));
    }
    f.slope_u = ls_slope(ls, lu);
    f.slope_dsu = ls_slope(ls, ld);
    f.slope_dau = ls_slope(ls, la);
    f.exponent_t = ls_slope(lt, lm);
    return f;
}

}  // namespace hyperconf
