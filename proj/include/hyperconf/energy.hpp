#pragma once

// Integrals over hyperboloids and the energy functionals built on them.

#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "commutators.hpp"
#include "errors.hpp"
#include "forms.hpp"
#include "identities.hpp"
#include "slice.hpp"

namespace hyperconf {

// -------------------------------------------------------------- quadrature

struct Quadrature {
    double value = 0.0;
    double error = 0.0;
    bool support_leak = false;
};

/// 4π ∫ g dr for samples g_j = g(j h), j = 0..n-1, g = 0 beyond; composite Simpson with the
/// Richardson estimate |S_h - S_2h| / 15.
inline Quadrature radial_quadrature(std::vector<double> g, double h) {
    Quadrature q;
    if (g.empty()) return q;
    // pad with zeros to a multiple of 4 intervals
    std::size_t n = g.size() - 1;
    while (n % 4 != 0 || n == 0) {
        g.push_back(0.0);
        ++n;
    }
    auto simpson = [&](std::size_t stride) {
        const double hh = h * static_cast<double>(stride);
        double acc = g[0] + g[n];
        for (std::size_t k = stride, m = 1; k < n; k += stride, ++m) acc += (m % 2 ? 4.0 : 2.0) * g[k];
        return acc * hh / 3.0;
    };
    const double fine = simpson(1), coarse = simpson(2);
    const double four_pi = 4.0 * M_PI;
    q.value = four_pi * fine;
    q.error = four_pi * std::abs(fine - coarse) / 15.0;
    return q;
}

struct QuadratureSpec {
    int intervals = 2000;
    double rmax = -1.0;  // default: the cone edge t - r = 1
    bool check_support = true;
};

/// ∫_{H_s} f dx = 4π ∫ f(sqrt(s^2 + r^2), r) r^2 dr for rotation-invariant f.
inline Quadrature hyperboloid_integral(const std::function<double(double t, double r)>& f, double s,
                                       const QuadratureSpec& spec = {}) {
    const double rmax = spec.rmax > 0 ? spec.rmax : (s * s - 1.0) / 2.0;
    const int n = spec.intervals + (spec.intervals % 2);
    const double h = rmax / n;
    std::vector<double> g(n + 1);
    double fmax = 0;
    for (int j = 0; j <= n; ++j) {
        double r = j * h;
        double v = f(std::sqrt(s * s + r * r), r);
        if (!std::isfinite(v)) throw Error(ErrorKind::QuadratureFail, "integrand is not finite");
        fmax = std::max(fmax, std::abs(v));
        g[j] = v * r * r;
    }
    Quadrature q = radial_quadrature(g, h);
    if (spec.check_support) {
        double edge = std::abs(f(std::sqrt(s * s + rmax * rmax), rmax));
        q.support_leak = edge > 1e-12 * fmax;
    }
    return q;
}

/// Lebedev rule of degree 7 on the unit sphere: 6 axes, 12 edge midpoints, 8 corners (weights sum to 1).
struct SpherePoint {
    Vec3 x;
    double weight;
};

inline const std::vector<SpherePoint>& lebedev26() {
    static const std::vector<SpherePoint> pts = [] {
        std::vector<SpherePoint> p;
        for (int a = 0; a < 3; ++a)
            for (int sgn : {1, -1}) {
                Vec3 x{0, 0, 0};
                x[a] = sgn;
                p.push_back({x, 1.0 / 21.0});
            }
        const double e = 1.0 / std::sqrt(2.0);
        for (int a = 0; a < 3; ++a)
            for (int b = a + 1; b < 3; ++b)
                for (int sa : {1, -1})
                    for (int sb : {1, -1}) {
                        Vec3 x{0, 0, 0};
                        x[a] = sa * e;
                        x[b] = sb * e;
                        p.push_back({x, 4.0 / 105.0});
                    }
        const double c = 1.0 / std::sqrt(3.0);
        for (int s1 : {1, -1})
            for (int s2 : {1, -1})
                for (int s3 : {1, -1}) p.push_back({{s1 * c, s2 * c, s3 * c}, 9.0 / 280.0});
        return p;
    }();
    return pts;
}

// ------------------------------------------------------------ flat energy

struct EnergyReport {
    double s = 0;
    double E_flat = 0;           // ‖Ku+2u‖² + Σ_a ‖s dbar_a u‖²
    double E_flat_expanded = 0;  // ∫ (Ku)² + Σ(s dbar_a u)² + 4uKu + 4u²
    double Ku_2u = 0;
    double frame = 0;
    std::optional<double> E_curved;
    double norm_u_over_r = 0;  // ‖(s/r) u‖
    double norm_dsu = 0;       // ‖(s²/t) dbar_s u‖
    double norm_da = 0;        // (Σ_a ‖s (s/t)² d_a u‖²)^{1/2}
    double quad_error = 0;     // estimated error of E_flat
    int nodes = 0;
    double dr = 0;

    double root() const { return std::sqrt(E_flat); }
    double ratio_u_over_r() const { return E_flat > 0 ? norm_u_over_r / root() : 0.0; }
    double ratio_dsu() const { return E_flat > 0 ? norm_dsu / root() : 0.0; }
    double ratio_da() const { return E_flat > 0 ? norm_da / root() : 0.0; }
    double cross_check() const {
        double m = std::max(std::abs(E_flat), std::abs(E_flat_expanded));
        return m > 0 ? std::abs(E_flat - E_flat_expanded) / m : 0.0;
    }
};

namespace detail {

/// Samples g(node) r² over all slice nodes 0..total-1 (zero off the stored range).
template <class F>
std::vector<double> slice_samples(const HyperboloidSlice& sl, F&& g, int stride = 1) {
    std::vector<double> out;
    for (int j = 0; j < sl.total; j += stride) {
        int k = j - sl.first;
        if (k < 0 || k >= static_cast<int>(sl.nodes.size())) {
            out.push_back(0.0);
            continue;
        }
        out.push_back(g(sl.nodes[k]));
    }
    return out;
}

}  // namespace detail

inline EnergyReport flat_conformal_energy(const HyperboloidSlice& sl) {
    if (sl.dr <= 0) throw Error(ErrorKind::Degenerate, "slice has no derivative stack");
    EnergyReport rep;
    rep.s = sl.s;
    rep.dr = sl.dr;
    rep.nodes = static_cast<int>(sl.nodes.size());
    const double s = sl.s;
    auto q = [&](auto&& g) { return radial_quadrature(detail::slice_samples(sl, g), sl.dr); };
    auto ku2 = q([&](const SliceNode& n) {
        double k = sl.Ku(n) + 2 * n.d[kU];
        return k * k * n.r * n.r;
    });
    auto fr = q([&](const SliceNode& n) {
        double b = s * sl.dbar_r(n);
        return b * b * n.r * n.r;
    });
    auto ex = q([&](const SliceNode& n) {
        double K = sl.Ku(n), u = n.d[kU], b = s * sl.dbar_r(n);
        return (K * K + b * b + 4 * u * K + 4 * u * u) * n.r * n.r;
    });
    auto nu = q([&](const SliceNode& n) { return s * s * n.d[kU] * n.d[kU]; });  // ((s/r)u)² r²
    auto nd = q([&](const SliceNode& n) {
        double v = s * s / n.t * sl.dbar_s(n);
        return v * v * n.r * n.r;
    });
    auto na = q([&](const SliceNode& n) {
        double st = s / n.t;
        double v = s * st * st * n.d[kUr];
        return v * v * n.r * n.r;
    });
    rep.Ku_2u = ku2.value;
    rep.frame = fr.value;
    rep.E_flat = ku2.value + fr.value;
    rep.E_flat_expanded = ex.value;
    rep.quad_error = ku2.error + fr.error;
    rep.norm_u_over_r = std::sqrt(std::max(0.0, nu.value));
    rep.norm_dsu = std::sqrt(std::max(0.0, nd.value));
    rep.norm_da = std::sqrt(std::max(0.0, na.value));
    return rep;
}

/// ‖□u‖_{L²(H_s)} and ‖g^{ab} d_a d_b u‖ (h = Q du) from the slice tables.
struct SourceNorms {
    double box = 0, curved = 0;
};

inline SourceNorms source_norms(const HyperboloidSlice& sl) {
    auto b = radial_quadrature(detail::slice_samples(sl, [&](const SliceNode& n) {
                                   double v = sl.box(n);
                                   return v * v * n.r * n.r;
                               }),
                               sl.dr);
    auto c = radial_quadrature(detail::slice_samples(sl, [&](const SliceNode& n) {
                                   double v = sl.curved_operator(n);
                                   return v * v * n.r * n.r;
                               }),
                               sl.dr);
    return {std::sqrt(std::max(0.0, b.value)), std::sqrt(std::max(0.0, c.value))};
}

// ----------------------------------------------------------- curved energy

using SliceMetric = std::function<MetricPerturbation(const SliceNode&)>;

/// h = Q du induced by the slice's own solution.
inline SliceMetric induced_metric(const HyperboloidSlice& sl) {
    CubicForm Q = sl.form.cubic();
    return [Q](const SliceNode& n) {
        return MetricPerturbation::quasilinear(Q, [n](const ConePoint&, int order) {
            return slice_jet(n, {1, 0, 0}, order);
        });
    };
}

inline SliceMetric zero_metric() {
    return [](const SliceNode&) { return MetricPerturbation::zero(); };
}

struct StructureViolation {
    std::string condition;  // |hbar00|, |s dbar_s hbar00| or |h|
    double s = 0, t = 0, r = 0;
    double value = 0, bound = 0;
};

struct CurvedReport {
    double s = 0;
    double E_curved = 0;
    double E_flat = 0;
    double kappa = 1.0;  // max(E_flat/E_curved, E_curved/E_flat)^{1/2}
    double Mg = 0;       // ‖R + S + T‖_{L¹} / E_flat^{1/2}
    double Mg_L1 = 0;
    double quad_error = 0;
    std::optional<StructureViolation> violation;
    double worst_structure_ratio = 0;  // max over conditions of value / bound
};

struct CurvedOptions {
    double eps_s = 0.05;
    int stride = 1;
    bool throw_on_violation = true;
};

/// E_{con,g}, κ and M_g on a slice; nodes on the axis carry zero weight and are skipped.
inline CurvedReport curved_conformal_energy(const HyperboloidSlice& sl, const SliceMetric& metric,
                                            const CurvedOptions& opt = {}) {
    CurvedReport rep;
    rep.s = sl.s;
    const double s = sl.s;
    const int stride = std::max(1, opt.stride);
    std::vector<double> ge, gf, gm;
    for (int j = 0; j < sl.total; j += stride) {
        int k = j - sl.first;
        if (k < 0 || k >= static_cast<int>(sl.nodes.size()) || j == 0) {
            ge.push_back(0);
            gf.push_back(0);
            gm.push_back(0);
            continue;
        }
        const SliceNode& n = sl.nodes[k];
        MetricPerturbation h = metric(n);
        Jet u = slice_jet(n, {1, 0, 0}, 3);
        const ConePoint& p = u.base();
        // structure conditions
        FrameContext ctx(p, 1);
        JetMatrix hj = h.jets(p, 1);
        Jet hb(p, 1);
        double hmax = 0;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) {
                hmax = std::max(hmax, std::abs(hj[a][b].value()));
                hb += hj[a][b] * psi_jet(a, 0, ctx, 1) * psi_jet(b, 0, ctx, 1);
            }
        const double bound = opt.eps_s * s / n.t;
        const double conds[3] = {std::abs(hb.value()), std::abs(s * apply_field(VectorField::bar_s(), hb, ctx).value()),
                                 hmax};
        const char* names[3] = {"|hbar00| <= (s/t) eps_s", "|s dbar_s hbar00| <= (s/t) eps_s", "|h| <= (s/t) eps_s"};
        for (int c = 0; c < 3; ++c) {
            rep.worst_structure_ratio = std::max(rep.worst_structure_ratio, conds[c] / bound);
            if (conds[c] > bound && !rep.violation) rep.violation = StructureViolation{names[c], s, n.t, n.r, conds[c], bound};
        }
        auto res = curved_multiplier_residual(u, h, p);
        const auto& T = res.terms;
        double db = 0;
        std::array<double, 3> dbar{};
        for (int a = 1; a <= 3; ++a) dbar[a - 1] = apply_field(VectorField::bar(a), u).value();
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) db += T.gbar[a + 1][b + 1] * dbar[a] * dbar[b];
        double kn = T.Ku + T.N * u.value();
        double r2 = n.r * n.r;
        ge.push_back((kn * kn - s * s * T.gbar[0][0] * db) * r2);
        double kf = sl.Ku(n) + 2 * n.d[kU], bf = s * sl.dbar_r(n);
        gf.push_back((kf * kf + bf * bf) * r2);
        gm.push_back(std::abs(T.R + T.S + T.T) * r2);
    }
    const double h = sl.dr * stride;
    auto qe = radial_quadrature(ge, h), qf = radial_quadrature(gf, h), qm = radial_quadrature(gm, h);
    rep.E_curved = qe.value;
    rep.E_flat = qf.value;
    rep.quad_error = qe.error;
    rep.Mg_L1 = qm.value;
    rep.Mg = rep.E_flat > 0 ? qm.value / std::sqrt(rep.E_flat) : 0.0;
    if (rep.E_flat > 0 && rep.E_curved > 0)
        rep.kappa = std::sqrt(std::max(rep.E_flat / rep.E_curved, rep.E_curved / rep.E_flat));
    else if (rep.E_flat > 0 || rep.E_curved > 0)
        rep.kappa = std::numeric_limits<double>::infinity();
    if (rep.violation && opt.throw_on_violation) {
        const auto& v = *rep.violation;
        throw Error(ErrorKind::StructureConditionFailed,
                    v.condition + " fails at s=" + std::to_string(v.s) + ", t=" + std::to_string(v.t) +
                        ", r=" + std::to_string(v.r) + " (" + std::to_string(v.value) + " > " + std::to_string(v.bound) + ")");
    }
    return rep;
}

/// M_g alone (structure violations are reported, not thrown).
inline double mg_measure(const HyperboloidSlice& sl, const SliceMetric& metric, int stride = 1) {
    CurvedOptions o;
    o.stride = stride;
    o.throw_on_violation = false;
    auto r = curved_conformal_energy(sl, metric, o);
    if (!(r.E_flat > 0)) throw Error(ErrorKind::Degenerate, "zero energy");
    return r.Mg;
}

// ------------------------------------------------------------------ Hardy

struct HardyResult {
    double lhs = 0, rhs = 0, ratio = 0;
};

/// ‖w/r‖ against 2 Σ_a ‖d_a w‖ on R³ for radial w, integrated over [0, rmax].
inline HardyResult hardy_check(const std::function<double(double)>& w, const std::function<double(double)>& dw,
                               double rmax = 12.0, int intervals = 4000) {
    const double h = rmax / intervals;
    std::vector<double> gl(intervals + 1), gr(intervals + 1);
    double peak = 0;
    for (int j = 0; j <= intervals; ++j) {
        double r = j * h, v = w(r), d = dw(r);
        if (!std::isfinite(v) || !std::isfinite(d)) throw Error(ErrorKind::QuadratureFail, "non-finite sample");
        gl[j] = v * v;  // (w/r)² r²
        gr[j] = d * d * r * r;
        peak = std::max({peak, gl[j], gr[j]});
    }
    if (peak > 0 && std::max(gl.back(), gr.back()) > 1e-12 * peak)
        throw Error(ErrorKind::QuadratureFail, "integrand does not decay before rmax");
    HardyResult out;
    out.lhs = std::sqrt(radial_quadrature(gl, h).value);
    // ‖d_a w‖² = ∫ (x^a/r)² w'² with the angular average of (x^a/r)² from the sphere rule
    double rhs = 0;
    const double radial = radial_quadrature(gr, h).value;
    for (int a = 0; a < 3; ++a) {
        double avg = 0;
        for (const auto& p : lebedev26()) avg += p.weight * p.x[a] * p.x[a];
        rhs += std::sqrt(avg * radial);
    }
    out.rhs = 2.0 * rhs;
    out.ratio = out.rhs > 0 ? out.lhs / out.rhs : 0.0;
    return out;
}

// ------------------------------------------------------- commuted stacks

/// Rotation-invariant field sampled on H_s at r_j = j dr: a jet source per node and direction.
struct RadialSource {
    double s = 2.0;
    double dr = 0.01;
    int total = 0;  // nodes 0..total-1
    std::function<bool(int j)> live;
    std::function<Jet(int j, const Vec3& dir, int order)> jet;
};

inline RadialSource slice_source(const HyperboloidSlice& sl) {
    RadialSource src;
    src.s = sl.s;
    src.dr = sl.dr;
    src.total = sl.total;
    src.live = [&sl](int j) { return j > 0 && j >= sl.first && j < sl.first + static_cast<int>(sl.nodes.size()); };
    src.jet = [&sl](int j, const Vec3& dir, int order) { return slice_jet(sl.nodes[j - sl.first], dir, order); };
    return src;
}

/// A closed-form field u(p, order) restricted to H_s.
inline RadialSource field_source(const JetField& u, double s, double rmax, double dr) {
    RadialSource src;
    src.s = s;
    src.dr = dr;
    src.total = static_cast<int>(std::floor(rmax / dr)) + 1;
    src.live = [](int j) { return j > 0; };
    src.jet = [u, s, dr](int j, const Vec3& dir, int order) {
        double r = j * dr;
        return u(ConePoint::make(std::sqrt(s * s + r * r), {r * dir[0], r * dir[1], r * dir[2]}), order);
    };
    return src;
}

struct WordNorms {
    std::vector<Word> words;
    std::vector<double> energy;  // flat conformal energy of d^I L^J u
    std::vector<double> l2;      // ‖d^I L^J u‖
    double sup_t32_u = 0;        // sup t^{3/2} |u|
    double energy_root_sum() const {
        double a = 0;
        for (double e : energy) a += std::sqrt(std::max(0.0, e));
        return a;
    }
    double l2_sum() const {
        double a = 0;
        for (double e : l2) a += e;
        return a;
    }
};

namespace detail {

/// For each sphere point: the canonical direction it is a signed permutation of, and the
/// relabelling of spatial indices a -> π^{-1}(a).
struct SphereOrbit {
    int canonical;
    std::array<int, 4> inverse;  // index 0 (time) fixed
};

inline const std::array<Vec3, 3>& canonical_directions() {
    static const std::array<Vec3, 3> c = {
        Vec3{1, 0, 0}, Vec3{1 / std::sqrt(2.0), 1 / std::sqrt(2.0), 0},
        Vec3{1 / std::sqrt(3.0), 1 / std::sqrt(3.0), 1 / std::sqrt(3.0)}};
    return c;
}

inline SphereOrbit orbit_of(const Vec3& y) {
    std::vector<int> nz, z;
    for (int a = 0; a < 3; ++a) (std::abs(y[a]) > 1e-12 ? nz : z).push_back(a + 1);
    std::array<int, 4> pi{0, 0, 0, 0};  // pi[k] = image of canonical axis k
    std::vector<int> order = nz;
    order.insert(order.end(), z.begin(), z.end());
    for (int k = 1; k <= 3; ++k) pi[k] = order[k - 1];
    SphereOrbit o{static_cast<int>(nz.size()) - 1, {0, 0, 0, 0}};
    for (int k = 1; k <= 3; ++k) o.inverse[pi[k]] = k;
    return o;
}

inline Word relabel(const Word& w, const std::array<int, 4>& map) {
    Word out;
    out.I[0] = w.I[0];
    for (int a = 1; a <= 3; ++a) out.I[map[a]] = w.I[a];
    for (int a : w.J) out.J.push_back(map[a]);
    return out;
}

/// Conformal energy density (Kf + 2f)² + Σ_a (s dbar_a f)² and f² from a jet of order >= 1.
inline std::array<double, 2> densities(const Jet& f, double s, const FrameContext& ctx) {
    double k = apply_field(VectorField::conformal(), f, ctx).value() + 2 * f.value();
    double e = k * k;
    for (int a = 1; a <= 3; ++a) {
        double b = s * apply_field(VectorField::bar(a), f, ctx).value();
        e += b * b;
    }
    return {e, f.value() * f.value()};
}

}  // namespace detail

/// Energies and L² norms of d^I L^J u for |I| + |J| <= order, angular integrals by the
/// 26-point rule evaluated at three canonical directions and mapped by symmetry.
inline WordNorms word_norms(const RadialSource& src, int order = 2, int stride = 1) {
    WordNorms out;
    out.words = words_up_to(order);
    const std::size_t nw = out.words.size();
    std::map<Word, std::size_t> index;
    for (std::size_t k = 0; k < nw; ++k) index[out.words[k]] = k;
    // weight[c] : list of (word, mapped word, weight)
    struct Term {
        std::size_t w, m;
        double weight;
    };
    std::array<std::vector<Term>, 3> terms;
    for (const auto& p : lebedev26()) {
        auto o = detail::orbit_of(p.x);
        for (std::size_t k = 0; k < nw; ++k)
            terms[o.canonical].push_back({k, index.at(detail::relabel(out.words[k], o.inverse)), p.weight});
    }
    const auto& dirs = detail::canonical_directions();
    std::vector<std::vector<double>> ge(nw), gl(nw);
    std::vector<std::array<double, 2>> dens(nw);
    const int K = order + 1;
    for (int j = 0; j < src.total; j += stride) {
        if (!src.live(j)) {
            for (std::size_t k = 0; k < nw; ++k) {
                ge[k].push_back(0);
                gl[k].push_back(0);
            }
            continue;
        }
        const double r = j * src.dr;
        std::vector<double> e(nw, 0.0), l(nw, 0.0);
        for (int c = 0; c < 3; ++c) {
            Jet u = src.jet(j, dirs[c], K);
            if (c == 0) out.sup_t32_u = std::max(out.sup_t32_u, std::pow(u.base().t, 1.5) * std::abs(u.value()));
            FrameContext ctx(u.base(), K);
            for (std::size_t k = 0; k < nw; ++k) dens[k] = detail::densities(apply_word(out.words[k], u, ctx), src.s, ctx);
            for (const auto& t : terms[c]) {
                e[t.w] += t.weight * dens[t.m][0];
                l[t.w] += t.weight * dens[t.m][1];
            }
        }
        for (std::size_t k = 0; k < nw; ++k) {
            ge[k].push_back(e[k] * r * r);
            gl[k].push_back(l[k] * r * r);
        }
    }
    const double h = src.dr * stride;
    for (std::size_t k = 0; k < nw; ++k) {
        out.energy.push_back(radial_quadrature(ge[k], h).value);
        out.l2.push_back(std::sqrt(std::max(0.0, radial_quadrature(gl[k], h).value)));
    }
    return out;
}

/// C = sup t^{3/2}|u| / Σ_{|I|+|J|<=2} ‖d^I L^J u‖ on one hyperboloid.
inline double sobolev_constant(const RadialSource& src, int stride = 1) {
    WordNorms n = word_norms(src, 2, stride);
    double den = n.l2_sum();
    if (!(den > 0)) throw Error(ErrorKind::Degenerate, "zero denominator");
    return n.sup_t32_u / den;
}

// ------------------------------------------------------------------ slack

struct SlackSeries {
    std::vector<double> s, slack, tolerance;
    double worst = std::numeric_limits<double>::infinity();  // min(slack + tolerance)
    bool ok() const { return worst >= 0; }
};

namespace detail {

/// Cumulative trapezoid of f over s and a running estimate of its error.
inline void cumulative(const std::vector<double>& s, const std::vector<double>& f, std::vector<double>& I,
                       std::vector<double>& err) {
    I.assign(s.size(), 0.0);
    err.assign(s.size(), 0.0);
    for (std::size_t k = 1; k < s.size(); ++k) {
        double h = s[k] - s[k - 1];
        I[k] = I[k - 1] + 0.5 * h * (f[k] + f[k - 1]);
        double f2 = 0;
        if (s.size() >= 3) {
            std::size_t m = std::clamp<std::size_t>(k, 1, s.size() - 2);
            double h0 = s[m] - s[m - 1], h1 = s[m + 1] - s[m];
            f2 = 2 * ((f[m + 1] - f[m]) / h1 - (f[m] - f[m - 1]) / h0) / (h0 + h1);
        }
        err[k] = err[k - 1] + h * h * h / 12.0 * std::abs(f2);
    }
}

}  // namespace detail

/// slack(s) = E(s0)^{1/2} + 2 ∫ τ ‖□u‖ dτ - E(s)^{1/2}.
inline SlackSeries energy_inequality_slack(const std::vector<EnergyReport>& traj, const std::vector<double>& box_norm,
                                           double tolerance_scale = 1.0) {
    if (traj.size() != box_norm.size() || traj.empty())
        throw Error(ErrorKind::Degenerate, "trajectory and source norms differ in length");
    SlackSeries out;
    std::vector<double> s, f, I, err;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        if (k > 0 && !(traj[k].s > traj[k - 1].s)) throw Error(ErrorKind::Degenerate, "trajectory not increasing in s");
        s.push_back(traj[k].s);
        f.push_back(2 * traj[k].s * box_norm[k]);
    }
    detail::cumulative(s, f, I, err);
    auto root_err = [](const EnergyReport& e) { return e.E_flat > 0 ? e.quad_error / (2 * e.root()) : std::sqrt(e.quad_error); };
    for (std::size_t k = 0; k < traj.size(); ++k) {
        double sl = traj[0].root() + I[k] - traj[k].root();
        double tol = tolerance_scale * (3 * (root_err(traj[0]) + root_err(traj[k])) + 10 * err[k]);
        out.s.push_back(s[k]);
        out.slack.push_back(sl);
        out.tolerance.push_back(tol);
        out.worst = std::min(out.worst, sl + tol);
    }
    return out;
}

/// slack(s) = κ² E(s0)^{1/2} + κ ∫ τ ‖g dd u‖ dτ + κ² ∫ M_g dτ - E(s)^{1/2}, κ the running sup.
inline SlackSeries curved_energy_slack(const std::vector<EnergyReport>& traj, const std::vector<double>& operator_norm,
                                       const std::vector<double>& Mg, const std::vector<double>& kappa,
                                       double tolerance_scale = 1.0) {
    const std::size_t n = traj.size();
    if (operator_norm.size() != n || Mg.size() != n || kappa.size() != n || n == 0)
        throw Error(ErrorKind::Degenerate, "series differ in length");
    SlackSeries out;
    std::vector<double> s, f, m, I, J, e1, e2;
    for (std::size_t k = 0; k < n; ++k) {
        s.push_back(traj[k].s);
        f.push_back(traj[k].s * operator_norm[k]);
        m.push_back(Mg[k]);
    }
    detail::cumulative(s, f, I, e1);
    detail::cumulative(s, m, J, e2);
    double kap = 1.0;
    auto root_err = [](const EnergyReport& e) { return e.E_flat > 0 ? e.quad_error / (2 * e.root()) : std::sqrt(e.quad_error); };
    for (std::size_t k = 0; k < n; ++k) {
        kap = std::max(kap, kappa[k]);
        double sl = kap * kap * traj[0].root() + kap * I[k] + kap * kap * J[k] - traj[k].root();
        double tol = tolerance_scale * (3 * (root_err(traj[0]) + root_err(traj[k])) + 10 * (e1[k] + e2[k]));
        out.s.push_back(s[k]);
        out.slack.push_back(sl);
        out.tolerance.push_back(tol);
        out.worst = std::min(out.worst, sl + tol);
    }
    return out;
}

inline void require_slack(const SlackSeries& sl, const std::string& what) {
    for (std::size_t k = 0; k < sl.s.size(); ++k)
        if (sl.slack[k] < -sl.tolerance[k])
            throw Error(ErrorKind::InequalityViolation, what + ": slack " + std::to_string(sl.slack[k]) + " at s=" +
                                                            std::to_string(sl.s[k]) + " below -" +
                                                            std::to_string(sl.tolerance[k]));
}

// -------------------------------------------------------------- bootstrap

struct BootstrapLedger {
    double eps = 0;
    double C0 = 0, C1 = 0;
    std::map<double, double> sums;  // s -> Σ E^{1/2}
    std::optional<double> first_violation;
};

/// Records Σ_{|I|+|J|<=N} E^{1/2}(d^I L^J u) at s and flags the first s with Σ > C1 eps.
inline BootstrapLedger bootstrap_monitor(BootstrapLedger ledger, double s, const WordNorms& stack) {
    double sum = stack.energy_root_sum();
    ledger.sums[s] = sum;
    if (!ledger.first_violation && sum > ledger.C1 * ledger.eps) ledger.first_violation = s;
    return ledger;
}

// --------------------------------------------------------------------- CSV

struct TrajectoryRow {
    double s = 0, E_flat = 0, E_curved = std::numeric_limits<double>::quiet_NaN();
    double norm_u_over_r = 0, norm_dsu = 0, norm_da = 0;
    double slack = std::numeric_limits<double>::quiet_NaN(), Mg = std::numeric_limits<double>::quiet_NaN();
    double kappa = std::numeric_limits<double>::quiet_NaN();
};

inline std::string format_g17(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryRow>& rows) {
    os << "s,E_flat,E_curved,norm_u_over_r,norm_dsu,norm_da,slack,Mg,kappa\n";
    for (const auto& r : rows)
        os << format_g17(r.s) << ',' << format_g17(r.E_flat) << ',' << format_g17(r.E_curved) << ','
           << format_g17(r.norm_u_over_r) << ',' << format_g17(r.norm_dsu) << ',' << format_g17(r.norm_da) << ','
           << format_g17(r.slack) << ',' << format_g17(r.Mg) << ',' << format_g17(r.kappa) << '\n';
}

}  // namespace hyperconf
