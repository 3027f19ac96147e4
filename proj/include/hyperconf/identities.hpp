#pragma once

// Pointwise residuals of the differential identities, evaluated with jets.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "commutators.hpp"
#include "cone.hpp"
#include "errors.hpp"
#include "forms.hpp"
#include "frame.hpp"
#include "jets.hpp"

namespace hyperconf {

struct Residual {
    double residual = 0.0;
    double scale = 0.0;  // largest term magnitude on either side
};

namespace detail {

inline void require_order(const Jet& u, int k, const char* what) {
    if (u.order() < k)
        throw Error(ErrorKind::OrderTooHigh, std::string(what) + " needs a jet of order >= " + std::to_string(k));
}

inline Residual make_residual(double lhs, double rhs, std::initializer_list<double> terms) {
    Residual r{std::abs(lhs - rhs), std::max(std::abs(lhs), std::abs(rhs))};
    for (double t : terms) r.scale = std::max(r.scale, std::abs(t));
    return r;
}

inline Jet frame_d(int alpha, const Jet& u, const FrameContext& ctx) {
    return apply_field(VectorField::frame(alpha), u, ctx);
}

/// dbar_alpha dbar_beta u
inline Jet frame_dd(int alpha, int beta, const Jet& u, const FrameContext& ctx) {
    return frame_d(alpha, frame_d(beta, u, ctx), ctx);
}

inline double box_value(const Jet& u) {
    double v = u.partial(unit_index(0, 2));
    for (int a = 1; a <= 3; ++a) v -= u.partial(unit_index(a, 2));
    return v;
}

inline double second_partial(const Jet& u, int a, int b) {
    MultiIndex m{0, 0, 0, 0};
    ++m[a];
    ++m[b];
    return u.partial(m);
}

}  // namespace detail

// ------------------------------------------------------ box and Hessian

/// □u = dbar_s dbar_s u + 2(x^a/s) dbar_s dbar_a u - sum_a dbar_a dbar_a u + (3/s) dbar_s u
inline Residual box_decomposition_residual(const Jet& u, const ConePoint& p) {
    detail::require_order(u, 2, "box decomposition");
    FrameContext ctx(p, 1);
    const double s = p.s();
    const double box = detail::box_value(u);
    const double ss = detail::frame_dd(0, 0, u, ctx).value();
    const double ds = detail::frame_d(0, u, ctx).value();
    double mixed = 0, lap = 0;
    for (int a = 1; a <= 3; ++a) {
        mixed += 2 * p.x[a - 1] / s * detail::frame_dd(0, a, u, ctx).value();
        lap += detail::frame_dd(a, a, u, ctx).value();
    }
    const double rhs = ss + mixed - lap + 3.0 / s * ds;
    return detail::make_residual(box, rhs, {ss, mixed, lap, 3.0 / s * ds});
}

struct HessianResidual {
    Residual bar_ss;  // dbar_s dbar_s u - □u - H1[u]
    Residual tt, ta, ab;
};

inline HessianResidual hessian_residual(const Jet& u, const ConePoint& p) {
    detail::require_order(u, 2, "Hessian decomposition");
    FrameContext ctx(p, 1);
    const double t = p.t, s = p.s(), r2 = p.r2();
    const auto& x = p.x;
    auto boost_bar = [&](int a, int beta) {
        return apply_field(VectorField::boost(a), detail::frame_d(beta, u, ctx), ctx).value();
    };
    const double ss = detail::frame_dd(0, 0, u, ctx).value();
    const double ds = detail::frame_d(0, u, ctx).value();
    HessianResidual out;

    double h1a = 0, h1b = 0;
    for (int a = 1; a <= 3; ++a) {
        h1a -= 2 * x[a - 1] / s / t * boost_bar(a, 0);
        h1b += boost_bar(a, a) / t;
    }
    const double box = detail::box_value(u);
    out.bar_ss = detail::make_residual(ss, box + h1a + h1b - 3.0 / s * ds, {box, h1a, h1b, 3.0 / s * ds});

    {
        double a1 = (t / s) * (t / s) * ss, a2 = -r2 / (s * s * s) * ds;
        out.tt = detail::make_residual(detail::second_partial(u, 0, 0), a1 + a2, {a1, a2});
    }
    for (int a = 1; a <= 3; ++a) {
        const double xa = x[a - 1];
        double a1 = -t * xa / (s * s) * ss, a2 = boost_bar(a, 0) / s, a3 = t * xa / (s * s * s) * ds;
        Residual r = detail::make_residual(detail::second_partial(u, 0, a), a1 + a2 + a3, {a1, a2, a3});
        if (r.residual >= out.ta.residual) out.ta.residual = r.residual;
        out.ta.scale = std::max(out.ta.scale, r.scale);
        for (int b = 1; b <= 3; ++b) {
            const double xb = x[b - 1];
            double c1 = xa * xb / (s * s) * ss, c2 = boost_bar(a, b) / t;
            double c3 = -xb / (s * t) * boost_bar(a, 0) - xa / (s * t) * boost_bar(b, 0);
            double c4 = -(a == b ? 1.0 : 0.0) / s * ds, c5 = -xa * xb / (s * s * s) * ds;
            Residual q =
                detail::make_residual(detail::second_partial(u, a, b), c1 + c2 + c3 + c4 + c5, {c1, c2, c3, c4, c5});
            out.ab.residual = std::max(out.ab.residual, q.residual);
            out.ab.scale = std::max(out.ab.scale, q.scale);
        }
    }
    return out;
}

// ---------------------------------------------------- flat multiplier

/// 2s(Ku + 2u)□u = dbar_s(|Ku|^2 + sum|s dbar_a u|^2 + 4uKu + 4u^2) + dbar_a v^a
inline Residual flat_multiplier_residual(const Jet& u, const ConePoint& p) {
    detail::require_order(u, 3, "flat multiplier identity");
    FrameContext ctx(p, 2);
    const Jet u2 = u.truncated(2);
    const Jet& s1 = ctx.at(1).s;
    const Jet u1 = u.truncated(1);
    const Jet Ku = apply_field(VectorField::conformal(), u2, ctx);
    std::array<Jet, 3> du;
    for (int a = 1; a <= 3; ++a) du[a - 1] = detail::frame_d(a, u2, ctx);
    Jet sum_du2 = du[0] * du[0] + du[1] * du[1] + du[2] * du[2];
    Jet density = Ku * Ku + s1 * s1 * sum_du2 + 4.0 * u1 * Ku + 4.0 * u1 * u1;
    const double flux = detail::frame_d(0, density, ctx).value();
    double div = 0;
    for (int a = 1; a <= 3; ++a) {
        const Jet& xa = ctx.at(1).x[a - 1];
        Jet v = -4.0 * s1 * u1 * du[a - 1] + 2.0 * s1 * xa * sum_du2 - 2.0 * s1 * du[a - 1] * Ku;
        div += detail::frame_d(a, v, ctx).value();
    }
    const double lhs = 2 * p.s() * (Ku.value() + 2 * u.value()) * detail::box_value(u);
    return detail::make_residual(lhs, flux + div, {flux, div});
}

// --------------------------------------------------- curved multiplier

struct CurvedMultiplierTerms {
    double Ku = 0;            // 𝒦_g u
    double N = 0;             // N_g
    double L[3][3] = {};      // L_g^{ab}
    double R = 0;             // R_g(∇u, ∇u)
    double S = 0;             // S_g[∇u]·(𝒦_g + N_g)u
    double T = 0;             // T_g[u]
    double w[3] = {}, v[3] = {};
    double dbar_s_N = 0;
    double lhs = 0, flux = 0, divergence = 0;
    double gbar[4][4] = {};
};

struct CurvedMultiplierResult {
    Residual residual;
    CurvedMultiplierTerms terms;
};

/// s(𝒦_g u + N_g u)·g^{ab}∂_a∂_b u
///   = ½ dbar_s(|𝒦_g u + N_g u|² − s² gbar^00 gbar^ab dbar_a u dbar_b u) + dbar_a w^a + R + S·(𝒦_g+N_g)u + T
inline CurvedMultiplierResult curved_multiplier_residual(const Jet& u, const MetricPerturbation& h, const ConePoint& p) {
    detail::require_order(u, 3, "curved multiplier identity");
    FrameContext ctx(p, 2);
    JetMatrix hj = h.jets(p, 2);
    for (const auto& row : hj)
        for (const auto& e : row)
            if (e.order() < 2) throw Error(ErrorKind::OrderTooHigh, "metric perturbation jets need order >= 2");
    Mat4 hv{};
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) hv[a][b] = hj[a][b].value();
    if (!is_lorentzian(hv)) throw Error(ErrorKind::NonLorentzian, "m + h is not Lorentzian at the queried point");

    // g and gbar at order 2
    JetMatrix g2, gb2;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            g2[a][b] = 0.5 * (hj[a][b].truncated(2) + hj[b][a].truncated(2)) + minkowski(a, b);
    std::array<std::array<Jet, 4>, 4> psi;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) psi[a][b] = psi_jet(a, b, ctx, 2);
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            gb2[a][b] = Jet(p, 2);
            for (int x = 0; x < 4; ++x)
                for (int y = 0; y < 4; ++y) gb2[a][b] += g2[x][y] * psi[x][a] * psi[y][b];
        }

    JetMatrix g1, gb1;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) g1[a][b] = g2[a][b].truncated(1), gb1[a][b] = gb2[a][b].truncated(1);
    // dgb[c][a][b] = dbar_c gbar^{ab}, order 1
    std::array<JetMatrix, 4> dgb;
    for (int c = 0; c < 4; ++c)
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) dgb[c][a][b] = detail::frame_d(c, gb2[a][b], ctx);

    const Jet& s1 = ctx.at(1).s;
    const Jet& s2 = ctx.at(2).s;
    const double s = p.s();
    const Jet u1 = u.truncated(1);
    std::array<Jet, 4> du;
    for (int a = 0; a < 4; ++a) du[a] = detail::frame_d(a, u.truncated(2), ctx);

    Jet N = g1[0][0] - 2.0 * gb1[0][0] - s1 * dgb[0][0][0];
    for (int a = 1; a <= 3; ++a) N -= g1[a][a];
    Jet Ku = gb1[0][0] * du[0];
    for (int a = 1; a <= 3; ++a) Ku.add_scaled(2.0, gb1[a][0] * du[a]);
    Ku = s1 * Ku;
    Jet P = Ku + N * u1;

    Jet spatial = Jet(p, 1);
    for (int a = 1; a <= 3; ++a)
        for (int b = 1; b <= 3; ++b) spatial += gb1[a][b] * du[a] * du[b];
    Jet density = P * P - s1 * s1 * gb1[0][0] * spatial;

    CurvedMultiplierTerms T;
    T.flux = 0.5 * detail::frame_d(0, density, ctx).value();
    for (int a = 1; a <= 3; ++a) {
        Jet gdu = Jet(p, 1);
        for (int b = 1; b <= 3; ++b) gdu += gb1[a][b] * du[b];
        Jet v = s1 * Ku * gdu - s1 * s1 * gb1[a][0] * spatial;
        Jet w = v + N * s1 * u1 * gdu;
        T.v[a - 1] = v.value();
        T.w[a - 1] = w.value();
        T.divergence += detail::frame_d(a, w, ctx).value();
    }

    // values
    double gbv[4][4], dgbv[4][4][4], duv[4];
    for (int a = 0; a < 4; ++a) {
        duv[a] = du[a].value();
        for (int b = 0; b < 4; ++b) {
            gbv[a][b] = gb1[a][b].value();
            T.gbar[a][b] = gbv[a][b];
            for (int c = 0; c < 4; ++c) dgbv[c][a][b] = dgb[c][a][b].value();
        }
    }
    T.N = N.value();
    T.Ku = Ku.value();
    const double uv = u.value();
    const double Pv = T.Ku + T.N * uv;
    std::array<double, 4> dN;
    for (int a = 0; a < 4; ++a) dN[a] = detail::frame_d(a, N, ctx).value();
    T.dbar_s_N = dN[0];

    // L^{ab} = gbar^00 gbar^ab + s dbar_c(gbar^0c gbar^ab) - 2s dbar_c gbar^0a gbar^cb
    for (int a = 1; a <= 3; ++a)
        for (int b = 1; b <= 3; ++b) {
            double v = gbv[0][0] * gbv[a][b];
            for (int c = 1; c <= 3; ++c) {
                v += s * detail::frame_d(c, gb2[0][c] * gb2[a][b], ctx).value();
                v -= 2 * s * dgbv[c][0][a] * gbv[c][b];
            }
            T.L[a - 1][b - 1] = v;
        }

    double R = T.N * T.Ku * duv[0];
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) R -= T.N * s * gbv[a][b] * duv[a] * duv[b];
    for (int a = 1; a <= 3; ++a)
        for (int b = 1; b <= 3; ++b) {
            R += s * T.L[a - 1][b - 1] * duv[a] * duv[b];
            R += 0.5 * s * s * detail::frame_d(0, gb2[0][0] * gb2[a][b], ctx).value() * duv[a] * duv[b];
            R -= s * s * dgbv[a][0][0] * gbv[a][b] * duv[0] * duv[b];
        }
    T.R = R;

    double Sg = 0;
    for (int a = 1; a <= 3; ++a) {
        Sg += 2 * detail::frame_d(0, s2 * gb2[a][0], ctx).value() * duv[a];
        for (int b = 1; b <= 3; ++b) Sg += s * dgbv[a][a][b] * duv[b];
    }
    T.S = -Pv * Sg;

    double Tg = -dN[0] * uv * Pv;
    for (int a = 1; a <= 3; ++a)
        for (int b = 1; b <= 3; ++b) Tg -= s * uv * gbv[a][b] * dN[a] * duv[b];
    T.T = Tg;

    double gdd = 0;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) gdd += g1[a][b].value() * detail::second_partial(u, a, b);
    T.lhs = s * Pv * gdd;

    const double rhs = T.flux + T.divergence + T.R + T.S + T.T;
    return {detail::make_residual(T.lhs, rhs, {T.flux, T.divergence, T.R, T.S, T.T}), T};
}

// -------------------------------------------------- null decomposition

/// Q^{abc} ∂_c u ∂_a∂_b u = Qbar^{abc} dbar_c u dbar_a dbar_b u
///   − s^{-1} Qbar^{00c} dbar_c u dbar_s u + s^{-1} Q^{00c} ∂_c u dbar_s u − s^{-1} sum_a Q^{aac} ∂_c u dbar_s u
inline Residual null_decomposition_residual(const CubicForm& Q, const Jet& u, const ConePoint& p) {
    detail::require_order(u, 2, "null decomposition");
    FrameContext ctx(p, 1);
    const double s = p.s();
    const CubicForm Qb = hyperbolic_components(Q, p);
    double d[4], db[4], dbb[4][4];
    for (int a = 0; a < 4; ++a) {
        d[a] = u.partial(unit_index(a));
        db[a] = detail::frame_d(a, u, ctx).value();
    }
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) dbb[a][b] = detail::frame_dd(a, b, u, ctx).value();

    double lhs = 0, main0 = 0, rest = 0;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c) {
                lhs += Q(a, b, c) * d[c] * detail::second_partial(u, a, b);
                double term = Qb(a, b, c) * db[c] * dbb[a][b];
                (a == 0 && b == 0 && c == 0 ? main0 : rest) += term;
            }
    double extra = 0;
    for (int c = 0; c < 4; ++c) {
        extra -= Qb(0, 0, c) * db[c] * db[0] / s;
        extra += Q(0, 0, c) * d[c] * db[0] / s;
        for (int a = 1; a <= 3; ++a) extra -= Q(a, a, c) * d[c] * db[0] / s;
    }
    return detail::make_residual(lhs, main0 + rest + extra, {main0, rest, extra});
}

// ----------------------------------------------------------- commutators

enum class CommutatorKind {
    BoostPartial,   // [L_a, ∂_alpha] = theta
    PartialBar,     // [∂_alpha, dbar_b]
    BoostBar,       // [L_a, dbar_b] = -(x^b/t) dbar_a
    WordBarS,       // [∂^I L^J, dbar_s], lemma ratio
    WordBarSS,      // [∂^I L^J, dbar_s dbar_s]
    WordBarSA,      // [∂^I L^J, dbar_s dbar_a]
    WordBarAB,      // [∂^I L^J, dbar_a dbar_b]
};

struct CommutatorId {
    CommutatorKind kind = CommutatorKind::BoostPartial;
    int a = 1, b = 1;  // for BoostPartial and PartialBar, b carries alpha / a carries alpha respectively
    Word word;

    bool is_lemma() const { return kind >= CommutatorKind::WordBarS; }
};

inline std::string to_string(CommutatorKind k) {
    switch (k) {
        case CommutatorKind::BoostPartial: return "boost_partial";
        case CommutatorKind::PartialBar: return "partial_bar";
        case CommutatorKind::BoostBar: return "boost_bar";
        case CommutatorKind::WordBarS: return "word_bar_s";
        case CommutatorKind::WordBarSS: return "word_bar_ss";
        case CommutatorKind::WordBarSA: return "word_bar_sa";
        case CommutatorKind::WordBarAB: return "word_bar_ab";
    }
    return "?";
}

inline CommutatorKind parse_commutator_kind(const std::string& name) {
    for (int k = 0; k <= static_cast<int>(CommutatorKind::WordBarAB); ++k)
        if (to_string(static_cast<CommutatorKind>(k)) == name) return static_cast<CommutatorKind>(k);
    throw Error(ErrorKind::UnknownIdentity, "unknown commutator id '" + name + "'");
}

namespace detail {

/// The operator X on the right of the commutator, applied to u.
inline Jet commutator_target(const CommutatorId& id, const Jet& u, const FrameContext& ctx) {
    switch (id.kind) {
        case CommutatorKind::WordBarS: return frame_d(0, u, ctx);
        case CommutatorKind::WordBarSS: return frame_dd(0, 0, u, ctx);
        case CommutatorKind::WordBarSA: return frame_dd(0, id.a, u, ctx);
        case CommutatorKind::WordBarAB: return frame_dd(id.a, id.b, u, ctx);
        default: break;
    }
    return u;
}

inline double lemma_bound(const CommutatorId& id, const Jet& u, const FrameContext& ctx) {
    const ConePoint& p = ctx.base();
    const double t = p.t, s = p.s();
    const int nI = degree(id.word.I), nJ = static_cast<int>(id.word.J.size());
    double B = 0;
    for (const auto& w : words_up_to(nI + nJ)) {
        const int mI = degree(w.I), mJ = static_cast<int>(w.J.size());
        if (mI > nI || mJ > nJ) continue;
        Jet v = apply_word(w, u, ctx);
        switch (id.kind) {
            case CommutatorKind::WordBarS:
                if (mI < nI && mJ == nJ && w.J == id.word.J) B += std::abs(v.derivative(0).value()) / s;
                if (mJ < nJ)
                    for (int al = 0; al < 4; ++al) B += (s / t) * std::abs(v.derivative(al).value());
                break;
            case CommutatorKind::WordBarSS:
                if (mI + mJ >= nI + nJ) break;
                for (int al = 0; al < 4; ++al) {
                    B += std::abs(v.derivative(al).value()) / t;
                    for (int be = 0; be < 4; ++be) B += (s / t) * (s / t) * std::abs(second_partial(v, al, be));
                }
                break;
            case CommutatorKind::WordBarSA:
                B += std::abs(frame_d(0, v, ctx).value()) / t + (s / (t * t)) * std::abs(v.value());
                for (int c = 1; c <= 3; ++c) B += (s / (t * t)) * std::abs(frame_d(c, v, ctx).value());
                break;
            case CommutatorKind::WordBarAB:
                B += std::abs(v.value()) / (t * t);
                for (int c = 1; c <= 3; ++c) B += std::abs(frame_d(c, v, ctx).value()) / t;
                break;
            default: break;
        }
    }
    return B;
}

}  // namespace detail

/// Closed forms: |commutator u - closed form|. Lemma forms: |commutator u| / bound expression
/// (residual field holds the ratio, scale the bound).
inline Residual commutator_residual(const CommutatorId& id, const Jet& u, const ConePoint& p) {
    FrameContext ctx(p, std::max(0, u.order() - 1));
    switch (id.kind) {
        case CommutatorKind::BoostPartial: {
            detail::require_order(u, 2, "commutator");
            const VectorField L = VectorField::boost(id.a), D = VectorField::partial(id.b);
            double lhs = apply_field(L, apply_field(D, u, ctx), ctx).value() -
                         apply_field(D, apply_field(L, u, ctx), ctx).value();
            // [L_a, ∂_t] = -∂_a, [L_a, ∂_b] = -δ_ab ∂_t
            double rhs = id.b == 0 ? -u.partial(unit_index(id.a)) : (id.a == id.b ? -u.partial(unit_index(0)) : 0.0);
            return detail::make_residual(lhs, rhs, {});
        }
        case CommutatorKind::PartialBar: {
            detail::require_order(u, 2, "commutator");
            const int al = id.a, b = id.b;
            const VectorField D = VectorField::partial(al), B = VectorField::bar(b);
            double lhs = apply_field(D, apply_field(B, u, ctx), ctx).value() -
                         apply_field(B, apply_field(D, u, ctx), ctx).value();
            // [∂_t, dbar_b] = -(x^b/t^2)∂_t, [∂_c, dbar_b] = (δ_cb/t)∂_t
            const double dt = u.partial(unit_index(0));
            double rhs = al == 0 ? -p.x[b - 1] / (p.t * p.t) * dt : (al == b ? dt / p.t : 0.0);
            return detail::make_residual(lhs, rhs, {});
        }
        case CommutatorKind::BoostBar: {
            detail::require_order(u, 2, "commutator");
            const VectorField L = VectorField::boost(id.a), B = VectorField::bar(id.b);
            double lhs = apply_field(L, apply_field(B, u, ctx), ctx).value() -
                         apply_field(B, apply_field(L, u, ctx), ctx).value();
            double rhs = -p.x[id.b - 1] / p.t * apply_field(VectorField::bar(id.a), u, ctx).value();
            return detail::make_residual(lhs, rhs, {});
        }
        default: break;
    }
    const int need = id.word.order() + (id.kind == CommutatorKind::WordBarS ? 1 : 2) + 1;
    detail::require_order(u, need, "lemma commutator ratio");
    double comm = apply_word(id.word, detail::commutator_target(id, u, ctx), ctx).value() -
                  detail::commutator_target(id, apply_word(id.word, u, ctx), ctx).value();
    double bound = detail::lemma_bound(id, u, ctx);
    Residual r;
    r.scale = bound;
    r.residual = bound > 0 ? std::abs(comm) / bound : (std::abs(comm) > 0 ? INFINITY : 0.0);
    return r;
}

/// Max residual over all closed-form commutators at p.
inline Residual closed_commutators_residual(const Jet& u, const ConePoint& p) {
    Residual out;
    auto take = [&](const CommutatorId& id) {
        Residual r = commutator_residual(id, u, p);
        out.residual = std::max(out.residual, r.residual);
        out.scale = std::max(out.scale, r.scale);
    };
    for (int a = 1; a <= 3; ++a)
        for (int b = 0; b < 4; ++b) {
            take({CommutatorKind::BoostPartial, a, b, {}});
            take({CommutatorKind::PartialBar, b, a, {}});
            if (b >= 1) take({CommutatorKind::BoostBar, a, b, {}});
        }
    return out;
}

// -------------------------------------------------------- test fields

struct TestField {
    std::string name;
    JetField eval;
};

inline std::vector<TestField> test_field_suite() {
    std::vector<TestField> out;
    out.push_back({"constant", [](const ConePoint& p, int K) { return Jet::constant(1.7, p, K); }});
    out.push_back({"coordinates", [](const ConePoint& p, int K) {
                       return 0.3 * Jet::coordinate(0, p, K) - 0.7 * Jet::coordinate(1, p, K) +
                              1.1 * Jet::coordinate(2, p, K) + 0.2 * Jet::coordinate(3, p, K);
                   }});
    out.push_back({"interval", [](const ConePoint& p, int K) {
                       Jet t = Jet::coordinate(0, p, K);
                       Jet r2 = Jet(p, K);
                       for (int a = 1; a <= 3; ++a) r2 += Jet::coordinate(a, p, K) * Jet::coordinate(a, p, K);
                       return t * t - r2;
                   }});
    out.push_back({"poly_bump", [](const ConePoint& p, int K) {
                       Jet t = Jet::coordinate(0, p, K), x1 = Jet::coordinate(1, p, K), x2 = Jet::coordinate(2, p, K),
                           x3 = Jet::coordinate(3, p, K);
                       Jet r2 = x1 * x1 + x2 * x2 + x3 * x3;
                       return (1.0 + 0.3 * t * x1 - 0.5 * x2 * x3 + 0.05 * t * t) * exp(-((t - 5.0) * (t - 5.0) + r2) / 8.0);
                   }});
    out.push_back({"outgoing_wave", [](const ConePoint& p, int K) {
                       // g(t - r)/r with g a smooth bump supported in (1, 1.8)
                       const double c = 1.4, w = 0.4;
                       const double q = (p.t - p.r() - c) / w;
                       if (std::abs(q) >= 1.0) return Jet(p, K);
                       Jet t = Jet::coordinate(0, p, K);
                       Jet r2 = Jet(p, K);
                       for (int a = 1; a <= 3; ++a) r2 += Jet::coordinate(a, p, K) * Jet::coordinate(a, p, K);
                       Jet r = sqrt(r2);
                       Jet z = (t - r - c) / w;
                       return exp(-1.0 / (1.0 - z * z)) * 10.0 / r;
                   }});
    return out;
}

// -------------------------------------------------------------- sweeps

struct IdentityResidualReport {
    std::string identity;
    std::string field;
    std::size_t n_points = 0;
    double max_residual = 0;
    double max_scale = 0;
    double worst_relative = 0;  // max residual / max(scale, 1e-300) over points
    ConePoint point{};

    bool pass(double tol) const { return max_residual <= tol * std::max(max_scale, 1e-300) || max_residual == 0.0; }
};

using IdentityEvaluator = std::function<Residual(const Jet&, const ConePoint&)>;

struct IdentityCase {
    std::string name;
    int order;  // jet order the evaluator needs
    IdentityEvaluator eval;
};

inline IdentityResidualReport sweep_identity(const IdentityCase& id, const TestField& f,
                                             const std::vector<ConePoint>& points) {
    IdentityResidualReport rep;
    rep.identity = id.name;
    rep.field = f.name;
    rep.n_points = points.size();
    if (!points.empty()) rep.point = points.front();
    for (const auto& p : points) {
        Residual r = id.eval(f.eval(p, id.order), p);
        rep.max_scale = std::max(rep.max_scale, r.scale);
        if (r.residual > rep.max_residual) {
            rep.max_residual = r.residual;
            rep.point = p;
        }
        if (r.scale > 0) rep.worst_relative = std::max(rep.worst_relative, r.residual / r.scale);
    }
    return rep;
}

/// Small smooth field for quasilinear metric perturbations.
inline Jet perturbation_source(const ConePoint& p, int K) {
    Jet t = Jet::coordinate(0, p, K), x1 = Jet::coordinate(1, p, K), x2 = Jet::coordinate(2, p, K);
    return 0.05 * sin(0.3 * t - 0.2 * x1) * cos(0.25 * x2) / t;
}

/// The nine identities of the suite.
inline std::vector<IdentityCase> identity_cases() {
    std::vector<IdentityCase> out;
    out.push_back({"box_decomposition", 2, box_decomposition_residual});
    out.push_back({"flat_multiplier", 3, flat_multiplier_residual});
    auto curved = [](MetricPerturbation h) {
        return [h](const Jet& u, const ConePoint& p) { return curved_multiplier_residual(u, h, p).residual; };
    };
    out.push_back({"curved_multiplier_h0", 3, curved(MetricPerturbation::zero())});
    out.push_back({"curved_multiplier_conformal", 3, curved(MetricPerturbation::conformal(0.01))});
    out.push_back({"curved_multiplier_quasilinear", 3,
                   curved(MetricPerturbation::quasilinear(CubicForm::minkowski_times({1.0, 0.3, -0.2, 0.1}),
                                                          perturbation_source))});
    out.push_back({"hessian", 2, [](const Jet& u, const ConePoint& p) {
                       HessianResidual h = hessian_residual(u, p);
                       Residual r;
                       for (const Residual& q : {h.bar_ss, h.tt, h.ta, h.ab}) {
                           r.residual = std::max(r.residual, q.residual);
                           r.scale = std::max(r.scale, q.scale);
                       }
                       return r;
                   }});
    out.push_back({"null_decomposition", 2, [](const Jet& u, const ConePoint& p) {
                       CubicForm Q = CubicForm::minkowski_times({1, 0, 0, 0});
                       Q(0, 0, 0) += 1.0;  // plus a non-null part
                       Q(1, 2, 3) += 0.5;
                       return null_decomposition_residual(Q, u, p);
                   }});
    out.push_back({"psi_derivatives", 0, [](const Jet&, const ConePoint& p) {
                       // identities are exact in t/s and x/s, whose size sets the scale
                       return Residual{psi_derivative_residual(p), p.t / p.s() * p.t / p.s()};
                   }});
    out.push_back({"closed_commutators", 2, closed_commutators_residual});
    return out;
}

inline nlohmann::json to_json(const IdentityResidualReport& r) {
    return {{"identity", r.identity},
            {"field", r.field},
            {"n_points", r.n_points},
            {"max_residual", r.max_residual},
            {"max_scale", r.max_scale},
            {"point", {r.point.t, r.point.x[0], r.point.x[1], r.point.x[2]}}};
}

}  // namespace hyperconf
