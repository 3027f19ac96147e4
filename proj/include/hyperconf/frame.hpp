#pragma once

// Hyperbolic frame, transition matrices and vector fields acting on jets.

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "cone.hpp"
#include "errors.hpp"
#include "jets.hpp"

namespace hyperconf {

using Mat4 = std::array<std::array<double, 4>, 4>;

/// Minkowski metric, signature (+,-,-,-).
inline double minkowski(int a, int b) {
    if (a != b) return 0.0;
    return a == 0 ? 1.0 : -1.0;
}

struct FrameMatrices {
    Mat4 Phi{};   // Phi[alpha][beta]: dbar_alpha = Phi_alpha^beta d_beta
    Mat4 Psi{};   // inverse: d_alpha = Psi_alpha^beta dbar_beta
    Mat4 mbar{};  // Minkowski metric in the hyperbolic frame (upper indices)
};

inline FrameMatrices frame_matrices(const ConePoint& p) {
    const ConePoint q = ConePoint::make(p.t, p.x);
    const double t = q.t, s = q.s();
    FrameMatrices f;
    f.Phi[0][0] = s / t;
    f.Psi[0][0] = t / s;
    for (int a = 1; a <= 3; ++a) {
        const double xa = q.x[a - 1];
        f.Phi[a][0] = xa / t;
        f.Phi[a][a] = 1.0;
        f.Psi[a][0] = -xa / s;
        f.Psi[a][a] = 1.0;
    }
    f.mbar[0][0] = 1.0;
    for (int a = 1; a <= 3; ++a) {
        f.mbar[a][0] = f.mbar[0][a] = q.x[a - 1] / s;
        f.mbar[a][a] = -1.0;
    }
    return f;
}

inline Mat4 matmul(const Mat4& A, const Mat4& B) {
    Mat4 C{};
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k)
            for (int j = 0; j < 4; ++j) C[i][j] += A[i][k] * B[k][j];
    return C;
}

// ------------------------------------------------------------------ context

/// Coordinate-coefficient jets at one order.
struct CoefJets {
    Jet t, s, inv_t, inv_s, s_over_t, t_over_s, conformal_t;  // conformal_t = (t^2+r^2)/t
    std::array<Jet, 3> x, x_over_t, x_over_s;
};

/// Jets of the frame coefficients at a base point for every order up to a maximum.
class FrameContext {
public:
    FrameContext(const ConePoint& p, int max_order) : base_(p), by_order_(max_order + 1) {
        const int K = max_order;
        CoefJets& c = by_order_[K];
        c.t = Jet::coordinate(0, p, K);
        Jet r2 = Jet(p, K);
        for (int a = 0; a < 3; ++a) {
            c.x[a] = Jet::coordinate(a + 1, p, K);
            r2 += c.x[a] * c.x[a];
        }
        c.inv_t = recip(c.t);
        c.s = sqrt(c.t * c.t - r2);
        c.inv_s = recip(c.s);
        c.s_over_t = c.s * c.inv_t;
        c.t_over_s = c.t * c.inv_s;
        c.conformal_t = (c.t * c.t + r2) * c.inv_t;
        for (int a = 0; a < 3; ++a) {
            c.x_over_t[a] = c.x[a] * c.inv_t;
            c.x_over_s[a] = c.x[a] * c.inv_s;
        }
        for (int k = K - 1; k >= 0; --k) {
            CoefJets& d = by_order_[k];
            d.t = c.t.truncated(k);
            d.s = c.s.truncated(k);
            d.inv_t = c.inv_t.truncated(k);
            d.inv_s = c.inv_s.truncated(k);
            d.s_over_t = c.s_over_t.truncated(k);
            d.t_over_s = c.t_over_s.truncated(k);
            d.conformal_t = c.conformal_t.truncated(k);
            for (int a = 0; a < 3; ++a) {
                d.x[a] = c.x[a].truncated(k);
                d.x_over_t[a] = c.x_over_t[a].truncated(k);
                d.x_over_s[a] = c.x_over_s[a].truncated(k);
            }
        }
    }

    const ConePoint& base() const { return base_; }
    int max_order() const { return static_cast<int>(by_order_.size()) - 1; }

    const CoefJets& at(int order) const {
        if (order < 0 || order > max_order())
            throw Error(ErrorKind::OrderTooHigh, "frame context built for a lower order");
        return by_order_[order];
    }

private:
    ConePoint base_;
    std::vector<CoefJets> by_order_;
};

// ------------------------------------------------------------ vector fields

enum class FieldKind { Partial, BarS, Bar, Boost, Conformal };

struct VectorField {
    FieldKind kind = FieldKind::Partial;
    int index = 0;  // alpha for Partial (0..3), a for Bar / Boost (1..3)

    static VectorField partial(int alpha) { return {FieldKind::Partial, alpha}; }
    static VectorField bar_s() { return {FieldKind::BarS, 0}; }
    static VectorField bar(int a) { return {FieldKind::Bar, a}; }
    /// Hyperbolic frame field by frame index: 0 is dbar_s, 1..3 are dbar_a.
    static VectorField frame(int alpha) { return alpha == 0 ? bar_s() : bar(alpha); }
    static VectorField boost(int a) { return {FieldKind::Boost, a}; }
    static VectorField conformal() { return {FieldKind::Conformal, 0}; }
};

inline Jet apply_field(const VectorField& v, const Jet& u, const FrameContext& ctx) {
    if (u.order() < 1) throw Error(ErrorKind::OrderTooHigh, "vector field applied to an order-0 jet");
    const CoefJets& c = ctx.at(u.order() - 1);
    switch (v.kind) {
        case FieldKind::Partial: return u.derivative(v.index);
        case FieldKind::BarS: return c.s_over_t * u.derivative(0);
        case FieldKind::Bar: return c.x_over_t[v.index - 1] * u.derivative(0) + u.derivative(v.index);
        case FieldKind::Boost: return c.x[v.index - 1] * u.derivative(0) + c.t * u.derivative(v.index);
        case FieldKind::Conformal: {
            Jet out = c.conformal_t * u.derivative(0);
            for (int a = 1; a <= 3; ++a) out.add_scaled(2.0, c.x[a - 1] * u.derivative(a));
            return out;
        }
    }
    return u;
}

inline Jet apply_field(const VectorField& v, const Jet& u) {
    if (u.order() < 1) throw Error(ErrorKind::OrderTooHigh, "vector field applied to an order-0 jet");
    FrameContext ctx(u.base(), u.order() - 1);
    return apply_field(v, u, ctx);
}

/// Applies fields right to left: apply_word({A, B}, u) = A(B(u)).
inline Jet apply_fields(const std::vector<VectorField>& word, const Jet& u, const FrameContext& ctx) {
    Jet out = u;
    for (auto it = word.rbegin(); it != word.rend(); ++it) out = apply_field(*it, out, ctx);
    return out;
}

// ------------------------------------------------------- frame coefficients

/// Jet of Psi_alpha^beta at the given order.
inline Jet psi_jet(int alpha, int beta, const FrameContext& ctx, int order) {
    const CoefJets& c = ctx.at(order);
    if (beta == 0) {
        if (alpha == 0) return c.t_over_s;
        return -c.x_over_s[alpha - 1];
    }
    return Jet::constant(alpha == beta ? 1.0 : 0.0, ctx.base(), order);
}

/// Jet of Phi_alpha^beta at the given order.
inline Jet phi_jet(int alpha, int beta, const FrameContext& ctx, int order) {
    const CoefJets& c = ctx.at(order);
    if (beta == 0) {
        if (alpha == 0) return c.s_over_t;
        return c.x_over_t[alpha - 1];
    }
    return Jet::constant(alpha == beta ? 1.0 : 0.0, ctx.base(), order);
}

/// Max residual of d_alpha Psi_beta^0 = -s^-1 (Psi_alpha^0 Psi_beta^0 - m_{alpha beta})
/// over all 16 (alpha, beta); the remaining components are constant.
inline double psi_derivative_residual(const ConePoint& p) {
    const ConePoint q = ConePoint::make(p.t, p.x);
    FrameContext ctx(q, 1);
    const double inv_s = 1.0 / q.s();
    double worst = 0.0;
    for (int beta = 0; beta < 4; ++beta) {
        Jet pb = psi_jet(beta, 0, ctx, 1);
        for (int alpha = 0; alpha < 4; ++alpha) {
            double lhs = pb.derivative(alpha).value();
            double pa = psi_jet(alpha, 0, ctx, 0).value();
            double rhs = -inv_s * (pa * pb.value() - minkowski(alpha, beta));
            worst = std::max(worst, std::abs(lhs - rhs));
        }
    }
    return worst;
}

// ------------------------------------------------------------- homogeneity

struct HomogeneityFit {
    double slope = 0.0;
    int nearest = 0;
    double deviation = 0.0;     // |slope - nearest|
    double fit_residual = 0.0;  // max |log|f| - fitted line|
};

using FieldSampler = std::function<double(const ConePoint&)>;

/// Least-squares slope of log|f(lambda p)| against log(lambda).
inline HomogeneityFit homogeneity_degree(const FieldSampler& f, const ConePoint& p,
                                         const std::vector<double>& lambdas = {1.0, 2.0, 4.0}) {
    if (lambdas.size() < 3) throw Error(ErrorKind::DegenerateSample, "need at least three scale factors");
    std::vector<double> X, Y;
    for (double l : lambdas) {
        if (!(l > 0.0)) throw Error(ErrorKind::DegenerateSample, "scale factors must be positive");
        double v = f(p.scaled(l));
        if (v == 0.0 || !std::isfinite(v)) throw Error(ErrorKind::DegenerateSample, "sampler vanishes at a scaled point");
        X.push_back(std::log(l));
        Y.push_back(std::log(std::abs(v)));
    }
    const double n = static_cast<double>(X.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < X.size(); ++i) mx += X[i], my += Y[i];
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        sxx += (X[i] - mx) * (X[i] - mx);
        sxy += (X[i] - mx) * (Y[i] - my);
    }
    HomogeneityFit h;
    h.slope = sxy / sxx;
    h.nearest = static_cast<int>(std::lround(h.slope));
    h.deviation = std::abs(h.slope - h.nearest);
    for (std::size_t i = 0; i < X.size(); ++i)
        h.fit_residual = std::max(h.fit_residual, std::abs(Y[i] - (my + h.slope * (X[i] - mx))));
    return h;
}

}  // namespace hyperconf
