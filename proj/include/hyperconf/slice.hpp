#pragma once

// Radial hyperboloid slices: per-node tables of (t, r) derivatives of a
// rotation-invariant solution, and the jets they induce in 3+1 coordinates.

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "cone.hpp"
#include "errors.hpp"
#include "forms.hpp"
#include "jets.hpp"

namespace hyperconf {

/// Rotation-invariant cubic form: Q^000 = A, Q^{ab0} = B δ^{ab}, Q^{a0b} = C δ^{ab}, Q^{0ab} = D δ^{ab}.
struct RadialForm {
    double A = 0, B = 0, C = 0, D = 0;

    bool linear() const { return A == 0 && B == 0 && C + D == 0; }

    CubicForm cubic() const {
        CubicForm q;
        q(0, 0, 0) = A;
        for (int a = 1; a <= 3; ++a) {
            q(a, a, 0) = B;
            q(a, 0, a) = C;
            q(0, a, a) = D;
        }
        return q;
    }

    static RadialForm from_cubic(const CubicForm& q) {
        RadialForm f{q(0, 0, 0), q(1, 1, 0), q(1, 0, 1), q(0, 1, 1)};
        const double tol = 1e-14 * std::max(1.0, q.max_abs());
        CubicForm back = f.cubic();
        for (int k = 0; k < 64; ++k)
            if (std::abs(back.Q[k] - q.Q[k]) > tol) {
                int a = k / 16, b = (k / 4) % 4, c = k % 4;
                throw Error(ErrorKind::FormNotRadial, "component (" + std::to_string(a) + "," + std::to_string(b) +
                                                          "," + std::to_string(c) + ") breaks rotation invariance");
            }
        return f;
    }

    /// Coefficients of (a) u_tt + (b) u_tr - (c) Δu, i.e. g^{ab} d_a d_b u for h = Q du.
    struct Principal {
        double a, b, c;
    };
    Principal principal(double ut, double ur) const { return {1.0 + A * ut, (C + D) * ur, 1.0 - B * ut}; }
};

/// Source term: □u + Q du ddu = F(t, r).
using RadialForcing = std::function<double(double t, double r)>;

/// Table entries d_t^i d_r^j u at a node, i + j <= 3.
enum Tab : int { kU, kUr, kUrr, kUrrr, kV, kVr, kVrr, kA, kAr, kAt };
inline constexpr int kTabSize = 10;
inline constexpr std::array<std::array<int, 2>, kTabSize> kTabOrders = {
    {{0, 0}, {0, 1}, {0, 2}, {0, 3}, {1, 0}, {1, 1}, {1, 2}, {2, 0}, {2, 1}, {3, 0}}};

struct SliceNode {
    double r = 0, t = 0;
    std::array<double, kTabSize> d{};

    double laplacian() const { return r > 0 ? d[kUrr] + 2.0 * d[kUr] / r : 3.0 * d[kUrr]; }
};

/// A hyperboloid {t = sqrt(s^2 + r^2)} sampled at radial nodes r_j = j dr, j = first .. first + n - 1;
/// nodes outside that range carry zero data.
struct HyperboloidSlice {
    double s = 2.0;
    double dr = 0.0;
    int first = 0;
    int total = 0;  // number of nodes up to the cone edge t - r >= kSliceEdge
    std::vector<SliceNode> nodes;
    RadialForm form;
    RadialForcing forcing;

    double r_at(int j) const { return j * dr; }

    double ut(const SliceNode& n) const { return n.d[kV]; }
    double dbar_s(const SliceNode& n) const { return s / n.t * n.d[kV]; }
    /// dbar_r u = (r/t) u_t + u_r; dbar_a u = (x^a/r) dbar_r u.
    double dbar_r(const SliceNode& n) const { return n.r / n.t * n.d[kV] + n.d[kUr]; }
    double Ku(const SliceNode& n) const { return (n.t * n.t + n.r * n.r) / n.t * n.d[kV] + 2.0 * n.r * n.d[kUr]; }
    double box(const SliceNode& n) const { return n.d[kA] - n.laplacian(); }
    /// g^{ab} d_a d_b u with h = Q du, minus the forcing (zero for an exact solution).
    double equation_residual(const SliceNode& n) const {
        auto p = form.principal(n.d[kV], n.d[kUr]);
        double f = forcing ? forcing(n.t, n.r) : 0.0;
        return p.a * n.d[kA] + p.b * n.d[kVr] - p.c * n.laplacian() - f;
    }
    double curved_operator(const SliceNode& n) const {
        auto p = form.principal(n.d[kV], n.d[kUr]);
        return p.a * n.d[kA] + p.b * n.d[kVr] - p.c * n.laplacian();
    }
};

/// Slices stop at t - r = kSliceEdge; solutions from data at t = 2 in r <= 1/2 vanish for t - r < 3/2.
inline constexpr double kSliceEdge = 1.25;

inline double slice_rmax(double s) { return (s * s - kSliceEdge * kSliceEdge) / (2.0 * kSliceEdge); }

/// Jet of u(t, x) = U(t, |x|) at (n.t, n.r * dir) from the Taylor table; dir is a unit vector, r > 0.
inline Jet slice_jet(const SliceNode& n, const Vec3& dir, int order) {
    if (order > 3) throw Error(ErrorKind::OrderTooHigh, "slice tables carry derivatives up to order 3");
    if (n.r <= 0) throw Error(ErrorKind::Degenerate, "slice jets are not defined on the axis");
    ConePoint p = ConePoint::make(n.t, {n.r * dir[0], n.r * dir[1], n.r * dir[2]});
    const int K = 3;
    Jet tau = Jet::coordinate(0, p, K) - n.t;
    Jet r2(p, K);
    for (int a = 1; a <= 3; ++a) {
        Jet x = Jet::coordinate(a, p, K);
        r2 += x * x;
    }
    Jet rho = sqrt(r2) - n.r;
    std::array<Jet, 4> tp{Jet::constant(1.0, p, K), tau, Jet(p, K), Jet(p, K)};
    std::array<Jet, 4> rp{Jet::constant(1.0, p, K), rho, Jet(p, K), Jet(p, K)};
    for (int k = 2; k <= 3; ++k) {
        tp[k] = tp[k - 1] * tau;
        rp[k] = rp[k - 1] * rho;
    }
    Jet u(p, K);
    for (int e = 0; e < kTabSize; ++e) {
        auto [i, j] = kTabOrders[e];
        if (n.d[e] != 0.0) u.add_scaled(n.d[e] / (factorial(i) * factorial(j)), tp[i] * rp[j]);
    }
    return u.truncated(order);
}

}  // namespace hyperconf
