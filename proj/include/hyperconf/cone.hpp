#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <vector>

#include "errors.hpp"

namespace hyperconf {

using Vec3 = std::array<double, 3>;

/// Points closer than this to t = r + 1 are rejected.
inline constexpr double kConeMargin = 1e-9;

/// A spacetime point in the truncated cone t > |x| + 1.
struct ConePoint {
    double t = 2.0;
    Vec3 x{0.0, 0.0, 0.0};

    static ConePoint make(double t, const Vec3& x) {
        ConePoint p{t, x};
        if (!(t - p.r() - 1.0 > kConeMargin)) {
            std::ostringstream os;
            os << "(t=" << t << ", r=" << p.r() << ") is not inside t > r + 1";
            throw Error(ErrorKind::OutsideCone, os.str());
        }
        return p;
    }

    /// Inverse of the hyperbolic parametrization: t = sqrt(s^2 + |xbar|^2).
    static ConePoint from_hyperbolic(double s, const Vec3& xbar) {
        double r2 = xbar[0] * xbar[0] + xbar[1] * xbar[1] + xbar[2] * xbar[2];
        return make(std::sqrt(s * s + r2), xbar);
    }

    double r2() const { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2]; }
    double r() const { return std::sqrt(r2()); }
    double s() const { return std::sqrt(t * t - r2()); }
    /// Coordinate by axis: 0 is t, 1..3 are x^1..x^3.
    double coord(int axis) const { return axis == 0 ? t : x[axis - 1]; }

    ConePoint scaled(double lambda) const {
        return make(lambda * t, {lambda * x[0], lambda * x[1], lambda * x[2]});
    }

    friend bool operator==(const ConePoint& a, const ConePoint& b) {
        return a.t == b.t && a.x == b.x;
    }
};

struct HyperbolicCoords {
    double s;
    Vec3 xbar;
};

inline HyperbolicCoords to_hyperbolic(double t, const Vec3& x) {
    ConePoint p = ConePoint::make(t, x);
    return {p.s(), x};
}

/// Deterministic points of the cone with s0 <= s <= s1: s uniform, direction uniform,
/// r uniform over the admissible range t - r > 1 (shrunk by the given fraction).
inline std::vector<ConePoint> sample_cone_points(std::size_t n, double s0, double s1, std::uint64_t seed,
                                                 double fraction = 0.95) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::normal_distribution<double> N(0.0, 1.0);
    std::vector<ConePoint> out;
    out.reserve(n);
    while (out.size() < n) {
        double s = s0 + (s1 - s0) * U(rng);
        double rmax = fraction * (s * s - 1.0) / 2.0;
        double r = rmax * U(rng);
        Vec3 d{N(rng), N(rng), N(rng)};
        double nd = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
        if (nd < 1e-12) continue;
        Vec3 x{r * d[0] / nd, r * d[1] / nd, r * d[2] / nd};
        out.push_back(ConePoint::from_hyperbolic(s, x));
    }
    return out;
}

}  // namespace hyperconf
