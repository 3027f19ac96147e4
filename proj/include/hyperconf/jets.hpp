#pragma once

// Truncated Taylor jets in the four variables (t, x1, x2, x3).
//
// A jet of order K stores c_alpha = d^alpha f / alpha! for |alpha| <= K in a
// dense graded-lex layout. The layout is a prefix code: the position of a
// multi-index does not depend on K, so truncation is a resize.

#include <array>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include "cone.hpp"
#include "errors.hpp"

namespace hyperconf {

inline constexpr int kMaxJetOrder = 6;
inline constexpr int kJetVars = 4;

using MultiIndex = std::array<int, kJetVars>;

inline int degree(const MultiIndex& a) { return a[0] + a[1] + a[2] + a[3]; }

inline double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

/// alpha! = prod alpha_i!
inline double multi_factorial(const MultiIndex& a) {
    return factorial(a[0]) * factorial(a[1]) * factorial(a[2]) * factorial(a[3]);
}

/// C(K+4, 4), the number of coefficients of an order-K jet.
inline constexpr std::size_t jet_size(int order) {
    std::size_t k = static_cast<std::size_t>(order);
    return (k + 1) * (k + 2) * (k + 3) * (k + 4) / 24;
}

namespace detail {

struct JetTables {
    struct Pair {
        int i, j, k;
    };

    std::vector<MultiIndex> index;
    std::vector<int> lookup;  // base-(K+1) code -> position
    std::vector<Pair> pairs;  // sorted by degree of the product index
    std::array<std::size_t, kMaxJetOrder + 1> pair_count{};
    // d/dx_v maps position k (order K-1 jet) <- position src[v][k] times fac[v][k]
    std::array<std::vector<int>, kJetVars> dsrc;
    std::array<std::vector<double>, kJetVars> dfac;

    static int code(const MultiIndex& a) {
        constexpr int b = kMaxJetOrder + 1;
        return ((a[0] * b + a[1]) * b + a[2]) * b + a[3];
    }

    int position(const MultiIndex& a) const {
        for (int v : a)
            if (v < 0 || v > kMaxJetOrder) return -1;
        if (degree(a) > kMaxJetOrder) return -1;
        return lookup[code(a)];
    }

    JetTables() {
        for (int d = 0; d <= kMaxJetOrder; ++d)
            for (int a0 = d; a0 >= 0; --a0)
                for (int a1 = d - a0; a1 >= 0; --a1)
                    for (int a2 = d - a0 - a1; a2 >= 0; --a2)
                        index.push_back({a0, a1, a2, d - a0 - a1 - a2});
        constexpr int b = kMaxJetOrder + 1;
        lookup.assign(b * b * b * b, -1);
        for (std::size_t p = 0; p < index.size(); ++p) lookup[code(index[p])] = static_cast<int>(p);

        std::vector<std::vector<Pair>> by_degree(kMaxJetOrder + 1);
        for (std::size_t i = 0; i < index.size(); ++i)
            for (std::size_t j = 0; j < index.size(); ++j) {
                MultiIndex s{};
                for (int v = 0; v < kJetVars; ++v) s[v] = index[i][v] + index[j][v];
                int d = degree(s);
                if (d > kMaxJetOrder) continue;
                by_degree[d].push_back({static_cast<int>(i), static_cast<int>(j), lookup[code(s)]});
            }
        for (int d = 0; d <= kMaxJetOrder; ++d) {
            pairs.insert(pairs.end(), by_degree[d].begin(), by_degree[d].end());
            pair_count[d] = pairs.size();
        }

        std::size_t n = jet_size(kMaxJetOrder - 1);
        for (int v = 0; v < kJetVars; ++v) {
            dsrc[v].resize(n);
            dfac[v].resize(n);
            for (std::size_t k = 0; k < n; ++k) {
                MultiIndex a = index[k];
                a[v] += 1;
                dsrc[v][k] = lookup[code(a)];
                dfac[v][k] = static_cast<double>(a[v]);
            }
        }
    }
};

inline const JetTables& jet_tables() {
    static const JetTables t;
    return t;
}

}  // namespace detail

class Jet {
public:
    Jet() = default;

    /// Zero jet.
    Jet(const ConePoint& base, int order) : base_(base), order_(order) {
        if (order < 0 || order > kMaxJetOrder) {
            std::ostringstream os;
            os << "jet order " << order << " outside [0, " << kMaxJetOrder << "]";
            throw Error(ErrorKind::OrderTooHigh, os.str());
        }
        c_.assign(jet_size(order), 0.0);
    }

    static Jet constant(double value, const ConePoint& base, int order) {
        Jet j(base, order);
        j.c_[0] = value;
        return j;
    }

    /// axis 0 is t, 1..3 are x^1..x^3.
    static Jet coordinate(int axis, const ConePoint& base, int order) {
        Jet j(base, order);
        j.c_[0] = base.coord(axis);
        if (order >= 1) j.c_[1 + axis] = 1.0;
        return j;
    }

    int order() const { return order_; }
    const ConePoint& base() const { return base_; }
    std::size_t size() const { return c_.size(); }
    double value() const { return c_[0]; }
    const std::vector<double>& coeffs() const { return c_; }
    double& operator[](std::size_t k) { return c_[k]; }
    double operator[](std::size_t k) const { return c_[k]; }

    /// Stored Taylor coefficient (zero for indices above the order).
    double coeff(const MultiIndex& a) const {
        if (degree(a) > order_) return 0.0;
        int p = detail::jet_tables().position(a);
        return p < 0 ? 0.0 : c_[p];
    }

    /// Mixed partial d^alpha f at the base point.
    double partial(const MultiIndex& a) const {
        if (degree(a) > order_) {
            std::ostringstream os;
            os << "partial of order " << degree(a) << " from a jet of order " << order_;
            throw Error(ErrorKind::OrderTooHigh, os.str());
        }
        return multi_factorial(a) * coeff(a);
    }

    Jet truncated(int order) const {
        if (order > order_) throw Error(ErrorKind::OrderTooHigh, "cannot raise jet order by truncation");
        Jet j = *this;
        j.order_ = order;
        j.c_.resize(jet_size(order));
        return j;
    }

    /// d/dx_axis, one order lower.
    Jet derivative(int axis) const {
        if (order_ < 1) throw Error(ErrorKind::OrderTooHigh, "derivative of an order-0 jet");
        const auto& tb = detail::jet_tables();
        Jet j(base_, order_ - 1);
        for (std::size_t k = 0; k < j.c_.size(); ++k) j.c_[k] = tb.dfac[axis][k] * c_[tb.dsrc[axis][k]];
        return j;
    }

    bool compatible(const Jet& o) const { return order_ == o.order_ && base_ == o.base_; }

    void require_compatible(const Jet& o) const {
        if (!compatible(o)) {
            std::ostringstream os;
            os << "jets differ in base or order (" << order_ << " vs " << o.order_ << ")";
            throw Error(ErrorKind::JetMismatch, os.str());
        }
    }

    Jet& operator+=(const Jet& o) {
        require_compatible(o);
        for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
        return *this;
    }
    Jet& operator-=(const Jet& o) {
        require_compatible(o);
        for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
        return *this;
    }
    Jet& operator*=(double a) {
        for (double& v : c_) v *= a;
        return *this;
    }
    Jet& operator+=(double a) {
        c_[0] += a;
        return *this;
    }
    Jet& operator-=(double a) {
        c_[0] -= a;
        return *this;
    }

    /// this += a * o
    Jet& add_scaled(double a, const Jet& o) {
        require_compatible(o);
        for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += a * o.c_[k];
        return *this;
    }

    friend Jet operator*(const Jet& a, const Jet& b) {
        a.require_compatible(b);
        const auto& tb = detail::jet_tables();
        Jet out(a.base_, a.order_);
        const std::size_t n = tb.pair_count[a.order_];
        const double* pa = a.c_.data();
        const double* pb = b.c_.data();
        double* po = out.c_.data();
        for (std::size_t q = 0; q < n; ++q) {
            const auto& p = tb.pairs[q];
            po[p.k] += pa[p.i] * pb[p.j];
        }
        return out;
    }

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator-(Jet a) { return a *= -1.0; }
    friend Jet operator*(Jet a, double c) { return a *= c; }
    friend Jet operator*(double c, Jet a) { return a *= c; }
    friend Jet operator/(Jet a, double c) { return a *= (1.0 / c); }
    friend Jet operator+(Jet a, double c) { return a += c; }
    friend Jet operator+(double c, Jet a) { return a += c; }
    friend Jet operator-(Jet a, double c) { return a -= c; }
    friend Jet operator-(double c, Jet a) {
        a *= -1.0;
        return a += c;
    }

private:
    ConePoint base_{};
    int order_ = 0;
    std::vector<double> c_{0.0};
};

// ---------------------------------------------------------------- make_jet

enum class JetKind { Constant, Coordinate };

struct JetSeed {
    JetKind kind = JetKind::Constant;
    double value = 0.0;  // for Constant
    int axis = 0;        // for Coordinate
};

/// Validates the base point and order, then builds a constant or coordinate jet.
inline Jet make_jet(const JetSeed& seed, const ConePoint& base, int order) {
    ConePoint p = ConePoint::make(base.t, base.x);
    if (order > kMaxJetOrder || order < 0) {
        std::ostringstream os;
        os << "requested jet order " << order << " (max " << kMaxJetOrder << ")";
        throw Error(ErrorKind::OrderTooHigh, os.str());
    }
    if (seed.kind == JetKind::Constant) return Jet::constant(seed.value, p, order);
    return Jet::coordinate(seed.axis, p, order);
}

// --------------------------------------------------------------- jet_arith

enum class ArithOp { Add, Mul, Neg, Scale };

inline Jet jet_arith(ArithOp op, const Jet& a, const Jet* b = nullptr, double c = 1.0) {
    switch (op) {
        case ArithOp::Add:
            if (!b) throw Error(ErrorKind::JetMismatch, "add needs two operands");
            return a + *b;
        case ArithOp::Mul:
            if (!b) throw Error(ErrorKind::JetMismatch, "mul needs two operands");
            return a * *b;
        case ArithOp::Neg: return -a;
        case ArithOp::Scale: return a * c;
    }
    return a;
}

// ------------------------------------------------------------- composition

/// f(a) = sum_n c[n] (a - a0)^n with c[n] = f^(n)(a0)/n!, truncated at the jet order.
inline Jet compose_series(const Jet& a, const std::vector<double>& c) {
    Jet da = a;
    da[0] = 0.0;
    Jet out = Jet::constant(c[a.order()], a.base(), a.order());
    for (int n = a.order() - 1; n >= 0; --n) {
        out = out * da;
        out[0] += c[n];
    }
    return out;
}

/// Generalized binomial coefficient C(p, k) for real p.
inline double binomial(double p, int k) {
    double b = 1.0;
    for (int i = 0; i < k; ++i) b *= (p - i) / (i + 1);
    return b;
}

inline Jet pow(const Jet& a, double p) {
    const double a0 = a.value();
    const bool integral = std::floor(p) == p;
    if (!(a0 > 0.0) && !(integral && p >= 0.0) && !(integral && a0 != 0.0))
        throw Error(ErrorKind::SingularComposition, "power of a non-positive base");
    std::vector<double> c(a.order() + 1);
    for (int n = 0; n <= a.order(); ++n) {
        if (integral && p >= 0.0 && n > p) {
            c[n] = 0.0;
            continue;
        }
        c[n] = binomial(p, n) * std::pow(a0, p - n);
    }
    return compose_series(a, c);
}

inline Jet sqrt(const Jet& a) {
    if (!(a.value() > 0.0)) throw Error(ErrorKind::SingularComposition, "sqrt of a non-positive value");
    return pow(a, 0.5);
}

inline Jet recip(const Jet& a) {
    const double a0 = a.value();
    if (a0 == 0.0) throw Error(ErrorKind::SingularComposition, "reciprocal of zero");
    std::vector<double> c(a.order() + 1);
    double v = 1.0 / a0;
    for (int n = 0; n <= a.order(); ++n) {
        c[n] = v;
        v *= -1.0 / a0;
    }
    return compose_series(a, c);
}

inline Jet exp(const Jet& a) {
    std::vector<double> c(a.order() + 1);
    double e = std::exp(a.value());
    for (int n = 0; n <= a.order(); ++n) c[n] = e / factorial(n);
    return compose_series(a, c);
}

inline Jet sin(const Jet& a) {
    std::vector<double> c(a.order() + 1);
    const double s0 = std::sin(a.value()), c0 = std::cos(a.value());
    const double cyc[4] = {s0, c0, -s0, -c0};
    for (int n = 0; n <= a.order(); ++n) c[n] = cyc[n % 4] / factorial(n);
    return compose_series(a, c);
}

inline Jet cos(const Jet& a) {
    std::vector<double> c(a.order() + 1);
    const double s0 = std::sin(a.value()), c0 = std::cos(a.value());
    const double cyc[4] = {c0, -s0, -c0, s0};
    for (int n = 0; n <= a.order(); ++n) c[n] = cyc[n % 4] / factorial(n);
    return compose_series(a, c);
}

inline Jet operator/(const Jet& a, const Jet& b) { return a * recip(b); }
inline Jet operator/(double c, const Jet& b) { return recip(b) * c; }

enum class ComposeFn { Sqrt, Recip, Power, Exp, Sin, Cos };

inline Jet jet_compose(ComposeFn f, const Jet& a, int n = 1) {
    switch (f) {
        case ComposeFn::Sqrt: return sqrt(a);
        case ComposeFn::Recip: return recip(a);
        case ComposeFn::Power: return pow(a, static_cast<double>(n));
        case ComposeFn::Exp: return exp(a);
        case ComposeFn::Sin: return sin(a);
        case ComposeFn::Cos: return cos(a);
    }
    return a;
}

inline double extract_partial(const Jet& a, const MultiIndex& alpha) { return a.partial(alpha); }

/// Multi-index with a single entry.
inline MultiIndex unit_index(int axis, int times = 1) {
    MultiIndex a{0, 0, 0, 0};
    a[axis] = times;
    return a;
}

}  // namespace hyperconf
