#pragma once

// Constant quadratic and cubic forms, the null condition and the components of
// a form in the hyperbolic frame.

#include <Eigen/Eigenvalues>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cone.hpp"
#include "errors.hpp"
#include "frame.hpp"
#include "jets.hpp"

namespace hyperconf {

struct QuadraticForm {
    Mat4 T{};

    static QuadraticForm minkowski() {
        QuadraticForm f;
        for (int a = 0; a < 4; ++a) f.T[a][a] = hyperconf::minkowski(a, a);
        return f;
    }

    QuadraticForm symmetrized() const {
        QuadraticForm f;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) f.T[a][b] = 0.5 * (T[a][b] + T[b][a]);
        return f;
    }

    double max_abs() const {
        double m = 0;
        for (const auto& row : T)
            for (double v : row) m = std::max(m, std::abs(v));
        return m;
    }

    double contract(const std::array<double, 4>& xi) const {
        double v = 0;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) v += T[a][b] * xi[a] * xi[b];
        return v;
    }
};

struct CubicForm {
    std::array<double, 64> Q{};

    double& operator()(int a, int b, int c) { return Q[16 * a + 4 * b + c]; }
    double operator()(int a, int b, int c) const { return Q[16 * a + 4 * b + c]; }

    /// Q^{abc} = m^{ab} n^c.
    static CubicForm minkowski_times(const std::array<double, 4>& n) {
        CubicForm f;
        for (int a = 0; a < 4; ++a)
            for (int c = 0; c < 4; ++c) f(a, a, c) = hyperconf::minkowski(a, a) * n[c];
        return f;
    }

    /// Only Q^{000} = 1.
    static CubicForm time_cubed() {
        CubicForm f;
        f(0, 0, 0) = 1.0;
        return f;
    }

    /// Symmetrized in the first two slots.
    CubicForm symmetrized() const {
        CubicForm f;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                for (int c = 0; c < 4; ++c) f(a, b, c) = 0.5 * ((*this)(a, b, c) + (*this)(b, a, c));
        return f;
    }

    double max_abs() const {
        double m = 0;
        for (double v : Q) m = std::max(m, std::abs(v));
        return m;
    }

    double contract(const std::array<double, 4>& xi) const {
        double v = 0;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                for (int c = 0; c < 4; ++c) v += (*this)(a, b, c) * xi[a] * xi[b] * xi[c];
        return v;
    }
};

// ------------------------------------------------------------ null check

/// Vertices of an icosahedron subdivided `levels` times and projected to the sphere.
inline std::vector<Vec3> icosphere(int levels) {
    const double g = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v = {{-1, g, 0}, {1, g, 0}, {-1, -g, 0}, {1, -g, 0}, {0, -1, g}, {0, 1, g},
                           {0, -1, -g}, {0, 1, -g}, {g, 0, -1}, {g, 0, 1}, {-g, 0, -1}, {-g, 0, 1}};
    std::vector<std::array<int, 3>> faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    auto normalize = [](Vec3 p) {
        double n = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
        return Vec3{p[0] / n, p[1] / n, p[2] / n};
    };
    for (auto& p : v) p = normalize(p);
    for (int l = 0; l < levels; ++l) {
        std::map<std::pair<int, int>, int> mid;
        auto midpoint = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = mid.find(key);
            if (it != mid.end()) return it->second;
            Vec3 m{(v[a][0] + v[b][0]) / 2, (v[a][1] + v[b][1]) / 2, (v[a][2] + v[b][2]) / 2};
            v.push_back(normalize(m));
            int id = static_cast<int>(v.size()) - 1;
            mid.emplace(key, id);
            return id;
        };
        std::vector<std::array<int, 3>> next;
        for (const auto& f : faces) {
            int a = midpoint(f[0], f[1]), b = midpoint(f[1], f[2]), c = midpoint(f[2], f[0]);
            next.push_back({f[0], a, c});
            next.push_back({f[1], b, a});
            next.push_back({f[2], c, b});
            next.push_back({a, b, c});
        }
        faces = std::move(next);
    }
    return v;
}

inline const std::vector<Vec3>& null_mesh() {
    static const std::vector<Vec3> mesh = icosphere(3);
    return mesh;
}

struct NullCheck {
    bool null = false;
    double max_contraction = 0.0;
    Vec3 witness{0, 0, 0};
};

template <class Form>
NullCheck is_null(const Form& form) {
    NullCheck out;
    const double tol = 1e-12 * form.max_abs();
    out.witness = null_mesh().front();
    for (const auto& w : null_mesh()) {
        double v = std::abs(form.contract({1.0, w[0], w[1], w[2]}));
        if (v > out.max_contraction) {
            out.max_contraction = v;
            out.witness = w;
        }
    }
    out.null = out.max_contraction <= tol;
    return out;
}

// ------------------------------------------------ hyperbolic components

inline Mat4 hyperbolic_components(const QuadraticForm& f, const ConePoint& p) {
    const auto fm = frame_matrices(p);
    Mat4 out{};
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int x = 0; x < 4; ++x)
                for (int y = 0; y < 4; ++y) out[a][b] += f.T[x][y] * fm.Psi[x][a] * fm.Psi[y][b];
    return out;
}

inline CubicForm hyperbolic_components(const CubicForm& f, const ConePoint& p) {
    const auto fm = frame_matrices(p);
    CubicForm out;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c) {
                double v = 0;
                for (int x = 0; x < 4; ++x)
                    for (int y = 0; y < 4; ++y)
                        for (int z = 0; z < 4; ++z) v += f(x, y, z) * fm.Psi[x][a] * fm.Psi[y][b] * fm.Psi[z][c];
                out(a, b, c) = v;
            }
    return out;
}

/// Jet of Tbar^{ab} at the given order.
inline Jet hyperbolic_component_jet(const QuadraticForm& f, int a, int b, const FrameContext& ctx, int order) {
    Jet out(ctx.base(), order);
    for (int x = 0; x < 4; ++x)
        for (int y = 0; y < 4; ++y)
            if (f.T[x][y] != 0.0) out.add_scaled(f.T[x][y], psi_jet(x, a, ctx, order) * psi_jet(y, b, ctx, order));
    return out;
}

/// Jet of Qbar^{abc} at the given order.
inline Jet hyperbolic_component_jet(const CubicForm& f, int a, int b, int c, const FrameContext& ctx, int order) {
    Jet out(ctx.base(), order);
    for (int x = 0; x < 4; ++x)
        for (int y = 0; y < 4; ++y)
            for (int z = 0; z < 4; ++z)
                if (f(x, y, z) != 0.0)
                    out.add_scaled(f(x, y, z),
                                   psi_jet(x, a, ctx, order) * psi_jet(y, b, ctx, order) * psi_jet(z, c, ctx, order));
    return out;
}

/// Residual of Tbar^{00} = ((t-r)/(t+r)) T^{00} + (t/(t+r)) (T^{0b} + T^{b0}) xi_b with
/// xi = (r/t, -x^a/t); exact for null T.
inline double tbar00_decomposition_residual(const QuadraticForm& f, const ConePoint& p) {
    const double t = p.t, r = p.r();
    const std::array<double, 4> xi{r / t, -p.x[0] / t, -p.x[1] / t, -p.x[2] / t};
    double rhs = (t - r) / (t + r) * f.T[0][0];
    for (int b = 0; b < 4; ++b) rhs += t / (t + r) * (f.T[0][b] + f.T[b][0]) * xi[b];
    return std::abs(hyperbolic_components(f, p)[0][0] - rhs);
}

// ------------------------------------------------------- bound profiles

/// Log-spaced in s, uniform in r/t, filtered to the cone.
struct Region {
    double s0 = 2.0, s1 = 10.0;
    int n_s = 24;
    int n_ratio = 20;
    double ratio_max = 0.95;

    std::vector<ConePoint> points() const {
        std::vector<ConePoint> out;
        for (int i = 0; i < n_s; ++i) {
            double s = n_s == 1 ? s0 : s0 * std::pow(s1 / s0, static_cast<double>(i) / (n_s - 1));
            for (int j = 0; j < n_ratio; ++j) {
                double q = n_ratio == 1 ? 0.0 : ratio_max * j / (n_ratio - 1);
                double t = s / std::sqrt(1.0 - q * q), r = q * t;
                if (t - r - 1.0 <= kConeMargin) continue;
                out.push_back(ConePoint::make(t, {r, 0, 0}));
            }
        }
        return out;
    }
};

struct NullBoundProfile {
    double sup_main = 0.0;          // |Tbar^00| or (s/t)|Qbar^000|
    ConePoint argmax{};
    double sup_weighted = 0.0;      // max over all (s/t)^k-weighted components
    double sup_frame_derivative = 0.0;  // t|dbar Tbar^00| or max(s(s/t)|dbar_s Qbar^000|, s|dbar_a Qbar^000|)
    double sup_t_over_s = 0.0;
    std::size_t points = 0;
};

inline int zero_count(int a, int b) { return (a == 0) + (b == 0); }
inline int zero_count(int a, int b, int c) { return (a == 0) + (b == 0) + (c == 0); }

inline NullBoundProfile null_bound_profile(const QuadraticForm& f, const Region& region) {
    NullBoundProfile out;
    for (const auto& p : region.points()) {
        const double st = p.s() / p.t;
        Mat4 Tb = hyperbolic_components(f, p);
        double main = std::abs(Tb[0][0]);
        if (main > out.sup_main) out.sup_main = main, out.argmax = p;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                out.sup_weighted = std::max(out.sup_weighted, std::pow(st, zero_count(a, b)) * std::abs(Tb[a][b]));
        FrameContext ctx(p, 1);
        Jet t00 = hyperbolic_component_jet(f, 0, 0, ctx, 1);
        for (int al = 0; al < 4; ++al)
            out.sup_frame_derivative =
                std::max(out.sup_frame_derivative, p.t * std::abs(apply_field(VectorField::frame(al), t00, ctx).value()));
        out.sup_t_over_s = std::max(out.sup_t_over_s, 1.0 / st);
        ++out.points;
    }
    return out;
}

inline NullBoundProfile null_bound_profile(const CubicForm& f, const Region& region) {
    NullBoundProfile out;
    for (const auto& p : region.points()) {
        const double st = p.s() / p.t, s = p.s();
        CubicForm Qb = hyperbolic_components(f, p);
        double main = st * std::abs(Qb(0, 0, 0));
        if (main > out.sup_main) out.sup_main = main, out.argmax = p;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                for (int c = 0; c < 4; ++c)
                    out.sup_weighted =
                        std::max(out.sup_weighted, std::pow(st, zero_count(a, b, c)) * std::abs(Qb(a, b, c)));
        FrameContext ctx(p, 1);
        Jet q000 = hyperbolic_component_jet(f, 0, 0, 0, ctx, 1);
        double ds = s * st * std::abs(apply_field(VectorField::bar_s(), q000, ctx).value());
        double da = 0;
        for (int a = 1; a <= 3; ++a) da = std::max(da, s * std::abs(apply_field(VectorField::bar(a), q000, ctx).value()));
        out.sup_frame_derivative = std::max({out.sup_frame_derivative, ds, da});
        out.sup_t_over_s = std::max(out.sup_t_over_s, 1.0 / st);
        ++out.points;
    }
    return out;
}

/// Scaled sups of the auxiliary relations on r >= t/2:
/// t(t/s)|dbar_s q|, t(t/s)^2|dbar_a q| with q = (t-r)/(t+r), and t|d_alpha(r/(t+r))|.
struct AuxiliaryBounds {
    double dbar_s_ratio = 0, dbar_a_ratio = 0, d_r_over_t_plus_r = 0;
};

inline AuxiliaryBounds auxiliary_bounds(const Region& region) {
    AuxiliaryBounds out;
    for (const auto& p : region.points()) {
        if (p.r() < p.t / 2) continue;
        FrameContext ctx(p, 1);
        const CoefJets& c = ctx.at(1);
        Jet r = sqrt(c.x[0] * c.x[0] + c.x[1] * c.x[1] + c.x[2] * c.x[2]);
        Jet q = (c.t - r) / (c.t + r);
        Jet w = r / (c.t + r);
        const double ts = p.t / p.s();
        out.dbar_s_ratio = std::max(out.dbar_s_ratio, p.t * ts * std::abs(apply_field(VectorField::bar_s(), q, ctx).value()));
        for (int a = 1; a <= 3; ++a)
            out.dbar_a_ratio =
                std::max(out.dbar_a_ratio, p.t * ts * ts * std::abs(apply_field(VectorField::bar(a), q, ctx).value()));
        for (int al = 0; al < 4; ++al)
            out.d_r_over_t_plus_r = std::max(out.d_r_over_t_plus_r, p.t * std::abs(w.derivative(al).value()));
    }
    return out;
}

// ------------------------------------------------ semilinear elimination

struct Elimination {
    double sigma = 0.0;
    std::string description;

    /// v = u + (sigma/2) u^2
    double transform(double u) const { return u + 0.5 * sigma * u * u; }
};

inline Elimination semilinear_eliminate(const QuadraticForm& N) {
    Elimination e;
    e.sigma = N.T[0][0];
    std::ostringstream os;
    if (e.sigma == 0.0)
        os << "identity (N^00 = 0)";
    else
        os << "v = u + (" << e.sigma << "/2) u^2";
    e.description = os.str();
    return e;
}

// ------------------------------------------------------------ file format

struct FormFile {
    QuadraticForm T;
    CubicForm Q;
    bool has_T = false, has_Q = false;
};

/// Lines `Q a b c value` or `T a b value`; '#' starts a comment; missing entries are zero.
inline FormFile parse_forms(std::istream& in) {
    FormFile out;
    std::string line;
    int lineno = 0;
    auto index = [&](const std::string& tok) {
        if (tok.size() != 1 || tok[0] < '0' || tok[0] > '3') {
            std::ostringstream os;
            os << "line " << lineno << ": index '" << tok << "' outside 0..3";
            throw Error(ErrorKind::ParseError, os.str());
        }
        return tok[0] - '0';
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        std::istringstream ls(line);
        std::string kind;
        if (!(ls >> kind)) continue;
        std::vector<std::string> toks;
        for (std::string tok; ls >> tok;) toks.push_back(tok);
        auto value = [&](const std::string& tok) {
            try {
                std::size_t used = 0;
                double v = std::stod(tok, &used);
                if (used != tok.size() || !std::isfinite(v)) throw std::invalid_argument(tok);
                return v;
            } catch (const std::exception&) {
                std::ostringstream os;
                os << "line " << lineno << ": bad value '" << tok << "'";
                throw Error(ErrorKind::ParseError, os.str());
            }
        };
        if (kind == "Q" && toks.size() == 4) {
            out.Q(index(toks[0]), index(toks[1]), index(toks[2])) = value(toks[3]);
            out.has_Q = true;
        } else if (kind == "T" && toks.size() == 3) {
            out.T.T[index(toks[0])][index(toks[1])] = value(toks[2]);
            out.has_T = true;
        } else {
            std::ostringstream os;
            os << "line " << lineno << ": expected 'Q a b c value' or 'T a b value'";
            throw Error(ErrorKind::ParseError, os.str());
        }
    }
    return out;
}

inline FormFile load_forms(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::NotFound, "cannot open form file " + path);
    return parse_forms(in);
}

inline std::string format_forms(const FormFile& f) {
    std::ostringstream os;
    os.precision(17);
    if (f.has_T)
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                if (f.T.T[a][b] != 0.0) os << "T " << a << ' ' << b << ' ' << f.T.T[a][b] << '\n';
    if (f.has_Q)
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                for (int c = 0; c < 4; ++c)
                    if (f.Q(a, b, c) != 0.0) os << "Q " << a << ' ' << b << ' ' << c << ' ' << f.Q(a, b, c) << '\n';
    return os.str();
}

// --------------------------------------------------- metric perturbation

using JetField = std::function<Jet(const ConePoint&, int)>;
using JetMatrix = std::array<std::array<Jet, 4>, 4>;

/// h^{ab}(p) as jets of a requested order; g = m + h.
struct MetricPerturbation {
    std::function<JetMatrix(const ConePoint&, int)> jets;

    static MetricPerturbation zero() {
        return {[](const ConePoint& p, int order) {
            JetMatrix h;
            for (auto& row : h)
                for (auto& e : row) e = Jet(p, order);
            return h;
        }};
    }

    /// h = eps * m.
    static MetricPerturbation conformal(double eps) {
        return {[eps](const ConePoint& p, int order) {
            JetMatrix h;
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) h[a][b] = Jet::constant(eps * minkowski(a, b), p, order);
            return h;
        }};
    }

    /// h^{ab} = Q^{(ab)c} d_c v for a field v given by jets.
    static MetricPerturbation quasilinear(const CubicForm& Q, JetField v) {
        CubicForm S = Q.symmetrized();
        return {[S, v](const ConePoint& p, int order) {
            Jet vj = v(p, order + 1);
            std::array<Jet, 4> dv;
            for (int c = 0; c < 4; ++c) dv[c] = vj.derivative(c);
            JetMatrix h;
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) {
                    h[a][b] = Jet(p, order);
                    for (int c = 0; c < 4; ++c)
                        if (S(a, b, c) != 0.0) h[a][b].add_scaled(S(a, b, c), dv[c]);
                }
            return h;
        }};
    }

    /// Values of h^{ab} at p.
    Mat4 values(const ConePoint& p) const {
        JetMatrix h = jets(p, 0);
        Mat4 out{};
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) out[a][b] = 0.5 * (h[a][b].value() + h[b][a].value());
        return out;
    }
};

/// True iff m + h has one positive and three negative eigenvalues.
inline bool is_lorentzian(const Mat4& h) {
    Eigen::Matrix4d g;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) g(a, b) = minkowski(a, b) + 0.5 * (h[a][b] + h[b][a]);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(g, Eigen::EigenvaluesOnly);
    int pos = 0, neg = 0;
    for (int k = 0; k < 4; ++k) {
        double e = es.eigenvalues()[k];
        if (e > 1e-14) ++pos;
        if (e < -1e-14) ++neg;
    }
    return pos == 1 && neg == 3;
}

}  // namespace hyperconf
