#pragma once

// Words in the translations and boosts, normal ordering, and the coefficient
// families that appear when commuting d^I L^J with the hyperbolic frame.
//
// A word d^I L^J stores I as counts (translations commute) and J as an ordered
// list of boost indices (boosts do not), leftmost first.

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "frame.hpp"
#include "jets.hpp"

namespace hyperconf {

struct Word {
    MultiIndex I{0, 0, 0, 0};
    std::vector<int> J;  // boost indices 1..3, L^J = L_{J[0]} L_{J[1]} ...

    int order() const { return degree(I) + static_cast<int>(J.size()); }

    friend bool operator<(const Word& a, const Word& b) { return std::tie(a.I, a.J) < std::tie(b.I, b.J); }
    friend bool operator==(const Word& a, const Word& b) { return a.I == b.I && a.J == b.J; }
};

inline std::string to_string(const Word& w) {
    std::ostringstream os;
    os << "d(" << w.I[0] << w.I[1] << w.I[2] << w.I[3] << ")L[";
    for (std::size_t k = 0; k < w.J.size(); ++k) os << (k ? "," : "") << w.J[k];
    os << "]";
    return os.str();
}

/// All count multi-indices of the given degree, graded-lex order.
inline std::vector<MultiIndex> multi_indices_of_degree(int d) {
    std::vector<MultiIndex> out;
    for (int a0 = d; a0 >= 0; --a0)
        for (int a1 = d - a0; a1 >= 0; --a1)
            for (int a2 = d - a0 - a1; a2 >= 0; --a2) out.push_back({a0, a1, a2, d - a0 - a1 - a2});
    return out;
}

inline std::vector<std::vector<int>> boost_words_of_length(int m) {
    std::vector<std::vector<int>> out{{}};
    for (int k = 0; k < m; ++k) {
        std::vector<std::vector<int>> next;
        for (const auto& w : out)
            for (int a = 1; a <= 3; ++a) {
                auto v = w;
                v.push_back(a);
                next.push_back(v);
            }
        out = std::move(next);
    }
    return out;
}

/// Every word with |I| + |J| <= n (39 words for n = 2).
inline std::vector<Word> words_up_to(int n) {
    std::vector<Word> out;
    for (int total = 0; total <= n; ++total)
        for (int m = 0; m <= total; ++m)
            for (const auto& I : multi_indices_of_degree(total - m))
                for (const auto& J : boost_words_of_length(m)) out.push_back({I, J});
    return out;
}

/// d^I L^J u, boosts applied first.
inline Jet apply_word(const Word& w, const Jet& u, const FrameContext& ctx) {
    Jet out = u;
    for (auto it = w.J.rbegin(); it != w.J.rend(); ++it) out = apply_field(VectorField::boost(*it), out, ctx);
    for (int alpha = 0; alpha < 4; ++alpha)
        for (int k = 0; k < w.I[alpha]; ++k) out = out.derivative(alpha);
    return out;
}

inline Jet apply_partials(const MultiIndex& I, const Jet& u) {
    Jet out = u;
    for (int alpha = 0; alpha < 4; ++alpha)
        for (int k = 0; k < I[alpha]; ++k) out = out.derivative(alpha);
    return out;
}

/// Product of binomials prod_alpha C(I_alpha, K_alpha) (Leibniz weight).
inline double leibniz_weight(const MultiIndex& I, const MultiIndex& K) {
    double w = 1.0;
    for (int a = 0; a < 4; ++a) w *= binomial(static_cast<double>(I[a]), K[a]);
    return w;
}

/// All K with 0 <= K <= I componentwise.
inline std::vector<MultiIndex> sub_indices(const MultiIndex& I) {
    std::vector<MultiIndex> out;
    for (int a = 0; a <= I[0]; ++a)
        for (int b = 0; b <= I[1]; ++b)
            for (int c = 0; c <= I[2]; ++c)
                for (int d = 0; d <= I[3]; ++d) out.push_back({a, b, c, d});
    return out;
}

inline MultiIndex operator+(MultiIndex a, const MultiIndex& b) {
    for (int k = 0; k < 4; ++k) a[k] += b[k];
    return a;
}
inline MultiIndex operator-(MultiIndex a, const MultiIndex& b) {
    for (int k = 0; k < 4; ++k) a[k] -= b[k];
    return a;
}

// ------------------------------------------------- constant normal ordering

/// [L_a, d_alpha] = theta_{a alpha}^beta d_beta.
inline double theta(int a, int alpha, int beta) {
    if (alpha == 0) return beta == a ? -1.0 : 0.0;
    return (alpha == a && beta == 0) ? -1.0 : 0.0;
}

using ConstOp = std::map<Word, double>;

inline void add_term(ConstOp& op, const Word& w, double c) {
    if (c == 0.0) return;
    auto it = op.find(w);
    if (it == op.end())
        op.emplace(w, c);
    else if ((it->second += c) == 0.0)
        op.erase(it);
}

inline ConstOp left_partial(int alpha, const ConstOp& op) {
    ConstOp out;
    for (const auto& [w, c] : op) {
        Word v = w;
        v.I[alpha] += 1;
        add_term(out, v, c);
    }
    return out;
}

/// L_a d^I L^J = d^I L_a L^J + [L_a, d^I] L^J.
inline ConstOp left_boost(int a, const ConstOp& op) {
    ConstOp out;
    for (const auto& [w, c] : op) {
        Word v = w;
        v.J.insert(v.J.begin(), a);
        add_term(out, v, c);
        for (int alpha = 0; alpha < 4; ++alpha) {
            if (w.I[alpha] == 0) continue;
            for (int beta = 0; beta < 4; ++beta) {
                double th = theta(a, alpha, beta);
                if (th == 0.0) continue;
                Word x = w;
                x.I[alpha] -= 1;
                x.I[beta] += 1;
                add_term(out, x, c * w.I[alpha] * th);
            }
        }
    }
    return out;
}

/// A letter of a free word: a translation d_alpha or a boost L_a.
struct Letter {
    bool boost = false;
    int index = 0;
};

inline std::vector<Letter> letters(const Word& w) {
    std::vector<Letter> out;
    for (int alpha = 0; alpha < 4; ++alpha)
        for (int k = 0; k < w.I[alpha]; ++k) out.push_back({false, alpha});
    for (int a : w.J) out.push_back({true, a});
    return out;
}

/// Expands a free product of translations and boosts into normal-ordered words.
inline ConstOp normal_order(const std::vector<Letter>& word) {
    ConstOp op{{Word{}, 1.0}};
    for (auto it = word.rbegin(); it != word.rend(); ++it)
        op = it->boost ? left_boost(it->index, op) : left_partial(it->index, op);
    return op;
}

/// [L^J, d^I] = sum theta^{JI}_{I'J'} d^{I'} L^{J'}.
inline ConstOp theta_family(const std::vector<int>& J, const MultiIndex& I) {
    std::vector<Letter> w;
    for (int a : J) w.push_back({true, a});
    for (int alpha = 0; alpha < 4; ++alpha)
        for (int k = 0; k < I[alpha]; ++k) w.push_back({false, alpha});
    ConstOp op = normal_order(w);
    add_term(op, Word{I, J}, -1.0);
    return op;
}

/// d^{I1} L^{J1} d^{I2} L^{J2} = sum zeta d^I L^J.
inline ConstOp zeta_family(const Word& first, const Word& second) {
    auto w = letters(first);
    auto v = letters(second);
    w.insert(w.end(), v.begin(), v.end());
    return normal_order(w);
}

inline Jet apply_const_op(const ConstOp& op, const Jet& u, const FrameContext& ctx, int order) {
    Jet out(u.base(), order);
    for (const auto& [w, c] : op) out.add_scaled(c, apply_word(w, u, ctx).truncated(order));
    return out;
}

// ----------------------------------------------- jet-coefficient helpers

namespace detail {

inline Jet min_order_sum(const Jet& a, const Jet& b) {
    int k = std::min(a.order(), b.order());
    return a.truncated(k) + b.truncated(k);
}

inline Jet min_order_product(const Jet& a, const Jet& b) {
    int k = std::min(a.order(), b.order());
    return a.truncated(k) * b.truncated(k);
}

template <class Key>
void accumulate(std::map<Key, Jet>& m, const Key& k, const Jet& v) {
    auto it = m.find(k);
    if (it == m.end())
        m.emplace(k, v);
    else
        it->second = min_order_sum(it->second, v);
}

}  // namespace detail

/// [d_alpha, dbar_b] = sigma_{alpha b} d_t.
inline Jet sigma_basic(int alpha, int b, const FrameContext& ctx, int order) {
    const CoefJets& c = ctx.at(order);
    if (alpha == 0) return -(c.x_over_t[b - 1] * c.inv_t);
    return alpha == b ? c.inv_t : Jet(ctx.base(), order);
}

/// [L_a, dbar_b] = eta_b dbar_a with eta_b = -x^b / t.
inline Jet eta_basic(int b, const FrameContext& ctx, int order) { return -ctx.at(order).x_over_t[b - 1]; }

/// [d^I, dbar_a] = sum_{1 <= |K| <= |I|} sigma^I_{aK} d^K.
inline std::map<MultiIndex, Jet> sigma_family(const MultiIndex& I, int a, const FrameContext& ctx) {
    std::map<MultiIndex, Jet> S;
    MultiIndex done{0, 0, 0, 0};
    for (int alpha = 0; alpha < 4; ++alpha)
        for (int k = 0; k < I[alpha]; ++k) {
            std::map<MultiIndex, Jet> next;
            for (const auto& [K, c] : S) {
                MultiIndex up = K;
                up[alpha] += 1;
                detail::accumulate(next, up, c);
                detail::accumulate(next, K, c.derivative(alpha));
            }
            MultiIndex tdone = done;
            tdone[0] += 1;
            detail::accumulate(next, tdone, sigma_basic(alpha, a, ctx, ctx.max_order()));
            S = std::move(next);
            done[alpha] += 1;
        }
    return S;
}

using EtaKey = std::pair<int, std::vector<int>>;  // (c, J'): coefficient of dbar_c L^{J'}

/// [L^J, dbar_b] = sum_{|J'| < |J|} eta^{Jc}_{bJ'} dbar_c L^{J'}.
inline std::map<EtaKey, Jet> eta_family(const std::vector<int>& J, int b, const FrameContext& ctx) {
    std::map<EtaKey, Jet> E;
    std::vector<int> rest;
    for (auto it = J.rbegin(); it != J.rend(); ++it) {
        const int a = *it;
        std::map<EtaKey, Jet> next;
        for (const auto& [key, coef] : E) {
            const auto& [c, w] = key;
            detail::accumulate(next, key, apply_field(VectorField::boost(a), coef, ctx));
            std::vector<int> aw = w;
            aw.insert(aw.begin(), a);
            detail::accumulate(next, EtaKey{c, aw}, coef);
            detail::accumulate(next, EtaKey{a, w}, detail::min_order_product(coef, eta_basic(c, ctx, coef.order())));
        }
        detail::accumulate(next, EtaKey{a, rest}, eta_basic(b, ctx, ctx.max_order()));
        E = std::move(next);
        rest.insert(rest.begin(), a);
    }
    return E;
}

using RhoBarKey = std::tuple<int, MultiIndex, std::vector<int>>;  // (c, I', J'): dbar_c d^{I'} L^{J'}

struct RhoFamilies {
    std::map<RhoBarKey, Jet> rhobar;  // homogeneous of degree |I'| - |I|
    std::map<Word, Jet> rho;          // coefficient of d^{I'} L^{J'}, degree |I'| - |I| - 1
};

/// [d^I L^J, dbar_a] = sum rhobar dbar_c d^{I'} L^{J'} + sum rho d^{I'} L^{J'}.
inline RhoFamilies rho_families(const Word& w, int a, const FrameContext& ctx) {
    RhoFamilies out;
    const auto eta = eta_family(w.J, a, ctx);
    for (const auto& I1 : sub_indices(w.I)) {
        const MultiIndex I2 = w.I - I1;
        const double weight = leibniz_weight(w.I, I1);
        for (const auto& [key, coef] : eta) {
            const auto& [c, Jp] = key;
            Jet d = apply_partials(I1, coef) * weight;
            detail::accumulate(out.rhobar, RhoBarKey{c, I2, Jp}, d);
            for (const auto& [K, sig] : sigma_family(I2, c, ctx))
                detail::accumulate(out.rho, Word{K, Jp}, detail::min_order_product(d, sig));
        }
    }
    for (const auto& [K, sig] : sigma_family(w.I, a, ctx)) detail::accumulate(out.rho, Word{K, w.J}, sig);
    return out;
}

/// d_alpha (s/t) = pi_alpha / s.
inline Jet pi_basic(int alpha, const FrameContext& ctx, int order) {
    return ctx.at(order).s * ctx.at(order + 1).s_over_t.derivative(alpha);
}

/// d_alpha s = rho_alpha (t/s).
inline Jet rho_basic(int alpha, const FrameContext& ctx, int order) {
    return ctx.at(order).s_over_t * ctx.at(order + 1).s.derivative(alpha);
}

/// L^J (s/t) = lambda^J (s/t).
inline Jet lambda_family(const std::vector<int>& J, const FrameContext& ctx) {
    const int K = ctx.max_order();
    Jet v = apply_word(Word{{0, 0, 0, 0}, J}, ctx.at(K).s_over_t, ctx);
    return v * ctx.at(v.order()).t_over_s;
}

/// Lambda^{IJ} = d^I L^J (s/t).
inline Jet Lambda_family(const Word& w, const FrameContext& ctx) {
    return apply_word(w, ctx.at(ctx.max_order()).s_over_t, ctx);
}

/// d^I (s/t) = sum_{1 <= k <= |I|} pi^I_k (s/t)^{1-k} s^{-k}; entry k-1 holds pi^I_k.
inline std::vector<Jet> pi_index_family(const MultiIndex& I, const FrameContext& ctx) {
    std::vector<Jet> P;
    const int K = ctx.max_order();
    for (int alpha = 0; alpha < 4; ++alpha)
        for (int step = 0; step < I[alpha]; ++step) {
            if (P.empty()) {
                P.push_back(pi_basic(alpha, ctx, K - 1));
                continue;
            }
            const int n = static_cast<int>(P.size());
            const int k0 = P.back().order() - 1;
            const Jet pa = pi_basic(alpha, ctx, k0), ra = rho_basic(alpha, ctx, k0);
            std::vector<Jet> Q(n + 1, Jet(ctx.base(), k0));
            for (int k = 1; k <= n; ++k) {
                const Jet pk = P[k - 1].truncated(k0 + 1);
                Q[k - 1] += pk.derivative(alpha);
                // d((s/t)^{1-k}) and d(s^{-k}) both raise k by one
                Q[k] += ((1.0 - k) * pa - static_cast<double>(k) * ra) * pk.truncated(k0);
            }
            P = std::move(Q);
        }
    return P;
}

// -------------------------------------------------- coefficient records

enum class Family { Theta, Sigma, Eta, Rho, RhoBar, Lambda, Pi, LambdaJ, Zeta };

inline const char* to_string(Family f) {
    switch (f) {
        case Family::Theta: return "theta";
        case Family::Sigma: return "sigma";
        case Family::Eta: return "eta";
        case Family::Rho: return "rho";
        case Family::RhoBar: return "rhobar";
        case Family::Lambda: return "Lambda";
        case Family::Pi: return "pi";
        case Family::LambdaJ: return "lambda";
        case Family::Zeta: return "zeta";
    }
    return "?";
}

struct CoefficientValue {
    std::string label;
    int degree = 0;
    double value = 0.0;
};

/// One member of a coefficient family, identified by its index data.
struct CommutatorCoefficients {
    Family family = Family::Theta;
    Word word;         // (I, J) of the commuted operator
    int frame = 1;     // a in dbar_a (Sigma, Eta, Rho, RhoBar)
    Word second;       // second factor for Zeta
    int alpha = 0;     // translation index for pi_alpha when word is empty

    /// Evaluates every coefficient at p with its expected homogeneity degree.
    std::vector<CoefficientValue> evaluate(const ConePoint& p) const {
        FrameContext ctx(p, kMaxJetOrder);
        std::vector<CoefficientValue> out;
        const int nI = degree(word.I);
        switch (family) {
            case Family::Theta:
                for (const auto& [w, c] : theta_family(word.J, word.I)) out.push_back({to_string(w), 0, c});
                break;
            case Family::Zeta:
                for (const auto& [w, c] : zeta_family(word, second)) out.push_back({to_string(w), 0, c});
                break;
            case Family::Sigma:
                for (const auto& [K, c] : sigma_family(word.I, frame, ctx))
                    out.push_back({to_string(Word{K, {}}), degree(K) - nI - 1, c.value()});
                break;
            case Family::Eta:
                for (const auto& [key, c] : eta_family(word.J, frame, ctx))
                    out.push_back({"c" + std::to_string(key.first) + " " + to_string(Word{{0, 0, 0, 0}, key.second}), 0,
                                   c.value()});
                break;
            case Family::RhoBar:
                for (const auto& [key, c] : rho_families(word, frame, ctx).rhobar) {
                    const auto& [cc, Ip, Jp] = key;
                    out.push_back({"c" + std::to_string(cc) + " " + to_string(Word{Ip, Jp}), degree(Ip) - nI, c.value()});
                }
                break;
            case Family::Rho:
                for (const auto& [w, c] : rho_families(word, frame, ctx).rho)
                    out.push_back({to_string(w), degree(w.I) - nI - 1, c.value()});
                break;
            case Family::Lambda: out.push_back({to_string(word), -nI, Lambda_family(word, ctx).value()}); break;
            case Family::LambdaJ: out.push_back({to_string(word), 0, lambda_family(word.J, ctx).value()}); break;
            case Family::Pi:
                if (nI == 0) {
                    out.push_back({"pi_" + std::to_string(alpha), 0, pi_basic(alpha, ctx, 0).value()});
                    out.push_back({"rho_" + std::to_string(alpha), 0, rho_basic(alpha, ctx, 0).value()});
                } else {
                    auto P = pi_index_family(word.I, ctx);
                    for (int k = 1; k <= static_cast<int>(P.size()); ++k)
                        out.push_back({"k=" + std::to_string(k), k - nI, P[k - 1].value()});
                }
                break;
        }
        return out;
    }
};

/// Residual of the operator identity defining the family, applied to u at its base point.
/// u must carry order >= |I| + |J| + 1 (plus |I2| + |J2| for Zeta).
inline double family_identity_residual(const CommutatorCoefficients& cc, const Jet& u) {
    const ConePoint& p = u.base();
    FrameContext ctx(p, kMaxJetOrder);
    const Word& w = cc.word;
    auto bar = [&](int a, const Jet& v) { return apply_field(VectorField::bar(a), v, ctx); };
    switch (cc.family) {
        case Family::Theta: {
            Jet lhs = apply_word(Word{{0, 0, 0, 0}, w.J}, apply_partials(w.I, u), ctx);
            Jet rhs = apply_word(w, u, ctx);
            for (const auto& [v, c] : theta_family(w.J, w.I)) rhs.add_scaled(c, apply_word(v, u, ctx).truncated(rhs.order()));
            return std::abs(lhs.value() - rhs.value());
        }
        case Family::Zeta: {
            Jet lhs = apply_word(w, apply_word(cc.second, u, ctx), ctx);
            double rhs = 0.0;
            for (const auto& [v, c] : zeta_family(w, cc.second)) rhs += c * apply_word(v, u, ctx).value();
            return std::abs(lhs.value() - rhs);
        }
        case Family::Sigma: {
            double lhs = apply_partials(w.I, bar(cc.frame, u)).value() - bar(cc.frame, apply_partials(w.I, u)).value();
            double rhs = 0.0;
            for (const auto& [K, c] : sigma_family(w.I, cc.frame, ctx)) rhs += c.value() * apply_partials(K, u).value();
            return std::abs(lhs - rhs);
        }
        case Family::Eta: {
            Word lw{{0, 0, 0, 0}, w.J};
            double lhs = apply_word(lw, bar(cc.frame, u), ctx).value() - bar(cc.frame, apply_word(lw, u, ctx)).value();
            double rhs = 0.0;
            for (const auto& [key, c] : eta_family(w.J, cc.frame, ctx))
                rhs += c.value() * bar(key.first, apply_word(Word{{0, 0, 0, 0}, key.second}, u, ctx)).value();
            return std::abs(lhs - rhs);
        }
        case Family::Rho:
        case Family::RhoBar: {
            double lhs = apply_word(w, bar(cc.frame, u), ctx).value() - bar(cc.frame, apply_word(w, u, ctx)).value();
            auto fam = rho_families(w, cc.frame, ctx);
            double rhs = 0.0;
            for (const auto& [key, c] : fam.rhobar) {
                const auto& [c_idx, Ip, Jp] = key;
                rhs += c.value() * bar(c_idx, apply_word(Word{Ip, Jp}, u, ctx)).value();
            }
            for (const auto& [v, c] : fam.rho) rhs += c.value() * apply_word(v, u, ctx).value();
            return std::abs(lhs - rhs);
        }
        case Family::LambdaJ: {
            const CoefJets& c = ctx.at(kMaxJetOrder);
            double lhs = apply_word(Word{{0, 0, 0, 0}, w.J}, c.s_over_t, ctx).value();
            return std::abs(lhs - lambda_family(w.J, ctx).value() * c.s_over_t.value());
        }
        case Family::Lambda: {
            // Leibniz: d^I L^J (s/t) = d^I (lambda^J (s/t))
            const Jet lam = lambda_family(w.J, ctx);
            const Jet st = ctx.at(lam.order()).s_over_t;
            double rhs = apply_partials(w.I, lam * st).value();
            return std::abs(Lambda_family(w, ctx).value() - rhs);
        }
        case Family::Pi: {
            const double s = p.s(), st = s / p.t;
            if (degree(w.I) == 0) {
                const CoefJets& c = ctx.at(1);
                double r1 = std::abs(c.s_over_t.derivative(cc.alpha).value() - pi_basic(cc.alpha, ctx, 0).value() / s);
                double r2 = std::abs(c.s.derivative(cc.alpha).value() - rho_basic(cc.alpha, ctx, 0).value() / st);
                return std::max(r1, r2);
            }
            double lhs = apply_partials(w.I, ctx.at(kMaxJetOrder).s_over_t).value();
            auto P = pi_index_family(w.I, ctx);
            double rhs = 0.0;
            for (int k = 1; k <= static_cast<int>(P.size()); ++k)
                rhs += P[k - 1].value() * std::pow(st, 1 - k) * std::pow(s, -k);
            return std::abs(lhs - rhs);
        }
    }
    return 0.0;
}

/// Homogeneity check of every nonzero coefficient in a family member.
struct FamilyHomogeneity {
    std::size_t checked = 0;
    double max_deviation = 0.0;  // |fitted slope - expected degree|
    std::string worst;
};

inline FamilyHomogeneity family_homogeneity(const CommutatorCoefficients& cc, const ConePoint& p,
                                            const std::vector<double>& lambdas = {1.0, 2.0, 4.0}) {
    std::vector<std::vector<CoefficientValue>> samples;
    for (double l : lambdas) samples.push_back(cc.evaluate(p.scaled(l)));
    FamilyHomogeneity h;
    double scale = 0.0;
    for (const auto& v : samples[0]) scale = std::max(scale, std::abs(v.value));
    for (std::size_t k = 0; k < samples[0].size(); ++k) {
        bool usable = true;
        for (const auto& s : samples)
            if (std::abs(s[k].value) <= 1e-12 * std::max(scale, 1e-300)) usable = false;
        if (!usable) continue;
        std::vector<double> X, Y;
        for (std::size_t i = 0; i < lambdas.size(); ++i) {
            X.push_back(std::log(lambdas[i]));
            Y.push_back(std::log(std::abs(samples[i][k].value)));
        }
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < X.size(); ++i) mx += X[i], my += Y[i];
        mx /= X.size();
        my /= X.size();
        double sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < X.size(); ++i) sxx += (X[i] - mx) * (X[i] - mx), sxy += (X[i] - mx) * (Y[i] - my);
        double dev = std::abs(sxy / sxx - samples[0][k].degree);
        ++h.checked;
        if (dev > h.max_deviation) {
            h.max_deviation = dev;
            h.worst = samples[0][k].label;
        }
    }
    return h;
}

}  // namespace hyperconf
