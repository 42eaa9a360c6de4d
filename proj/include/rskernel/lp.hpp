#pragma once

/**
 * @file lp.hpp
 * @brief The p-adic Rankin-Selberg value D_F^{-2} H_p(f) alpha^{-1} l_{f_alpha}(U_p Phi),
 * its interpolation constants, and its derivative along the cyclotomic direction.
 */

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kernel_measures.hpp"
#include "qexp_hecke.hpp"

namespace rsk {

/// (1 - alpha^{-2}) (1 - Np alpha^{-2}) for one prime of F above p.
inline Padic hp_local(const Padic& alpha, i64 Np) {
    const i64 p = alpha.prime();
    const int prec = alpha.precision();
    Padic inv2 = (alpha * alpha).inverse();
    Padic one = Padic::one(p, prec);
    return (one - inv2) * (one - Padic::from_int(p, Np, prec) * inv2);
}

/// True when alpha^2 = 1 or alpha^2 = Np to the working precision.
inline bool hp_exceptional(const Padic& alpha, i64 Np) {
    Padic a2 = alpha * alpha;
    const int prec = alpha.precision();
    return (a2 - Padic::one(alpha.prime(), prec)).is_zero() || (a2 - Padic::from_int(alpha.prime(), Np, prec)).is_zero();
}

class LpContext {
public:
    /**
     * @param solve_bound rows of the eigen-system checked when extracting l_{f_alpha};
     *        kernel tables must then reach solve_bound * p.
     */
    LpContext(NewformRecord f, KernelParams P, i64 solve_bound)
        : f_(std::move(f)), P_(std::move(P)),
          span_(EigenSpan::stabilizations(f_, P_.p, P_.prec, std::min(solve_bound, f_.bound()))) {
        P_.validate();
        if (f_.level != P_.N) throw std::invalid_argument("LpContext: newform level " + std::to_string(f_.level) +
                                                          " differs from N = " + std::to_string(P_.N));
        auto roots = stabilization_roots(f_, P_.p, P_.prec);
        alpha_ = roots.alpha;
        beta_ = roots.beta;
        hp_ = hp_local(alpha_, P_.p);
        exceptional_ = hp_exceptional(alpha_, P_.p);
    }

    const NewformRecord& newform() const { return f_; }
    const KernelParams& params() const { return P_; }
    const EigenSpan& span() const { return span_; }
    const Padic& alpha() const { return alpha_; }
    const Padic& beta() const { return beta_; }
    i64 p() const { return P_.p; }
    int precision() const { return P_.prec; }
    /// Smallest kernel-table bound the pipeline accepts.
    i64 table_bound() const { return span_.solve_bound() * P_.p; }
    bool exceptional() const { return exceptional_; }
    /// D_F = 1 over Q.
    i64 discriminant_F() const { return 1; }

    friend Padic Hp_factor(const LpContext& ctx) { return ctx.hp_; }

private:
    NewformRecord f_;
    KernelParams P_;
    EigenSpan span_;
    Padic alpha_, beta_, hp_;
    bool exceptional_ = false;
};

/// prod over the primes P | p of E of (1 - conj(W)(P) / alpha); conj(W)(P) = 0 where W ramifies.
inline Padic Vp_factor(const LpContext& ctx, const HeckeCharacter& W) {
    const CMContext& cm = *ctx.params().cm;
    Padic v = Padic::one(ctx.p(), ctx.precision());
    Padic ainv = ctx.alpha().inverse();
    for (const EPrime& Pp : cm.eprimes_above(ctx.p())) {
        CycloValue w = W.value({{Pp, 1}}).conj();
        if (w.is_zero()) continue;
        v *= Padic::one(ctx.p(), ctx.precision()) - embed_cyclotomic(w, ctx.p(), ctx.precision()) * ainv;
    }
    return v;
}

/// Value of the functional on a kernel table already hit by U_p.
inline Padic Lp_value_from_up(const LpContext& ctx, const CoeffTable<Padic>& up_phi) {
    i64 d2 = ctx.discriminant_F() * ctx.discriminant_F();
    Padic l = ctx.span().l_f_alpha(up_phi);
    return Hp_factor(ctx) * ctx.alpha().inverse() * l / Padic::from_int(ctx.p(), d2, ctx.precision());
}

/// D_F^{-2} H_p alpha^{-1} l_{f_alpha}(U_p Phi). Throws NotInSpan when Phi leaves the configured span.
inline Padic Lp_value(const LpContext& ctx, const CoeffTable<Padic>& phi) {
    if (phi.bound < ctx.table_bound())
        throw std::invalid_argument("Lp_value: kernel table bound " + std::to_string(phi.bound) + " below " +
                                    std::to_string(ctx.table_bound()));
    return Lp_value_from_up(ctx, op_U(ctx.p(), phi));
}

/**
 * Phi(W) embedded in Q_p. Coefficients that vanish exactly embed as 0; the
 * others must lie in Q(zeta_{p-1}).
 */
inline CoeffTable<Padic> phi_table(const KernelParams& P, const HeckeCharacter& W, i64 bound) {
    auto [mn, ms] = source_bounds(P, bound);
    HeckeSource src(P, W, mn, ms);
    auto raw = phi_coeffs_raw(P, src, bound);
    Padic zero = Padic::zero(P.p, P.prec);
    CoeffTable<Padic> t = CoeffTable<Padic>::filled(bound, zero, 2, P.N * P.Delta() * P.p);
    for (i64 m = 1; m <= bound; ++m) {
        const CycloValue& x = raw[static_cast<std::size_t>(m)];
        if (!x.is_zero()) t[m] = embed_cyclotomic(x, P.p, P.prec);
    }
    return t;
}

/// Lp_value on the genuine kernel Phi(W).
inline Padic Lp_value(const LpContext& ctx, const HeckeCharacter& W) {
    return Lp_value(ctx, phi_table(ctx.params(), W, ctx.table_bound()));
}

/// Route (a): the functional applied to a derivative table Phi'.
inline Padic Lp_derivative_analytic(const LpContext& ctx, const CoeffTable<Padic>& phi_prime) {
    return Lp_value(ctx, phi_prime);
}

/// U_p Phi' for the cyclotomic family at s = 0, from the per-place closed formulas.
inline CoeffTable<Padic> up_phi_prime_table(const LpContext& ctx, const CyclotomicFamily& nu) {
    const KernelParams& P = ctx.params();
    i64 b = ctx.span().solve_bound();
    CoeffTable<Padic> t = CoeffTable<Padic>::filled(b, Padic::zero(P.p, nu.precision()), 2, P.N * P.Delta() * P.p);
    parallel_for(1, static_cast<std::size_t>(b + 1), P.jobs, [&](std::size_t n) {
        t[static_cast<i64>(n)] = phi_derivative_coeff(P, nu, static_cast<i64>(n) * P.p).total;
    });
    return t;
}

/// Route (b): finite differences of s -> Lp_value(family(s)) at the integer nodes.
inline DerivativeEstimate Lp_derivative_fd(const LpContext& ctx,
                                           const std::function<CoeffTable<Padic>(i64)>& family,
                                           const std::vector<i64>& nodes) {
    std::vector<std::pair<Padic, Padic>> samples;
    for (i64 s : nodes) samples.emplace_back(Padic::from_int(ctx.p(), s, ctx.precision() + 8), Lp_value(ctx, family(s)));
    return finite_difference_deriv(samples);
}

/**
 * c(s) f_alpha + d(s) f_beta with c(s) = nu(a)^s, d(s) = nu(b)^s. Its value
 * is H_p c(s) and its derivative at 0 is H_p l_F(a).
 */
struct SyntheticFamily {
    const LpContext* ctx;
    const CyclotomicFamily* nu;
    i64 a = 2;
    i64 b = 3;

    CoeffTable<Padic> combine(const Padic& c, const Padic& d) const {
        const auto& basis = ctx->span().basis();
        i64 bound = std::min(basis[0].bound, ctx->table_bound());
        CoeffTable<Padic> t = CoeffTable<Padic>::filled(bound, Padic::zero(ctx->p(), ctx->precision()), 2,
                                                        basis[0].level);
        for (i64 n = 1; n <= bound; ++n) t[n] = c * basis[0][n] + d * basis[1][n];
        return t;
    }
    CoeffTable<Padic> at(i64 s) const { return combine(nu->nu_pow(a, s), nu->nu_pow(b, s)); }
    CoeffTable<Padic> derivative() const { return combine(nu->ell(a), nu->ell(b)); }
};

// ---------------------------------------------------------------------------
// Interpolation constants

/// n^{1/2} carried as outside * sqrt(inside) with inside squarefree.
struct SqrtData {
    i64 outside = 1;
    i64 inside = 1;
};

inline SqrtData exact_sqrt(i64 n) {
    SqrtData s;
    for (auto [q, e] : factor(n)) {
        s.outside *= ipow(q, e / 2);
        if (e % 2) s.inside *= q;
    }
    return s;
}

struct InterpolationConstants {
    std::vector<GaussSum> tau;   ///< tau(conj W) at the two primes above p
    bool tau_convention = false;  ///< some component unramified: tau = 1 there by convention
    SqrtData conductor_norm_sqrt;
    Padic Vp;
    Padic alpha_conductor;       ///< alpha^{v_p(N f)}
    CycloValue W_dF{1, 1};       ///< W(d_F^{(p)}); d_F = 1 over Q
    CycloValue Wbar_Delta{1, 1};  ///< conj(W)(d), N d = Delta
};

inline InterpolationConstants interpolation_constants(const LpContext& ctx, const HeckeCharacter& W) {
    const CMContext& cm = *ctx.params().cm;
    InterpolationConstants c;
    HeckeCharacter Wbar = W.inverse();
    for (int comp = 0; comp < 2; ++comp) {
        c.tau.push_back(tau_gauss(Wbar, comp));
        c.tau_convention = c.tau_convention || c.tau.back().unramified;
    }
    auto [c0, c1] = W.conductor();
    c.conductor_norm_sqrt = exact_sqrt(ipow(ctx.p(), c0 + c1));
    c.Vp = Vp_factor(ctx, W);
    c.alpha_conductor = ctx.alpha().pow(c0 + c1);
    c.Wbar_Delta = W.value(cm.ramified_ideal(cm.D())).conj();
    return c;
}

}  // namespace rsk
