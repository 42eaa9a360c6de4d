#pragma once

/**
 * @file kernel_measures.hpp
 * @brief Fourier coefficients of the measure kernels over F = Q: theta
 * series of Hecke characters (plain and twisted at ramified delta),
 * Eisenstein series, the local Gauss sums kappa and tau, the convolution
 * kernel Phi(W) as a raw double sum and in collapsed form, its derivative in
 * the cyclotomic variable, and the pairwise functional-equation ledger.
 *
 * Every kernel is written against a character source, so that the same
 * double sum runs on exact values in Z[zeta_e] (finite-order W) and on
 * p-adic values (the family nu^s o N).
 */

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "arith.hpp"
#include "cm_arith.hpp"
#include "cyclo.hpp"
#include "padic.hpp"
#include "parallel.hpp"

namespace rsk {

/// Configuration shared by every kernel: E/Q, level N, the prime p.
struct KernelParams {
    std::shared_ptr<const CMContext> cm;
    i64 N = 1;
    i64 p = 3;
    int prec = kDefaultPrecision;
    unsigned jobs = 1;

    i64 Delta() const { return cm->D(); }
    /// Number of real places of F; always 1 over Q.
    int g() const { return 1; }

    /// The positive divisors delta of Delta.
    std::vector<i64> deltas() const { return divisors_of(factor(Delta())); }

    void validate(bool need_split = true) const {
        if (!cm) throw std::invalid_argument("kernel: missing CM context");
        if (!cm->over_q()) throw BackendUnsupported("kernels are implemented for F = Q only");
        if (N < 1) throw std::invalid_argument("kernel: level N must be a positive integer");
        if (p % 2 == 0 || !is_prime(p)) throw std::invalid_argument("kernel: p must be an odd prime");
        if (std::gcd(Delta(), N * p) != 1) throw std::invalid_argument("kernel: Delta must be prime to N p");
        if (N % p == 0) throw std::invalid_argument("kernel: N must be prime to p");
        if (Delta() % 2 == 0) throw std::invalid_argument("kernel: Delta must be odd");
        if (need_split && cm->split_type(p) != Splitting::Split)
            throw BackendUnsupported("kernel: p = " + std::to_string(p) + " must split in E");
    }
};

// ---------------------------------------------------------------------------
// Gauss sums

/// kappa(q) = zeta_4^k for the returned k; q | Delta odd.
inline i64 kappa_index(const CMContext& cm, i64 q) {
    if (q % 2 == 0) throw std::domain_error("kappa: even residue characteristic");
    if (cm.D() % q != 0) throw std::invalid_argument("kappa: q does not divide Delta");
    i64 k = mod(q, 4) == 1 ? 0 : 3;
    if (cm.epsilon_at_uniformizer(q) == -1) k += 2;
    return mod(k, 4);
}

inline CycloValue kappa(const CMContext& cm, i64 q) { return CycloValue::zeta(4, kappa_index(cm, q)); }

/// kappa(delta) = product of kappa(q) over q | delta.
inline i64 kappa_delta_index(const CMContext& cm, i64 delta) {
    i64 k = 0;
    for (auto [q, e] : factor(delta)) k += kappa_index(cm, q);
    return mod(k, 4);
}

/// eps_delta(-1) = kappa(delta)^2.
inline int epsilon_delta_minus_one(i64 delta) {
    int s = 1;
    for (auto [q, e] : factor(delta)) s *= legendre(-1, q);
    return s;
}

/**
 * kappa(q) as the normalized character sum q^{-1/2} sum_x eps_q(x/pi) psi_q(x/pi)
 * with pi = q t chosen so that eps_q(pi) = 1 and psi_q(y) = exp(-2 pi i {y}_q).
 */
inline std::complex<double> kappa_direct(const CMContext& cm, i64 q) {
    int target = cm.epsilon_at_uniformizer(q);
    i64 t = 1;
    while (legendre(t, q) != target) ++t;
    i64 ti = invmod(t, q);
    const double tau = 2.0 * std::acos(-1.0);
    std::complex<double> s = 0;
    for (i64 x = 1; x < q; ++x) {
        double arg = -tau * static_cast<double>(mulmod(x, ti, q)) / static_cast<double>(q);
        s += static_cast<double>(legendre(x, q)) * std::polar(1.0, arg);
    }
    return s / std::sqrt(static_cast<double>(q));
}

/**
 * Gauss sum of the local component W_v at a prime above p, written as
 * G = sum_{u mod p^c} W_v(u) exp(-2 pi i u / p^c), so that the normalized
 * tau = p^{-c/2} G. The local component is W_v(u) = W(lambda)^{-1} for
 * lambda = u at v and 1 at the conjugate place; its value at p is taken
 * to be 1.
 */
struct GaussSum {
    CycloValue sum{1, 1};
    int conductor_exponent = 0;
    i64 p = 2;
    bool unramified = true;  ///< c = 0: tau = 1 by convention

    std::complex<double> normalized() const {
        return sum.to_complex() / std::pow(static_cast<double>(p), conductor_exponent / 2.0);
    }
};

inline GaussSum tau_gauss(const HeckeCharacter& W, int component) {
    const RayClassGroup& G = W.group();
    i64 p = G.p();
    int c = component == 0 ? W.conductor().first : W.conductor().second;
    GaussSum out;
    out.p = p;
    out.conductor_exponent = c;
    if (c == 0) return out;
    out.unramified = false;
    i64 pc = ipow(p, c), e = W.value_order();
    out.sum = CycloValue(0, std::lcm(e, pc));
    i64 L = out.sum.conductor();
    for (i64 u = 1; u < pc; ++u) {
        if (u % p == 0) continue;
        out.sum.add_monomial(L, -W.local_index(component, u) * (L / e) - u * (L / pc), 1);
    }
    return out;
}

/// W_v(-1) as an exponent of zeta_e.
inline i64 local_sign_index(const HeckeCharacter& W, int component) {
    return mod(-W.local_index(component, W.group().modulus() - 1), W.value_order());
}

// ---------------------------------------------------------------------------
// Character sources

/**
 * Finite-order Hecke character W of a ray class group mod p^n. Tables of
 * r_W and sigma_{eps phi} are filled up to the given bounds, with
 * phi(d) = W(d O_E)^{-1}.
 */
class HeckeSource {
public:
    using value_type = CycloValue;

    HeckeSource(const KernelParams& P, HeckeCharacter W, i64 max_norm, i64 max_sigma)
        : P_(P), W_(std::move(W)), e_(W_.value_order()), max_norm_(max_norm), max_sigma_(max_sigma) {
        if (W_.group().p() != P.p) throw std::invalid_argument("HeckeSource: character and kernel use different p");
        build();
    }

    const HeckeCharacter& character() const { return W_; }
    CycloValue zero() const { return CycloValue(0, e_); }
    CycloValue scalar(i64 c) const { return CycloValue(c, e_); }
    i64 r(i64 a) const { return a <= max_norm_ ? r_[static_cast<std::size_t>(a)] : P_.cm->r_count(a); }
    bool r_support(i64 a) const { return a % P_.p != 0 && r(a) != 0; }

    const CycloValue& r_W(i64 a) const {
        if (a > max_norm_) throw std::out_of_range("HeckeSource: norm beyond table");
        return rw_[static_cast<std::size_t>(a)];
    }
    CycloValue W_ramified(i64 delta) const {
        i64 k = 0;
        for (auto [q, e] : factor(delta)) k += prime_index(q, 0);
        return CycloValue::zeta(e_, k);
    }
    /// phi(q)^k for a prime q not above p.
    CycloValue phi_prime(i64 q, i64 k) const { return CycloValue::zeta(e_, mod(-k * rational_prime_index(q), e_)); }
    const CycloValue& sigma(i64 k) const {
        if (k > max_sigma_) throw std::out_of_range("HeckeSource: sigma argument beyond table");
        return sigma_[static_cast<std::size_t>(k)];
    }

private:
    i64 prime_index(i64 l, int which) const {
        auto ps = P_.cm->eprimes_above(l);
        auto t = W_.index_on_prime(ps[static_cast<std::size_t>(which) < ps.size() ? static_cast<std::size_t>(which) : 0]);
        if (!t) throw std::logic_error("HeckeSource: prime in the conductor");
        return *t;
    }
    /// Index of W on the ideal l O_E.
    i64 rational_prime_index(i64 l) const {
        switch (P_.cm->split_type(l)) {
            case Splitting::Split: return mod(prime_index(l, 0) + prime_index(l, 1), e_);
            case Splitting::Inert: return prime_index(l, 0);
            default: return mod(2 * prime_index(l, 0), e_);
        }
    }

    void build() {
        const CMContext& cm = *P_.cm;
        i64 top = std::max(max_norm_, max_sigma_);
        SpfSieve sv(std::max<i64>(top, 2));
        r_.assign(static_cast<std::size_t>(max_norm_ + 1), 0);
        rw_.assign(static_cast<std::size_t>(max_norm_ + 1), zero());
        sigma_.assign(static_cast<std::size_t>(max_sigma_ + 1), zero());
        std::map<i64, std::pair<i64, i64>> idx;  // prime -> indices on the primes above it
        auto indices = [&](i64 l) {
            auto it = idx.find(l);
            if (it != idx.end()) return it->second;
            std::pair<i64, i64> v{0, 0};
            if (cm.split_type(l) == Splitting::Split) v = {prime_index(l, 0), prime_index(l, 1)};
            else v = {prime_index(l, 0), 0};
            idx.emplace(l, v);
            return v;
        };
        for (i64 a = 1; a <= max_norm_; ++a) {
            Factorization f = sv.factor(a);
            r_[static_cast<std::size_t>(a)] = cm.r_count_factored(f);
            if (a % P_.p == 0 || r_[static_cast<std::size_t>(a)] == 0) continue;
            CycloValue v = scalar(1);
            for (auto [l, e] : f) {
                auto [i1, i2] = indices(l);
                CycloValue loc = zero();
                switch (cm.split_type(l)) {
                    case Splitting::Split:
                        for (int j = 0; j <= e; ++j) loc.add_monomial(e_, j * i1 + (e - j) * i2, 1);
                        break;
                    case Splitting::Inert: loc.add_monomial(e_, (e / 2) * i1, 1); break;
                    case Splitting::Ramified: loc.add_monomial(e_, e * i1, 1); break;
                }
                v *= loc;
            }
            rw_[static_cast<std::size_t>(a)] = v;
        }
        for (i64 k = 1; k <= max_sigma_; ++k) {
            CycloValue v = scalar(1);
            for (auto [l, e] : sv.factor(k)) {
                if (l == P_.p || P_.Delta() % l == 0) continue;
                // sum_j (eps(l) phi(l))^j
                i64 step = mod(-rational_prime_index(l), e_);
                int el = cm.epsilon(l);
                CycloValue loc = zero();
                for (int j = 0; j <= e; ++j) loc.add_monomial(e_, j * step, j % 2 == 1 && el == -1 ? -1 : 1);
                v *= loc;
            }
            sigma_[static_cast<std::size_t>(k)] = v;
        }
    }

    KernelParams P_;
    HeckeCharacter W_;
    i64 e_;
    i64 max_norm_, max_sigma_;
    std::vector<i64> r_;
    std::vector<CycloValue> rw_;
    std::vector<CycloValue> sigma_;
};

/**
 * The family W = nu^s o N for an integer or p-adic exponent s: r_W(a) =
 * r(a) nu(a)^s off p, W(d) = nu(delta)^s, phi(d) = nu(d)^{-2s}.
 */
class FamilySource {
public:
    using value_type = Padic;

    FamilySource(const KernelParams& P, const CyclotomicFamily& nu, const Padic& s, i64 max_norm, i64 max_sigma)
        : P_(P), nu_(nu), s_(s), max_norm_(max_norm), max_sigma_(max_sigma) {
        if (nu.p() != P.p) throw std::invalid_argument("FamilySource: family and kernel use different p");
        if (!s.is_zero() && s.valuation() < 0) throw std::invalid_argument("FamilySource: s must be p-integral");
        build();
    }
    FamilySource(const KernelParams& P, const CyclotomicFamily& nu, i64 s, i64 max_norm, i64 max_sigma)
        : P_(P), nu_(nu), s_(Padic::from_int(P.p, s, nu.precision() + 8)), s_int_(s), max_norm_(max_norm),
          max_sigma_(max_sigma) {
        if (nu.p() != P.p) throw std::invalid_argument("FamilySource: family and kernel use different p");
        build();
    }

    const Padic& exponent() const { return s_; }
    const CyclotomicFamily& family() const { return nu_; }
    Padic zero() const { return Padic::zero(P_.p, nu_.precision()); }
    Padic scalar(i64 c) const { return Padic::from_int(P_.p, c, nu_.precision()); }
    i64 r(i64 a) const { return a <= max_norm_ ? r_[static_cast<std::size_t>(a)] : P_.cm->r_count(a); }
    bool r_support(i64 a) const { return a % P_.p != 0 && r(a) != 0; }

    /// nu(a)^s for a prime to p.
    Padic nu_s(i64 a) const {
        if (a <= max_norm_) return nus_[static_cast<std::size_t>(a)];
        return power(a);
    }
    Padic r_W(i64 a) const {
        if (!r_support(a)) return zero();
        return nu_s(a) * scalar(r(a));
    }
    Padic W_ramified(i64 delta) const { return nu_s(delta); }
    /// nu(q)^{-2 s k}.
    Padic phi_prime(i64 q, i64 k) const {
        Padic x = nu_s(q);
        if (k >= 0) return (x * x).pow(k).inverse();
        return (x * x).pow(-k);
    }
    const Padic& sigma(i64 k) const {
        if (k > max_sigma_) throw std::out_of_range("FamilySource: sigma argument beyond table");
        return sigma_[static_cast<std::size_t>(k)];
    }

private:
    Padic power(i64 a) const {
        if (s_int_) {
            Padic x = nu_.nu(a);
            return *s_int_ >= 0 ? x.pow(*s_int_) : x.pow(-*s_int_).inverse();
        }
        return nu_.nu_pow(a, s_);
    }

    void build() {
        const CMContext& cm = *P_.cm;
        i64 top = std::max(max_norm_, max_sigma_);
        SpfSieve sv(std::max<i64>(top, 2));
        r_.assign(static_cast<std::size_t>(max_norm_ + 1), 0);
        nus_.assign(static_cast<std::size_t>(max_norm_ + 1), zero());
        sigma_.assign(static_cast<std::size_t>(max_sigma_ + 1), zero());
        std::map<i64, Padic> prime_pow;
        auto at_prime = [&](i64 l) {
            auto it = prime_pow.find(l);
            if (it != prime_pow.end()) return it->second;
            Padic v = power(l);
            prime_pow.emplace(l, v);
            return v;
        };
        nus_[1] = scalar(1);
        for (i64 a = 2; a <= max_norm_; ++a) {
            Factorization f = sv.factor(a);
            r_[static_cast<std::size_t>(a)] = cm.r_count_factored(f);
            if (a % P_.p == 0) continue;
            i64 l = f[0].first;
            nus_[static_cast<std::size_t>(a)] = nus_[static_cast<std::size_t>(a / l)] * at_prime(l);
        }
        if (max_norm_ >= 1) r_[1] = 1;
        for (i64 k = 1; k <= max_sigma_; ++k) {
            Padic v = scalar(1);
            for (auto [l, e] : sv.factor(k)) {
                if (l == P_.p || P_.Delta() % l == 0) continue;
                Padic x = at_prime(l);
                Padic step = (x * x).inverse();
                if (cm.epsilon(l) == -1) step = -step;
                Padic loc = scalar(1), t = scalar(1);
                for (int j = 1; j <= e; ++j) {
                    t *= step;
                    loc += t;
                }
                v *= loc;
            }
            sigma_[static_cast<std::size_t>(k)] = v;
        }
    }

    KernelParams P_;
    CyclotomicFamily nu_;
    Padic s_;
    std::optional<i64> s_int_;
    i64 max_norm_, max_sigma_;
    std::vector<i64> r_;
    std::vector<Padic> nus_;
    std::vector<Padic> sigma_;
};

/// Table bounds that cover every term of b(m) for m <= B.
inline std::pair<i64, i64> source_bounds(const KernelParams& P, i64 B) {
    return {B * P.Delta() + 1, B * P.Delta() / P.N + 1};
}

// ---------------------------------------------------------------------------
// Theta and Eisenstein coefficients

/// a(Theta(W), m) = r_W(m) for (m, p) = 1 and 0 otherwise.
template <class Source>
typename Source::value_type theta_coeff(const Source& src, i64 m) {
    if (m < 1) return src.zero();
    return src.r_support(m) ? typename Source::value_type(src.r_W(m)) : src.zero();
}

/// Product of the local characters eps_q over q | delta at num/den.
inline int epsilon_delta(const CMContext& cm, i64 delta, i64 num, i64 den = 1) {
    int s = 1;
    for (auto [q, e] : factor(delta)) s *= cm.local_epsilon(q, num, den);
    return s;
}

/**
 * Coefficient of the delta-twisted theta series at m, with the
 * |y|^{1/2} eps W(y) prefactor stripped: kappa(delta) W(d) eps_delta(m) r_W(m).
 */
inline CycloValue theta_twisted_coeff(const KernelParams& P, const HeckeSource& src, i64 delta, i64 m) {
    if (P.Delta() % delta != 0) throw std::invalid_argument("theta_twisted_coeff: delta does not divide Delta");
    if (!src.r_support(m)) return src.zero();
    CycloValue k = CycloValue::zeta(4, kappa_delta_index(*P.cm, delta));
    return (k * src.W_ramified(delta) * src.r_W(m)).times(epsilon_delta(*P.cm, delta, m));
}

/**
 * Eisenstein coefficient kappa(delta) phi(delta) eps_delta(m) phi_delta(m)
 * sigma_{eps phi}(m), the divisor sum running over divisors prime to Delta p.
 */
inline CycloValue eisenstein_coeff(const KernelParams& P, const HeckeSource& src, i64 delta, i64 m) {
    if (P.Delta() % delta != 0) throw std::invalid_argument("eisenstein_coeff: delta does not divide Delta");
    if (m < 1) return src.zero();
    i64 core = m;
    for (i64 q : P.cm->ramified_primes()) core = strip(core, q);
    core = strip(core, P.p);
    CycloValue v = CycloValue::zeta(4, kappa_delta_index(*P.cm, delta)) * src.sigma(core);
    for (auto [q, e] : factor(delta)) v *= src.phi_prime(q, 1 + vp(m, q));
    return v.times(epsilon_delta(*P.cm, delta, m));
}

/// B_{1,eps} = (1/D) sum_{a mod D} eps(a) a.
inline Rational bernoulli_b1(const CMContext& cm) {
    i64 D = cm.D(), s = 0;
    for (i64 a = 1; a < D; ++a) s += cm.epsilon(a) * a;
    return Rational::make(s, D);
}

/**
 * Constant term of the Eisenstein series: L^{(p)}(0, eps)/2 for delta = 1
 * and phi trivial, 0 for delta != 1. Nontrivial phi is not supported.
 */
inline Rational eisenstein_const(const KernelParams& P, bool phi_trivial, i64 delta) {
    if (delta != 1) return {0, 1};
    if (!phi_trivial) throw BackendUnsupported("eisenstein_const: constant term for nontrivial phi is not available");
    Rational b = bernoulli_b1(*P.cm);
    return Rational::make(-b.num * (1 - P.cm->epsilon(P.p)), 2 * b.den);
}

// ---------------------------------------------------------------------------
// The kernel Phi(W)

/// Positions n = N k / (m Delta) with 0 < n < 1.
inline i64 unit_box_count(const KernelParams& P, i64 m) { return (m * P.Delta() - 1) / P.N; }

/**
 * The term b_{delta,n}(m) for n = N k / (m Delta): the product of the
 * delta-twisted theta coefficient at (1-n) m delta and the delta-twisted
 * Eisenstein coefficient at n m delta / N, with kappa(delta)^2 = eps_delta(-1).
 */
template <class Source>
typename Source::value_type phi_term(const KernelParams& P, const Source& src, i64 m, i64 delta, i64 k) {
    const i64 D = P.Delta();
    i64 A = m * D - P.N * k;  // (1-n) m Delta
    if (A <= 0 || k <= 0) return src.zero();
    i64 num1 = delta * A;
    if (num1 % D != 0) return src.zero();
    i64 a1 = num1 / D;  // (1-n) m delta
    if (!src.r_support(a1)) return src.zero();
    const CMContext& cm = *P.cm;
    int sign = epsilon_delta_minus_one(delta);
    i64 core = k;
    for (i64 q : cm.ramified_primes()) core = strip(core, q);
    core = strip(core, P.p);
    typename Source::value_type v = src.r_W(a1) * src.sigma(core);
    v = v * src.W_ramified(delta);
    for (auto [q, e] : factor(delta)) {
        sign *= cm.local_epsilon(q, A, m * D) * cm.local_epsilon(q, P.N * k, m * D);
        // phi(q) phi_q(n m delta / N): v_q(k delta / Delta) = v_q(k)
        v = v * src.phi_prime(q, 1 + vp(k, q));
    }
    if (sign == -1) v = -v;
    return v;
}

/// b(m) = sum over delta | Delta and 0 < n < 1 of b_{delta,n}(m).
template <class Source>
typename Source::value_type phi_coeff_raw(const KernelParams& P, const Source& src, i64 m) {
    typename Source::value_type acc = src.zero();
    if (m < 1) return acc;
    i64 K = unit_box_count(P, m);
    for (i64 delta : P.deltas())
        for (i64 k = 1; k <= K; ++k) acc += phi_term(P, src, m, delta, k);
    return acc;
}

/// b(1..B) with the m-loop spread over P.jobs threads.
template <class Source>
std::vector<typename Source::value_type> phi_coeffs_raw(const KernelParams& P, const Source& src, i64 B) {
    std::vector<typename Source::value_type> out(static_cast<std::size_t>(B + 1), src.zero());
    parallel_for(1, static_cast<std::size_t>(B + 1), P.jobs,
                 [&](std::size_t m) { out[m] = phi_coeff_raw(P, src, static_cast<i64>(m)); });
    return out;
}

/**
 * Collapsed form of b(m) for W = chi o N, chi = nu^s:
 * sum_n chi((1-n) m) prod_{q | Delta} F_q r((1-n) m Delta) sigma_{eps chi^-2}(n m / N),
 * F_q = 1[v_q(nm) >= 0] + eps_q((n-1) n) chi(q)^{-2 (v_q(nm) + 1)},
 * with chi zero on ideals divisible by p.
 */
inline Padic phi_coeff_closed(const KernelParams& P, const FamilySource& src, i64 m) {
    Padic acc = src.zero();
    if (m < 1) return acc;
    const CMContext& cm = *P.cm;
    const i64 D = P.Delta();
    i64 K = unit_box_count(P, m);
    Padic inv_nu_D = src.nu_s(D).inverse();
    for (i64 k = 1; k <= K; ++k) {
        i64 A = m * D - P.N * k;
        if (!src.r_support(A)) continue;
        Padic term = src.nu_s(A) * inv_nu_D * src.scalar(src.r(A));
        i64 core = k;
        for (i64 q : cm.ramified_primes()) core = strip(core, q);
        core = strip(core, P.p);
        term *= src.sigma(core);
        for (i64 q : cm.ramified_primes()) {
            int v = vp(k, q) - 1;  // v_q(n m)
            int e = v == -1 ? 1 : cm.local_epsilon(q, -A * P.N * k, m * D * m * D);
            Padic f = src.phi_prime(q, v + 1);
            if (e == -1) f = -f;
            if (v >= 0) f += src.scalar(1);
            term *= f;
        }
        acc += term;
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Derivative in the cyclotomic direction

struct PlaceDerivative {
    i64 ell = 0;
    Splitting type = Splitting::Split;
    Padic value;
};

struct PhiDerivative {
    Padic total;
    std::vector<PlaceDerivative> places;  ///< nonzero contributions only
};

/**
 * b'(m) = sum_v b'_v(m) at s = 0 for m divisible by p, via the per-place
 * formulas: an inert v contributes where v(nm/N) is odd, a ramified v where
 * eps_v((n-1)n) = -1, each with all other local signs +1.
 */
inline PhiDerivative phi_derivative_coeff(const KernelParams& P, const CyclotomicFamily& nu, i64 m) {
    P.validate();
    const CMContext& cm = *P.cm;
    if (cm.epsilon(P.N) != 1) throw std::invalid_argument("phi_derivative_coeff: needs eps(N) = +1");
    if (m < 1 || m % P.p != 0) throw std::invalid_argument("phi_derivative_coeff: m must be a positive multiple of p");
    const i64 D = P.Delta();
    const int prec = nu.precision();
    std::map<i64, Padic> per;
    auto add = [&](i64 l, i64 coeff) {
        Padic c = nu.ell(l) * Padic::from_int(P.p, coeff, prec);
        auto it = per.find(l);
        if (it == per.end()) per.emplace(l, c);
        else it->second += c;
    };
    i64 K = unit_box_count(P, m);
    for (i64 k = 1; k <= K; ++k) {
        if (k % P.p == 0) continue;  // (p, nm) = 1
        i64 A = m * D - P.N * k;
        i64 rA = cm.r_count(A);
        if (rA == 0) continue;
        int omega = 0, negatives = 0;
        i64 neg_q = 0;
        int neg_v = 0;
        for (i64 q : cm.ramified_primes()) {
            int v = vp(k, q) - 1;
            if (v >= 0) ++omega;
            int e = v == -1 ? 1 : cm.local_epsilon(q, -A * P.N * k, m * D * m * D);
            if (e == -1) {
                ++negatives;
                neg_q = q;
                neg_v = v;
            }
        }
        i64 w = i64{1} << omega;
        if (negatives == 1) {
            i64 rk = cm.r_count(k);
            if (rk != 0) add(neg_q, w * rA * rk * (neg_v + 1));
        } else if (negatives == 0) {
            for (auto [l, e] : factor(k)) {
                if (cm.split_type(l) != Splitting::Inert || e % 2 == 0) continue;
                i64 rk = cm.r_count(k / l);
                if (rk != 0) add(l, w * rA * rk * (e + 1));
            }
        }
    }
    PhiDerivative out{Padic::zero(P.p, prec), {}};
    for (auto& [l, v] : per) {
        out.places.push_back({l, cm.split_type(l), v});
        out.total += v;
    }
    return out;
}

/// Nodes s = j p, j = 0..count-1, for the finite-difference derivative.
inline std::vector<i64> derivative_nodes(i64 p, int count = 11) {
    std::vector<i64> s;
    for (int j = 0; j < count; ++j) s.push_back(j * p);
    return s;
}

/**
 * d/ds of the collapsed b_s(m) at s = 0 from its values at the nodes, with
 * the certified precision of the interpolation.
 */
inline std::vector<DerivativeEstimate> phi_derivative_fd(const KernelParams& P, const CyclotomicFamily& nu,
                                                         const std::vector<i64>& ms,
                                                         const std::vector<i64>& nodes) {
    i64 B = 1;
    for (i64 m : ms) B = std::max(B, m);
    auto [mn, ms_] = source_bounds(P, B);
    std::vector<std::vector<Padic>> vals(nodes.size());
    parallel_for(0, nodes.size(), P.jobs, [&](std::size_t j) {
        FamilySource src(P, nu, nodes[j], mn, ms_);
        for (i64 m : ms) vals[j].push_back(phi_coeff_closed(P, src, m));
    });
    std::vector<DerivativeEstimate> out;
    for (std::size_t i = 0; i < ms.size(); ++i) {
        std::vector<std::pair<Padic, Padic>> samples;
        for (std::size_t j = 0; j < nodes.size(); ++j)
            samples.emplace_back(Padic::from_int(P.p, nodes[j], nu.precision() + 8), vals[j][i]);
        out.push_back(finite_difference_deriv(samples));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Functional equation

struct PairEntry {
    i64 delta = 1;
    i64 k = 0;  ///< n = N k / (m Delta)
    CycloValue left;   ///< b_{delta,n}
    CycloValue right;  ///< b_{Delta/delta,n}
    bool ok = true;
};

struct FunctionalEquationRow {
    i64 m = 0;
    CycloValue total;
    bool total_zero = true;
    bool pairs_ok = true;
    std::vector<PairEntry> mismatches;
    std::size_t pairs_checked = 0;
};

/**
 * For each m <= B, checks b_{delta,n} = (-1)^g eps(N) b_{Delta/delta,n} for
 * every delta and n, and records whether b(m) vanishes.
 */
inline std::vector<FunctionalEquationRow> check_functional_equation(const KernelParams& P, const HeckeSource& src,
                                                                    i64 B) {
    const int sign = (P.g() % 2 == 0 ? 1 : -1) * P.cm->epsilon(P.N);
    std::vector<FunctionalEquationRow> rows(static_cast<std::size_t>(B));
    parallel_for(1, static_cast<std::size_t>(B + 1), P.jobs, [&](std::size_t mi) {
        i64 m = static_cast<i64>(mi);
        FunctionalEquationRow row;
        row.m = m;
        row.total = src.zero();
        i64 K = unit_box_count(P, m);
        for (i64 delta : P.deltas()) {
            i64 dual = P.Delta() / delta;
            for (i64 k = 1; k <= K; ++k) {
                CycloValue a = phi_term(P, src, m, delta, k);
                row.total += a;
                if (delta > dual) continue;  // each unordered pair once
                CycloValue b = phi_term(P, src, m, dual, k);
                ++row.pairs_checked;
                if (a != b.times(sign)) {
                    row.pairs_ok = false;
                    if (row.mismatches.size() < 16) row.mismatches.push_back({delta, k, a, b, false});
                }
            }
        }
        row.total_zero = row.total.is_zero();
        rows[mi - 1] = std::move(row);
    });
    return rows;
}

// ---------------------------------------------------------------------------
// Measure identities

/// x rewritten over zeta_d (d | conductor), or nullopt when x is not in Q(zeta_d).
inline std::optional<CycloValue> descend(const CycloValue& x, i64 d) {
    using boost::multiprecision::cpp_rational;
    const i64 n = x.conductor();
    if (n % d != 0) throw std::invalid_argument("descend: d must divide the conductor");
    if (d == n) return x;
    const std::vector<i64> target = x.reduced();
    const std::size_t rows = target.size();
    const std::size_t cols = CycloValue::zeta(d, 0).reduced().size();
    // augmented system: column j is zeta_n^{j n/d} in reduced coordinates
    std::vector<std::vector<cpp_rational>> M(rows, std::vector<cpp_rational>(cols + 1));
    for (std::size_t j = 0; j < cols; ++j) {
        std::vector<i64> col = CycloValue::zeta(n, static_cast<i64>(j) * (n / d)).reduced();
        for (std::size_t i = 0; i < rows; ++i) M[i][j] = col[i];
    }
    for (std::size_t i = 0; i < rows; ++i) M[i][cols] = target[i];
    std::size_t r = 0;
    std::vector<std::size_t> pivot_col;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t piv = r;
        while (piv < rows && M[piv][c] == 0) ++piv;
        if (piv == rows) continue;
        std::swap(M[r], M[piv]);
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == r || M[i][c] == 0) continue;
            cpp_rational f = M[i][c] / M[r][c];
            for (std::size_t j = c; j <= cols; ++j) M[i][j] -= f * M[r][j];
        }
        pivot_col.push_back(c);
        ++r;
    }
    for (std::size_t i = r; i < rows; ++i)
        if (M[i][cols] != 0) return std::nullopt;
    CycloValue y(0, d);
    for (std::size_t i = 0; i < r; ++i) {
        cpp_rational v = M[i][cols] / M[i][pivot_col[i]];
        if (denominator(v) != 1) return std::nullopt;
        y.add_monomial(d, static_cast<i64>(pivot_col[i]), static_cast<i64>(numerator(v)));
    }
    return y;
}

/**
 * Image of an element of Z[zeta_e] in Z_p under zeta_e -> the Teichmuller
 * lift of a fixed primitive e-th root of unity mod p. The element must lie
 * in Q(zeta_{p-1}).
 */
inline Padic embed_cyclotomic(const CycloValue& value, i64 p, int prec) {
    auto sub = descend(value, std::gcd(value.conductor(), p - 1));
    if (!sub) throw std::domain_error("embed_cyclotomic: value does not lie in Q(zeta_{p-1})");
    const CycloValue& x = *sub;
    i64 e = x.conductor();
    i64 g = 2;
    auto fac = factor(p - 1);
    for (;; ++g) {
        bool ok = true;
        for (auto [q, k] : fac)
            if (powmod(g, (p - 1) / q, p) == 1) ok = false;
        if (ok) break;
    }
    Padic z = teichmuller(p, powmod(g, (p - 1) / e, p), prec);
    Padic acc = Padic::zero(p, prec), t = Padic::one(p, prec);
    for (i64 j = 0; j < e; ++j) {
        i64 c = x.coeffs()[static_cast<std::size_t>(j)];
        if (c != 0) acc += t * Padic::from_int(p, c, prec);
        t *= z;
    }
    return acc;
}

/// Exponents of the character W0 o proj on the level-(n+1) group.
inline HeckeCharacter inflate(const HeckeCharacter& W0, const std::shared_ptr<const RayClassGroup>& G1) {
    const RayClassGroup& G0 = W0.group();
    const auto& d = G1->invariants();
    i64 e0 = W0.value_order();
    std::vector<i64> a(d.size());
    for (std::size_t j = 0; j < d.size(); ++j) {
        std::vector<i64> x(d.size(), 0);
        x[j] = 1;
        i64 kj = W0.index_at(G1->project(G0, x));
        if ((kj * d[j]) % e0 != 0) throw std::logic_error("inflate: inconsistent orders");
        a[j] = kj * d[j] / e0;
    }
    return HeckeCharacter(G1, a);
}

/// Flat indices of the kernel of G1 -> G0.
inline std::vector<std::size_t> projection_kernel(const RayClassGroup& G1, const RayClassGroup& G0) {
    std::vector<std::size_t> out;
    std::vector<i64> zero0(G0.invariants().size(), 0);
    std::size_t id0 = G0.flat_index(zero0);
    for (std::size_t i = 0; i < static_cast<std::size_t>(G1.order()); ++i)
        if (G0.flat_index(G1.project(G0, G1.unflatten(i))) == id0) out.push_back(i);
    return out;
}

/// Characters of G1 that are trivial on the given subgroup.
inline std::vector<HeckeCharacter> annihilator(const std::shared_ptr<const RayClassGroup>& G1,
                                               const std::vector<std::size_t>& subgroup) {
    std::vector<HeckeCharacter> out;
    for (auto& W : characters_of(G1)) {
        bool ok = true;
        for (std::size_t i : subgroup)
            if (W.index_at(G1->unflatten(i)) != 0) {
                ok = false;
                break;
            }
        if (ok) out.push_back(W);
    }
    return out;
}

/// r_W(m) summed over the ideals of norm m directly (m prime to p).
inline CycloValue theta_by_ideals(const HeckeCharacter& W, i64 m) {
    const CMContext& cm = W.group().cm();
    CycloValue s(0, W.value_order());
    if (m % W.group().p() == 0) return s;
    for (const EIdeal& I : cm.ideals_of_norm(m)) s += W.value(I);
    return s;
}

}  // namespace rsk
