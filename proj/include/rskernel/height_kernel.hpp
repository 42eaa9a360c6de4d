#pragma once

/**
 * @file height_kernel.hpp
 * @brief Local height sums Psi_v(m) at places v not above p, their
 * p-restricted variants, and the coefficientwise check of
 * (U^4 - U^2) Psi_v^{[p]} = (U - 1)^4 Psi_v over F = Q.
 */

#include <array>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "arith.hpp"
#include "cm_arith.hpp"
#include "kernel_measures.hpp"
#include "parallel.hpp"

namespace rsk {

/// r(n) for all n <= limit, by a multiplicative sieve; larger n fall back to factoring.
class RCountTable {
public:
    RCountTable(std::shared_ptr<const CMContext> cm, i64 limit) : cm_(std::move(cm)), limit_(limit) {
        r_.assign(static_cast<std::size_t>(limit + 1), 1);
        std::vector<bool> composite(static_cast<std::size_t>(limit + 1), false);
        for (i64 l = 2; l <= limit; ++l) {
            if (composite[static_cast<std::size_t>(l)]) continue;
            for (i64 j = l * l; j <= limit; j += l) composite[static_cast<std::size_t>(j)] = true;
            Splitting s = cm_->split_type(l);
            if (s == Splitting::Ramified) continue;
            for (i64 n = l; n <= limit; n += l) {
                i64 t = n / l;
                int e = 1;
                while (t % l == 0) {
                    t /= l;
                    ++e;
                }
                auto& r = r_[static_cast<std::size_t>(n)];
                if (s == Splitting::Split) r = static_cast<std::uint16_t>(r * (e + 1));
                else if (e % 2 == 1) r = 0;
            }
        }
        r_[0] = 0;
    }

    i64 limit() const { return limit_; }
    i64 operator()(i64 n) const {
        if (n <= 0) return 0;
        if (n <= limit_) return r_[static_cast<std::size_t>(n)];
        return cm_->r_count(n);
    }

private:
    std::shared_ptr<const CMContext> cm_;
    i64 limit_;
    std::vector<std::uint16_t> r_;
};

struct RRelationReport {
    std::size_t checked = 0;
    std::vector<std::string> failures;  ///< first few only
    bool ok() const { return failures.empty(); }
};

/**
 * For every split l <= lmax and m <= B: 2r(m) = r(ml) + r(m/l);
 * 2r(m) = r(ml^2) + r(m/l^2) if l | m; 2r(m) = r(ml^2) - r(m) if l does not
 * divide m; r(m l^t) = (t+1) r(m) for l not dividing m and t <= 4. Also
 * compares r(m) with the number of enumerated ideals of norm m.
 */
inline RRelationReport check_r_relations(const CMContext& cm, i64 B, i64 lmax = 50) {
    RRelationReport rep;
    auto r = [&](i64 num, i64 den) -> i64 { return num % den == 0 ? cm.r_count(num / den) : 0; };
    auto fail = [&](const std::string& what, i64 m, i64 l) {
        if (rep.failures.size() < 16) rep.failures.push_back(what + " at m = " + std::to_string(m) + ", l = " + std::to_string(l));
    };
    std::vector<i64> split;
    for (i64 l : primes_up_to(lmax))
        if (cm.split_type(l) == Splitting::Split) split.push_back(l);
    for (i64 m = 1; m <= B; ++m) {
        const i64 rm = cm.r_count(m);
        ++rep.checked;
        if (static_cast<i64>(cm.ideals_of_norm(m).size()) != rm) fail("r(m) differs from ideal enumeration", m, 1);
        for (i64 l : split) {
            rep.checked += 2;
            if (2 * rm != r(m * l, 1) + r(m, l)) fail("2r(m) = r(ml) + r(m/l)", m, l);
            if (m % l == 0) {
                if (2 * rm != r(m * l * l, 1) + r(m, l * l)) fail("2r(m) = r(ml^2) + r(m/l^2)", m, l);
                continue;
            }
            if (2 * rm != r(m * l * l, 1) - rm) fail("2r(m) = r(ml^2) - r(m)", m, l);
            i64 x = m;
            for (int t = 0; t <= 4; ++t, x *= l) {
                ++rep.checked;
                if (cm.r_count(x) != (t + 1) * rm) fail("r(m l^" + std::to_string(t) + ") = (t+1) r(m)", m, l);
            }
        }
    }
    return rep;
}

/// #{q | Delta : v_q(n m Delta) >= 1} for n = num/den.
inline int omega_delta(const CMContext& cm, i64 num, i64 den, i64 m) {
    int c = 0;
    for (i64 q : cm.ramified_primes())
        if (vp(num, q) - vp(den, q) + vp(m, q) + 1 >= 1) ++c;
    return c;
}

/// Which n enter a local sum: all of them, or only those with (p, nm) = 1.
enum class PRestriction { None, PrimeToP };

/**
 * Psi_v(M) / l_{F,v}(pi_v) as an integer. For v = l inert:
 * sum 2^omega r((1-n) M Delta) r(n M Delta / N l) (v_l(nM/N) + 1) over n with
 * every eps_q((n-1)n) = 1; for v = q ramified: sum 2^omega r((1-n) M Delta)
 * r(n M Delta / N) (v_q(nM) + 1) over n with eps_q((n-1)n) = -1 and the
 * other signs +1. Split v gives 0.
 */
inline i64 psi_v_integer(const KernelParams& P, const RCountTable& r, i64 v, i64 M, PRestriction restrict) {
    const CMContext& cm = *P.cm;
    Splitting type = cm.split_type(v);
    if (v % P.p == 0) throw std::invalid_argument("psi_v: places above p are not handled");
    if (type == Splitting::Split || M < 1) return 0;
    const i64 D = P.Delta();
    i64 K = unit_box_count(P, M);
    i64 total = 0;
    for (i64 k = 1; k <= K; ++k) {
        if (restrict == PRestriction::PrimeToP && k % P.p == 0) continue;
        i64 A = M * D - P.N * k;
        i64 rA = r(A);
        if (rA == 0) continue;
        i64 second;
        int weight;
        if (type == Splitting::Inert) {
            if (k % v != 0) continue;
            second = r(k / v);
            if (second == 0) continue;
            weight = vp(k, v) + 1;
        } else {
            second = r(k);
            if (second == 0) continue;
            weight = vp(k, v);  // v_q(nM) + 1
        }
        int omega = 0;
        bool ok = true;
        for (i64 q : cm.ramified_primes()) {
            int vq = vp(k, q) - 1;
            if (vq >= 0) ++omega;
            int e = vq == -1 ? 1 : cm.local_epsilon(q, -A * P.N * k, M * D * M * D);
            bool want_negative = type == Splitting::Ramified && q == v;
            if ((e == -1) != want_negative) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        total += (i64{1} << omega) * rA * second * weight;
    }
    return total;
}

/**
 * The same sum transcribed over n = j / (M Delta), j = 1 .. M Delta - 1, with
 * membership in N M^{-1} Delta^{-1}, integrality and every local sign tested
 * on the rational numbers themselves.
 */
inline i64 psi_v_literal(const KernelParams& P, i64 v, i64 M, PRestriction restrict) {
    const CMContext& cm = *P.cm;
    Splitting type = cm.split_type(v);
    if (type == Splitting::Split || M < 1) return 0;
    const i64 D = P.Delta(), den = M * D;
    i64 total = 0;
    for (i64 j = 1; j < den; ++j) {
        // n = j / den lies in N M^{-1} Delta^{-1} iff n M Delta / N = j / N is integral
        if (j % P.N != 0) continue;
        Rational nm = Rational::make(j, D);             // n M
        Rational nm_over_N = Rational::make(j, D * P.N);  // n M / N
        if (restrict == PRestriction::PrimeToP && vp(nm.num, P.p) - vp(nm.den, P.p) != 0) continue;
        Rational one_minus = Rational::make(den - j, 1);  // (1 - n) M Delta
        i64 rA = cm.r_count(one_minus.num);
        if (rA == 0) continue;
        Rational prod = Rational::make((j - den) * j, den * den);  // (n - 1) n
        int omega = 0;
        bool ok = true;
        for (i64 q : cm.ramified_primes()) {
            if (vp(j, q) >= 1) ++omega;  // v_q(n M Delta) = v_q(j)
            int e = cm.local_epsilon(q, prod.num, prod.den);
            bool want_negative = type == Splitting::Ramified && q == v;
            if ((e == -1) != want_negative) ok = false;
        }
        if (!ok) continue;
        i64 second = 0;
        int weight = 0;
        Rational target = type == Splitting::Inert ? Rational::make(j, P.N * v) : Rational::make(j, P.N);
        if (target.den != 1) continue;
        second = cm.r_count(target.num);
        if (type == Splitting::Inert) weight = vp(nm_over_N.num, v) - vp(nm_over_N.den, v) + 1;
        else weight = vp(nm.num, v) - vp(nm.den, v) + 1;
        total += (i64{1} << omega) * rA * second * weight;
    }
    return total;
}

/// Psi_v(m) = l_{F,v}(pi_v) times the integer sum.
inline Padic psi_v_coeff(const KernelParams& P, const CyclotomicFamily& nu, const RCountTable& r, i64 v, i64 m) {
    i64 s = psi_v_integer(P, r, v, m, PRestriction::None);
    return nu.ell(v) * Padic::from_int(P.p, s, nu.precision());
}

// ---------------------------------------------------------------------------
// The U-operator identity

struct IdentityRow {
    i64 m = 0;
    i64 lhs = 0;  ///< Psi^{[p]}(m p^4) - Psi^{[p]}(m p^2)
    i64 rhs = 0;  ///< sum_i C(4,i) (-1)^i Psi(m p^i)
    bool ok = true;
};

struct BracketRow {
    int t = 0;
    std::array<i64, 3> value{};     ///< the three bracketed expressions evaluated as displayed
    std::array<i64, 3> expected{};  ///< (1, 1, 0) at t = 0, zero for t > 0
    bool ok = true;
};

struct IdentityReport {
    i64 v = 0;
    std::vector<IdentityRow> rows;
    std::vector<BracketRow> brackets;
    bool rows_ok = true;
    bool brackets_ok = true;
};

/// The bracketed coefficients of r(...) in A_t, as displayed.
inline std::array<i64, 3> bracket_values(int t) {
    i64 b1 = (t + 1) - 2 * t + 2 * (t - 1);
    i64 b2 = -2 * (t + 2) + (t >= 1 ? 4 * (t + 1) - 2 * t : 3);
    i64 b3 = (t + 3) - 2 * (t + 2) + (t + 1);
    return {b1, b2, b3};
}

inline std::vector<BracketRow> check_brackets(int tmax = 4) {
    std::vector<BracketRow> out;
    for (int t = 0; t <= tmax; ++t) {
        BracketRow b;
        b.t = t;
        b.value = bracket_values(t);
        b.expected = t == 0 ? std::array<i64, 3>{1, 1, 0} : std::array<i64, 3>{0, 0, 0};
        b.ok = b.value == b.expected;
        out.push_back(b);
    }
    return out;
}

/**
 * Checks (U^4 - U^2) Psi_v^{[p]} = (U - 1)^4 Psi_v at every m <= mmax. The
 * r-table must reach mmax p^4 Delta.
 */
inline IdentityReport verify_identity(const KernelParams& P, const RCountTable& r, i64 v, i64 mmax) {
    IdentityReport rep;
    rep.v = v;
    const i64 p = P.p;
    const i64 p2 = p * p, p4 = p2 * p2;
    static constexpr i64 binom[5] = {1, 4, 6, 4, 1};
    rep.rows.resize(static_cast<std::size_t>(mmax));
    // one task per (m, evaluation) keeps the large p^4 sums spread over workers
    struct Task {
        i64 m, M;
        PRestriction restrict;
        i64 value = 0;
    };
    std::vector<Task> tasks;
    for (i64 m = 1; m <= mmax; ++m) {
        tasks.push_back({m, m * p4, PRestriction::PrimeToP});
        tasks.push_back({m, m * p2, PRestriction::PrimeToP});
        for (int i = 0; i <= 4; ++i) tasks.push_back({m, m * ipow(p, i), PRestriction::None});
    }
    parallel_for(0, tasks.size(), P.jobs, [&](std::size_t i) {
        tasks[i].value = psi_v_integer(P, r, v, tasks[i].M, tasks[i].restrict);
    });
    for (i64 m = 1; m <= mmax; ++m) {
        const Task* t = &tasks[static_cast<std::size_t>((m - 1) * 7)];
        IdentityRow row;
        row.m = m;
        row.lhs = t[0].value - t[1].value;
        for (int i = 0; i <= 4; ++i) row.rhs += binom[i] * (i % 2 == 0 ? 1 : -1) * t[2 + i].value;
        row.ok = row.lhs == row.rhs;
        rep.rows_ok = rep.rows_ok && row.ok;
        rep.rows[static_cast<std::size_t>(m - 1)] = row;
    }
    rep.brackets = check_brackets();
    for (auto& b : rep.brackets) rep.brackets_ok = rep.brackets_ok && b.ok;
    return rep;
}

}  // namespace rsk
