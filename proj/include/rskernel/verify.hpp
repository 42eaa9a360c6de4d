#pragma once

/**
 * @file verify.hpp
 * @brief Self-checks shared by the CLI and the acceptance runner.
 */

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "kernel_measures.hpp"

namespace rsk {

struct CheckSummary {
    std::size_t checked = 0;
    std::vector<std::string> failures;  ///< first few only
    double max_float_error = 0;

    bool ok() const { return failures.empty(); }
    void fail(std::string what) {
        if (failures.size() < 16) failures.push_back(std::move(what));
        else if (failures.size() == 16) failures.push_back("...");
    }
    void merge(const CheckSummary& o) {
        checked += o.checked;
        for (auto& f : o.failures) fail(f);
        max_float_error = std::max(max_float_error, o.max_float_error);
    }
};

/// An imaginary quadratic Q(sqrt(-D)), D = 3 mod 4, in which the odd prime q ramifies.
inline i64 field_ramified_at(i64 q) { return mod(q, 4) == 3 ? q : 3 * q; }

/**
 * kappa(q)^2 = eps_q(-1) exactly, and kappa(q) against the direct character
 * sum, for every odd prime q <= qmax.
 */
inline CheckSummary check_kappa_squares(i64 qmax, double tol = 1e-10) {
    CheckSummary s;
    for (i64 q : primes_up_to(qmax)) {
        if (q == 2) continue;
        CMContext cm = CMContext::over_rationals(field_ramified_at(q));
        CycloValue k = kappa(cm, q);
        ++s.checked;
        if (k * k != CycloValue(cm.local_epsilon(q, -1), 4)) s.fail("kappa(" + std::to_string(q) + ")^2 != eps_q(-1)");
        double err = std::abs(k.to_complex() - kappa_direct(cm, q));
        s.max_float_error = std::max(s.max_float_error, err);
        if (err > tol) s.fail("kappa(" + std::to_string(q) + ") differs from the direct sum by " + std::to_string(err));
    }
    return s;
}

/// prod_{q | D} kappa(q) = -i exactly, and the same product of direct sums within tol.
inline CheckSummary check_kappa_product(i64 D, double tol = 1e-10) {
    CheckSummary s;
    CMContext cm = CMContext::over_rationals(D);
    CycloValue prod(1, 4);
    std::complex<double> direct = 1;
    for (i64 q : cm.ramified_primes()) {
        prod *= kappa(cm, q);
        direct *= kappa_direct(cm, q);
    }
    ++s.checked;
    if (prod != CycloValue::zeta(4, 3)) s.fail("prod kappa = " + prod.to_string() + " for D = " + std::to_string(D));
    double err = std::abs(direct - std::complex<double>(0, -1));
    s.max_float_error = err;
    if (err > tol) s.fail("direct prod kappa off by " + std::to_string(err) + " for D = " + std::to_string(D));
    return s;
}

/**
 * G(W_v) G(conj W_v) = W_v(-1) p exactly for every character of the level-1
 * ray class group and every component of conductor exponent 1, with the
 * normalized product compared numerically as well.
 */
inline CheckSummary check_gauss_pairs(const std::shared_ptr<const CMContext>& cm, i64 p, double tol = 1e-10) {
    CheckSummary s;
    auto G = std::make_shared<const RayClassGroup>(cm, p, 1);
    for (const HeckeCharacter& W : characters_of(G)) {
        HeckeCharacter Wb = W.inverse();
        for (int comp = 0; comp < 2; ++comp) {
            GaussSum a = tau_gauss(W, comp), b = tau_gauss(Wb, comp);
            if (a.conductor_exponent != 1) continue;
            ++s.checked;
            CycloValue sign = CycloValue::zeta(W.value_order(), local_sign_index(W, comp));
            if (a.sum * b.sum != sign.times(p)) s.fail("tau pair at p = " + std::to_string(p) + ", component " + std::to_string(comp));
            double err = std::abs(a.normalized() * b.normalized() - sign.to_complex());
            s.max_float_error = std::max(s.max_float_error, err);
            if (err > tol) s.fail("normalized tau pair off by " + std::to_string(err));
        }
    }
    return s;
}

/**
 * Distribution property of Theta between ray levels 0 and 1 at p, for m <= mmax
 * prime to p. Per class x of level 1, sum_W conj(W)(x) r_W(m) must equal
 * #G_1 times the number of ideals of norm m in x (counted directly). The
 * level-1 counts must sum over each fiber of G_1 -> G_0 to the level-0
 * character sum, and inflation must not change r_W.
 */
inline CheckSummary check_theta_fibers(const std::shared_ptr<const CMContext>& cm, i64 p, i64 mmax) {
    CheckSummary s;
    auto G0 = std::make_shared<const RayClassGroup>(cm, p, 0);
    auto G1 = std::make_shared<const RayClassGroup>(cm, p, 1);
    auto chars0 = characters_of(G0), chars1 = characters_of(G1);
    const std::size_t n0 = static_cast<std::size_t>(G0->order()), n1 = static_cast<std::size_t>(G1->order());
    std::vector<std::size_t> fiber(n1);
    for (std::size_t i = 0; i < n1; ++i) fiber[i] = G0->flat_index(G1->project(*G0, G1->unflatten(i)));
    for (i64 m = 1; m <= mmax; ++m) {
        if (m % p == 0) continue;
        std::vector<i64> count1(n1, 0);
        for (const EIdeal& I : cm->ideals_of_norm(m)) ++count1[G1->flat_index(G1->dlog(I))];
        std::vector<CycloValue> r1, r0;
        for (auto& W : chars1) r1.push_back(theta_by_ideals(W, m));
        for (auto& W : chars0) r0.push_back(theta_by_ideals(W, m));
        std::vector<i64> fiber_sum(n0, 0);
        for (std::size_t x = 0; x < n1; ++x) {
            CycloValue acc(0, 1);
            for (std::size_t w = 0; w < chars1.size(); ++w) acc += chars1[w].inverse().value_at(G1->unflatten(x)) * r1[w];
            ++s.checked;
            if (acc != CycloValue(static_cast<i64>(n1) * count1[x]))
                s.fail("m = " + std::to_string(m) + ": level-1 class " + std::to_string(x) + " sum " + acc.to_string() +
                       " vs " + std::to_string(count1[x]) + " ideals");
            fiber_sum[fiber[x]] += count1[x];
        }
        for (std::size_t x = 0; x < n0; ++x) {
            CycloValue acc(0, 1);
            for (std::size_t w = 0; w < chars0.size(); ++w) acc += chars0[w].inverse().value_at(G0->unflatten(x)) * r0[w];
            ++s.checked;
            if (acc != CycloValue(static_cast<i64>(n0) * fiber_sum[x]))
                s.fail("m = " + std::to_string(m) + ": fiber over level-0 class " + std::to_string(x) + " sums to " +
                       std::to_string(fiber_sum[x]) + ", level-0 measure " + acc.to_string());
        }
        for (std::size_t w = 0; w < chars0.size(); ++w) {
            ++s.checked;
            if (theta_by_ideals(inflate(chars0[w], G1), m) != r0[w])
                s.fail("m = " + std::to_string(m) + ": inflation changes r_W");
        }
    }
    return s;
}

struct FunctionalEquationSummary {
    std::size_t characters = 0;
    std::size_t coefficients = 0;
    std::size_t pairs = 0;
    std::size_t nonzero_totals = 0;
    std::size_t pair_mismatches = 0;
    std::vector<std::string> examples;
};

/// Runs the functional-equation check for one character and folds it into the summary.
inline void accumulate_fe(FunctionalEquationSummary& s, const KernelParams& P, const HeckeCharacter& W, i64 B,
                          i64 perturb_m = 0) {
    auto [mn, ms] = source_bounds(P, B);
    HeckeSource src(P, W, mn, ms);
    auto rows = check_functional_equation(P, src, B);
    ++s.characters;
    for (auto& row : rows) {
        ++s.coefficients;
        s.pairs += row.pairs_checked;
        bool zero = row.total_zero && row.m != perturb_m;
        if (!zero) {
            ++s.nonzero_totals;
            std::string shown = row.m == perturb_m ? "perturbed" : row.total.to_string();
            if (s.examples.size() < 8) s.examples.push_back("b(" + std::to_string(row.m) + ") = " + shown);
        }
        if (!row.pairs_ok) {
            s.pair_mismatches += row.mismatches.size();
            if (s.examples.size() < 8) {
                const PairEntry& e = row.mismatches.front();
                s.examples.push_back("m = " + std::to_string(row.m) + ", delta = " + std::to_string(e.delta) +
                                     ", k = " + std::to_string(e.k) + ": " + e.left.to_string() + " vs " +
                                     e.right.to_string());
            }
        }
    }
}

}  // namespace rsk
