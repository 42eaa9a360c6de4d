#include <gtest/gtest.h>

#include "rskernel/verify.hpp"

using namespace rsk;

namespace {

std::shared_ptr<const CMContext> field(i64 D) { return std::make_shared<const CMContext>(CMContext::over_rationals(D)); }

KernelParams params(i64 N = 11, i64 p = 23) { return KernelParams{field(7), N, p, 20, 1}; }

std::vector<HeckeCharacter> anticyclotomic(const std::shared_ptr<const CMContext>& cm, i64 p, int n) {
    std::vector<HeckeCharacter> out;
    for (auto& W : characters_of(std::make_shared<const RayClassGroup>(cm, p, n)))
        if (W.is_anticyclotomic()) out.push_back(W);
    return out;
}

}  // namespace

TEST(GaussSums, KappaKnownValues) {
    EXPECT_EQ(kappa(CMContext::over_rationals(7), 7), CycloValue::zeta(4, 3));
    // kappa(5) = 1 needs eps_5(5) = (-11 | 5) = 1; in Q(sqrt(-15)) it is -1
    EXPECT_EQ(kappa(CMContext::over_rationals(55), 5), CycloValue(1));
    EXPECT_EQ(kappa(CMContext::over_rationals(15), 5), CycloValue(-1));
    CMContext cm = CMContext::over_rationals(7);
    EXPECT_LT(std::abs(kappa_direct(cm, 7) - std::complex<double>(0, -1)), 1e-12);
}

TEST(GaussSums, KappaSquaresAndProducts) {
    auto sq = check_kappa_squares(200);
    EXPECT_TRUE(sq.ok()) << sq.failures.front();
    EXPECT_EQ(sq.checked, 45u);
    for (i64 D : {7, 11, 19, 35}) {
        auto pr = check_kappa_product(D);
        EXPECT_TRUE(pr.ok()) << pr.failures.front();
    }
}

TEST(GaussSums, TauPairs) {
    for (i64 p : {11, 23}) {
        auto s = check_gauss_pairs(field(7), p);
        EXPECT_TRUE(s.ok()) << s.failures.front();
        EXPECT_GT(s.checked, 0u);
    }
}

TEST(Theta, TrivialCharacterCountsIdeals) {
    KernelParams P = params();
    auto G = std::make_shared<const RayClassGroup>(P.cm, 23, 1);
    auto [mn, ms] = source_bounds(P, 40);
    HeckeSource src(P, HeckeCharacter::trivial(G), mn, ms);
    EXPECT_EQ(theta_coeff(src, 1), CycloValue(1));
    EXPECT_EQ(theta_coeff(src, 2), CycloValue(2));
    EXPECT_TRUE(theta_coeff(src, 23).is_zero());
    for (i64 m = 1; m <= 200; ++m)
        if (m % 23 != 0) EXPECT_EQ(theta_coeff(src, m), CycloValue(P.cm->r_count(m)));
}

TEST(Theta, TwistedCoefficientAtRamifiedDivisor) {
    KernelParams P = params();
    auto G = std::make_shared<const RayClassGroup>(P.cm, 23, 1);
    auto [mn, ms] = source_bounds(P, 40);
    HeckeSource src(P, HeckeCharacter::trivial(G), mn, ms);
    EXPECT_EQ(theta_twisted_coeff(P, src, 1, 2), CycloValue(2));
    EXPECT_EQ(theta_twisted_coeff(P, src, 7, 1), CycloValue::zeta(4, 3));
    EXPECT_TRUE(theta_twisted_coeff(P, src, 7, 46).is_zero());
}

TEST(Theta, TwistedCountsMatchIdealEnumeration) {
    KernelParams P = params(3, 11);
    auto G = std::make_shared<const RayClassGroup>(P.cm, 11, 1);
    auto [mn, ms] = source_bounds(P, 30);
    for (auto& W : characters_of(G)) {
        HeckeSource src(P, W, mn, ms);
        for (i64 m = 1; m <= 120; ++m) EXPECT_EQ(theta_coeff(src, m), theta_by_ideals(W, m)) << m;
    }
}

TEST(Eisenstein, DivisorSumAndConstantTerm) {
    KernelParams P = params();
    auto G = std::make_shared<const RayClassGroup>(P.cm, 23, 1);
    auto [mn, ms] = source_bounds(P, 200);
    HeckeSource src(P, HeckeCharacter::trivial(G), mn, ms);
    EXPECT_EQ(eisenstein_coeff(P, src, 1, 2), CycloValue(2));
    for (i64 m = 1; m <= 100; ++m) {
        if (m % 23 == 0 || m % 7 == 0) continue;
        i64 s = 0;
        for (i64 d : divisors_of(factor(m))) s += P.cm->epsilon(d);
        EXPECT_EQ(eisenstein_coeff(P, src, 1, m), CycloValue(s)) << m;
    }
    EXPECT_EQ(eisenstein_const(P, true, 7), (Rational{0, 1}));
    // B_{1,eps} = -1 for Q(sqrt(-7)); eps(23) = 1 kills the Euler factor at p
    EXPECT_EQ(bernoulli_b1(*P.cm), (Rational{-1, 1}));
    EXPECT_EQ(eisenstein_const(P, true, 1), (Rational{0, 1}));
}

TEST(Kernel, EmptyRangeGivesZero) {
    KernelParams P = params();
    CyclotomicFamily nu(23, 20);
    auto [mn, ms] = source_bounds(P, 2);
    FamilySource src(P, nu, 0, mn, ms);
    // m Delta <= N leaves no n in (0, 1)
    EXPECT_EQ(unit_box_count(P, 1), 0);
    EXPECT_TRUE(phi_coeff_raw(P, src, 1).is_zero());
    EXPECT_TRUE(phi_coeff_closed(P, src, 1).is_zero());
}

TEST(Kernel, VanishesOnAnticyclotomicCharacters) {
    KernelParams P = params();
    const i64 B = 200;
    auto [mn, ms] = source_bounds(P, B);
    for (int level : {0, 1}) {
        for (auto& W : anticyclotomic(P.cm, 23, level)) {
            HeckeSource src(P, W, mn, ms);
            auto b = phi_coeffs_raw(P, src, B);
            for (i64 m = 1; m <= B; ++m) ASSERT_TRUE(b[m].is_zero()) << "level " << level << " m = " << m;
        }
    }
}

TEST(Kernel, NonAnticyclotomicCharactersDoNotVanish) {
    KernelParams P = params();
    auto [mn, ms] = source_bounds(P, 60);
    std::size_t nonzero = 0;
    for (auto& W : characters_of(std::make_shared<const RayClassGroup>(P.cm, 23, 1))) {
        if (W.is_anticyclotomic()) continue;
        HeckeSource src(P, W, mn, ms);
        for (i64 m = 1; m <= 60; ++m) nonzero += !phi_coeff_raw(P, src, m).is_zero();
    }
    EXPECT_GT(nonzero, 0u);
}

TEST(Kernel, PairwiseFunctionalEquationAtLevelEleven) {
    KernelParams P = params();
    FunctionalEquationSummary s;
    for (auto& W : anticyclotomic(P.cm, 23, 1)) accumulate_fe(s, P, W, 80);
    EXPECT_EQ(s.pair_mismatches, 0u);
    EXPECT_EQ(s.nonzero_totals, 0u);
    EXPECT_GT(s.pairs, 0u);
}

TEST(Kernel, PerturbedCoefficientIsDetected) {
    KernelParams P = params();
    FunctionalEquationSummary s;
    auto G = std::make_shared<const RayClassGroup>(P.cm, 23, 1);
    accumulate_fe(s, P, HeckeCharacter::trivial(G), 30, 5);
    EXPECT_EQ(s.nonzero_totals, 1u);
}

TEST(Kernel, RawAndClosedFormsAgree) {
    KernelParams P = params();
    CyclotomicFamily nu(23, 20);
    const i64 B = 120;
    auto [mn, ms] = source_bounds(P, B);
    for (i64 s : {0, 23, 46}) {
        FamilySource src(P, nu, s, mn, ms);
        for (i64 m = 1; m <= B; ++m)
            EXPECT_GE(agreement_digits(phi_coeff_raw(P, src, m), phi_coeff_closed(P, src, m)), 18) << "s=" << s << " m=" << m;
    }
}

TEST(Kernel, RawHeckeKernelEmbedsToFamilyKernel) {
    // W = nu o N on a finite quotient is not available as a ray character; the trivial
    // character is, and it is the s = 0 member of the family.
    KernelParams P = params();
    CyclotomicFamily nu(23, 20);
    auto [mn, ms] = source_bounds(P, 60);
    HeckeSource hs(P, HeckeCharacter::trivial(std::make_shared<const RayClassGroup>(P.cm, 23, 1)), mn, ms);
    FamilySource fs(P, nu, 0, mn, ms);
    for (i64 m = 1; m <= 60; ++m) EXPECT_EQ(embed_cyclotomic(phi_coeff_raw(P, hs, m), 23, 20), phi_coeff_closed(P, fs, m));
}

TEST(Derivative, PlaceFormulaMatchesFiniteDifferences) {
    KernelParams P = params();
    CyclotomicFamily nu(23, 20);
    std::vector<i64> ms;
    for (i64 m = 23; m <= 115; m += 23) ms.push_back(m);
    auto fd = phi_derivative_fd(P, nu, ms, derivative_nodes(23));
    for (std::size_t i = 0; i < ms.size(); ++i) {
        auto d = phi_derivative_coeff(P, nu, ms[i]);
        EXPECT_GE(fd[i].certified_digits, 16);
        EXPECT_GE(agreement_digits(d.total, fd[i].value), fd[i].certified_digits) << ms[i];
        for (auto& pl : d.places) EXPECT_NE(pl.type, Splitting::Split);
    }
    EXPECT_THROW(phi_derivative_coeff(P, nu, 24), std::invalid_argument);
}

TEST(Measures, ThetaFiberSums) {
    auto s = check_theta_fibers(field(7), 11, 60);
    EXPECT_TRUE(s.ok()) << s.failures.front();
    // class number 3: the level-0 group is nontrivial
    auto t = check_theta_fibers(field(23), 13, 60);
    EXPECT_TRUE(t.ok()) << t.failures.front();
}

TEST(Measures, AnnihilatorOfKernelIsInflation) {
    auto cm = field(23);
    auto G0 = std::make_shared<const RayClassGroup>(cm, 13, 0);
    auto G1 = std::make_shared<const RayClassGroup>(cm, 13, 1);
    auto ann = annihilator(G1, projection_kernel(*G1, *G0));
    EXPECT_EQ(static_cast<i64>(ann.size()), G0->order());
    for (auto& W0 : characters_of(G0)) {
        HeckeCharacter W1 = inflate(W0, G1);
        bool found = false;
        for (auto& A : ann) found = found || A.exponents() == W1.exponents();
        EXPECT_TRUE(found);
    }
}

TEST(Params, ValidationNamesTheProblem) {
    EXPECT_THROW(params(14, 7).validate(), std::invalid_argument);
    EXPECT_THROW(params(11, 3).validate(), BackendUnsupported);
    KernelParams P{field(7), 23, 23, 20, 1};
    EXPECT_THROW(P.validate(), std::invalid_argument);
}
