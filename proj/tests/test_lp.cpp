#include <gtest/gtest.h>

#include "rskernel/io.hpp"
#include "rskernel/lp.hpp"

using namespace rsk;

namespace {

const LpContext& context() {
    static const LpContext ctx = [] {
        NewformRecord f = ingest_newform(std::string(RSK_DATA_DIR) + "/11a.json");
        KernelParams P{std::make_shared<const CMContext>(CMContext::over_rationals(7)), 11, 23, 20, 1};
        return LpContext(f, P, f.bound() / 23);
    }();
    return ctx;
}

std::shared_ptr<const RayClassGroup> group(int n) {
    return std::make_shared<const RayClassGroup>(context().params().cm, 23, n);
}

}  // namespace

TEST(EulerFactor, LocalFactorFormula) {
    Padic alpha = hensel_unit_root(3, -1, 3, 20);
    Padic a2 = alpha * alpha;
    Padic expect = (a2 - Padic::one(3, 20)) * (a2 - Padic::from_int(3, 3, 20)) / (a2 * a2);
    EXPECT_EQ(hp_local(alpha, 3), expect);
    EXPECT_FALSE(hp_exceptional(alpha, 3));
    EXPECT_TRUE(hp_exceptional(Padic::one(5, 10), 5));
    EXPECT_TRUE(hp_exceptional(Padic::from_int(5, -1, 10), 5));
}

TEST(EulerFactor, ElevenAAtTwentyThree) {
    const LpContext& ctx = context();
    // a(23) = -1 is congruent to alpha, so alpha^2 = 1 mod 23 and H_p loses one digit
    EXPECT_EQ(ctx.alpha().residue() % 23, 22);
    EXPECT_EQ(Hp_factor(ctx).valuation(), 1);
    EXPECT_FALSE(ctx.exceptional());
    EXPECT_EQ(ctx.span().pivot_rows(), (std::vector<i64>{1, 23}));
    EXPECT_EQ(ctx.table_bound(), 989);
}

TEST(EulerFactor, VpForTrivialCharacter) {
    const LpContext& ctx = context();
    Padic one = Padic::one(23, 20);
    Padic t = one - ctx.alpha().inverse();
    EXPECT_EQ(Vp_factor(ctx, HeckeCharacter::trivial(group(1))), t * t);
}

TEST(Lp, ZeroTableGivesZero) {
    const LpContext& ctx = context();
    auto z = CoeffTable<Padic>::filled(ctx.table_bound(), Padic::zero(23, 20));
    EXPECT_TRUE(Lp_value(ctx, z).is_zero());
    auto short_table = CoeffTable<Padic>::filled(100, Padic::zero(23, 20));
    EXPECT_THROW(Lp_value(ctx, short_table), std::invalid_argument);
}

TEST(Lp, SyntheticValueIsEulerFactorTimesCoordinate) {
    const LpContext& ctx = context();
    CyclotomicFamily nu(23, 20);
    SyntheticFamily fam{&ctx, &nu, 2, 3};
    for (i64 s : {0, 23, 46}) {
        Padic v = Lp_value(ctx, fam.at(s));
        EXPECT_GE(agreement_digits(v, Hp_factor(ctx) * nu.nu_pow(2, s)), 18) << s;
    }
}

TEST(Lp, DerivativeRoutesAgree) {
    const LpContext& ctx = context();
    CyclotomicFamily nu(23, 20);
    SyntheticFamily fam{&ctx, &nu, 2, 3};
    Padic a = Lp_derivative_analytic(ctx, fam.derivative());
    DerivativeEstimate b = Lp_derivative_fd(ctx, [&](i64 s) { return fam.at(s); }, derivative_nodes(23));
    EXPECT_GE(b.certified_digits, 16);
    EXPECT_GE(agreement_digits(a, b.value), 16);
    EXPECT_GE(agreement_digits(a, Hp_factor(ctx) * nu.ell(2)), 18);
}

TEST(Lp, AnticyclotomicValuesVanish) {
    const LpContext& ctx = context();
    EXPECT_TRUE(Lp_value(ctx, HeckeCharacter::trivial(group(0))).is_zero());
    int seen = 0;
    for (auto& W : characters_of(group(1))) {
        if (!W.is_anticyclotomic() || W.is_trivial()) continue;
        EXPECT_TRUE(Lp_value(ctx, W).is_zero());
        if (++seen == 3) break;
    }
}

TEST(Lp, KernelOutsideTheSpanIsRefused) {
    const LpContext& ctx = context();
    for (auto& W : characters_of(group(1))) {
        if (W.is_anticyclotomic()) continue;
        EXPECT_THROW(Lp_value(ctx, W), NotInSpan);
        break;
    }
}

TEST(Interpolation, ConstantsForTrivialCharacter) {
    const LpContext& ctx = context();
    auto c = interpolation_constants(ctx, HeckeCharacter::trivial(group(1)));
    EXPECT_TRUE(c.tau_convention);
    ASSERT_EQ(c.tau.size(), 2u);
    EXPECT_EQ(c.conductor_norm_sqrt.outside, 1);
    EXPECT_EQ(c.conductor_norm_sqrt.inside, 1);
    EXPECT_EQ(c.alpha_conductor, Padic::one(23, 20));
    EXPECT_EQ(c.Wbar_Delta, CycloValue(1));
    EXPECT_EQ(c.Vp, Vp_factor(ctx, HeckeCharacter::trivial(group(1))));
}

TEST(Interpolation, SquareRootSplitting) {
    EXPECT_EQ(exact_sqrt(23 * 23).outside, 23);
    EXPECT_EQ(exact_sqrt(23).inside, 23);
    auto s = exact_sqrt(72);
    EXPECT_EQ(s.outside, 6);
    EXPECT_EQ(s.inside, 2);
}

TEST(Interpolation, RamifiedCharacterHasConductorGaussSums) {
    const LpContext& ctx = context();
    for (auto& W : characters_of(group(1))) {
        auto [c0, c1] = W.conductor();
        if (c0 != 1 || c1 != 1) continue;
        auto c = interpolation_constants(ctx, W);
        EXPECT_FALSE(c.tau_convention);
        EXPECT_EQ(c.conductor_norm_sqrt.outside, 23);
        EXPECT_EQ(c.alpha_conductor, ctx.alpha().pow(2));
        EXPECT_EQ(c.Vp, Padic::one(23, 20));
        break;
    }
}
