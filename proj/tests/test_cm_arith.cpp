#include <gtest/gtest.h>

#include "rskernel/cm_arith.hpp"

using namespace rsk;

namespace {

std::shared_ptr<const CMContext> field7() { return std::make_shared<const CMContext>(CMContext::over_rationals(7)); }

/// r(n) by counting ideals of norm n through binary quadratic forms x^2 + xy + 2y^2 (h = 1).
i64 r_by_forms(i64 n) {
    i64 c = 0;
    for (i64 y = -n; y <= n; ++y)
        for (i64 x = -2 * n; x <= 2 * n; ++x)
            if (x * x + x * y + 2 * y * y == n) ++c;
    return c / 2;  // two units
}

}  // namespace

TEST(BaseFields, RationalIdealsAndFactorization) {
    FieldContext Q = FieldContext::rational();
    auto ideals = Q.enumerate_ideals(5);
    ASSERT_EQ(ideals.size(), 5u);
    for (std::size_t i = 0; i < ideals.size(); ++i) EXPECT_EQ(Q.label(ideals[i]), std::to_string(i + 1));
    EXPECT_EQ(Q.enumerate_ideals(1).size(), 1u);
    auto f = Q.factor_ideal(Q.ideal_of_integer(12));
    ASSERT_EQ(f.size(), 2u);
    EXPECT_EQ(f.begin()->first.ell, 2);
    EXPECT_EQ(f.begin()->second, 2);
    EXPECT_TRUE(Q.factor_ideal(Q.ideal_of_integer(1)).empty());
}

TEST(BaseFields, RationalUnitBox) {
    FieldContext Q = FieldContext::rational();
    auto pts = Q.elements_in_unit_box(Q.parse_label("11/28"));
    ASSERT_EQ(pts.size(), 2u);
    EXPECT_EQ(pts[0], FElement::make(11, 0, 28));
    EXPECT_EQ(pts[1], FElement::make(11, 0, 14));
    EXPECT_TRUE(Q.elements_in_unit_box(Q.ideal_of_integer(2)).empty());
}

TEST(BaseFields, RealQuadraticSqrtTwo) {
    FieldContext F = FieldContext::real_quadratic(2);
    EXPECT_EQ(F.degree(), 2);
    auto ideals = F.enumerate_ideals(3);
    ASSERT_EQ(ideals.size(), 2u);
    EXPECT_EQ(ideals[0].norm(), (Rational{1, 1}));
    EXPECT_EQ(ideals[1].norm(), (Rational{2, 1}));
    auto f2 = F.factor_ideal(F.ideal_of_integer(2));
    ASSERT_EQ(f2.size(), 1u);
    EXPECT_EQ(f2.begin()->second, 2);
    EXPECT_EQ(f2.begin()->first.e, 2);
    // 3 is inert: one prime of norm 9
    auto p3 = F.primes_above(3);
    ASSERT_EQ(p3.size(), 1u);
    EXPECT_EQ(p3[0].norm(), 9);
    // (1/2) O_F: the only element with both embeddings in (0, 1) is 1/2
    FIdeal half = F.ideal_of_integer(2).inverse();
    auto pts = F.elements_in_unit_box(half);
    ASSERT_EQ(pts.size(), 1u);
    EXPECT_EQ(pts[0], FElement::make(1, 0, 2));
}

TEST(BaseFields, LabelsRoundTrip) {
    FieldContext F = FieldContext::real_quadratic(2);
    for (const FIdeal& a : F.enumerate_ideals(60)) EXPECT_EQ(F.label(F.parse_label(F.label(a))), F.label(a));
}

TEST(CMArith, QuadraticCharacterOfMinusSeven) {
    CMContext cm = CMContext::over_rationals(7);
    EXPECT_EQ(cm.epsilon(2), 1);
    EXPECT_EQ(cm.epsilon(7), 0);
    EXPECT_EQ(cm.epsilon(3), -1);
    EXPECT_EQ(cm.split_type(2), Splitting::Split);
    EXPECT_EQ(cm.split_type(3), Splitting::Inert);
    EXPECT_EQ(cm.split_type(7), Splitting::Ramified);
    EXPECT_EQ(cm.class_number(), 1u);
}

TEST(CMArith, IdealCountsMatchFormCount) {
    CMContext cm = CMContext::over_rationals(7);
    EXPECT_EQ(cm.r_count(4), 3);
    EXPECT_EQ(cm.r_count(3), 0);
    EXPECT_EQ(cm.r_count(1), 1);
    for (i64 n = 1; n <= 150; ++n) {
        EXPECT_EQ(cm.r_count(n), r_by_forms(n)) << n;
        EXPECT_EQ(static_cast<i64>(cm.ideals_of_norm(n).size()), cm.r_count(n)) << n;
        i64 s = 0;
        for (i64 d : divisors_of(factor(n))) s += cm.epsilon(d);
        EXPECT_EQ(cm.r_count(n), s) << n;
    }
}

TEST(CMArith, ClassNumbersFromReducedForms) {
    const std::pair<i64, std::size_t> known[] = {{3, 1}, {7, 1}, {11, 1}, {15, 2}, {23, 3}, {35, 2}, {47, 5}, {71, 7}};
    for (auto [D, h] : known) EXPECT_EQ(CMContext::over_rationals(D).class_number(), h) << D;
}

TEST(RayClassGroup, OrdersMatchExactSequence) {
    auto cm = field7();
    RayClassGroup G0(cm, 23, 0);
    EXPECT_EQ(G0.order(), 1);
    RayClassGroup G(cm, 11, 1);
    EXPECT_EQ(G.order(), 50);
    EXPECT_EQ(G.order(), G.expected_order());
    RayClassGroup H(cm, 23, 1);
    EXPECT_EQ(H.order(), 242);
    EXPECT_THROW(RayClassGroup(cm, 3, 1), BackendUnsupported);
}

TEST(RayClassGroup, CharacterOrthogonality) {
    auto G = std::make_shared<const RayClassGroup>(field7(), 11, 1);
    auto chars = characters_of(G);
    ASSERT_EQ(chars.size(), 50u);
    for (std::size_t i = 0; i < static_cast<std::size_t>(G->order()); ++i) {
        CycloValue s(0, 1);
        for (auto& W : chars) s += W.value_at(G->unflatten(i));
        i64 expect = G->unflatten(i) == std::vector<i64>(G->invariants().size(), 0) ? 50 : 0;
        EXPECT_EQ(s, CycloValue(expect)) << i;
    }
}

TEST(RayClassGroup, CharactersAreMultiplicativeOnIdeals) {
    auto G = std::make_shared<const RayClassGroup>(field7(), 11, 1);
    const CMContext& cm = G->cm();
    for (auto& W : characters_of(G)) {
        for (i64 a : {2, 4, 8, 9, 16}) {
            for (const EIdeal& I : cm.ideals_of_norm(a)) {
                for (const EIdeal& J : cm.ideals_of_norm(2)) {
                    EIdeal IJ = I;
                    for (auto [P, e] : J) {
                        bool merged = false;
                        for (auto& [Q, f] : IJ)
                            if (Q.ell == P.ell && Q.index == P.index) {
                                f += e;
                                merged = true;
                            }
                        if (!merged) IJ.emplace_back(P, e);
                    }
                    EXPECT_EQ(W.value(IJ), W.value(I) * W.value(J));
                }
            }
        }
    }
}

TEST(RayClassGroup, TrivialAndAnticyclotomic) {
    auto G = std::make_shared<const RayClassGroup>(field7(), 23, 1);
    auto chars = characters_of(G);
    std::size_t anti = 0, trivial = 0;
    for (auto& W : chars) {
        if (W.is_trivial()) {
            ++trivial;
            EXPECT_TRUE(W.is_anticyclotomic());
        }
        if (W.is_anticyclotomic()) {
            ++anti;
            EXPECT_EQ(W.is_anticyclotomic(), W.is_anticyclotomic_by_generators());
            // trivial on l O_E for rational primes l != p
            for (i64 l : {2, 3, 5, 11, 13}) {
                EIdeal I;
                for (const EPrime& P : G->cm().eprimes_above(l)) I.emplace_back(P, 1);
                EXPECT_EQ(W.value(I), CycloValue(1)) << l;
            }
        }
    }
    EXPECT_EQ(trivial, 1u);
    EXPECT_EQ(anti, 22u);
}

TEST(CyclotomicFamily, NuLandsInOnePlusP) {
    CyclotomicFamily nu(23, 20);
    for (i64 a : {2, 3, 5, 7, 24, 100}) {
        Padic v = nu.nu(a);
        EXPECT_EQ(v.residue() % 23, 1);
        EXPECT_EQ(nu.ell(a), iwasawa_log(v));
    }
    EXPECT_EQ(nu.nu(6), nu.nu(2) * nu.nu(3));
    EXPECT_THROW(nu.nu(46), std::domain_error);
}
