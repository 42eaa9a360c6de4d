#include <gtest/gtest.h>

#include <complex>
#include <random>

#include "rskernel/kernel_measures.hpp"

using namespace rsk;

namespace {

CycloValue random_value(std::mt19937_64& rng, i64 n) {
    CycloValue x(0, n);
    for (i64 k = 0; k < n; ++k) x.add_monomial(n, k, static_cast<i64>(rng() % 7) - 3);
    return x;
}

}  // namespace

TEST(Cyclo, RootOfUnityRelations) {
    for (i64 n : {1, 2, 4, 6, 11, 12, 22, 44}) {
        EXPECT_EQ(CycloValue::zeta(n, 1).pow(n), CycloValue(1));
        CycloValue s(0, n);
        for (i64 k = 0; k < n; ++k) s += CycloValue::zeta(n, k);
        if (n > 1) EXPECT_TRUE(s.is_zero()) << n;
    }
    EXPECT_EQ(CycloValue::zeta(4, 1) * CycloValue::zeta(4, 1), CycloValue(-1));
    EXPECT_EQ(CycloValue::zeta(6, 1) - CycloValue::zeta(6, 2), CycloValue(1));
}

TEST(Cyclo, MixedConductorsAgreeWithComplexEmbedding) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 200; ++t) {
        CycloValue a = random_value(rng, 4), b = random_value(rng, 11), c = random_value(rng, 6);
        CycloValue v = a * b + c - a.conj();
        std::complex<double> w = a.to_complex() * b.to_complex() + c.to_complex() - std::conj(a.to_complex());
        EXPECT_LT(std::abs(v.to_complex() - w), 1e-9);
    }
}

TEST(Cyclo, EqualityIgnoresRepresentation) {
    CycloValue x = CycloValue::zeta(3, 1);
    EXPECT_EQ(x.lift(12), x);
    EXPECT_EQ(CycloValue::zeta(3, 1) + CycloValue::zeta(3, 2), CycloValue(-1, 12));
    i64 v = 0;
    EXPECT_TRUE((CycloValue::zeta(4, 1) * CycloValue::zeta(4, 3)).as_integer(v));
    EXPECT_EQ(v, 1);
}

TEST(Cyclo, DescendToSubfield) {
    CycloValue i = CycloValue::zeta(4, 1).lift(44);
    auto d = descend(i, 4);
    ASSERT_TRUE(d.has_value());
    EXPECT_EQ(*d, CycloValue::zeta(4, 1));
    EXPECT_FALSE(descend(CycloValue::zeta(44, 1), 4).has_value());
    // sqrt(-11) lies in Q(zeta_11)
    CycloValue g(0, 11);
    for (i64 a = 1; a < 11; ++a) g.add_monomial(11, a, legendre(a, 11));
    auto dg = descend(g.lift(44), 11);
    ASSERT_TRUE(dg.has_value());
    EXPECT_EQ(*dg, g);
}

TEST(Cyclo, EmbeddingIsARingMap) {
    const i64 p = 23;
    const int M = 15;
    EXPECT_EQ(embed_cyclotomic(CycloValue(5), p, M), Padic::from_int(p, 5, M));
    EXPECT_EQ(embed_cyclotomic(CycloValue::zeta(22, 1), p, M).pow(22), Padic::one(p, M));
    std::mt19937_64 rng(5);
    for (int t = 0; t < 50; ++t) {
        CycloValue a = random_value(rng, 22), b = random_value(rng, 11);
        EXPECT_EQ(embed_cyclotomic(a * b, p, M), embed_cyclotomic(a, p, M) * embed_cyclotomic(b, p, M));
        EXPECT_EQ(embed_cyclotomic(a + b, p, M), embed_cyclotomic(a, p, M) + embed_cyclotomic(b, p, M));
    }
    // only Q(zeta_{p-1}) embeds; ramified extensions are not implemented
    EXPECT_THROW(embed_cyclotomic(CycloValue::zeta(23, 1), p, M), std::domain_error);
    // a fourth root of unity needs 4 | p - 1
    EXPECT_THROW(embed_cyclotomic(CycloValue::zeta(4, 1), p, M), std::domain_error);
    EXPECT_EQ(embed_cyclotomic(CycloValue::zeta(4, 1), 13, M).pow(2), Padic::from_int(13, -1, M));
}
