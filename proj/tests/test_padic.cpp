#include <gtest/gtest.h>

#include "rskernel/padic.hpp"

using namespace rsk;

namespace {

Padic P(i64 p, i64 n, int prec) { return Padic::from_int(p, n, prec); }

std::vector<std::pair<Padic, Padic>> samples_of(i64 p, int prec, const std::vector<i64>& nodes,
                                                const std::function<Padic(i64)>& f) {
    std::vector<std::pair<Padic, Padic>> s;
    for (i64 x : nodes) s.emplace_back(P(p, x, prec + 8), f(x));
    return s;
}

}  // namespace

TEST(Padic, ArithmeticRoundTrips) {
    Padic a = P(23, 17, 20), b = P(23, 5, 20);
    EXPECT_EQ((a * b) / b, a);
    EXPECT_EQ((a + b) - b, a);
    Padic third = Padic::from_rational(5, 1, 3, 10);
    EXPECT_EQ(third.times(3), Padic::one(5, 10));
    Padic x = Padic::from_rational(5, 2, 25, 10);
    EXPECT_EQ(x.valuation(), -2);
    EXPECT_EQ(x.times(25), P(5, 2, 8));
}

TEST(Padic, FromPartsRestoresValue) {
    Padic x = P(23, 23 * 23 * 41, 12);
    Padic y = Padic::from_parts(23, x.unit_part(), x.precision(), x.valuation());
    EXPECT_EQ(x, y);
    EXPECT_EQ(y.valuation(), 2);
}

TEST(Padic, TeichmullerKnownValues) {
    EXPECT_EQ(teichmuller(5, 2, 2).residue(), 7);
    EXPECT_EQ(teichmuller(5, 1, 6).residue(), 1);
    EXPECT_EQ(teichmuller(7, 6, 1).residue(), 6);
    EXPECT_THROW(teichmuller(5, 10, 3), std::domain_error);
}

TEST(Padic, TeichmullerIsRootOfUnity) {
    for (i64 p : {3, 5, 11, 23})
        for (i64 u = 1; u < p; ++u) {
            Padic w = teichmuller(p, u, 15);
            EXPECT_EQ(w.pow(p - 1), Padic::one(p, 15));
            EXPECT_EQ(w.residue() % p, u);
        }
}

TEST(Padic, IwasawaLogKnownValues) {
    EXPECT_EQ(iwasawa_log(P(5, 6, 3)).residue(), 55);
    EXPECT_TRUE(iwasawa_log(Padic::one(5, 8)).is_zero());
    EXPECT_THROW(iwasawa_log(P(5, 2, 4)), std::domain_error);
}

TEST(Padic, LogIsAHomomorphismAndExpInvertsIt) {
    for (i64 p : {3, 5, 23}) {
        const int M = 16;
        for (i64 a : {1 + p, 1 + 2 * p, 1 + p * p, 1 + 3 * p})
            for (i64 b : {1 + p, 1 + 4 * p}) {
                Padic x = P(p, a, M), y = P(p, b, M);
                EXPECT_EQ(iwasawa_log(x * y), iwasawa_log(x) + iwasawa_log(y));
                EXPECT_EQ(padic_exp(iwasawa_log(x)), x);
            }
        // log of a unit kills its Teichmuller part
        Padic u = P(p, 2, M);
        EXPECT_EQ(iwasawa_log_unit(u), iwasawa_log_unit(u / teichmuller(p, 2, M)));
    }
}

TEST(Padic, HenselUnitRootKnownValues) {
    Padic r = hensel_unit_root(7, 3, 7, 2);
    EXPECT_EQ(r.residue(), 17);
    Padic a3 = hensel_unit_root(3, -1, 3, 2);
    EXPECT_EQ(a3.residue(), 2);
    EXPECT_THROW(hensel_unit_root(5, 10, 5, 3), std::domain_error);
}

TEST(Padic, HenselUnitRootSolvesTheQuadratic) {
    for (i64 p : {3, 5, 7, 23})
        for (i64 a = -4; a <= 4; ++a) {
            if (mod(a, p) == 0) continue;
            Padic x = hensel_unit_root(p, a, p, 18);
            Padic f = x * x - x.times(a) + P(p, p, 18);
            EXPECT_TRUE(f.is_zero()) << "p=" << p << " a=" << a;
            EXPECT_EQ(x.valuation(), 0);
        }
}

TEST(Padic, FiniteDifferenceOfConstantIsZero) {
    const i64 p = 5;
    auto est = finite_difference_deriv(samples_of(p, 12, {5, 10, 15}, [&](i64) { return P(p, 42, 12); }));
    EXPECT_TRUE(est.value.with_precision(est.certified_digits).is_zero());
}

TEST(Padic, FiniteDifferenceOfLinearFunction) {
    const i64 p = 7;
    Padic c = P(p, 1234, 14);
    auto est = finite_difference_deriv(samples_of(p, 14, {7, 14, 21}, [&](i64 s) { return c.times(s); }));
    // the result is truncated to the certified precision, which assumes a general power series
    EXPECT_GE(est.certified_digits, 3);
    EXPECT_GE(agreement_digits(est.value, c), est.certified_digits);
    EXPECT_EQ(est.value.precision(), est.certified_digits);
}

TEST(Padic, FiniteDifferenceOfPowerRecoversLog) {
    // nu(m)^s at s in {p, 2p}: the slope is log nu(m) to M - 2 digits
    const i64 p = 5;
    const int M = 3;
    Padic nu = P(p, 6, M + 6);
    auto est = finite_difference_deriv(samples_of(p, M, {p, 2 * p}, [&](i64 s) { return nu.pow(s).with_precision(M + 1); }));
    EXPECT_GE(agreement_digits(est.value, iwasawa_log(P(p, 6, M + 1))), M - 2);

    // many nodes: agreement reaches the certified precision
    const int W = 20;
    Padic u = P(23, 24, W + 8);
    std::vector<i64> nodes;
    for (int j = 0; j < 11; ++j) nodes.push_back(23 * j);
    auto big = finite_difference_deriv(samples_of(23, W, nodes, [&](i64 s) { return u.pow(s).with_precision(W); }));
    EXPECT_GE(agreement_digits(big.value, iwasawa_log(P(23, 24, W))), big.certified_digits);
    EXPECT_GE(big.certified_digits, 12);
}

TEST(Padic, FiniteDifferenceRejectsBadNodes) {
    EXPECT_THROW(finite_difference_deriv({}), std::invalid_argument);
    auto same = samples_of(5, 8, {5, 5}, [](i64) { return P(5, 1, 8); });
    EXPECT_THROW(finite_difference_deriv(same), std::invalid_argument);
    auto unit = samples_of(5, 8, {1, 5}, [](i64) { return P(5, 1, 8); });
    EXPECT_THROW(finite_difference_deriv(unit), std::invalid_argument);
}

TEST(Padic, PowerSeriesMatchesIntegerPowers) {
    const i64 p = 23;
    Padic u = P(p, 47, 20);
    PadicPoly f = PadicPoly::power_series(u, 24);
    for (i64 s : {0, 23, 46, 69}) EXPECT_GE(agreement_digits(f(P(p, s, 20)), u.pow(s)), 15) << s;
}
