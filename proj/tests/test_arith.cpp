#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "rskernel/arith.hpp"

using namespace rsk;

namespace {

bool naive_prime(i64 n) {
    if (n < 2) return false;
    for (i64 d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

i64 product(const Factorization& f) {
    i64 x = 1;
    for (auto [q, e] : f) x *= ipow(q, e);
    return x;
}

IntMatrix matmul(const IntMatrix& a, const IntMatrix& b) {
    std::size_t n = a.size();
    IntMatrix c(n, std::vector<i64>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t j = 0; j < n; ++j) c[i][j] += a[i][k] * b[k][j];
    return c;
}

}  // namespace

TEST(Arith, ModularBasics) {
    EXPECT_EQ(mod(-7, 5), 3);
    EXPECT_EQ(powmod(3, 4, 7), 81 % 7);
    for (i64 a = 1; a < 97; ++a) EXPECT_EQ(mulmod(a, invmod(a, 97), 97), 1);
    EXPECT_EQ(vp(72, 2), 3);
    EXPECT_EQ(strip(72, 3), 8);
    EXPECT_EQ(ipow(23, 4), 279841);
}

TEST(Arith, PrimalityMatchesTrialDivision) {
    for (i64 n = -5; n < 5000; ++n) EXPECT_EQ(is_prime(n), naive_prime(n)) << n;
    auto ps = primes_up_to(1000);
    EXPECT_EQ(ps.size(), 168u);
}

TEST(Arith, LegendreMatchesSquares) {
    for (i64 q : {3, 5, 7, 11, 23, 101}) {
        std::vector<bool> sq(static_cast<std::size_t>(q), false);
        for (i64 x = 1; x < q; ++x) sq[static_cast<std::size_t>(x * x % q)] = true;
        for (i64 a = 1; a < q; ++a) EXPECT_EQ(legendre(a, q), sq[static_cast<std::size_t>(a)] ? 1 : -1);
        EXPECT_EQ(legendre(q, q), 0);
    }
}

TEST(Arith, KroneckerOfMinusSeven) {
    EXPECT_EQ(kronecker(-7, 2), 1);
    EXPECT_EQ(kronecker(-7, 3), -1);
    EXPECT_EQ(kronecker(-7, 7), 0);
    EXPECT_EQ(kronecker(-7, 11), 1);
    EXPECT_EQ(kronecker(-7, 23), 1);
    // multiplicative in the bottom argument
    for (i64 a = 1; a < 60; ++a)
        for (i64 b = 1; b < 60; ++b) EXPECT_EQ(kronecker(-7, a * b), kronecker(-7, a) * kronecker(-7, b));
}

TEST(Arith, SqrtModSquaresBack) {
    for (i64 q : {3, 5, 13, 17, 23, 41, 97, 1009})
        for (i64 a = 1; a < std::min<i64>(q, 200); ++a) {
            if (legendre(a, q) != 1) continue;
            i64 r = sqrt_mod(a, q);
            EXPECT_EQ(mulmod(r, r, q), a) << a << " mod " << q;
        }
}

TEST(Arith, FactorAndDivisors) {
    EXPECT_EQ(factor(12), (Factorization{{2, 2}, {3, 1}}));
    EXPECT_TRUE(factor(1).empty());
    std::mt19937_64 rng(7);
    SpfSieve sv(100000);
    for (int i = 0; i < 500; ++i) {
        i64 n = static_cast<i64>(rng() % 99999) + 1;
        EXPECT_EQ(product(factor(n)), n);
        EXPECT_EQ(sv.factor(n), factor(n));
        auto d = divisors_of(factor(n));
        i64 cnt = 0;
        for (i64 k = 1; k <= n; ++k) cnt += n % k == 0;
        if (n < 5000) EXPECT_EQ(static_cast<i64>(d.size()), cnt);
    }
}

TEST(Arith, SmithFormIsEquivalentAndDivisible) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = 1 + rng() % 4;
        IntMatrix A(n, std::vector<i64>(n));
        for (auto& row : A)
            for (auto& x : row) x = static_cast<i64>(rng() % 21) - 10;
        SmithForm s = smith_normal_form(A);
        IntMatrix D = matmul(matmul(s.U, A), s.V);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) EXPECT_EQ(D[i][j], i == j ? s.diag[i] : 0);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (s.diag[i + 1] != 0) EXPECT_EQ(s.diag[i + 1] % s.diag[i], 0);
        }
        IntMatrix I = matmul(s.V, s.Vinv);
        EXPECT_EQ(I, identity_matrix(n));
    }
}
