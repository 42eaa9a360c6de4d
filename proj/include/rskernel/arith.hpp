#pragma once

/**
 * @file arith.hpp
 * @brief Elementary integer arithmetic: modular powers, residue symbols,
 * trial-division factorization, a compact smallest-prime-factor sieve and
 * Smith normal form of small integer matrices.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rsk {

using i64 = std::int64_t;
using i128 = __int128;

/// Default bound for trial division.
inline constexpr i64 kTrialDivisionBound = 1000000;

inline i64 mod(i64 a, i64 m) {
    i64 r = a % m;
    return r < 0 ? r + m : r;
}

inline i64 mulmod(i64 a, i64 b, i64 m) {
    return static_cast<i64>(mod(static_cast<i64>((static_cast<i128>(a) * b) % m), m));
}

inline i64 powmod(i64 a, i64 e, i64 m) {
    if (m == 1) return 0;
    i64 r = 1;
    a = mod(a, m);
    while (e > 0) {
        if (e & 1) r = mulmod(r, a, m);
        a = mulmod(a, a, m);
        e >>= 1;
    }
    return r;
}

/// Extended Euclid; returns g and sets x, y with a*x + b*y = g.
inline i64 ext_gcd(i64 a, i64 b, i64& x, i64& y) {
    i64 x0 = 1, y0 = 0, x1 = 0, y1 = 1;
    while (b != 0) {
        i64 q = a / b;
        std::tie(a, b) = std::make_pair(b, a - q * b);
        std::tie(x0, x1) = std::make_pair(x1, x0 - q * x1);
        std::tie(y0, y1) = std::make_pair(y1, y0 - q * y1);
    }
    x = x0;
    y = y0;
    return a;
}

inline i64 invmod(i64 a, i64 m) {
    i64 x, y;
    i64 g = ext_gcd(mod(a, m), m, x, y);
    if (g != 1) throw std::domain_error("invmod: " + std::to_string(a) + " not invertible mod " + std::to_string(m));
    return mod(x, m);
}

inline i64 ipow(i64 b, int e) {
    i64 r = 1;
    while (e-- > 0) r *= b;
    return r;
}

/// Exponent of the prime p in n (n != 0).
inline int vp(i64 n, i64 p) {
    if (n == 0) throw std::domain_error("vp: zero argument");
    int v = 0;
    n = n < 0 ? -n : n;
    while (n % p == 0) {
        n /= p;
        ++v;
    }
    return v;
}

/// n with every factor of p removed.
inline i64 strip(i64 n, i64 p) {
    while (n != 0 && n % p == 0) n /= p;
    return n;
}

inline bool is_prime(i64 n) {
    if (n < 2) return false;
    for (i64 q : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
        if (n % q == 0) return n == q;
    }
    i64 d = n - 1;
    int s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    for (i64 a : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
        i64 x = powmod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool comp = true;
        for (int r = 1; r < s; ++r) {
            x = mulmod(x, x, n);
            if (x == n - 1) {
                comp = false;
                break;
            }
        }
        if (comp) return false;
    }
    return true;
}

/// Legendre symbol (a|q) for an odd prime q.
inline int legendre(i64 a, i64 q) {
    a = mod(a, q);
    if (a == 0) return 0;
    return powmod(a, (q - 1) / 2, q) == 1 ? 1 : -1;
}

/// Kronecker symbol (a|n) for n >= 1.
inline int kronecker(i64 a, i64 n) {
    if (n <= 0) throw std::invalid_argument("kronecker: n must be positive");
    int res = 1;
    while (n % 2 == 0) {
        n /= 2;
        if (a % 2 == 0) return 0;
        i64 r = mod(a, 8);
        if (r == 3 || r == 5) res = -res;
    }
    // Jacobi symbol (a|n) for odd n.
    a = mod(a, n);
    while (a != 0) {
        while (a % 2 == 0) {
            a /= 2;
            i64 r = n % 8;
            if (r == 3 || r == 5) res = -res;
        }
        std::swap(a, n);
        if (a % 4 == 3 && n % 4 == 3) res = -res;
        a %= n;
    }
    return n == 1 ? res : 0;
}

/// Square root of a quadratic residue a modulo an odd prime q (Tonelli-Shanks).
inline i64 sqrt_mod(i64 a, i64 q) {
    a = mod(a, q);
    if (a == 0) return 0;
    if (legendre(a, q) != 1) throw std::domain_error("sqrt_mod: non-residue");
    if (q % 4 == 3) return powmod(a, (q + 1) / 4, q);
    i64 s = q - 1;
    int e = 0;
    while (s % 2 == 0) {
        s /= 2;
        ++e;
    }
    i64 z = 2;
    while (legendre(z, q) != -1) ++z;
    i64 x = powmod(a, (s + 1) / 2, q), b = powmod(a, s, q), g = powmod(z, s, q);
    int r = e;
    while (b != 1) {
        int m = 0;
        for (i64 t = b; t != 1; t = mulmod(t, t, q)) ++m;
        i64 gs = g;
        for (int i = 0; i < r - m - 1; ++i) gs = mulmod(gs, gs, q);
        x = mulmod(x, gs, q);
        g = mulmod(gs, gs, q);
        b = mulmod(b, g, q);
        r = m;
    }
    return x;
}

using Factorization = std::vector<std::pair<i64, int>>;

/**
 * Factor |n| by trial division up to `bound`. A leftover cofactor is accepted
 * only when it is provably prime (below bound^2); otherwise the call fails.
 */
inline Factorization factor(i64 n, i64 bound = kTrialDivisionBound) {
    if (n == 0) throw std::domain_error("factor: zero");
    n = n < 0 ? -n : n;
    Factorization f;
    for (i64 q = 2; q * q <= n; q += (q == 2 ? 1 : 2)) {
        if (q > bound) {
            throw std::runtime_error("factor: cofactor " + std::to_string(n) +
                                     " exceeds trial-division bound " + std::to_string(bound));
        }
        if (n % q == 0) {
            int e = 0;
            while (n % q == 0) {
                n /= q;
                ++e;
            }
            f.emplace_back(q, e);
        }
    }
    if (n > 1) f.emplace_back(n, 1);
    return f;
}

inline std::vector<i64> divisors_of(const Factorization& f) {
    std::vector<i64> d{1};
    for (auto [q, e] : f) {
        std::size_t sz = d.size();
        i64 pw = 1;
        for (int k = 1; k <= e; ++k) {
            pw *= q;
            for (std::size_t i = 0; i < sz; ++i) d.push_back(d[i] * pw);
        }
    }
    std::sort(d.begin(), d.end());
    return d;
}

inline std::vector<i64> primes_up_to(i64 n) {
    std::vector<char> comp(static_cast<std::size_t>(std::max<i64>(n + 1, 2)), 0);
    std::vector<i64> out;
    for (i64 i = 2; i <= n; ++i) {
        if (comp[i]) continue;
        out.push_back(i);
        for (i64 j = i * i; j <= n; j += i) comp[j] = 1;
    }
    return out;
}

/**
 * Smallest-prime-factor table. Entries hold the smallest prime factor when it
 * is below sqrt(limit); zero marks a prime (or 1). 16-bit storage keeps the
 * table at two bytes per integer.
 */
class SpfSieve {
public:
    explicit SpfSieve(i64 limit) : limit_(limit), spf_(static_cast<std::size_t>(limit + 1), 0) {
        i64 r = static_cast<i64>(std::sqrt(static_cast<double>(limit))) + 1;
        if (r > 65535) throw std::invalid_argument("SpfSieve: limit too large");
        for (i64 i = 2; i <= r; ++i) {
            if (spf_[i] != 0) continue;
            for (i64 j = i * i; j <= limit; j += i) {
                if (spf_[j] == 0) spf_[j] = static_cast<std::uint16_t>(i);
            }
        }
    }

    i64 limit() const { return limit_; }

    Factorization factor(i64 n) const {
        n = n < 0 ? -n : n;
        if (n > limit_) return rsk::factor(n);
        Factorization f;
        while (n > 1) {
            i64 q = spf_[n] == 0 ? n : spf_[n];
            int e = 0;
            while (n % q == 0) {
                n /= q;
                ++e;
            }
            f.emplace_back(q, e);
        }
        return f;
    }

private:
    i64 limit_;
    std::vector<std::uint16_t> spf_;
};

using IntMatrix = std::vector<std::vector<i64>>;

struct SmithForm {
    std::vector<i64> diag;  ///< d_1 | d_2 | ... (zeros last)
    IntMatrix U;            ///< U * A * V = D
    IntMatrix V;
    IntMatrix Vinv;
};

inline IntMatrix identity_matrix(std::size_t n) {
    IntMatrix m(n, std::vector<i64>(n, 0));
    for (std::size_t i = 0; i < n; ++i) m[i][i] = 1;
    return m;
}

/// Smith normal form of a square matrix with unimodular transforms.
inline SmithForm smith_normal_form(IntMatrix A) {
    const std::size_t n = A.size();
    IntMatrix U = identity_matrix(n), V = identity_matrix(n), Vi = identity_matrix(n);
    auto row_op = [&](std::size_t i, std::size_t j, i64 a, i64 b, i64 c, i64 d) {
        // rows (i, j) <- (a*ri + b*rj, c*ri + d*rj), determinant ad - bc = +-1
        for (auto* M : {&A, &U}) {
            for (std::size_t k = 0; k < n; ++k) {
                i64 x = (*M)[i][k], y = (*M)[j][k];
                (*M)[i][k] = a * x + b * y;
                (*M)[j][k] = c * x + d * y;
            }
        }
    };
    auto col_op = [&](std::size_t i, std::size_t j, i64 a, i64 b, i64 c, i64 d) {
        // cols (i, j) <- (a*ci + b*cj, c*ci + d*cj)
        for (auto* M : {&A, &V}) {
            for (std::size_t k = 0; k < n; ++k) {
                i64 x = (*M)[k][i], y = (*M)[k][j];
                (*M)[k][i] = a * x + b * y;
                (*M)[k][j] = c * x + d * y;
            }
        }
        // inverse transform acts on rows of Vinv
        i64 det = a * d - b * c;
        i64 ia = d * det, ib = -b * det, ic = -c * det, id = a * det;
        for (std::size_t k = 0; k < n; ++k) {
            i64 x = Vi[i][k], y = Vi[j][k];
            Vi[i][k] = ia * x + ic * y;
            Vi[j][k] = ib * x + id * y;
        }
    };
    for (std::size_t t = 0; t < n; ++t) {
        for (;;) {
            // pivot: smallest nonzero |entry| in the trailing block
            std::size_t pi = n, pj = n;
            for (std::size_t i = t; i < n; ++i)
                for (std::size_t j = t; j < n; ++j)
                    if (A[i][j] != 0 && (pi == n || std::llabs(A[i][j]) < std::llabs(A[pi][pj]))) {
                        pi = i;
                        pj = j;
                    }
            if (pi == n) break;
            if (pi != t) row_op(t, pi, 0, 1, 1, 0);
            if (pj != t) col_op(t, pj, 0, 1, 1, 0);
            for (std::size_t i = t + 1; i < n; ++i) {
                if (A[i][t] == 0) continue;
                i64 x, y;
                i64 a = A[t][t], b = A[i][t];
                if (b % a == 0) {
                    row_op(t, i, 1, 0, -b / a, 1);
                } else {
                    i64 g = ext_gcd(a, b, x, y);
                    row_op(t, i, x, y, -b / g, a / g);
                }
            }
            for (std::size_t j = t + 1; j < n; ++j) {
                if (A[t][j] == 0) continue;
                i64 x, y;
                i64 a = A[t][t], b = A[t][j];
                if (b % a == 0) {
                    col_op(t, j, 1, 0, -b / a, 1);
                } else {
                    i64 g = ext_gcd(a, b, x, y);
                    col_op(t, j, x, y, -b / g, a / g);
                }
            }
            bool done = true;
            for (std::size_t i = t + 1; i < n; ++i) done = done && A[i][t] == 0;
            for (std::size_t j = t + 1; j < n; ++j) done = done && A[t][j] == 0;
            if (!done) continue;
            // divisibility condition on the trailing block
            std::size_t bi = n;
            for (std::size_t i = t + 1; i < n && bi == n; ++i)
                for (std::size_t j = t + 1; j < n; ++j)
                    if (A[i][j] % A[t][t] != 0) {
                        bi = i;
                        break;
                    }
            if (bi == n) break;
            row_op(t, bi, 1, 1, 0, 1);
        }
        if (A[t][t] < 0) {
            for (std::size_t k = 0; k < n; ++k) {
                A[t][k] = -A[t][k];
                U[t][k] = -U[t][k];
            }
        }
    }
    SmithForm s;
    for (std::size_t i = 0; i < n; ++i) s.diag.push_back(A[i][i]);
    s.U = std::move(U);
    s.V = std::move(V);
    s.Vinv = std::move(Vi);
    return s;
}

}  // namespace rsk
