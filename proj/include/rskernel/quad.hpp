#pragma once

/**
 * @file quad.hpp
 * @brief Quadratic orders Z[w] with w^2 = t*w - n, their ideals as
 * two-dimensional lattices in Hermite normal form, and reduced binary
 * quadratic forms of negative discriminant.
 */

#include <map>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "arith.hpp"

namespace rsk {

/// Element x + y*w of a quadratic order.
struct QElem {
    i64 x = 0;
    i64 y = 0;
    friend bool operator==(const QElem&, const QElem&) = default;
};

/// Z[w] with minimal polynomial X^2 - t X + n.
struct QuadOrder {
    i64 t = 1;
    i64 n = 0;

    /// Maximal order of Q(sqrt(d)) for squarefree d.
    static QuadOrder maximal(i64 d) {
        if (mod(d, 4) == 1) return {1, (1 - d) / 4};
        return {0, -d};
    }

    i64 discriminant() const { return t * t - 4 * n; }

    QElem add(QElem a, QElem b) const { return {a.x + b.x, a.y + b.y}; }
    QElem sub(QElem a, QElem b) const { return {a.x - b.x, a.y - b.y}; }
    QElem mul(QElem a, QElem b) const {
        // w^2 = t w - n
        i64 yy = a.y * b.y;
        return {a.x * b.x - n * yy, a.x * b.y + a.y * b.x + t * yy};
    }
    QElem conj(QElem a) const { return {a.x + t * a.y, -a.y}; }
    i64 norm(QElem a) const { return a.x * a.x + t * a.x * a.y + n * a.y * a.y; }
    i64 trace(QElem a) const { return 2 * a.x + t * a.y; }
    /// Polar form of the norm: norm(a+b) - norm(a) - norm(b).
    i64 polar(QElem a, QElem b) const { return 2 * a.x * b.x + t * (a.x * b.y + a.y * b.x) + 2 * n * a.y * b.y; }

    /// Residue of a modulo an ideal of the form (m, w - r) with r^2 - t r + n = 0 mod m.
    i64 reduce_at(QElem a, i64 r, i64 m) const { return mod(mod(a.x, m) + mulmod(mod(a.y, m), mod(r, m), m), m); }
};

/**
 * Ideal lattice with Z-basis {A, B + C w}: A, C > 0, 0 <= B < A.
 * Norm (index in the order) is A * C.
 */
struct QIdeal {
    i64 A = 1;
    i64 B = 0;
    i64 C = 1;
    i64 norm() const { return A * C; }
    friend bool operator==(const QIdeal&, const QIdeal&) = default;
    friend bool operator<(const QIdeal& a, const QIdeal& b) {
        return std::tie(a.A, a.B, a.C) < std::tie(b.A, b.B, b.C);
    }
};

/// Hermite normal form of the lattice spanned by the given vectors.
inline QIdeal hnf_from_generators(const std::vector<QElem>& gens) {
    i64 A = 0, B = 0, C = 0;
    for (QElem v : gens) {
        i64 x = v.x, y = v.y;
        if (y != 0) {
            if (C == 0) {
                B = x;
                C = y;
                if (C < 0) {
                    B = -B;
                    C = -C;
                }
            } else {
                i64 u, w;
                i64 g = ext_gcd(C, y, u, w);
                if (g < 0) {
                    g = -g;
                    u = -u;
                    w = -w;
                }
                i64 nb = u * B + w * x;
                i64 ex = (y / g) * B - (C / g) * x;  // y-coordinate cancels
                B = nb;
                C = g;
                A = std::gcd(A, ex < 0 ? -ex : ex);
            }
        } else {
            A = std::gcd(A, x < 0 ? -x : x);
        }
        if (A != 0) B = mod(B, A);
    }
    if (A == 0 || C == 0) throw std::invalid_argument("hnf_from_generators: lattice not of full rank");
    return {A, mod(B, A), C};
}

inline std::vector<QElem> ideal_basis(const QIdeal& I) { return {{I.A, 0}, {I.B, I.C}}; }

inline QIdeal ideal_mul(const QuadOrder& O, const QIdeal& I, const QIdeal& J) {
    std::vector<QElem> g;
    for (QElem a : ideal_basis(I))
        for (QElem b : ideal_basis(J)) g.push_back(O.mul(a, b));
    return hnf_from_generators(g);
}

inline QIdeal ideal_conj(const QuadOrder& O, const QIdeal& I) {
    return hnf_from_generators({O.conj({I.A, 0}), O.conj({I.B, I.C})});
}

inline QIdeal principal_ideal(const QuadOrder& O, QElem a) {
    return hnf_from_generators({a, O.mul(a, {0, 1})});
}

/// Membership test for an element in an ideal lattice.
inline bool ideal_contains(const QIdeal& I, QElem a) {
    if (a.y % I.C != 0) return false;
    i64 k = a.y / I.C;
    return mod(a.x - k * I.B, I.A) == 0;
}

/// Prime ideal (l, w - r) for a root r of the minimal polynomial mod l.
inline QIdeal prime_ideal_above(i64 l, i64 r) { return {l, mod(-r, l), 1}; }

/**
 * Shortest vector of a lattice under a positive definite norm form, by
 * Lagrange-Gauss reduction.
 */
inline std::pair<QElem, QElem> gauss_reduce(const QuadOrder& O, QElem u, QElem v) {
    if (O.discriminant() >= 0) throw std::domain_error("gauss_reduce: indefinite norm form");
    while (true) {
        if (O.norm(v) < O.norm(u)) std::swap(u, v);
        i64 nu = O.norm(u);
        i64 b = O.polar(u, v);
        // nearest integer to b / (2 nu)
        i64 m = static_cast<i64>(std::floor(static_cast<long double>(b) / (2.0L * nu) + 0.5L));
        if (m == 0) break;
        v = {v.x - m * u.x, v.y - m * u.y};
        if (O.norm(v) >= nu) break;
    }
    if (O.norm(v) < O.norm(u)) std::swap(u, v);
    return {u, v};
}

/// A generator when the ideal is principal (definite case).
inline bool principal_generator(const QuadOrder& O, const QIdeal& I, QElem& gen) {
    auto [u, v] = gauss_reduce(O, {I.A, 0}, {I.B, I.C});
    if (O.norm(u) == I.norm()) {
        gen = u;
        return true;
    }
    return false;
}

/// Units of an imaginary quadratic maximal order.
inline std::vector<QElem> unit_group(const QuadOrder& O) {
    std::vector<QElem> out;
    i64 D = O.discriminant();
    i64 lim = D == -3 ? 2 : 1;
    for (i64 y = -lim; y <= lim; ++y)
        for (i64 x = -2; x <= 2; ++x)
            if (O.norm({x, y}) == 1) out.push_back({x, y});
    return out;
}

/// Primitive positive definite binary quadratic form a x^2 + b x y + c y^2.
struct QForm {
    i64 a, b, c;
    friend bool operator==(const QForm&, const QForm&) = default;
    friend bool operator<(const QForm& x, const QForm& y) { return std::tie(x.a, x.b, x.c) < std::tie(y.a, y.b, y.c); }
};

inline QForm reduce_form(QForm f) {
    auto normalize = [](QForm g) {
        // bring b into (-a, a]
        i64 two_a = 2 * g.a;
        i64 s = (g.a - g.b) >= 0 ? (g.a - g.b) / two_a : -((g.b - g.a + two_a - 1) / two_a);
        i64 nb = g.b + two_a * s;
        i64 nc = (nb * nb - (g.b * g.b - 4 * g.a * g.c)) / (4 * g.a);
        return QForm{g.a, nb, nc};
    };
    f = normalize(f);
    while (f.a > f.c || (f.a == f.c && f.b < 0)) {
        f = normalize(QForm{f.c, -f.b, f.a});
    }
    return f;
}

/// All reduced forms of discriminant D < 0 (the class group as a set).
inline std::vector<QForm> reduced_forms(i64 D) {
    std::vector<QForm> out;
    for (i64 a = 1; 3 * a * a <= -D; ++a) {
        for (i64 b = -a + 1; b <= a; ++b) {
            i64 num = b * b - D;
            if (num % (4 * a) != 0) continue;
            i64 c = num / (4 * a);
            if (c < a) continue;
            if (a == c && b < 0) continue;
            if (std::gcd(std::gcd(a, b < 0 ? -b : b), c) != 1) continue;
            out.push_back({a, b, c});
        }
    }
    return out;
}

/**
 * Reduced form attached to the class of an ideal of an imaginary quadratic
 * maximal order Z[w], w^2 = t w - n.
 */
inline QForm ideal_form(const QuadOrder& O, const QIdeal& I) {
    // primitive part: I / C = {A/C, B/C + w}
    i64 a = I.A / I.C;
    i64 s = I.B / I.C;  // basis element s + w
    // N(x a + y (s + w)) / a = a x^2 + (2s + t) x y + N(s + w)/a y^2
    i64 b = 2 * s + O.t;
    i64 nsw = O.norm({s, 1});
    if (nsw % a != 0) throw std::logic_error("ideal_form: not an ideal lattice");
    return reduce_form({a, b, nsw / a});
}

}  // namespace rsk
