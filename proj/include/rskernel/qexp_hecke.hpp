#pragma once

/**
 * @file qexp_hecke.hpp
 * @brief Truncated q-expansions over F = Q (coefficient tables indexed by
 * n = 1..B), the operators [m], T(m), U(m), traces and twists, newform
 * records with their consistency checks, p-stabilization, and the
 * eigen-coordinate functional l_{f_alpha} with the ordinary projector.
 */

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "arith.hpp"
#include "cyclo.hpp"
#include "padic.hpp"

namespace rsk {

inline i64 scale(i64 v, i64 k) { return v * k; }
inline CycloValue scale(const CycloValue& v, i64 k) { return v.times(k); }
inline Padic scale(const Padic& v, i64 k) { return v.times(k); }

inline bool value_is_zero(i64 v) { return v == 0; }
inline bool value_is_zero(const CycloValue& v) { return v.is_zero(); }
inline bool value_is_zero(const Padic& v) { return v.is_zero(); }

/**
 * Coefficients a(1..bound) of a truncated q-expansion. Index 0 is unused.
 * The zero element fixes the value ring (conductor or p and precision).
 */
template <class V>
struct CoeffTable {
    i64 bound = 0;
    int weight = 2;
    i64 level = 1;
    V zero{};
    std::vector<V> a;

    static CoeffTable filled(i64 bound, const V& zero, int weight = 2, i64 level = 1) {
        CoeffTable t;
        t.bound = bound;
        t.weight = weight;
        t.level = level;
        t.zero = zero;
        t.a.assign(static_cast<std::size_t>(bound + 1), zero);
        return t;
    }

    const V& operator[](i64 n) const {
        if (n < 1 || n > bound) throw std::out_of_range("CoeffTable: index " + std::to_string(n) + " outside 1.." + std::to_string(bound));
        return a[static_cast<std::size_t>(n)];
    }
    V& operator[](i64 n) {
        if (n < 1 || n > bound) throw std::out_of_range("CoeffTable: index " + std::to_string(n) + " outside 1.." + std::to_string(bound));
        return a[static_cast<std::size_t>(n)];
    }

    /// Same table restricted to n <= b.
    CoeffTable truncated(i64 b) const {
        if (b > bound) throw std::out_of_range("CoeffTable::truncated: bound exceeds table");
        CoeffTable t = *this;
        t.bound = b;
        t.a.resize(static_cast<std::size_t>(b + 1));
        return t;
    }

    template <class F>
    auto map(F&& f) const {
        using W = decltype(f(a[1]));
        CoeffTable<W> t;
        t.bound = bound;
        t.weight = weight;
        t.level = level;
        t.zero = f(zero);
        t.a.reserve(a.size());
        for (const V& x : a) t.a.push_back(f(x));
        return t;
    }
};

template <class V>
CoeffTable<V> operator+(const CoeffTable<V>& x, const CoeffTable<V>& y) {
    i64 b = std::min(x.bound, y.bound);
    CoeffTable<V> t = x.truncated(b);
    for (i64 n = 1; n <= b; ++n) t[n] = t[n] + y[n];
    return t;
}

template <class V>
CoeffTable<V> operator-(const CoeffTable<V>& x, const CoeffTable<V>& y) {
    i64 b = std::min(x.bound, y.bound);
    CoeffTable<V> t = x.truncated(b);
    for (i64 n = 1; n <= b; ++n) t[n] = t[n] - y[n];
    return t;
}

template <class V>
CoeffTable<V> operator*(const V& c, const CoeffTable<V>& x) {
    CoeffTable<V> t = x;
    for (i64 n = 1; n <= x.bound; ++n) t[n] = c * x[n];
    return t;
}

/// [m]: a([m]g, n) = a(g, n/m), zero when m does not divide n.
template <class V>
CoeffTable<V> op_shift(i64 m, const CoeffTable<V>& g) {
    if (m < 1) throw std::invalid_argument("op_shift: m must be positive");
    CoeffTable<V> t = CoeffTable<V>::filled(g.bound, g.zero, g.weight, g.level);
    for (i64 n = m; n <= g.bound; n += m) t[n] = g[n / m];
    return t;
}

/// a(T(m)g, n) = sum_{d | (m,n)} d^{k-1} a(g, m n / d^2), m prime to the level.
template <class V>
CoeffTable<V> op_T(i64 m, const CoeffTable<V>& g) {
    if (m < 1) throw std::invalid_argument("op_T: m must be positive");
    if (std::gcd(m, g.level) != 1) throw std::invalid_argument("op_T: m not coprime to the level");
    i64 b = g.bound / m;
    CoeffTable<V> t = CoeffTable<V>::filled(b, g.zero, g.weight, g.level);
    for (i64 n = 1; n <= b; ++n) {
        V s = g.zero;
        i64 c = std::gcd(m, n);
        for (i64 d = 1; d <= c; ++d) {
            if (c % d != 0) continue;
            s = s + scale(g[m * n / (d * d)], ipow(d, g.weight - 1));
        }
        t[n] = s;
    }
    return t;
}

/// a(U(m)g, n) = m^{k/2-1} a(g, m n); the power is 1 in weight 2.
template <class V>
CoeffTable<V> op_U(i64 m, const CoeffTable<V>& g) {
    if (m < 1) throw std::invalid_argument("op_U: m must be positive");
    if (g.weight % 2 != 0) throw std::invalid_argument("op_U: odd weight needs a square root of N(m)");
    i64 b = g.bound / m;
    i64 c = ipow(m, g.weight / 2 - 1);
    CoeffTable<V> t = CoeffTable<V>::filled(b, g.zero, g.weight, g.level);
    for (i64 n = 1; n <= b; ++n) t[n] = c == 1 ? g[m * n] : scale(g[m * n], c);
    return t;
}

/// a(Tr_D f, m) = sum_{delta | D} a(f^{(delta)}, m delta) from the twisted pieces.
template <class V>
CoeffTable<V> op_trace_coeffs(i64 D, const std::map<i64, CoeffTable<V>>& pieces) {
    auto divs = divisors_of(factor(D));
    i64 b = -1;
    for (i64 d : divs) {
        auto it = pieces.find(d);
        if (it == pieces.end()) throw std::invalid_argument("op_trace_coeffs: missing piece for delta = " + std::to_string(d));
        i64 bd = it->second.bound / d;
        b = b < 0 ? bd : std::min(b, bd);
    }
    const CoeffTable<V>& first = pieces.at(1);
    CoeffTable<V> t = CoeffTable<V>::filled(b, first.zero, first.weight, first.level);
    for (i64 m = 1; m <= b; ++m) {
        V s = first.zero;
        for (i64 d : divs) s = s + pieces.at(d)[m * d];
        t[m] = s;
    }
    return t;
}

/// a(g|chi, n) = chi(n) a(g, n).
template <class V, class Chi>
CoeffTable<V> twist(const CoeffTable<V>& g, Chi&& chi) {
    CoeffTable<V> t = g;
    for (i64 n = 1; n <= g.bound; ++n) t[n] = chi(n) * g[n];
    return t;
}

/// Integer twist (a quadratic character or any Z-valued function).
template <class V>
CoeffTable<V> twist_integer(const CoeffTable<V>& g, const std::function<i64(i64)>& chi) {
    CoeffTable<V> t = g;
    for (i64 n = 1; n <= g.bound; ++n) t[n] = scale(g[n], chi(n));
    return t;
}

// ---------------------------------------------------------------------------
// Newforms

/// Weierstrass coefficients [a1, a2, a3, a4, a6].
using CurveModel = std::array<i64, 5>;

/// l + 1 - #E(F_l) for the reduction of the model mod l, counted x by x.
inline i64 curve_trace(const CurveModel& c, i64 l) {
    auto [a1, a2, a3, a4, a6] = c;
    i64 count = 1;  // point at infinity
    for (i64 x = 0; x < l; ++x) {
        // y^2 + b y = rhs with b = a1 x + a3, rhs = x^3 + a2 x^2 + a4 x + a6
        i64 b = mod(a1 * x + a3, l);
        i64 x2 = mulmod(x, x, l);
        i64 rhs = mod(mulmod(x2, x, l) + mulmod(mod(a2, l), x2, l) + mulmod(mod(a4, l), x, l) + a6, l);
        if (l == 2) {
            for (i64 y = 0; y < 2; ++y)
                if (mod(y * y + b * y - rhs, 2) == 0) ++count;
        } else {
            count += 1 + legendre(mod(b * b + 4 * rhs, l), l);
        }
    }
    return l + 1 - count;
}

struct NewformRecord {
    std::string label;
    i64 level = 1;
    int weight = 2;
    std::vector<i64> a;  ///< a[1..bound], a[0] unused
    std::optional<CurveModel> curve;

    i64 bound() const { return static_cast<i64>(a.size()) - 1; }
    i64 coeff(i64 n) const {
        if (n < 1 || n > bound()) throw std::out_of_range("NewformRecord: index beyond table");
        return a[static_cast<std::size_t>(n)];
    }

    bool ordinary_at(i64 p) const { return level % p != 0 && mod(coeff(p), p) != 0; }

    CoeffTable<i64> table() const {
        CoeffTable<i64> t = CoeffTable<i64>::filled(bound(), 0, weight, level);
        for (i64 n = 1; n <= bound(); ++n) t[n] = coeff(n);
        return t;
    }

    /**
     * Throws std::invalid_argument on the first violated identity: a(1) = 1,
     * multiplicativity on coprime indices, the Hecke recursion at good
     * primes, a(l^k) = a(l)^k at bad primes, the Hasse bound, and, when the
     * curve model is present, a(l) = l + 1 - #E(F_l) at good primes.
     */
    void validate() const {
        i64 B = bound();
        if (B < 1 || coeff(1) != 1) throw std::invalid_argument(label + ": a(1) must be 1");
        SpfSieve sv(std::max<i64>(B, 2));
        for (i64 n = 2; n <= B; ++n) {
            Factorization f = sv.factor(n);
            if (f.size() > 1) {
                i64 q = ipow(f[0].first, f[0].second);
                if (coeff(n) != coeff(q) * coeff(n / q))
                    throw std::invalid_argument(label + ": not multiplicative at n = " + std::to_string(n));
                continue;
            }
            auto [l, e] = f[0];
            if (e == 1) {
                if (level % l != 0 && static_cast<double>(coeff(l) * coeff(l)) > 4.0 * static_cast<double>(l))
                    throw std::invalid_argument(label + ": Hasse bound violated at " + std::to_string(l));
                if (curve && level % l != 0 && curve_trace(*curve, l) != coeff(l))
                    throw std::invalid_argument(label + ": a(" + std::to_string(l) + ") disagrees with the curve point count");
                continue;
            }
            i64 expect = level % l == 0 ? coeff(l) * coeff(n / l)
                                        : coeff(l) * coeff(n / l) - l * coeff(n / (l * l));
            if (coeff(n) != expect) throw std::invalid_argument(label + ": Hecke recursion fails at n = " + std::to_string(n));
        }
    }
};

/// Unit root alpha and the other root beta of X^2 - a(p) X + p.
struct StabilizationRoots {
    Padic alpha;
    Padic beta;
};

inline StabilizationRoots stabilization_roots(const NewformRecord& f, i64 p, int prec) {
    if (!f.ordinary_at(p)) throw std::domain_error(f.label + " is not ordinary at p = " + std::to_string(p));
    Padic alpha = hensel_unit_root(p, f.coeff(p), p, prec);
    Padic beta = Padic::from_int(p, f.coeff(p), prec) - alpha;
    return {alpha, beta};
}

/// a(f_alpha, n) = a(f, n) - beta a(f, n/p).
inline CoeffTable<Padic> p_stabilize(const NewformRecord& f, i64 p, const Padic& beta) {
    int prec = beta.precision();
    CoeffTable<Padic> t = CoeffTable<Padic>::filled(f.bound(), Padic::zero(p, prec), f.weight, f.level * p);
    for (i64 n = 1; n <= f.bound(); ++n) {
        Padic v = Padic::from_int(p, f.coeff(n), prec);
        if (n % p == 0) v -= beta * Padic::from_int(p, f.coeff(n / p), prec);
        t[n] = v;
    }
    return t;
}

inline CoeffTable<Padic> to_padic(const CoeffTable<i64>& g, i64 p, int prec) {
    return g.map([&](i64 x) { return Padic::from_int(p, x, prec); });
}

// ---------------------------------------------------------------------------
// Eigen-coordinates

struct NotInSpan : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/**
 * Span of U_p-eigenforms with known eigenvalues. Coordinates of a table
 * are solved on the first rows (in increasing n) that raise the rank, and
 * the solution is checked against every row up to the solve bound.
 */
class EigenSpan {
public:
    EigenSpan(std::vector<CoeffTable<Padic>> basis, std::vector<Padic> eigenvalues, i64 solve_bound, int tolerance = 2)
        : basis_(std::move(basis)), eig_(std::move(eigenvalues)), bound_(solve_bound), tol_(tolerance) {
        if (basis_.empty() || basis_.size() != eig_.size()) throw std::invalid_argument("EigenSpan: basis/eigenvalue mismatch");
        for (auto& b : basis_) bound_ = std::min(bound_, b.bound);
        choose_rows();
    }

    /// Span {f_alpha, f_beta} of the two p-stabilizations of f.
    static EigenSpan stabilizations(const NewformRecord& f, i64 p, int prec, i64 solve_bound) {
        auto [alpha, beta] = stabilization_roots(f, p, prec);
        return EigenSpan({p_stabilize(f, p, beta), p_stabilize(f, p, alpha)}, {alpha, beta}, solve_bound);
    }

    std::size_t dimension() const { return basis_.size(); }
    const std::vector<CoeffTable<Padic>>& basis() const { return basis_; }
    const std::vector<Padic>& eigenvalues() const { return eig_; }
    const std::vector<i64>& pivot_rows() const { return rows_; }
    i64 solve_bound() const { return bound_; }
    int precision() const { return basis_[0].zero.precision(); }

    /// Coordinates of g; throws NotInSpan when the residual exceeds tolerance.
    std::vector<Padic> coordinates(const CoeffTable<Padic>& g) const {
        const std::size_t r = basis_.size();
        std::vector<std::vector<Padic>> M(r, std::vector<Padic>(r + 1, basis_[0].zero));
        for (std::size_t i = 0; i < r; ++i) {
            if (rows_[i] > g.bound) throw NotInSpan("EigenSpan: table too short for the pivot rows");
            for (std::size_t j = 0; j < r; ++j) M[i][j] = basis_[j][rows_[i]];
            M[i][r] = g[rows_[i]];
        }
        std::vector<Padic> x = solve(M);
        int prec = precision();
        i64 top = std::min(bound_, g.bound);
        for (i64 n = 1; n <= top; ++n) {
            Padic s = g.zero;
            for (std::size_t j = 0; j < r; ++j) s += x[j] * basis_[j][n];
            Padic res = s - g[n];
            if (!res.is_zero() && res.valuation() < prec - tol_)
                throw NotInSpan("EigenSpan: residual at n = " + std::to_string(n) + " has valuation " + std::to_string(res.valuation()));
        }
        return x;
    }

    /// The coordinate on basis()[0] (f_alpha), normalized so that l(f_alpha) = 1.
    Padic l_f_alpha(const CoeffTable<Padic>& g) const { return coordinates(g)[0]; }

    /// Component of g along the basis vectors with unit eigenvalues.
    CoeffTable<Padic> ordinary_project(const CoeffTable<Padic>& g) const {
        std::vector<Padic> x = coordinates(g);
        CoeffTable<Padic> out = CoeffTable<Padic>::filled(bound_, g.zero, g.weight, g.level);
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (eig_[j].valuation() != 0) continue;
            for (i64 n = 1; n <= bound_; ++n) out[n] += x[j] * basis_[j][n];
        }
        return out;
    }

    /// Coordinates of U^{k!} g, for comparing the projector with its defining limit.
    std::vector<Padic> iterate_u_factorial(const CoeffTable<Padic>& g, int k) const {
        std::vector<Padic> x = coordinates(g);
        i64 e = 1;
        for (int i = 2; i <= k; ++i) e *= i;
        for (std::size_t j = 0; j < x.size(); ++j) x[j] *= eig_[j].pow(e);
        return x;
    }

private:
    void choose_rows() {
        const std::size_t r = basis_.size();
        std::vector<std::vector<Padic>> echelon;
        for (i64 n = 1; n <= bound_ && rows_.size() < r; ++n) {
            std::vector<Padic> v;
            for (std::size_t j = 0; j < r; ++j) v.push_back(basis_[j][n]);
            std::vector<std::vector<Padic>> trial = echelon;
            trial.push_back(v);
            if (rank(trial) > echelon.size()) {
                echelon = trial;
                rows_.push_back(n);
            }
        }
        if (rows_.size() < r) throw NotInSpan("EigenSpan: basis is linearly dependent up to the solve bound");
    }

    /// Rank over Q_p by elimination, treating entries below precision - tol as zero.
    std::size_t rank(std::vector<std::vector<Padic>> A) const {
        std::size_t rk = 0, cols = A.empty() ? 0 : A[0].size();
        int cut = precision() - tol_;
        for (std::size_t c = 0; c < cols && rk < A.size(); ++c) {
            std::size_t piv = A.size();
            int best = 1 << 20;
            for (std::size_t i = rk; i < A.size(); ++i)
                if (!A[i][c].is_zero() && A[i][c].valuation() < cut && A[i][c].valuation() < best) {
                    best = A[i][c].valuation();
                    piv = i;
                }
            if (piv == A.size()) continue;
            std::swap(A[rk], A[piv]);
            for (std::size_t i = rk + 1; i < A.size(); ++i) {
                if (A[i][c].is_zero()) continue;
                Padic f = A[i][c] / A[rk][c];
                for (std::size_t j = c; j < cols; ++j) A[i][j] -= f * A[rk][j];
            }
            ++rk;
        }
        return rk;
    }

    /// Gaussian elimination with minimal-valuation pivots on an r x (r+1) system.
    static std::vector<Padic> solve(std::vector<std::vector<Padic>> M) {
        const std::size_t r = M.size();
        for (std::size_t c = 0; c < r; ++c) {
            std::size_t piv = r;
            int best = 1 << 20;
            for (std::size_t i = c; i < r; ++i)
                if (!M[i][c].is_zero() && M[i][c].valuation() < best) {
                    best = M[i][c].valuation();
                    piv = i;
                }
            if (piv == r) throw NotInSpan("EigenSpan: singular system");
            std::swap(M[c], M[piv]);
            for (std::size_t i = 0; i < r; ++i) {
                if (i == c || M[i][c].is_zero()) continue;
                Padic f = M[i][c] / M[c][c];
                for (std::size_t j = c; j <= r; ++j) M[i][j] -= f * M[c][j];
            }
        }
        std::vector<Padic> x;
        for (std::size_t i = 0; i < r; ++i) x.push_back(M[i][r] / M[i][i]);
        return x;
    }

    std::vector<CoeffTable<Padic>> basis_;
    std::vector<Padic> eig_;
    i64 bound_;
    int tol_;
    std::vector<i64> rows_;
};

/// l(f) = (1 - p / alpha^2)^{-1}, the value predicted for the newform itself.
inline Padic l_of_newform_closed(const Padic& alpha, i64 p) {
    Padic one = Padic::one(p, alpha.precision());
    return (one - Padic::from_int(p, p, alpha.precision()) / (alpha * alpha)).inverse();
}

}  // namespace rsk
