#pragma once

/**
 * @file padic.hpp
 * @brief Fixed-precision p-adic numbers.
 *
 * A nonzero element is stored as p^v * u with u a unit known modulo
 * p^(N - v), where N is the absolute precision. An element whose known
 * digits are all zero is the zero of precision N (v == N). Precision is
 * propagated pessimistically through every operation.
 */

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "arith.hpp"

namespace rsk {

using BigInt = boost::multiprecision::cpp_int;

/// Default working precision in p-adic digits.
inline constexpr int kDefaultPrecision = 20;

inline const BigInt& pow_p(i64 p, int k) {
    static std::mutex mu;
    static std::map<std::pair<i64, int>, BigInt> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(p, k);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    BigInt r = 1;
    for (int i = 0; i < k; ++i) r *= p;
    return cache.emplace(key, std::move(r)).first->second;
}

inline BigInt bmod(const BigInt& a, const BigInt& m) {
    BigInt r = a % m;
    if (r < 0) r += m;
    return r;
}

inline BigInt binv(const BigInt& a, const BigInt& m) {
    BigInt r0 = m, r1 = bmod(a, m), s0 = 0, s1 = 1;
    while (r1 != 0) {
        BigInt q = r0 / r1;
        BigInt t = r0 - q * r1;
        r0 = r1;
        r1 = t;
        t = s0 - q * s1;
        s0 = s1;
        s1 = t;
    }
    if (r0 != 1) throw std::domain_error("binv: not invertible");
    return bmod(s0, m);
}

class Padic {
public:
    Padic() = default;

    /// The integer n at absolute precision prec.
    static Padic from_int(i64 p, const BigInt& n, int prec) {
        Padic x(p);
        x.set_raw(bmod(n, pow_p(p, prec)), 0, prec, n == 0);
        return x;
    }
    static Padic from_int(i64 p, i64 n, int prec) { return from_int(p, BigInt(n), prec); }

    /// num/den at relative-to-value precision: absolute precision prec + v(den).
    static Padic from_rational(i64 p, i64 num, i64 den, int prec) {
        if (den == 0) throw std::domain_error("Padic: zero denominator");
        int vd = vp(den, p);
        i64 d = strip(den, p);
        Padic a = from_int(p, num, prec);
        Padic b = from_int(p, d, prec);
        Padic r = a / b;
        r.val_ -= vd;
        r.prec_ -= vd;
        return r;
    }

    static Padic zero(i64 p, int prec) {
        Padic x(p);
        x.val_ = prec;
        x.prec_ = prec;
        x.unit_ = 0;
        return x;
    }

    static Padic one(i64 p, int prec) { return from_int(p, 1, prec); }

    i64 prime() const { return p_; }
    /// Absolute precision N: the value is known modulo p^N.
    int precision() const { return prec_; }
    /// Valuation; equals precision() for an indistinguishable-from-zero value.
    int valuation() const { return val_; }
    int relative_precision() const { return prec_ - val_; }
    bool is_zero() const { return unit_ == 0; }
    const BigInt& unit_part() const { return unit_; }

    /// Representative of the value modulo p^precision(); requires valuation >= 0.
    BigInt residue() const {
        if (is_zero()) return 0;
        if (val_ < 0) throw std::domain_error("Padic::residue: negative valuation");
        return bmod(unit_ * pow_p(p_, val_), pow_p(p_, prec_));
    }

    /// Same value at a lower absolute precision.
    Padic with_precision(int prec) const {
        if (prec >= prec_) return *this;
        if (is_zero() || val_ >= prec) return zero(p_, prec);
        Padic r(p_);
        r.val_ = val_;
        r.prec_ = prec;
        r.unit_ = bmod(unit_, pow_p(p_, prec - val_));
        return r;
    }

    Padic operator-() const {
        Padic r = *this;
        if (!is_zero()) r.unit_ = bmod(-unit_, pow_p(p_, prec_ - val_));
        return r;
    }

    friend Padic operator+(const Padic& a, const Padic& b) {
        check_same(a, b);
        int N = std::min(a.prec_, b.prec_);
        if (a.is_zero() && b.is_zero()) return zero(a.p_, N);
        if (a.is_zero()) return b.with_precision(N);
        if (b.is_zero()) return a.with_precision(N);
        int vm = std::min(a.val_, b.val_);
        if (N <= vm) return zero(a.p_, N);
        BigInt raw = a.unit_ * pow_p(a.p_, a.val_ - vm) + b.unit_ * pow_p(a.p_, b.val_ - vm);
        Padic r(a.p_);
        r.set_raw(bmod(raw, pow_p(a.p_, N - vm)), vm, N, false);
        return r;
    }
    friend Padic operator-(const Padic& a, const Padic& b) { return a + (-b); }

    friend Padic operator*(const Padic& a, const Padic& b) {
        check_same(a, b);
        int N = std::min(a.prec_ + b.val_, b.prec_ + a.val_);
        if (a.is_zero() || b.is_zero()) return zero(a.p_, N);
        Padic r(a.p_);
        r.val_ = a.val_ + b.val_;
        r.prec_ = N;
        r.unit_ = bmod(a.unit_ * b.unit_, pow_p(a.p_, N - r.val_));
        return r;
    }

    friend Padic operator/(const Padic& a, const Padic& b) {
        check_same(a, b);
        if (b.is_zero()) throw std::domain_error("Padic: division by an element indistinguishable from zero");
        if (a.is_zero()) return zero(a.p_, a.prec_ - b.val_);
        int rel = std::min(a.relative_precision(), b.relative_precision());
        Padic r(a.p_);
        r.val_ = a.val_ - b.val_;
        r.prec_ = r.val_ + rel;
        const BigInt& m = pow_p(a.p_, rel);
        r.unit_ = bmod(a.unit_ * binv(b.unit_, m), m);
        return r;
    }

    Padic& operator+=(const Padic& b) { return *this = *this + b; }
    Padic& operator-=(const Padic& b) { return *this = *this - b; }
    Padic& operator*=(const Padic& b) { return *this = *this * b; }
    Padic& operator/=(const Padic& b) { return *this = *this / b; }

    Padic inverse() const { return one(p_, relative_precision() + std::max(val_, 0)) / *this; }

    Padic pow(i64 e) const {
        if (e < 0) return inverse().pow(-e);
        Padic r = one(p_, prec_ - val_ + std::max(val_, 0));
        if (e == 0) return r;
        Padic b = *this;
        bool first = true;
        while (e > 0) {
            if (e & 1) {
                r = first ? b : r * b;
                first = false;
            }
            e >>= 1;
            if (e > 0) b = b * b;
        }
        return r;
    }

    Padic times(i64 k) const { return *this * from_int(p_, k, prec_ + 64); }

    /// Exact equality of known digits at the common precision.
    friend bool operator==(const Padic& a, const Padic& b) { return (a - b).is_zero(); }

    std::string to_string() const {
        if (is_zero()) return "O(" + std::to_string(p_) + "^" + std::to_string(prec_) + ")";
        std::string s = unit_.str();
        if (val_ != 0) s += "*" + std::to_string(p_) + "^" + std::to_string(val_);
        return s + " + O(" + std::to_string(p_) + "^" + std::to_string(prec_) + ")";
    }

    /// Rebuild from stored (unit digits, precision, valuation).
    static Padic from_parts(i64 p, const BigInt& unit, int prec, int val) {
        if (unit == 0) return zero(p, prec);
        Padic r(p);
        r.set_raw(bmod(unit, pow_p(p, prec - val)), val, prec, false);
        return r;
    }

private:
    explicit Padic(i64 p) : p_(p) {}

    static void check_same(const Padic& a, const Padic& b) {
        if (a.p_ != b.p_) throw std::invalid_argument("Padic: mismatched primes");
    }

    // raw is known modulo p^(N - shift); value = p^shift * raw
    void set_raw(BigInt raw, int shift, int N, bool exact_zero) {
        prec_ = N;
        if (exact_zero || raw == 0) {
            val_ = N;
            unit_ = 0;
            return;
        }
        int v = 0;
        while (raw % p_ == 0) {
            raw /= p_;
            ++v;
        }
        val_ = shift + v;
        if (val_ >= N) {
            val_ = N;
            unit_ = 0;
            return;
        }
        unit_ = bmod(raw, pow_p(p_, N - val_));
    }

    i64 p_ = 2;
    int val_ = 0;
    int prec_ = 0;
    BigInt unit_ = 0;
};

/**
 * Number of agreeing digits: the valuation of a - b, or its precision when
 * the difference is indistinguishable from zero.
 */
inline int agreement_digits(const Padic& a, const Padic& b) { return (a - b).valuation(); }

/// Teichmüller lift of u mod p^M: the (p-1)-th root of unity congruent to u.
inline Padic teichmuller(i64 p, i64 u, int M) {
    if (mod(u, p) == 0) throw std::domain_error("teichmuller: non-unit input");
    const BigInt& m = pow_p(p, M);
    BigInt x = bmod(BigInt(u), m);
    for (int i = 0; i < M; ++i) x = boost::multiprecision::powm(x, BigInt(p), m);
    return Padic::from_int(p, x, M);
}

/**
 * Iwasawa logarithm of x with x = 1 mod p, via the series
 * sum (-1)^(k+1) (x-1)^k / k. Terms are summed at the precision of x plus
 * guard digits so that the divisions by k lose nothing.
 */
inline Padic iwasawa_log(const Padic& x) {
    const i64 p = x.prime();
    const int N = x.precision();
    Padic y = x - Padic::one(p, N);
    if (!y.is_zero() && y.valuation() < 1) throw std::domain_error("iwasawa_log: argument not 1 mod p");
    if (y.is_zero() && y.precision() >= N) return Padic::zero(p, N);
    int vy = std::max(1, y.valuation());
    // terms with k*vy - v_p(k) >= N are negligible
    int K = 1;
    while (true) {
        bool ok = true;
        for (int k = K + 1; k <= K + 64; ++k) {
            if (static_cast<i64>(k) * vy - vp(k, p) < N) {
                ok = false;
                break;
            }
        }
        if (ok) break;
        ++K;
    }
    int guard = 0;
    for (i64 t = K; t >= p; t /= p) ++guard;
    Padic yy = y.with_precision(N);
    Padic sum = Padic::zero(p, N + guard);
    Padic pw = yy;
    for (int k = 1; k <= K; ++k) {
        Padic term = pw / Padic::from_int(p, k, N + guard);
        sum = (k % 2 == 1) ? sum + term : sum - term;
        pw = pw * yy;
    }
    return sum.with_precision(N);
}

/// Iwasawa logarithm of an arbitrary unit: log(u^(p-1))/(p-1).
inline Padic iwasawa_log_unit(const Padic& u) {
    if (u.valuation() != 0) throw std::domain_error("iwasawa_log_unit: non-unit");
    const i64 p = u.prime();
    return iwasawa_log(u.pow(p - 1)) / Padic::from_int(p, p - 1, u.precision());
}

/// p-adic exponential for arguments of valuation >= 1 (p odd).
inline Padic padic_exp(const Padic& z) {
    const i64 p = z.prime();
    const int N = z.precision();
    if (!z.is_zero() && z.valuation() < 1) throw std::domain_error("padic_exp: argument outside convergence disc");
    if (z.is_zero()) return Padic::one(p, N);
    int vz = z.valuation();
    int guard = 0;
    int K = 1;
    // v(z^k/k!) >= k*vz - (k-1)/(p-1)
    while (static_cast<i64>(K + 1) * vz - (K) / (p - 1) < N + 1) ++K;
    for (i64 t = K; t > 0; t /= p) guard += static_cast<int>(t / p);
    Padic sum = Padic::one(p, N + guard);
    Padic term = Padic::one(p, N + guard);
    for (int k = 1; k <= K; ++k) {
        term = term * z / Padic::from_int(p, k, N + guard);
        sum += term;
    }
    return sum.with_precision(N);
}

/**
 * The unit root of X^2 - a X + q for v(a) = 0 and v(q) >= 1, by Newton
 * iteration from the residue a mod p.
 */
inline Padic hensel_unit_root(i64 p, i64 a, i64 q, int M) {
    if (mod(a, p) == 0) throw std::domain_error("hensel_unit_root: non-ordinary input (p | a)");
    if (mod(q, p) != 0) throw std::domain_error("hensel_unit_root: expected p | q");
    const BigInt& m = pow_p(p, M);
    BigInt x = bmod(BigInt(a), m);
    BigInt A = a, Q = q;
    for (int it = 0; it < 2 * M + 4; ++it) {
        BigInt f = bmod(x * x - A * x + Q, m);
        if (f == 0) break;
        BigInt df = bmod(2 * x - A, m);
        x = bmod(x - f * binv(df, m), m);
    }
    return Padic::from_int(p, x, M);
}

/**
 * Truncated power series in s with p-adic coefficients; coefficient i of
 * s^i. Products truncate at the degree cap.
 */
class PadicPoly {
public:
    PadicPoly(std::vector<Padic> c, int cap) : c_(std::move(c)), cap_(cap) { c_.resize(cap_ + 1, c_.empty() ? Padic() : Padic::zero(c_[0].prime(), c_[0].precision())); }

    static PadicPoly constant(const Padic& x, int cap) {
        std::vector<Padic> c(cap + 1, Padic::zero(x.prime(), x.precision()));
        c[0] = x;
        return PadicPoly(std::move(c), cap);
    }

    /// u^s = exp(s log u) for u = 1 mod p, expanded to degree cap.
    static PadicPoly power_series(const Padic& u, int cap) {
        Padic L = iwasawa_log(u);
        std::vector<Padic> c;
        Padic term = Padic::one(u.prime(), u.precision());
        for (int k = 0; k <= cap; ++k) {
            if (k > 0) term = term * L / Padic::from_int(u.prime(), k, u.precision() + 8);
            c.push_back(term.with_precision(u.precision()));
        }
        return PadicPoly(std::move(c), cap);
    }

    const Padic& coeff(int i) const { return c_.at(i); }
    int cap() const { return cap_; }

    friend PadicPoly operator+(const PadicPoly& a, const PadicPoly& b) {
        std::vector<Padic> c;
        for (int i = 0; i <= a.cap_; ++i) c.push_back(a.c_[i] + b.c_[i]);
        return PadicPoly(std::move(c), a.cap_);
    }
    friend PadicPoly operator-(const PadicPoly& a, const PadicPoly& b) {
        std::vector<Padic> c;
        for (int i = 0; i <= a.cap_; ++i) c.push_back(a.c_[i] - b.c_[i]);
        return PadicPoly(std::move(c), a.cap_);
    }
    friend PadicPoly operator*(const PadicPoly& a, const PadicPoly& b) {
        std::vector<Padic> c(a.cap_ + 1, Padic::zero(a.c_[0].prime(), std::min(a.c_[0].precision(), b.c_[0].precision())));
        for (int i = 0; i <= a.cap_; ++i)
            for (int j = 0; i + j <= a.cap_; ++j) c[i + j] += a.c_[i] * b.c_[j];
        return PadicPoly(std::move(c), a.cap_);
    }
    /// Evaluate at s.
    Padic operator()(const Padic& s) const {
        Padic r = c_[cap_];
        for (int i = cap_ - 1; i >= 0; --i) r = r * s + c_[i];
        return r;
    }

private:
    std::vector<Padic> c_;
    int cap_;
};

/// Result of a finite-difference derivative with its certified precision.
struct DerivativeEstimate {
    Padic value;
    int certified_digits;  ///< absolute p-adic digits guaranteed correct
    int interpolation_loss;
};

/**
 * Derivative at s = 0 of the interpolating polynomial through the samples.
 *
 * The certified precision is the smaller of (a) the sample precision minus
 * the valuation loss of the Lagrange weights and (b) a truncation bound for
 * functions of the form sum c_j u_j^s with u_j = 1 mod p, whose Taylor
 * coefficients have valuation >= k (p-2)/(p-1). When the samples do not
 * include s = 0 the value at 0 is part of the interpolation.
 */
inline DerivativeEstimate finite_difference_deriv(const std::vector<std::pair<Padic, Padic>>& samples) {
    if (samples.empty()) throw std::invalid_argument("finite_difference_deriv: no samples");
    const i64 p = samples[0].first.prime();
    const std::size_t n = samples.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!samples[i].first.is_zero() && samples[i].first.valuation() < 1)
            throw std::invalid_argument("finite_difference_deriv: sample point not divisible by p");
        for (std::size_t j = 0; j < i; ++j)
            if ((samples[i].first - samples[j].first).is_zero())
                throw std::invalid_argument("finite_difference_deriv: repeated sample point");
    }
    if (n == 1) {
        int prec = samples[0].second.precision();
        return {Padic::zero(p, prec), prec, 0};
    }
    // Lagrange basis derivative at 0: L_i'(0) = sum_{k != i} prod_{j != i,k} (0 - s_j) / prod_{j != i} (s_i - s_j)
    int sample_prec = samples[0].second.precision();
    for (auto& s : samples) sample_prec = std::min(sample_prec, s.second.precision());
    int work = sample_prec + 40;
    std::vector<Padic> s;
    // nodes are exact points chosen by the caller: lift their representatives
    for (auto& x : samples) {
        if (x.first.is_zero()) s.push_back(Padic::zero(p, work));
        else if (x.first.valuation() >= 0) s.push_back(Padic::from_int(p, x.first.residue(), work));
        else s.push_back(x.first);
    }
    Padic total = Padic::zero(p, work);
    int min_weight_val = 1 << 20;
    for (std::size_t i = 0; i < n; ++i) {
        Padic denom = Padic::one(p, work);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) denom *= (s[i] - s[j]);
        Padic numer = Padic::zero(p, work);
        for (std::size_t k = 0; k < n; ++k) {
            if (k == i) continue;
            Padic prod = Padic::one(p, work);
            for (std::size_t j = 0; j < n; ++j)
                if (j != i && j != k) prod *= -s[j];
            numer += prod;
        }
        if (numer.is_zero()) continue;
        Padic w = numer / denom;
        min_weight_val = std::min(min_weight_val, w.valuation());
        total += w * samples[i].second;
    }
    int loss = min_weight_val < 0 ? -min_weight_val : 0;
    int cert = sample_prec - loss;
    // Truncation: the s^k Taylor term (k > n-1) contributes a_k * sum_i L_i'(0) s_i^k,
    // with v(a_k) >= k(p-2)/(p-1) and v(s_i^k) >= k * vmin.
    int vmin = 1 << 20;
    for (auto& x : s)
        if (!x.is_zero()) vmin = std::min(vmin, x.valuation());
    double trunc = 1e18;
    for (std::size_t k = n; k <= n + 64; ++k) {
        double kk = static_cast<double>(k);
        trunc = std::min(trunc, kk * static_cast<double>(p - 2) / static_cast<double>(p - 1) + kk * vmin - loss);
    }
    cert = std::min(cert, static_cast<int>(std::floor(trunc)));
    return {total.with_precision(cert), cert, loss};
}

}  // namespace rsk
