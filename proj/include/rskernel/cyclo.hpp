#pragma once

/**
 * @file cyclo.hpp
 * @brief Exact arithmetic in cyclotomic integer rings Z[zeta_n].
 *
 * Elements carry a conductor n and a length-n coefficient vector on the
 * redundant spanning set 1, zeta, ..., zeta^(n-1). Operands with different
 * conductors are lifted to the lcm. Equality reduces modulo the n-th
 * cyclotomic polynomial.
 */

#include <complex>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "arith.hpp"

namespace rsk {

/// Coefficients of the n-th cyclotomic polynomial, lowest degree first.
inline const std::vector<i64>& cyclotomic_polynomial(i64 n) {
    static std::mutex mu;
    static std::map<i64, std::vector<i64>> cache;
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(n);
        if (it != cache.end()) return it->second;
    }
    // x^n - 1 divided by Phi_d for every proper divisor d
    std::vector<i64> num(static_cast<std::size_t>(n + 1), 0);
    num[0] = -1;
    num[n] = 1;
    for (i64 d = 1; d < n; ++d) {
        if (n % d != 0) continue;
        const std::vector<i64>& den = cyclotomic_polynomial(d);
        std::size_t dn = num.size() - 1, dd = den.size() - 1;
        std::vector<i64> q(dn - dd + 1, 0);
        for (std::size_t i = dn + 1; i-- > dd;) {
            i64 c = num[i];
            q[i - dd] = c;
            if (c == 0) continue;
            for (std::size_t j = 0; j <= dd; ++j) num[i - dd + j] -= c * den[j];
        }
        num = q;
    }
    std::lock_guard<std::mutex> lock(mu);
    return cache.emplace(n, std::move(num)).first->second;
}

inline i64 euler_phi(i64 n) {
    i64 r = n;
    for (auto [q, e] : factor(n)) r = r / q * (q - 1);
    return r;
}

class CycloValue {
public:
    CycloValue() : n_(1), c_(1, 0) {}
    explicit CycloValue(i64 value, i64 conductor = 1) : n_(conductor), c_(static_cast<std::size_t>(conductor), 0) {
        if (conductor < 1) throw std::invalid_argument("CycloValue: conductor must be positive");
        c_[0] = value;
    }

    /// c * zeta_n^k.
    static CycloValue zeta(i64 n, i64 k, i64 c = 1) {
        CycloValue z(0, n);
        z.c_[static_cast<std::size_t>(mod(k, n))] = c;
        return z;
    }

    i64 conductor() const { return n_; }
    const std::vector<i64>& coeffs() const { return c_; }

    /// The same element written over zeta_N, for n | N.
    CycloValue lift(i64 N) const {
        if (N == n_) return *this;
        if (N % n_ != 0) throw std::invalid_argument("CycloValue::lift: conductor does not divide target");
        CycloValue r(0, N);
        i64 step = N / n_;
        for (i64 j = 0; j < n_; ++j) r.c_[static_cast<std::size_t>(j * step)] = c_[static_cast<std::size_t>(j)];
        return r;
    }

    CycloValue& operator+=(const CycloValue& o) {
        align(o);
        if (o.n_ == n_) {
            for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
        } else {
            i64 step = n_ / o.n_;
            for (i64 j = 0; j < o.n_; ++j) c_[static_cast<std::size_t>(j * step)] += o.c_[static_cast<std::size_t>(j)];
        }
        return *this;
    }
    CycloValue& operator-=(const CycloValue& o) { return *this += -o; }

    /// Adds c * zeta_n^k without materializing the monomial.
    void add_monomial(i64 n, i64 k, i64 c) {
        if (c == 0) return;
        if (n_ % n != 0) *this = lift(std::lcm(n_, n));
        c_[static_cast<std::size_t>(mod(k * (n_ / n), n_))] += c;
    }

    CycloValue operator-() const {
        CycloValue r = *this;
        for (auto& x : r.c_) x = -x;
        return r;
    }

    friend CycloValue operator+(CycloValue a, const CycloValue& b) { return a += b; }
    friend CycloValue operator-(CycloValue a, const CycloValue& b) { return a -= b; }

    friend CycloValue operator*(const CycloValue& a, const CycloValue& b) {
        i64 N = std::lcm(a.n_, b.n_);
        i64 sa = N / a.n_, sb = N / b.n_;
        CycloValue r(0, N);
        for (i64 i = 0; i < a.n_; ++i) {
            i64 x = a.c_[static_cast<std::size_t>(i)];
            if (x == 0) continue;
            for (i64 j = 0; j < b.n_; ++j) {
                i64 y = b.c_[static_cast<std::size_t>(j)];
                if (y == 0) continue;
                r.c_[static_cast<std::size_t>((i * sa + j * sb) % N)] += x * y;
            }
        }
        return r;
    }
    CycloValue& operator*=(const CycloValue& b) { return *this = *this * b; }

    CycloValue times(i64 k) const {
        CycloValue r = *this;
        for (auto& x : r.c_) x *= k;
        return r;
    }

    CycloValue pow(i64 e) const {
        if (e < 0) throw std::domain_error("CycloValue::pow: negative exponent");
        CycloValue r(1, n_), b = *this;
        while (e > 0) {
            if (e & 1) r *= b;
            b *= b;
            e >>= 1;
        }
        return r;
    }

    /// Complex conjugation zeta -> zeta^-1.
    CycloValue conj() const {
        CycloValue r(0, n_);
        for (i64 j = 0; j < n_; ++j) r.c_[static_cast<std::size_t>(mod(-j, n_))] = c_[static_cast<std::size_t>(j)];
        return r;
    }

    /// Canonical coordinates on 1, zeta, ..., zeta^(phi(n)-1).
    std::vector<i64> reduced() const {
        const std::vector<i64>& f = cyclotomic_polynomial(n_);
        std::size_t d = f.size() - 1;
        std::vector<i64> r = c_;
        for (std::size_t i = r.size(); i-- > d;) {
            i64 c = r[i];
            if (c == 0) continue;
            for (std::size_t j = 0; j <= d; ++j) r[i - d + j] -= c * f[j];
        }
        r.resize(d);
        return r;
    }

    bool is_zero() const {
        for (i64 x : reduced())
            if (x != 0) return false;
        return true;
    }

    friend bool operator==(const CycloValue& a, const CycloValue& b) { return (a - b).is_zero(); }
    friend bool operator!=(const CycloValue& a, const CycloValue& b) { return !(a == b); }

    /// True when the value is a rational integer; stores it in out.
    bool as_integer(i64& out) const {
        std::vector<i64> r = reduced();
        for (std::size_t i = 1; i < r.size(); ++i)
            if (r[i] != 0) return false;
        out = r.empty() ? 0 : r[0];
        return true;
    }

    std::complex<double> to_complex() const {
        std::complex<double> s = 0;
        const double tau = 2.0 * std::acos(-1.0);
        for (i64 j = 0; j < n_; ++j) {
            i64 x = c_[static_cast<std::size_t>(j)];
            if (x != 0) s += static_cast<double>(x) * std::polar(1.0, tau * static_cast<double>(j) / static_cast<double>(n_));
        }
        return s;
    }

    std::string to_string() const {
        std::vector<i64> r = reduced();
        std::string s;
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (r[i] == 0) continue;
            if (!s.empty()) s += r[i] > 0 ? " + " : " - ";
            else if (r[i] < 0) s += "-";
            i64 a = r[i] < 0 ? -r[i] : r[i];
            if (i == 0) s += std::to_string(a);
            else {
                if (a != 1) s += std::to_string(a) + "*";
                s += "z" + std::to_string(n_) + (i > 1 ? "^" + std::to_string(i) : "");
            }
        }
        return s.empty() ? "0" : s;
    }

private:
    void align(const CycloValue& o) {
        if (n_ % o.n_ != 0) *this = lift(std::lcm(n_, o.n_));
    }

    i64 n_;
    std::vector<i64> c_;
};

}  // namespace rsk
