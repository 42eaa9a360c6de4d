#pragma once

/**
 * @file base_fields.hpp
 * @brief The totally real base field: Q, or a real quadratic field of narrow
 * class number one. Ideals are kept in factored form; elements as exact
 * rational coordinates on the integral basis {1, w}.
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <stdexcept>
#include <string>
#include <vector>

#include "arith.hpp"
#include "quad.hpp"

namespace rsk {

enum class Backend { Rational, RealQuadratic };

/// Error raised for fields or requests outside the supported backends.
struct BackendUnsupported : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A prime ideal of O_F.
struct FPrime {
    i64 ell = 2;    ///< residue characteristic
    int f = 1;      ///< residue degree
    int e = 1;      ///< ramification index
    int index = 0;  ///< 0 or 1, distinguishing the two primes over a split ell
    QElem gen{};    ///< totally positive generator (x + y w)
    QIdeal lattice{};

    i64 norm() const { return ipow(ell, f); }
    friend bool operator<(const FPrime& a, const FPrime& b) {
        return std::tie(a.ell, a.index) < std::tie(b.ell, b.index);
    }
    friend bool operator==(const FPrime& a, const FPrime& b) { return a.ell == b.ell && a.index == b.index; }
};

/// Element (x + y w) / den with exact rational coordinates.
struct FElement {
    i64 x = 0;
    i64 y = 0;
    i64 den = 1;

    static FElement make(i64 x, i64 y, i64 den) {
        if (den == 0) throw std::domain_error("FElement: zero denominator");
        if (den < 0) {
            x = -x;
            y = -y;
            den = -den;
        }
        i64 g = std::gcd(std::gcd(x < 0 ? -x : x, y < 0 ? -y : y), den);
        if (g > 1) {
            x /= g;
            y /= g;
            den /= g;
        }
        return {x, y, den};
    }
    friend bool operator==(const FElement&, const FElement&) = default;
};

/// Exact rational number num/den with den > 0.
struct Rational {
    i64 num = 0;
    i64 den = 1;
    static Rational make(i64 n, i64 d) {
        if (d == 0) throw std::domain_error("Rational: zero denominator");
        if (d < 0) {
            n = -n;
            d = -d;
        }
        i64 g = std::gcd(n < 0 ? -n : n, d);
        return {n / g, d / g};
    }
    friend bool operator==(const Rational&, const Rational&) = default;
};

/// Nonzero fractional ideal, factored.
struct FIdeal {
    std::map<FPrime, int> factors;

    bool is_integral() const {
        return std::all_of(factors.begin(), factors.end(), [](const auto& kv) { return kv.second >= 0; });
    }
    Rational norm() const {
        i64 n = 1, d = 1;
        for (const auto& [P, k] : factors) {
            if (k > 0) n *= ipow(P.norm(), k);
            else d *= ipow(P.norm(), -k);
        }
        return Rational::make(n, d);
    }
    int valuation(const FPrime& P) const {
        auto it = factors.find(P);
        return it == factors.end() ? 0 : it->second;
    }
    friend FIdeal operator*(const FIdeal& a, const FIdeal& b) {
        FIdeal r = a;
        for (const auto& [P, k] : b.factors) {
            int& e = r.factors[P];
            e += k;
            if (e == 0) r.factors.erase(P);
        }
        return r;
    }
    FIdeal inverse() const {
        FIdeal r;
        for (const auto& [P, k] : factors) r.factors[P] = -k;
        return r;
    }
    FIdeal pow(int k) const {
        FIdeal r;
        if (k == 0) return r;
        for (const auto& [P, e] : factors) r.factors[P] = e * k;
        return r;
    }
    bool divides(const FIdeal& m) const {
        for (const auto& [P, k] : factors)
            if (m.valuation(P) < k) return false;
        return true;
    }
    friend bool operator==(const FIdeal&, const FIdeal&) = default;

    /// Lexicographic comparison of factored forms, used as tie-break.
    friend bool operator<(const FIdeal& a, const FIdeal& b) {
        return std::lexicographical_compare(
            a.factors.begin(), a.factors.end(), b.factors.begin(), b.factors.end(),
            [](const auto& u, const auto& v) { return u.first < v.first || (u.first == v.first && u.second < v.second); });
    }
};

/// Exact sign of a + b*sqrt(d) with d > 0 not a square.
inline int sign_surd(i64 a, i64 b, i64 d) {
    int sa = (a > 0) - (a < 0), sb = (b > 0) - (b < 0);
    if (sb == 0) return sa;
    if (sa == 0) return sb;
    if (sa == sb) return sa;
    i128 lhs = static_cast<i128>(a) * a, rhs = static_cast<i128>(b) * b * d;
    if (lhs == rhs) return 0;
    return lhs > rhs ? sa : sb;
}

class FieldContext {
public:
    /// Parse "Q" or "Q(sqrt D)".
    static FieldContext parse(const std::string& spec) {
        if (spec == "Q") return rational();
        static const std::regex re(R"(\s*Q\s*\(\s*sqrt\s*\(?\s*(-?\d+)\s*\)?\s*\)\s*)");
        std::smatch m;
        if (std::regex_match(spec, m, re)) return real_quadratic(std::stoll(m[1].str()));
        throw std::invalid_argument("field spec must be \"Q\" or \"Q(sqrt D)\", got \"" + spec + "\"");
    }

    static FieldContext rational() {
        FieldContext c;
        c.backend_ = Backend::Rational;
        c.g_ = 1;
        c.disc_ = 1;
        c.O_ = {0, 0};
        return c;
    }

    static FieldContext real_quadratic(i64 D) {
        if (D <= 1) throw std::invalid_argument("real quadratic field needs D > 1");
        for (auto [q, e] : factor(D))
            if (e > 1) throw std::invalid_argument("Q(sqrt D): D must be squarefree");
        FieldContext c;
        c.backend_ = Backend::RealQuadratic;
        c.g_ = 2;
        c.D_ = D;
        c.O_ = QuadOrder::maximal(D);
        c.disc_ = c.O_.discriminant();
        c.find_fundamental_unit();
        if (c.O_.norm(c.unit_) != -1)
            throw BackendUnsupported("Q(sqrt " + std::to_string(D) + ") has no unit of norm -1: narrow class number exceeds class number");
        // Minkowski bound sqrt(disc)/2: every prime below it must be principal
        for (i64 l : primes_up_to(static_cast<i64>(std::sqrt(static_cast<double>(c.disc_)) / 2.0) + 1))
            for (const FPrime& P : c.primes_above(l)) (void)P;  // primes_above throws when no generator exists
        return c;
    }

    Backend backend() const { return backend_; }
    int degree() const { return g_; }
    i64 discriminant() const { return disc_; }
    i64 radicand() const { return D_; }
    const QuadOrder& order() const { return O_; }
    QElem fundamental_unit() const { return unit_; }

    /// Different of F: the principal ideal (sqrt(disc)).
    FIdeal different() const {
        if (backend_ == Backend::Rational) return {};
        QElem s = O_.t == 1 ? QElem{-1, 2} : QElem{0, 2};  // 2w - 1 or 2w
        return ideal_from_lattice(principal_ideal(O_, s));
    }

    /// Prime ideals above the rational prime l, in index order.
    std::vector<FPrime> primes_above(i64 l) const {
        if (!is_prime(l)) throw std::invalid_argument("primes_above: not prime: " + std::to_string(l));
        if (backend_ == Backend::Rational) {
            FPrime P;
            P.ell = l;
            P.gen = {l, 0};
            P.lattice = {l, 0, 1};
            return {P};
        }
        {
            std::lock_guard<std::mutex> lock(cache_->mu);
            auto it = cache_->primes.find(l);
            if (it != cache_->primes.end()) return it->second;
        }
        std::vector<FPrime> out;
        int k = kronecker(disc_, l);
        if (k == -1) {
            FPrime P;
            P.ell = l;
            P.f = 2;
            P.gen = {l, 0};
            P.lattice = {l, 0, l};
            out.push_back(P);
        } else {
            std::vector<i64> roots;
            for (i64 r = 0; r < l; ++r)
                if (mod(mulmod(r, r, l) - mulmod(O_.t, r, l) + O_.n, l) == 0) roots.push_back(r);
            for (std::size_t i = 0; i < roots.size(); ++i) {
                FPrime P;
                P.ell = l;
                P.e = k == 0 ? 2 : 1;
                P.index = static_cast<int>(i);
                P.lattice = prime_ideal_above(l, roots[i]);
                P.gen = totally_positive_generator(P.lattice);
                out.push_back(P);
                if (k == 0) break;
            }
        }
        std::lock_guard<std::mutex> lock(cache_->mu);
        cache_->primes[l] = out;
        return out;
    }

    /// The ideal (n) for a nonzero rational integer n.
    FIdeal ideal_of_integer(i64 n) const {
        FIdeal I;
        for (auto [q, e] : factor(n)) {
            for (const FPrime& P : primes_above(q)) I.factors[P] += e * P.e;
        }
        return I;
    }

    /// Factorization of an integral ideal given by a lattice.
    FIdeal ideal_from_lattice(const QIdeal& L) const {
        if (backend_ == Backend::Rational) return ideal_of_integer(L.A);
        FIdeal I;
        QIdeal rest = L;
        for (auto [q, e] : factor(L.norm())) {
            for (const FPrime& P : primes_above(q)) {
                int v = 0;
                while (true) {
                    QIdeal next = divide_by_prime(rest, P);
                    if (next.A == 0) break;
                    rest = next;
                    ++v;
                }
                if (v > 0) I.factors[P] = v;
            }
        }
        if (rest.norm() != 1) throw std::logic_error("ideal_from_lattice: incomplete factorization");
        return I;
    }

    /// Wrapper for factored ideals; the product reconstructs the input.
    std::map<FPrime, int> factor_ideal(const FIdeal& m) const { return m.factors; }

    /// All integral ideals of norm <= bound, sorted by norm then factored form.
    std::vector<FIdeal> enumerate_ideals(i64 bound) const {
        if (bound < 1) throw std::invalid_argument("enumerate_ideals: bound must be >= 1");
        std::vector<FPrime> primes;
        for (i64 l : primes_up_to(bound))
            for (const FPrime& P : primes_above(l))
                if (P.norm() <= bound) primes.push_back(P);
        std::vector<std::pair<i64, FIdeal>> out;
        std::function<void(std::size_t, i64, FIdeal&)> rec = [&](std::size_t i, i64 nm, FIdeal& cur) {
            if (i == primes.size()) {
                out.emplace_back(nm, cur);
                return;
            }
            rec(i + 1, nm, cur);
            i64 q = primes[i].norm();
            int k = 0;
            while (nm <= bound / q) {
                nm *= q;
                cur.factors[primes[i]] = ++k;
                rec(i + 1, nm, cur);
            }
            cur.factors.erase(primes[i]);
        };
        FIdeal start;
        rec(0, 1, start);
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first < b.first : a.second < b.second;
        });
        std::vector<FIdeal> r;
        for (auto& kv : out) r.push_back(std::move(kv.second));
        return r;
    }

    /// Totally positive generator of a (possibly fractional) ideal.
    FElement generator(const FIdeal& a) const {
        if (backend_ == Backend::Rational) {
            Rational q = a.norm();
            return FElement::make(q.num, 0, q.den);
        }
        QElem num{1, 0}, den{1, 0};
        for (const auto& [P, k] : a.factors)
            for (int i = 0; i < (k < 0 ? -k : k); ++i) (k > 0 ? num : den) = O_.mul(k > 0 ? num : den, P.gen);
        // num / den = num * conj(den) / N(den); N(den) > 0 as den is totally positive
        QElem q = O_.mul(num, O_.conj(den));
        return FElement::make(q.x, q.y, O_.norm(den));
    }

    /// Signs of the real embeddings of (x + y w)/den, in embedding order (w -> (t + sqrt d)/2, (t - sqrt d)/2).
    std::vector<int> embedding_signs(const FElement& a) const {
        if (backend_ == Backend::Rational) return {(a.x > 0) - (a.x < 0)};
        // 2 (x + y w) = (2x + t y) +- y sqrt(disc)
        i64 u = 2 * a.x + O_.t * a.y;
        return {sign_surd(u, a.y, disc_), sign_surd(u, -a.y, disc_)};
    }

    bool is_totally_positive(const FElement& a) const {
        for (int s : embedding_signs(a))
            if (s <= 0) return false;
        return true;
    }

    FElement one_minus(const FElement& a) const { return FElement::make(a.den - a.x, -a.y, a.den); }

    /// Membership of an element in a fractional ideal.
    bool contains(const FIdeal& a, const FElement& n) const {
        if (backend_ == Backend::Rational) {
            Rational q = a.norm();
            // n = x/den in (num/qden) Z  <=>  x * qden / (den * num) integral
            i128 top = static_cast<i128>(n.x) * q.den, bot = static_cast<i128>(n.den) * q.num;
            return top % bot == 0;
        }
        // n * gen(a)^{-1} integral
        FElement g = generator(a);
        // (n.x + n.y w)/n.den * g.den / (g.x + g.y w)
        QElem num = O_.mul({n.x, n.y}, O_.conj({g.x, g.y}));
        i128 d = static_cast<i128>(n.den) * O_.norm({g.x, g.y});
        i128 nx = static_cast<i128>(num.x) * g.den, ny = static_cast<i128>(num.y) * g.den;
        return nx % d == 0 && ny % d == 0;
    }

    /**
     * All n in the fractional ideal a with n and 1 - n totally positive,
     * sorted by (embedding-1 value, embedding-2 value) exactly.
     */
    std::vector<FElement> elements_in_unit_box(const FIdeal& a) const {
        std::vector<FElement> out;
        FElement g = generator(a);
        if (backend_ == Backend::Rational) {
            for (i64 k = 1; static_cast<i128>(k) * g.x < g.den; ++k) out.push_back(FElement::make(k * g.x, 0, g.den));
            return out;
        }
        // Elements of a have coordinates in (1/den) Z. With both embeddings in (0, 1),
        // |Y| < 1/sqrt(disc) and X lies within (-max|w|, 1 + max|w|).
        double wmax = (std::abs(static_cast<double>(O_.t)) + std::sqrt(static_cast<double>(disc_))) / 2.0;
        i64 XL = static_cast<i64>(std::ceil(g.den * (1.0 + wmax))) + 1;
        for (i64 y = -g.den; y <= g.den; ++y) {
            for (i64 x = -XL; x <= XL; ++x) {
                FElement n = FElement::make(x, y, g.den);
                if (n.x == 0 && n.y == 0) continue;
                if (!is_totally_positive(n) || !is_totally_positive(one_minus(n))) continue;
                if (contains(a, n)) out.push_back(n);
            }
        }
        sort_elements(out);
        return out;
    }

    /// Canonical label: "n" for Q, "l.f.e.i^k" joined by "*" otherwise.
    std::string label(const FIdeal& m) const {
        if (backend_ == Backend::Rational) {
            Rational q = m.norm();
            return q.den == 1 ? std::to_string(q.num) : std::to_string(q.num) + "/" + std::to_string(q.den);
        }
        if (m.factors.empty()) return "1";
        std::string s;
        for (const auto& [P, k] : m.factors) {
            if (!s.empty()) s += "*";
            s += std::to_string(P.ell) + "." + std::to_string(P.f) + "." + std::to_string(P.e) + "." + std::to_string(P.index);
            if (k != 1) s += "^" + std::to_string(k);
        }
        return s;
    }

    FIdeal parse_label(const std::string& s) const {
        if (backend_ == Backend::Rational) {
            auto slash = s.find('/');
            i64 n = std::stoll(s.substr(0, slash));
            i64 d = slash == std::string::npos ? 1 : std::stoll(s.substr(slash + 1));
            if (n <= 0 || d <= 0) throw std::invalid_argument("ideal label must be a positive rational: " + s);
            return ideal_of_integer(n) * ideal_of_integer(d).inverse();
        }
        FIdeal I;
        if (s == "1") return I;
        static const std::regex re(R"((\d+)\.(\d+)\.(\d+)\.(\d+)(\^(-?\d+))?)");
        std::size_t pos = 0;
        while (pos <= s.size()) {
            std::size_t star = s.find('*', pos);
            std::string tok = s.substr(pos, star == std::string::npos ? std::string::npos : star - pos);
            std::smatch m;
            if (!std::regex_match(tok, m, re)) throw std::invalid_argument("bad ideal label: " + tok);
            i64 l = std::stoll(m[1].str());
            int idx = std::stoi(m[4].str());
            int k = m[6].matched ? std::stoi(m[6].str()) : 1;
            auto ps = primes_above(l);
            if (idx >= static_cast<int>(ps.size())) throw std::invalid_argument("bad prime index in label: " + tok);
            I = I * FIdeal{{{ps[idx], k}}};
            if (star == std::string::npos) break;
            pos = star + 1;
        }
        return I;
    }

private:
    struct Cache {
        std::mutex mu;
        std::map<i64, std::vector<FPrime>> primes;
    };

    void find_fundamental_unit() {
        // eps = (a + b sqrt(disc))/2 with a^2 - disc b^2 = -4 (norm -1) or +4, smallest b
        auto to_elem = [&](i64 a, i64 b) { return O_.t == 1 ? QElem{(a - b) / 2, b} : QElem{a / 2, b}; };
        for (i64 b = 1; b < 2000000; ++b) {
            for (i64 s : {-4, 4}) {
                i64 a2 = disc_ * b * b + s;
                i64 a = static_cast<i64>(std::sqrt(static_cast<long double>(a2)));
                while (a * a > a2) --a;
                while ((a + 1) * (a + 1) <= a2) ++a;
                if (a * a != a2) continue;
                unit_ = to_elem(a, b);
                return;
            }
        }
        throw std::runtime_error("fundamental unit search exhausted");
    }

    QElem totally_positive_generator(const QIdeal& L) const {
        i64 Nm = L.norm();
        // search elements of norm +-Nm in the lattice with bounded coefficients
        i64 uy = std::abs(unit_.y);
        i64 Y = (uy + 2) * static_cast<i64>(std::sqrt(static_cast<double>(Nm)) + 2);
        for (i64 y = 0; y <= Y; ++y) {
            for (i64 sgn : {1, -1}) {
                if (y == 0 && sgn == -1) continue;
                i64 yy = sgn * y;
                // x^2 + t x yy + n yy^2 = +-Nm
                for (i64 target : {Nm, -Nm}) {
                    i64 disc = O_.t * O_.t * yy * yy - 4 * (O_.n * yy * yy - target);
                    if (disc < 0) continue;
                    i64 s = static_cast<i64>(std::llround(std::sqrt(static_cast<long double>(disc))));
                    if (s * s != disc) continue;
                    for (i64 num : {-O_.t * yy + s, -O_.t * yy - s}) {
                        if (num % 2 != 0) continue;
                        QElem g{num / 2, yy};
                        if (!ideal_contains(L, g)) continue;
                        if (O_.norm(g) < 0) g = O_.mul(g, unit_);
                        FElement fe = FElement::make(g.x, g.y, 1);
                        auto sg = embedding_signs(fe);
                        if (sg[0] < 0) g = {-g.x, -g.y};
                        return g;
                    }
                }
            }
        }
        throw BackendUnsupported("no generator found for prime ideal of norm " + std::to_string(Nm) + ": class number exceeds 1");
    }

    /// L * P^{-1} when P divides L, else A == 0.
    QIdeal divide_by_prime(const QIdeal& L, const FPrime& P) const {
        // L subset P  <=>  both basis vectors in P
        if (!ideal_contains(P.lattice, {L.A, 0}) || !ideal_contains(P.lattice, {L.B, L.C})) return {0, 0, 0};
        // L P^{-1} = L * conj(P) / N(P)  (P conj(P) = (l^f) for f=1; P = (l) when inert)
        if (P.f == 2) {
            if (L.A % P.ell != 0 || L.B % P.ell != 0 || L.C % P.ell != 0) return {0, 0, 0};
            return {L.A / P.ell, L.B / P.ell, L.C / P.ell};
        }
        QIdeal prod = ideal_mul(O_, L, ideal_conj(O_, P.lattice));
        i64 l = P.ell;
        if (prod.A % l != 0 || prod.B % l != 0 || prod.C % l != 0) return {0, 0, 0};
        return {prod.A / l, prod.B / l, prod.C / l};
    }

    void sort_elements(std::vector<FElement>& v) const {
        // order by first real embedding, exactly
        std::sort(v.begin(), v.end(), [&](const FElement& a, const FElement& b) {
            // a - b = ((a.x b.den - b.x a.den) + (a.y b.den - b.y a.den) w) / (a.den b.den)
            FElement d = FElement::make(a.x * b.den - b.x * a.den, a.y * b.den - b.y * a.den, a.den * b.den);
            auto s = embedding_signs(d);
            if (s[0] != 0) return s[0] < 0;
            return s.size() > 1 && s[1] < 0;
        });
    }

    Backend backend_ = Backend::Rational;
    int g_ = 1;
    i64 D_ = 1;
    i64 disc_ = 1;
    QuadOrder O_{};
    QElem unit_{};
    std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

}  // namespace rsk
