#pragma once

/**
 * @file cm_arith.hpp
 * @brief The CM extension E/F: the quadratic character, ideal counts,
 * prime ideals of E, ray class groups modulo p^n with discrete logarithms,
 * finite-order Hecke characters and the cyclotomic family nu^s.
 *
 * Full ray-class and character support is for F = Q, E = Q(sqrt(-D)) with
 * D = 3 mod 4 squarefree (odd discriminant). Over a real quadratic F the
 * context provides the character and ideal counts only.
 */

#include <algorithm>
#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "arith.hpp"
#include "base_fields.hpp"
#include "cyclo.hpp"
#include "padic.hpp"
#include "quad.hpp"

namespace rsk {

enum class Splitting { Split, Inert, Ramified };

inline const char* to_string(Splitting s) {
    switch (s) {
        case Splitting::Split: return "split";
        case Splitting::Inert: return "inert";
        default: return "ramified";
    }
}

/// A prime ideal of O_E over F = Q.
struct EPrime {
    i64 ell = 2;
    Splitting type = Splitting::Split;
    int index = 0;  ///< 0 or 1 over a split prime; the two are conjugate
    i64 root = 0;   ///< w = root mod this prime (split or ramified)
    QIdeal lattice{};

    i64 norm() const { return type == Splitting::Inert ? ell * ell : ell; }
    friend bool operator<(const EPrime& a, const EPrime& b) { return std::tie(a.ell, a.index) < std::tie(b.ell, b.index); }
    friend bool operator==(const EPrime& a, const EPrime& b) { return a.ell == b.ell && a.index == b.index; }
};

/// Integral ideal of E in factored form.
using EIdeal = std::vector<std::pair<EPrime, int>>;

class CMContext {
public:
    /// E = Q(sqrt(-D)) over Q; D squarefree, D = 3 mod 4.
    static CMContext over_rationals(i64 D) {
        if (D <= 0) throw std::invalid_argument("CM field needs D > 0 for Q(sqrt(-D))");
        for (auto [q, e] : factor(D))
            if (e > 1) throw std::invalid_argument("D must be squarefree");
        if (mod(D, 4) != 3)
            throw std::invalid_argument("relative discriminant must be odd: need D = 3 mod 4, got " + std::to_string(D));
        CMContext c;
        c.base_ = FieldContext::rational();
        c.D_ = D;
        c.O_ = QuadOrder::maximal(-D);
        c.forms_ = reduced_forms(-D);
        std::sort(c.forms_.begin(), c.forms_.end());
        // identity class first
        auto id = std::find(c.forms_.begin(), c.forms_.end(), QForm{1, 1, (1 + D) / 4});
        std::iter_swap(c.forms_.begin(), id);
        c.units_ = unit_group(c.O_);
        for (auto [q, e] : factor(D)) c.ramified_.push_back(q);
        return c;
    }

    /**
     * E = F(sqrt(-d)) for a real quadratic F; the relative character is the
     * character of Q(sqrt(-d)) composed with the norm from F.
     */
    static CMContext over_field(const FieldContext& F, i64 d) {
        if (F.backend() == Backend::Rational) return over_rationals(d);
        CMContext c;
        c.base_ = F;
        c.D_ = d;
        c.O_ = QuadOrder::maximal(-d);
        i64 dK = c.O_.discriminant();
        if (std::gcd(dK < 0 ? -dK : dK, F.discriminant()) != 1)
            throw BackendUnsupported("CM extension must have discriminant prime to that of F");
        if (mod(-d, 4) != 1) throw std::invalid_argument("relative discriminant must be odd");
        for (auto [q, e] : factor(d)) c.ramified_.push_back(q);
        return c;
    }

    const FieldContext& base() const { return base_; }
    bool over_q() const { return base_.backend() == Backend::Rational; }
    /// D with E = F(sqrt(-D)); over Q this is the absolute discriminant |D_E|.
    i64 D() const { return D_; }
    const QuadOrder& order() const { return O_; }
    const std::vector<i64>& ramified_primes() const { return ramified_; }
    std::size_t class_number() const { require_q("class_number"); return forms_.size(); }
    const std::vector<QForm>& class_forms() const { return forms_; }
    const std::vector<QElem>& units() const { return units_; }

    /// Splitting of the rational prime l in Q(sqrt(-D)).
    Splitting split_type(i64 l) const {
        int k = kronecker(-D_ * (mod(-D_, 4) == 1 ? 1 : 4), l);
        return k == 1 ? Splitting::Split : k == -1 ? Splitting::Inert : Splitting::Ramified;
    }

    Splitting split_type(const FPrime& P) const {
        int s = epsilon_prime(P);
        return s == 1 ? Splitting::Split : s == -1 ? Splitting::Inert : Splitting::Ramified;
    }

    /// Quadratic character on the F-prime P.
    int epsilon_prime(const FPrime& P) const {
        int k = kronecker(O_.discriminant(), P.ell);
        return P.f == 2 ? k * k : k;
    }

    /// epsilon on the ideal (n) of Z, n != 0.
    int epsilon(i64 n) const { return kronecker(O_.discriminant(), n < 0 ? -n : n); }

    int epsilon(const FIdeal& m) const {
        int r = 1;
        for (const auto& [P, k] : m.factors) {
            int e = epsilon_prime(P);
            if (e == 0) return 0;
            if ((k % 2 + 2) % 2 == 1) r *= e;
        }
        return r;
    }

    /// Number of integral E-ideals of norm n (F = Q), n >= 1.
    i64 r_count(i64 n) const { return r_count_factored(factor(n)); }

    i64 r_count_factored(const Factorization& f) const {
        i64 r = 1;
        for (auto [q, e] : f) {
            switch (split_type(q)) {
                case Splitting::Split: r *= e + 1; break;
                case Splitting::Inert: if (e % 2 == 1) return 0; break;
                case Splitting::Ramified: break;
            }
        }
        return r;
    }

    i64 r_count(const FIdeal& m) const {
        if (!m.is_integral()) return 0;
        i64 r = 1;
        for (const auto& [P, k] : m.factors) {
            int e = epsilon_prime(P);
            if (e == 1) r *= k + 1;
            else if (e == -1 && k % 2 == 1) return 0;
        }
        return r;
    }

    /// Prime ideals of E above l (F = Q).
    std::vector<EPrime> eprimes_above(i64 l) const {
        require_q("eprimes_above");
        Splitting s = split_type(l);
        std::vector<EPrime> out;
        if (s == Splitting::Inert) {
            out.push_back({l, s, 0, 0, {l, 0, l}});
            return out;
        }
        std::vector<i64> roots;
        if (l == 2) {
            for (i64 r = 0; r < 2; ++r)
                if (mod(r * r - O_.t * r + O_.n, 2) == 0) roots.push_back(r);
        } else {
            // roots of x^2 - x + n: x = (1 +- sqrt(-D)) / 2
            i64 sq = sqrt_mod(mod(-D_, l), l);
            i64 inv2 = invmod(2, l);
            roots.push_back(mulmod(mod(1 + sq, l), inv2, l));
            if (s == Splitting::Split) roots.push_back(mulmod(mod(1 - sq, l), inv2, l));
            std::sort(roots.begin(), roots.end());
        }
        for (std::size_t i = 0; i < roots.size(); ++i) out.push_back({l, s, static_cast<int>(i), roots[i], prime_ideal_above(l, roots[i])});
        return out;
    }

    /// Complex conjugate of a prime ideal.
    EPrime conj(const EPrime& P) const {
        if (P.type != Splitting::Split) return P;
        auto ps = eprimes_above(P.ell);
        return ps[1 - P.index];
    }

    /// Factorization of the principal ideal (a).
    EIdeal factor_element(QElem a) const {
        require_q("factor_element");
        i64 c = std::gcd(a.x < 0 ? -a.x : a.x, a.y < 0 ? -a.y : a.y);
        if (c == 0) throw std::domain_error("factor_element: zero");
        std::map<EPrime, int> acc;
        for (auto [q, e] : factor(c)) {
            for (const EPrime& P : eprimes_above(q)) acc[P] += P.type == Splitting::Ramified ? 2 * e : e;
        }
        QElem b{a.x / c, a.y / c};
        i64 nb = O_.norm(b);
        if (nb > 1) {
            for (auto [q, e] : factor(nb)) {
                auto ps = eprimes_above(q);
                if (ps[0].type == Splitting::Inert) throw std::logic_error("factor_element: inert prime divides primitive element");
                const EPrime* hit = &ps[0];
                if (ps.size() == 2 && O_.reduce_at(b, ps[0].root, q) != 0) hit = &ps[1];
                acc[*hit] += e;
            }
        }
        return {acc.begin(), acc.end()};
    }

    /// Norm of a factored E-ideal.
    static i64 norm(const EIdeal& I) {
        i64 n = 1;
        for (const auto& [P, k] : I) n *= ipow(P.norm(), k);
        return n;
    }

    /// Lattice of a factored E-ideal.
    QIdeal lattice(const EIdeal& I) const {
        QIdeal L{1, 0, 1};
        for (const auto& [P, k] : I)
            for (int i = 0; i < k; ++i) L = ideal_mul(O_, L, P.lattice);
        return L;
    }

    /// Every integral ideal of E of norm n, each as a factorization.
    std::vector<EIdeal> ideals_of_norm(i64 n) const {
        require_q("ideals_of_norm");
        std::vector<EIdeal> out{{}};
        for (auto [q, e] : factor(n)) {
            auto ps = eprimes_above(q);
            std::vector<EIdeal> local;
            switch (ps[0].type) {
                case Splitting::Inert:
                    if (e % 2 == 1) return {};
                    local.push_back({{ps[0], e / 2}});
                    break;
                case Splitting::Ramified: local.push_back({{ps[0], e}}); break;
                case Splitting::Split:
                    for (int i = 0; i <= e; ++i) {
                        EIdeal t;
                        if (i > 0) t.emplace_back(ps[0], i);
                        if (e - i > 0) t.emplace_back(ps[1], e - i);
                        local.push_back(t);
                    }
                    break;
            }
            std::vector<EIdeal> next;
            for (const auto& a : out)
                for (const auto& b : local) {
                    EIdeal c = a;
                    c.insert(c.end(), b.begin(), b.end());
                    next.push_back(c);
                }
            out = std::move(next);
        }
        return out;
    }

    /// Index of the ideal class of a lattice in class_forms().
    std::size_t class_index(const QIdeal& L) const {
        QForm f = ideal_form(O_, L);
        auto it = std::find(forms_.begin(), forms_.end(), f);
        if (it == forms_.end()) throw std::logic_error("class_index: reduced form not found");
        return static_cast<std::size_t>(it - forms_.begin());
    }

    /// The ramified E-ideal of norm delta, for delta | D.
    EIdeal ramified_ideal(i64 delta) const {
        if (D_ % delta != 0) throw std::invalid_argument("ramified_ideal: delta does not divide D");
        EIdeal I;
        for (auto [q, e] : factor(delta)) I.emplace_back(eprimes_above(q)[0], 1);
        return I;
    }

    /**
     * Local quadratic character at q | D evaluated on the rational x != 0:
     * x = q^k u gives (u|q) * eps_q(q)^k, where eps_q(q) is fixed by the
     * product formula as the product of (q|q') over the other ramified q'.
     */
    int local_epsilon(i64 q, i64 num, i64 den = 1) const {
        int k = vp(num, q) - vp(den, q);
        i64 u = mulmod(mod(strip(num, q), q), invmod(mod(strip(den, q), q), q), q);
        int s = legendre(u, q);
        if ((k % 2 + 2) % 2 == 1) s *= epsilon_at_uniformizer(q);
        return s;
    }

    int epsilon_at_uniformizer(i64 q) const {
        int s = 1;
        for (i64 qq : ramified_) {
            if (qq != q) s *= legendre(mod(q, qq), qq);
        }
        return s;
    }

private:
    void require_q(const char* what) const {
        if (!over_q()) throw BackendUnsupported(std::string(what) + ": only available over F = Q");
    }

    FieldContext base_ = FieldContext::rational();
    i64 D_ = 7;
    QuadOrder O_{};
    std::vector<QForm> forms_;
    std::vector<QElem> units_;
    std::vector<i64> ramified_;
};

/**
 * Ray class group of E modulo p^n for a split odd prime p (F = Q).
 *
 * An ideal a prime to p in class c is keyed by (c, alpha mod p^n up to
 * units), where (alpha) = a * conj(r_c) and r_c is a fixed prime ideal of
 * class c. Residues mod p^n are kept in the two components O/P^n and
 * O/conj(P)^n, both identified with Z/p^n.
 */
class RayClassGroup {
public:
    struct Key {
        std::size_t cls = 0;
        i64 b1 = 1;
        i64 b2 = 1;
        friend bool operator==(const Key&, const Key&) = default;
    };

    RayClassGroup(std::shared_ptr<const CMContext> cm, i64 p, int n) : cm_(std::move(cm)), p_(p), n_(n) {
        if (!cm_->over_q()) throw BackendUnsupported("ray class groups: only available over F = Q");
        if (p % 2 == 0 || !is_prime(p)) throw std::invalid_argument("ray class group: p must be an odd prime");
        if (cm_->split_type(p) != Splitting::Split)
            throw BackendUnsupported("ray class group: p = " + std::to_string(p) + " must split in E");
        if (n < 0) throw std::invalid_argument("ray class group: n must be >= 0");
        P_ = ipow(p, n);
        // root of w^2 - w + k mod p^n on the component of the first prime above p
        const QuadOrder& O = cm_->order();
        EPrime Pp = cm_->eprimes_above(p)[0];
        r_ = Pp.root;
        i64 m = p;
        for (int i = 1; i < std::max(n, 1); ++i) {
            m *= p;
            i64 f = mod(mulmod(r_, r_, m) - r_ + O.n, m);
            i64 df = mod(2 * r_ - 1, m);
            r_ = mod(r_ - mulmod(f, invmod(df, m), m), m);
        }
        build_class_reps();
        build_group();
    }

    const CMContext& cm() const { return *cm_; }
    i64 p() const { return p_; }
    int level() const { return n_; }
    i64 modulus() const { return P_; }
    /// Root r with w = r mod P^n on the first component.
    i64 component_root() const { return r_; }
    const std::vector<i64>& invariants() const { return diag_; }
    i64 order() const { return order_; }
    i64 exponent() const { return diag_.empty() ? 1 : diag_.back(); }

    /// Order predicted by the exact sequence (units -> (O/p^n)^x -> Cl_{p^n} -> Cl).
    i64 expected_order() const {
        i64 phi = P_ == 1 ? 1 : P_ / p_ * (p_ - 1);
        i64 img = P_ == 1 ? 1 : static_cast<i64>(cm_->units().size());
        return static_cast<i64>(cm_->class_number()) * phi * phi / img;
    }

    /// Components of an element of O_E modulo p^n.
    std::pair<i64, i64> components(QElem a) const {
        if (P_ == 1) return {0, 0};
        return {mod(mod(a.x, P_) + mulmod(mod(a.y, P_), r_, P_), P_),
                mod(mod(a.x, P_) + mulmod(mod(a.y, P_), mod(1 - r_, P_), P_), P_)};
    }

    /// SNF coordinates of the principal ideal (a), a prime to p.
    std::vector<i64> dlog_element(QElem a) const {
        auto [b1, b2] = components(a);
        return coords_of(Key{0, b1, b2});
    }

    /// SNF coordinates of an ideal given as a lattice, prime to p.
    std::vector<i64> dlog_lattice(const QIdeal& L) const { return coords_of(key_of_lattice(L)); }

    /// SNF coordinates of a prime ideal of E not above p (cached).
    const std::vector<i64>& dlog_prime(const EPrime& P) const {
        if (P.ell == p_) throw std::domain_error("dlog_prime: prime above p");
        i64 code = P.ell * 2 + P.index;
        {
            std::lock_guard<std::mutex> lock(cache_->mu);
            auto it = cache_->prime_dlog.find(code);
            if (it != cache_->prime_dlog.end()) return it->second;
        }
        std::vector<i64> v = dlog_lattice(P.lattice);
        std::lock_guard<std::mutex> lock(cache_->mu);
        return cache_->prime_dlog.emplace(code, std::move(v)).first->second;
    }

    std::vector<i64> dlog(const EIdeal& I) const {
        std::vector<i64> x(diag_.size(), 0);
        for (const auto& [P, k] : I) {
            const auto& v = dlog_prime(P);
            for (std::size_t j = 0; j < x.size(); ++j) x[j] = mod(x[j] + k * v[j], diag_[j]);
        }
        return x;
    }

    std::vector<i64> add(const std::vector<i64>& a, const std::vector<i64>& b) const {
        std::vector<i64> r(a.size());
        for (std::size_t j = 0; j < a.size(); ++j) r[j] = mod(a[j] + b[j], diag_[j]);
        return r;
    }

    /// Coordinates of the class of the ideal generated by the integer a (prime to p).
    std::vector<i64> dlog_integer(i64 a) const { return dlog_element({a, 0}); }

    /// Coordinates of the element with residues (u mod P^n, v mod conj(P)^n) in the identity class.
    std::vector<i64> dlog_residues(i64 u, i64 v) const { return coords_of(Key{0, mod(u, P_), mod(v, P_)}); }

    /// Coordinates of the complex conjugate class.
    std::vector<i64> conj(const std::vector<i64>& x) const {
        Key k = elems_.at(flat_index(x));
        std::size_t c = k.cls;
        std::size_t ci = inverse_class_[c];
        // (alpha) = a conj(r_c)  =>  conj(a) conj(r_{c^-1}) = (conj(alpha) * g / l_c), (g) = conj(r_c) conj(r_{c^-1})
        auto [g1, g2] = conj_cocycle_[c];
        i64 n1 = mulmod(k.b2, g1, P_), n2 = mulmod(k.b1, g2, P_);
        return coords_of(Key{ci, n1, n2});
    }

    /// Flat index of a coordinate vector (mixed radix over the invariants).
    std::size_t flat_index(const std::vector<i64>& x) const {
        std::size_t idx = 0;
        for (std::size_t j = 0; j < diag_.size(); ++j) idx = idx * static_cast<std::size_t>(diag_[j]) + static_cast<std::size_t>(mod(x[j], diag_[j]));
        return idx;
    }

    std::vector<i64> unflatten(std::size_t idx) const {
        std::vector<i64> x(diag_.size());
        for (std::size_t j = diag_.size(); j-- > 0;) {
            x[j] = static_cast<i64>(idx % static_cast<std::size_t>(diag_[j]));
            idx /= static_cast<std::size_t>(diag_[j]);
        }
        return x;
    }

    /// Coordinates of the projection to level m <= n (via residues).
    std::vector<i64> project(const RayClassGroup& lower, const std::vector<i64>& x) const {
        if (lower.p_ != p_ || lower.n_ > n_) throw std::invalid_argument("project: incompatible groups");
        Key k = elems_.at(flat_index(x));
        if (lower.class_rep_norms_ != class_rep_norms_) throw std::logic_error("project: class representatives differ");
        return lower.coords_of(Key{k.cls, lower.P_ == 1 ? 0 : mod(k.b1, lower.P_), lower.P_ == 1 ? 0 : mod(k.b2, lower.P_)});
    }

    /// Key of an ideal (as a lattice) prime to p.
    Key key_of_lattice(const QIdeal& L) const {
        const QuadOrder& O = cm_->order();
        std::size_t c = cm_->class_index(L);
        QIdeal J = ideal_mul(O, L, ideal_conj(O, class_reps_[c]));
        QElem g;
        if (!principal_generator(O, J, g)) throw std::logic_error("key_of_lattice: product not principal");
        auto [b1, b2] = components(g);
        return Key{c, b1, b2};
    }

private:
    struct Cache {
        std::mutex mu;
        std::unordered_map<i64, std::vector<i64>> prime_dlog;
    };

    void build_class_reps() {
        const CMContext& cm = *cm_;
        std::size_t h = cm.class_number();
        class_reps_.assign(h, QIdeal{0, 0, 0});
        class_rep_norms_.assign(h, 0);
        class_reps_[0] = QIdeal{1, 0, 1};
        class_rep_norms_[0] = 1;
        std::size_t found = 1;
        for (i64 l = 2; found < h; ++l) {
            if (!is_prime(l) || l == p_) continue;
            for (const EPrime& P : cm.eprimes_above(l)) {
                if (P.type == Splitting::Inert) continue;
                std::size_t c = cm.class_index(P.lattice);
                if (class_rep_norms_[c] == 0) {
                    class_reps_[c] = P.lattice;
                    class_rep_norms_[c] = l;
                    ++found;
                }
            }
            if (l > 100000) throw std::runtime_error("class representatives: search bound exceeded");
        }
        const QuadOrder& O = cm.order();
        // class multiplication and cocycles
        mult_.assign(h, std::vector<std::size_t>(h, 0));
        cocycle_.assign(h, std::vector<std::pair<i64, i64>>(h, {1, 1}));
        inverse_class_.assign(h, 0);
        conj_cocycle_.assign(h, {1, 1});
        for (std::size_t a = 0; a < h; ++a) {
            for (std::size_t b = 0; b < h; ++b) {
                QIdeal rr = ideal_mul(O, class_reps_[a], class_reps_[b]);
                std::size_t c = cm.class_index(rr);
                mult_[a][b] = c;
                QIdeal J = ideal_mul(O, rr, ideal_conj(O, class_reps_[c]));
                QElem g;
                if (!principal_generator(O, J, g)) throw std::logic_error("class cocycle: not principal");
                auto [g1, g2] = components(g);
                i64 l = class_rep_norms_[a] * class_rep_norms_[b];
                if (P_ > 1) {
                    i64 li = invmod(mod(l, P_), P_);
                    cocycle_[a][b] = {mulmod(g1, li, P_), mulmod(g2, li, P_)};
                } else {
                    cocycle_[a][b] = {0, 0};
                }
                if (c == 0) inverse_class_[a] = b;
            }
        }
        for (std::size_t c = 0; c < h; ++c) {
            std::size_t ci = inverse_class_[c];
            QIdeal J = ideal_mul(O, ideal_conj(O, class_reps_[c]), ideal_conj(O, class_reps_[ci]));
            QElem g;
            if (!principal_generator(O, J, g)) throw std::logic_error("conjugation cocycle: not principal");
            auto [g1, g2] = components(g);
            if (P_ > 1) {
                i64 li = invmod(mod(class_rep_norms_[c], P_), P_);
                conj_cocycle_[c] = {mulmod(g1, li, P_), mulmod(g2, li, P_)};
            } else {
                conj_cocycle_[c] = {0, 0};
            }
        }
        // unit images, for canonical keys
        for (QElem u : cm.units()) unit_images_.push_back(components(u));
    }

    Key canonical(Key k) const {
        if (P_ == 1) return Key{k.cls, 0, 0};
        Key best = k;
        for (auto [u1, u2] : unit_images_) {
            Key t{k.cls, mulmod(k.b1, u1, P_), mulmod(k.b2, u2, P_)};
            if (std::tie(t.b1, t.b2) < std::tie(best.b1, best.b2)) best = t;
        }
        return best;
    }

    Key mul(const Key& a, const Key& b) const {
        std::size_t c = mult_[a.cls][b.cls];
        if (P_ == 1) return Key{c, 0, 0};
        auto [g1, g2] = cocycle_[a.cls][b.cls];
        return canonical(Key{c, mulmod(mulmod(a.b1, b.b1, P_), g1, P_), mulmod(mulmod(a.b2, b.b2, P_), g2, P_)});
    }

    i64 encode(const Key& k) const {
        return (static_cast<i64>(k.cls) * P_ + k.b1) * P_ + k.b2;
    }

    std::vector<i64> coords_of(const Key& k) const {
        Key c = canonical(k);
        auto it = index_.find(encode(c));
        if (it == index_.end()) throw std::logic_error("ray class key not found (not prime to p?)");
        return unflatten(it->second);
    }

    void build_group() {
        std::size_t h = cm_->class_number();
        // generators: class representatives and the two component primitive roots
        std::vector<Key> gens;
        for (std::size_t c = 1; c < h; ++c) {
            i64 l = P_ == 1 ? 0 : mod(class_rep_norms_[c], P_);
            gens.push_back(canonical(Key{c, l, l}));
        }
        if (P_ > 1) {
            i64 g = primitive_root_prime_power(p_, P_);
            gens.push_back(canonical(Key{0, g, 1}));
            gens.push_back(canonical(Key{0, 1, g}));
        }
        const std::size_t r = gens.size();
        order_ = expected_order();
        // breadth-first closure; non-tree edges give relations
        std::vector<Key> elems;
        std::vector<std::vector<i64>> exps;
        std::unordered_map<i64, std::size_t> seen;
        Key id = canonical(Key{0, P_ == 1 ? 0 : 1, P_ == 1 ? 0 : 1});
        elems.push_back(id);
        exps.push_back(std::vector<i64>(r, 0));
        seen[encode(id)] = 0;
        IntMatrix H(r, std::vector<i64>(r, 0));
        for (std::size_t i = 0; i < r; ++i) H[i][i] = order_;
        auto insert_relation = [&](std::vector<i64> v) {
            for (auto& x : v) x = mod(x, order_);
            for (std::size_t j = 0; j < r; ++j) {
                if (v[j] == 0) continue;
                i64 a = H[j][j], b = v[j], u, w;
                i64 g = ext_gcd(a, b, u, w);
                if (g < 0) {
                    g = -g;
                    u = -u;
                    w = -w;
                }
                std::vector<i64> nh(r), nv(r);
                for (std::size_t k = 0; k < r; ++k) {
                    nh[k] = mod(static_cast<i64>((static_cast<i128>(u) * H[j][k] + static_cast<i128>(w) * v[k]) % order_), order_);
                    nv[k] = mod(static_cast<i64>((static_cast<i128>(a / g) * v[k] - static_cast<i128>(b / g) * H[j][k]) % order_), order_);
                }
                nh[j] = g;
                nv[j] = 0;
                H[j] = nh;
                v = nv;
            }
        };
        for (std::size_t head = 0; head < elems.size(); ++head) {
            for (std::size_t gi = 0; gi < r; ++gi) {
                Key nk = mul(elems[head], gens[gi]);
                std::vector<i64> ne = exps[head];
                ne[gi] += 1;
                auto [it, fresh] = seen.emplace(encode(nk), elems.size());
                if (fresh) {
                    elems.push_back(nk);
                    exps.push_back(ne);
                } else {
                    std::vector<i64> rel(r);
                    for (std::size_t k = 0; k < r; ++k) rel[k] = ne[k] - exps[it->second][k];
                    insert_relation(rel);
                }
            }
        }
        if (static_cast<i64>(elems.size()) != order_)
            throw std::logic_error("ray class group: closure has " + std::to_string(elems.size()) + " elements, expected " +
                                   std::to_string(order_));
        // the relation lattice contains order * Z^r; H spans it
        SmithForm S = smith_normal_form(H);
        std::vector<std::size_t> keep;
        for (std::size_t j = 0; j < r; ++j)
            if (S.diag[j] != 1) keep.push_back(j);
        for (std::size_t j : keep) diag_.push_back(S.diag[j]);
        i64 prod = 1;
        for (i64 d : diag_) prod *= d;
        if (prod != order_) throw std::logic_error("ray class group: invariant product mismatch");
        elems_.assign(static_cast<std::size_t>(order_), Key{});
        for (std::size_t i = 0; i < elems.size(); ++i) {
            std::vector<i64> x(keep.size());
            for (std::size_t t = 0; t < keep.size(); ++t) {
                i128 s = 0;
                for (std::size_t k = 0; k < r; ++k) s += static_cast<i128>(exps[i][k]) * S.V[k][keep[t]];
                x[t] = mod(static_cast<i64>(s % diag_[t]), diag_[t]);
            }
            std::size_t fi = flat_index(x);
            index_[encode(elems[i])] = fi;
            elems_[fi] = elems[i];
        }
    }

    static i64 primitive_root_prime_power(i64 p, i64 P) {
        // a primitive root mod p that stays primitive mod p^2 generates (Z/p^n)^x
        auto fac = factor(p - 1);
        for (i64 g = 2; g < p; ++g) {
            bool ok = true;
            for (auto [q, e] : fac)
                if (powmod(g, (p - 1) / q, p) == 1) ok = false;
            if (!ok) continue;
            if (P > p && powmod(g, p - 1, p * p) == 1) continue;
            return g;
        }
        throw std::logic_error("no primitive root");
    }

    std::shared_ptr<const CMContext> cm_;
    i64 p_;
    int n_;
    i64 P_ = 1;
    i64 r_ = 0;
    std::vector<QIdeal> class_reps_;
    std::vector<i64> class_rep_norms_;
    std::vector<std::vector<std::size_t>> mult_;
    std::vector<std::vector<std::pair<i64, i64>>> cocycle_;
    std::vector<std::size_t> inverse_class_;
    std::vector<std::pair<i64, i64>> conj_cocycle_;
    std::vector<std::pair<i64, i64>> unit_images_;
    std::vector<i64> diag_;
    i64 order_ = 1;
    std::unordered_map<i64, std::size_t> index_;
    std::vector<Key> elems_;
    std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();

    friend class HeckeCharacter;
};

/**
 * Finite-order character of a ray class group, with values in Z[zeta_e]
 * for e the group exponent. W(x) = zeta_e^(sum a_j x_j e / d_j).
 */
class HeckeCharacter {
public:
    HeckeCharacter(std::shared_ptr<const RayClassGroup> G, std::vector<i64> a) : G_(std::move(G)), a_(std::move(a)) {
        const auto& d = G_->invariants();
        if (a_.size() != d.size()) throw std::invalid_argument("HeckeCharacter: exponent vector length mismatch");
        for (std::size_t j = 0; j < d.size(); ++j) a_[j] = mod(a_[j], d[j]);
        compute_conductor();
    }

    static HeckeCharacter trivial(std::shared_ptr<const RayClassGroup> G) {
        std::vector<i64> a(G->invariants().size(), 0);
        return HeckeCharacter(std::move(G), a);
    }

    const RayClassGroup& group() const { return *G_; }
    std::shared_ptr<const RayClassGroup> group_ptr() const { return G_; }
    const std::vector<i64>& exponents() const { return a_; }
    /// Root-of-unity order of the value ring.
    i64 value_order() const { return G_->exponent(); }

    /// Exponent index k with W(x) = zeta_e^k.
    i64 index_at(const std::vector<i64>& x) const {
        const auto& d = G_->invariants();
        i64 e = value_order(), k = 0;
        for (std::size_t j = 0; j < d.size(); ++j) k = mod(k + mulmod(a_[j], mod(x[j], d[j]), e) * (e / d[j]), e);
        return k;
    }

    CycloValue value_at(const std::vector<i64>& x) const { return CycloValue::zeta(value_order(), index_at(x)); }

    /// Conductor exponents (at P, at conj(P)) for P the first prime above p.
    std::pair<int, int> conductor() const { return conductor_; }
    bool ramified_at(int component) const { return (component == 0 ? conductor_.first : conductor_.second) > 0; }

    /// Index k of W on an E-prime, or nullopt when W vanishes there (prime divides the conductor).
    std::optional<i64> index_on_prime(const EPrime& P) const {
        if (P.ell != G_->p()) return index_at(G_->dlog_prime(P));
        int comp = P.index;  // index 0 is the prime with w = r mod P
        if (P.root != mod(G_->component_root(), G_->p())) comp = 1 - comp;
        if (ramified_at(comp)) return std::nullopt;
        return index_at(G_->dlog(prime_above_p_substitute(comp)));
    }

    /// W on a factored ideal; zero off the conductor.
    CycloValue value(const EIdeal& I) const {
        i64 e = value_order(), k = 0;
        for (const auto& [P, m] : I) {
            auto t = index_on_prime(P);
            if (!t) return CycloValue(0, e);
            k = mod(k + *t * m, e);
        }
        return CycloValue::zeta(e, k);
    }

    HeckeCharacter inverse() const {
        std::vector<i64> b = a_;
        for (auto& x : b) x = -x;
        return HeckeCharacter(G_, b);
    }

    friend HeckeCharacter operator*(const HeckeCharacter& u, const HeckeCharacter& v) {
        std::vector<i64> b = u.a_;
        for (std::size_t j = 0; j < b.size(); ++j) b[j] += v.a_[j];
        return HeckeCharacter(u.G_, b);
    }

    bool is_trivial() const {
        return std::all_of(a_.begin(), a_.end(), [](i64 x) { return x == 0; });
    }

    /// Trivial on the image of the ideals of F (norms a * conj(a)).
    bool is_anticyclotomic() const {
        // the F-ideals prime to p are generated mod p^n by (g) for a primitive root g
        if (G_->modulus() == 1) {
            // class group: (l) is principal, so every F-ideal is trivial
            return true;
        }
        for (i64 g = 2; g < G_->p(); ++g) {
            if (!is_prime(g) && g != 2) continue;
            if (index_at(G_->dlog_integer(g)) != 0) return false;
        }
        // also p-adic units 1 + p
        return index_at(G_->dlog_integer(1 + G_->p())) == 0;
    }

    /// Same test through the conjugation action on every SNF generator.
    bool is_anticyclotomic_by_generators() const {
        const auto& d = G_->invariants();
        for (std::size_t j = 0; j < d.size(); ++j) {
            std::vector<i64> x(d.size(), 0);
            x[j] = 1;
            if (index_at(G_->add(x, G_->conj(x))) != 0) return false;
        }
        return true;
    }

    /// Order of the character.
    i64 order() const {
        i64 o = 1;
        const auto& d = G_->invariants();
        for (std::size_t j = 0; j < d.size(); ++j) o = std::lcm(o, d[j] / std::gcd(d[j], a_[j]));
        return o;
    }

    /// Local component on (Z/p^c)^x at the given component: index of W on the residue u (other component 1).
    i64 local_index(int component, i64 u) const {
        return index_at(component == 0 ? G_->dlog_residues(u, 1) : G_->dlog_residues(1, u));
    }

private:
    void compute_conductor() {
        const RayClassGroup& G = *G_;
        int n = G.level();
        if (G.modulus() == 1) {
            conductor_ = {0, 0};
            return;
        }
        i64 p = G.p(), P = G.modulus();
        auto level_for = [&](int comp) {
            for (int a = 0; a < n; ++a) {
                // generator of {u = 1 mod p^a} inside (Z/p^n)^x
                bool trivial = true;
                std::vector<i64> gens;
                if (a == 0) {
                    for (i64 g = 2; g < p; ++g) gens.push_back(g);
                    gens.push_back(1 + p);
                } else {
                    gens.push_back(mod(1 + ipow(p, a), P));
                }
                for (i64 u : gens) {
                    if (mod(u, p) == 0) continue;
                    if (local_index(comp, u) != 0) {
                        trivial = false;
                        break;
                    }
                }
                if (trivial) return a;
            }
            return n;
        };
        conductor_ = {level_for(0), level_for(1)};
    }

    /// Ideal b prime to p with W(P_comp) = W(b)^{-1}: (lambda) = P_comp * b, lambda = 1 at the other component.
    EIdeal prime_above_p_substitute(int comp) const {
        const RayClassGroup& G = *G_;
        const CMContext& cm = G.cm();
        i64 p = G.p();
        i64 M = G.modulus() * p;
        // residues of lambda: p on component comp, 1 on the other, modulo p^(n+1)
        i64 r = G.component_root();
        i64 m = p;
        while (m < M) {
            m *= p;
            i64 f = mod(mulmod(r, r, m) - r + cm.order().n, m);
            r = mod(r - mulmod(f, invmod(mod(2 * r - 1, m), m), m), m);
        }
        i64 c1 = comp == 0 ? p : 1, c2 = comp == 0 ? 1 : p;
        // x + y r = c1, x + y (1 - r) = c2
        i64 y = mulmod(mod(c1 - c2, M), invmod(mod(2 * r - 1, M), M), M);
        i64 x = mod(c1 - mulmod(y, r, M), M);
        EIdeal f = cm.factor_element({x, y});
        EIdeal b;
        for (auto& [Q, k] : f) {
            if (Q.ell == p) continue;
            b.emplace_back(Q, -k);
        }
        return b;
    }

    std::shared_ptr<const RayClassGroup> G_;
    std::vector<i64> a_;
    std::pair<int, int> conductor_{0, 0};
};

/// Every character of the group, in flat-index order of exponent vectors.
inline std::vector<HeckeCharacter> characters_of(const std::shared_ptr<const RayClassGroup>& G) {
    std::vector<HeckeCharacter> out;
    std::size_t total = static_cast<std::size_t>(G->order());
    for (std::size_t i = 0; i < total; ++i) out.emplace_back(G, G->unflatten(i));
    return out;
}

/**
 * The cyclotomic character nu(m) = <N m> = N m / omega(N m) on ideals prime
 * to p, with values in 1 + p Z_p; nu o N on E-ideals.
 */
class CyclotomicFamily {
public:
    CyclotomicFamily(i64 p, int prec) : p_(p), prec_(prec) {
        if (p % 2 == 0 || !is_prime(p)) throw std::invalid_argument("CyclotomicFamily: p must be an odd prime");
    }

    i64 p() const { return p_; }
    int precision() const { return prec_; }

    /// nu(a) for a positive integer prime to p.
    Padic nu(i64 a) const {
        if (a % p_ == 0) throw std::domain_error("nu: argument divisible by p");
        Padic x = Padic::from_int(p_, a, prec_);
        return x / teichmuller(p_, a, prec_);
    }

    /// l_F(a) = log_p nu(a).
    Padic ell(i64 a) const {
        std::lock_guard<std::mutex> lock(cache_->mu);
        auto it = cache_->logs.find(a);
        if (it != cache_->logs.end()) return it->second;
        Padic v = iwasawa_log(nu(a));
        cache_->logs.emplace(a, v);
        return v;
    }

    /// nu(a)^s for integer s.
    Padic nu_pow(i64 a, i64 s) const { return nu(a).pow(s); }

    /// nu(a)^s for p-adic s, via exp(s log nu(a)).
    Padic nu_pow(i64 a, const Padic& s) const { return padic_exp(s * ell(a)); }

private:
    struct Cache {
        std::mutex mu;
        std::map<i64, Padic> logs;
    };
    i64 p_;
    int prec_;
    std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

}  // namespace rsk
