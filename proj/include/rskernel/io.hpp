#pragma once

/**
 * @file io.hpp
 * @brief JSON ingestion of newform tables and run configurations, and lossless
 * export/import of coefficient tables over Z, Z[zeta_n] and Q_p.
 */

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "cm_arith.hpp"
#include "cyclo.hpp"
#include "kernel_measures.hpp"
#include "padic.hpp"
#include "qexp_hecke.hpp"

namespace rsk {

using json = nlohmann::json;

inline constexpr const char* kNewformSchema = "rskernel/newform/v1";
inline constexpr const char* kTableSchema = "rskernel/coeff-table/v1";
inline constexpr const char* kConfigSchema = "rskernel/run-config/v1";

/// Malformed or inconsistent input: wrong schema tag, missing field, failed validation.
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

inline void write_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(1) << '\n';
}

inline void require_schema(const json& j, const char* tag) {
    if (!j.is_object() || !j.contains("$schema")) throw SchemaError(std::string("missing $schema tag, expected ") + tag);
    if (j["$schema"] != tag)
        throw SchemaError("schema mismatch: got " + j["$schema"].dump() + ", expected \"" + tag + "\"");
}

template <class T>
T field(const json& j, const char* key) {
    if (!j.contains(key)) throw SchemaError(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw SchemaError(std::string("field '") + key + "': " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Values

/// Integers, or "a/b" strings that must reduce to integers (rational Hecke eigenvalues are integral).
inline i64 parse_integral(const json& v, const std::string& where) {
    if (v.is_number_integer()) return v.get<i64>();
    if (v.is_string()) {
        std::string s = v.get<std::string>();
        auto slash = s.find('/');
        try {
            if (slash == std::string::npos) return std::stoll(s);
            Rational r = Rational::make(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
            if (r.den != 1) throw SchemaError(where + ": eigenvalue " + s + " is not integral");
            return r.num;
        } catch (const std::logic_error&) {
            throw SchemaError(where + ": cannot parse '" + s + "'");
        }
    }
    if (v.is_array()) throw BackendUnsupported(where + ": eigenvalues over a coefficient field basis are not supported");
    throw SchemaError(where + ": expected an integer or a rational string");
}

inline json to_json_value(i64 x) { return x; }

inline json to_json_value(const Padic& x) {
    std::ostringstream digits;
    digits << x.unit_part();
    return {{"digits", digits.str()}, {"prec", x.precision()}, {"val", x.valuation()}};
}

inline json to_json_value(const CycloValue& x) { return {{"conductor", x.conductor()}, {"coeffs", x.coeffs()}}; }

template <class V>
struct ValueCodec;

template <>
struct ValueCodec<i64> {
    static constexpr const char* ring = "integer";
    static i64 decode(const json& j, const json&) { return j.get<i64>(); }
};

template <>
struct ValueCodec<Padic> {
    static constexpr const char* ring = "padic";
    static Padic decode(const json& j, const json& header) {
        i64 p = field<i64>(header, "p");
        int prec = field<int>(j, "prec"), val = field<int>(j, "val");
        BigInt unit(field<std::string>(j, "digits"));
        if (unit == 0) return Padic::zero(p, prec);
        return Padic::from_parts(p, unit, prec, val);
    }
};

template <>
struct ValueCodec<CycloValue> {
    static constexpr const char* ring = "cyclotomic";
    static CycloValue decode(const json& j, const json&) {
        i64 n = field<i64>(j, "conductor");
        auto c = field<std::vector<i64>>(j, "coeffs");
        if (static_cast<i64>(c.size()) != n) throw SchemaError("cyclotomic value: coefficient count differs from conductor");
        CycloValue x(0, n);
        for (i64 k = 0; k < n; ++k)
            if (c[static_cast<std::size_t>(k)] != 0) x.add_monomial(n, k, c[static_cast<std::size_t>(k)]);
        return x;
    }
};

// ---------------------------------------------------------------------------
// Tables

/// Coefficients are stored as an array indexed by n - 1, so key order never varies.
template <class V>
json table_to_json(const CoeffTable<V>& t) {
    json j;
    j["$schema"] = kTableSchema;
    j["ring"] = ValueCodec<V>::ring;
    if constexpr (std::is_same_v<V, Padic>) j["p"] = t.zero.prime();
    j["bound"] = t.bound;
    j["weight"] = t.weight;
    j["level"] = t.level;
    json zero = to_json_value(t.zero);
    json coeffs = json::array();
    for (i64 n = 1; n <= t.bound; ++n) coeffs.push_back(to_json_value(t[n]));
    j["zero"] = zero;
    j["coefficients"] = coeffs;
    return j;
}

template <class V>
CoeffTable<V> table_from_json(const json& j) {
    require_schema(j, kTableSchema);
    if (field<std::string>(j, "ring") != ValueCodec<V>::ring)
        throw SchemaError("table ring is '" + j["ring"].get<std::string>() + "', expected '" + ValueCodec<V>::ring + "'");
    i64 bound = field<i64>(j, "bound");
    const json& coeffs = j.at("coefficients");
    if (!coeffs.is_array() || static_cast<i64>(coeffs.size()) != bound)
        throw SchemaError("table: coefficient count differs from bound");
    V zero = ValueCodec<V>::decode(j.at("zero"), j);
    CoeffTable<V> t = CoeffTable<V>::filled(bound, zero, field<int>(j, "weight"), field<i64>(j, "level"));
    for (i64 n = 1; n <= bound; ++n) t[n] = ValueCodec<V>::decode(coeffs[static_cast<std::size_t>(n - 1)], j);
    return t;
}

template <class V>
void export_table(const CoeffTable<V>& t, const std::string& path) {
    write_json(table_to_json(t), path);
}

template <class V>
CoeffTable<V> import_table(const std::string& path) {
    return table_from_json<V>(read_json(path));
}

// ---------------------------------------------------------------------------
// Newforms

/**
 * Fills a(n), n <= B, from prime-power eigenvalues: multiplicativity on
 * coprime parts, a(l^k) = a(l) a(l^{k-1}) - l a(l^{k-2}) at good l and
 * a(l^k) = a(l)^k at bad l. Supplied entries must agree with the extension.
 */
inline std::vector<i64> extend_eigenvalues(const std::map<i64, i64>& given, i64 level, i64 B, const std::string& label) {
    std::vector<i64> a(static_cast<std::size_t>(B + 1), 0);
    a[1] = 1;
    if (auto it = given.find(1); it != given.end() && it->second != 1) throw SchemaError(label + ": a(1) must be 1");
    SpfSieve sv(std::max<i64>(B, 2));
    for (i64 n = 2; n <= B; ++n) {
        Factorization f = sv.factor(n);
        i64 value;
        if (f.size() > 1) {
            i64 q = ipow(f[0].first, f[0].second);
            value = a[static_cast<std::size_t>(q)] * a[static_cast<std::size_t>(n / q)];
        } else if (f[0].second == 1) {
            auto it = given.find(n);
            if (it == given.end()) throw SchemaError(label + ": no eigenvalue for the prime " + std::to_string(n));
            value = it->second;
        } else {
            i64 l = f[0].first;
            value = a[static_cast<std::size_t>(l)] * a[static_cast<std::size_t>(n / l)];
            if (level % l != 0) value -= l * a[static_cast<std::size_t>(n / (l * l))];
        }
        auto it = given.find(n);
        if (it != given.end() && it->second != value)
            throw SchemaError(label + ": eigenvalue at " + std::to_string(n) + " is " + std::to_string(it->second) +
                              ", recursion gives " + std::to_string(value));
        a[static_cast<std::size_t>(n)] = value;
    }
    return a;
}

/**
 * Accepts either "coefficients" (a(1), a(2), ... as a list) or "eigenvalues"
 * (a map from "n" to a(n) for prime powers n). A map without "bound" is
 * extended up to the first prime it omits.
 */
inline NewformRecord newform_from_json(const json& j) {
    require_schema(j, kNewformSchema);
    NewformRecord f;
    f.label = field<std::string>(j, "label");
    if (j.contains("field") && j["field"] != "Q") throw BackendUnsupported(f.label + ": only newforms over Q are supported");
    if (j.contains("level") && j["level"].is_array())
        throw BackendUnsupported(f.label + ": factored levels need a totally real base field");
    f.level = field<i64>(j, "level");
    f.weight = field<int>(j, "weight");
    if (f.weight != 2) throw SchemaError(f.label + ": weight must be 2");
    if (j.contains("curve")) f.curve = field<CurveModel>(j, "curve");
    if (j.contains("coefficients")) {
        const json& c = j["coefficients"];
        if (!c.is_array() || c.empty()) throw SchemaError(f.label + ": empty coefficient list");
        f.a.push_back(0);
        for (std::size_t i = 0; i < c.size(); ++i) f.a.push_back(parse_integral(c[i], f.label + " a(" + std::to_string(i + 1) + ")"));
    } else if (j.contains("eigenvalues")) {
        const json& e = j["eigenvalues"];
        if (!e.is_object() || e.empty()) throw SchemaError(f.label + ": empty eigenvalue map");
        std::map<i64, i64> given;
        for (auto& [key, v] : e.items()) {
            i64 n;
            try {
                n = std::stoll(key);
            } catch (const std::logic_error&) {
                throw SchemaError(f.label + ": bad ideal label '" + key + "'");
            }
            if (n < 1 || factor(n).size() > 1) throw SchemaError(f.label + ": label " + key + " is not a prime power");
            given[n] = parse_integral(v, f.label + " a(" + key + ")");
        }
        i64 B;
        if (j.contains("bound")) B = field<i64>(j, "bound");
        else {
            B = 1;
            while (B + 1 <= given.rbegin()->first && (!is_prime(B + 1) || given.count(B + 1))) ++B;
            if (B < 2) throw SchemaError(f.label + ": eigenvalue map does not start at the prime 2");
        }
        f.a = extend_eigenvalues(given, f.level, B, f.label);
    } else {
        throw SchemaError(f.label + ": needs 'coefficients' or 'eigenvalues'");
    }
    try {
        f.validate();
    } catch (const std::invalid_argument& e) {
        throw SchemaError(e.what());
    }
    return f;
}

inline NewformRecord ingest_newform(const std::string& path) { return newform_from_json(read_json(path)); }

inline json newform_to_json(const NewformRecord& f) {
    json j;
    j["$schema"] = kNewformSchema;
    j["label"] = f.label;
    j["field"] = "Q";
    j["level"] = f.level;
    j["weight"] = f.weight;
    if (f.curve) j["curve"] = *f.curve;
    j["bound"] = f.bound();
    j["coefficients"] = std::vector<i64>(f.a.begin() + 1, f.a.end());
    return j;
}

// ---------------------------------------------------------------------------
// Run configuration

enum class CharacterMode { Ray, Anticyclotomic, Cyclotomic };

struct RunConfig {
    std::string field = "Q";
    i64 D = 7;  ///< E = Q(sqrt(-D))
    i64 N = 11;
    i64 p = 23;
    int prec = 20;
    i64 bound = 100;
    CharacterMode mode = CharacterMode::Anticyclotomic;
    int ray_level = 1;
    std::vector<std::size_t> indices;  ///< flat character indices; empty = all
    std::vector<i64> s_grid{0};
    std::string newform;  ///< path to a newform file
    std::string out;
    unsigned jobs = 1;

    /// Violated standing hypotheses, each named; empty when the configuration is usable.
    std::vector<std::string> diagnostics() const {
        std::vector<std::string> d;
        if (field != "Q") d.push_back("base field: only F = Q is implemented (got '" + field + "')");
        if (D <= 0 || mod(D, 4) != 3) d.push_back("CM field: need D > 0, D = 3 mod 4 squarefree so that Delta = D is odd");
        else
            for (auto [q, e] : factor(D))
                if (e > 1) d.push_back("CM field: D must be squarefree");
        if (p < 3 || !is_prime(p)) d.push_back("p must be an odd prime");
        if (N < 1) d.push_back("level N must be positive");
        if (D > 0 && std::gcd(D, 2 * N * p) != 1) d.push_back("coprimality: (Delta, 2 D_F N p) = 1 fails");
        if (N > 0 && p > 0 && N % p == 0) d.push_back("N must be prime to p");
        if (d.empty() && kronecker(-D, p) != 1) d.push_back("p must split in E");
        if (prec < 2) d.push_back("precision must be at least 2");
        if (bound < 1) d.push_back("bound must be positive");
        if (ray_level < 0) d.push_back("ray-class level must be nonnegative");
        return d;
    }

    KernelParams params() const {
        auto cm = std::make_shared<const CMContext>(CMContext::over_rationals(D));
        return KernelParams{cm, N, p, prec, jobs};
    }
};

inline RunConfig config_from_json(const json& j) {
    require_schema(j, kConfigSchema);
    RunConfig c;
    if (j.contains("field")) c.field = field<std::string>(j, "field");
    c.D = field<i64>(j, "D");
    c.N = field<i64>(j, "N");
    c.p = field<i64>(j, "p");
    if (j.contains("prec")) c.prec = field<int>(j, "prec");
    if (j.contains("bound")) c.bound = field<i64>(j, "bound");
    if (j.contains("newform")) c.newform = field<std::string>(j, "newform");
    if (j.contains("out")) c.out = field<std::string>(j, "out");
    if (j.contains("jobs")) c.jobs = field<unsigned>(j, "jobs");
    if (j.contains("characters")) {
        const json& ch = j["characters"];
        std::string mode = field<std::string>(ch, "mode");
        if (mode == "ray") c.mode = CharacterMode::Ray;
        else if (mode == "anticyclotomic") c.mode = CharacterMode::Anticyclotomic;
        else if (mode == "cyclotomic") c.mode = CharacterMode::Cyclotomic;
        else throw SchemaError("characters.mode must be ray, anticyclotomic or cyclotomic");
        if (ch.contains("level")) c.ray_level = field<int>(ch, "level");
        if (ch.contains("indices")) c.indices = field<std::vector<std::size_t>>(ch, "indices");
        if (ch.contains("s")) c.s_grid = field<std::vector<i64>>(ch, "s");
    }
    return c;
}

inline json config_to_json(const RunConfig& c) {
    static const char* modes[] = {"ray", "anticyclotomic", "cyclotomic"};
    json ch{{"mode", modes[static_cast<int>(c.mode)]}, {"level", c.ray_level}, {"indices", c.indices}, {"s", c.s_grid}};
    json j{{"$schema", kConfigSchema}, {"field", c.field}, {"D", c.D},       {"N", c.N},
           {"p", c.p},                 {"prec", c.prec},   {"bound", c.bound}, {"characters", ch},
           {"jobs", c.jobs}};
    if (!c.newform.empty()) j["newform"] = c.newform;
    if (!c.out.empty()) j["out"] = c.out;
    return j;
}

/// Characters selected by the configuration at its ray-class level.
inline std::vector<HeckeCharacter> selected_characters(const RunConfig& c, const std::shared_ptr<const CMContext>& cm) {
    auto G = std::make_shared<const RayClassGroup>(cm, c.p, c.ray_level);
    std::vector<HeckeCharacter> all = characters_of(G), out;
    if (c.mode == CharacterMode::Anticyclotomic) {
        for (auto& W : all)
            if (W.is_anticyclotomic()) out.push_back(W);
        return out;
    }
    if (c.indices.empty()) return all;
    for (std::size_t i : c.indices) {
        if (i >= all.size()) throw SchemaError("character index " + std::to_string(i) + " out of range");
        out.push_back(all[i]);
    }
    return out;
}

}  // namespace rsk
