// Command-line front end: kernel tables, self-checks and p-adic L-values as
// newline-delimited JSON. Exit codes: 0 success, 1 failed check, 2 bad usage
// or configuration.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "rskernel/height_kernel.hpp"
#include "rskernel/io.hpp"
#include "rskernel/kernel_measures.hpp"
#include "rskernel/lp.hpp"
#include "rskernel/verify.hpp"

#ifndef RSK_DATA_DIR
#define RSK_DATA_DIR "data"
#endif

namespace {

using namespace rsk;

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

struct ConfigError : std::runtime_error {
    std::vector<std::string> diagnostics;
    explicit ConfigError(std::vector<std::string> d) : std::runtime_error("invalid configuration"), diagnostics(std::move(d)) {}
};

struct Globals {
    std::string config;
    i64 bound = 0;
    int prec = 0;
    std::string out;
    unsigned jobs = 0;
};

class Sink {
public:
    explicit Sink(const std::string& path) {
        if (path.empty()) return;
        file_.open(path);
        if (!file_) throw std::runtime_error("cannot write " + path);
        os_ = &file_;
    }
    void emit(const json& j) { *os_ << j.dump() << '\n'; }

private:
    std::ofstream file_;
    std::ostream* os_ = &std::cout;
};

RunConfig load_config(const Globals& g) {
    RunConfig c;
    if (!g.config.empty()) c = config_from_json(read_json(g.config));
    if (g.bound > 0) c.bound = g.bound;
    if (g.prec > 0) c.prec = g.prec;
    if (!g.out.empty()) c.out = g.out;
    if (g.jobs > 0) c.jobs = g.jobs;
    if (c.newform.empty()) c.newform = std::string(RSK_DATA_DIR) + "/11a.json";
    auto d = c.diagnostics();
    if (!d.empty()) throw ConfigError(d);
    return c;
}

json character_json(const HeckeCharacter& W) {
    auto [c0, c1] = W.conductor();
    return {{"level", W.group().level()},
            {"exponents", W.exponents()},
            {"conductor", {c0, c1}},
            {"anticyclotomic", W.is_anticyclotomic()}};
}

template <class V>
json values_json(const std::vector<V>& v, std::size_t from = 1) {
    json a = json::array();
    for (std::size_t i = from; i < v.size(); ++i) a.push_back(to_json_value(v[i]));
    return a;
}

json summary_json(const CheckSummary& s) {
    return {{"checked", s.checked}, {"ok", s.ok()}, {"failures", s.failures}, {"max_float_error", s.max_float_error}};
}

/// phi(d) = W(d O_E)^{-1} is trivial on every prime below the bound.
bool phi_is_trivial(const HeckeCharacter& W, i64 lmax) {
    const CMContext& cm = W.group().cm();
    for (i64 l : primes_up_to(lmax)) {
        if (l == W.group().p()) continue;
        EIdeal I;
        for (const EPrime& P : cm.eprimes_above(l)) I.emplace_back(P, P.type == Splitting::Ramified ? 2 : 1);
        if (W.value(I) != CycloValue(1, 1)) return false;
    }
    return true;
}

std::vector<i64> default_places(const KernelParams& P) {
    std::vector<i64> v = P.cm->ramified_primes();
    for (i64 l : primes_up_to(13))
        if (l != P.p && P.cm->split_type(l) == Splitting::Inert) v.push_back(l);
    return v;
}

// ---------------------------------------------------------------------------
// Verbs

int run_theta(const RunConfig& c, Sink& out) {
    KernelParams P = c.params();
    for (const auto& W : selected_characters(c, P.cm)) {
        auto [mn, ms] = source_bounds(P, c.bound);
        HeckeSource src(P, W, mn, ms);
        std::vector<CycloValue> v(static_cast<std::size_t>(c.bound + 1));
        for (i64 m = 1; m <= c.bound; ++m) v[static_cast<std::size_t>(m)] = theta_coeff(src, m);
        out.emit({{"verb", "theta"}, {"character", character_json(W)}, {"coefficients", values_json(v)}});
    }
    return kOk;
}

int run_eisenstein(const RunConfig& c, Sink& out) {
    KernelParams P = c.params();
    for (const auto& W : selected_characters(c, P.cm)) {
        auto [mn, ms] = source_bounds(P, c.bound);
        HeckeSource src(P, W, mn, ms);
        bool trivial = phi_is_trivial(W, std::max<i64>(100, 4 * c.p));
        for (i64 delta : P.deltas()) {
            std::vector<CycloValue> v(static_cast<std::size_t>(c.bound + 1));
            for (i64 m = 1; m <= c.bound; ++m) v[static_cast<std::size_t>(m)] = eisenstein_coeff(P, src, delta, m);
            Rational a0 = eisenstein_const(P, trivial, delta);
            out.emit({{"verb", "eisenstein"},
                      {"character", character_json(W)},
                      {"delta", delta},
                      {"constant", std::to_string(a0.num) + "/" + std::to_string(a0.den)},
                      {"coefficients", values_json(v)}});
        }
    }
    return kOk;
}

int run_phi_raw(const RunConfig& c, Sink& out) {
    KernelParams P = c.params();
    for (const auto& W : selected_characters(c, P.cm)) {
        auto [mn, ms] = source_bounds(P, c.bound);
        HeckeSource src(P, W, mn, ms);
        auto v = phi_coeffs_raw(P, src, c.bound);
        bool zero = true;
        for (std::size_t m = 1; m < v.size(); ++m) zero = zero && v[m].is_zero();
        out.emit({{"verb", "phi-raw"}, {"character", character_json(W)}, {"vanishes", zero}, {"coefficients", values_json(v)}});
    }
    return kOk;
}

int run_phi(const RunConfig& c, Sink& out) {
    KernelParams P = c.params();
    CyclotomicFamily nu(c.p, c.prec);
    auto [mn, ms] = source_bounds(P, c.bound);
    for (i64 s : c.s_grid) {
        FamilySource src(P, nu, s, mn, ms);
        std::vector<Padic> v(static_cast<std::size_t>(c.bound + 1), src.zero());
        parallel_for(1, static_cast<std::size_t>(c.bound + 1), P.jobs,
                     [&](std::size_t m) { v[m] = phi_coeff_closed(P, src, static_cast<i64>(m)); });
        out.emit({{"verb", "phi"}, {"s", s}, {"p", c.p}, {"coefficients", values_json(v)}});
    }
    return kOk;
}

int run_phi_deriv(const RunConfig& c, Sink& out) {
    KernelParams P = c.params();
    CyclotomicFamily nu(c.p, c.prec);
    std::vector<i64> ms;
    for (i64 m = c.p; m <= c.bound; m += c.p) ms.push_back(m);
    auto fd = phi_derivative_fd(P, nu, ms, derivative_nodes(c.p));
    bool ok = true;
    for (std::size_t i = 0; i < ms.size(); ++i) {
        PhiDerivative d = phi_derivative_coeff(P, nu, ms[i]);
        int agree = std::min(agreement_digits(d.total, fd[i].value), fd[i].certified_digits);
        bool row_ok = agree >= c.prec - 4;
        ok = ok && row_ok;
        json places = json::array();
        for (const auto& pl : d.places)
            places.push_back({{"place", pl.ell},
                              {"type", pl.type == Splitting::Inert ? "inert" : "ramified"},
                              {"value", to_json_value(pl.value)}});
        out.emit({{"verb", "phi-deriv"},
                  {"m", ms[i]},
                  {"total", to_json_value(d.total)},
                  {"places", places},
                  {"finite_difference", to_json_value(fd[i].value)},
                  {"certified_digits", fd[i].certified_digits},
                  {"agreement_digits", agree},
                  {"ok", row_ok}});
    }
    return ok ? kOk : kFailed;
}

int run_psi(const RunConfig& c, const std::vector<i64>& places_in, Sink& out) {
    KernelParams P = c.params();
    CyclotomicFamily nu(c.p, c.prec);
    RCountTable r(P.cm, c.bound * P.Delta() + 1);
    std::vector<i64> places = places_in.empty() ? default_places(P) : places_in;
    for (i64 v : places) {
        std::vector<i64> ints(static_cast<std::size_t>(c.bound + 1), 0);
        std::vector<Padic> vals(static_cast<std::size_t>(c.bound + 1), Padic::zero(c.p, c.prec));
        parallel_for(1, static_cast<std::size_t>(c.bound + 1), P.jobs, [&](std::size_t m) {
            ints[m] = psi_v_integer(P, r, v, static_cast<i64>(m), PRestriction::None);
            vals[m] = nu.ell(v) * Padic::from_int(c.p, ints[m], c.prec);
        });
        Splitting t = P.cm->split_type(v);
        out.emit({{"verb", "psi"},
                  {"place", v},
                  {"type", t == Splitting::Inert ? "inert" : t == Splitting::Ramified ? "ramified" : "split"},
                  {"integer", values_json(ints)},
                  {"values", values_json(vals)}});
    }
    return kOk;
}

int run_verify_fe(const RunConfig& c, i64 perturb, Sink& out) {
    KernelParams P = c.params();
    FunctionalEquationSummary s;
    for (const auto& W : selected_characters(c, P.cm)) accumulate_fe(s, P, W, c.bound, perturb);
    // vanishing is forced when eps(N) = (-1)^{g-1} and W is anticyclotomic
    bool expect_zero = P.cm->epsilon(P.N) == 1 && c.mode == CharacterMode::Anticyclotomic;
    bool ok = s.pair_mismatches == 0 && (!expect_zero || s.nonzero_totals == 0);
    out.emit({{"verb", "verify fe"},
              {"characters", s.characters},
              {"coefficients", s.coefficients},
              {"pairs", s.pairs},
              {"vanishing_expected", expect_zero},
              {"nonzero_totals", s.nonzero_totals},
              {"pair_mismatches", s.pair_mismatches},
              {"examples", s.examples},
              {"ok", ok}});
    return ok ? kOk : kFailed;
}

int run_verify_identity(const RunConfig& c, const std::vector<i64>& places_in, Sink& out) {
    KernelParams P = c.params();
    const i64 p4 = ipow(c.p, 4);
    const i64 mmax = std::max<i64>(1, c.bound / p4);
    RCountTable r(P.cm, mmax * p4 * P.Delta() + 1);
    std::vector<i64> places = places_in.empty() ? default_places(P) : places_in;
    bool ok = true;
    for (i64 v : places) {
        IdentityReport rep = verify_identity(P, r, v, mmax);
        json rows = json::array();
        for (auto& row : rep.rows) rows.push_back({{"m", row.m}, {"lhs", row.lhs}, {"rhs", row.rhs}, {"ok", row.ok}});
        json br = json::array();
        for (auto& b : rep.brackets) br.push_back({{"t", b.t}, {"value", b.value}, {"expected", b.expected}, {"ok", b.ok}});
        ok = ok && rep.rows_ok && rep.brackets_ok;
        out.emit({{"verb", "verify operator-identity"},
                  {"place", v},
                  {"m_max", mmax},
                  {"rows_ok", rep.rows_ok},
                  {"brackets_ok", rep.brackets_ok},
                  {"rows", rows},
                  {"brackets", br}});
    }
    return ok ? kOk : kFailed;
}

int run_verify_gauss(const RunConfig& c, Sink& out) {
    KernelParams P = c.params();
    CheckSummary squares = check_kappa_squares(200);
    CheckSummary product = check_kappa_product(c.D);
    CheckSummary pairs = check_gauss_pairs(P.cm, c.p);
    bool ok = squares.ok() && product.ok() && pairs.ok();
    out.emit({{"verb", "verify gauss"},
              {"kappa_squares", summary_json(squares)},
              {"kappa_product", summary_json(product)},
              {"tau_pairs", summary_json(pairs)},
              {"ok", ok}});
    return ok ? kOk : kFailed;
}

int run_verify_r(const RunConfig& c, Sink& out) {
    KernelParams P = c.params();
    RRelationReport rep = check_r_relations(*P.cm, c.bound);
    out.emit({{"verb", "verify r-relations"}, {"checked", rep.checked}, {"failures", rep.failures}, {"ok", rep.ok()}});
    return rep.ok() ? kOk : kFailed;
}

json constants_json(const InterpolationConstants& k) {
    json tau = json::array();
    for (const auto& g : k.tau) {
        auto z = g.normalized();
        tau.push_back({{"sum", to_json_value(g.sum)},
                       {"conductor_exponent", g.conductor_exponent},
                       {"unramified", g.unramified},
                       {"normalized", {z.real(), z.imag()}}});
    }
    return {{"tau", tau},
            {"tau_convention", k.tau_convention},
            {"conductor_norm_sqrt", {{"outside", k.conductor_norm_sqrt.outside}, {"inside", k.conductor_norm_sqrt.inside}}},
            {"Vp", to_json_value(k.Vp)},
            {"alpha_conductor", to_json_value(k.alpha_conductor)},
            {"W_dF", to_json_value(k.W_dF)},
            {"Wbar_Delta", to_json_value(k.Wbar_Delta)}};
}

LpContext make_lp(const RunConfig& c) {
    NewformRecord f = ingest_newform(c.newform);
    KernelParams P = c.params();
    return LpContext(f, P, f.bound() / c.p);
}

int run_lp_eval(const RunConfig& c, bool synthetic, Sink& out) {
    LpContext ctx = make_lp(c);
    json head{{"alpha", to_json_value(ctx.alpha())}, {"Hp", to_json_value(Hp_factor(ctx))}, {"exceptional", ctx.exceptional()}};
    if (synthetic) {
        CyclotomicFamily nu(c.p, c.prec);
        SyntheticFamily fam{&ctx, &nu};
        for (i64 s : c.s_grid) {
            Padic v = Lp_value(ctx, fam.at(s));
            Padic expect = Hp_factor(ctx) * nu.nu_pow(fam.a, s);
            out.emit({{"verb", "lp eval"}, {"synthetic", true}, {"s", s}, {"value", to_json_value(v)},
                      {"expected", to_json_value(expect)}, {"context", head}});
        }
        return kOk;
    }
    bool ok = true;
    for (const auto& W : selected_characters(c, ctx.params().cm)) {
        json rec{{"verb", "lp eval"}, {"character", character_json(W)}, {"context", head}};
        try {
            rec["value"] = to_json_value(Lp_value(ctx, W));
        } catch (const NotInSpan& e) {
            ok = false;
            rec["not_in_span"] = e.what();
        }
        try {
            rec["constants"] = constants_json(interpolation_constants(ctx, W));
        } catch (const std::domain_error& e) {
            rec["constants_error"] = e.what();
        }
        out.emit(rec);
    }
    return ok ? kOk : kFailed;
}

int run_lp_derivative(const RunConfig& c, bool synthetic, Sink& out) {
    LpContext ctx = make_lp(c);
    CyclotomicFamily nu(c.p, c.prec);
    json rec{{"verb", "lp derivative"}, {"synthetic", synthetic}};
    try {
        Padic a;
        DerivativeEstimate b;
        if (synthetic) {
            SyntheticFamily fam{&ctx, &nu};
            a = Lp_derivative_analytic(ctx, fam.derivative());
            b = Lp_derivative_fd(ctx, [&](i64 s) { return fam.at(s); }, derivative_nodes(c.p));
        } else {
            a = Lp_value_from_up(ctx, up_phi_prime_table(ctx, nu));
            KernelParams P = ctx.params();
            auto [mn, ms] = source_bounds(P, ctx.table_bound());
            auto family = [&](i64 s) {
                FamilySource src(P, nu, s, mn, ms);
                CoeffTable<Padic> t = CoeffTable<Padic>::filled(ctx.table_bound(), src.zero(), 2, P.N * P.Delta() * P.p);
                for (i64 m = 1; m <= t.bound; ++m) t[m] = phi_coeff_closed(P, src, m);
                return t;
            };
            b = Lp_derivative_fd(ctx, family, derivative_nodes(c.p));
        }
        int agree = std::min(agreement_digits(a, b.value), b.certified_digits);
        rec["analytic"] = to_json_value(a);
        rec["finite_difference"] = to_json_value(b.value);
        rec["certified_digits"] = b.certified_digits;
        rec["agreement_digits"] = agree;
        rec["ok"] = agree >= c.prec - 4;
        out.emit(rec);
        return agree >= c.prec - 4 ? kOk : kFailed;
    } catch (const NotInSpan& e) {
        rec["not_in_span"] = e.what();
        rec["ok"] = false;
        out.emit(rec);
        return kFailed;
    }
}

void error_record(const std::string& kind, const std::string& msg, const std::vector<std::string>& diags = {}) {
    json j{{"error", kind}, {"message", msg}};
    if (!diags.empty()) j["diagnostics"] = diags;
    std::cout << j.dump() << '\n';
    std::cerr << "error: " << msg << '\n';
    for (auto& d : diags) std::cerr << "  " << d << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rankin-Selberg kernel toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config, "run configuration JSON");
    app.add_option("--bound", g.bound, "coefficient bound B");
    app.add_option("--prec", g.prec, "p-adic precision M");
    app.add_option("--out", g.out, "write records here instead of stdout");
    app.add_option("--jobs", g.jobs, "worker threads");

    std::vector<i64> places;
    i64 perturb = 0;
    bool synthetic = false;

    auto* theta = app.add_subcommand("theta", "r_W(m) for the selected characters");
    auto* eis = app.add_subcommand("eisenstein", "Eisenstein coefficients for each delta | Delta");
    auto* phi = app.add_subcommand("phi", "collapsed kernel b(m) for the cyclotomic family on the s-grid");
    auto* phi_raw = app.add_subcommand("phi-raw", "kernel b(m) summed term by term");
    auto* phi_deriv = app.add_subcommand("phi-deriv", "b'(m) per place, with a finite-difference cross-check");
    auto* psi = app.add_subcommand("psi", "local height sums Psi_v(m)");
    psi->add_option("--place", places, "places v (rational primes); default: ramified and small inert");

    auto* verify = app.add_subcommand("verify", "self-checks");
    verify->require_subcommand(1);
    auto* v_fe = verify->add_subcommand("fe", "functional-equation pairing and vanishing");
    v_fe->add_option("--perturb", perturb, "add 1 to b(m) at this m before checking");
    auto* v_id = verify->add_subcommand("operator-identity", "(U^4 - U^2) Psi^{[p]} = (U - 1)^4 Psi");
    v_id->add_option("--place", places, "places v; default: ramified and small inert");
    auto* v_gauss = verify->add_subcommand("gauss", "kappa and tau identities");
    auto* v_r = verify->add_subcommand("r-relations", "ideal-count relations at split primes");

    auto* lp = app.add_subcommand("lp", "p-adic L-values");
    lp->require_subcommand(1);
    auto* lp_eval = lp->add_subcommand("eval", "L-value per selected character");
    lp_eval->add_flag("--synthetic", synthetic, "evaluate c(s) f_alpha + d(s) f_beta on the s-grid");
    auto* lp_der = lp->add_subcommand("derivative", "cyclotomic derivative by two routes");
    lp_der->add_flag("--synthetic", synthetic, "use c(s) f_alpha + d(s) f_beta");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        RunConfig c = load_config(g);
        Sink out(c.out);
        if (*theta) return run_theta(c, out);
        if (*eis) return run_eisenstein(c, out);
        if (*phi) return run_phi(c, out);
        if (*phi_raw) return run_phi_raw(c, out);
        if (*phi_deriv) return run_phi_deriv(c, out);
        if (*psi) return run_psi(c, places, out);
        if (*v_fe) return run_verify_fe(c, perturb, out);
        if (*v_id) return run_verify_identity(c, places, out);
        if (*v_gauss) return run_verify_gauss(c, out);
        if (*v_r) return run_verify_r(c, out);
        if (*lp_eval) return run_lp_eval(c, synthetic, out);
        if (*lp_der) return run_lp_derivative(c, synthetic, out);
    } catch (const ConfigError& e) {
        error_record("config", e.what(), e.diagnostics);
        return kUsage;
    } catch (const SchemaError& e) {
        error_record("schema", e.what());
        return kUsage;
    } catch (const BackendUnsupported& e) {
        error_record("unsupported", e.what());
        return kUsage;
    } catch (const std::exception& e) {
        error_record("runtime", e.what());
        return kUsage;
    }
    return kUsage;
}
