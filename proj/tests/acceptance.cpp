// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "rskernel/height_kernel.hpp"
#include "rskernel/io.hpp"
#include "rskernel/lp.hpp"
#include "rskernel/verify.hpp"

using namespace rsk;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
};

std::shared_ptr<const CMContext> field(i64 D) { return std::make_shared<const CMContext>(CMContext::over_rationals(D)); }

std::vector<HeckeCharacter> anticyclotomic_up_to_level_one(const std::shared_ptr<const CMContext>& cm, i64 p) {
    std::vector<HeckeCharacter> out;
    for (int n : {0, 1})
        for (auto& W : characters_of(std::make_shared<const RayClassGroup>(cm, p, n)))
            if (W.is_anticyclotomic()) out.push_back(W);
    return out;
}

NewformRecord load(const std::string& label) { return ingest_newform(std::string(RSK_DATA_DIR) + "/" + label + ".json"); }

Outcome fe_vanishing(unsigned jobs) {
    KernelParams P{field(7), 11, 23, 20, jobs};
    const i64 B = 2000;
    auto [mn, ms] = source_bounds(P, B);
    std::size_t chars = 0, nonzero = 0;
    std::string first;
    for (auto& W : anticyclotomic_up_to_level_one(P.cm, 23)) {
        ++chars;
        HeckeSource src(P, W, mn, ms);
        auto b = phi_coeffs_raw(P, src, B);
        for (i64 m = 1; m <= B; ++m)
            if (!b[m].is_zero()) {
                if (first.empty()) first = "; first nonzero b(" + std::to_string(m) + ") = " + b[m].to_string();
                ++nonzero;
            }
    }
    return {nonzero == 0, std::to_string(chars) + " characters, m <= 2000, " + std::to_string(nonzero) + " nonzero" + first};
}

Outcome pairwise_fe(unsigned jobs) {
    Outcome o;
    std::ostringstream d;
    for (i64 N : {11, 3}) {
        KernelParams P{field(7), N, 23, 20, jobs};
        FunctionalEquationSummary s;
        for (auto& W : anticyclotomic_up_to_level_one(P.cm, 23)) accumulate_fe(s, P, W, 200);
        d << "N=" << N << " (eps(N)=" << P.cm->epsilon(N) << "): " << s.pairs << " pairs, " << s.pair_mismatches
          << " mismatches";
        if (s.pair_mismatches > 0) {
            o.ok = false;
            for (auto& e : s.examples)
                if (e.rfind("m = ", 0) == 0) {
                    d << " [" << e << "]";
                    break;
                }
        }
        d << "; ";
    }
    o.detail = d.str();
    return o;
}

Outcome gauss_sums() {
    CheckSummary all;
    all.merge(check_kappa_squares(200));
    for (i64 D : {7, 11, 19, 35}) all.merge(check_kappa_product(D));
    for (i64 p : {11, 23}) all.merge(check_gauss_pairs(field(7), p));
    std::ostringstream d;
    d << all.checked << " identities, max float error " << all.max_float_error;
    if (!all.ok()) d << "; " << all.failures.front();
    return {all.ok(), d.str()};
}

Outcome r_relations() {
    Outcome o;
    std::size_t checked = 0;
    for (i64 D : {7, 11, 35}) {
        auto rep = check_r_relations(CMContext::over_rationals(D), 5000);
        checked += rep.checked;
        if (!rep.ok()) {
            o.ok = false;
            o.detail += "D=" + std::to_string(D) + ": " + rep.failures.front() + "; ";
        }
    }
    o.detail += std::to_string(checked) + " relations at split primes, m <= 5000";
    return o;
}

Outcome operator_identity(unsigned jobs) {
    KernelParams P{field(7), 11, 23, 20, jobs};
    const i64 mmax = 23;
    RCountTable r(P.cm, mmax * ipow(23, 4) * 7 + 1);
    Outcome o;
    std::ostringstream d;
    for (i64 v : {3, 5, 13, 7}) {
        auto rep = verify_identity(P, r, v, mmax);
        std::size_t bad = 0;
        for (auto& row : rep.rows) bad += !row.ok;
        d << "v=" << v << ": " << rep.rows.size() - bad << "/" << rep.rows.size() << " coefficients; ";
        o.ok = o.ok && rep.rows_ok;
    }
    auto br = check_brackets(4);
    for (auto& b : br) {
        if (b.ok) continue;
        o.ok = false;
        d << "bracket t=" << b.t << " = (" << b.value[0] << "," << b.value[1] << "," << b.value[2] << ") expected ("
          << b.expected[0] << "," << b.expected[1] << "," << b.expected[2] << "); ";
    }
    o.detail = d.str();
    return o;
}

Outcome derivative_crosscheck(unsigned jobs) {
    KernelParams P{field(7), 11, 23, 20, jobs};
    CyclotomicFamily nu(23, 20);
    std::vector<i64> ms;
    for (i64 m = 23; m <= 500; m += 23) ms.push_back(m);
    auto fd = phi_derivative_fd(P, nu, ms, derivative_nodes(23));
    int worst = 1 << 20, worst_cert = 1 << 20;
    std::size_t nonzero = 0;
    for (std::size_t i = 0; i < ms.size(); ++i) {
        auto d = phi_derivative_coeff(P, nu, ms[i]);
        nonzero += !d.total.is_zero();
        worst = std::min(worst, std::min(agreement_digits(d.total, fd[i].value), 20));
        worst_cert = std::min(worst_cert, fd[i].certified_digits);
    }
    return {worst >= 16, std::to_string(ms.size()) + " coefficients (" + std::to_string(nonzero) +
                             " nonzero), min agreement " + std::to_string(worst) + " digits, min certified " +
                             std::to_string(worst_cert) + ", need 16"};
}

Outcome raw_closed(unsigned jobs) {
    KernelParams P{field(7), 11, 23, 20, jobs};
    CyclotomicFamily nu(23, 20);
    const i64 B = 500;
    auto [mn, msig] = source_bounds(P, B);
    int worst = 20;
    for (i64 s : {0, 23, 46}) {
        FamilySource src(P, nu, s, mn, msig);
        auto raw = phi_coeffs_raw(P, src, B);
        std::vector<int> agree(static_cast<std::size_t>(B + 1), 20);
        parallel_for(1, static_cast<std::size_t>(B + 1), jobs, [&](std::size_t m) {
            agree[m] = std::min(20, agreement_digits(raw[m], phi_coeff_closed(P, src, static_cast<i64>(m))));
        });
        for (i64 m = 1; m <= B; ++m) worst = std::min(worst, agree[static_cast<std::size_t>(m)]);
    }
    return {worst >= 18, "s in {0, 23, 46}, m <= 500, min agreement " + std::to_string(worst) + " digits, need 18"};
}

Outcome hecke_algebra() {
    Outcome o;
    std::ostringstream d;
    std::size_t checks = 0;
    for (const char* label : {"11a", "37a"}) {
        NewformRecord f = load(label);
        auto t = f.table();
        for (auto [m, n] : {std::pair<i64, i64>{2, 3}, {2, 5}, {3, 5}, {4, 9}, {5, 7}}) {
            if (std::gcd(m * n, f.level) != 1) continue;
            auto a = op_T(m, op_T(n, t)), b = op_T(m * n, t);
            for (i64 k = 1; k <= b.bound; ++k, ++checks)
                if (a[k] != b[k]) {
                    o.ok = false;
                    d << label << ": T(" << m << ")T(" << n << ") != T(" << m * n << ") at " << k << "; ";
                    break;
                }
        }
        for (i64 p : {3, 5}) {
            auto up = op_U(p, op_shift(p, t));
            for (i64 k = 1; k <= up.bound; ++k, ++checks)
                if (up[k] != t[k]) {
                    o.ok = false;
                    d << label << ": U(" << p << ")[" << p << "] != id; ";
                    break;
                }
            if (!f.ordinary_at(p)) {
                d << label << " skipped at p=" << p << " (a(p) = " << f.coeff(p) << " = 0 mod p); ";
                continue;
            }
            EigenSpan span = EigenSpan::stabilizations(f, p, 20, 100);
            Padic alpha = span.eigenvalues()[0];
            const auto& fa = span.basis()[0];
            auto ufa = op_U(p, fa);
            for (i64 k = 1; k <= ufa.bound; ++k, ++checks)
                if (ufa[k] != alpha * fa[k]) {
                    o.ok = false;
                    d << label << ": U f_alpha != alpha f_alpha at p=" << p << "; ";
                    break;
                }
            int agree = agreement_digits(span.l_f_alpha(to_padic(t, p, 20)), l_of_newform_closed(alpha, p));
            ++checks;
            if (agree < 18) {
                o.ok = false;
                d << label << " p=" << p << ": l(f) agrees to " << agree << " digits; ";
            }
        }
    }
    d << checks << " coefficient checks";
    o.detail = d.str();
    return o;
}

Outcome measure_fibers() {
    auto s = check_theta_fibers(field(7), 11, 500);
    std::string d = std::to_string(s.checked) + " class and fiber sums, m <= 500";
    if (!s.ok()) d += "; " + s.failures.front();
    return {s.ok(), d};
}

Outcome pipeline_zero(unsigned jobs) {
    NewformRecord f = load("11a");
    KernelParams P{field(7), 11, 23, 20, jobs};
    LpContext ctx(f, P, f.bound() / 23);
    Outcome o;
    std::size_t zeros = 0, total = 0;
    for (auto& W : anticyclotomic_up_to_level_one(P.cm, 23)) {
        ++total;
        Padic v = Lp_value(ctx, W);
        if (v.is_zero()) ++zeros;
        else o.ok = false;
    }
    CyclotomicFamily nu(23, 20);
    SyntheticFamily fam{&ctx, &nu, 2, 3};
    Padic a = Lp_derivative_analytic(ctx, fam.derivative());
    DerivativeEstimate b = Lp_derivative_fd(ctx, [&](i64 s) { return fam.at(s); }, derivative_nodes(23));
    int agree = std::min(20, agreement_digits(a, b.value));
    o.ok = o.ok && agree >= 16;
    o.detail = std::to_string(zeros) + "/" + std::to_string(total) + " anticyclotomic values zero; synthetic routes agree to " +
               std::to_string(agree) + " digits (certified " + std::to_string(b.certified_digits) + ", need 16)";
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance checks"};
    unsigned jobs = 1;
    app.add_option("--jobs", jobs, "worker threads");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"functional-equation vanishing", [&] { return fe_vanishing(jobs); }},
        {"pairwise functional equation", [&] { return pairwise_fe(jobs); }},
        {"Gauss-sum identities", [] { return gauss_sums(); }},
        {"r-relations and ideal counts", [] { return r_relations(); }},
        {"operator identity for local heights", [&] { return operator_identity(jobs); }},
        {"derivative cross-check", [&] { return derivative_crosscheck(jobs); }},
        {"raw/closed kernel agreement", [&] { return raw_closed(jobs); }},
        {"Hecke algebra on 11a and 37a", [] { return hecke_algebra(); }},
        {"theta measure fiber sums", [] { return measure_fibers(); }},
        {"L_p pipeline zero", [&] { return pipeline_zero(jobs); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.ok;
        std::printf("%s [%zu] %s (%.1fs): %s\n", o.ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs,
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
