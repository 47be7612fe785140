// Acceptance run: one PASS/FAIL line per criterion.
//
//   memheat_acceptance [--allow-fail <cell key>]...
//
// An allowed cell still prints FAIL; it only stops counting towards the exit
// status.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "memheat/experiments.hpp"
#include "memheat/kernel.hpp"
#include "memheat/solver.hpp"
#include "memheat/special_functions.hpp"
#include "oracles.hpp"

using namespace memheat;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::map<std::string, std::unique_ptr<ProfileTable>> g_profiles;

const ProfileTable& profile(double alpha, Rational beta) {
    const FractionalParams params{1, alpha, beta};
    const std::string key = std::to_string(alpha) + "/" + beta.to_string();
    auto& slot = g_profiles[key];
    if (!slot) slot = std::make_unique<ProfileTable>(build_profile(params, {}, 1e-6, 0));
    return *slot;
}

struct Outcome {
    bool pass = true;
    bool counted_fail = false;  // failing and not allowed
    std::string detail;
};

int g_failures = 0;

void report(int id, const std::string& title, const Outcome& o, double secs) {
    std::printf("criterion %d %s: %s (%s; %.1f s)\n", id, o.pass ? "PASS" : "FAIL", title.c_str(), o.detail.c_str(),
                secs);
    std::fflush(stdout);
    if (!o.pass && o.counted_fail) ++g_failures;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

const std::vector<std::pair<double, Rational>> kSix{{0.4, {3, 10}}, {0.4, {1, 2}}, {0.4, {1, 1}},
                                                    {0.7, {3, 10}}, {0.7, {1, 2}}, {0.7, {1, 1}}};

Outcome special_functions() {
    const auto t0 = Clock::now();
    double e1 = 0.0, e2 = 0.0, e3 = 0.0;
    for (int i = 0; i <= 300; ++i) {
        const double x = -30.0 + 0.1 * i;
        e1 = std::max(e1, std::abs(special::mittag_leffler({1.0, 1.0}, x) - std::exp(x)));
        // E(1,1) is evaluated as exp itself; E(1,3) = (e^x - 1 - x)/x^2 goes through quadrature.
        if (x <= -1.0)
            e1 = std::max(e1, std::abs(special::mittag_leffler({1.0, 3.0}, x) - (std::expm1(x) - x) / (x * x)));
    }
    for (int i = 0; i <= 500; ++i) {
        const double x = 0.01 * i;
        e2 = std::max(e2, std::abs(special::mittag_leffler({0.5, 1.0}, -x) - oracle::scaled_erfc(x)));
    }
    for (double a : {0.3, 0.5, 0.75, 0.95}) {
        for (double b : {a, 1.0}) {
            for (int i = 0; i <= 200; ++i) {
                const double x = -100.0 + 0.5 * i;
                const double rhs = x * special::mittag_leffler({a, a + b}, x) + special::rgamma(b);
                e3 = std::max(e3, std::abs(special::mittag_leffler({a, b}, x) - rhs));
            }
        }
    }
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = e1 <= 1e-10 && e2 <= 1e-9 && e3 <= 1e-9 && secs < 1.0;
    o.counted_fail = !o.pass;
    o.detail = "exp err " + fmt("%.1e", e1) + ", erfc err " + fmt("%.1e", e2) + ", recurrence err " + fmt("%.1e", e3);
    return o;
}

Outcome kernel_mass() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (const auto& [a, b] : kSix) {
        const double m = profile(a, b).mass();
        worst = std::max(worst, std::abs(m * std::tgamma(a) - 1.0));
    }
    Outcome o;
    o.pass = worst <= 1e-5 && seconds_since(t0) < 120.0;
    o.counted_fail = !o.pass;
    o.detail = "worst relative mass error " + fmt("%.1e", worst) + " over 6 profiles";
    return o;
}

Outcome profile_bounds() {
    const ProfileTable& p3 = profile(0.5, {3, 10});
    const double far = (p3.value(100.0) * std::pow(100.0, 1.6)) / (p3.value(50.0) * std::pow(50.0, 1.6));
    const ProfileTable& p25 = profile(0.5, {1, 4});
    double lo = INFINITY, hi = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double r = 1e-4 * std::pow(0.5 / 1e-4, i / 100.0);
        const double v = p25.value(r) / (1.0 + std::abs(std::log(r)));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double sigma = check_kernel_bounds(profile(0.5, {1, 1}), 1.0).sigma_exp;
    Outcome o;
    o.pass = std::abs(far - 1.0) <= 0.1 && hi / lo <= 5.0 && sigma > 0.0;
    o.counted_fail = !o.pass;
    o.detail = "far ratio " + fmt("%.4f", far) + ", near spread " + fmt("%.3f", hi / lo) + ", sigma_exp " +
               fmt("%.4f", sigma);
    return o;
}

Outcome norm_scaling() {
    double worst = 0.0;
    int checks = 0;
    for (const auto& [a, b] : kSix) {
        const ProfileTable& prof = profile(a, b);
        std::vector<double> ps{1.0, 2.0};
        if (b.value() > 0.25) ps.push_back(kInf);
        for (double p : ps) {
            const double slope = std::log10(lp_norm_Y(p, 10.0, prof) / lp_norm_Y(p, 1.0, prof));
            worst = std::max(worst, std::abs(slope + derive_exponents(prof.params(), p).sigma_p));
            ++checks;
        }
    }
    Outcome o;
    o.pass = worst <= 1e-12;
    o.counted_fail = !o.pass;
    o.detail = "worst slope error " + fmt("%.1e", worst) + " over " + std::to_string(checks) + " norms";
    return o;
}

Outcome solver_oracle() {
    const auto t0 = Clock::now();
    std::mt19937 rng(20261017);
    std::uniform_real_distribution<double> lr(-1.0, 1.5), lt(-1.0, 3.0);
    const Forcing f{1.0, 1.0, 1.0};
    double worst = 0.0;
    for (const auto& [a, b] : kSix) {
        const ProfileTable& prof = profile(a, b);
        for (int k = 0; k < 3; ++k) {
            const double r = std::pow(10.0, lr(rng)), t = std::pow(10.0, lt(rng));
            const double want = oracle::mild_solution_1d(prof, f, r, t);
            worst = std::max(worst, std::abs(mild_solution(r, t, f, prof) / want - 1.0));
        }
    }
    Outcome o;
    o.pass = worst <= 1e-3 && seconds_since(t0) < 300.0;
    o.counted_fail = !o.pass;
    o.detail = "worst relative difference " + fmt("%.1e", worst) + " over 18 points";
    return o;
}

Outcome mass_identity() {
    const ProfileTable& prof = profile(0.5, {1, 1});
    const Forcing f{0.0, 1.0, 1.0};
    double worst = 0.0;
    for (double t : {1.0, 10.0}) {
        const double want = 2.0 * std::sqrt(t) / std::tgamma(1.5);
        worst = std::max(worst, std::abs(region_lp_norm(t, 1.0, Global{}, f, prof) / want - 1.0));
    }
    Outcome o;
    o.pass = worst <= 1e-3;
    o.counted_fail = !o.pass;
    o.detail = "worst relative error " + fmt("%.1e", worst);
    return o;
}

std::vector<VerificationReport> run_matrix() {
    std::vector<VerificationReport> reps;
    auto run = [&](Rational beta, RegionSpec region, double p, double gamma) {
        VerifyConfig c;
        c.params = FractionalParams{1, 0.5, beta};
        c.region = region;
        c.p = p;
        c.gamma = gamma;
        reps.push_back(verify_rate(c, profile(0.5, beta), 0));
    };
    const Rational b1{1, 1}, b5{1, 2}, b3{3, 10}, b25{1, 4};
    for (double p : {1.0, 2.0})
        for (double g : {0.5, 1.5}) run(b1, Exterior{1.0}, p, g);
    for (double g : {0.5, 2.0}) run(b5, CompactBall{1.0}, kInf, g);
    for (double g : {0.5, 2.0}) run(b3, CompactBall{1.0}, kInf, g);
    run(b25, CompactBall{1.0}, kInf, 2.0);
    const double theta = FractionalParams{1, 0.5, b1}.theta();
    for (double g : {0.5, 1.5}) run(b1, Intermediate{theta / 2, 1.0, 2.0}, kInf, g);
    run(b3, Global{}, 2.5, 0.5);
    run(b3, Global{}, 4.0, 0.5);
    run(b3, Global{}, 4.0, 2.0);
    return reps;
}

std::string matrix_csv(const std::vector<VerificationReport>& reps) {
    std::ostringstream out;
    write_verification_csv(reps, out);
    return out.str();
}

Outcome theorem_matrix(const std::vector<VerificationReport>& reps, double secs, const std::set<std::string>& allowed) {
    Outcome o;
    int passed = 0, allowed_fail = 0, incoherent = 0;
    for (const VerificationReport& r : reps) {
        const DominantRate d =
            predicted_rate(r.config.params, r.config.gamma, r.config.p, r.config.region).dominant(
                std::holds_alternative<Intermediate>(r.config.region) ? std::get<Intermediate>(r.config.region).omega
                                                                      : 0.0);
        const bool coherent = d.t_pow == r.predicted_slope && d.log_pow == r.predicted_log_pow;
        if (!coherent) ++incoherent;
        const bool ok = r.pass && coherent;
        std::printf("  %-4s %s slope %.4f (predicted %.4f, log^%d) err %.4f spread %.2f verdict %s%s%s\n",
                    ok ? "ok" : "FAIL", r.key().c_str(), r.measured_slope, r.predicted_slope, r.predicted_log_pow,
                    r.slope_error, r.spread, log_verdict_label(r.log_verdict), r.note.empty() ? "" : "; ",
                    r.note.c_str());
        if (ok) {
            ++passed;
        } else if (allowed.count(r.key())) {
            ++allowed_fail;
        } else {
            o.counted_fail = true;
        }
    }
    if (secs >= 600.0) o.counted_fail = true;
    o.pass = passed == static_cast<int>(reps.size()) && secs < 600.0;
    o.detail = std::to_string(passed) + "/" + std::to_string(reps.size()) + " cells pass";
    if (allowed_fail > 0) o.detail += ", " + std::to_string(allowed_fail) + " failing cell(s) on the allow list";
    if (incoherent > 0) o.detail += ", " + std::to_string(incoherent) + " incoherent predictions";
    return o;
}

Outcome ksz() {
    const KszCheck k = ksz_limit_check(profile(0.5, {1, 1}), Forcing{2.0, 1.0, 1.0}, 2.0, log_grid(1e2, 1e4, 16), 1e-6, 0);
    Outcome o;
    o.pass = k.pass && std::abs(k.m_infinity - 2.0) < 1e-12;
    o.counted_fail = !o.pass;
    o.detail = "M_inf " + fmt("%.6f", k.m_infinity) + ", final ratio " + fmt("%.4f", k.final_ratio) +
               (k.decreasing ? ", decreasing" : ", not decreasing");
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<std::string> allowed;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--allow-fail" && i + 1 < argc) {
            allowed.insert(argv[++i]);
        } else {
            std::cerr << "usage: memheat_acceptance [--allow-fail <cell key>]...\n";
            return 1;
        }
    }

    auto timed = [](int id, const std::string& title, auto fn) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.counted_fail = true;
            o.detail = std::string("exception: ") + e.what();
        }
        report(id, title, o, seconds_since(t0));
    };

    timed(1, "Mittag-Leffler identities", special_functions);
    timed(2, "kernel mass", kernel_mass);
    timed(3, "profile bounds", profile_bounds);
    timed(4, "exact norm scaling", norm_scaling);
    timed(5, "solver vs brute force", solver_oracle);
    timed(6, "mass identity", mass_identity);

    std::vector<VerificationReport> first;
    {
        const auto t0 = Clock::now();
        Outcome o;
        double secs = 0.0;
        try {
            first = run_matrix();
            secs = seconds_since(t0);
            o = theorem_matrix(first, secs, allowed);
        } catch (const std::exception& e) {
            o.pass = false;
            o.counted_fail = true;
            o.detail = std::string("exception: ") + e.what();
            secs = seconds_since(t0);
        }
        report(7, "theorem verification matrix", o, secs);
    }
    timed(8, "subcritical limit", ksz);
    timed(9, "determinism", [&] {
        Outcome o;
        if (first.empty()) {
            o.pass = false;
            o.counted_fail = true;
            o.detail = "matrix did not run";
            return o;
        }
        const std::string a = matrix_csv(first);
        const std::string b = matrix_csv(run_matrix());
        o.pass = a == b;
        o.counted_fail = !o.pass;
        o.detail = o.pass ? std::to_string(a.size()) + " identical bytes" : "CSV bytes differ";
        return o;
    });

    return g_failures == 0 ? 0 : 2;
}
