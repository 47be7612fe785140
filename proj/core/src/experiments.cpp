#include "memheat/experiments.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "memheat/errors.hpp"
#include "memheat/parallel.hpp"

namespace memheat {
namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    std::string s = buf;
    if (s.rfind("-0.", 0) == 0 && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

std::string shortest(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

struct Line {
    double slope = 0.0;
    double intercept = 0.0;
    double rms = 0.0;
};

Line ls_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    Line l;
    l.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    l.intercept = my - l.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - l.intercept - l.slope * x[i];
        ss += r * r;
    }
    l.rms = std::sqrt(ss / static_cast<double>(n));
    return l;
}

bool monotone_increasing(const std::vector<double>& c) {
    for (std::size_t i = 1; i < c.size(); ++i)
        if (c[i] < c[i - 1] * (1.0 - 1e-6)) return false;
    return true;
}

bool within_band(const std::vector<double>& c, double rel) {
    double lm = 0.0;
    for (double v : c) lm += std::log(v);
    const double gm = std::exp(lm / static_cast<double>(c.size()));
    for (double v : c)
        if (std::abs(v / gm - 1.0) > rel) return false;
    return true;
}

// Divides out the known g(t)^{N/p} prefactor for intermediate regions.
NormSeries reduced_series(const NormSeries& s, const VerifyConfig& cfg) {
    NormSeries out = s;
    if (const auto* im = std::get_if<Intermediate>(&cfg.region)) {
        if (!std::isinf(cfg.p)) {
            const double gp = cfg.params.dim_n / cfg.p;
            for (auto& x : out.samples) x.value /= std::pow(x.t, im->omega * gp);
        }
    }
    return out;
}

double region_omega(const RegionSpec& r) {
    if (const auto* im = std::get_if<Intermediate>(&r)) return im->omega;
    return 0.0;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

const char* status_label(const VerificationReport& r) {
    if (r.infeasible) return "INFEASIBLE";
    if (r.pass) return "PASS";
    if (r.log_verdict == LogVerdict::Inconclusive && !r.fitted.ill_conditioned && r.slope_error <= r.config.slope_tol)
        return "INCONCLUSIVE";
    return "FAIL";
}

void sort_reports(std::vector<VerificationReport>& v) {
    std::stable_sort(v.begin(), v.end(),
                     [](const VerificationReport& a, const VerificationReport& b) { return a.key() < b.key(); });
}

}  // namespace

// ---------------------------------------------------------------------------
// Fitting

FittedRate fit_rate(const NormSeries& series, bool allow_log) {
    FittedRate f;
    const auto& s = series.samples;
    if (s.empty()) {
        f.ill_conditioned = true;
        return f;
    }
    f.t_min = s.front().t;
    f.t_max = s.back().t;
    try {
        series.validate();
    } catch (const DomainError&) {
        f.ill_conditioned = true;
    }
    std::vector<double> x, y;
    for (const auto& smp : s) {
        if (!(smp.t > 0.0 && smp.value > 0.0 && std::isfinite(smp.value))) continue;
        x.push_back(std::log(smp.t));
        y.push_back(std::log(smp.value));
    }
    if (x.size() < 2) {
        f.ill_conditioned = true;
        return f;
    }
    const Line pure = ls_line(x, y);
    f.pure_slope = pure.slope;
    f.t_pow = pure.slope;
    f.residual = pure.rms;
    if (!allow_log || f.ill_conditioned || x.front() <= 0.0) return f;

    // y = c + a x + L z with z = log log t, solved on centered data.
    const std::size_t n = x.size();
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = std::log(x[i]);
    double mx = 0.0, my = 0.0, mz = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
        mz += z[i];
    }
    mx /= n;
    my /= n;
    mz /= n;
    double sxx = 0, szz = 0, sxz = 0, sxy = 0, szy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dz = z[i] - mz, dy = y[i] - my;
        sxx += dx * dx;
        szz += dz * dz;
        sxz += dx * dz;
        sxy += dx * dy;
        szy += dz * dy;
    }
    const double det = sxx * szz - sxz * sxz;
    if (!(det > 1e-12 * sxx * szz)) return f;
    const double a = (sxy * szz - szy * sxz) / det;
    const double L = (szy * sxx - sxy * sxz) / det;
    f.aug_t_pow = a;
    f.aug_log_coef = L;

    const int k = static_cast<int>(std::lround(L));
    if (k < 1 || std::abs(L - k) > 0.5) return f;
    std::vector<double> c(n), d(n);
    for (std::size_t i = 0; i < n; ++i) {
        c[i] = std::exp(y[i] - a * x[i]);
        d[i] = c[i] / std::pow(x[i], k);
    }
    const bool drift = monotone_increasing(c) && c.back() / c.front() - 1.0 >= 0.25;
    if (drift && within_band(d, 0.10)) {
        f.log_detected = true;
        f.log_pow = k;
        f.t_pow = a;
    }
    return f;
}

double compensated_slope(const NormSeries& series, int log_pow) {
    std::vector<double> x, y;
    for (const auto& s : series.samples) {
        if (!(s.t > 1.0 && s.value > 0.0)) continue;
        x.push_back(std::log(s.t));
        y.push_back(std::log(s.value) - log_pow * std::log(std::log(s.t)));
    }
    if (x.size() < 2) throw DomainError("compensated_slope: need two samples with t > 1");
    return ls_line(x, y).slope;
}

const char* log_verdict_label(LogVerdict v) {
    switch (v) {
        case LogVerdict::Match: return "match";
        case LogVerdict::Mismatch: return "mismatch";
        case LogVerdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

std::string VerificationReport::key() const {
    const auto& c = config;
    return "N=" + std::to_string(c.params.dim_n) + ";alpha=" + shortest(c.params.alpha) +
           ";beta=" + c.params.beta.to_string() + "|" + region_key(c.region) + "|p=" + format_p(c.p) +
           "|gamma=" + shortest(c.gamma);
}

// ---------------------------------------------------------------------------
// Verification

VerificationReport judge_series(const VerifyConfig& cfg, NormSeries series) {
    VerificationReport rep;
    rep.config = cfg;
    rep.series = std::move(series);
    rep.predicted = predicted_rate(cfg.params, cfg.gamma, cfg.p, cfg.region);
    const double omega = region_omega(cfg.region);
    const DominantRate dom = rep.predicted.dominant(omega);
    rep.predicted_slope = dom.t_pow;
    rep.predicted_log_pow = dom.log_pow;

    const NormSeries red = reduced_series(rep.series, cfg);
    rep.fitted = fit_rate(red, true);
    if (rep.fitted.ill_conditioned) {
        rep.log_verdict = LogVerdict::Inconclusive;
        rep.note = "series too short for a fit";
        rep.pass = false;
        return rep;
    }
    const int L = rep.predicted_log_pow;
    rep.measured_slope = L == 0 ? rep.fitted.pure_slope : compensated_slope(red, L);
    rep.slope_error = std::abs(rep.measured_slope - rep.predicted_slope);

    // Compensated series against the full predicted law.
    const double t_end = red.samples.back().t;
    const double t_start = red.samples.front().t;
    double lo = INFINITY, hi = 0.0;
    std::vector<double> comp;
    for (const auto& s : red.samples) {
        const double c = s.value * std::pow(s.t, -rep.predicted_slope) * std::pow(std::log(s.t), -L);
        comp.push_back(c);
        if (s.t >= t_end / 10.0 * (1.0 - 1e-12)) {
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }
    }
    rep.spread = hi / lo;

    if (L == 0) {
        rep.log_verdict = rep.fitted.log_detected ? LogVerdict::Mismatch : LogVerdict::Match;
        if (rep.fitted.log_detected) rep.note = "log factor detected where none is predicted";
    } else if (rep.fitted.log_detected) {
        rep.log_verdict = rep.fitted.log_pow == L ? LogVerdict::Match : LogVerdict::Mismatch;
        if (rep.fitted.log_pow != L) rep.note = "detected log power differs from prediction";
    } else {
        // value t^-a should grow like (log t)^L: compare the growth exponents.
        std::vector<double> pure;
        for (std::size_t i = 0; i < comp.size(); ++i) pure.push_back(comp[i] * std::pow(std::log(red.samples[i].t), L));
        const double ratio = std::log(pure.back() / pure.front()) / (L * std::log(std::log(t_end) / std::log(t_start)));
        if (monotone_increasing(pure) && ratio >= 0.5 && ratio <= 1.5) {
            rep.log_verdict = LogVerdict::Inconclusive;
            rep.note = "log not resolved; drift consistent with log power " + std::to_string(L) + " (growth ratio " +
                       fmt("%.2f", ratio) + ")";
        } else {
            rep.log_verdict = LogVerdict::Mismatch;
            rep.note = "drift inconsistent with log power " + std::to_string(L) + " (growth ratio " +
                       fmt("%.2f", ratio) + ")";
        }
    }

    // Competing terms of a max whose slopes cannot be separated at this scale.
    if (rep.predicted.terms.size() > 1) {
        int close = 0;
        for (const RateTerm& term : rep.predicted.terms) {
            RateExpr single = rep.predicted;
            single.terms = {term};
            if (std::abs(single.dominant(omega).t_pow - dom.t_pow) <= cfg.slope_tol) ++close;
        }
        if (close > 1 && rep.log_verdict != LogVerdict::Mismatch) {
            rep.log_verdict = LogVerdict::Inconclusive;
            rep.note = "terms of the max are within slope_tol of each other";
        }
    }

    rep.pass = rep.slope_error <= cfg.slope_tol && rep.log_verdict != LogVerdict::Mismatch &&
               rep.spread <= cfg.spread_tol;
    return rep;
}

VerificationReport verify_rate(const VerifyConfig& cfg, const ProfileTable& profile, int jobs) {
    cfg.params.validate();
    validate_region(cfg.region, cfg.params);
    Forcing forcing{cfg.gamma, cfg.amplitude, cfg.radius};
    forcing.validate();
    const std::vector<double> grid = cfg.t_grid.empty() ? log_grid(1e2, 1e4, 16) : cfg.t_grid;
    NormSeries series;
    try {
        const Solver solver(profile, forcing, cfg.solver_tol);
        series = measure_norm_series(solver, cfg.p, cfg.region, grid, jobs);
    } catch (const ConvergenceError& e) {
        VerificationReport rep;
        rep.config = cfg;
        rep.predicted = predicted_rate(cfg.params, cfg.gamma, cfg.p, cfg.region);
        const DominantRate dom = rep.predicted.dominant(region_omega(cfg.region));
        rep.predicted_slope = dom.t_pow;
        rep.predicted_log_pow = dom.log_pow;
        rep.infeasible = true;
        rep.note = e.what();
        return rep;
    } catch (const DomainError& e) {
        VerificationReport rep;
        rep.config = cfg;
        rep.predicted = predicted_rate(cfg.params, cfg.gamma, cfg.p, cfg.region);
        const DominantRate dom = rep.predicted.dominant(region_omega(cfg.region));
        rep.predicted_slope = dom.t_pow;
        rep.predicted_log_pow = dom.log_pow;
        rep.infeasible = true;
        rep.note = e.what();
        return rep;
    }
    return judge_series(cfg, std::move(series));
}

// ---------------------------------------------------------------------------
// Subcritical limit

KszCheck ksz_limit_check(const ProfileTable& profile, const Forcing& forcing, double p,
                         const std::vector<double>& t_grid, double tol, int jobs) {
    forcing.validate();
    if (!(forcing.gamma > 1.0)) throw DomainError("ksz_limit_check: gamma must be > 1");
    const FractionalParams& params = profile.params();
    if (classify_p(params, p).kind != PClass::Subcritical)
        throw DomainError("ksz_limit_check: p = " + format_p(p) + " is not subcritical");
    if (t_grid.size() < 3) throw DomainError("ksz_limit_check: need at least three times");

    KszCheck k;
    k.m_infinity = forcing.total_mass(params.dim_n);
    k.sigma_p = derive_exponents(params, p).sigma_p;
    k.t = t_grid;
    k.deviation.assign(t_grid.size(), 0.0);
    k.reference.assign(t_grid.size(), 0.0);
    const Solver solver(profile, forcing, tol);
    parallel_for(t_grid.size(), jobs, [&](std::size_t i) {
        const double t = t_grid[i];
        const double w = std::pow(t, k.sigma_p);
        k.deviation[i] = w * solver.deviation_lp_norm(t, p, k.m_infinity).value;
        k.reference[i] = w * solver.region_lp_norm(t, p, Global{}).value;
    });
    const std::size_t n = k.t.size();
    k.decreasing = k.deviation[n - 1] < k.deviation[n - 2] && k.deviation[n - 2] < k.deviation[n - 3];
    k.final_ratio = k.deviation[n - 1] / k.reference[n - 1];
    k.pass = k.decreasing && k.final_ratio <= 0.25;
    return k;
}

// ---------------------------------------------------------------------------
// Reports

std::string file_stem(const std::string& key) {
    std::string out;
    for (char c : key) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-') out += c;
        else if (c == '=') out += '-';
        else if (!out.empty() && out.back() != '_') out += '_';
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out;
}

void write_verification_csv(std::vector<VerificationReport> reports, std::ostream& out) {
    if (reports.empty()) throw DomainError("write_verification_csv: empty report list");
    sort_reports(reports);
    out << "N,alpha,beta,region,p,gamma,row,predicted,predicted_slope,predicted_log_pow,fitted_slope,"
           "measured_slope,slope_error,log_detected,log_pow,log_coef,residual,spread,verdict,status,note\n";
    for (const auto& r : reports) {
        const auto& c = r.config;
        out << c.params.dim_n << ',' << shortest(c.params.alpha) << ',' << c.params.beta.to_string() << ','
            << csv_field(region_key(c.region)) << ',' << format_p(c.p) << ',' << shortest(c.gamma) << ','
            << csv_field(r.predicted.row) << ',' << csv_field(r.predicted.render()) << ','
            << fmt("%.6f", r.predicted_slope) << ',' << r.predicted_log_pow << ',' << fmt("%.6f", r.fitted.t_pow)
            << ',' << fmt("%.6f", r.measured_slope) << ',' << fmt("%.6f", r.slope_error) << ','
            << (r.fitted.log_detected ? "true" : "false") << ',' << r.fitted.log_pow << ','
            << fmt("%.4f", r.fitted.aug_log_coef) << ',' << fmt("%.3e", r.fitted.residual) << ','
            << fmt("%.4f", r.spread) << ',' << log_verdict_label(r.log_verdict) << ',' << status_label(r) << ','
            << csv_field(r.note) << '\n';
    }
}

void write_summary(std::vector<VerificationReport> reports, std::ostream& out) {
    if (reports.empty()) throw DomainError("write_summary: empty report list");
    sort_reports(reports);
    for (const auto& r : reports) {
        out << status_label(r) << "  " << r.key() << "  predicted " << fmt("%.4f", r.predicted_slope);
        if (r.predicted_log_pow != 0) out << " log^" << r.predicted_log_pow;
        if (r.infeasible) {
            out << "  " << r.note << '\n';
            continue;
        }
        out << "  fitted " << fmt("%.4f", r.measured_slope) << "  err " << fmt("%.4f", r.slope_error) << "  log "
            << log_verdict_label(r.log_verdict) << "  spread " << fmt("%.2f", r.spread) << "  [" << r.predicted.row
            << "]";
        if (!r.note.empty()) out << "  " << r.note;
        out << '\n';
    }
}

void write_svg(const VerificationReport& r, std::ostream& out) {
    const double W = 640, H = 420, ml = 70, mr = 20, mt = 40, mb = 60;
    std::vector<double> lx, ly;
    for (const auto& s : r.series.samples) {
        if (s.t > 0.0 && s.value > 0.0) {
            lx.push_back(std::log10(s.t));
            ly.push_back(std::log10(s.value));
        }
    }
    // Guide: predicted law through the geometric centre of the data.
    std::vector<double> gy;
    if (!lx.empty()) {
        const double omega = region_omega(r.config.region);
        const double gp = (std::holds_alternative<Intermediate>(r.config.region) && !std::isinf(r.config.p))
                              ? omega * r.config.params.dim_n / r.config.p
                              : 0.0;
        auto law = [&](double l10) {
            const double t = std::pow(10.0, l10);
            return (r.predicted_slope + gp) * l10 + r.predicted_log_pow * std::log10(std::log(t));
        };
        double off = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) off += ly[i] - law(lx[i]);
        off /= static_cast<double>(lx.size());
        for (double v : lx) gy.push_back(law(v) + off);
    }
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (!lx.empty()) {
        x0 = *std::min_element(lx.begin(), lx.end());
        x1 = *std::max_element(lx.begin(), lx.end());
        y0 = std::min(*std::min_element(ly.begin(), ly.end()), *std::min_element(gy.begin(), gy.end()));
        y1 = std::max(*std::max_element(ly.begin(), ly.end()), *std::max_element(gy.begin(), gy.end()));
    }
    if (x1 - x0 < 1e-9) x1 = x0 + 1;
    if (y1 - y0 < 1e-9) y1 = y0 + 1;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double v) { return ml + (v - x0) / (x1 - x0) * (W - ml - mr); };
    auto py = [&](double v) { return H - mb - (v - y0) / (y1 - y0) * (H - mt - mb); };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
        << ' ' << H << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" << r.key() << "</text>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\"" << H - mb
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double vx = x0 + (x1 - x0) * i / 4.0, vy = y0 + (y1 - y0) * i / 4.0;
        out << "<text x=\"" << fmt("%.1f", px(vx)) << "\" y=\"" << H - mb + 16
            << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt("%.2f", vx) << "</text>\n";
        out << "<text x=\"" << ml - 6 << "\" y=\"" << fmt("%.1f", py(vy) + 4)
            << "\" text-anchor=\"end\" font-size=\"11\">" << fmt("%.2f", vy) << "</text>\n";
    }
    out << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 15
        << "\" text-anchor=\"middle\" font-size=\"12\">log10 t</text>\n";
    out << "<text x=\"18\" y=\"" << (mt + H - mb) / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 18 "
        << (mt + H - mb) / 2 << ")\">log10 norm</text>\n";
    if (!gy.empty()) {
        out << "<polyline fill=\"none\" stroke=\"#c03030\" stroke-dasharray=\"6,4\" points=\"";
        for (std::size_t i = 0; i < lx.size(); ++i)
            out << (i ? " " : "") << fmt("%.2f", px(lx[i])) << ',' << fmt("%.2f", py(gy[i]));
        out << "\"/>\n";
    }
    for (std::size_t i = 0; i < lx.size(); ++i)
        out << "<circle cx=\"" << fmt("%.2f", px(lx[i])) << "\" cy=\"" << fmt("%.2f", py(ly[i]))
            << "\" r=\"3\" fill=\"#2050a0\"/>\n";
    const double lgx = ml + 12, lgy = mt + 10;
    out << "<circle cx=\"" << lgx << "\" cy=\"" << lgy << "\" r=\"3\" fill=\"#2050a0\"/>\n";
    out << "<text x=\"" << lgx + 10 << "\" y=\"" << lgy + 4 << "\" font-size=\"11\">measured</text>\n";
    out << "<line x1=\"" << lgx - 6 << "\" y1=\"" << lgy + 16 << "\" x2=\"" << lgx + 6 << "\" y2=\"" << lgy + 16
        << "\" stroke=\"#c03030\" stroke-dasharray=\"6,4\"/>\n";
    out << "<text x=\"" << lgx + 10 << "\" y=\"" << lgy + 20 << "\" font-size=\"11\">predicted: " << r.predicted.row
        << " (slope " << fmt("%.3f", r.predicted_slope);
    if (r.predicted_log_pow != 0) out << ", log^" << r.predicted_log_pow;
    out << ")</text>\n</svg>\n";
}

void write_ksz_csv(const KszCheck& k, std::ostream& out) {
    out << "t,deviation,reference,ratio\n";
    for (std::size_t i = 0; i < k.t.size(); ++i) {
        out << shortest(k.t[i]) << ',' << fmt("%.10e", k.deviation[i]) << ',' << fmt("%.10e", k.reference[i]) << ','
            << fmt("%.6f", k.deviation[i] / k.reference[i]) << '\n';
    }
}

}  // namespace memheat
