#include "memheat/exponents.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "memheat/errors.hpp"

namespace memheat {

namespace {

constexpr double kRelTol = 1e-12;

bool near(double a, double b) {
    if (std::isinf(a) || std::isinf(b)) return a == b;
    return std::abs(a - b) <= kRelTol * std::max({1.0, std::abs(a), std::abs(b)});
}
bool less(double a, double b) { return a < b && !near(a, b); }
bool less_eq(double a, double b) { return a < b || near(a, b); }

std::string fixed(double v, int digits) {
    if (v == 0.0) v = 0.0;  // drop the sign of negative zero
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    std::string s(buf);
    // "-0.000" after rounding a tiny negative value.
    bool all_zero = true;
    for (char c : s) {
        if (c != '-' && c != '0' && c != '.') all_zero = false;
    }
    if (all_zero && !s.empty() && s[0] == '-') s.erase(0, 1);
    return s;
}

std::string shortest(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) return std::to_string(v);
    return std::string(buf, ptr);
}

}  // namespace

// ---------------------------------------------------------------------------
// Rational

Rational make_rational(std::int64_t num, std::int64_t den) {
    if (den == 0) throw DomainError("rational: zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    return {num, den};
}

Rational Rational::parse(const std::string& text) {
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string t = trim(text);
    auto parse_int = [&](const std::string& s) {
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
            throw ParseError("cannot parse '" + text + "' as a rational number");
        }
        return v;
    };
    const auto slash = t.find('/');
    if (slash != std::string::npos) {
        return make_rational(parse_int(trim(t.substr(0, slash))), parse_int(trim(t.substr(slash + 1))));
    }
    const auto dot = t.find('.');
    if (dot == std::string::npos) return make_rational(parse_int(t), 1);
    const std::string whole = t.substr(0, dot);
    const std::string frac = t.substr(dot + 1);
    if (frac.size() > 12 || frac.find_first_not_of("0123456789") != std::string::npos) {
        throw ParseError("cannot parse '" + text + "' as a rational number");
    }
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    const bool negative = !whole.empty() && whole[0] == '-';
    const std::int64_t w = whole.empty() || whole == "-" ? 0 : parse_int(whole);
    const std::int64_t f = frac.empty() ? 0 : parse_int(frac);
    const std::int64_t num = negative ? w * den - f : w * den + f;
    return make_rational(num, den);
}

std::string Rational::to_string() const {
    if (den == 1) return std::to_string(num);
    return std::to_string(num) + "/" + std::to_string(den);
}

// ---------------------------------------------------------------------------
// Parameters

const char* regime_label(Regime r) {
    switch (r) {
        case Regime::BelowTwoBeta: return "N<2beta";
        case Regime::TwoBeta: return "N=2beta";
        case Regime::BetweenTwoFourBeta: return "2beta<N<4beta";
        case Regime::FourBeta: return "N=4beta";
        case Regime::AboveFourBeta: return "N>4beta";
    }
    return "?";
}

void FractionalParams::validate() const {
    if (dim_n < 1) throw DomainError("N must be an integer >= 1, got " + std::to_string(dim_n));
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw DomainError("alpha must lie in the open interval (0,1), got " + shortest(alpha));
    }
    if (!(beta.num > 0 && beta.den > 0 && beta.num <= beta.den)) {
        throw DomainError("beta must lie in (0,1], got " + beta.to_string());
    }
}

Regime FractionalParams::regime() const {
    // Compare N * den against 2 num and 4 num in exact integer arithmetic.
    const std::int64_t n_den = static_cast<std::int64_t>(dim_n) * beta.den;
    const std::int64_t two = 2 * beta.num;
    const std::int64_t four = 4 * beta.num;
    if (n_den < two) return Regime::BelowTwoBeta;
    if (n_den == two) return Regime::TwoBeta;
    if (n_den < four) return Regime::BetweenTwoFourBeta;
    if (n_den == four) return Regime::FourBeta;
    return Regime::AboveFourBeta;
}

ExponentSet derive_exponents(const FractionalParams& params, double p) {
    params.validate();
    if (!(p >= 1.0)) throw DomainError("p must lie in [1, inf], got " + shortest(p));
    const double n = params.dim_n;
    ExponentSet e{};
    e.theta = params.theta();
    e.sigma_star = params.sigma_star();
    e.sigma_p = std::isinf(p) ? e.sigma_star : e.sigma_star - n * e.theta / p;
    switch (params.regime()) {
        case Regime::BelowTwoBeta: e.p_crit = std::nullopt; break;
        case Regime::TwoBeta: e.p_crit = kInf; break;
        default: {
            // N / (N - 2 beta) = N den / (N den - 2 num), exact integers.
            const double n_den = n * static_cast<double>(params.beta.den);
            e.p_crit = n_den / (n_den - 2.0 * static_cast<double>(params.beta.num));
        }
    }
    const double inv_p = std::isinf(p) ? 0.0 : n / p;
    e.q_crit = n / (2.0 * params.beta_value() + inv_p);
    return e;
}

const char* pclass_label(PClass c) {
    switch (c) {
        case PClass::Subcritical: return "subcritical";
        case PClass::Critical: return "critical";
        case PClass::Supercritical: return "supercritical";
    }
    return "?";
}

PClassification classify_p(const FractionalParams& params, double p) {
    const ExponentSet e = derive_exponents(params, p);
    if (!e.p_crit) return {PClass::Subcritical, std::nullopt};
    if (near(p, *e.p_crit)) return {PClass::Critical, e.q_crit};
    if (p < *e.p_crit) return {PClass::Subcritical, std::nullopt};
    return {PClass::Supercritical, e.q_crit};
}

// ---------------------------------------------------------------------------
// Regions

void validate_region(const RegionSpec& region, const FractionalParams& params) {
    std::visit(
        [&](const auto& r) {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, Exterior>) {
                if (!(r.nu > 0.0)) throw DomainError("exterior region: nu must be > 0");
            } else if constexpr (std::is_same_v<T, CompactBall>) {
                if (!(r.radius > 0.0)) throw DomainError("compact region: radius must be > 0");
            } else if constexpr (std::is_same_v<T, Intermediate>) {
                if (!(r.omega > 0.0 && r.omega < params.theta())) {
                    throw DomainError("intermediate region: omega must lie in (0, theta) = (0, " +
                                      shortest(params.theta()) + "), got " + shortest(r.omega));
                }
                if (!(r.nu > 0.0 && r.mu > r.nu)) {
                    throw DomainError("intermediate region: need 0 < nu < mu");
                }
            }
        },
        region);
}

std::string region_label(const RegionSpec& region) {
    return std::visit(
        [](const auto& r) -> std::string {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, Exterior>) return "exterior";
            if constexpr (std::is_same_v<T, CompactBall>) return "compact";
            if constexpr (std::is_same_v<T, Intermediate>) return "intermediate";
            return "global";
        },
        region);
}

std::string region_key(const RegionSpec& region) {
    return std::visit(
        [](const auto& r) -> std::string {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, Exterior>) return "exterior(nu=" + shortest(r.nu) + ")";
            if constexpr (std::is_same_v<T, CompactBall>) return "compact(radius=" + shortest(r.radius) + ")";
            if constexpr (std::is_same_v<T, Intermediate>) {
                return "intermediate(omega=" + shortest(r.omega) + ";nu=" + shortest(r.nu) + ";mu=" + shortest(r.mu) +
                       ")";
            }
            return "global";
        },
        region);
}

// ---------------------------------------------------------------------------
// Rate expressions

std::string RateExpr::render() const {
    std::string out = "g^{" + fixed(prefactor_g_pow, 2) + "} * max[ ";
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const RateTerm& t = terms[i];
        if (i > 0) out += ", ";
        out += "t^{" + fixed(t.t_pow, 3) + "}";
        if (t.logt_pow != 0) out += " * log(t)^" + std::to_string(t.logt_pow);
        if (t.g_pow != 0.0) out += " * g^{" + fixed(t.g_pow, 3) + "}";
        if (t.loggap_pow != 0) out += " * log(t^th/g)^" + std::to_string(t.loggap_pow);
    }
    out += " ]";
    return out;
}

DominantRate RateExpr::dominant(double omega) const {
    DominantRate best{-kInf, 0};
    for (const RateTerm& t : terms) {
        const DominantRate cand{t.t_pow + t.g_pow * omega, t.logt_pow + t.loggap_pow};
        if (less(best.t_pow, cand.t_pow) || (near(best.t_pow, cand.t_pow) && cand.log_pow > best.log_pow)) {
            best = cand;
        }
    }
    return best;
}

DominantRate RateExpr::dominant_with_prefactor(double omega) const {
    DominantRate d = dominant(omega);
    d.t_pow += prefactor_g_pow * omega;
    return d;
}

namespace {

RateTerm power(double a, int logs = 0) { return RateTerm{a, logs, 0.0, 0}; }

// Rows shared by the exterior region and the subcritical global norm.
RateExpr exterior_rows(double sigma_p, double gamma, const std::string& prefix) {
    RateExpr r;
    if (less(gamma, 1.0)) {
        r.terms = {power(-sigma_p + 1.0 - gamma)};
        r.row = prefix + ", gamma<1";
    } else if (near(gamma, 1.0)) {
        r.terms = {power(-sigma_p, 1)};
        r.row = prefix + ", gamma=1";
    } else {
        r.terms = {power(-sigma_p)};
        r.row = prefix + ", gamma>1";
    }
    return r;
}

RateExpr compact_rows(const FractionalParams& prm, double gamma) {
    const double ss = prm.sigma_star();
    RateExpr r;
    const std::string base = std::string("compact[") + regime_label(prm.regime()) + "]";
    switch (prm.regime()) {
        case Regime::BelowTwoBeta:
            if (less(gamma, 1.0)) {
                r.terms = {power(-ss + 1.0 - gamma)};
                r.row = base + ", gamma<1";
            } else if (near(gamma, 1.0)) {
                r.terms = {power(-ss, 1)};
                r.row = base + ", gamma=1";
            } else {
                r.terms = {power(-ss)};
                r.row = base + ", gamma>1";
            }
            break;
        case Regime::TwoBeta:
            // sigma* = 1 exactly here.
            if (less_eq(gamma, 1.0)) {
                r.terms = {power(-gamma, 1)};
                r.row = base + ", gamma<=sigma*=1";
            } else {
                r.terms = {power(-1.0)};
                r.row = base + ", gamma>sigma*=1";
            }
            break;
        case Regime::BetweenTwoFourBeta:
            if (less(gamma, ss)) {
                r.terms = {power(-gamma)};
                r.row = base + ", gamma<sigma*";
            } else {
                r.terms = {power(-ss)};
                r.row = base + ", gamma>=sigma*";
            }
            break;
        case Regime::FourBeta:
            // sigma* = 1 + alpha here.
            if (less(gamma, 1.0 + prm.alpha)) {
                r.terms = {power(-gamma)};
                r.row = base + ", gamma<sigma*=1+alpha";
            } else {
                r.terms = {power(-(1.0 + prm.alpha), 1)};
                r.row = base + ", gamma>=sigma*=1+alpha";
            }
            break;
        case Regime::AboveFourBeta: break;
    }
    return r;
}

RateExpr intermediate_rows(const FractionalParams& prm, double gamma) {
    const double ss = prm.sigma_star();
    const double th = prm.theta();
    const double gc = (1.0 - ss) / th;  // exponent of g(t)^{(1 - sigma*)/theta}
    RateExpr r;
    const std::string base = std::string("intermediate[") + regime_label(prm.regime()) + "]";
    const bool below = less(gamma, 1.0);
    const bool at = near(gamma, 1.0);
    const std::string branch = below ? ", gamma<1" : at ? ", gamma=1" : ", gamma>1";
    r.row = base + branch;
    switch (prm.regime()) {
        case Regime::BelowTwoBeta:
            r.terms = {below ? power(-ss + 1.0 - gamma) : at ? power(-ss, 1) : power(-ss)};
            break;
        case Regime::TwoBeta:
            if (below) {
                r.terms = {RateTerm{-gamma, 0, 0.0, 1}};
            } else {
                r.terms = {at ? power(-ss, 1) : power(-ss)};
            }
            break;
        case Regime::BetweenTwoFourBeta:
            if (below) {
                r.terms = {RateTerm{-gamma, 0, gc, 0}};
            } else if (at) {
                r.terms = {RateTerm{-1.0, 0, gc, 0}, power(-ss, 1)};
            } else {
                r.terms = {RateTerm{-gamma, 0, gc, 0}, power(-ss)};
            }
            break;
        case Regime::FourBeta:
            if (below) {
                r.terms = {RateTerm{-gamma, 0, gc, 0}, RateTerm{-ss + 1.0 - gamma, 0, 0.0, 1}};
            } else if (at) {
                r.terms = {RateTerm{-1.0, 0, gc, 0}, RateTerm{-ss, 1, 0.0, 1}};
            } else {
                r.terms = {RateTerm{-gamma, 0, gc, 0}, RateTerm{-ss, 0, 0.0, 1}};
            }
            break;
        case Regime::AboveFourBeta: break;
    }
    return r;
}

RateExpr global_rows(const FractionalParams& prm, double gamma, double p, const ExponentSet& e, PClass cls) {
    RateExpr r;
    if (cls == PClass::Subcritical) return exterior_rows(e.sigma_p, gamma, "global[subcritical p]");
    if (cls == PClass::Critical) {
        if (less_eq(gamma, 1.0)) {
            r.terms = {power(-gamma, 1)};
            r.row = "global[critical p], gamma<=1";
        } else {
            r.terms = {power(-1.0)};
            r.row = "global[critical p], gamma>1";
        }
        return r;
    }
    const bool log_row = std::isinf(p) && prm.regime() == Regime::FourBeta;
    if (less(gamma, e.sigma_p)) {
        r.terms = {power(-gamma)};
        r.row = "global[supercritical p], gamma<sigma(p)";
    } else if (!log_row) {
        r.terms = {power(-e.sigma_p)};
        r.row = "global[supercritical p], gamma>=sigma(p)";
    } else {
        r.terms = {power(-e.sigma_star, 1)};
        r.row = "global[supercritical p, p=inf, N=4beta], gamma>=sigma*=1+alpha";
    }
    return r;
}

}  // namespace

RateExpr predicted_rate(const FractionalParams& params, double gamma, double p, const RegionSpec& region) {
    params.validate();
    if (!params.small_dimension()) {
        throw OutOfScopeError("predicted_rate: N > 4 beta is outside the small-dimension regime (N=" +
                              std::to_string(params.dim_n) + ", beta=" + params.beta.to_string() + ")");
    }
    if (!std::isfinite(gamma)) throw DomainError("predicted_rate: gamma must be finite");
    validate_region(region, params);
    const ExponentSet e = derive_exponents(params, p);
    const PClass cls = classify_p(params, p).kind;
    const bool sub = cls == PClass::Subcritical;

    RateExpr out = std::visit(
        [&](const auto& r) -> RateExpr {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, Exterior>) {
                RateExpr x = exterior_rows(e.sigma_p, gamma, "exterior");
                x.hypotheses.pointwise_decay = !sub;
                return x;
            } else if constexpr (std::is_same_v<T, CompactBall>) {
                RateExpr x = compact_rows(params, gamma);
                x.hypotheses.lq_integrability = !sub;
                return x;
            } else if constexpr (std::is_same_v<T, Intermediate>) {
                RateExpr x = intermediate_rows(params, gamma);
                x.prefactor_g_pow = std::isinf(p) ? 0.0 : params.dim_n / p;
                x.hypotheses.pointwise_decay = !sub;
                return x;
            } else {
                RateExpr x = global_rows(params, gamma, p, e, cls);
                x.hypotheses.pointwise_decay = !sub;
                x.hypotheses.lq_integrability = !sub;
                return x;
            }
        },
        region);
    return out;
}

// ---------------------------------------------------------------------------
// Helper integrals

const char* asymptotic_class_label(AsymptoticClass c) {
    switch (c) {
        case AsymptoticClass::Power: return "power";
        case AsymptoticClass::Log: return "log";
        case AsymptoticClass::Bounded: return "bounded";
    }
    return "?";
}

namespace {

// int_1^X u^-s du, written to stay accurate as s -> 1.
double power_integral_from_one(double s, double log_x) {
    if (s == 1.0) return log_x;
    const double e = 1.0 - s;
    return std::expm1(e * log_x) / e;
}

HelperIntegral classify(double value, double exponent) {
    if (exponent < 1.0) return {value, AsymptoticClass::Power, 1.0 - exponent};
    if (exponent == 1.0) return {value, AsymptoticClass::Log, 0.0};
    return {value, AsymptoticClass::Bounded, 0.0};
}

}  // namespace

HelperIntegral power_log_integral(double gamma, double t) {
    if (!(t >= 2.0)) throw DomainError("power_log_integral: t must be >= 2");
    // Substituting u = 1 + s: int_1^{1+t/2} u^-gamma du.
    return classify(power_integral_from_one(gamma, std::log1p(0.5 * t)), gamma);
}

HelperIntegral near_endpoint_integral(double sigma, double t) {
    if (!(t >= 2.0)) throw DomainError("near_endpoint_integral: t must be >= 2");
    if (!(sigma > 0.0)) throw DomainError("near_endpoint_integral: sigma must be > 0");
    // u = t - s runs over [1, t/2].
    return classify(power_integral_from_one(sigma, std::log(0.5 * t)), sigma);
}

double unit_ball_volume(int dim_n) {
    return std::pow(std::numbers::pi, 0.5 * dim_n) / std::tgamma(0.5 * dim_n + 1.0);
}

double unit_sphere_area(int dim_n) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * dim_n) / std::tgamma(0.5 * dim_n);
}

std::string format_p(double p) { return std::isinf(p) ? std::string("inf") : shortest(p); }

}  // namespace memheat
