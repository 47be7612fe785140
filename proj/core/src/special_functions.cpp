#include "memheat/special_functions.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "memheat/errors.hpp"
#include "memheat/quadrature.hpp"

namespace memheat::special {

namespace {

constexpr double kPi = std::numbers::pi;

// sin(pi x) with exact zeros at the integers.
double sin_pi(double x) {
    const double n = std::round(x);
    const double r = x - n;
    const double s = std::sin(kPi * r);
    return std::fmod(n, 2.0) == 0.0 ? s : -s;
}

// Real-axis integral representation, valid for 0 < a < 1, b < 1 + a, x < 0:
// E_{a,b}(x) = 1/(a pi) int_0^inf r^{(1-b)/a} exp(-r^{1/a})
//              [r sin(pi(1-b)) - x sin(pi(1-b+a))] / (r^2 - 2 r x cos(pi a) + x^2) dr
double ml_integral(double a, double b, double x) {
    const double s1 = sin_pi(1.0 - b);
    const double s2 = sin_pi(1.0 - b + a);
    const double c = std::cos(kPi * a);
    const double power = (1.0 - b) / a;
    const double inv_a = 1.0 / a;
    auto integrand = [&](double r) {
        const double denom = r * r - 2.0 * r * x * c + x * x;
        return std::pow(r, power) * std::exp(-std::pow(r, inv_a)) * (r * s1 - x * s2) / denom;
    };
    const double r_max = std::pow(46.0, a);
    std::vector<double> bp{0.0};
    const double peak = std::abs(x);
    for (double f : {0.25, 0.5, 0.9, 1.0, 1.1, 2.0}) {
        const double r = f * peak;
        if (r > bp.back() && r < r_max) bp.push_back(r);
    }
    for (double r : {0.5 * r_max, r_max}) {
        if (r > bp.back()) bp.push_back(r);
    }
    quad::Tolerance tol;
    tol.rel = 1e-12;
    tol.abs = 0.0;
    tol.max_segments = 3000;
    if (power >= 0.0) return quad::integrate(integrand, bp, tol).value / (a * kPi);

    // r = u^q with q = 1/(1 + power) absorbs the r^power endpoint singularity.
    const double q = 1.0 / (1.0 + power);
    auto smooth = [&](double u) {
        const double r = std::pow(u, q);
        const double denom = r * r - 2.0 * r * x * c + x * x;
        return q * std::exp(-std::pow(r, inv_a)) * (r * s1 - x * s2) / denom;
    };
    for (double& v : bp) v = std::pow(v, 1.0 + power);
    return quad::integrate(smooth, bp, tol).value / (a * kPi);
}

// E_{1,b}(x) for b > 1: (1/Gamma(b-1)) int_0^1 exp(x u) (1-u)^{b-2} du.
double ml_alpha_one(double b, double x) {
    if (b == 1.0) return std::exp(x);
    if (b < 1.0) {
        return x * ml_alpha_one(b + 1.0, x) + rgamma(b);
    }
    if (b == 2.0) return x == 0.0 ? 1.0 : std::expm1(x) / x;
    auto integrand = [&](double u) { return std::exp(x * u) * std::pow(1.0 - u, b - 2.0); };
    std::vector<double> bp{0.0};
    const double scale = 1.0 / std::max(1.0, std::abs(x));
    for (double f : {1.0, 4.0, 16.0, 64.0}) {
        if (f * scale < 1.0) bp.push_back(f * scale);
    }
    bp.push_back(1.0);
    quad::Tolerance tol;
    tol.rel = 1e-12;
    tol.max_segments = 3000;
    return quad::integrate(integrand, bp, tol).value * rgamma(b - 1.0);
}

// Hankel asymptotic expansion for J_nu, integer nu in {0,1}, x >= 20.
double bessel_hankel(double nu, double x) {
    const double mu = 4.0 * nu * nu;
    double p = 1.0;
    double q = 0.0;
    double term = 1.0;
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k < 200; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= (mu - odd * odd) / (k * 8.0 * x);
        const double mag = std::abs(term);
        if (mag > prev) break;
        prev = mag;
        // term_k contributes to P for even k and Q for odd k with alternating signs.
        switch (k % 4) {
            case 1: q += term; break;
            case 2: p -= term; break;
            case 3: q -= term; break;
            case 0: p += term; break;
        }
        if (mag < 1e-18) break;
    }
    const double w = x - (0.5 * nu + 0.25) * kPi;
    return std::sqrt(2.0 / (kPi * x)) * (p * std::cos(w) - q * std::sin(w));
}

double bessel_series(int nu, double x) {
    const long double h = 0.5L * x;
    const long double h2 = h * h;
    long double term = nu == 0 ? 1.0L : h;
    long double sum = term;
    for (int k = 1; k < 500; ++k) {
        term *= -h2 / (static_cast<long double>(k) * (k + nu));
        sum += term;
        if (std::fabs(term) < 1e-22L * std::max(1.0L, std::fabs(sum))) break;
    }
    return static_cast<double>(sum);
}

}  // namespace

double gamma_fn(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw DomainError("gamma_fn: argument must be positive and finite, got " + std::to_string(x));
    }
    return std::tgamma(x);
}

double rgamma(double x) {
    if (x <= 0.0 && x == std::round(x)) return 0.0;
    if (x >= 0.5) {
        const double g = std::tgamma(x);
        return std::isfinite(g) ? 1.0 / g : 0.0;
    }
    // Reflection: 1/Gamma(x) = sin(pi x) Gamma(1 - x) / pi.
    const double one_minus = 1.0 - x;
    const double lg = std::lgamma(one_minus);
    return sin_pi(x) * std::exp(lg) / kPi;
}

static void validate(const MlParams& p) {
    if (!(p.alpha_ml > 0.0 && p.alpha_ml <= 1.0)) {
        throw DomainError("mittag_leffler: alpha_ml must lie in (0, 1], got " + std::to_string(p.alpha_ml));
    }
    if (!(p.beta_ml > 0.0) || !std::isfinite(p.beta_ml)) {
        throw DomainError("mittag_leffler: beta_ml must be positive, got " + std::to_string(p.beta_ml));
    }
}

MittagLeffler::MittagLeffler(MlParams p) : params_(p) {
    validate(p);
    const long double a = p.alpha_ml;
    for (int k = 0; k < 600; ++k) {
        const long double g = std::tgamma(a * k + p.beta_ml);
        if (!std::isfinite(static_cast<double>(1.0L / g)) || g > 1e4000L) break;
        series_coef_.push_back(1.0L / g);
        if (1.0L / g < 1e-4900L) break;
    }
    for (int k = 1; k <= 400; ++k) asym_coef_.push_back(rgamma(p.beta_ml - p.alpha_ml * k));
    // |E_{a,b}(x)| <= max(1, 1/Gamma(b)) on the negative axis is generous; a
    // series whose terms exceed 1e6 times that cannot deliver full accuracy.
    series_bound_ = 1e6 * std::max(1.0, std::abs(rgamma(p.beta_ml)));
}

bool MittagLeffler::try_series(double x, double& out) const {
    long double sum = 0.0L;
    long double max_term = 0.0L;
    long double xk = 1.0L;
    const long double lx = x;
    for (std::size_t k = 0; k < series_coef_.size(); ++k) {
        const long double term = xk * series_coef_[k];
        sum += term;
        const long double mag = std::fabs(term);
        if (mag > max_term) {
            max_term = mag;
            if (max_term > series_bound_) return false;
        }
        if (k > 2 && mag <= 1e-21L * std::fabs(sum)) {
            out = static_cast<double>(sum);
            return max_term <= 1e6L * std::fabs(sum);
        }
        xk *= lx;
    }
    return false;
}

// -sum_{k>=1} x^{-k} / Gamma(b - a k), truncated before the terms grow.
// Truncation decisions use the envelope |x|^{-k} Gamma(1 - b + a k) / pi,
// which ignores the sin(pi (b - a k)) factor: a term that is small only
// because its reciprocal Gamma sits near a pole says nothing about the tail.
bool MittagLeffler::try_asymptotic(double b, double x, double& out) const {
    const bool own = b == params_.beta_ml;
    const double a = params_.alpha_ml;
    const double log_ax = std::log(std::abs(x));
    double sum = 0.0;
    const double inv = 1.0 / x;
    double xk = 1.0;
    double prev_env = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 400; ++k) {
        xk *= inv;
        const double arg = b - a * k;
        const double env = arg < 0.5 ? std::exp(std::lgamma(1.0 - arg) - k * log_ax) / kPi
                                     : std::abs(xk * rgamma(arg));
        if (!std::isfinite(env)) break;
        if (env > prev_env && k > 3) break;
        const double rg = own ? asym_coef_[k - 1] : rgamma(arg);
        sum += -xk * rg;
        prev_env = env;
        if (sum != 0.0 && env <= 1e-17 * std::abs(sum)) {
            out = sum;
            return true;
        }
    }
    out = sum;
    // The first omitted term bounds the truncation error.
    return sum != 0.0 && prev_env <= 1e-15 * std::abs(sum);
}

double MittagLeffler::dispatch(double b, double x) const {
    const double a = params_.alpha_ml;
    if (x == 0.0) return rgamma(b);
    if (a == 1.0) return ml_alpha_one(b, x);

    double value = 0.0;
    if (b == params_.beta_ml && try_series(x, value)) return value;
    if (try_asymptotic(b, x, value)) return value;
    if (b < 1.0 + 0.5 * a) return ml_integral(a, b, x);
    // E_{a,b}(x) = (E_{a,b-a}(x) - 1/Gamma(b-a)) / x lowers b into range.
    return (dispatch(b - a, x) - rgamma(b - a)) / x;
}

double MittagLeffler::operator()(double x) const {
    if (!(x <= 0.0) || !std::isfinite(x)) {
        throw DomainError("mittag_leffler: only the closed negative real axis is supported, got x = " +
                          std::to_string(x));
    }
    return dispatch(params_.beta_ml, x);
}

double mittag_leffler(MlParams p, double x) {
    // Reuse the coefficient tables across repeated calls with equal parameters.
    thread_local std::array<std::optional<MittagLeffler>, 8> cache;
    thread_local std::size_t next_slot = 0;
    for (const auto& slot : cache) {
        if (slot && slot->params().alpha_ml == p.alpha_ml && slot->params().beta_ml == p.beta_ml) return (*slot)(x);
    }
    auto& slot = cache[next_slot];
    next_slot = (next_slot + 1) % cache.size();
    slot.emplace(p);
    return (*slot)(x);
}

double bessel_j(double order, double x) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("bessel_j: x must be finite and >= 0");
    if (order == 0.5) {
        if (x == 0.0) return 0.0;
        return std::sqrt(2.0 / (kPi * x)) * std::sin(x);
    }
    if (order == -0.5) {
        if (x == 0.0) throw DomainError("bessel_j: J_{-1/2} is singular at 0");
        return std::sqrt(2.0 / (kPi * x)) * std::cos(x);
    }
    if (order == 1.5) {
        if (x < 1e-3) {
            // Series avoids cancellation in sin(x)/x - cos(x).
            const double x2 = x * x;
            return std::sqrt(2.0 / kPi) * std::pow(x, 1.5) / 3.0 * (1.0 - x2 / 10.0 + x2 * x2 / 280.0);
        }
        return std::sqrt(2.0 / (kPi * x)) * (std::sin(x) / x - std::cos(x));
    }
    if (order == 0.0 || order == 1.0) {
        const int nu = static_cast<int>(order);
        return x <= 20.0 ? bessel_series(nu, x) : bessel_hankel(order, x);
    }
    throw DomainError("bessel_j: unsupported order " + std::to_string(order) +
                      " (supported: 0, 1/2, -1/2, 1, 3/2)");
}

}  // namespace memheat::special
