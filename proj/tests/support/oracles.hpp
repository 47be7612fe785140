#pragma once

// Test-side oracles. None of these call into the production evaluators they
// are used to check, except eval_Y where the quantity under test is built on
// top of the profile table.

#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>
#include <vector>

#include "memheat/kernel.hpp"
#include "memheat/quadrature.hpp"
#include "memheat/solver.hpp"

namespace oracle {

using Big = boost::multiprecision::cpp_bin_float_100;

/// E_{a,b}(x) by its power series in 100-digit arithmetic. Valid while the
/// largest term stays below ~1e60 (cancellation budget of 100 digits).
inline double ml_series(double a, double b, double x) {
    const Big bx = x;
    Big sum = 0, pw = 1;
    for (int k = 0; k < 20000; ++k) {
        const Big term = pw / boost::math::tgamma(Big(a) * k + Big(b));
        sum += term;
        if (k > 10 && abs(term) < Big("1e-40") * (abs(sum) + Big("1e-300"))) break;
        pw *= bx;
    }
    return static_cast<double>(sum);
}

/// e^{x^2} erfc(x) from the Maclaurin series of erf in 100-digit arithmetic.
inline double scaled_erfc(double x) {
    const Big bx = x;
    Big sum = 0, term = bx;  // x^{2n+1} / n!
    for (int n = 0; n < 2000; ++n) {
        const Big contrib = term / (2 * n + 1);
        sum += (n % 2 ? -contrib : contrib);
        term *= bx * bx / (n + 1);
        if (n > 5 && contrib < Big("1e-60")) break;
    }
    const Big erf = 2 / sqrt(boost::math::constants::pi<Big>()) * sum;
    return static_cast<double>(exp(bx * bx) * (1 - erf));
}

/// J0 by its power series in 100-digit arithmetic.
inline double j0_series(double x) {
    const Big q = Big(x) * Big(x) / 4;
    Big sum = 0, term = 1;
    for (int k = 0; k < 400; ++k) {
        sum += term;
        term *= -q / ((k + 1) * (k + 1));
    }
    return static_cast<double>(sum);
}

/// First positive zero of J0 by bisection on the series.
inline double j0_first_zero() {
    double lo = 2.0, hi = 3.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (j0_series(mid) > 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Brute-force mild solution for N = 1: nested adaptive quadrature of
/// int_0^t a(s) int_{-R}^{R} Y(r - y, t - s) dy ds, with tau = t - s
/// substituted by v = tau^alpha.
inline double mild_solution_1d(const memheat::ProfileTable& prof, const memheat::Forcing& f, double r, double t) {
    using namespace memheat;
    const double alpha = prof.params().alpha;
    const double theta = prof.params().theta();
    const double R = f.radius;
    // Integrate in d = |r - y| so quadrature nodes never sit on the singularity.
    auto inner = [&](double tau) {
        auto fd = [&](double d) { return eval_Y(d, tau, prof); };
        const double w = std::pow(tau, theta);
        auto piece = [&](double a, double b) {
            if (!(b > a)) return 0.0;
            std::vector<double> bps{a, b};
            for (double c : {w, 10 * w, 100 * w})
                if (c > a && c < b) bps.push_back(c);
            std::sort(bps.begin(), bps.end());
            return quad::integrate(fd, bps, quad::Tolerance{1e-300, 1e-10, 4000}).value;
        };
        const double ar = std::abs(r);
        if (ar < R) return piece(0.0, R - ar) + piece(0.0, R + ar);
        return piece(ar - R, ar + R);
    };
    auto outer = [&](double v) {
        if (v <= 0.0) return 0.0;
        const double tau = std::pow(v, 1.0 / alpha);
        return f.time_factor(t - tau) * inner(tau) * std::pow(tau, 1.0 - alpha) / alpha;
    };
    const double vt = std::pow(t, alpha);
    std::vector<double> bps{0.0, vt};
    for (int k = 1; k <= 40; ++k) bps.push_back(vt * std::ldexp(1.0, -k));
    const double edge = std::abs(std::abs(r) - R);
    if (edge > 0.0) {
        for (double m : {0.1, 0.3, 1.0, 3.0, 10.0}) {
            const double v = std::pow(std::pow(m * edge, 1.0 / theta), alpha);
            if (v < vt) bps.push_back(v);
        }
    }
    std::sort(bps.begin(), bps.end());
    return quad::integrate(outer, bps, quad::Tolerance{1e-300, 1e-8, 4000}).value;
}

}  // namespace oracle

namespace oracle {

/// e^{x^2} erfc(x) via the 100-digit erfc, usable for large x.
inline double scaled_erfc_big(double x) {
    const Big bx = x;
    return static_cast<double>(exp(bx * bx) * boost::math::erfc(bx));
}

}  // namespace oracle
