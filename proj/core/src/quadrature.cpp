#include "memheat/quadrature.hpp"

#include <array>
#include <limits>
#include <mutex>
#include <numbers>

namespace memheat::quad {

namespace {

GaussRule compute_rule(int n) {
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Tricomi initial guess, then Newton on P_n.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) {
                p1 = x;
                p0 = 1.0;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // Recompute derivative at the converged node.
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
    constexpr int kMax = 64;
    if (n < 1 || n > kMax) throw DomainError("gauss_legendre: n must be in [1, 64]");
    static std::array<GaussRule, kMax + 1> rules;
    static std::array<std::once_flag, kMax + 1> flags;
    std::call_once(flags[n], [n] {
        rules[n] = n == 1 ? GaussRule{{0.0}, {2.0}} : compute_rule(n);
    });
    return rules[n];
}

Extrapolation wynn_epsilon(std::span<const double> partial_sums) {
    const std::size_t n = partial_sums.size();
    if (n == 0) return {0.0, std::numeric_limits<double>::infinity()};
    if (n < 3) return {partial_sums.back(), std::abs(n == 2 ? partial_sums[1] - partial_sums[0] : partial_sums[0])};

    // e[k] holds column k of the epsilon table for the current anti-diagonal.
    std::vector<double> prev(partial_sums.begin(), partial_sums.end());
    std::vector<double> prev2(n + 1, 0.0);
    double best = partial_sums.back();
    double best_err = std::abs(partial_sums[n - 1] - partial_sums[n - 2]);
    double last_even = best;
    for (std::size_t col = 1; col < n; ++col) {
        std::vector<double> next(n - col);
        bool ok = true;
        for (std::size_t i = 0; i + col < n; ++i) {
            const double diff = prev[i + 1] - prev[i];
            if (diff == 0.0 || !std::isfinite(diff)) {
                ok = false;
                break;
            }
            const double base = col == 1 ? 0.0 : prev2[i + 1];
            next[i] = base + 1.0 / diff;
        }
        if (!ok) break;
        if (col % 2 == 0) {
            const double candidate = next.back();
            const double err = std::abs(candidate - last_even);
            if (std::isfinite(candidate) && err < best_err) {
                best = candidate;
                best_err = err;
            }
            last_even = candidate;
        }
        prev2.assign(prev.begin(), prev.end());
        prev = std::move(next);
        if (prev.size() < 2) break;
    }
    return {best, best_err};
}

}  // namespace memheat::quad
