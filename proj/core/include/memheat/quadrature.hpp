#pragma once

// Quadrature building blocks shared by the kernel and solver modules:
// fixed Gauss-Legendre rules, a globally adaptive Gauss-Kronrod (7/15)
// integrator seeded with caller-supplied breakpoints, and Wynn's epsilon
// algorithm for accelerating slowly convergent alternating sums.

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <vector>

#include "memheat/errors.hpp"

namespace memheat::quad {

struct GaussRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule, 1 <= n <= 64. Rules are computed once and
/// cached; the returned reference stays valid for the program lifetime.
const GaussRule& gauss_legendre(int n);

/// Integrates f over [a, b] with the n-point Gauss-Legendre rule.
template <class F>
double gauss(F&& f, double a, double b, int n) {
    const GaussRule& rule = gauss_legendre(n);
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (b + a);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    }
    return sum * half;
}

struct Result {
    double value = 0.0;
    double error = 0.0;
    int evaluations = 0;
    bool converged = true;
};

struct Tolerance {
    double abs = 0.0;
    double rel = 1e-10;
    int max_segments = 4000;
};

namespace detail {

// Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15).
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& other) const { return error < other.error; }
};

template <class F>
Segment gk15(F& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = fc * kWgk[7];
    double gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        const double f1 = f(center - dx);
        const double f2 = f(center + dx);
        kronrod += kWgk[j] * (f1 + f2);
        if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
    }
    const double value = kronrod * half;
    double err = std::abs((kronrod - gauss) * half);
    // Round-off floor so that segments below machine resolution stop splitting.
    err = std::max(err, 4.0 * std::numeric_limits<double>::epsilon() * std::abs(value));
    return {a, b, value, err};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod integration of f over the union of the
/// intervals delimited by `breakpoints` (sorted ascending, at least two).
/// Endpoints are never sampled, so integrable endpoint singularities are
/// acceptable. Stops when the summed error estimate is below
/// max(tol.abs, tol.rel * |value|) or the segment budget is exhausted; in the
/// latter case `converged` is false.
template <class F>
Result integrate(F&& f, std::span<const double> breakpoints, const Tolerance& tol = {}) {
    Result out;
    if (breakpoints.size() < 2) return out;
    std::priority_queue<detail::Segment> heap;
    double total = 0.0;
    double total_err = 0.0;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        if (!(breakpoints[i + 1] > breakpoints[i])) continue;
        detail::Segment s = detail::gk15(f, breakpoints[i], breakpoints[i + 1]);
        out.evaluations += 15;
        total += s.value;
        total_err += s.error;
        heap.push(s);
    }
    int segments = static_cast<int>(heap.size());
    while (!heap.empty() && total_err > std::max(tol.abs, tol.rel * std::abs(total))) {
        if (segments >= tol.max_segments) {
            out.converged = false;
            break;
        }
        detail::Segment worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            out.converged = false;
            break;
        }
        heap.pop();
        detail::Segment left = detail::gk15(f, worst.a, mid);
        detail::Segment right = detail::gk15(f, mid, worst.b);
        out.evaluations += 30;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++segments;
    }
    // Re-sum to shed accumulated cancellation in the running totals.
    double sum = 0.0;
    double err = 0.0;
    while (!heap.empty()) {
        sum += heap.top().value;
        err += heap.top().error;
        heap.pop();
    }
    out.value = sum;
    out.error = err;
    return out;
}

template <class F>
Result integrate(F&& f, double a, double b, const Tolerance& tol = {}) {
    const double bp[2] = {a, b};
    return integrate(std::forward<F>(f), std::span<const double>(bp, 2), tol);
}

/// Wynn's epsilon algorithm applied to a sequence of partial sums. Returns the
/// accelerated limit estimate and an error estimate from the last two
/// diagonal entries.
struct Extrapolation {
    double value;
    double error;
};
Extrapolation wynn_epsilon(std::span<const double> partial_sums);

}  // namespace memheat::quad
