#pragma once

#include <vector>

namespace memheat::special {

/// Parameters of the two-parameter Mittag-Leffler function E_{a,b}.
struct MlParams {
    double alpha_ml;  // in (0, 1]
    double beta_ml;   // > 0
};

/// Evaluator for E_{a,b} with the series and asymptotic coefficients
/// precomputed; prefer this over the free function in hot loops. Immutable
/// after construction and safe to share between threads.
class MittagLeffler {
public:
    explicit MittagLeffler(MlParams p);

    double operator()(double x) const;
    const MlParams& params() const noexcept { return params_; }

private:
    double dispatch(double b, double x) const;
    bool try_series(double x, double& out) const;
    bool try_asymptotic(double b, double x, double& out) const;

    MlParams params_;
    std::vector<long double> series_coef_;  // 1 / Gamma(a k + b)
    std::vector<double> asym_coef_;         // 1 / Gamma(b - a k), k >= 1
    double series_bound_;                   // largest tolerated series term
};

/// E_{a,b}(x) = sum_k x^k / Gamma(a k + b) on the closed negative real axis.
///
/// Chooses per argument between a long-double power series (while the terms
/// stay within six orders of magnitude of the sum), the inverse-power
/// asymptotic expansion (when its smallest term is below 1e-15 of the sum),
/// and otherwise the real-axis integral representation obtained by collapsing
/// the Hankel contour onto the negative axis. Relative accuracy is about 1e-12
/// for |x| <= 1e8.
///
/// Throws DomainError for x > 0, non-finite x, or parameters out of range.
double mittag_leffler(MlParams p, double x);

/// Gamma(x) for x > 0. Throws DomainError otherwise.
double gamma_fn(double x);

/// 1 / Gamma(x) for any finite real x; exactly zero at the poles.
double rgamma(double x);

/// Bessel function of the first kind J_nu(x), x >= 0, for
/// nu in {0, 1/2, -1/2, 1, 3/2}. Absolute accuracy about 1e-13 for x <= 1e4.
/// Throws DomainError for other orders or negative x.
double bessel_j(double order, double x);

}  // namespace memheat::special
