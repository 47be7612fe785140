#include "memheat/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>

#include "memheat/errors.hpp"
#include "memheat/parallel.hpp"
#include "memheat/quadrature.hpp"

namespace memheat {

namespace {

constexpr double kAbsFloor = 1e-14;

std::vector<double> sorted_unique(std::vector<double> v, double lo, double hi) {
    std::vector<double> out;
    for (double x : v) {
        if (x >= lo && x <= hi && std::isfinite(x)) out.push_back(x);
    }
    out.push_back(lo);
    out.push_back(hi);
    std::sort(out.begin(), out.end());
    std::vector<double> uniq;
    for (double x : out) {
        if (uniq.empty() || x > uniq.back() * (1.0 + 1e-12) + 1e-300) uniq.push_back(x);
    }
    return uniq;
}

}  // namespace

// ---------------------------------------------------------------------------
// Forcing and series

void Forcing::validate() const {
    if (!std::isfinite(gamma)) throw DomainError("forcing: gamma must be finite");
    if (!(amplitude > 0.0) || !std::isfinite(amplitude)) throw DomainError("forcing: amplitude must be > 0");
    if (!(radius > 0.0) || !std::isfinite(radius)) throw DomainError("forcing: radius must be > 0");
}

double Forcing::time_factor(double t) const { return amplitude * std::pow(1.0 + t, -gamma); }

double Forcing::l1_norm(int dim_n, double t) const {
    return time_factor(t) * unit_ball_volume(dim_n) * std::pow(radius, dim_n);
}

double Forcing::total_mass(int dim_n) const {
    if (!(gamma > 1.0)) return std::numeric_limits<double>::infinity();
    return amplitude * unit_ball_volume(dim_n) * std::pow(radius, dim_n) / (gamma - 1.0);
}

void NormSeries::validate() const {
    if (samples.size() < 8) throw DomainError("norm series: at least 8 samples required");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!std::isfinite(samples[i].value) || !(samples[i].value > 0.0)) {
            throw DomainError("norm series: non-positive or non-finite value at t=" + std::to_string(samples[i].t));
        }
        if (i > 0 && !(samples[i].t > samples[i - 1].t)) throw DomainError("norm series: t must increase strictly");
    }
    if (samples.back().t < 100.0 * samples.front().t * (1.0 - 1e-12)) {
        throw DomainError("norm series: samples must span at least two decades of t");
    }
}

void write_norm_series_csv(const NormSeries& series, std::ostream& out) {
    out << "t,value,est_error,region,p\n";
    const std::string region = region_key(series.region);
    const std::string p = format_p(series.p);
    char buf[128];
    for (const NormSample& s : series.samples) {
        std::snprintf(buf, sizeof buf, "%.10e,%.10e,%.3e,", s.t, s.value, s.est_error);
        out << buf << '"' << region << "\"," << p << '\n';
    }
}

std::vector<double> log_grid(double t_min, double t_max, int n) {
    if (!(t_min > 0.0 && t_max > t_min && n >= 2)) throw DomainError("log_grid: need 0 < t_min < t_max and n >= 2");
    std::vector<double> g(n);
    const double l0 = std::log(t_min);
    const double l1 = std::log(t_max);
    for (int i = 0; i < n; ++i) g[i] = std::exp(l0 + (l1 - l0) * i / (n - 1));
    g.front() = t_min;
    g.back() = t_max;
    return g;
}

// ---------------------------------------------------------------------------
// Solver

Solver::Solver(const ProfileTable& profile, Forcing forcing, double tol)
    : profile_(&profile), forcing_(forcing), tol_(tol) {
    forcing_.validate();
    if (!(tol >= 1e-7 && tol <= 1e-3)) throw DomainError("solver: tol must lie in [1e-7, 1e-3]");
}

// int_{|y| < R'} G(|x' - y|) dy at |x'| = rs, R' = radius_s.
double Solver::scaled_ball_integral(double rs, double radius_s) const {
    const ProfileTable& g = *profile_;
    const int n = g.params().dim_n;
    const double a = rs - radius_s;
    const double b = rs + radius_s;
    if (n == 1) {
        if (a < 0.0) return g.cumulative(b) + g.cumulative(-a);
        if (b - a < 0.5 * a) return quad::gauss([&](double w) { return g.value(w); }, a, b, 8);
        const double phi_a = g.cumulative(a);
        if (phi_a <= 0.5 * g.cumulative_total()) return g.cumulative(b) - phi_a;
        return g.cumulative_tail(a) - g.cumulative_tail(b);
    }
    const double area = unit_sphere_area(n);
    if (rs == 0.0) return area * g.cumulative(radius_s);
    const double full = a < 0.0 ? area * g.cumulative(-a) : 0.0;
    // Measure of the sphere of radius rho about x' that lies inside B_{R'}.
    auto shell = [&](double rho) {
        if (n == 3) return std::numbers::pi * rho * (radius_s - rs + rho) * (radius_s + rs - rho) / rs;
        const double c = std::clamp((rs * rs + rho * rho - radius_s * radius_s) / (2.0 * rs * rho), -1.0, 1.0);
        return 2.0 * rho * std::acos(c);
    };
    quad::Tolerance tol;
    tol.rel = 1e-9;
    tol.max_segments = 400;
    const double part = quad::integrate([&](double rho) { return g.value(rho) * shell(rho); }, std::abs(a), b, tol).value;
    return full + part;
}

double Solver::convolve_space(double r, double s) const {
    if (!(s > 0.0)) throw DomainError("convolve_space: s must be > 0");
    const FractionalParams& prm = profile_->params();
    const double k = std::pow(s, -prm.theta());
    // tau^{-sigma*} * tau^{N theta} = tau^{alpha - 1}
    return std::pow(s, prm.alpha - 1.0) * scaled_ball_integral(std::abs(r) * k, forcing_.radius * k);
}

Estimate Solver::mild_solution(double r, double t) const {
    if (!(t > 0.0)) throw DomainError("mild_solution: t must be > 0");
    r = std::abs(r);
    const FractionalParams& prm = profile_->params();
    const double alpha = prm.alpha;
    const double inv_alpha = 1.0 / alpha;
    const double two_beta = 2.0 * prm.beta_value();
    const double big_r = forcing_.radius;
    const double vt = std::pow(t, alpha);

    // v = tau^alpha, tau = t - s; tau^{alpha-1} dtau = dv / alpha and
    // tau^{-theta} = v^{-1/(2 beta)}.
    auto integrand = [&](double v) {
        const double tau = std::pow(v, inv_alpha);
        const double k = std::pow(v, -1.0 / two_beta);
        return std::pow(1.0 + std::max(0.0, t - tau), -forcing_.gamma) * scaled_ball_integral(r * k, big_r * k);
    };

    std::vector<double> bp;
    for (int k = 1; k <= 30; ++k) bp.push_back(vt * std::ldexp(1.0, -k));
    for (double j = 1.0; j < 0.5 * t; j *= 2.0) bp.push_back(std::pow(t - j, alpha));
    for (double edge : {std::abs(r - big_r), r + big_r}) {
        if (edge <= 0.0) continue;
        const double ve = std::pow(edge, two_beta);
        for (double f : {0.25, 0.5, 1.0, 2.0, 4.0}) bp.push_back(f * ve);
    }
    const std::vector<double> pts = sorted_unique(std::move(bp), 0.0, vt);

    quad::Tolerance tol;
    tol.rel = tol_;
    tol.abs = kAbsFloor * alpha / forcing_.amplitude;
    tol.max_segments = 3000;
    const quad::Result res = quad::integrate(integrand, pts, tol);
    const double scale = forcing_.amplitude * inv_alpha;
    if (!res.converged) {
        throw ConvergenceError("mild_solution: time quadrature did not converge at r=" + std::to_string(r) +
                                   ", t=" + std::to_string(t),
                               res.error / std::max(std::abs(res.value), 1e-300));
    }
    return {std::max(0.0, scale * res.value), scale * res.error};
}

Estimate Solver::radial_norm(double t, double p, double r_lo, double r_hi, bool infinite,
                             const std::function<double(double)>& fn) const {
    const FractionalParams& prm = profile_->params();
    const int n = prm.dim_n;
    const double beta = prm.beta_value();
    const double big_r = forcing_.radius;
    const double scale = std::max(big_r, std::pow(t, prm.theta()));
    const double area = unit_sphere_area(n);

    if (std::isinf(p)) {
        const double top = infinite ? std::max(r_lo, 0.0) + 8.0 * scale : r_hi;
        std::vector<double> xs;
        if (r_lo <= 0.0) xs.push_back(0.0);
        const double first = r_lo > 0.0 ? r_lo : std::min(big_r, scale) * 1e-3;
        for (int i = 0; i < 64; ++i) xs.push_back(first * std::pow(top / first, i / 63.0));
        std::vector<double> ys(xs.size());
        std::size_t best = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            ys[i] = fn(xs[i]);
            if (ys[i] > ys[best]) best = i;
        }
        double lo = xs[best > 0 ? best - 1 : 0];
        double hi = xs[std::min(best + 1, xs.size() - 1)];
        double vmax = ys[best];
        if (hi > lo) {
            constexpr double g = 0.6180339887498949;
            double x1 = hi - g * (hi - lo);
            double x2 = lo + g * (hi - lo);
            double f1 = fn(x1);
            double f2 = fn(x2);
            for (int it = 0; it < 30; ++it) {
                if (f1 > f2) {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - g * (hi - lo);
                    f1 = fn(x1);
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + g * (hi - lo);
                    f2 = fn(x2);
                }
            }
            vmax = std::max({vmax, f1, f2});
        }
        return {vmax, tol_ * vmax};
    }

    const double cut = infinite ? (beta < 1.0 ? 1e6 : 40.0) * scale : r_hi;
    std::vector<double> bp{big_r, scale};
    const double base = std::min(big_r, scale) / 64.0;
    for (double x = base; x < cut; x *= (x < 4.0 * scale ? 2.0 : 4.0)) bp.push_back(x);
    for (double f : {0.5, 0.9, 1.1, 1.5}) bp.push_back(f * big_r);
    const std::vector<double> pts = sorted_unique(std::move(bp), r_lo, cut);

    auto integrand = [&](double r) {
        const double v = fn(r);
        return area * std::pow(r, n - 1) * std::pow(v, p);
    };
    quad::Tolerance tol;
    tol.rel = 10.0 * tol_;
    tol.max_segments = 2000;
    const quad::Result res = quad::integrate(integrand, pts, tol);
    double total = res.value;
    double err = res.error;
    if (infinite && beta < 1.0) {
        // u ~ C r^-(N + 2 beta) beyond the cut.
        const double tail = area * std::pow(fn(cut), p) * std::pow(cut, n) / (p * (n + 2.0 * beta) - n);
        total += tail;
        err += 0.1 * tail;
    }
    if (!(total > 0.0)) return {0.0, err};
    const double value = std::pow(total, 1.0 / p);
    return {value, value * (err / total / p + tol_)};
}

Estimate Solver::region_lp_norm(double t, double p, const RegionSpec& region) const {
    if (!(t > 0.0)) throw DomainError("region_lp_norm: t must be > 0");
    if (!(p >= 1.0)) throw DomainError("region_lp_norm: p must lie in [1, inf]");
    const FractionalParams& prm = profile_->params();
    validate_region(region, prm);
    auto u = [&](double r) { return mild_solution(r, t).value; };
    return std::visit(
        [&](const auto& reg) -> Estimate {
            using T = std::decay_t<decltype(reg)>;
            if constexpr (std::is_same_v<T, Exterior>) {
                return radial_norm(t, p, reg.nu * std::pow(t, prm.theta()), 0.0, true, u);
            } else if constexpr (std::is_same_v<T, CompactBall>) {
                return radial_norm(t, p, 0.0, reg.radius, false, u);
            } else if constexpr (std::is_same_v<T, Intermediate>) {
                const double g = std::pow(t, reg.omega);
                if (reg.nu * g < 1.0) {
                    throw DomainError("intermediate region: requires nu t^omega >= 1 (t=" + std::to_string(t) + ")");
                }
                return radial_norm(t, p, reg.nu * g, reg.mu * g, false, u);
            } else {
                return radial_norm(t, p, 0.0, 0.0, true, u);
            }
        },
        region);
}

Estimate Solver::deviation_lp_norm(double t, double p, double m) const {
    if (!(t > 0.0)) throw DomainError("deviation_lp_norm: t must be > 0");
    auto dev = [&](double r) { return std::abs(mild_solution(r, t).value - m * eval_Y(r, t, *profile_)); };
    return radial_norm(t, p, 0.0, 0.0, true, dev);
}

double convolve_space(const ProfileTable& profile, double r, double s, const Forcing& forcing) {
    return Solver(profile, forcing).convolve_space(r, s);
}

double mild_solution(double r, double t, const Forcing& forcing, const ProfileTable& profile, double tol) {
    return Solver(profile, forcing, tol).mild_solution(r, t).value;
}

double region_lp_norm(double t, double p, const RegionSpec& region, const Forcing& forcing,
                      const ProfileTable& profile, double tol) {
    return Solver(profile, forcing, tol).region_lp_norm(t, p, region).value;
}

NormSeries measure_norm_series(const Solver& solver, double p, const RegionSpec& region,
                               const std::vector<double>& t_grid, int jobs) {
    NormSeries out;
    out.region = region;
    out.p = p;
    out.samples.resize(t_grid.size());
    parallel_for(t_grid.size(), jobs, [&](std::size_t i) {
        const Estimate e = solver.region_lp_norm(t_grid[i], p, region);
        out.samples[i] = {t_grid[i], e.value, e.error};
    });
    return out;
}

}  // namespace memheat
