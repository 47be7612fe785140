#pragma once

// Mild solution u(x,t) = int_0^t int Y(x-y, t-s) f(y,s) dy ds for separable
// radial forcings f(x,t) = amplitude (1+t)^-gamma chi_{B_R}(x), and its L^p
// norms over the exterior, compact, intermediate and global regions.

#include <functional>
#include <iosfwd>
#include <vector>

#include "memheat/exponents.hpp"
#include "memheat/kernel.hpp"

namespace memheat {

struct Forcing {
    double gamma = 1.0;
    double amplitude = 1.0;
    double radius = 1.0;

    void validate() const;
    double time_factor(double t) const;
    /// ||f(.,t)||_{L^1(R^N)}.
    double l1_norm(int dim_n, double t) const;
    /// int_0^inf ||f(.,s)||_1 ds; +inf unless gamma > 1.
    double total_mass(int dim_n) const;
};

struct Estimate {
    double value = 0.0;
    double error = 0.0;
};

struct NormSample {
    double t = 0.0;
    double value = 0.0;
    double est_error = 0.0;
};

struct NormSeries {
    RegionSpec region = Global{};
    double p = 1.0;
    std::vector<NormSample> samples;

    /// At least 8 samples over two decades, strictly increasing t, finite
    /// positive values. Throws DomainError.
    void validate() const;
};

/// CSV with header "t,value,est_error,region,p".
void write_norm_series_csv(const NormSeries& series, std::ostream& out);

/// Stateless evaluator binding one profile and one forcing. All methods are
/// const and safe to call concurrently.
class Solver {
public:
    Solver(const ProfileTable& profile, Forcing forcing, double tol = 1e-6);

    const ProfileTable& profile() const noexcept { return *profile_; }
    const Forcing& forcing() const noexcept { return forcing_; }
    double tol() const noexcept { return tol_; }

    /// W(r, s) = (Y(., s) * chi_{B_R})(x) at |x| = r.
    double convolve_space(double r, double s) const;
    /// u(x, t) at |x| = r. Throws ConvergenceError if the time quadrature
    /// misses its tolerance.
    Estimate mild_solution(double r, double t) const;
    /// ||u(., t)||_{L^p(region)}.
    Estimate region_lp_norm(double t, double p, const RegionSpec& region) const;
    /// ||u(., t) - m Y(., t)||_{L^p(R^N)}.
    Estimate deviation_lp_norm(double t, double p, double m) const;

private:
    double scaled_ball_integral(double rs, double radius_s) const;
    Estimate radial_norm(double t, double p, double r_lo, double r_hi, bool infinite,
                         const std::function<double(double)>& fn) const;

    const ProfileTable* profile_;
    Forcing forcing_;
    double tol_;
};

double convolve_space(const ProfileTable& profile, double r, double s, const Forcing& forcing);
double mild_solution(double r, double t, const Forcing& forcing, const ProfileTable& profile, double tol = 1e-6);
double region_lp_norm(double t, double p, const RegionSpec& region, const Forcing& forcing,
                      const ProfileTable& profile, double tol = 1e-6);

/// Samples region_lp_norm on t_grid, concurrently over t.
NormSeries measure_norm_series(const Solver& solver, double p, const RegionSpec& region,
                               const std::vector<double>& t_grid, int jobs = 0);

/// n points log-spaced on [t_min, t_max].
std::vector<double> log_grid(double t_min, double t_max, int n);

}  // namespace memheat
