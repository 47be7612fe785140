#pragma once

// Self-similar profile G of the kernel Y(x,t) = t^-sigma* G(|x| t^-theta),
// obtained by radial Fourier inversion of the symbol E_{alpha,alpha}(-rho^{2 beta}).

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "memheat/exponents.hpp"

namespace memheat {

struct GridSpec {
    double r_min = 1e-4;
    double r_max = 200.0;
    int points = 600;
};

enum class NearKind { Bounded, Log };
enum class FarKind { Power, Exp };

/// Below the first positive grid radius r_1:
///   Bounded: G(r) = g0 + c1 r^power   (g0 = G(0))
///   Log:     G(r) = g0 + c1 |log r|
/// Both are anchored so the model meets the table at r_1. For the log kind the
/// slope c1 comes from a least-squares fit on r <= r_fit; `fit_offset` is the
/// fitted intercept before anchoring.
struct NearModel {
    NearKind kind = NearKind::Bounded;
    double g0 = 0.0;
    double c1 = 0.0;
    double power = 2.0;
    double r_fit = 0.1;
    double fit_offset = 0.0;
};

/// Beyond the last grid radius r_M:
///   Power (beta < 1): G(r) = scale * sum_k d_k r^-(N + 2 beta k)
///   Exp   (beta = 1): G(r) = scale * r^m exp(-sigma_exp r^q)
/// `c_inf` is the least-squares constant on [r_M/4, r_M] (Power: multiplies
/// r^-(N+2beta) at leading order, so c_inf ~ d_1). `scale` is anchored to
/// the table value at r_M.
struct FarModel {
    FarKind kind = FarKind::Power;
    double c_inf = 0.0;
    double scale = 0.0;
    std::vector<double> d;  // d_1, d_2, ... (Power)
    double sigma_exp = 0.0;
    double m = 0.0;
    double q = 2.0;
    double r_handoff = 0.0;
};

class ProfileTable {
public:
    /// `radii` starts at 0 exactly when G(0) is finite (N < 4 beta). Fits the
    /// near and far models and the cumulative tables. Throws DomainError when
    /// the table violates its invariants (ordering, positivity, finiteness).
    ProfileTable(FractionalParams params, std::vector<double> radii, std::vector<double> values, double build_tolerance,
                 double max_error_estimate = 0.0, double split_point = 0.0);

    const FractionalParams& params() const noexcept { return params_; }
    std::span<const double> radii() const noexcept { return radii_; }
    std::span<const double> values() const noexcept { return values_; }
    double build_tolerance() const noexcept { return tol_; }
    double max_error_estimate() const noexcept { return max_err_; }
    double split_point() const noexcept { return split_; }
    const NearModel& near_model() const noexcept { return near_; }
    const FarModel& far_model() const noexcept { return far_; }
    bool bounded_at_origin() const noexcept { return near_.kind == NearKind::Bounded; }
    double r_first() const noexcept { return r_pos_.front(); }
    double r_last() const noexcept { return r_pos_.back(); }
    /// Smallest tabulated radius beyond which the table is nonincreasing.
    double r_mono() const noexcept { return r_mono_; }

    /// G(r) for r >= 0; +inf at r = 0 for the log kind.
    double value(double r) const;
    /// int_0^z G(w) w^{N-1} dw.
    double cumulative(double z) const;
    /// int_z^inf G(w) w^{N-1} dw, accurate also when it is tiny.
    double cumulative_tail(double z) const;
    double cumulative_total() const noexcept { return phi_total_; }
    /// int_{R^N} G.
    double mass() const;
    /// ||G||_{L^p(R^N)}; DomainError for p = inf with N = 4 beta.
    double lp_constant(double p) const;

private:
    double interp(double r) const;
    std::size_t locate(double s) const;
    double near_value(double r) const;
    double far_value(double r) const;
    double near_cumulative(double z) const;
    double far_tail(double z) const;
    void fit_models();
    void build_cumulative();

    FractionalParams params_;
    std::vector<double> radii_;
    std::vector<double> values_;
    double tol_;
    double max_err_;
    double split_;

    std::vector<double> r_pos_;  // positive radii
    std::vector<double> s_;      // log r_pos_
    std::vector<double> lg_;     // log G
    std::vector<double> dlg_;    // PCHIP slopes d log G / d log r
    bool uniform_ = false;
    double ds_ = 0.0;

    std::vector<double> phi_;   // cumulative at r_pos_
    std::vector<double> tail_;  // cumulative_tail at r_pos_
    double phi_total_ = 0.0;

    NearModel near_;
    FarModel far_;
    double r_mono_ = 0.0;
};

/// Builds the profile on a log grid. N must be 1, 2 or 3 with N <= 4 beta,
/// tol in [1e-8, 1e-4]. For beta = 1 the grid is cut at the radius where the
/// inversion error estimate exceeds tol relative to G (exponential decay);
/// the far model takes over from there. `jobs` <= 0 uses all hardware threads.
ProfileTable build_profile(const FractionalParams& params, const GridSpec& grid = {}, double tol = 1e-6, int jobs = 0);

/// Y(x,t) for |x| = r.
double eval_Y(double r, double t, const ProfileTable& profile);

/// ||Y(.,t)||_{L^p} = C_p t^-sigma(p).
double lp_norm_Y(double p, double t, const ProfileTable& profile);

/// Coefficients d_k of the large-|x| expansion G(r) ~ sum_k d_k r^-(N+2 beta k)
/// for beta < 1, k = 1..count. Terms with beta k integer vanish.
std::vector<double> far_field_coefficients(const FractionalParams& params, int count);

// ---------------------------------------------------------------------------
// Two-sided bound checks

struct BoundEntry {
    std::string name;
    double band_lo = 0.0;
    double band_hi = 0.0;
    double inf = 0.0;
    double sup = 0.0;
    double spread = 0.0;  // sup / inf
    double limit = 0.0;
    bool pass = false;
};

struct BoundReport {
    BoundEntry near;       // G or G/(1+|log r|) on [r_min, 1]
    BoundEntry far;        // G r^{N+2beta} or the exponential ratio
    BoundEntry envelope;   // Y t^{1-2alpha} |x|^{N+2beta} over |x| >= nu t^theta
    double sigma_exp = 0.0;
    double c_nu = 0.0;
    std::vector<double> c_nu_by_t;  // per t in {1, 10, 100}
};

struct BoundLimits {
    double near_spread = 5.0;
    double far_spread = 10.0;
    double far_lo = 1.0;   // far band starts here; ends at the table edge
    double far_hi = 0.0;   // 0: table edge
};

BoundReport check_kernel_bounds(const ProfileTable& profile, double nu, const BoundLimits& limits = {});

// ---------------------------------------------------------------------------
// Text serialization: "# memheat-profile v1" header, key=value lines, then a
// CSV body "r,G".

void save_profile(const ProfileTable& profile, std::ostream& out);
/// Re-validates every invariant; throws ParseError or DomainError.
ProfileTable load_profile(std::istream& in);

}  // namespace memheat
