#pragma once

// Exponent algebra for the fully nonlocal heat equation
//   d_t^alpha u + (-Laplacian)^beta u = f   in R^N x (0, inf),  u(., 0) = 0,
// and the decay/growth rate oracle for its mild solution in the small
// dimension regime N <= 4 beta.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace memheat {

/// Exact positive rational used for beta so that the critical dimensions
/// N = 2 beta and N = 4 beta are detected without floating-point equality.
struct Rational {
    std::int64_t num = 1;
    std::int64_t den = 1;

    double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }

    /// Parses "num/den", an integer, or a finite decimal such as "0.3".
    static Rational parse(const std::string& text);
    std::string to_string() const;

    friend bool operator==(const Rational&, const Rational&) = default;
};

Rational make_rational(std::int64_t num, std::int64_t den);

enum class Regime {
    BelowTwoBeta,       // N < 2 beta
    TwoBeta,            // N = 2 beta
    BetweenTwoFourBeta, // 2 beta < N < 4 beta
    FourBeta,           // N = 4 beta
    AboveFourBeta,      // N > 4 beta, outside this library's scope
};

const char* regime_label(Regime r);

struct FractionalParams {
    int dim_n = 1;
    double alpha = 0.5;
    Rational beta{1, 2};

    /// Throws DomainError naming the offending field.
    void validate() const;
    Regime regime() const;
    bool small_dimension() const { return regime() != Regime::AboveFourBeta; }
    double beta_value() const { return beta.value(); }
    double theta() const { return alpha / (2.0 * beta.value()); }
    double sigma_star() const { return 1.0 - alpha + dim_n * theta(); }
};

/// p = +inf is represented by std::numeric_limits<double>::infinity().
struct ExponentSet {
    double theta;
    double sigma_star;
    double sigma_p;
    /// N/(N - 2 beta) when N > 2 beta, +inf when N = 2 beta, empty when every
    /// p in [1, inf] is subcritical (N < 2 beta).
    std::optional<double> p_crit;
    double q_crit;
};

ExponentSet derive_exponents(const FractionalParams& params, double p);

enum class PClass { Subcritical, Critical, Supercritical };
const char* pclass_label(PClass c);

struct PClassification {
    PClass kind;
    std::optional<double> q_crit;  // present for non-subcritical p
};

PClassification classify_p(const FractionalParams& params, double p);

// ---------------------------------------------------------------------------
// Regions

struct Exterior {
    double nu = 1.0;  // |x| >= nu t^theta
};
struct CompactBall {
    double radius = 1.0;
};
/// nu g(t) < |x| < mu g(t) with g(t) = t^omega, 0 < omega < theta.
struct Intermediate {
    double omega = 0.1;
    double nu = 1.0;
    double mu = 2.0;
};
struct Global {};

using RegionSpec = std::variant<Exterior, CompactBall, Intermediate, Global>;

/// Throws DomainError when the region's own invariants fail; for
/// Intermediate this includes 0 < omega < theta.
void validate_region(const RegionSpec& region, const FractionalParams& params);
std::string region_label(const RegionSpec& region);
/// Stable machine-readable key, e.g. "exterior(nu=1)".
std::string region_key(const RegionSpec& region);

// ---------------------------------------------------------------------------
// Rate expressions

/// t^t_pow (log t)^logt_pow g(t)^g_pow log(t^theta / g(t))^loggap_pow
struct RateTerm {
    double t_pow = 0.0;
    int logt_pow = 0;
    double g_pow = 0.0;
    int loggap_pow = 0;

    friend bool operator==(const RateTerm&, const RateTerm&) = default;
};

/// Extra assumptions on f that the matching rate statement needs besides the
/// L^1 size condition ||f(t)||_1 <= C (1+t)^-gamma.
struct HypothesisFlags {
    bool pointwise_decay = false;   // |f(x,t)| <= C |x|^-N (1+t)^-gamma for large |x|
    bool lq_integrability = false;  // ||f(t)||_q <= C (1+t)^-gamma for some q > q_c(p)
};

/// Effective law once g(t) = t^omega is substituted.
struct DominantRate {
    double t_pow;
    int log_pow;
};

struct RateExpr {
    double prefactor_g_pow = 0.0;
    std::vector<RateTerm> terms;  // semantics: max over terms
    std::string row;              // human-readable name of the applied rate row
    HypothesisFlags hypotheses;

    /// Canonical rendering, e.g.
    /// "g^{0.00} * max[ t^{-0.500} * log(t^th/g)^1 ]". Bit-stable.
    std::string render() const;

    /// Reduces g = t^omega and log(t^theta/g) = (theta - omega) log t, then
    /// returns the dominant term (largest t power, ties broken by the log
    /// power). The prefactor g^{N/p} is NOT included.
    DominantRate dominant(double omega = 0.0) const;
    /// Same, but with the prefactor folded in.
    DominantRate dominant_with_prefactor(double omega) const;
};

/// Rate law for ||u(., t)||_{L^p(region)} under ||f(t)||_1 ~ (1+t)^-gamma.
/// Threshold comparisons on gamma and p are performed with a relative
/// tolerance of 1e-12 so that decimal inputs such as p = 2.5 land on the
/// boundary rows they denote. Throws OutOfScopeError when N > 4 beta.
RateExpr predicted_rate(const FractionalParams& params, double gamma, double p, const RegionSpec& region);

// ---------------------------------------------------------------------------
// Closed-form helper integrals

enum class AsymptoticClass { Power, Log, Bounded };
const char* asymptotic_class_label(AsymptoticClass c);

struct HelperIntegral {
    double value;
    AsymptoticClass cls;
    double power;  // exponent of the growing power for cls == Power
};

/// int_0^{t/2} (1+s)^-gamma ds, t >= 2. Class t^{1-gamma}, log t or O(1).
HelperIntegral power_log_integral(double gamma, double t);
/// int_{t/2}^{t-1} (t-s)^-sigma ds, t >= 2, sigma > 0. Class t^{1-sigma}, log t or O(1).
HelperIntegral near_endpoint_integral(double sigma, double t);

/// |B_1| in R^N.
double unit_ball_volume(int dim_n);
/// |S^{N-1}|.
double unit_sphere_area(int dim_n);

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// "inf" for +infinity, otherwise the shortest round-trip decimal.
std::string format_p(double p);

}  // namespace memheat
