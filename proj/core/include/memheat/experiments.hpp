#pragma once

// Rate fitting, theorem verification and the subcritical limit check, plus
// the CSV / text / SVG report writers.

#include <iosfwd>
#include <string>
#include <vector>

#include "memheat/exponents.hpp"
#include "memheat/kernel.hpp"
#include "memheat/solver.hpp"

namespace memheat {

struct FittedRate {
    double t_pow = 0.0;  // pure-power slope, or the power part when a log is detected
    bool log_detected = false;
    int log_pow = 0;
    double residual = 0.0;  // RMS of log residuals of the pure fit
    double t_min = 0.0;
    double t_max = 0.0;
    bool ill_conditioned = false;
    double pure_slope = 0.0;
    double aug_t_pow = 0.0;     // t exponent in the fit with a log log t regressor
    double aug_log_coef = 0.0;  // coefficient of log log t
};

/// Least-squares fit of log value against log t. With allow_log, also fits
/// value ~ C t^a (log t)^L and reports a log factor when (a) L is within 0.5
/// of an integer k >= 1 and (b) value t^-a grows monotonically by >= 25%
/// across the window while value t^-a (log t)^-k stays within +-10% of its
/// geometric mean. A series that is too short or too narrow yields
/// ill_conditioned = true rather than an exception.
FittedRate fit_rate(const NormSeries& series, bool allow_log = true);

/// Slope of log(value / (log t)^log_pow) against log t.
double compensated_slope(const NormSeries& series, int log_pow);

enum class LogVerdict { Match, Mismatch, Inconclusive };
const char* log_verdict_label(LogVerdict v);

struct VerifyConfig {
    FractionalParams params;
    double gamma = 1.0;
    double p = 1.0;
    RegionSpec region = Global{};
    double radius = 1.0;
    double amplitude = 1.0;
    std::vector<double> t_grid;  // empty: 16 points on [1e2, 1e4]
    double slope_tol = 0.05;
    double spread_tol = 3.0;
    double solver_tol = 1e-6;
};

struct VerificationReport {
    VerifyConfig config;
    RateExpr predicted;
    double predicted_slope = 0.0;
    int predicted_log_pow = 0;
    FittedRate fitted;
    double measured_slope = 0.0;  // compensated by the predicted log power
    double slope_error = 0.0;
    double spread = 0.0;          // max/min of the compensated series over the last decade
    LogVerdict log_verdict = LogVerdict::Inconclusive;
    bool pass = false;
    bool infeasible = false;
    std::string note;
    NormSeries series;

    /// "exterior(nu=1)|p=2|gamma=0.5": the deterministic ordering key.
    std::string key() const;
};

/// Measures the norm series for the sharpness forcing and compares it with
/// the predicted rate. Solver failures produce infeasible = true.
VerificationReport verify_rate(const VerifyConfig& config, const ProfileTable& profile, int jobs = 0);

/// Judges an already measured series (used by verify_rate).
VerificationReport judge_series(const VerifyConfig& config, NormSeries series);

struct KszCheck {
    double m_infinity = 0.0;
    double sigma_p = 0.0;
    std::vector<double> t;
    std::vector<double> deviation;  // t^sigma(p) ||u - M Y||_p
    std::vector<double> reference;  // t^sigma(p) ||u||_p
    double final_ratio = 0.0;
    bool decreasing = false;
    bool pass = false;
};

/// Requires gamma > 1 and subcritical p.
KszCheck ksz_limit_check(const ProfileTable& profile, const Forcing& forcing, double p,
                         const std::vector<double>& t_grid, double tol = 1e-6, int jobs = 0);

// ---------------------------------------------------------------------------
// Reports

/// Sorts by key, then writes one CSV row per report. Throws DomainError on an
/// empty list.
void write_verification_csv(std::vector<VerificationReport> reports, std::ostream& out);
/// One line per report; failing cells start with "FAIL".
void write_summary(std::vector<VerificationReport> reports, std::ostream& out);
/// Log-log plot of the measured series with the predicted slope guide.
void write_svg(const VerificationReport& report, std::ostream& out);
void write_ksz_csv(const KszCheck& check, std::ostream& out);

/// Filesystem-safe name for a report key.
std::string file_stem(const std::string& key);

}  // namespace memheat
