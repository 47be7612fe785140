#pragma once

// Experiment configuration files and the subcommand orchestrator behind the
// memheat executable.
//
// Config format: "[section]" headers, "key = value" lines, '#' or ';'
// comments (whole-line or trailing). Unknown sections or keys are errors.
//
//   [params]   N, alpha, beta (rational "num/den" or decimal)
//   [forcing]  gamma (comma list), radius, amplitude
//   [regions]  region = exterior nu=1 | compact radius=1 |
//              intermediate omega=theta/2 nu=1 mu=2 | global   (repeatable)
//   [run]      p (comma list, "inf" allowed), t_min, t_max, t_points,
//              slope_tol, spread_tol, tol
//   [profile]  r_min, r_max, points, tol
//   [kernel]   nu
//   [output]   svg (true/false)

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "memheat/experiments.hpp"
#include "memheat/exponents.hpp"
#include "memheat/kernel.hpp"

namespace memheat {

struct ExperimentConfig {
    FractionalParams params;
    std::vector<double> gammas{1.0};
    double radius = 1.0;
    double amplitude = 1.0;
    std::vector<RegionSpec> regions;
    std::vector<double> p_list{1.0};
    double t_min = 1e2;
    double t_max = 1e4;
    int t_points = 16;
    double slope_tol = 0.05;
    double spread_tol = 3.0;
    double solver_tol = 1e-6;
    GridSpec grid;
    double profile_tol = 1e-6;
    double kernel_nu = 1.0;
    bool svg = true;
    std::filesystem::path cache_dir;
    std::filesystem::path out_dir{"."};

    std::vector<double> t_grid() const { return log_grid(t_min, t_max, t_points); }
};

/// Throws ParseError with "<source>:<line>: ..." diagnostics; every value is
/// validated against its module-level invariant at parse time.
ExperimentConfig parse_config(std::istream& in, const std::string& source = "config");
ExperimentConfig load_config(const std::filesystem::path& path);

/// FNV-1a hash of (N, alpha, beta, grid, tol).
std::uint64_t profile_cache_key(const FractionalParams& params, const GridSpec& grid, double tol);

/// Loads the profile from cache_dir when present, otherwise builds it and
/// stores it there. An empty cache_dir disables caching.
ProfileTable cached_profile(const ExperimentConfig& cfg, int jobs);

enum ExitCode : int { kExitPass = 0, kExitUsage = 1, kExitFail = 2, kExitInconclusive = 3 };

/// Writes verify.csv, summary.txt and (optionally) one SVG per cell into
/// out_dir. Throws DomainError on an empty list before touching the disk.
void emit_report(const std::vector<VerificationReport>& reports, const std::filesystem::path& out_dir, bool svg);

/// Exit code for a set of verification outcomes.
int verdict_exit_code(const std::vector<VerificationReport>& reports);

/// Runs one subcommand (exponents, profile, kernel-check, simulate, verify,
/// ksz). Progress goes to `log`. Returns an ExitCode; config and usage
/// errors are reported to `log` with kExitUsage.
int run_config(const std::string& subcommand, const ExperimentConfig& cfg, int jobs, std::ostream& log);
int run_config(const std::string& subcommand, const std::filesystem::path& config_path,
               const std::filesystem::path& out_dir, const std::filesystem::path& cache_dir, int jobs,
               std::ostream& log);

}  // namespace memheat
