#include "memheat/kernel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>

#include "memheat/errors.hpp"
#include "memheat/parallel.hpp"
#include "memheat/quadrature.hpp"
#include "memheat/special_functions.hpp"

namespace memheat {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInfD = std::numeric_limits<double>::infinity();
constexpr int kMaxAsymTerms = 40;
constexpr int kTailIntervals = 40;

// Prefactor of the radial inversion formula; for N = 3 it is further divided by r.
double inversion_constant(int n) {
    switch (n) {
        case 1: return 1.0 / kPi;
        case 2: return 0.5 / kPi;
        default: return 0.5 / (kPi * kPi);
    }
}

void require_supported(const FractionalParams& params) {
    params.validate();
    if (params.dim_n < 1 || params.dim_n > 3) {
        throw OutOfScopeError("profile numerics support N in {1,2,3}, got N=" + std::to_string(params.dim_n));
    }
    if (!params.small_dimension()) {
        throw OutOfScopeError("N > 4 beta is outside the small-dimension regime");
    }
}

// Large-argument expansion of the symbol: E_{a,a}(-x) ~ sum_{k>=2} c_k x^-k.
struct AsymptoticSymbol {
    std::vector<double> c;  // c[k]
    double two_beta = 1.0;
    double x_split = 0.0;

    double at_x(double y) const {  // y = 1/x
        double s = 0.0;
        for (std::size_t k = c.size() - 1; k >= 2; --k) s = s * y + c[k];
        return s * y * y;
    }
    double operator()(double rho) const { return at_x(std::pow(rho, -two_beta)); }
};

AsymptoticSymbol make_asymptotic(double alpha, double two_beta) {
    AsymptoticSymbol out;
    out.two_beta = two_beta;
    std::vector<double> coef(kMaxAsymTerms + 1, 0.0);
    for (int k = 1; k <= kMaxAsymTerms; ++k) {
        coef[k] = -(k % 2 == 0 ? 1.0 : -1.0) * special::rgamma(alpha - alpha * k);
    }
    // Smallest x at which the truncated expansion is accurate to ~1e-16,
    // measured by the envelope Gamma(1 - a + a k) / (pi x^k) of the first
    // omitted term.
    for (double x = 1.0; x < 1e6; x *= 1.05) {
        const double lx = std::log(x);
        int best_k = 2;
        double best_env = kInfD;
        for (int k = 2; k <= kMaxAsymTerms; ++k) {
            const double env = std::exp(std::lgamma(1.0 - alpha + alpha * k) - k * lx) / kPi;
            if (env < best_env) {
                best_env = env;
                best_k = k;
            }
        }
        double sum = 0.0;
        for (int k = 2; k < best_k; ++k) sum += coef[k] * std::pow(x, -k);
        if (best_k > 2 && best_env <= 1e-16 * std::abs(sum)) {
            out.c.assign(coef.begin(), coef.begin() + best_k);
            out.x_split = x;
            return out;
        }
    }
    throw ConvergenceError("no split point found for the symbol expansion", kInfD);
}

double mcmahon_j0_zero(int k) {
    const double b = (k - 0.25) * kPi;
    const double b2 = b * b;
    return b + 1.0 / (8.0 * b) - 31.0 / (384.0 * b * b2) + 3779.0 / (15360.0 * b * b2 * b2);
}

struct RadiusResult {
    double value = 0.0;
    double error = 0.0;
};

// Inversion integrals for one parameter set, sharing the symbol samples on
// [0, A] between all radii.
class Inverter {
public:
    Inverter(const FractionalParams& params, double r_max, int jobs)
        : n_(params.dim_n), beta2_(2.0 * params.beta_value()) {
        const double alpha = params.alpha;
        asym_ = make_asymptotic(alpha, beta2_);
        split_ = std::pow(asym_.x_split, 1.0 / beta2_);

        const double h = std::min(0.25, 3.0 / r_max);
        const quad::GaussRule& rule = quad::gauss_legendre(kPanelPoints);
        // Geometric panels from 1e-14 until their width reaches h, then uniform.
        std::vector<std::pair<double, double>> geo{{0.0, 1e-14}};
        double edge = 1e-14;
        while (edge < split_ && edge < h) {
            const double next = std::min({2.0 * edge, split_, edge + h});
            geo.emplace_back(edge, next);
            edge = next;
        }
        uni_start_ = edge;
        uni_count_ = edge < split_ ? static_cast<int>(std::ceil((split_ - edge) / h)) : 0;
        uni_half_ = uni_count_ > 0 ? 0.5 * (split_ - edge) / uni_count_ : 0.0;

        for (const auto& [a, b] : geo) {
            const double half = 0.5 * (b - a);
            const double mid = 0.5 * (a + b);
            for (int i = 0; i < kPanelPoints; ++i) {
                geo_rho_.push_back(mid + half * rule.nodes[i]);
                geo_w_.push_back(half * rule.weights[i]);
            }
        }
        for (int i = 0; i < kPanelPoints; ++i) {
            uni_off_[i] = uni_half_ * rule.nodes[i];
            uni_w_[i] = uni_half_ * rule.weights[i];
        }

        const special::MittagLeffler ml({alpha, alpha});
        auto symbol = [&](double rho) { return ml(-std::pow(rho, beta2_)); };
        geo_s_.resize(geo_rho_.size());
        for (std::size_t i = 0; i < geo_rho_.size(); ++i) geo_s_[i] = symbol(geo_rho_[i]);
        uni_s_.resize(static_cast<std::size_t>(uni_count_) * kPanelPoints);
        parallel_for(static_cast<std::size_t>(uni_count_), jobs, [&](std::size_t j) {
            const double mid = uni_start_ + (2.0 * j + 1.0) * uni_half_;
            for (int i = 0; i < kPanelPoints; ++i) uni_s_[j * kPanelPoints + i] = symbol(mid + uni_off_[i]);
        });

        // Weighted samples of rho^{N-1} S (N = 1, 2) or rho S (N = 3).
        const int pw = n_ == 3 ? 1 : n_ - 1;
        for (std::size_t i = 0; i < geo_rho_.size(); ++i) {
            geo_f_.push_back(geo_w_[i] * geo_s_[i] * std::pow(geo_rho_[i], pw));
            magnitude_ += std::abs(geo_f_.back());
        }
        uni_f_.resize(uni_s_.size());
        for (int j = 0; j < uni_count_; ++j) {
            const double mid = uni_start_ + (2.0 * j + 1.0) * uni_half_;
            for (int i = 0; i < kPanelPoints; ++i) {
                const std::size_t idx = static_cast<std::size_t>(j) * kPanelPoints + i;
                uni_f_[idx] = uni_w_[i] * uni_s_[idx] * std::pow(mid + uni_off_[i], pw);
                magnitude_ += std::abs(uni_f_[idx]);
            }
        }
    }

    double split() const { return split_; }

    // G(0) for N < 4 beta.
    RadiusResult at_origin() const {
        double sum = 0.0;
        double mag = 0.0;
        auto add = [&](double w, double s, double rho) {
            const double v = w * s * std::pow(rho, n_ - 1);
            sum += v;
            mag += std::abs(v);
        };
        for (std::size_t i = 0; i < geo_rho_.size(); ++i) add(geo_w_[i], geo_s_[i], geo_rho_[i]);
        for (int j = 0; j < uni_count_; ++j) {
            const double mid = uni_start_ + (2.0 * j + 1.0) * uni_half_;
            for (int i = 0; i < kPanelPoints; ++i) {
                add(uni_w_[i], uni_s_[static_cast<std::size_t>(j) * kPanelPoints + i], mid + uni_off_[i]);
            }
        }
        // int_A^inf rho^{N-1} c_k rho^{-2 beta k} drho
        double tail = 0.0;
        for (std::size_t k = 2; k < asym_.c.size(); ++k) {
            const double e = beta2_ * static_cast<double>(k) - n_;
            tail += asym_.c[k] * std::pow(split_, -e) / e;
        }
        const double c = inversion_constant(n_);
        return {c * (sum + tail), c * 1e-15 * (mag + std::abs(tail))};
    }

    RadiusResult at(double r) const {
        double sum = 0.0;
        if (n_ == 2) {
            for (std::size_t i = 0; i < geo_f_.size(); ++i) sum += geo_f_[i] * special::bessel_j(0.0, r * geo_rho_[i]);
            for (int j = 0; j < uni_count_; ++j) {
                const double mid = uni_start_ + (2.0 * j + 1.0) * uni_half_;
                for (int i = 0; i < kPanelPoints; ++i) {
                    sum += uni_f_[static_cast<std::size_t>(j) * kPanelPoints + i] *
                           special::bessel_j(0.0, r * (mid + uni_off_[i]));
                }
            }
        } else {
            const bool cosine = n_ == 1;
            for (std::size_t i = 0; i < geo_f_.size(); ++i) {
                const double x = r * geo_rho_[i];
                sum += geo_f_[i] * (cosine ? std::cos(x) : std::sin(x));
            }
            double co[kPanelPoints];
            double so[kPanelPoints];
            for (int i = 0; i < kPanelPoints; ++i) {
                co[i] = std::cos(r * uni_off_[i]);
                so[i] = std::sin(r * uni_off_[i]);
            }
            for (int j = 0; j < uni_count_; ++j) {
                const double mid = uni_start_ + (2.0 * j + 1.0) * uni_half_;
                const double* f = &uni_f_[static_cast<std::size_t>(j) * kPanelPoints];
                double pc = 0.0;
                double ps = 0.0;
                for (int i = 0; i < kPanelPoints; ++i) {
                    pc += f[i] * co[i];
                    ps += f[i] * so[i];
                }
                const double cm = std::cos(r * mid);
                const double sm = std::sin(r * mid);
                sum += cosine ? cm * pc - sm * ps : sm * pc + cm * ps;
            }
        }
        const auto [tail, tail_err, tail_mag] = tail_integral(r);
        double c = inversion_constant(n_);
        if (n_ == 3) c /= r;
        return {c * (sum + tail), c * (tail_err + 1e-15 * (magnitude_ + tail_mag))};
    }

private:
    static constexpr int kPanelPoints = 12;

    double kernel(double x) const {
        switch (n_) {
            case 1: return std::cos(x);
            case 2: return special::bessel_j(0.0, x);
            default: return std::sin(x);
        }
    }

    double zero(int k, double r) const {
        switch (n_) {
            case 1: return (k - 0.5) * kPi / r;
            case 2: return mcmahon_j0_zero(k) / r;
            default: return k * kPi / r;
        }
    }

    struct Tail {
        double value, error, magnitude;
    };

    // int_A^inf kernel(r rho) rho^{N-1} T(rho) drho between consecutive zeros
    // of the kernel, accelerated with Wynn's epsilon.
    Tail tail_integral(double r) const {
        const quad::GaussRule& rule = quad::gauss_legendre(16);
        double magnitude = 0.0;
        // Same weight as the finite part: rho^{N-1}, except rho for N = 3 (the 1/r is applied later).
        const int pw = n_ == 3 ? 1 : n_ - 1;
        auto f = [&](double rho) { return kernel(r * rho) * std::pow(rho, pw) * asym_(rho); };
        auto segment = [&](double u, double v) {
            const int pieces = std::max(1, static_cast<int>(std::ceil(std::log(v / u) / std::log(1.5))));
            const double ratio = std::pow(v / u, 1.0 / pieces);
            double total = 0.0;
            double a = u;
            for (int p = 0; p < pieces; ++p) {
                const double b = p + 1 == pieces ? v : a * ratio;
                const double half = 0.5 * (b - a);
                const double mid = 0.5 * (a + b);
                for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                    const double term = rule.weights[i] * half * f(mid + half * rule.nodes[i]);
                    total += term;
                    magnitude += std::abs(term);
                }
                a = b;
            }
            return total;
        };
        int k = std::max(1, static_cast<int>(std::floor(split_ * r / kPi)) - 1);
        while (zero(k, r) <= split_) ++k;
        std::vector<double> sums;
        sums.reserve(kTailIntervals + 1);
        double partial = segment(split_, zero(k, r));
        sums.push_back(partial);
        for (int j = 0; j < kTailIntervals; ++j) {
            partial += segment(zero(k + j, r), zero(k + j + 1, r));
            sums.push_back(partial);
        }
        const quad::Extrapolation ex = quad::wynn_epsilon(sums);
        return {ex.value, ex.error, magnitude};
    }

    int n_;
    double beta2_;
    AsymptoticSymbol asym_;
    double split_ = 0.0;

    std::vector<double> geo_rho_, geo_w_, geo_s_, geo_f_;
    double uni_start_ = 0.0;
    int uni_count_ = 0;
    double uni_half_ = 0.0;
    double uni_off_[kPanelPoints] = {};
    double uni_w_[kPanelPoints] = {};
    std::vector<double> uni_s_, uni_f_;
    double magnitude_ = 0.0;
};

// Fritsch-Carlson slopes on a uniform grid of spacing h.
std::vector<double> pchip_slopes(const std::vector<double>& y, double h) {
    const std::size_t n = y.size();
    std::vector<double> d(n, 0.0);
    if (n < 2) return d;
    std::vector<double> delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (y[i + 1] - y[i]) / h;
    if (n == 2) {
        d[0] = d[1] = delta[0];
        return d;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            d[i] = 0.0;
        } else {
            d[i] = 2.0 / (1.0 / delta[i - 1] + 1.0 / delta[i]);
        }
    }
    auto end_slope = [](double d0, double d1) {
        double s = 0.5 * (3.0 * d0 - d1);
        if (s * d0 <= 0.0) return 0.0;
        if (d0 * d1 <= 0.0 && std::abs(s) > std::abs(3.0 * d0)) return 3.0 * d0;
        return s;
    };
    d[0] = end_slope(delta[0], delta[1]);
    d[n - 1] = end_slope(delta[n - 2], delta[n - 3]);
    return d;
}

double hermite(double y0, double y1, double d0, double d1, double h, double u) {
    const double u2 = u * u;
    const double u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * h * d0 + (-2 * u3 + 3 * u2) * y1 + (u3 - u2) * h * d1;
}

// Fourth-order integrals of samples f on a uniform grid, one per interval.
std::vector<double> interval_integrals(const std::vector<double>& f, double h) {
    const std::size_t n = f.size();
    std::vector<double> out(n - 1, 0.0);
    if (n < 4) {
        for (std::size_t i = 0; i + 1 < n; ++i) out[i] = 0.5 * h * (f[i] + f[i + 1]);
        return out;
    }
    out[0] = h / 24.0 * (9 * f[0] + 19 * f[1] - 5 * f[2] + f[3]);
    for (std::size_t i = 1; i + 2 < n; ++i) out[i] = h / 24.0 * (-f[i - 1] + 13 * f[i] + 13 * f[i + 1] - f[i + 2]);
    out[n - 2] = h / 24.0 * (9 * f[n - 1] + 19 * f[n - 2] - 5 * f[n - 3] + f[n - 4]);
    return out;
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// ProfileTable

std::vector<double> far_field_coefficients(const FractionalParams& params, int count) {
    const double alpha = params.alpha;
    const double beta = params.beta_value();
    const double n = params.dim_n;
    std::vector<double> d;
    for (int k = 1; k <= count; ++k) {
        const double sign = k % 2 == 0 ? 1.0 : -1.0;
        const double s = 2.0 * beta * k;
        d.push_back(sign * special::rgamma(alpha * k + alpha) * std::pow(2.0, s) * std::pow(kPi, -0.5 * n) *
                    std::tgamma(0.5 * (n + s)) * special::rgamma(-beta * k));
    }
    return d;
}

ProfileTable::ProfileTable(FractionalParams params, std::vector<double> radii, std::vector<double> values,
                           double build_tolerance, double max_error_estimate, double split_point)
    : params_(params),
      radii_(std::move(radii)),
      values_(std::move(values)),
      tol_(build_tolerance),
      max_err_(max_error_estimate),
      split_(split_point) {
    require_supported(params_);
    if (radii_.size() != values_.size()) throw DomainError("profile: radii and values differ in length");
    const bool bounded = params_.regime() != Regime::FourBeta;
    const std::size_t first = bounded ? 1 : 0;
    if (radii_.size() < first + 16) throw DomainError("profile: at least 16 positive radii are required");
    if (bounded && radii_[0] != 0.0) throw DomainError("profile: first radius must be 0 when G(0) is finite");
    if (!bounded && radii_[0] <= 0.0) throw DomainError("profile: r = 0 row not allowed when N = 4 beta");
    for (std::size_t i = 0; i < radii_.size(); ++i) {
        if (!std::isfinite(radii_[i]) || !std::isfinite(values_[i]) || !(values_[i] > 0.0)) {
            throw DomainError("profile: non-positive or non-finite entry at row " + std::to_string(i));
        }
        if (i > 0 && !(radii_[i] > radii_[i - 1])) {
            throw DomainError("profile: radii must be strictly increasing (row " + std::to_string(i) + ")");
        }
    }
    r_pos_.assign(radii_.begin() + first, radii_.end());
    for (std::size_t i = 0; i < r_pos_.size(); ++i) {
        s_.push_back(std::log(r_pos_[i]));
        lg_.push_back(std::log(values_[first + i]));
    }
    ds_ = (s_.back() - s_.front()) / static_cast<double>(s_.size() - 1);
    uniform_ = true;
    for (std::size_t i = 0; i + 1 < s_.size(); ++i) {
        if (std::abs(s_[i + 1] - s_[i] - ds_) > 1e-9 * std::max(1.0, std::abs(ds_)) + 1e-12) uniform_ = false;
    }
    if (!uniform_) throw DomainError("profile: positive radii must be uniformly spaced in log r");
    dlg_ = pchip_slopes(lg_, ds_);

    fit_models();
    build_cumulative();

    std::size_t mono = values_.size() - 1;
    while (mono > 0 && values_[mono - 1] >= values_[mono]) --mono;
    r_mono_ = radii_[mono];
}

void ProfileTable::fit_models() {
    const double beta = params_.beta_value();
    const double n = params_.dim_n;
    const double r1 = r_pos_.front();
    const double g1 = std::exp(lg_.front());

    if (params_.regime() != Regime::FourBeta) {
        near_.kind = NearKind::Bounded;
        near_.g0 = values_.front();
        near_.power = std::min(4.0 * beta - n, 2.0);
        near_.c1 = (g1 - near_.g0) / std::pow(r1, near_.power);
        near_.r_fit = r1;
    } else {
        near_.kind = NearKind::Log;
        near_.r_fit = 0.1;
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int m = 0;
        for (std::size_t i = 0; i < r_pos_.size() && r_pos_[i] <= near_.r_fit; ++i) {
            const double x = std::abs(s_[i]);
            const double y = std::exp(lg_[i]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++m;
        }
        if (m < 3) throw DomainError("profile: too few radii below 0.1 for the near-origin fit");
        const double b = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        near_.c1 = b;
        near_.fit_offset = (sy - b * sx) / m;
        near_.g0 = g1 - b * std::abs(std::log(r1));
        near_.power = 0.0;
    }

    const double rm = r_pos_.back();
    const double gm = std::exp(lg_.back());
    far_.r_handoff = rm;
    if (beta < 1.0) {
        far_.kind = FarKind::Power;
        const std::vector<double> all = far_field_coefficients(params_, 30);
        // Optimal truncation at the lower edge of the fit band.
        const double r_lo = 0.25 * rm;
        std::size_t keep = 1;
        double prev = kInfD;
        for (std::size_t k = 0; k < all.size(); ++k) {
            if (all[k] == 0.0) continue;
            const double mag = std::abs(all[k]) * std::pow(r_lo, -2.0 * beta * (k + 1.0));
            if (mag > prev) break;
            prev = mag;
            keep = k + 1;
        }
        far_.d.assign(all.begin(), all.begin() + keep);
        auto shape = [&](double r) {
            double s = 0.0;
            for (std::size_t k = 0; k < far_.d.size(); ++k) s += far_.d[k] * std::pow(r, -(n + 2.0 * beta * (k + 1.0)));
            return s;
        };
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < r_pos_.size(); ++i) {
            if (r_pos_[i] < r_lo) continue;
            const double sh = shape(r_pos_[i]) / far_.d[0];
            num += std::exp(lg_[i]) * sh;
            den += sh * sh;
        }
        far_.c_inf = den > 0.0 ? num / den : 0.0;
        far_.scale = gm / shape(rm);
    } else {
        far_.kind = FarKind::Exp;
        const double alpha = params_.alpha;
        far_.q = 2.0 / (2.0 - alpha);
        far_.m = (n - 2.0) * (alpha - 1.0) / (2.0 - alpha);
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int cnt = 0;
        const double r_lo = std::max(rm / 3.0, std::min(1.0, rm / 2.0));
        for (std::size_t i = 0; i < r_pos_.size(); ++i) {
            if (r_pos_[i] < r_lo) continue;
            const double x = std::pow(r_pos_[i], far_.q);
            const double y = lg_[i] - far_.m * s_[i];
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++cnt;
        }
        if (cnt < 3) throw DomainError("profile: too few radii in the far-field fit band");
        const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
        far_.sigma_exp = -slope;
        far_.c_inf = std::exp((sy - slope * sx) / cnt);
        far_.scale = gm / (std::pow(rm, far_.m) * std::exp(-far_.sigma_exp * std::pow(rm, far_.q)));
    }
}

void ProfileTable::build_cumulative() {
    const double n = params_.dim_n;
    std::vector<double> f(r_pos_.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::exp(lg_[i] + n * s_[i]);
    const std::vector<double> inc = interval_integrals(f, ds_);
    phi_.assign(f.size(), 0.0);
    tail_.assign(f.size(), 0.0);
    phi_[0] = near_cumulative(r_pos_.front());
    for (std::size_t i = 0; i + 1 < f.size(); ++i) phi_[i + 1] = phi_[i] + inc[i];
    tail_.back() = far_tail(r_pos_.back());
    for (std::size_t i = f.size() - 1; i > 0; --i) tail_[i - 1] = tail_[i] + inc[i - 1];
    phi_total_ = phi_.back() + tail_.back();
}

std::size_t ProfileTable::locate(double s) const {
    const std::size_t last = s_.size() - 2;
    double guess = std::floor((s - s_.front()) / ds_);
    std::size_t i = guess <= 0.0 ? 0 : std::min(static_cast<std::size_t>(guess), last);
    while (i > 0 && s < s_[i]) --i;
    while (i < last && s > s_[i + 1]) ++i;
    return i;
}

double ProfileTable::interp(double r) const {
    const double s = std::log(r);
    const std::size_t i = locate(s);
    const std::size_t off = radii_.size() - r_pos_.size();
    if (r == r_pos_[i]) return values_[i + off];
    if (r == r_pos_[i + 1]) return values_[i + 1 + off];
    const double u = (s - s_[i]) / ds_;
    return std::exp(hermite(lg_[i], lg_[i + 1], dlg_[i], dlg_[i + 1], ds_, u));
}

double ProfileTable::near_value(double r) const {
    if (near_.kind == NearKind::Bounded) return near_.g0 + near_.c1 * std::pow(r, near_.power);
    if (r == 0.0) return kInfD;
    return near_.g0 + near_.c1 * std::abs(std::log(r));
}

double ProfileTable::far_value(double r) const {
    if (far_.kind == FarKind::Power) {
        const double n = params_.dim_n;
        const double beta = params_.beta_value();
        double s = 0.0;
        for (std::size_t k = 0; k < far_.d.size(); ++k) s += far_.d[k] * std::pow(r, -(n + 2.0 * beta * (k + 1.0)));
        return far_.scale * s;
    }
    return far_.scale * std::pow(r, far_.m) * std::exp(-far_.sigma_exp * std::pow(r, far_.q));
}

double ProfileTable::near_cumulative(double z) const {
    const double n = params_.dim_n;
    const double zn = std::pow(z, n);
    if (near_.kind == NearKind::Bounded) {
        return near_.g0 * zn / n + near_.c1 * std::pow(z, n + near_.power) / (n + near_.power);
    }
    return near_.g0 * zn / n + near_.c1 * (zn / n) * (-std::log(z) + 1.0 / n);
}

double ProfileTable::far_tail(double z) const {
    const double n = params_.dim_n;
    if (far_.kind == FarKind::Power) {
        const double beta = params_.beta_value();
        double s = 0.0;
        for (std::size_t k = 0; k < far_.d.size(); ++k) {
            const double e = 2.0 * beta * (k + 1.0);
            s += far_.d[k] * std::pow(z, -e) / e;
        }
        return far_.scale * s;
    }
    // Leading term of the Laplace-type expansion.
    const double q = far_.q;
    return far_.scale * std::pow(z, far_.m + n - q) * std::exp(-far_.sigma_exp * std::pow(z, q)) /
           (far_.sigma_exp * q);
}

double ProfileTable::value(double r) const {
    if (!(r >= 0.0)) throw DomainError("profile value: radius must be >= 0");
    if (r < r_pos_.front()) return near_value(r);
    if (r <= r_pos_.back()) return interp(r);
    return far_value(r);
}

double ProfileTable::cumulative(double z) const {
    if (z <= 0.0) return 0.0;
    if (z < r_pos_.front()) return near_cumulative(z);
    if (z > r_pos_.back()) return phi_total_ - far_tail(z);
    const double s = std::log(z);
    const std::size_t i = locate(s);
    const double n = params_.dim_n;
    const double d0 = std::exp(lg_[i] + n * s_[i]);
    const double d1 = std::exp(lg_[i + 1] + n * s_[i + 1]);
    return hermite(phi_[i], phi_[i + 1], d0, d1, ds_, (s - s_[i]) / ds_);
}

double ProfileTable::cumulative_tail(double z) const {
    if (z <= 0.0) return phi_total_;
    if (z < r_pos_.front()) return phi_total_ - near_cumulative(z);
    if (z > r_pos_.back()) return far_tail(z);
    const double s = std::log(z);
    const std::size_t i = locate(s);
    const double n = params_.dim_n;
    const double d0 = std::exp(lg_[i] + n * s_[i]);
    const double d1 = std::exp(lg_[i + 1] + n * s_[i + 1]);
    return std::max(0.0, hermite(tail_[i], tail_[i + 1], -d0, -d1, ds_, (s - s_[i]) / ds_));
}

double ProfileTable::mass() const { return unit_sphere_area(params_.dim_n) * phi_total_; }

double ProfileTable::lp_constant(double p) const {
    if (!(p >= 1.0)) throw DomainError("lp_constant: p must lie in [1, inf]");
    if (std::isinf(p)) {
        if (!bounded_at_origin()) throw DomainError("G is unbounded at the origin when N = 4 beta; p = inf excluded");
        return *std::max_element(values_.begin(), values_.end());
    }
    if (p == 1.0) return mass();
    const double n = params_.dim_n;
    std::vector<double> f(r_pos_.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::exp(p * lg_[i] + n * s_[i]);
    double total = 0.0;
    for (double v : interval_integrals(f, ds_)) total += v;

    quad::Tolerance tol;
    tol.rel = 1e-12;
    std::vector<double> bp{0.0};
    for (int k = 60; k >= 0; --k) bp.push_back(r_pos_.front() * std::pow(0.5, k));
    total += quad::integrate([&](double w) { return std::pow(near_value(w), p) * std::pow(w, n - 1.0); }, bp, tol).value;

    const double s0 = s_.back();
    const double span = 25.0;
    std::vector<double> sb;
    for (int k = 0; k <= 25; ++k) sb.push_back(s0 + span * k / 25.0);
    total += quad::integrate(
                 [&](double s) {
                     const double w = std::exp(s);
                     return std::pow(far_value(w), p) * std::exp(n * s);
                 },
                 sb, tol)
                 .value;
    if (far_.kind == FarKind::Power) {
        const double z = std::exp(s0 + span);
        const double e = p * (n + 2.0 * params_.beta_value()) - n;
        total += std::pow(far_value(z), p) * std::pow(z, n) / e;
    }
    return std::pow(unit_sphere_area(params_.dim_n) * total, 1.0 / p);
}

// ---------------------------------------------------------------------------
// Building

ProfileTable build_profile(const FractionalParams& params, const GridSpec& grid, double tol, int jobs) {
    require_supported(params);
    if (!(tol >= 1e-8 && tol <= 1e-4)) throw DomainError("build_profile: tol must lie in [1e-8, 1e-4]");
    if (!(grid.r_min > 0.0 && grid.r_max > grid.r_min && grid.points >= 16)) {
        throw DomainError("build_profile: grid needs 0 < r_min < r_max and at least 16 points");
    }
    const Inverter inv(params, grid.r_max, jobs);
    const bool bounded = params.regime() != Regime::FourBeta;

    std::vector<double> radii;
    if (bounded) radii.push_back(0.0);
    const double l0 = std::log(grid.r_min);
    const double l1 = std::log(grid.r_max);
    for (int i = 0; i < grid.points; ++i) radii.push_back(std::exp(l0 + (l1 - l0) * i / (grid.points - 1)));

    std::vector<RadiusResult> res(radii.size());
    parallel_for(radii.size(), jobs, [&](std::size_t i) { res[i] = radii[i] == 0.0 ? inv.at_origin() : inv.at(radii[i]); });

    double g_max = 0.0;
    for (const auto& r : res) g_max = std::max(g_max, r.value);
    // Keep radii until the error estimate exceeds tol relative to G in the
    // decayed part of the profile; earlier failures are genuine.
    std::size_t keep = radii.size();
    double worst = 0.0;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        const double rel = res[i].value > 0.0 ? res[i].error / res[i].value : kInfD;
        if (rel > tol) {
            if (res[i].value < 1e-3 * g_max) {
                keep = i;
                break;
            }
            worst = std::max(worst, rel);
            continue;
        }
        worst = std::max(worst, rel);
    }
    if (worst > tol) throw ConvergenceError("build_profile: inversion did not reach tol", worst);
    std::vector<double> values(keep);
    for (std::size_t i = 0; i < keep; ++i) values[i] = res[i].value;
    radii.resize(keep);
    return ProfileTable(params, std::move(radii), std::move(values), tol, worst, inv.split());
}

double eval_Y(double r, double t, const ProfileTable& profile) {
    if (!(t > 0.0)) throw DomainError("eval_Y: t must be > 0");
    const FractionalParams& p = profile.params();
    const double xi = std::abs(r) * std::pow(t, -p.theta());
    return std::pow(t, -p.sigma_star()) * profile.value(xi);
}

double lp_norm_Y(double p, double t, const ProfileTable& profile) {
    if (!(t > 0.0)) throw DomainError("lp_norm_Y: t must be > 0");
    const ExponentSet e = derive_exponents(profile.params(), p);
    return profile.lp_constant(p) * std::pow(t, -e.sigma_p);
}

// ---------------------------------------------------------------------------
// Bound checks

namespace {

BoundEntry band_stats(std::string name, double lo, double hi, double limit, const std::vector<double>& ratios) {
    BoundEntry e;
    e.name = std::move(name);
    e.band_lo = lo;
    e.band_hi = hi;
    e.limit = limit;
    e.inf = kInfD;
    e.sup = 0.0;
    for (double v : ratios) {
        e.inf = std::min(e.inf, v);
        e.sup = std::max(e.sup, v);
    }
    e.spread = e.inf > 0.0 ? e.sup / e.inf : kInfD;
    e.pass = !ratios.empty() && std::isfinite(e.sup) && e.inf > 0.0 && e.spread <= limit;
    return e;
}

}  // namespace

BoundReport check_kernel_bounds(const ProfileTable& profile, double nu, const BoundLimits& limits) {
    if (!(nu > 0.0)) throw DomainError("check_kernel_bounds: nu must be > 0");
    const FractionalParams& prm = profile.params();
    const double n = prm.dim_n;
    const double beta = prm.beta_value();
    const bool log_kind = !profile.bounded_at_origin();
    BoundReport rep;

    std::vector<double> ratios;
    for (std::size_t i = 0; i < profile.radii().size(); ++i) {
        const double r = profile.radii()[i];
        if (r <= 0.0 || r > 1.0) continue;
        const double g = profile.values()[i];
        ratios.push_back(log_kind ? g / (1.0 + std::abs(std::log(r))) : g);
    }
    rep.near = band_stats(log_kind ? "near: G/(1+|log r|)" : "near: G", profile.r_first(), 1.0, limits.near_spread,
                          ratios);

    const FarModel& far = profile.far_model();
    rep.sigma_exp = far.sigma_exp;
    const double hi = limits.far_hi > 0.0 ? limits.far_hi : profile.r_last();
    ratios.clear();
    for (std::size_t i = 0; i < profile.radii().size(); ++i) {
        const double r = profile.radii()[i];
        if (r < limits.far_lo || r > hi) continue;
        const double g = profile.values()[i];
        if (far.kind == FarKind::Power) {
            ratios.push_back(g * std::pow(r, n + 2.0 * beta));
        } else {
            ratios.push_back(g * std::pow(r, -far.m) * std::exp(far.sigma_exp * std::pow(r, far.q)));
        }
    }
    rep.far = band_stats(far.kind == FarKind::Power ? "far: G r^(N+2beta)" : "far: G r^-m exp(sigma r^q)",
                         limits.far_lo, hi, limits.far_spread, ratios);

    const double theta = prm.theta();
    for (double t : {1.0, 10.0, 100.0}) {
        double sup = 0.0;
        const double edge = nu * std::pow(t, theta);
        for (double r : profile.radii()) {
            const double x = r * std::pow(t, theta);
            if (x < edge) continue;
            sup = std::max(sup, eval_Y(x, t, profile) * std::pow(t, 1.0 - 2.0 * prm.alpha) * std::pow(x, n + 2.0 * beta));
        }
        // The far model's limit as |x| -> inf.
        if (far.kind == FarKind::Power) sup = std::max(sup, far.scale * far.d.front());
        rep.c_nu_by_t.push_back(sup);
        rep.c_nu = std::max(rep.c_nu, sup);
    }
    rep.envelope = band_stats("envelope: Y t^(1-2alpha) |x|^(N+2beta)", nu, kInfD, 1.15, rep.c_nu_by_t);
    return rep;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {
constexpr const char* kMagic = "# memheat-profile v1";

double parse_double(const std::string& s, const std::string& what) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("profile: bad number '" + s + "' in " + what);
    return v;
}
}  // namespace

void save_profile(const ProfileTable& profile, std::ostream& out) {
    const FractionalParams& p = profile.params();
    out << kMagic << '\n';
    out << "N=" << p.dim_n << '\n';
    out << "alpha=" << fmt17(p.alpha) << '\n';
    out << "beta=" << p.beta.to_string() << '\n';
    out << "tolerance=" << fmt17(profile.build_tolerance()) << '\n';
    out << "max_error_estimate=" << fmt17(profile.max_error_estimate()) << '\n';
    out << "split_point=" << fmt17(profile.split_point()) << '\n';
    out << "rows=" << profile.radii().size() << '\n';
    out << "r,G\n";
    for (std::size_t i = 0; i < profile.radii().size(); ++i) {
        out << fmt17(profile.radii()[i]) << ',' << fmt17(profile.values()[i]) << '\n';
    }
    if (!out) throw std::runtime_error("profile: write failed");
}

ProfileTable load_profile(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kMagic) throw ParseError("profile: missing or unsupported version header");
    std::map<std::string, std::string> kv;
    bool body = false;
    while (std::getline(in, line)) {
        if (line == "r,G") {
            body = true;
            break;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("profile: malformed header line '" + line + "'");
        const std::string key = line.substr(0, eq);
        static const char* known[] = {"N", "alpha", "beta", "tolerance", "max_error_estimate", "split_point", "rows"};
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) ==
            std::end(known)) {
            throw ParseError("profile: unknown header key '" + key + "'");
        }
        kv[key] = line.substr(eq + 1);
    }
    if (!body) throw ParseError("profile: missing 'r,G' body header");
    for (const char* req : {"N", "alpha", "beta", "tolerance", "rows"}) {
        if (!kv.count(req)) throw ParseError(std::string("profile: missing header key '") + req + "'");
    }
    FractionalParams p;
    p.dim_n = static_cast<int>(parse_double(kv["N"], "N"));
    p.alpha = parse_double(kv["alpha"], "alpha");
    p.beta = Rational::parse(kv["beta"]);
    const double tol = parse_double(kv["tolerance"], "tolerance");
    const double err = kv.count("max_error_estimate") ? parse_double(kv["max_error_estimate"], "max_error_estimate") : 0;
    const double split = kv.count("split_point") ? parse_double(kv["split_point"], "split_point") : 0;
    const auto rows = static_cast<std::size_t>(parse_double(kv["rows"], "rows"));
    std::vector<double> r;
    std::vector<double> g;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ParseError("profile: malformed row '" + line + "'");
        r.push_back(parse_double(line.substr(0, comma), "r"));
        g.push_back(parse_double(line.substr(comma + 1), "G"));
    }
    if (r.size() != rows) throw ParseError("profile: row count does not match header");
    return ProfileTable(p, std::move(r), std::move(g), tol, err, split);
}

}  // namespace memheat
