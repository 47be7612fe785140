#include <cmath>
#include <set>
#include <string>

#include "doctest.h"
#include "memheat/errors.hpp"
#include "memheat/exponents.hpp"
#include "memheat/quadrature.hpp"

using namespace memheat;

namespace {

FractionalParams P(double alpha, Rational beta, int n = 1) { return FractionalParams{n, alpha, beta}; }

const Rational kBetas[] = {{1, 1}, {1, 2}, {3, 10}, {1, 4}};

}  // namespace

TEST_CASE("rational: parsing forms") {
    CHECK(Rational::parse("3/10") == Rational{3, 10});
    CHECK(Rational::parse("6/20") == Rational{3, 10});
    CHECK(Rational::parse("0.3") == Rational{3, 10});
    CHECK(Rational::parse("1") == Rational{1, 1});
    CHECK(Rational::parse("0.25").to_string() == "1/4");
    CHECK_THROWS_AS(Rational::parse("abc"), ParseError);
    CHECK_THROWS_AS(Rational::parse("1/0"), DomainError);
}

TEST_CASE("regime detection is exact") {
    CHECK(P(0.5, {1, 1}).regime() == Regime::BelowTwoBeta);
    CHECK(P(0.5, {1, 2}).regime() == Regime::TwoBeta);
    CHECK(P(0.5, Rational::parse("0.5")).regime() == Regime::TwoBeta);
    CHECK(P(0.5, {3, 10}).regime() == Regime::BetweenTwoFourBeta);
    CHECK(P(0.5, {1, 4}).regime() == Regime::FourBeta);
    CHECK(P(0.5, {1, 5}).regime() == Regime::AboveFourBeta);
    CHECK(P(0.5, {1, 1}, 2).regime() == Regime::TwoBeta);
    CHECK(P(0.5, {1, 1}, 3).regime() == Regime::BetweenTwoFourBeta);
}

TEST_CASE("parameter validation names the field") {
    CHECK_THROWS_WITH_AS(P(1.2, {1, 2}).validate(), doctest::Contains("alpha"), DomainError);
    CHECK_THROWS_WITH_AS(P(0.5, {3, 2}).validate(), doctest::Contains("beta"), DomainError);
    CHECK_THROWS_WITH_AS(P(0.5, {1, 2}, 0).validate(), doctest::Contains("N"), DomainError);
}

TEST_CASE("exponents: substitution examples") {
    const ExponentSet e = derive_exponents(P(0.5, {1, 2}), kInf);
    CHECK(e.theta == doctest::Approx(0.5));
    CHECK(e.sigma_star == doctest::Approx(1.0));
    CHECK(e.sigma_p == doctest::Approx(1.0));
    REQUIRE(e.p_crit.has_value());
    CHECK(std::isinf(*e.p_crit));

    CHECK(derive_exponents(P(0.5, {1, 1}), 1.0).sigma_p == doctest::Approx(0.5));
    CHECK(*derive_exponents(P(0.5, {1, 1}, 3), 2.0).p_crit == doctest::Approx(3.0));
    CHECK_FALSE(derive_exponents(P(0.5, {1, 1}), 2.0).p_crit.has_value());
    CHECK(derive_exponents(P(0.5, {1, 1}), 2.0).sigma_p == doctest::Approx(0.625));
}

TEST_CASE("sigma(p) is strictly increasing in p") {
    for (const Rational& b : kBetas) {
        double prev = -1.0;
        for (double p = 1.0; p < 1e4; p *= 1.3) {
            const double s = derive_exponents(P(0.5, b), p).sigma_p;
            CHECK(s > prev);
            prev = s;
        }
        CHECK(derive_exponents(P(0.5, b), kInf).sigma_p > prev);
    }
}

TEST_CASE("sigma(p_c) = 1 whenever N > 2 beta") {
    for (double alpha : {0.2, 0.5, 0.9}) {
        for (const auto& [n, b] : {std::pair{1, Rational{3, 10}}, std::pair{1, Rational{1, 4}},
                                   std::pair{3, Rational{1, 1}}, std::pair{2, Rational{3, 5}}}) {
            const FractionalParams prm = P(alpha, b, n);
            const double pc = *derive_exponents(prm, 2.0).p_crit;
            CHECK(std::abs(derive_exponents(prm, pc).sigma_p - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("p classification") {
    CHECK(classify_p(P(0.5, {3, 10}), 2.0).kind == PClass::Subcritical);
    const PClassification inf = classify_p(P(0.5, {3, 10}), kInf);
    CHECK(inf.kind == PClass::Supercritical);
    CHECK(*inf.q_crit == doctest::Approx(1.0 / 0.6).epsilon(1e-12));
    CHECK(classify_p(P(0.5, {3, 10}), 2.5).kind == PClass::Critical);
    CHECK(classify_p(P(0.5, {1, 2}), 1e6).kind == PClass::Subcritical);
    CHECK(classify_p(P(0.5, {1, 2}), kInf).kind == PClass::Critical);
    CHECK_THROWS_AS(classify_p(P(0.5, {1, 2}), 0.5), DomainError);
}

TEST_CASE("rate rows: worked examples") {
    const RateExpr ext = predicted_rate(P(0.5, {1, 1}), 0.5, 2.0, Exterior{1.0});
    CHECK(ext.dominant().t_pow == doctest::Approx(-0.125));
    CHECK(ext.dominant().log_pow == 0);

    const RateExpr cb = predicted_rate(P(0.5, {1, 4}), 2.0, 1.0, CompactBall{1.0});
    CHECK(cb.dominant().t_pow == doctest::Approx(-1.5));
    CHECK(cb.dominant().log_pow == 1);

    const RateExpr im = predicted_rate(P(0.5, {1, 2}), 0.5, kInf, Intermediate{0.1, 1.0, 2.0});
    CHECK(im.prefactor_g_pow == 0.0);
    REQUIRE(im.terms.size() == 1);
    CHECK(im.terms[0].t_pow == doctest::Approx(-0.5));
    CHECK(im.terms[0].loggap_pow == 1);
    CHECK(im.render() == "g^{0.00} * max[ t^{-0.500} * log(t^th/g)^1 ]");

    const RateExpr gl = predicted_rate(P(0.5, {3, 10}), 0.5, 2.5, Global{});
    CHECK(gl.dominant().t_pow == doctest::Approx(-0.5));
    CHECK(gl.dominant().log_pow == 1);
    CHECK(gl.hypotheses.pointwise_decay);
    CHECK(gl.hypotheses.lq_integrability);

    const RateExpr cmp = predicted_rate(P(0.5, {1, 2}), 0.5, kInf, CompactBall{1.0});
    CHECK(cmp.dominant().t_pow == doctest::Approx(-0.5));
    CHECK(cmp.dominant().log_pow == 1);
}

TEST_CASE("rate rows: decimal p lands on the critical row") {
    const RateExpr a = predicted_rate(P(0.5, Rational::parse("0.3")), 0.5, 2.5, Global{});
    CHECK(a.row == "global[critical p], gamma<=1");
}

TEST_CASE("rate rows: every table row is reachable") {
    std::set<std::string> rows;
    for (const Rational& b : kBetas) {
        const FractionalParams prm = P(0.5, b);
        for (double g : {0.0, 0.5, 1.0, 1.25, 1.5, 2.0, 3.0}) {
            for (double p : {1.0, 2.0, 2.5, 4.0, kInf}) {
                for (const RegionSpec& r : {RegionSpec{Exterior{1.0}}, RegionSpec{CompactBall{1.0}},
                                            RegionSpec{Intermediate{prm.theta() / 2, 1.0, 2.0}}, RegionSpec{Global{}}})
                    rows.insert(predicted_rate(prm, g, p, r).row);
            }
        }
    }
    const std::set<std::string> expected = {
        "exterior, gamma<1",
        "exterior, gamma=1",
        "exterior, gamma>1",
        "compact[N<2beta], gamma<1",
        "compact[N<2beta], gamma=1",
        "compact[N<2beta], gamma>1",
        "compact[N=2beta], gamma<=sigma*=1",
        "compact[N=2beta], gamma>sigma*=1",
        "compact[2beta<N<4beta], gamma<sigma*",
        "compact[2beta<N<4beta], gamma>=sigma*",
        "compact[N=4beta], gamma<sigma*=1+alpha",
        "compact[N=4beta], gamma>=sigma*=1+alpha",
        "intermediate[N<2beta], gamma<1",
        "intermediate[N<2beta], gamma=1",
        "intermediate[N<2beta], gamma>1",
        "intermediate[N=2beta], gamma<1",
        "intermediate[N=2beta], gamma=1",
        "intermediate[N=2beta], gamma>1",
        "intermediate[2beta<N<4beta], gamma<1",
        "intermediate[2beta<N<4beta], gamma=1",
        "intermediate[2beta<N<4beta], gamma>1",
        "intermediate[N=4beta], gamma<1",
        "intermediate[N=4beta], gamma=1",
        "intermediate[N=4beta], gamma>1",
        "global[subcritical p], gamma<1",
        "global[subcritical p], gamma=1",
        "global[subcritical p], gamma>1",
        "global[critical p], gamma<=1",
        "global[critical p], gamma>1",
        "global[supercritical p], gamma<sigma(p)",
        "global[supercritical p], gamma>=sigma(p)",
        "global[supercritical p, p=inf, N=4beta], gamma>=sigma*=1+alpha",
    };
    CHECK(rows == expected);
}

TEST_CASE("rate rows: compact decays no faster than exterior minus N theta / p") {
    for (const Rational& b : kBetas) {
        for (double alpha : {0.3, 0.5, 0.8}) {
            const FractionalParams prm = P(alpha, b);
            for (double g : {1.25, 1.5, 2.0, 3.0}) {
                for (double p : {1.0, 1.5, 2.0, 3.0, kInf}) {
                    if (classify_p(prm, p).kind != PClass::Subcritical) continue;
                    const double comp = predicted_rate(prm, g, p, CompactBall{1.0}).dominant().t_pow;
                    const double ext = predicted_rate(prm, g, p, Exterior{1.0}).dominant().t_pow;
                    const double shift = std::isinf(p) ? 0.0 : prm.dim_n * prm.theta() / p;
                    CHECK(comp >= ext - shift - 1e-12);
                }
            }
        }
    }
}

TEST_CASE("rate rows: out of scope above N = 4 beta") {
    CHECK_THROWS_AS(predicted_rate(P(0.5, {1, 5}), 1.0, 2.0, Global{}), OutOfScopeError);
}

TEST_CASE("rate rows: intermediate omega must lie in (0, theta)") {
    CHECK_THROWS_AS(predicted_rate(P(0.5, {1, 1}), 1.0, 2.0, Intermediate{0.3, 1.0, 2.0}), DomainError);
    CHECK_THROWS_AS(predicted_rate(P(0.5, {1, 1}), 1.0, 2.0, Intermediate{0.1, 2.0, 1.0}), DomainError);
}

TEST_CASE("render is bit-stable") {
    const RateExpr a = predicted_rate(P(0.5, {3, 10}), 1.0, 2.0, Intermediate{0.4, 1.0, 2.0});
    const RateExpr b = predicted_rate(P(0.5, {3, 10}), 1.0, 2.0, Intermediate{0.4, 1.0, 2.0});
    CHECK(a.render() == b.render());
    CHECK(a.terms.size() == 2);
}

TEST_CASE("helper integrals: closed forms") {
    HelperIntegral h = power_log_integral(1.0, 6.0);
    CHECK(h.value == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    CHECK(h.cls == AsymptoticClass::Log);
    h = power_log_integral(2.0, 100.0);
    CHECK(h.value == doctest::Approx(1.0 - 1.0 / 51.0).epsilon(1e-12));
    CHECK(h.cls == AsymptoticClass::Bounded);
    h = power_log_integral(0.0, 10.0);
    CHECK(h.value == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(h.cls == AsymptoticClass::Power);
}

TEST_CASE("helper integrals: agree with adaptive quadrature") {
    for (double g : {0.0, 0.5, 1.0, 1.5, 2.0}) {
        for (double t : {10.0, 100.0, 1000.0}) {
            const double q = quad::integrate([&](double s) { return std::pow(1.0 + s, -g); }, 0.0, t / 2,
                                             quad::Tolerance{0, 1e-13, 4000})
                                 .value;
            CHECK(std::abs(power_log_integral(g, t).value / q - 1.0) <= 1e-10);
            const double q2 = quad::integrate([&](double s) { return std::pow(t - s, -g - 0.25); }, t / 2, t - 1,
                                              quad::Tolerance{0, 1e-13, 4000})
                                  .value;
            CHECK(std::abs(near_endpoint_integral(g + 0.25, t).value / q2 - 1.0) <= 1e-10);
        }
    }
}

TEST_CASE("unit ball and sphere") {
    CHECK(unit_ball_volume(1) == doctest::Approx(2.0));
    CHECK(unit_ball_volume(3) == doctest::Approx(4.0 * M_PI / 3.0));
    CHECK(unit_sphere_area(2) == doctest::Approx(2.0 * M_PI));
}
