#include "htail/error.hpp"
#include "htail/rng.hpp"
#include "htail/tail_model.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace htail;
using Catch::Matchers::WithinRel;

// Reference survival values computed with mpmath at 30 digits.
TEST_CASE("closed-form survival functions match the reference values")
{
    CHECK_THAT(pareto(2.0).survival(10.0), WithinRel(0.01, 1e-14));
    CHECK(pareto(2.0).survival(0.5) == 1.0);
    CHECK_THAT(exponential(1.0).log_survival(1e6), WithinRel(-1e6, 1e-15));
    CHECK_THAT(weibull(0.5).survival(100.0), WithinRel(0.000045399929762484851536, 1e-12));
    CHECK_THAT(lognormal(0.0, 1.0).survival(10.0), WithinRel(0.010651099341700127225, 1e-10));
    CHECK_THAT(lognormal(0.0, 1.0).log_survival(1e6), WithinRel(std::log(1.0274605390204220872e-43), 1e-10));
    CHECK_THAT(slowly_varying().survival(1e3), WithinRel(0.14470796029547992405, 1e-13));
    auto mix = finite_mixture({pareto(2.0), pareto(4.0)}, {0.5, 0.5});
    CHECK_THAT(mix.survival(10.0), WithinRel(0.00505, 1e-13));
    CHECK_THAT(truncated_uniform(2.0).survival(0.5), WithinRel(0.75, 1e-15));
    CHECK(truncated_uniform(2.0).log_survival(2.0) == -inf);
}

TEST_CASE("light tails stay finite in log space past the double range")
{
    double l = weibull(2.0).log_survival(1e4);
    CHECK(std::isfinite(l));
    CHECK_THAT(l, WithinRel(-1e8, 1e-14));
    CHECK(weibull(2.0).survival(1e4) == 0.0);
    CHECK(weibull(2.0).underflows(1e4));
    CHECK_FALSE(pareto(2.0).underflows(1e4));
}

TEST_CASE("densities integrate to the survival drop")
{
    auto f = lognormal(0.0, 1.0);
    // trapezoid over [1, 2] against F̄(1) - F̄(2)
    double s = 0.0;
    const int n = 20000;
    for (int i = 0; i <= n; ++i) {
        double x = 1.0 + static_cast<double>(i) / n;
        s += (i == 0 || i == n ? 0.5 : 1.0) * f.density(x) / n;
    }
    CHECK_THAT(s, WithinRel(f.survival(1.0) - f.survival(2.0), 1e-7));
}

TEST_CASE("lattice and point mass carry atoms and discontinuities")
{
    auto l = lattice({1.0, 2.0}, {0.5, 0.5});
    CHECK(l.survival(0.5) == 1.0);
    CHECK_THAT(l.survival(1.5), WithinRel(0.5, 1e-15));
    CHECK(l.survival(2.0) == 0.0);
    CHECK(l.atoms().size() == 2);
    CHECK(l.discontinuities() == std::vector<double>{1.0, 2.0});
    CHECK(pareto(2.0).discontinuities().empty());
    auto p = point_mass(0.0);
    CHECK(p.survival(0.0) == 0.0);
    CHECK(p.survival(-1e-9) == 1.0);
}

TEST_CASE("support and endpoints")
{
    CHECK(pareto(2.0).left_edge() == 1.0);
    CHECK(pareto(2.0, 3.0).left_edge() == 3.0);
    CHECK(pareto(2.0).support() == Support::nonnegative);
    CHECK(truncated_uniform(1.0).right_endpoint() == 1.0);
    CHECK(exponential(1.0).right_endpoint() == inf);
}

TEST_CASE("invalid parameters are rejected")
{
    auto code = [](auto fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        return Errc::no_limit;
    };
    CHECK(code([] { pareto(-1.0); }) == Errc::invalid_parameter);
    CHECK(code([] { exponential(0.0); }) == Errc::invalid_parameter);
    CHECK(code([] { weibull(0.0); }) == Errc::invalid_parameter);
    CHECK(code([] { lognormal(0.0, -1.0); }) == Errc::invalid_parameter);
    CHECK(code([] { finite_mixture({pareto(2.0)}, {0.4}); }) == Errc::invalid_parameter);
    CHECK(code([] { empirical_tail({}); }) == Errc::empty_samples);
}

TEST_CASE("sampling is reproducible and matches the law")
{
    auto f = exponential(2.0);
    Rng a(7), b(7);
    double mean = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double x = f.sample(a);
        CHECK(x == f.sample(b));
        mean += x / n;
    }
    CHECK_THAT(mean, WithinRel(0.5, 0.01));
    CHECK(Rng(1).split("x").seed() != Rng(1).split("y").seed());
    CHECK(Rng(1).split("x").seed() == Rng(1).split("x").seed());
}

TEST_CASE("empirical tail")
{
    auto e = empirical_tail({1.0, 2.0, 3.0, 4.0});
    CHECK_THAT(e.survival(2.5), WithinRel(0.5, 1e-15));
    CHECK(e.survival(4.0) == 0.0);
}

TEST_CASE("default grid")
{
    GridSpec g;
    CHECK_THAT(g.horizon(), WithinRel(std::pow(2.0, 26.5), 1e-12));
    CHECK(g.window_start() == 36);
    CHECK(g.points().size() == 54);
    GridSpec bad;
    bad.ratio = 1.0;
    CHECK_THROWS_AS(bad.validate(), Error);
}
