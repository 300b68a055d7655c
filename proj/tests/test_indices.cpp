#include "htail/error.hpp"
#include "htail/indices.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace htail;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("dilation ratios of regularly varying tails are exact powers")
{
    auto r = ratio_estimate(pareto(2.0), 2.0, {});
    CHECK_THAT(r.upper(), WithinRel(0.25, 1e-12));
    CHECK_THAT(r.lower(), WithinRel(0.25, 1e-12));
    CHECK_THAT(r.trend(), WithinAbs(0.0, 1e-12));
}

TEST_CASE("window series stops where the denominator underflows")
{
    GridSpec g;
    auto log_num = [](double) { return 0.0; };
    auto dead = [](double x) { return x > 4.0 ? -inf : 0.0; };
    try {
        window_series(g, log_num, dead);
        FAIL("expected an underflow error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::underflow_before_window);
    }
}

TEST_CASE("Matuszewska indices of Pareto members equal the exponent")
{
    for (double a : {2.0, 2.5, 3.0}) {
        auto m = matuszewska(pareto(a), {});
        CHECK_THAT(m.beta, WithinAbs(a, 0.05));
        CHECK_THAT(m.alpha, WithinAbs(a, 0.05));
        REQUIRE(m.bound_fit);
        CHECK(m.bound_fit->c >= 1.0);
    }
    auto mix = matuszewska(finite_mixture({pareto(2.0), pareto(4.0)}, {0.5, 0.5}), {});
    CHECK_THAT(mix.beta, WithinAbs(2.0, 0.05));
}

TEST_CASE("light and lognormal tails hit the index cap")
{
    for (const auto& f : {exponential(1.0), weibull(0.5), weibull(2.0), lognormal(0.0, 1.0)}) {
        auto m = matuszewska(f, {});
        CHECK(m.beta >= index_cap);
    }
}

TEST_CASE("slowly varying tail has zero indices")
{
    auto m = matuszewska(slowly_varying(), {});
    CHECK_THAT(m.beta, WithinAbs(0.0, 0.1));
    CHECK_FALSE(m.bound_fit);
}

TEST_CASE("PD bound fit succeeds below beta and fails above it")
{
    for (double a : {2.0, 2.5, 3.0}) {
        auto f = pareto(a);
        double b = matuszewska(f, {}).beta;
        auto ok = fit_pd_bound(f, {}, 0.9 * b);
        REQUIRE(ok);
        CHECK(ok->c >= 1.0);
        CHECK(ok->c <= 1e6);
        CHECK_FALSE(fit_pd_bound(f, {}, 1.5 * b));
    }
}
