#include "htail/classes.hpp"
#include "htail/dependence.hpp"
#include "htail/error.hpp"
#include "htail/quadrature.hpp"
#include "htail/tail_calculus.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace htail;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Errc code_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return Errc::no_limit;
}

} // namespace

// Self-convolution ratios from mpmath quadrature at 30 digits.
TEST_CASE("Pareto self-convolution ratios")
{
    auto p2 = pareto(2.0);
    auto s = power(p2, 2);
    CHECK_THAT(std::exp(s.log_survival(1e4) - p2.log_survival(1e4)), WithinRel(2.00080106522484, 1e-6));
    CHECK_THAT(std::exp(s.log_survival(1e2) - p2.log_survival(1e2)), WithinRel(2.08511010341612, 1e-6));
    auto p3 = pareto(3.0);
    CHECK_THAT(std::exp(power(p3, 2).log_survival(1e3) - p3.log_survival(1e3)), WithinRel(2.00903638737525, 1e-6));
}

TEST_CASE("exponential self-convolution is the Gamma(2) tail")
{
    auto e = exponential(1.0);
    auto s = power(e, 2);
    for (double x : {0.5, 3.0, 10.0, 100.0, 1e4}) {
        INFO(x);
        CHECK_THAT(s.log_survival(x) - e.log_survival(x), WithinRel(std::log1p(x), 1e-6));
    }
    CHECK_THAT(s.survival(10.0), WithinRel(0.00049939922738733336689, 1e-6));
}

TEST_CASE("decomposition pieces add up to the convolution tail")
{
    auto f = pareto(2.0);
    auto g = exponential(1.0);
    auto h = convolve(f, g);
    for (double v : {1.5, 2.0, 4.0})
        for (double x : {20.0, 1e3, 1e5}) {
            auto d = convolution_decomposition(f, g, v, x, 10.0);
            CHECK_THAT(d.total, WithinRel(std::exp(h.log_survival(v * x)), 1e-6));
            CHECK_THAT(d.i1 + d.i2 + d.i3, WithinRel(d.total, 1e-12));
        }
}

TEST_CASE("whole-line convolution agrees with shifting a half-line convolution")
{
    auto f = shift(pareto(2.0), -3.0);
    auto g = shift(exponential(1.0), -2.0);
    auto h = convolve_whole_line(f, g);
    auto ref = convolve(pareto(2.0), exponential(1.0));
    for (double x : {0.0, 10.0, 1e3})
        CHECK_THAT(h.log_survival(x), WithinRel(ref.log_survival(x + 5.0), 1e-6));
}

TEST_CASE("maximum and minimum tails")
{
    auto p2 = pareto(2.0), p3 = pareto(3.0);
    auto mx = max_tail(JointTailModel(p2, p3));
    double x = 1e6;
    double r = std::exp(mx.log_survival(x) - log_add(p2.log_survival(x), p3.log_survival(x)));
    CHECK(r <= 1.0);
    CHECK(r >= 1.0 - 1e-5);
    auto mn = min_tail(JointTailModel(p2, p3, Coupling::fgm(0.5)));
    x = 1e3;
    double fg = std::exp(p2.log_survival(x) + p3.log_survival(x));
    CHECK_THAT(mn.survival(x) / (1.5 * fg), WithinRel(0.99999966633333366667, 1e-9));
}

TEST_CASE("scaled tails, mixtures and shifts")
{
    auto p2 = pareto(2.0);
    CHECK_THAT(scaled_tail(p2, 2.0).survival(10.0), WithinRel(0.02, 1e-14));
    CHECK(scaled_tail(p2, 2.0).survival(1.2) == 1.0);
    CHECK_THAT(mixture(p2, pareto(4.0), 0.5).survival(10.0), WithinRel(0.00505, 1e-13));
    CHECK_THAT(shift(p2, 1.0).survival(11.0), WithinRel(0.01, 1e-14));
    CHECK(shift(p2, -3.0).support() == Support::whole_line);
}

TEST_CASE("product with a uniform factor has the closed-form tail")
{
    auto h = product_convolve(pareto(2.0), truncated_uniform(1.0));
    double v = h.survival(1e3) * 1e6;
    CHECK(v >= 0.33);
    CHECK(v <= 0.337);
    CHECK_THAT(v, WithinRel(1.0 / 3.0, 1e-6));
    auto he = product_convolve(pareto(2.0), exponential(1.0));
    CHECK_THAT(he.survival(100.0), WithinRel(0.0002, 1e-4));
}

TEST_CASE("truncation sandwich")
{
    for (double eps : {0.1, 0.5})
        for (double epsp : {2.0, 10.0}) {
            auto s = check_sandwich(pareto(2.0), exponential(1.0), {eps, epsp}, {});
            CHECK(s.holds);
            CHECK(s.points > 0);
        }
    CHECK(code_of([] { check_sandwich(pareto(2.0), point_mass(0.0), {0.1, 2.0}, {}); }) == Errc::degenerate_y);
}

TEST_CASE("bounded stopped sum tracks E[N] times the summand tail")
{
    auto f = pareto(2.5);
    auto s = stopped_sum_tail({f}, StoppedSumSpec::bounded({0.0, 0.5, 0.5}));
    double r = std::exp(s.log_survival(1e4) - f.log_survival(1e4));
    CHECK(r >= 1.455);
    CHECK(r <= 1.545);
    CHECK_THAT(r, WithinRel(1.50041688538385, 1e-6));
    auto approx = stopped_sum_asymptotic(f, StoppedSumSpec::bounded({0.0, 0.5, 0.5}));
    CHECK_THAT(approx.approx.survival(1e4), WithinRel(1.5 * f.survival(1e4), 1e-12));
}

TEST_CASE("stopped sum needs a bound, the asymptotic needs a declared tilt")
{
    auto f = pareto(2.5);
    CHECK(code_of([&] { stopped_sum_tail({f}, StoppedSumSpec::poisson(2.0, 10, 0.5)); }) == Errc::missing_bound);
    StoppedSumSpec bare;
    bare.p = {0.5, 0.5};
    CHECK(code_of([&] { stopped_sum_asymptotic(f, bare); }) == Errc::precondition_not_declared);
    CHECK(code_of([&] { StoppedSumSpec::bounded({0.5, 0.6}); }) == Errc::invalid_parameter);
}

TEST_CASE("convolution bound for iid Pareto 2")
{
    for (int n : {2, 3}) {
        auto b = certify_convolution_bound(pareto(2.0), n, {});
        CHECK(b.certified);
        CHECK(b.c_hat >= 1.0);
        CHECK(b.c_hat <= 10.0);
    }
}

TEST_CASE("Monte Carlo stopped sum is seeded")
{
    auto f = pareto(2.5);
    auto spec = StoppedSumSpec::poisson(2.0, 10, 0.5);
    auto a = stopped_sum_mc(f, spec, 50.0, 20000, 3);
    auto b = stopped_sum_mc(f, spec, 50.0, 20000, 3);
    CHECK(a.value == b.value);
    CHECK(a.std_error > 0.0);
    CHECK(code_of([&] { stopped_sum_mc(stopped_sum_tail({f}, StoppedSumSpec::bounded({0.0, 0.5, 0.5})), spec, 50.0, 10, 1); }) == Errc::no_sampler);
}

TEST_CASE("half-line operators reject whole-line inputs")
{
    auto w = shift(pareto(2.0), -3.0);
    CHECK(code_of([&] { product_convolve(w, exponential(1.0)); }) == Errc::unsupported_support);
    CHECK(code_of([&] { power(w, 2); }) == Errc::unsupported_support);
}
