#include "htail/classes.hpp"
#include "htail/config.hpp"
#include "htail/error.hpp"

#include <catch_amalgamated.hpp>

#include <map>
#include <string>

using namespace htail;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// H L D PD OL OS S A T OA OT, from the closed forms of each member
const std::map<std::string, std::string> expected{
    {"pareto2", "11111111111"},         {"pareto2.5", "11111111111"},
    {"pareto3", "11111111111"},         {"exponential1", "00011000001"},
    {"weibull0.5", "11011111111"},      {"weibull2", "00010000000"},
    {"lognormal", "11011111111"},       {"pareto_mix", "11111111111"},
    {"slowly_varying", "11101110000"},  {"truncated_uniform", "00000000000"},
};

} // namespace

TEST_CASE("corpus classification table")
{
    for (const auto& e : default_corpus()) {
        INFO(e.id);
        auto c = classify_all(e.model);
        const std::string& want = expected.at(e.id);
        for (std::size_t k = 0; k < class_order.size(); ++k) {
            INFO(class_order[k]);
            CHECK(c.at(class_order[k]).member == (want[k] == '1'));
        }
        CHECK(c.warnings.empty());
    }
}

TEST_CASE("PD margin of Pareto 2 comes from v = 2")
{
    auto v = is_PD(pareto(2.0));
    CHECK(v.member);
    CHECK_THAT(v.margin, WithinRel(0.74, 1e-9));
}

TEST_CASE("long-tail statistic at gamma > 0 recovers the exponential rate")
{
    CHECK(is_Lgamma(exponential(1.0), 1.0).member);
    CHECK_FALSE(is_Lgamma(exponential(1.0), 0.5).member);
    CHECK_FALSE(is_long(exponential(1.0)).member);
}

TEST_CASE("Laplace transform")
{
    auto lt = laplace_transform(exponential(2.0), 1.0);
    CHECK_FALSE(lt.divergent);
    CHECK_THAT(lt.value, WithinRel(2.0, 1e-6));
    CHECK(laplace_transform(pareto(2.0), 0.0).value == 1.0);
    CHECK(laplace_transform(pareto(2.0), 0.1).divergent);
}

TEST_CASE("subexponential verdict carries the corrected statistic")
{
    auto s = is_S(pareto(2.0));
    CHECK(s.member);
    CHECK_THAT(s.statistic, WithinAbs(2.0, 0.01));
    CHECK_FALSE(is_S(exponential(1.0)).member);
    CHECK(is_OS(exponential(1.0)).member == false);
}

TEST_CASE("D verdict flags a growing ratio")
{
    auto d = is_D(exponential(1.0));
    CHECK_FALSE(d.member);
    CHECK(d.has_flag("trend-positive"));
}

TEST_CASE("estimator failures become non-member verdicts")
{
    auto v = classify(truncated_uniform(1.0), "PD");
    CHECK_FALSE(v.member);
    CHECK_FALSE(v.error.empty());
    CHECK(v.has_flag("underflow-before-window"));
}

TEST_CASE("intersections take the smaller margin")
{
    auto t = classify(pareto(2.0), "T");
    CHECK(t.member);
    CHECK_THAT(t.margin, WithinAbs(std::min(is_long(pareto(2.0)).margin, is_PD(pareto(2.0)).margin), 1e-15));
    CHECK_THROWS_AS(classify(pareto(2.0), "Q"), Error);
}
