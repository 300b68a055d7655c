#include "htail/dependence.hpp"
#include "htail/error.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>

using namespace htail;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("FGM joint exceedance has the closed form")
{
    auto f = pareto(2.0), g = pareto(3.0);
    JointTailModel j(f, g, Coupling::fgm(0.5));
    double x = 5.0, y = 7.0;
    double fx = f.survival(x), gy = g.survival(y);
    CHECK_THAT(j.joint(x, y), WithinRel(fx * gy * (1.0 + 0.5 * (1.0 - fx) * (1.0 - gy)), 1e-13));
    CHECK_THROWS_AS(Coupling::fgm(1.5), Error);
}

TEST_CASE("SAI constants")
{
    auto f = pareto(2.0), g = pareto(3.0);
    REQUIRE(JointTailModel(f, g, Coupling::fgm(0.5)).sai_constant());
    CHECK_THAT(*JointTailModel(f, g, Coupling::fgm(0.5)).sai_constant(), WithinRel(1.5, 1e-15));
    CHECK_THAT(*JointTailModel(f, g).sai_constant(), WithinRel(1.0, 1e-15));
    CHECK_FALSE(JointTailModel(f, g, Coupling::comonotone()).sai_constant());
    auto s = sai_limit(JointTailModel(f, g, Coupling::fgm(-1.0)), {});
    CHECK(s.boundary_violation);
    auto ok = sai_limit(JointTailModel(f, g, Coupling::fgm(0.5)), {});
    CHECK_FALSE(ok.boundary_violation);
    CHECK_THAT(ok.value, WithinRel(1.5, 1e-6));
}

TEST_CASE("comonotone pair")
{
    JointTailModel j(pareto(2.0), pareto(3.0), Coupling::comonotone());
    CHECK_THAT(j.joint(10.0, 10.0), WithinRel(1e-3, 1e-13));
}

TEST_CASE("FGM sampler reproduces Spearman rho = theta / 3")
{
    JointTailModel j(pareto(2.0), exponential(1.0), Coupling::fgm(0.6));
    auto d = j.sample(200000, 11);
    CHECK_THAT(spearman_rho(d), WithinAbs(0.2, 0.01));
    auto again = j.sample(200000, 11);
    CHECK(d == again);
    CHECK(j.sample(10, 12) != j.sample(10, 11));
}

TEST_CASE("conditional ratio is bounded for FGM")
{
    JointTailModel j(pareto(2.0), pareto(3.0), Coupling::fgm(0.5));
    auto d = conditional_ratio_diag(j, {3.0, 4.0}, {1.0, 2.0}, 200000, 5);
    CHECK_FALSE(d.unbounded);
    CHECK(d.max_ratio < 1.0 + 0.5 + 0.2);
    CHECK(d.cells.size() == 4);
    CHECK_THROWS_AS(conditional_ratio_diag(j, {3.0}, {1.0}, 100, 5), Error);
}

TEST_CASE("samples round-trip through a file")
{
    JointTailModel j(exponential(1.0), exponential(2.0));
    auto d = j.sample(5, 1);
    std::string path = "dependence_samples.txt";
    write_samples(d, path);
    std::ifstream in(path);
    double x = 0.0, y = 0.0;
    std::size_t n = 0;
    while (in >> x >> y) {
        CHECK_THAT(x, WithinRel(d[n].first, 1e-12));
        ++n;
    }
    CHECK(n == 5);
    std::remove(path.c_str());
}
