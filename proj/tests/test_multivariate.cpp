#include "htail/error.hpp"
#include "htail/multivariate.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace htail;
using Catch::Matchers::WithinRel;

TEST_CASE("independent Pareto vectors are in D_n and PD_n")
{
    auto p2 = pareto(2.0);
    for (std::size_t n : {2u, 3u}) {
        INFO(n);
        VectorTailModel v(std::vector<TailModel>(n, p2), Coupling::independent(), p2);
        auto d = is_Dn(v, default_t_set(n), default_b_set(n));
        CHECK(d.member);
        CHECK(d.certificate_margin > 0.0);
        auto pd = is_PDn(v, default_t_set(n), default_v_set(n));
        CHECK(pd.member);
        CHECK_THAT(pd.margin, WithinRel(0.74, 1e-6));
    }
}

TEST_CASE("direction sets")
{
    CHECK(default_t_set(3).size() == max_directions);
    auto t2 = default_t_set(2);
    CHECK(t2.front() == Direction{1.0, 1.0});
    for (const auto& t : t2)
        CHECK_FALSE((std::isinf(t[0]) && std::isinf(t[1])));
    CHECK(default_b_set(2).front() == Direction{0.5, 0.5});
}

TEST_CASE("one-dimensional vectors reduce bit for bit")
{
    for (const auto& f : {pareto(2.0), weibull(0.5), lognormal(0.0, 1.0)}) {
        VectorTailModel v({f}, Coupling::independent(), f);
        auto d = is_Dn(v, {{1.0}}, {{0.5}});
        auto u = is_D(f, 0.5);
        CHECK(d.member == u.member);
        CHECK(d.margin == u.margin);
        auto p = is_PDn(v, {{1.0}}, default_v_set(1));
        auto q = is_PD(f);
        CHECK(p.member == q.member);
        CHECK(p.margin == q.margin);
        CHECK(v.log_joint({1.0}, 7.0) == f.log_survival(7.0));
    }
}

TEST_CASE("non-members")
{
    VectorTailModel e({pareto(2.0), exponential(1.0)}, Coupling::independent(), pareto(2.0));
    auto d = is_Dn(e, default_t_set(2), default_b_set(2));
    CHECK_FALSE(d.member);
    VectorTailModel s({slowly_varying(), slowly_varying()});
    CHECK_FALSE(is_PDn(s, default_t_set(2), default_v_set(2)).member);
}

TEST_CASE("D_n needs a reference and matching directions")
{
    VectorTailModel v({pareto(2.0), pareto(2.0)});
    try {
        is_Dn(v, default_t_set(2), default_b_set(2));
        FAIL("expected missing-reference");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::missing_reference);
    }
    try {
        v.log_joint({1.0}, 2.0);
        FAIL("expected dimension-mismatch");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::dimension_mismatch);
    }
}

TEST_CASE("vector minimum multiplies the joints")
{
    auto p2 = pareto(2.0), p3 = pareto(3.0);
    VectorTailModel a({p2, p2}, Coupling::independent(), p2);
    VectorTailModel b({p3, p3}, Coupling::independent(), p3);
    auto m = vector_min_tail(a, b);
    double slope = (m.log_joint({1.0, 1.0}, 1e4) - m.log_joint({1.0, 1.0}, 1e3)) / std::log(10.0);
    CHECK_THAT(slope, WithinRel(-10.0, 1e-9));
    CHECK(is_PDn(m, default_t_set(2), default_v_set(2)).member);
    auto chain = check_min_chain(a, b, {1.0, 1.0}, {2.0, 2.0});
    CHECK(chain.holds);
}

TEST_CASE("weak equivalence")
{
    auto mix = finite_mixture({pareto(2.0), pareto(4.0)}, {0.5, 0.5});
    CHECK(weak_equivalence(pareto(2.0), mix, {}).holds);
    CHECK_FALSE(weak_equivalence(pareto(2.0), pareto(3.0), {}).holds);
}
