#include "htail/error.hpp"
#include "htail/verify.hpp"

#include <catch_amalgamated.hpp>

#include <set>

using namespace htail;

TEST_CASE("registry covers every result with a check and a negative control")
{
    CHECK_NOTHROW(assert_registry_complete());
    std::set<std::string> ids;
    for (const auto& c : registry())
        CHECK(ids.insert(c.id).second);
    CHECK(registry().size() == 2 * required_ids().size());
}

TEST_CASE("a registry with a missing id is rejected")
{
    auto partial = registry();
    partial.erase(partial.begin());
    try {
        assert_registry_complete(partial);
        FAIL("expected registry-incomplete");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::registry_incomplete);
    }
}

TEST_CASE("status rules")
{
    Evidence e;
    e.verdict.member = true;
    e.premises.push_back({"p", true, 1.0});
    CHECK(decide(false, e) == CheckStatus::pass);
    CHECK(decide(true, e) == CheckStatus::fail);
    e.verdict.trend = 2e-3;
    CHECK(decide(false, e) == CheckStatus::flagged);
    e.verdict.trend = 0.0;
    e.verdict.flags.push_back("slow-convergence");
    CHECK(decide(false, e) == CheckStatus::flagged);
    e.verdict.flags.clear();
    e.premises.push_back({"q", false, -1.0});
    CHECK(decide(false, e) == CheckStatus::fail);
    e.verdict.member = false;
    CHECK(decide(true, e) == CheckStatus::fail_expected);
    CHECK(to_string(CheckStatus::fail_expected) == "fail-expected");
}

TEST_CASE("seeds derive from the root seed and the id")
{
    CHECK(derive_seed(42, "T2.1-part1") == derive_seed(42, "T2.1-part1"));
    CHECK(derive_seed(42, "T2.1-part1") != derive_seed(42, "T2.1-part2"));
    CHECK(derive_seed(42, "T2.1-part1") != derive_seed(43, "T2.1-part1"));
}

TEST_CASE("selection by prefix, rows sorted, report deterministic")
{
    RunConfig cfg = default_config();
    auto r = run_registry(cfg, {"R3.1", "T2.1-part4"});
    REQUIRE(r.rows.size() == 4);
    CHECK(r.rows[0].id == "R3.1");
    CHECK(r.rows[1].id == "R3.1-neg");
    CHECK(r.rows[2].id == "T2.1-part4");
    CHECK(r.rows[3].id == "T2.1-part4-neg");
    CHECK(r.rows[0].status == CheckStatus::pass);
    CHECK(r.rows[1].status == CheckStatus::fail_expected);
    CHECK(r.all_ok());
    auto again = run_registry(cfg, {"R3.1", "T2.1-part4"});
    CHECK(report_csv(r) == report_csv(again));
    std::string csv = report_csv(r);
    CHECK(csv.rfind("# config: ", 0) == 0);
    CHECK(csv.find("\nid,status,margin,horizon,seed\n") != std::string::npos);
    CHECK(report_json(r).find("\"premises\"") != std::string::npos);
}

TEST_CASE("equivalence battery")
{
    auto same = equivalence_battery(pareto(2.0), pareto(2.0));
    CHECK(same.eligible);
    CHECK(same.agree());
    for (bool b : same.items)
        CHECK(b);
    auto light = equivalence_battery(pareto(2.0), exponential(1.0));
    CHECK_FALSE(light.eligible);
}

TEST_CASE("a negative control that turns out a member fails the report")
{
    RunConfig cfg = default_config();
    // replace the slowly varying member by a Pareto law, so the control becomes a member
    for (auto& e : cfg.corpus)
        if (e.id == "slowly_varying")
            e.model = pareto(2.0);
    auto r = run_registry(cfg, {"R3.1"});
    REQUIRE(r.rows.size() == 2);
    CHECK(r.rows[1].status == CheckStatus::fail);
    CHECK_FALSE(r.all_ok());
}
