#include "htail/config.hpp"
#include "htail/error.hpp"

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

using namespace htail;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinRel;

namespace {

std::string parse_error(const std::string& json)
{
    try {
        parse_config(json);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::config_parse);
        return e.what();
    }
    FAIL("no error for " << json);
    return {};
}

} // namespace

TEST_CASE("built-in corpus")
{
    const auto& c = default_corpus();
    CHECK(c.size() == 10);
    CHECK_THAT(find_entry(c, "pareto2.5").model.survival(10.0), WithinRel(std::pow(10.0, -2.5), 1e-14));
    try {
        find_entry(c, "pareto7");
        FAIL("expected unknown-model");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::unknown_model);
    }
}

TEST_CASE("model mini-language")
{
    CHECK_THAT(parse_model("pareto:alpha=2").survival(10.0), WithinRel(0.01, 1e-14));
    CHECK_THAT(parse_model("pareto:2,2").survival(20.0), WithinRel(0.01, 1e-14));
    CHECK_THAT(parse_model("exp:2").log_survival(3.0), WithinRel(-6.0, 1e-14));
    CHECK_THAT(parse_model("weibull:c=0.5").survival(100.0), WithinRel(std::exp(-10.0), 1e-12));
    CHECK_THAT(parse_model("lognormal").survival(1.0), WithinRel(0.5, 1e-12));
    CHECK_THAT(parse_model("mixture:0.5@pareto:2;0.5@pareto:4").survival(10.0), WithinRel(0.00505, 1e-13));
    CHECK_THAT(parse_model("lattice:1@0.5;2@0.5").survival(1.5), WithinRel(0.5, 1e-15));
    CHECK_THAT(parse_model("slowly_varying").survival(0.0), WithinRel(1.0, 1e-15));
    CHECK_THAT(parse_model("exponential1").log_survival(2.0), WithinRel(-2.0, 1e-15));
    auto code = [](const std::string& s) {
        try {
            parse_model(s);
        } catch (const Error& e) {
            return e.code();
        }
        return Errc::no_limit;
    };
    CHECK(code("cauchy:1") == Errc::unknown_model);
    CHECK(code("nosuch") == Errc::unknown_model);
    CHECK(code("pareto:alpah=2") == Errc::config_parse);
    CHECK(code("pareto:two") == Errc::config_parse);
    CHECK(code("pareto:2,1,3") == Errc::config_parse);
    CHECK(code("mixture:0.5pareto:2") == Errc::config_parse);
    CHECK(code("pareto:alpha=2,alpha=3") == Errc::config_parse);
}

TEST_CASE("configuration defaults and overrides")
{
    RunConfig d = parse_config("{}");
    CHECK(d.seed == 42);
    CHECK(d.grid.count == 53);
    CHECK(d.corpus.size() == 10);
    RunConfig c = parse_config(R"({"grid": {"count": 60}, "seed": 7, "b": 0.25, "format": "json",
                                   "v_grid": [2.0], "corpus": [{"id": "p", "family": "pareto", "params": {"alpha": 2}}]})");
    CHECK(c.grid.count == 60);
    CHECK(c.seed == 7);
    CHECK(c.b == 0.25);
    CHECK(c.format == "json");
    CHECK(c.v_grid == std::vector<double>{2.0});
    REQUIRE(c.corpus.size() == 1);
    CHECK(c.corpus[0].id == "p");
    CHECK_THAT(config_echo(c), ContainsSubstring("\"seed\":7"));
}

TEST_CASE("configuration errors name the field")
{
    CHECK_THAT(parse_error(R"({"grid": {"count": "many"}})"), ContainsSubstring("grid.count"));
    CHECK_THAT(parse_error(R"({"sede": 1})"), ContainsSubstring("sede"));
    CHECK_THAT(parse_error(R"({"b": 2})"), ContainsSubstring("'b'"));
    CHECK_THAT(parse_error(R"({"format": "xml"})"), ContainsSubstring("format"));
    CHECK_THAT(parse_error(R"({"corpus": [{"id": "x", "family": "pareto", "params": {"beta": 1}}]})"),
               ContainsSubstring("beta"));
    CHECK_THAT(parse_error(R"({"corpus": [{"id": "x"}]})"), ContainsSubstring("corpus[0].family"));
    CHECK_THAT(parse_error("{not json"), ContainsSubstring("malformed"));
}

TEST_CASE("mixture corpus entries nest")
{
    auto corpus = parse_corpus(R"([{"id": "m", "family": "mixture", "weights": [0.5, 0.5],
        "components": [{"family": "pareto", "params": {"alpha": 2}}, {"family": "pareto", "params": {"alpha": 4}}]}])");
    REQUIRE(corpus.size() == 1);
    CHECK_THAT(corpus[0].model.survival(10.0), WithinRel(0.00505, 1e-13));
}

TEST_CASE("atomic write leaves no temporary behind")
{
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "htail_config_test";
    fs::remove_all(dir);
    write_atomic((dir / "sub" / "a.csv").string(), "x\n");
    write_atomic((dir / "sub" / "a.csv").string(), "y\n");
    std::ifstream in(dir / "sub" / "a.csv");
    std::string s;
    std::getline(in, s);
    CHECK(s == "y");
    CHECK_FALSE(fs::exists(dir / "sub" / "a.csv.tmp"));
    fs::remove_all(dir);
}
