// htail: classify, index, combine and verify tail models from the command line.
//
// Exit codes: 0 success, 1 a harness check failed, 2 model or pipeline error,
// 3 configuration error.

#include "htail/classes.hpp"
#include "htail/config.hpp"
#include "htail/dependence.hpp"
#include "htail/error.hpp"
#include "htail/indices.hpp"
#include "htail/tail_calculus.hpp"
#include "htail/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>

using namespace htail;
using nlohmann::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_check_failed = 1;
constexpr int exit_model = 2;
constexpr int exit_config = 3;

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string output_dir;
    std::string format;
};

RunConfig effective_config(const Globals& g)
{
    RunConfig cfg = g.config_path.empty() ? default_config() : load_config(g.config_path);
    if (const char* env = std::getenv("HTAIL_OUTPUT_DIR"); env && *env)
        cfg.output_dir = env;
    if (!g.output_dir.empty())
        cfg.output_dir = g.output_dir;
    if (g.seed)
        cfg.seed = *g.seed;
    if (!g.format.empty()) {
        if (g.format != "csv" && g.format != "json")
            throw Error(Errc::config_parse, "field 'format': expected csv or json");
        cfg.format = g.format;
    }
    return cfg;
}

ClassifyOptions options(const RunConfig& cfg)
{
    ClassifyOptions o;
    o.grid = cfg.grid;
    o.v_grid = cfg.v_grid;
    o.t_grid = cfg.t_grid;
    o.b = cfg.b;
    return o;
}

std::string num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string output_path(const RunConfig& cfg, const std::string& stem)
{
    return cfg.output_dir + "/" + stem + "." + cfg.format;
}

std::string classification_csv(const RunConfig& cfg, const std::string& model, const Classification& c)
{
    std::string out = "# config: " + config_echo(cfg) + "\n# model: " + model + "\n";
    for (const auto& w : c.warnings)
        out += "# warning: " + w + "\n";
    out += "class,member,margin,statistic,threshold,trend,horizon,flags,error\n";
    for (const auto& [name, v] : c.verdicts) {
        std::string flags;
        for (const auto& f : v.flags)
            flags += (flags.empty() ? "" : ";") + f;
        std::string err = v.error;
        for (char& ch : err)
            if (ch == ',' || ch == '\n')
                ch = ' ';
        out += name + "," + (v.member ? "1" : "0") + "," + num(v.margin) + "," + num(v.statistic) + "," +
               num(v.threshold) + "," + num(v.trend) + "," + num(v.horizon) + "," + flags + "," + err + "\n";
    }
    return out;
}

json classification_json(const RunConfig& cfg, const std::string& model, const Classification& c)
{
    json j{{"config", json::parse(config_echo(cfg))}, {"model", model}, {"warnings", c.warnings}};
    auto safe = [](double v) -> json { return std::isfinite(v) ? json(v) : json(num(v)); };
    for (const auto& [name, v] : c.verdicts) {
        json d = json::object();
        for (const auto& [k, x] : v.details)
            d[k] = safe(x);
        j["verdicts"][name] = {{"member", v.member},       {"margin", safe(v.margin)}, {"statistic", safe(v.statistic)},
                               {"threshold", safe(v.threshold)}, {"trend", safe(v.trend)},   {"horizon", safe(v.horizon)},
                               {"flags", v.flags},         {"error", v.error},         {"details", d}};
    }
    return j;
}

// human table on stdout, in the lattice order
void print_table(const Classification& c)
{
    std::printf("%-6s %-7s %12s %12s\n", "class", "member", "margin", "trend");
    for (const auto& name : class_order) {
        const auto& v = c.at(name);
        std::printf("%-6s %-7s %12s %12s%s%s\n", name.c_str(), v.member ? "yes" : "no", num(v.margin).c_str(),
                    num(v.trend).c_str(), v.error.empty() ? "" : "  ", v.error.c_str());
    }
    for (const auto& w : c.warnings)
        std::printf("warning: %s\n", w.c_str());
}

void emit_classification(const RunConfig& cfg, const std::string& stem, const std::string& model,
                         const Classification& c)
{
    print_table(c);
    std::string body = cfg.format == "json" ? classification_json(cfg, model, c).dump(2) + "\n"
                                            : classification_csv(cfg, model, c);
    write_atomic(output_path(cfg, stem), body);
}

int cmd_classify(const Globals& g, const std::string& spec)
{
    RunConfig cfg = effective_config(g);
    TailModel m = parse_model(spec, cfg.corpus);
    emit_classification(cfg, "classify", m.describe(), classify_all(m, options(cfg)));
    return exit_ok;
}

json indices_json(const RunConfig& cfg, const TailModel& m)
{
    auto idx = matuszewska(m, cfg.grid, cfg.v_grid);
    json j{{"config", json::parse(config_echo(cfg))}, {"model", m.describe()}};
    auto safe = [](double v) -> json { return std::isfinite(v) ? json(v) : json(num(v)); };
    j["beta"] = safe(idx.beta);
    j["alpha"] = safe(idx.alpha);
    j["beta_v"] = json::array();
    j["alpha_v"] = json::array();
    for (std::size_t k = 0; k < idx.beta_v.size(); ++k) {
        j["beta_v"].push_back(safe(idx.beta_v[k]));
        j["alpha_v"].push_back(safe(idx.alpha_v[k]));
    }
    j["v_grid"] = cfg.v_grid;
    if (idx.bound_fit)
        j["bound_fit"] = {{"c", idx.bound_fit->c}, {"q", idx.bound_fit->q}, {"x0", idx.bound_fit->x0}};
    else
        j["bound_fit"] = nullptr;
    return j;
}

int cmd_indices(const Globals& g, const std::string& spec)
{
    RunConfig cfg = effective_config(g);
    TailModel m = parse_model(spec, cfg.corpus);
    json j = indices_json(cfg, m);
    auto text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    std::printf("model %s\nbeta  %s\nalpha %s\n", m.describe().c_str(), text(j["beta"]).c_str(),
                text(j["alpha"]).c_str());
    if (!j["bound_fit"].is_null())
        std::printf("bound_fit C=%s q=%s x0=%s\n", j["bound_fit"]["c"].dump().c_str(),
                    j["bound_fit"]["q"].dump().c_str(), j["bound_fit"]["x0"].dump().c_str());
    else
        std::printf("bound_fit none\n");
    RunConfig out = cfg;
    out.format = "json";
    write_atomic(output_path(out, "indices"), j.dump(2) + "\n");
    return exit_ok;
}

Coupling parse_coupling(const std::string& s)
{
    if (s == "independent")
        return Coupling::independent();
    if (s == "comonotone")
        return Coupling::comonotone();
    if (s.rfind("fgm:", 0) == 0) {
        try {
            std::size_t used = 0;
            double theta = std::stod(s.substr(4), &used);
            if (used == s.size() - 4)
                return Coupling::fgm(theta);
        } catch (const std::logic_error&) {
        }
    }
    throw Error(Errc::config_parse, "field 'coupling': expected independent, comonotone or fgm:<theta>, got '" + s + "'");
}

double parse_number(const std::string& s, const std::string& what)
{
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used == s.size())
            return v;
    } catch (const std::logic_error&) {
    }
    throw Error(Errc::config_parse, "field '" + what + "': '" + s + "' is not a number");
}

void need_half_line(const TailModel& m, const std::string& op)
{
    if (m.support() != Support::nonnegative)
        throw Error(Errc::pipeline_mismatch, op + " needs a model on the half-line, got " + m.describe());
}

// One stage: operator name plus operand tokens; "-" stands for the previous
// stage's model, and a missing leading operand defaults to it.
TailModel apply_stage(const std::string& op, std::vector<std::string> args, const std::optional<TailModel>& prev,
                      const Coupling& coupling, const Corpus& corpus)
{
    auto model = [&](const std::string& tok) -> TailModel {
        if (tok == "-") {
            if (!prev)
                throw Error(Errc::pipeline_mismatch, "'-' used in the first stage");
            return *prev;
        }
        return parse_model(tok, corpus);
    };
    auto arity = [&](std::size_t n) {
        if (args.size() + 1 == n && prev)
            args.insert(args.begin(), "-");
        if (args.size() != n)
            throw Error(Errc::pipeline_mismatch, op + " takes " + std::to_string(n) + " operands");
    };
    if (op == "model") {
        arity(1);
        return model(args[0]);
    }
    if (op == "convolve") {
        arity(2);
        TailModel f = model(args[0]), g = model(args[1]);
        if (f.support() == Support::nonnegative && g.support() == Support::nonnegative)
            return convolve(f, g);
        return convolve_whole_line(f, g);
    }
    if (op == "power") {
        arity(2);
        TailModel f = model(args[0]);
        need_half_line(f, op);
        return power(f, static_cast<int>(parse_number(args[1], "power")));
    }
    if (op == "product") {
        arity(2);
        TailModel f = model(args[0]), g = model(args[1]);
        need_half_line(f, op);
        need_half_line(g, op);
        return product_convolve(f, g);
    }
    if (op == "max" || op == "min") {
        arity(2);
        JointTailModel j(model(args[0]), model(args[1]), coupling);
        return op == "max" ? max_tail(j) : min_tail(j);
    }
    if (op == "mixture") {
        arity(3);
        return mixture(model(args[0]), model(args[1]), parse_number(args[2], "mixture weight"));
    }
    if (op == "shift") {
        arity(2);
        return shift(model(args[0]), parse_number(args[1], "shift"));
    }
    if (op == "scale") {
        arity(2);
        return scaled_tail(model(args[0]), parse_number(args[1], "scale"));
    }
    if (op == "stopped") {
        // stopped <model> p0,p1,...,pk
        arity(2);
        TailModel f = model(args[0]);
        need_half_line(f, op);
        std::vector<double> p;
        std::stringstream ss(args[1]);
        for (std::string item; std::getline(ss, item, ',');)
            p.push_back(parse_number(item, "counting law"));
        return stopped_sum_tail({f}, StoppedSumSpec::bounded(p));
    }
    if (op == "tabulate") {
        arity(1);
        return tabulate(model(args[0]));
    }
    throw Error(Errc::pipeline_mismatch, "unknown operator '" + op + "'");
}

int cmd_operate(const Globals& g, const std::vector<std::string>& tokens)
{
    RunConfig cfg = effective_config(g);
    Coupling coupling;
    std::vector<std::vector<std::string>> stages(1);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] == "--coupling") {
            if (i + 1 >= tokens.size())
                throw Error(Errc::config_parse, "field 'coupling': missing value");
            coupling = parse_coupling(tokens[++i]);
        } else if (tokens[i].rfind("--coupling=", 0) == 0) {
            coupling = parse_coupling(tokens[i].substr(11));
        } else if (tokens[i] == "|") {
            stages.emplace_back();
        } else {
            stages.back().push_back(tokens[i]);
        }
    }
    std::optional<TailModel> current;
    std::vector<std::pair<std::string, std::string>> sinks;  // (kind, argument)
    for (const auto& st : stages) {
        if (st.empty())
            throw Error(Errc::pipeline_mismatch, "empty pipeline stage");
        const std::string& op = st[0];
        if (op == "classify" || op == "indices") {
            if (!current)
                throw Error(Errc::pipeline_mismatch, op + " needs a model from an earlier stage");
            if (st.size() > 2 || (op == "indices" && st.size() > 1))
                throw Error(Errc::pipeline_mismatch, op + " takes at most one class name");
            sinks.push_back({op, st.size() == 2 ? st[1] : ""});
            continue;
        }
        if (!sinks.empty())
            throw Error(Errc::pipeline_mismatch, "operators cannot follow classify or indices");
        current = apply_stage(op, {st.begin() + 1, st.end()}, current, coupling, cfg.corpus);
    }
    if (!current)
        throw Error(Errc::pipeline_mismatch, "pipeline produced no model");
    if (sinks.empty())
        sinks.push_back({"classify", ""});
    std::printf("model %s\n", current->describe().c_str());
    for (const auto& [kind, arg] : sinks) {
        if (kind == "indices") {
            json j = indices_json(cfg, *current);
            std::printf("beta %s alpha %s\n", j["beta"].dump().c_str(), j["alpha"].dump().c_str());
            RunConfig out = cfg;
            out.format = "json";
            write_atomic(output_path(out, "operate_indices"), j.dump(2) + "\n");
        } else if (arg.empty()) {
            emit_classification(cfg, "operate", current->describe(), classify_all(*current, options(cfg)));
        } else {
            ClassVerdict v = classify(*current, arg, options(cfg));
            Classification c;
            c.verdicts[arg] = v;
            c.horizon = v.horizon;
            std::printf("%s %s margin %s trend %s%s%s\n", arg.c_str(), v.member ? "yes" : "no", num(v.margin).c_str(),
                        num(v.trend).c_str(), v.error.empty() ? "" : "  ", v.error.c_str());
            std::string body = cfg.format == "json" ? classification_json(cfg, current->describe(), c).dump(2) + "\n"
                                                    : classification_csv(cfg, current->describe(), c);
            write_atomic(output_path(cfg, "operate"), body);
        }
    }
    return exit_ok;
}

int cmd_verify(const Globals& g, const std::string& only)
{
    RunConfig cfg = effective_config(g);
    assert_registry_complete();
    std::vector<std::string> selection;
    std::stringstream ss(only);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty())
            selection.push_back(item);
    Report r = run_registry(cfg, selection);
    if (r.rows.empty())
        throw Error(Errc::config_parse, "field 'only': no check matches '" + only + "'");
    std::string csv = report_csv(r);
    std::fputs(csv.c_str(), stdout);
    write_atomic(output_path(cfg, "verify"), cfg.format == "json" ? report_json(r) : csv);
    return r.all_ok() ? exit_ok : exit_check_failed;
}

int cmd_mc(const Globals& g, const std::string& a, const std::string& b, const std::string& coupling_text,
           std::size_t samples, const std::string& samples_out)
{
    RunConfig cfg = effective_config(g);
    JointTailModel j(parse_model(a, cfg.corpus), parse_model(b, cfg.corpus), parse_coupling(coupling_text));
    auto draws = j.sample(samples, cfg.seed);
    double rho = spearman_rho(draws);
    auto sai = sai_limit(j, cfg.grid);
    json out{{"config", json::parse(config_echo(cfg))},
             {"joint", j.describe()},
             {"samples", samples},
             {"seed", cfg.seed},
             {"spearman_rho", rho},
             {"sai", {{"value", sai.value}, {"expected", sai.expected}, {"slope", sai.slope},
                      {"boundary_violation", sai.boundary_violation}}}};
    std::printf("joint %s\nspearman_rho %s\nsai %s (expected %s)\n", j.describe().c_str(), num(rho).c_str(),
                num(sai.value).c_str(), num(sai.expected).c_str());
    try {
        auto d = conditional_ratio_diag(j, {3.0, 4.0}, {1.0, 2.0}, samples, cfg.seed, std::min<std::size_t>(20000, samples / 10));
        json cells = json::array();
        for (const auto& c : d.cells)
            cells.push_back({{"x", c.x}, {"t", c.t}, {"ratio", c.ratio}, {"bin_width", c.bin_width}, {"hits", c.hits}});
        out["conditional"] = {{"max_ratio", d.max_ratio}, {"unbounded", d.unbounded}, {"cells", cells}};
        std::printf("conditional max_ratio %s%s\n", num(d.max_ratio).c_str(), d.unbounded ? " (unbounded)" : "");
    } catch (const Error& e) {
        out["conditional"] = {{"error", e.what()}};
        std::printf("conditional %s\n", e.what());
    }
    if (!samples_out.empty())
        write_samples(draws, samples_out);
    RunConfig o = cfg;
    o.format = "json";
    write_atomic(output_path(o, "mc"), out.dump(2) + "\n");
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Tail classes of heavy-tailed distributions"};
    app.require_subcommand(1);
    Globals g;
    std::uint64_t seed = 0;
    app.add_option("--config", g.config_path, "JSON configuration file");
    auto* seed_opt = app.add_option("--seed", seed, "root seed (overrides the configuration)");
    app.add_option("--output-dir", g.output_dir, "report directory (overrides HTAIL_OUTPUT_DIR)");
    app.add_option("--format", g.format, "csv or json");

    std::string spec;
    auto* classify_cmd = app.add_subcommand("classify", "verdicts for every class");
    classify_cmd->add_option("model", spec, "corpus id or family:key=value,...")->required();

    auto* indices_cmd = app.add_subcommand("indices", "Matuszewska indices and the PD bound fit");
    indices_cmd->add_option("model", spec, "corpus id or family:key=value,...")->required();

    auto* operate_cmd = app.add_subcommand("operate", "operator pipeline, e.g. convolve pareto:2 pareto:2 | classify");
    operate_cmd->prefix_command();

    std::string only;
    auto* verify_cmd = app.add_subcommand("verify", "run the result registry");
    verify_cmd->add_option("--only", only, "comma-separated ids or id prefixes");
    verify_cmd->add_option("--seed", seed, "root seed");

    std::string a, b, coupling = "independent", samples_out;
    std::size_t samples = 200000;
    auto* mc_cmd = app.add_subcommand("mc", "dependence diagnostics for a coupled pair");
    mc_cmd->add_option("first", a)->required();
    mc_cmd->add_option("second", b)->required();
    mc_cmd->add_option("--coupling", coupling, "independent, comonotone or fgm:<theta>");
    mc_cmd->add_option("--samples", samples);
    mc_cmd->add_option("--samples-out", samples_out, "write the draws, one pair per line");
    mc_cmd->add_option("--seed", seed, "root seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }
    if (*seed_opt || verify_cmd->count("--seed") || mc_cmd->count("--seed"))
        g.seed = seed;

    try {
        if (*classify_cmd)
            return cmd_classify(g, spec);
        if (*indices_cmd)
            return cmd_indices(g, spec);
        if (*operate_cmd)
            return cmd_operate(g, operate_cmd->remaining());
        if (*verify_cmd)
            return cmd_verify(g, only);
        if (*mc_cmd)
            return cmd_mc(g, a, b, coupling, samples, samples_out);
    } catch (const Error& e) {
        std::fprintf(stderr, "htail: %s\n", e.what());
        return e.code() == Errc::config_parse ? exit_config : exit_model;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "htail: %s\n", e.what());
        return exit_model;
    }
    return exit_ok;
}
