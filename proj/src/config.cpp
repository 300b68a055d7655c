#include "htail/config.hpp"

#include "htail/error.hpp"
#include "htail/indices.hpp"
#include "htail/classes.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace htail {

namespace {

using nlohmann::json;

struct FamilyName {
    FamilyKind kind;
    std::vector<std::string> positional;
};

const std::map<std::string, FamilyName, std::less<>>& family_names()
{
    static const std::map<std::string, FamilyName, std::less<>> names{
        {"pareto", {FamilyKind::pareto, {"alpha", "scale"}}},
        {"exponential", {FamilyKind::exponential, {"lambda"}}},
        {"exp", {FamilyKind::exponential, {"lambda"}}},
        {"weibull", {FamilyKind::weibull, {"c", "rate"}}},
        {"lognormal", {FamilyKind::lognormal, {"mu", "sigma"}}},
        {"truncated_uniform", {FamilyKind::truncated_uniform, {"b"}}},
        {"uniform", {FamilyKind::truncated_uniform, {"b"}}},
        {"slowly_varying", {FamilyKind::slowly_varying, {}}},
        {"mixture", {FamilyKind::mixture, {}}},
        {"lattice", {FamilyKind::lattice, {}}},
    };
    return names;
}

std::string trim(std::string_view s)
{
    auto b = s.find_first_not_of(" \t\n\r");
    if (b == std::string_view::npos)
        return {};
    auto e = s.find_last_not_of(" \t\n\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i)
        if (i == s.size() || s[i] == sep) {
            out.push_back(trim(s.substr(start, i - start)));
            start = i + 1;
        }
    return out;
}

double number(std::string_view text, const std::string& field)
{
    std::string t = trim(text);
    double v = 0.0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || p != t.data() + t.size())
        throw Error(Errc::config_parse, "field '" + field + "': '" + t + "' is not a number");
    return v;
}

// "w@spec;w@spec" for mixtures, "at@mass;..." for lattices
std::vector<std::pair<std::string, std::string>> weighted_list(std::string_view body, const std::string& family)
{
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& item : split(body, ';')) {
        auto at = item.find('@');
        if (at == std::string::npos)
            throw Error(Errc::config_parse, "field '" + family + "': expected weight@item, got '" + item + "'");
        out.push_back({trim(std::string_view(item).substr(0, at)), trim(std::string_view(item).substr(at + 1))});
    }
    return out;
}

FamilyKind kind_from(const std::string& name)
{
    auto it = family_names().find(name);
    if (it == family_names().end())
        throw Error(Errc::unknown_model, "unknown family '" + name + "'");
    return it->second.kind;
}

const std::map<FamilyKind, std::vector<std::string>>& allowed_keys()
{
    static const std::map<FamilyKind, std::vector<std::string>> keys{
        {FamilyKind::pareto, {"alpha", "scale"}},      {FamilyKind::exponential, {"lambda"}},
        {FamilyKind::weibull, {"c", "rate"}},          {FamilyKind::lognormal, {"mu", "sigma"}},
        {FamilyKind::truncated_uniform, {"b"}},        {FamilyKind::slowly_varying, {}},
        {FamilyKind::mixture, {}},                     {FamilyKind::lattice, {}},
    };
    return keys;
}

void check_key(FamilyKind kind, const std::string& key, const std::string& family)
{
    const auto& ok = allowed_keys().at(kind);
    if (std::find(ok.begin(), ok.end(), key) == ok.end())
        throw Error(Errc::config_parse, "field '" + key + "' is not a parameter of " + family);
}

// JSON corpus entry: {"id", "family", "params"} or mixture/lattice forms
FamilySpec spec_from_json(const json& j, const std::string& where)
{
    if (!j.is_object())
        throw Error(Errc::config_parse, "field '" + where + "': expected an object");
    if (!j.contains("family") || !j["family"].is_string())
        throw Error(Errc::config_parse, "field '" + where + ".family': missing or not a string");
    std::string family = j["family"];
    FamilySpec s;
    s.kind = kind_from(family);
    for (const auto& [k, v] : j.items()) {
        if (k == "family" || k == "id" || k == "declared")
            continue;
        if (k == "params") {
            if (!v.is_object())
                throw Error(Errc::config_parse, "field '" + where + ".params': expected an object");
            for (const auto& [pk, pv] : v.items()) {
                check_key(s.kind, pk, family);
                if (!pv.is_number())
                    throw Error(Errc::config_parse, "field '" + where + ".params." + pk + "': expected a number");
                s.params[pk] = pv.get<double>();
            }
        } else if (k == "weights" || k == "values") {
            if (!v.is_array())
                throw Error(Errc::config_parse, "field '" + where + "." + k + "': expected an array");
            for (const auto& x : v) {
                if (!x.is_number())
                    throw Error(Errc::config_parse, "field '" + where + "." + k + "': expected numbers");
                (k == "weights" ? s.weights : s.values).push_back(x.get<double>());
            }
        } else if (k == "components") {
            if (!v.is_array())
                throw Error(Errc::config_parse, "field '" + where + ".components': expected an array");
            for (std::size_t i = 0; i < v.size(); ++i)
                s.components.push_back(spec_from_json(v[i], where + ".components[" + std::to_string(i) + "]"));
        } else {
            throw Error(Errc::config_parse, "field '" + where + "." + k + "' is not recognised");
        }
    }
    return s;
}

json spec_to_json(const FamilySpec& s)
{
    std::string family;
    for (const auto& [name, f] : family_names())
        if (f.kind == s.kind && family.empty())
            family = name;
    json j{{"family", family}};
    if (!s.params.empty())
        j["params"] = s.params;
    if (!s.weights.empty())
        j["weights"] = s.weights;
    if (!s.values.empty())
        j["values"] = s.values;
    if (!s.components.empty()) {
        j["components"] = json::array();
        for (const auto& c : s.components)
            j["components"].push_back(spec_to_json(c));
    }
    return j;
}

CorpusEntry entry(std::string id, FamilySpec spec, std::vector<std::string> declared = {})
{
    TailModel m = make_family(spec);
    return {std::move(id), std::move(spec), std::move(m), std::move(declared)};
}

FamilySpec simple(FamilyKind k, std::map<std::string, double> params)
{
    FamilySpec s;
    s.kind = k;
    s.params = std::move(params);
    return s;
}

Corpus corpus_from_json(const json& j)
{
    if (!j.is_array())
        throw Error(Errc::config_parse, "field 'corpus': expected an array");
    Corpus out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        std::string where = "corpus[" + std::to_string(i) + "]";
        if (!j[i].is_object() || !j[i].contains("id") || !j[i]["id"].is_string())
            throw Error(Errc::config_parse, "field '" + where + ".id': missing or not a string");
        std::vector<std::string> declared;
        if (j[i].contains("declared")) {
            if (!j[i]["declared"].is_array())
                throw Error(Errc::config_parse, "field '" + where + ".declared': expected an array");
            for (const auto& d : j[i]["declared"])
                declared.push_back(d.get<std::string>());
        }
        out.push_back(entry(j[i]["id"], spec_from_json(j[i], where), std::move(declared)));
    }
    return out;
}

std::vector<double> number_list(const json& j, const std::string& field)
{
    if (!j.is_array() || j.empty())
        throw Error(Errc::config_parse, "field '" + field + "': expected a nonempty array of numbers");
    std::vector<double> out;
    for (const auto& x : j) {
        if (!x.is_number())
            throw Error(Errc::config_parse, "field '" + field + "': expected numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

std::string read_file(const std::string& path, Errc code)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(code, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json(std::string_view text)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(Errc::config_parse, std::string("malformed JSON: ") + e.what());
    }
}

} // namespace

const Corpus& default_corpus()
{
    static const Corpus corpus = [] {
        Corpus c;
        const std::vector<std::string> bi{"bounded-increase-density"};
        c.push_back(entry("pareto2", simple(FamilyKind::pareto, {{"alpha", 2.0}}), bi));
        c.push_back(entry("pareto2.5", simple(FamilyKind::pareto, {{"alpha", 2.5}}), bi));
        c.push_back(entry("pareto3", simple(FamilyKind::pareto, {{"alpha", 3.0}}), bi));
        c.push_back(entry("exponential1", simple(FamilyKind::exponential, {{"lambda", 1.0}})));
        c.push_back(entry("weibull0.5", simple(FamilyKind::weibull, {{"c", 0.5}})));
        c.push_back(entry("weibull2", simple(FamilyKind::weibull, {{"c", 2.0}})));
        c.push_back(entry("lognormal", simple(FamilyKind::lognormal, {{"mu", 0.0}, {"sigma", 1.0}})));
        FamilySpec mix;
        mix.kind = FamilyKind::mixture;
        mix.components = {simple(FamilyKind::pareto, {{"alpha", 2.0}}), simple(FamilyKind::pareto, {{"alpha", 4.0}})};
        mix.weights = {0.5, 0.5};
        c.push_back(entry("pareto_mix", mix));
        c.push_back(entry("slowly_varying", simple(FamilyKind::slowly_varying, {})));
        c.push_back(entry("truncated_uniform", simple(FamilyKind::truncated_uniform, {{"b", 1.0}})));
        return c;
    }();
    return corpus;
}

const CorpusEntry& find_entry(const Corpus& corpus, std::string_view id)
{
    for (const auto& e : corpus)
        if (e.id == id)
            return e;
    throw Error(Errc::unknown_model, "no corpus entry '" + std::string(id) + "'");
}

RunConfig default_config()
{
    RunConfig c;
    c.corpus = default_corpus();
    c.v_grid = default_v_grid;
    c.t_grid = default_t_grid;
    return c;
}

Corpus parse_corpus(std::string_view json_text)
{
    json j = parse_json(json_text);
    if (j.is_object() && j.contains("corpus"))
        return corpus_from_json(j["corpus"]);
    return corpus_from_json(j);
}

RunConfig parse_config(std::string_view json_text)
{
    json j = parse_json(json_text);
    if (!j.is_object())
        throw Error(Errc::config_parse, "configuration must be a JSON object");
    RunConfig c = default_config();
    for (const auto& [k, v] : j.items()) {
        if (k == "corpus") {
            c.corpus = corpus_from_json(v);
        } else if (k == "corpus_path") {
            if (!v.is_string())
                throw Error(Errc::config_parse, "field 'corpus_path': expected a string");
            c.corpus_path = v.get<std::string>();
            c.corpus = parse_corpus(read_file(c.corpus_path, Errc::config_parse));
        } else if (k == "grid") {
            if (!v.is_object())
                throw Error(Errc::config_parse, "field 'grid': expected an object");
            for (const auto& [gk, gv] : v.items()) {
                if (gk == "count") {
                    if (!gv.is_number_integer() || gv.get<long long>() < 1)
                        throw Error(Errc::config_parse, "field 'grid.count': expected a positive integer");
                    c.grid.count = gv.get<int>();
                } else if (gk == "x0" || gk == "ratio") {
                    if (!gv.is_number())
                        throw Error(Errc::config_parse, "field 'grid." + gk + "': expected a number");
                    (gk == "x0" ? c.grid.x0 : c.grid.ratio) = gv.get<double>();
                } else {
                    throw Error(Errc::config_parse, "field 'grid." + gk + "' is not recognised");
                }
            }
            try {
                c.grid.validate();
            } catch (const Error& e) {
                throw Error(Errc::config_parse, std::string("field 'grid': ") + e.what());
            }
        } else if (k == "v_grid") {
            c.v_grid = number_list(v, k);
        } else if (k == "t_grid") {
            c.t_grid = number_list(v, k);
        } else if (k == "b") {
            if (!v.is_number() || !(v.get<double>() > 0.0 && v.get<double>() < 1.0))
                throw Error(Errc::config_parse, "field 'b': expected a number in (0,1)");
            c.b = v.get<double>();
        } else if (k == "seed") {
            if (!v.is_number_unsigned())
                throw Error(Errc::config_parse, "field 'seed': expected an unsigned integer");
            c.seed = v.get<std::uint64_t>();
        } else if (k == "output_dir") {
            if (!v.is_string())
                throw Error(Errc::config_parse, "field 'output_dir': expected a string");
            c.output_dir = v.get<std::string>();
        } else if (k == "format") {
            if (!v.is_string() || (v != "csv" && v != "json"))
                throw Error(Errc::config_parse, "field 'format': expected \"csv\" or \"json\"");
            c.format = v.get<std::string>();
        } else {
            throw Error(Errc::config_parse, "field '" + k + "' is not recognised");
        }
    }
    return c;
}

RunConfig load_config(const std::string& path)
{
    return parse_config(read_file(path, Errc::config_parse));
}

std::string config_echo(const RunConfig& cfg)
{
    json j;
    j["corpus_path"] = cfg.corpus_path;
    j["corpus"] = json::array();
    for (const auto& e : cfg.corpus)
        j["corpus"].push_back(e.id);
    j["grid"] = {{"x0", cfg.grid.x0}, {"ratio", cfg.grid.ratio}, {"count", cfg.grid.count}};
    j["v_grid"] = cfg.v_grid;
    j["t_grid"] = cfg.t_grid;
    j["b"] = cfg.b;
    j["seed"] = cfg.seed;
    j["format"] = cfg.format;
    return j.dump();
}

FamilySpec parse_family(std::string_view text)
{
    std::string t = trim(text);
    auto colon = t.find(':');
    std::string name = t.substr(0, colon);
    std::string body = colon == std::string::npos ? "" : t.substr(colon + 1);
    if (name.empty())
        throw Error(Errc::config_parse, "empty model specification");
    FamilySpec s;
    s.kind = kind_from(name);
    if (s.kind == FamilyKind::mixture) {
        for (const auto& [w, inner] : weighted_list(body, name)) {
            s.weights.push_back(number(w, "mixture weight"));
            s.components.push_back(parse_family(inner));
        }
        return s;
    }
    if (s.kind == FamilyKind::lattice) {
        for (const auto& [at, mass] : weighted_list(body, name)) {
            s.values.push_back(number(at, "lattice value"));
            s.weights.push_back(number(mass, "lattice mass"));
        }
        return s;
    }
    if (body.empty())
        return s;
    const auto& positional = family_names().find(name)->second.positional;
    std::size_t pos = 0;
    for (const auto& item : split(body, ',')) {
        auto eq = item.find('=');
        std::string key;
        std::string value;
        if (eq == std::string::npos) {
            if (pos >= positional.size())
                throw Error(Errc::config_parse, "too many positional parameters for " + name);
            key = positional[pos++];
            value = item;
        } else {
            key = trim(std::string_view(item).substr(0, eq));
            value = item.substr(eq + 1);
        }
        check_key(s.kind, key, name);
        if (s.params.count(key))
            throw Error(Errc::config_parse, "field '" + key + "' given twice");
        s.params[key] = number(value, key);
    }
    return s;
}

TailModel parse_model(std::string_view text, const Corpus& corpus)
{
    std::string t = trim(text);
    if (t.find(':') == std::string::npos) {
        for (const auto& e : corpus)
            if (e.id == t)
                return e.model;
        if (!family_names().count(t))
            throw Error(Errc::unknown_model, "'" + t + "' is neither a corpus id nor a family");
    }
    return make_family(parse_family(t));
}

void write_atomic(const std::string& path, const std::string& content)
{
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path())
        fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error(Errc::config_parse, "cannot write " + tmp.string());
        out << content;
        if (!out.flush())
            throw Error(Errc::config_parse, "cannot write " + tmp.string());
    }
    fs::rename(tmp, target);
}

} // namespace htail
