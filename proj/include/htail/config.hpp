#pragma once

#include "htail/tail_model.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace htail {

struct CorpusEntry {
    std::string id;
    FamilySpec spec;
    TailModel model;
    // hypotheses recorded by hand rather than tested, e.g. "bounded-increase-density"
    std::vector<std::string> declared;
};

using Corpus = std::vector<CorpusEntry>;

// pareto2, pareto2.5, pareto3, exponential1, weibull0.5, weibull2, lognormal,
// pareto_mix, slowly_varying, truncated_uniform
const Corpus& default_corpus();
const CorpusEntry& find_entry(const Corpus& corpus, std::string_view id);

struct RunConfig {
    std::string corpus_path;       // empty: built-in corpus
    Corpus corpus;                 // resolved entries
    GridSpec grid;
    std::vector<double> v_grid;
    std::vector<double> t_grid;
    double b = 0.5;
    std::uint64_t seed = 42;
    std::string output_dir = ".";
    std::string format = "csv";    // csv | json
};

// Defaults for every absent field. Unknown or ill-typed fields throw
// config-parse naming the field.
RunConfig default_config();
RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::string& path);
Corpus parse_corpus(std::string_view json_text);

// Effective configuration as one line of compact JSON, corpus reduced to ids.
std::string config_echo(const RunConfig& cfg);

// family:key=value,... with positional shorthand (pareto:2, lognormal:0,1),
// a corpus id, mixture:0.5@pareto:2;0.5@pareto:4 or lattice:1@0.5;2@0.5.
FamilySpec parse_family(std::string_view text);
TailModel parse_model(std::string_view text, const Corpus& corpus = default_corpus());

// write-then-rename so readers never see a partial file
void write_atomic(const std::string& path, const std::string& content);

} // namespace htail
