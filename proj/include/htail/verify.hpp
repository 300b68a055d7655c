#pragma once

#include "htail/classes.hpp"
#include "htail/config.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace htail {

enum class CheckStatus { pass, fail, flagged, fail_expected };

std::string_view to_string(CheckStatus s);

// A hypothesis of the result, tested before the conclusion is looked at.
struct Premise {
    std::string name;
    bool holds = false;
    double value = 0.0;
};

// What a check body produces. Numeric relations (ratios, sandwiches) are
// carried as verdicts too, so every row has a margin and a horizon.
struct Evidence {
    std::string inputs;
    std::vector<Premise> premises;
    ClassVerdict verdict;
    std::vector<std::pair<std::string, double>> values;
};

struct CheckContext {
    const RunConfig& cfg;
    std::uint64_t seed;  // derived from the root seed and the check id
    ClassifyOptions opt;
    ClassifyOptions extended;  // count 80, for lognormal inputs
};

struct TheoremCheck {
    std::string id;       // "T2.1-part3", negatives end in "-neg"
    std::string claim;
    std::function<Evidence(const CheckContext&)> run;

    bool negative() const;
};

struct CheckRow {
    std::string id;
    std::string claim;
    CheckStatus status = CheckStatus::fail;
    double margin = 0.0;
    double horizon = 0.0;
    std::uint64_t seed = 0;
    Evidence evidence;
    std::string note;
};

struct Report {
    std::string config_echo;
    std::uint64_t seed = 0;
    std::vector<CheckRow> rows;  // sorted by id

    bool all_ok() const;  // no fail rows
};

// Result ids the registry must cover, one per result part.
const std::vector<std::string>& required_ids();
const std::vector<TheoremCheck>& registry();
// Throws registry-incomplete naming the first id without a positive check
// or without a negative control.
void assert_registry_complete(const std::vector<TheoremCheck>& checks = registry());

// Positive rows fail when a premise or the conclusion fails and are flagged
// when the decisive ratio still drifts; negative rows are fail-expected on
// non-membership and fail otherwise.
CheckStatus decide(bool negative, const Evidence& e, const Thresholds& th = {});

std::uint64_t derive_seed(std::uint64_t root, std::string_view id);

// selection entries match an id exactly or as a prefix up to '-'; empty runs all
Report run_registry(const RunConfig& cfg, const std::vector<std::string>& selection = {});

struct BatteryResult {
    std::string f_name, g_name;
    bool eligible = false;  // both inputs in T
    bool items[4] = {false, false, false, false};
    double margins[4] = {0.0, 0.0, 0.0, 0.0};
    bool flagged = false;
    std::string error;

    bool agree() const;
};

// (1) F*G in A, (2) F̄*G ≈ F̄+Ḡ within 3% over the window, (3) the mixtures at
// p = 0.3, 0.5 in A, (4) the independent maximum in A.
BatteryResult equivalence_battery(const TailModel& f, const TailModel& g, const ClassifyOptions& opt = {});

std::string report_csv(const Report& r);
std::string report_json(const Report& r);

} // namespace htail
