#pragma once

#include "htail/indices.hpp"
#include "htail/tail_model.hpp"

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace htail {

struct ClassVerdict {
    std::string class_name;
    bool member = false;
    // signed distance of the decisive statistic from its threshold; > 0 iff member
    double margin = 0.0;
    double statistic = 0.0;
    double threshold = 0.0;
    double trend = 0.0;
    double horizon = 0.0;
    std::vector<double> diagnostics;
    std::vector<std::pair<std::string, double>> details;
    std::vector<std::string> flags;
    std::string error;

    bool has_flag(std::string_view f) const;
};

struct LaplaceTransform {
    double gamma;
    double value;  // F̂(γ), inf when divergent at the horizon
    bool divergent;
    std::vector<double> partial;  // partial integrals along the grid
};

struct Thresholds {
    double tau = 1e-3;          // long-tail tolerance
    double tau2 = 0.05;         // subexponential window
    double pd_delta = 0.01;     // PD margin below one
    double ceiling = 1e4;       // finiteness ceiling
    double d_trend = 1e-3;      // allowed relative growth per grid step for bounded ratios
    double pd_trend = 1e-4;     // allowed relative growth per grid step for PD ratios
    double slow_trend = 1e-3;   // slow-convergence flag for S
    double heavy_level = 1e6;   // partial exponential moment counted as divergent
    double transform_cap = 1e8;
};

inline const std::vector<double> default_eps_grid{0.001, 0.01, 0.1, 1.0};
inline const std::vector<double> default_t_grid{1.0, 2.0};

ClassVerdict is_heavy(const TailModel& f, const std::vector<double>& eps_grid = default_eps_grid,
                      const GridSpec& grid = {}, const Thresholds& th = {});
ClassVerdict is_long(const TailModel& f, double t = 1.0, const GridSpec& grid = {}, const Thresholds& th = {});
ClassVerdict is_D(const TailModel& f, double b = 0.5, const GridSpec& grid = {}, const Thresholds& th = {});
ClassVerdict is_PD(const TailModel& f, const GridSpec& grid = {}, const std::vector<double>& v_grid = default_v_grid,
                   const Thresholds& th = {});
ClassVerdict is_OL(const TailModel& f, const std::vector<double>& t_grid = default_t_grid, const GridSpec& grid = {},
                   const Thresholds& th = {});
ClassVerdict is_S(const TailModel& f, const GridSpec& grid = {}, const Thresholds& th = {});
ClassVerdict is_OS(const TailModel& f, const GridSpec& grid = {}, const Thresholds& th = {});

LaplaceTransform laplace_transform(const TailModel& f, double gamma, const GridSpec& grid = {},
                                   const Thresholds& th = {});
ClassVerdict is_Lgamma(const TailModel& f, double gamma, const std::vector<double>& t_grid = {1.0},
                       const GridSpec& grid = {}, const Thresholds& th = {});
ClassVerdict is_Sgamma(const TailModel& f, double gamma, const GridSpec& grid = {}, const Thresholds& th = {});

// Conjunction of two verdicts; the margin is the smaller one.
ClassVerdict intersect(const std::string& name, const ClassVerdict& a, const ClassVerdict& b);

struct ClassifyOptions {
    GridSpec grid;
    std::vector<double> v_grid = default_v_grid;
    std::vector<double> t_grid = default_t_grid;
    std::vector<double> eps_grid = default_eps_grid;
    double b = 0.5;
    Thresholds th;
};

inline const std::vector<std::string> class_order{"H", "L", "D", "PD", "OL", "OS", "S", "A", "T", "OA", "OT"};

struct Classification {
    std::map<std::string, ClassVerdict> verdicts;
    std::vector<std::string> warnings;  // inclusion-lattice violations
    double horizon = 0.0;

    const ClassVerdict& at(const std::string& name) const { return verdicts.at(name); }
};

// Every unary estimator plus the intersections; estimator errors become
// non-member verdicts carrying the error text.
Classification classify_all(const TailModel& f, const ClassifyOptions& opt = {});

// A single class or intersection by name ("PD", "OA", "D∩PD", ...), with
// the same error handling as classify_all.
ClassVerdict classify(const TailModel& f, std::string_view name, const ClassifyOptions& opt = {});

} // namespace htail
