#pragma once

#include "htail/tail_model.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace htail {

// A ratio sequence evaluated along the grid, cut at the first point whose
// denominator vanishes, with extrema and trend over the final window.
struct WindowSeries {
    std::vector<double> x;
    std::vector<double> values;
    std::size_t window_begin = 0;
    double upper = 0.0;
    double lower = 0.0;
    double mean = 0.0;
    double slope = 0.0;      // least-squares slope per grid step
    double rel_slope = 0.0;  // slope / mean
    double horizon = 0.0;
};

// values[k] = exp(log_num(x_k) - log_den(x_k)); throws underflow-before-window
// when log_den stops being finite before the nominal window starts.
WindowSeries window_series(const GridSpec& grid, const std::function<double(double)>& log_num,
                           const std::function<double(double)>& log_den);

struct RatioEstimate {
    double factor;
    WindowSeries series;
    double upper() const { return series.upper; }
    double lower() const { return series.lower; }
    double trend() const { return series.rel_slope; }
};

// F̄(factor x) / F̄(x) on the grid
RatioEstimate ratio_estimate(const TailModel& f, double factor, const GridSpec& grid);

inline const std::vector<double> default_v_grid{1.25, 1.5, 2.0, 3.0, 4.0, 8.0};
inline constexpr double index_cap = 64.0;

struct BoundFit {
    double c;
    double q;
    double x0;
};

struct MatuszewskaIndices {
    double beta;
    double alpha;
    std::optional<BoundFit> bound_fit;
    std::vector<double> beta_v;
    std::vector<double> alpha_v;
};

MatuszewskaIndices matuszewska(const TailModel& f, const GridSpec& grid,
                               const std::vector<double>& v_grid = default_v_grid);

// Smallest grid x0 and minimal C >= 1 with F̄(vx)/F̄(x) <= C v^-q for grid
// pairs beyond x0; empty when no fit with C <= 1e6 and x0 <= horizon/4 exists.
std::optional<BoundFit> fit_pd_bound(const TailModel& f, const GridSpec& grid, double q);

} // namespace htail
