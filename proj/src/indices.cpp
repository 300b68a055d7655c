#include "htail/indices.hpp"

#include "htail/error.hpp"

#include <algorithm>
#include <cmath>

namespace htail {

namespace {

constexpr double beta_trend_limit = 1e-4;
constexpr double alpha_trend_limit = -1e-3;
constexpr double max_bound_c = 1e6;

double capped(double v)
{
    return v > index_cap ? inf : v;
}

} // namespace

WindowSeries window_series(const GridSpec& grid, const std::function<double(double)>& log_num,
                           const std::function<double(double)>& log_den)
{
    grid.validate();
    WindowSeries s;
    for (int k = 0; k <= grid.count; ++k) {
        double x = grid.at(k);
        double d = log_den(x);
        if (!std::isfinite(d))
            break;
        s.x.push_back(x);
        s.values.push_back(std::exp(log_num(x) - d));
    }
    std::size_t m = s.values.size();
    if (m <= static_cast<std::size_t>(grid.window_start()))
        throw Error(Errc::underflow_before_window,
                    "tail vanishes at grid point " + std::to_string(m) + " before the window");
    s.window_begin = 2 * m / 3;
    s.horizon = s.x.back();
    s.upper = -inf;
    s.lower = inf;
    bool finite = true;
    double n = static_cast<double>(m - s.window_begin);
    double sk = 0, sv = 0, skk = 0, skv = 0;
    for (std::size_t i = s.window_begin; i < m; ++i) {
        double v = s.values[i];
        if (!std::isfinite(v)) {
            finite = false;
            v = inf;
        }
        s.upper = std::max(s.upper, v);
        s.lower = std::min(s.lower, v);
        double k = static_cast<double>(i - s.window_begin);
        sk += k;
        sv += v;
        skk += k * k;
        skv += k * v;
    }
    if (!finite) {
        s.mean = inf;
        s.slope = inf;
        s.rel_slope = inf;
        return s;
    }
    s.mean = sv / n;
    s.slope = (n * skv - sk * sv) / (n * skk - sk * sk);
    s.rel_slope = s.mean != 0.0 ? s.slope / std::fabs(s.mean) : 0.0;
    return s;
}

RatioEstimate ratio_estimate(const TailModel& f, double factor, const GridSpec& grid)
{
    if (!(factor > 0.0) || factor == 1.0 || !std::isfinite(factor))
        throw Error(Errc::invalid_parameter, "dilation factor must be positive and different from 1");
    return {factor, window_series(
                        grid, [&](double x) { return f.log_survival(factor * x); },
                        [&](double x) { return f.log_survival(x); })};
}

MatuszewskaIndices matuszewska(const TailModel& f, const GridSpec& grid, const std::vector<double>& v_grid)
{
    if (v_grid.empty())
        throw Error(Errc::invalid_parameter, "v_grid is empty");
    for (double v : v_grid)
        if (!(v > 1.0))
            throw Error(Errc::invalid_parameter, "v_grid entries must exceed 1");
    MatuszewskaIndices out{0.0, inf, std::nullopt, {}, {}};
    for (double v : v_grid) {
        RatioEstimate r = ratio_estimate(f, v, grid);
        double lv = std::log(v);
        double b, a;
        if (r.trend() < alpha_trend_limit) {
            // the ratio is still falling steeply, read as a limit of zero
            b = inf;
            a = inf;
        } else {
            b = r.trend() > beta_trend_limit ? 0.0 : capped(-std::log(r.upper()) / lv);
            a = capped(-std::log(r.lower()) / lv);
        }
        b = std::max(b, 0.0);
        a = std::max(a, 0.0);
        out.beta_v.push_back(b);
        out.alpha_v.push_back(a);
        out.beta = std::max(out.beta, b);
        out.alpha = std::min(out.alpha, a);
    }
    if (out.beta > 0.0) {
        double q = std::isfinite(out.beta) ? 0.9 * out.beta : 1.0;
        out.bound_fit = fit_pd_bound(f, grid, q);
    }
    return out;
}

std::optional<BoundFit> fit_pd_bound(const TailModel& f, const GridSpec& grid, double q)
{
    if (!(q > 0.0) || !std::isfinite(q))
        throw Error(Errc::invalid_parameter, "q must be positive");
    grid.validate();
    std::vector<double> xs, ls;
    for (int k = 0; k <= grid.count; ++k) {
        double x = grid.at(k);
        double l = f.log_survival(x);
        if (!std::isfinite(l))
            break;
        xs.push_back(x);
        ls.push_back(l);
    }
    std::size_t m = xs.size();
    if (m <= static_cast<std::size_t>(grid.window_start()))
        throw Error(Errc::underflow_before_window, "tail vanishes before the window");
    double limit = grid.horizon() / 4.0;
    for (std::size_t i = 0; i + 2 < m && xs[i] <= limit; ++i) {
        double log_vmax_half = 0.5 * std::log(xs.back() / xs[i + 1]);
        // log of ratio * v^q, maximised over pairs beyond x_i
        double full = 0.0, half = 0.0;
        for (std::size_t k = i + 1; k < m; ++k)
            for (std::size_t j = k + 1; j < m; ++j) {
                double lv = std::log(xs[j] / xs[k]);
                double c = ls[j] - ls[k] + q * lv;
                full = std::max(full, c);
                if (lv <= log_vmax_half)
                    half = std::max(half, c);
            }
        double c_full = std::exp(full), c_half = std::exp(half);
        // a constant that keeps growing with the dilation range is not a bound
        if (c_full <= max_bound_c && c_full <= c_half * (1.0 + 1e-3))
            return BoundFit{c_full, q, xs[i]};
    }
    return std::nullopt;
}

} // namespace htail
