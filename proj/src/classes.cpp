#include "htail/classes.hpp"

#include "htail/error.hpp"
#include "htail/quadrature.hpp"
#include "htail/tail_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace htail {

namespace {

constexpr double ninf = -inf;

ClassVerdict base(const std::string& name, const WindowSeries& s)
{
    ClassVerdict v;
    v.class_name = name;
    v.horizon = s.horizon;
    v.trend = s.rel_slope;
    v.diagnostics = s.values;
    return v;
}

void settle(ClassVerdict& v, double value_margin, bool trend_ok, double trend_margin)
{
    v.margin = trend_ok ? value_margin : std::min(value_margin, trend_margin);
    if (std::isnan(v.margin))
        v.margin = -inf;
    v.member = v.margin > 0.0;
}

// ∫_{[l, x_k]} e^{γy} F(dy) along the grid, in log space, by parts:
// e^{γl} - e^{γx}F̄(x) + γ∫ e^{γy}F̄(y) dy. Stops early once past stop_level.
std::vector<double> log_partial_moments(const TailModel& f, double gamma, const GridSpec& grid, double stop_level)
{
    double l = f.left_edge();
    if (!std::isfinite(l))
        throw Error(Errc::unsupported_support, "moment integrals need a finite lower edge");
    std::vector<double> out;
    double log_j = ninf, prev = l;
    std::vector<double> kinks = f.kinks();
    for (const Atom& a : f.atoms())
        kinks.push_back(a.at);
    double lg = std::log(gamma);
    auto integrand = [&](double y) { return gamma * y + f.log_survival(y); };
    for (double x : grid.points()) {
        if (x <= l) {
            out.push_back(ninf);
            continue;
        }
        double top = std::min(x, f.right_endpoint());
        if (gamma > 0.0 && top > prev) {
            std::vector<double> br = edge_refined(prev, top);
            add_breaks(br, kinks);
            log_j = log_add(log_j, integrate_log(integrand, br).log_value);
            prev = top;
        }
        double a = gamma > 0.0 ? log_add(gamma * l, lg + log_j) : 0.0;
        double v = log_sub(a, gamma * x + f.log_survival(x));
        out.push_back(v);
        if (v > std::log(stop_level))
            break;
    }
    return out;
}

TailModel prepared(const TailModel& f)
{
    return f.cheap() ? f : tabulate(f);
}

// Window of (F̄^{*2} + F̄²)/F̄; adding F̄² removes the -F̄ term of the maximum
// so slowly varying tails are not pushed below 2 at finite horizons.
WindowSeries subexp_series(const TailModel& f, const GridSpec& grid, bool corrected)
{
    if (f.support() != Support::nonnegative)
        throw Error(Errc::unsupported_support, f.describe() + " is not supported on the half-line");
    TailModel p2 = power(f, 2);
    return window_series(
        grid,
        [&](double x) {
            double l2 = p2.log_survival(x);
            return corrected ? log_add(l2, 2.0 * f.log_survival(x)) : l2;
        },
        [&](double x) { return f.log_survival(x); });
}

} // namespace

bool ClassVerdict::has_flag(std::string_view f) const
{
    return std::find(flags.begin(), flags.end(), f) != flags.end();
}

ClassVerdict is_heavy(const TailModel& f, const std::vector<double>& eps_grid, const GridSpec& grid,
                      const Thresholds& th)
{
    if (eps_grid.empty())
        throw Error(Errc::invalid_parameter, "eps_grid is empty");
    grid.validate();
    TailModel m = prepared(f);
    ClassVerdict v;
    v.class_name = "H";
    v.horizon = grid.horizon();
    v.threshold = th.heavy_level;
    double margin = inf;
    for (double e : eps_grid) {
        if (!(e > 0.0))
            throw Error(Errc::invalid_parameter, "eps must be positive");
        auto p = log_partial_moments(m, e, grid, th.heavy_level);
        double last = p.back();
        double mg = last - std::log(th.heavy_level);
        v.details.push_back({"eps=" + format_number(e), mg});
        if (mg < margin) {
            margin = mg;
            v.statistic = std::exp(last);
            v.diagnostics.clear();
            for (double q : p)
                v.diagnostics.push_back(std::exp(q));
        }
    }
    v.margin = margin;
    v.member = margin > 0.0;
    return v;
}

ClassVerdict is_Lgamma(const TailModel& f, double gamma, const std::vector<double>& t_grid, const GridSpec& grid,
                       const Thresholds& th)
{
    if (!(gamma >= 0.0))
        throw Error(Errc::invalid_parameter, "gamma must be nonnegative");
    if (t_grid.empty())
        throw Error(Errc::invalid_parameter, "t_grid is empty");
    ClassVerdict out;
    bool first = true;
    for (double t : t_grid) {
        if (t == 0.0 || !std::isfinite(t))
            throw Error(Errc::invalid_parameter, "shift t must be nonzero");
        WindowSeries s = window_series(
            grid, [&](double x) { return f.log_survival(x - t); }, [&](double x) { return f.log_survival(x); });
        double target = std::exp(gamma * t);
        double dev = std::max(std::fabs(s.upper / target - 1.0), std::fabs(s.lower / target - 1.0));
        ClassVerdict v = base(gamma == 0.0 ? "L" : "L(" + format_number(gamma) + ")", s);
        v.statistic = s.upper / target;
        v.threshold = th.tau;
        settle(v, th.tau - dev, true, 0.0);
        v.details.push_back({"t=" + format_number(t), v.margin});
        if (first || v.margin < out.margin) {
            auto details = std::move(out.details);
            out = std::move(v);
            details.insert(details.end(), out.details.begin(), out.details.end());
            out.details = std::move(details);
        } else {
            out.details.push_back(v.details.front());
        }
        first = false;
    }
    return out;
}

ClassVerdict is_long(const TailModel& f, double t, const GridSpec& grid, const Thresholds& th)
{
    return is_Lgamma(f, 0.0, {t}, grid, th);
}

ClassVerdict is_D(const TailModel& f, double b, const GridSpec& grid, const Thresholds& th)
{
    if (!(b > 0.0 && b < 1.0))
        throw Error(Errc::invalid_parameter, "b must lie in (0,1)");
    RatioEstimate r = ratio_estimate(f, b, grid);
    ClassVerdict v = base("D", r.series);
    v.statistic = r.upper();
    v.threshold = th.ceiling;
    settle(v, th.ceiling - r.upper(), r.trend() <= th.d_trend, th.d_trend - r.trend());
    if (r.trend() > 0.0)
        v.flags.push_back("trend-positive");
    return v;
}

ClassVerdict is_PD(const TailModel& f, const GridSpec& grid, const std::vector<double>& v_grid, const Thresholds& th)
{
    if (v_grid.empty())
        throw Error(Errc::invalid_parameter, "v_grid is empty");
    ClassVerdict best;
    bool have = false;
    double best_key = inf;
    for (double v : v_grid) {
        if (!(v > 1.0))
            throw Error(Errc::invalid_parameter, "v_grid entries must exceed 1");
        RatioEstimate r = ratio_estimate(f, v, grid);
        ClassVerdict c = base("PD", r.series);
        c.statistic = r.upper();
        c.threshold = 1.0 - th.pd_delta;
        settle(c, (1.0 - th.pd_delta) - r.upper(), r.trend() <= th.pd_trend, th.pd_trend - r.trend());
        c.details.push_back({"v=" + format_number(v), c.margin});
        // report the passing dilation closest to 2, else the least failing one
        double key = c.member ? std::fabs(std::log(v / 2.0)) : 1e6 - c.margin;
        if (!have || key < best_key) {
            auto details = std::move(best.details);
            best = std::move(c);
            details.insert(details.end(), best.details.begin(), best.details.end());
            best.details = std::move(details);
            best_key = key;
        } else {
            best.details.push_back(c.details.front());
        }
        have = true;
    }
    return best;
}

ClassVerdict is_OL(const TailModel& f, const std::vector<double>& t_grid, const GridSpec& grid, const Thresholds& th)
{
    if (t_grid.empty())
        throw Error(Errc::invalid_parameter, "t_grid is empty");
    ClassVerdict out;
    bool first = true;
    for (double t : t_grid) {
        if (t == 0.0 || !std::isfinite(t))
            throw Error(Errc::invalid_parameter, "shift t must be nonzero");
        WindowSeries s = window_series(
            grid, [&](double x) { return f.log_survival(x - t); }, [&](double x) { return f.log_survival(x); });
        ClassVerdict v = base("OL", s);
        v.statistic = s.upper;
        v.threshold = th.ceiling;
        settle(v, th.ceiling - s.upper, s.rel_slope <= th.d_trend, th.d_trend - s.rel_slope);
        if (first || v.margin < out.margin)
            out = std::move(v);
        first = false;
    }
    return out;
}

ClassVerdict is_OS(const TailModel& f, const GridSpec& grid, const Thresholds& th)
{
    WindowSeries s = subexp_series(prepared(f), grid, false);
    ClassVerdict v = base("OS", s);
    v.statistic = s.upper;
    v.threshold = th.ceiling;
    settle(v, th.ceiling - s.upper, s.rel_slope <= th.d_trend, th.d_trend - s.rel_slope);
    return v;
}

LaplaceTransform laplace_transform(const TailModel& f, double gamma, const GridSpec& grid, const Thresholds& th)
{
    if (!(gamma >= 0.0))
        throw Error(Errc::invalid_parameter, "gamma must be nonnegative");
    grid.validate();
    if (gamma == 0.0)
        return {0.0, 1.0, false, {}};
    auto p = log_partial_moments(prepared(f), gamma, grid, inf);
    LaplaceTransform out{gamma, 0.0, false, {}};
    for (double q : p)
        out.partial.push_back(std::exp(q));
    double last = out.partial.back();
    std::size_t w = static_cast<std::size_t>(grid.window_start());
    double growth = out.partial[w] > 0.0 ? last / out.partial[w] - 1.0 : inf;
    out.divergent = !(last <= th.transform_cap) || growth > 1e-3;
    out.value = out.divergent ? inf : last;
    return out;
}

ClassVerdict is_Sgamma(const TailModel& f, double gamma, const GridSpec& grid, const Thresholds& th)
{
    LaplaceTransform lt = laplace_transform(f, gamma, grid, th);
    if (lt.divergent)
        throw Error(Errc::transform_divergent,
                    "transform at gamma=" + format_number(gamma) + " exceeds the cap at the horizon");
    TailModel m = prepared(f);
    WindowSeries s = subexp_series(m, grid, true);
    ClassVerdict v = base(gamma == 0.0 ? "S" : "S(" + format_number(gamma) + ")", s);
    double target = 2.0 * lt.value;
    double dev = std::max(std::fabs(s.upper / lt.value - 2.0), std::fabs(s.lower / lt.value - 2.0));
    v.statistic = s.upper / lt.value;
    v.threshold = th.tau2;
    v.details.push_back({"target", target});
    ClassVerdict l = is_Lgamma(m, gamma, {1.0}, grid, th);
    v.details.push_back({"shift-margin", l.margin});
    settle(v, th.tau2 - dev, l.member, l.margin);
    if (std::fabs(s.rel_slope) > th.slow_trend)
        v.flags.push_back("slow-convergence");
    return v;
}

ClassVerdict is_S(const TailModel& f, const GridSpec& grid, const Thresholds& th)
{
    return is_Sgamma(f, 0.0, grid, th);
}

ClassVerdict intersect(const std::string& name, const ClassVerdict& a, const ClassVerdict& b)
{
    ClassVerdict v;
    v.class_name = name;
    v.member = a.member && b.member;
    const ClassVerdict& d = a.margin <= b.margin ? a : b;
    v.margin = d.margin;
    v.statistic = d.statistic;
    v.threshold = d.threshold;
    v.trend = d.trend;
    v.horizon = std::max(a.horizon, b.horizon);
    v.details = {{a.class_name, a.margin}, {b.class_name, b.margin}};
    if (!a.error.empty())
        v.error = a.error;
    else if (!b.error.empty())
        v.error = b.error;
    for (const auto* src : {&a, &b})
        for (const auto& fl : src->flags)
            if (!v.has_flag(fl))
                v.flags.push_back(fl);
    return v;
}

namespace {

template <class Fn>
ClassVerdict guarded(const std::string& name, const GridSpec& grid, Fn&& fn)
{
    try {
        return fn();
    } catch (const Error& e) {
        ClassVerdict v;
        v.class_name = name;
        v.member = false;
        v.margin = -inf;
        v.horizon = grid.horizon();
        v.error = e.what();
        v.flags.push_back(std::string(to_string(e.code())));
        return v;
    }
}

ClassVerdict unary(const TailModel& m, const std::string& name, const ClassifyOptions& opt)
{
    return guarded(name, opt.grid, [&] {
        if (name == "H")
            return is_heavy(m, opt.eps_grid, opt.grid, opt.th);
        if (name == "L")
            return is_long(m, 1.0, opt.grid, opt.th);
        if (name == "D")
            return is_D(m, opt.b, opt.grid, opt.th);
        if (name == "PD")
            return is_PD(m, opt.grid, opt.v_grid, opt.th);
        if (name == "OL")
            return is_OL(m, opt.t_grid, opt.grid, opt.th);
        if (name == "OS")
            return is_OS(m, opt.grid, opt.th);
        if (name == "S")
            return is_S(m, opt.grid, opt.th);
        throw Error(Errc::invalid_parameter, "unknown class " + name);
    });
}

const std::map<std::string, std::pair<std::string, std::string>>& intersections()
{
    static const std::map<std::string, std::pair<std::string, std::string>> table{
        {"A", {"S", "PD"}},     {"T", {"L", "PD"}},     {"OA", {"OS", "PD"}},   {"OT", {"OL", "PD"}},
        {"D∩PD", {"D", "PD"}}, {"D∩T", {"D", "T"}},   {"L∩OA", {"L", "OA"}},
    };
    return table;
}

} // namespace

ClassVerdict classify(const TailModel& f, std::string_view name, const ClassifyOptions& opt)
{
    opt.grid.validate();
    TailModel m = prepared(f);
    std::string n(name);
    auto it = intersections().find(n);
    if (it == intersections().end()) {
        if (std::find(class_order.begin(), class_order.end(), n) == class_order.end())
            throw Error(Errc::invalid_parameter, "unknown class " + n);
        return unary(m, n, opt);
    }
    return intersect(n, classify(m, it->second.first, opt), classify(m, it->second.second, opt));
}

Classification classify_all(const TailModel& f, const ClassifyOptions& opt)
{
    opt.grid.validate();
    TailModel m = prepared(f);
    Classification out;
    out.horizon = opt.grid.horizon();
    for (const char* name : {"H", "L", "D", "PD", "OL", "OS", "S"})
        out.verdicts[name] = unary(m, name, opt);
    const auto& v = out.verdicts;
    out.verdicts["A"] = intersect("A", v.at("S"), v.at("PD"));
    out.verdicts["T"] = intersect("T", v.at("L"), v.at("PD"));
    out.verdicts["OA"] = intersect("OA", v.at("OS"), v.at("PD"));
    out.verdicts["OT"] = intersect("OT", v.at("OL"), v.at("PD"));
    out.verdicts["D∩PD"] = intersect("D∩PD", v.at("D"), v.at("PD"));
    out.verdicts["L∩OA"] = intersect("L∩OA", v.at("L"), out.verdicts.at("OA"));
    if (!f.discontinuities().empty())
        out.warnings.push_back("D[F] is not empty; S verdict relies on the atom-aware convolution");
    auto implies = [&](const char* a, const char* b) {
        if (v.at(a).member && !v.at(b).member)
            out.warnings.push_back(std::string(a) + " member but not " + b);
    };
    implies("S", "OS");
    implies("S", "L");
    implies("L", "OL");
    implies("L", "H");
    if (v.at("D").member && v.at("L").member && !v.at("S").member)
        out.warnings.push_back("D and L member but not S");
    return out;
}

} // namespace htail
