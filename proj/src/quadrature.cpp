#include "htail/quadrature.hpp"

#include "htail/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace htail {

namespace {

constexpr double ninf = -std::numeric_limits<double>::infinity();

struct Panel {
    double a, b;
    double fa, fm, fb;
    double whole;
    double err;
    bool operator<(const Panel& o) const { return err < o.err; }
};

struct Rescale {
    double scale;
};

class Integrator {
public:
    Integrator(const std::function<double(double)>& g, double scale) : g_(g), scale_(scale) {}

    double eval(double x) const
    {
        double v = g_(x);
        if (!(v == v) || v == ninf)
            return 0.0;
        // an integrable singularity sitting exactly on a node
        if (v == std::numeric_limits<double>::infinity())
            return 0.0;
        if (v - scale_ > 600.0)
            throw Rescale{v};
        return std::exp(v - scale_);
    }

    Panel panel(double a, double b, double fa, double fb) const
    {
        double m = 0.5 * (a + b);
        double fm = eval(m);
        Panel p{a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), 0.0};
        return p;
    }

private:
    const std::function<double(double)>& g_;
    double scale_;
};

bool splittable(const Panel& p)
{
    double w = p.b - p.a;
    double m = 0.5 * (p.a + p.b);
    return w > 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::fabs(m), 1e-300) && m > p.a &&
           m < p.b;
}

LogIntegral run(const std::function<double(double)>& g, const std::vector<double>& breaks,
                const QuadratureOptions& opt, double scale)
{
    Integrator in(g, scale);
    // g itself carries rounding noise of a few ulps of its magnitude, which
    // no amount of refinement removes
    double noise = 16.0 * std::numeric_limits<double>::epsilon() * std::fabs(scale);
    double rel_tol = std::max(opt.rel_tol, noise);
    double fail_tol = std::max(opt.fail_tol, noise);
    std::vector<double> fb(breaks.size());
    for (std::size_t i = 0; i < breaks.size(); ++i)
        fb[i] = in.eval(breaks[i]);

    // total is the sum of Simpson values over leaf panels; each leaf carries
    // half the Richardson error estimate of the split that produced it
    std::priority_queue<Panel> open;
    double total = 0.0, err_total = 0.0, frozen_err = 0.0;
    auto split = [&](const Panel& p) {
        double m = 0.5 * (p.a + p.b);
        Panel l = in.panel(p.a, m, p.fa, p.fm);
        Panel r = in.panel(m, p.b, p.fm, p.fb);
        double e = std::fabs(l.whole + r.whole - p.whole) / 15.0;
        l.err = r.err = 0.5 * e;
        total += l.whole + r.whole;
        err_total += e;
        open.push(l);
        open.push(r);
    };
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        if (!(breaks[i + 1] > breaks[i]))
            continue;
        split(in.panel(breaks[i], breaks[i + 1], fb[i], fb[i + 1]));
    }

    std::size_t count = open.size();
    while (!open.empty() && err_total + frozen_err > rel_tol * std::fabs(total) &&
           count < opt.max_intervals) {
        Panel p = open.top();
        open.pop();
        err_total -= p.err;
        if (!splittable(p)) {
            frozen_err += p.err;
            continue;
        }
        total -= p.whole;
        split(p);
        ++count;
    }

    double err = std::max(0.0, err_total) + frozen_err;
    if (total <= 0.0) {
        if (err > 0.0 && total < 0.0)
            throw Error(Errc::quadrature_failure, "negative integral estimate");
        return {ninf, 0.0};
    }
    double rel = err / total;
    if (rel > fail_tol)
        throw Error(Errc::quadrature_failure, "estimated relative error " + std::to_string(rel));
    return {std::log(total) + scale, rel};
}

} // namespace

LogIntegral integrate_log(const std::function<double(double)>& g, const std::vector<double>& breaks,
                          const QuadratureOptions& opt)
{
    if (breaks.size() < 2)
        return {ninf, 0.0};
    double scale = ninf;
    for (double x : breaks) {
        double v = g(x);
        if (v == v && v > scale && !std::isinf(v))
            scale = v;
    }
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        double v = g(0.5 * (breaks[i] + breaks[i + 1]));
        if (v == v && v > scale && !std::isinf(v))
            scale = v;
    }
    if (scale == ninf)
        scale = 0.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
        try {
            return run(g, breaks, opt, scale);
        } catch (const Rescale& r) {
            scale = r.scale;
        }
    }
    throw Error(Errc::quadrature_failure, "integrand scale did not settle");
}

std::vector<double> edge_refined(double a, double b, double min_step_rel)
{
    std::vector<double> out{a, b};
    if (!(b > a))
        return out;
    double w = b - a;
    double floor_step = min_step_rel * std::max({1.0, std::fabs(a), std::fabs(b)});
    for (double s = w / 4.0; s > floor_step; s /= 4.0) {
        out.push_back(a + s);
        out.push_back(b - s);
    }
    out.push_back(a + 0.5 * w);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void add_breaks(std::vector<double>& breaks, const std::vector<double>& extra)
{
    if (breaks.empty())
        return;
    double lo = breaks.front(), hi = breaks.back();
    for (double x : extra)
        if (x > lo && x < hi)
            breaks.push_back(x);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
}

double log_add(double a, double b)
{
    if (a < b)
        std::swap(a, b);
    if (b == ninf)
        return a;
    return a + std::log1p(std::exp(b - a));
}

double log_sub(double a, double b)
{
    if (b == ninf)
        return a;
    if (b >= a)
        return ninf;
    double d = b - a;
    return a + (d > -0.693 ? std::log(-std::expm1(d)) : std::log1p(-std::exp(d)));
}

} // namespace htail
