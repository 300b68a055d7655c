#include "htail/multivariate.hpp"

#include "htail/error.hpp"
#include "htail/indices.hpp"
#include "htail/tail_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <set>

namespace htail {

namespace {

void check_direction(const Direction& t, std::size_t n)
{
    if (t.size() != n)
        throw Error(Errc::dimension_mismatch,
                    "direction has " + std::to_string(t.size()) + " coordinates, model has " + std::to_string(n));
    bool finite = false;
    for (double c : t) {
        if (!(c > 0.0))
            throw Error(Errc::invalid_parameter, "direction coordinates must be positive");
        finite = finite || std::isfinite(c);
    }
    if (!finite)
        throw Error(Errc::invalid_parameter, "direction has no finite coordinate");
}

Direction hadamard(const Direction& a, const Direction& b)
{
    Direction out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = a[i] * b[i];
    return out;
}

std::string describe_all(const std::vector<TailModel>& ms)
{
    std::string s;
    for (const auto& m : ms)
        s += (s.empty() ? "" : ", ") + m.describe();
    return s;
}

// Marginal of a minimum read off a joint: only the two matching coordinates are finite.
class JointSlice final : public TailModelImpl {
public:
    JointSlice(VectorTailModel full, std::size_t i, std::size_t n, double lower)
        : full_(std::move(full)), t_(2 * n, inf), lower_(lower)
    {
        t_[i] = t_[n + i] = 1.0;
    }
    double log_survival(double x) const override { return full_.log_joint(t_, x); }
    double lower() const override { return lower_; }
    std::string describe() const override { return "min-slice(" + full_.describe() + ")"; }

private:
    VectorTailModel full_;
    Direction t_;
    double lower_;
};

double settled(double value_margin, bool trend_ok, double trend_margin)
{
    double m = trend_ok ? value_margin : std::min(value_margin, trend_margin);
    return std::isnan(m) ? -inf : m;
}

} // namespace

VectorTailModel::VectorTailModel(std::vector<TailModel> marginals, Coupling coupling, std::optional<TailModel> reference)
    : marginals_(std::move(marginals)), reference_(std::move(reference))
{
    std::size_t n = marginals_.size();
    if (n == 0 || n > max_dimension)
        throw Error(Errc::invalid_parameter, "dimension must lie in 1.." + std::to_string(max_dimension));
    name_ = "vector[" + describe_all(marginals_) + "; " + coupling.describe() + "]";
    const auto ms = marginals_;
    switch (coupling.kind) {
    case CouplingKind::independent:
        log_joint_ = [ms](const Direction& t, double x) {
            double s = 0.0;
            for (std::size_t i = 0; i < ms.size(); ++i)
                if (std::isfinite(t[i]))
                    s += ms[i].log_survival(t[i] * x);
            return s;
        };
        break;
    case CouplingKind::comonotone:
        log_joint_ = [ms](const Direction& t, double x) {
            double s = inf;
            for (std::size_t i = 0; i < ms.size(); ++i)
                if (std::isfinite(t[i]))
                    s = std::min(s, ms[i].log_survival(t[i] * x));
            return s;
        };
        break;
    case CouplingKind::fgm: {
        if (n != 2)
            throw Error(Errc::invalid_parameter, "the FGM coupling is bivariate");
        JointTailModel j(ms[0], ms[1], coupling);
        log_joint_ = [j](const Direction& t, double x) {
            if (!std::isfinite(t[0]))
                return j.second().log_survival(t[1] * x);
            if (!std::isfinite(t[1]))
                return j.first().log_survival(t[0] * x);
            return j.log_joint(t[0] * x, t[1] * x);
        };
        break;
    }
    }
}

VectorTailModel::VectorTailModel(std::vector<TailModel> marginals, LogJoint log_joint, std::string name,
                                 std::optional<TailModel> reference)
    : marginals_(std::move(marginals)), log_joint_(std::move(log_joint)), name_(std::move(name)),
      reference_(std::move(reference))
{
    if (marginals_.empty() || marginals_.size() > 2 * max_dimension)
        throw Error(Errc::invalid_parameter, "unsupported dimension");
    if (!log_joint_)
        throw Error(Errc::invalid_parameter, "joint function is empty");
}

VectorTailModel VectorTailModel::with_reference(TailModel ref) const
{
    VectorTailModel out = *this;
    out.reference_ = std::move(ref);
    return out;
}

double VectorTailModel::log_joint(const Direction& t, double x) const
{
    check_direction(t, dim());
    return log_joint_(t, x);
}

double VectorTailModel::joint(const Direction& t, double x) const
{
    double v = std::exp(log_joint(t, x));
    return v < underflow_floor ? 0.0 : v;
}

WeakEquivalence weak_equivalence(const TailModel& f, const TailModel& g, const GridSpec& grid, double bound)
{
    if (!(bound > 1.0))
        throw Error(Errc::invalid_parameter, "equivalence bound must exceed 1");
    WindowSeries s = window_series(
        grid, [&](double x) { return f.log_survival(x); }, [&](double x) { return g.log_survival(x); });
    WeakEquivalence w;
    w.upper = s.upper;
    w.lower = s.lower;
    double lb = std::log(bound);
    w.margin = std::min(lb - std::log(s.upper), std::log(s.lower) + lb);
    if (std::isnan(w.margin))
        w.margin = -inf;
    w.holds = w.margin > 0.0;
    return w;
}

bool VectorVerdict::has_flag(std::string_view f) const
{
    return std::find(flags.begin(), flags.end(), f) != flags.end();
}

std::vector<Direction> default_t_set(std::size_t n)
{
    if (n == 0 || n > max_dimension)
        throw Error(Errc::invalid_parameter, "dimension must lie in 1.." + std::to_string(max_dimension));
    const double coords[] = {1.0, 0.5, 2.0, inf};
    std::vector<Direction> out;
    std::set<Direction> seen;
    auto add = [&](Direction d) {
        if (out.size() < max_directions && seen.insert(d).second)
            out.push_back(std::move(d));
    };
    for (int k = 0; k < 3; ++k)
        add(Direction(n, coords[k]));
    for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < 3; ++k) {
            Direction d(n, inf);
            d[i] = coords[k];
            add(d);
        }
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i)
        total *= 4;
    for (std::size_t code = 0; code < total; ++code) {
        Direction d(n);
        std::size_t c = code;
        for (std::size_t i = 0; i < n; ++i, c /= 4)
            d[i] = coords[c % 4];
        if (std::any_of(d.begin(), d.end(), [](double v) { return std::isfinite(v); }))
            add(d);
    }
    return out;
}

std::vector<Direction> default_b_set(std::size_t n, double b)
{
    std::vector<Direction> out{Direction(n, b)};
    if (n >= 2) {
        Direction mixed(n, b);
        for (std::size_t i = 1; i < n; i += 2)
            mixed[i] = 0.75;
        out.push_back(mixed);
    }
    return out;
}

std::vector<Direction> default_v_set(std::size_t n)
{
    std::vector<Direction> out;
    for (double v : default_v_grid)
        out.push_back(Direction(n, v));
    return out;
}

VectorVerdict is_Dn(const VectorTailModel& v, const std::vector<Direction>& t_set, const std::vector<Direction>& b_set,
                    const GridSpec& grid, const Thresholds& th, double bound)
{
    if (!v.reference())
        throw Error(Errc::missing_reference, "D_n needs a reference tail for the weak-equivalence certificate");
    if (t_set.empty() || b_set.empty())
        throw Error(Errc::invalid_parameter, "direction and dilation sets must be nonempty");
    for (const auto& t : t_set)
        check_direction(t, v.dim());
    for (const auto& b : b_set) {
        check_direction(b, v.dim());
        for (double c : b)
            if (!(c < 1.0))
                throw Error(Errc::invalid_parameter, "dilation coordinates must lie in (0,1)");
    }

    VectorVerdict out;
    out.class_name = "D_n";
    out.tested_t = t_set;
    out.tested_dilations = b_set;
    out.horizon = grid.horizon();

    const TailModel& ref = *v.reference();
    ClassVerdict ref_d = is_D(ref, 0.5, grid, th);
    if (!ref_d.member)
        out.flags.push_back("reference-not-D");
    for (const auto& m : v.marginals()) {
        WeakEquivalence w = weak_equivalence(m, ref, grid, bound);
        out.certificate_margin = std::min(out.certificate_margin, w.margin);
    }
    if (!(out.certificate_margin > 0.0))
        out.flags.push_back("weak-equivalence-failed");

    std::vector<std::future<double>> jobs;
    for (const auto& t : t_set)
        for (const auto& b : b_set)
            jobs.push_back(std::async(std::launch::async, [&, t, b] {
                Direction bt = hadamard(b, t);
                WindowSeries s = window_series(
                    grid, [&](double x) { return v.log_joint(bt, x); }, [&](double x) { return v.log_joint(t, x); });
                return settled(th.ceiling - s.upper, s.rel_slope <= th.d_trend, th.d_trend - s.rel_slope);
            }));
    out.margin = inf;
    for (auto& j : jobs)
        out.margin = std::min(out.margin, j.get());
    out.member = out.margin > 0.0 && out.certificate_margin > 0.0 && ref_d.member;
    return out;
}

VectorVerdict is_PDn(const VectorTailModel& v, const std::vector<Direction>& t_set, const std::vector<Direction>& v_set,
                     const GridSpec& grid, const Thresholds& th)
{
    if (t_set.empty() || v_set.empty())
        throw Error(Errc::invalid_parameter, "direction and dilation sets must be nonempty");
    for (const auto& t : t_set)
        check_direction(t, v.dim());
    for (const auto& d : v_set) {
        check_direction(d, v.dim());
        for (double c : d)
            if (!(c > 1.0))
                throw Error(Errc::invalid_parameter, "dilation coordinates must exceed 1");
    }

    VectorVerdict out;
    out.class_name = "PD_n";
    out.tested_t = t_set;
    out.tested_dilations = v_set;
    out.horizon = grid.horizon();
    for (const auto& m : v.marginals()) {
        out.marginal_verdicts.push_back(is_D(m, 0.5, grid, th));
        if (!out.marginal_verdicts.back().member && !out.has_flag("marginal-precondition-failed")) {
            out.flags.push_back("marginal-precondition-failed");
            out.flags.push_back("conditional");
        }
    }

    std::vector<std::future<double>> jobs;
    for (const auto& t : t_set)
        jobs.push_back(std::async(std::launch::async, [&, t] {
            double best = 0.0, best_key = inf;
            bool have = false;
            for (const auto& d : v_set) {
                Direction vt = hadamard(d, t);
                WindowSeries s = window_series(
                    grid, [&](double x) { return v.log_joint(vt, x); }, [&](double x) { return v.log_joint(t, x); });
                double m = settled((1.0 - th.pd_delta) - s.upper, s.rel_slope <= th.pd_trend, th.pd_trend - s.rel_slope);
                // same choice as the univariate estimator: passing dilation nearest 2
                double spread = 0.0;
                for (double c : d)
                    spread += std::log(c / 2.0);
                double key = m > 0.0 ? std::fabs(spread / static_cast<double>(d.size())) : 1e6 - m;
                if (!have || key < best_key) {
                    best = m;
                    best_key = key;
                    have = true;
                }
            }
            return best;
        }));
    out.margin = inf;
    for (auto& j : jobs)
        out.margin = std::min(out.margin, j.get());
    out.member = out.margin > 0.0;
    return out;
}

VectorVerdict intersect(const std::string& name, const VectorVerdict& a, const VectorVerdict& b)
{
    VectorVerdict out;
    out.class_name = name;
    out.member = a.member && b.member;
    out.margin = std::min(a.margin, b.margin);
    out.certificate_margin = std::min(a.certificate_margin, b.certificate_margin);
    out.tested_t = a.tested_t;
    out.tested_dilations = a.tested_dilations;
    out.tested_dilations.insert(out.tested_dilations.end(), b.tested_dilations.begin(), b.tested_dilations.end());
    out.marginal_verdicts = b.marginal_verdicts;
    out.horizon = std::max(a.horizon, b.horizon);
    for (const auto* src : {&a, &b})
        for (const auto& f : src->flags)
            if (!out.has_flag(f))
                out.flags.push_back(f);
    return out;
}

VectorTailModel vector_min_tail(const VectorTailModel& a, const VectorTailModel& b)
{
    if (a.dim() != b.dim())
        throw Error(Errc::dimension_mismatch, "minimum of vectors with different dimensions");
    std::vector<TailModel> ms;
    for (std::size_t i = 0; i < a.dim(); ++i)
        ms.push_back(min_tail(JointTailModel(a.marginals()[i], b.marginals()[i])));
    std::optional<TailModel> ref;
    if (a.reference() && b.reference())
        ref = min_tail(JointTailModel(*a.reference(), *b.reference()));
    return VectorTailModel(
        std::move(ms), [a, b](const Direction& t, double x) { return a.log_joint(t, x) + b.log_joint(t, x); },
        "min(" + a.describe() + ", " + b.describe() + ")", std::move(ref));
}

VectorTailModel vector_min_tail(const VectorTailModel& full, std::size_t n)
{
    if (n == 0 || full.dim() != 2 * n)
        throw Error(Errc::dimension_mismatch, "joint of the pair must have dimension 2n");
    std::vector<TailModel> ms;
    for (std::size_t i = 0; i < n; ++i) {
        double lo = std::min(full.marginals()[i].left_edge(), full.marginals()[n + i].left_edge());
        ms.push_back(TailModel(std::make_shared<JointSlice>(full, i, n, lo)));
    }
    return VectorTailModel(
        std::move(ms),
        [full](const Direction& t, double x) {
            Direction tt = t;
            tt.insert(tt.end(), t.begin(), t.end());
            return full.log_joint(tt, x);
        },
        "min-exact(" + full.describe() + ")");
}

MinChainCheck check_min_chain(const VectorTailModel& a, const VectorTailModel& b, const Direction& t,
                              const Direction& v, const GridSpec& grid)
{
    VectorTailModel m = vector_min_tail(a, b);
    Direction vt = hadamard(v, t);
    MinChainCheck out;
    bool any = false;
    for (double x : grid.points()) {
        double da = a.log_joint(t, x), db = b.log_joint(t, x);
        if (!std::isfinite(da) || !std::isfinite(db))
            continue;
        double ra = std::exp(a.log_joint(vt, x) - da);
        double rb = std::exp(b.log_joint(vt, x) - db);
        double rm = std::exp(m.log_joint(vt, x) - m.log_joint(t, x));
        out.worst_slack = std::min({out.worst_slack, ra - rm, rb - rm});
        any = true;
    }
    out.holds = any && out.worst_slack >= -1e-12;
    return out;
}

} // namespace htail
