#include "htail/tail_calculus.hpp"

#include "htail/error.hpp"
#include "htail/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <shared_mutex>

namespace htail {

namespace {

constexpr double ninf = -inf;

void require_model(const TailModel& m)
{
    if (!m)
        throw Error(Errc::invalid_parameter, "empty model");
}

std::vector<double> merged(std::vector<double> a, const std::vector<double>& b)
{
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    return a;
}

std::vector<double> edges_of(const TailModel& m)
{
    std::vector<double> out = m.kinks();
    if (std::isfinite(m.left_edge()))
        out.push_back(m.left_edge());
    if (std::isfinite(m.right_endpoint()))
        out.push_back(m.right_endpoint());
    for (const Atom& a : m.atoms())
        out.push_back(a.at);
    return merged(out, {});
}

// ---------------------------------------------------------------- transforms

class Shifted final : public TailModelImpl {
public:
    Shifted(TailModel f, double c) : f_(std::move(f)), c_(c) {}
    double log_survival(double x) const override { return f_.log_survival(x - c_); }
    bool has_density() const override { return f_.density_available(); }
    double log_density(double x) const override { return f_.log_density(x - c_); }
    std::vector<Atom> atoms() const override
    {
        auto a = f_.atoms();
        for (Atom& t : a)
            t.at += c_;
        return a;
    }
    std::vector<double> kinks() const override
    {
        auto k = f_.kinks();
        for (double& v : k)
            v += c_;
        return k;
    }
    double lower() const override { return f_.left_edge() + c_; }
    double upper() const override { return f_.right_endpoint() + c_; }
    bool cheap() const override { return f_.cheap(); }
    bool can_sample() const override { return f_.can_sample(); }
    double sample(Rng& rng) const override { return f_.sample(rng) + c_; }
    std::string describe() const override { return "shift(" + f_.describe() + "," + format_number(c_) + ")"; }

private:
    TailModel f_;
    double c_;
};

class ScaledTail final : public TailModelImpl {
public:
    ScaledTail(TailModel f, double c) : f_(std::move(f)), c_(c), lc_(std::log(c))
    {
        if (c_ > 1.0) {
            // locate F̄(x*) = 1/c for the kink of the clamp
            double lo = f_.left_edge(), hi = std::max(1.0, lo + 1.0);
            while (f_.log_survival(hi) + lc_ > 0.0)
                hi = lo + 2.0 * (hi - lo);
            for (int i = 0; i < 200; ++i) {
                double m = 0.5 * (lo + hi);
                (f_.log_survival(m) + lc_ > 0.0 ? lo : hi) = m;
            }
            knee_ = hi;
        } else {
            knee_ = f_.left_edge();
        }
    }
    double log_survival(double x) const override
    {
        if (x < f_.left_edge())
            return 0.0;
        return std::min(0.0, lc_ + f_.log_survival(x));
    }
    bool has_density() const override { return f_.density_available(); }
    double log_density(double x) const override
    {
        if (c_ > 1.0 && x < knee_)
            return ninf;
        return lc_ + f_.log_density(x);
    }
    std::vector<Atom> atoms() const override
    {
        std::vector<Atom> out;
        for (Atom a : f_.atoms())
            if (c_ <= 1.0 || a.at >= knee_)
                out.push_back({a.at, a.mass * std::min(1.0, c_)});
        if (c_ < 1.0)
            out.push_back({f_.left_edge(), 1.0 - c_});
        return out;
    }
    std::vector<double> kinks() const override { return merged(f_.kinks(), {knee_}); }
    double lower() const override { return c_ > 1.0 ? knee_ : f_.left_edge(); }
    double upper() const override { return f_.right_endpoint(); }
    bool cheap() const override { return f_.cheap(); }
    std::string describe() const override
    {
        return "scaled_tail(" + f_.describe() + "," + format_number(c_) + ")";
    }

private:
    TailModel f_;
    double c_, lc_;
    double knee_ = 0.0;
};

class Floored final : public TailModelImpl {
public:
    Floored(TailModel g, double e) : g_(std::move(g)), e_(e) {}
    double log_survival(double x) const override { return x < e_ ? 0.0 : g_.log_survival(x); }
    bool has_density() const override { return g_.density_available(); }
    double log_density(double x) const override { return x <= e_ ? ninf : g_.log_density(x); }
    std::vector<Atom> atoms() const override
    {
        std::vector<Atom> out;
        double below = -std::expm1(g_.log_survival(e_));
        if (below > 0.0)
            out.push_back({e_, below});
        for (Atom a : g_.atoms())
            if (a.at > e_)
                out.push_back(a);
        return out;
    }
    std::vector<double> kinks() const override { return merged(g_.kinks(), {e_}); }
    double lower() const override { return std::max(e_, g_.left_edge()); }
    double upper() const override { return std::max(e_, g_.right_endpoint()); }
    bool cheap() const override { return g_.cheap(); }
    bool can_sample() const override { return g_.can_sample(); }
    double sample(Rng& rng) const override { return std::max(e_, g_.sample(rng)); }
    std::string describe() const override { return "floor(" + g_.describe() + "," + format_number(e_) + ")"; }

private:
    TailModel g_;
    double e_;
};

class Capped final : public TailModelImpl {
public:
    Capped(TailModel g, double e) : g_(std::move(g)), e_(e) {}
    double log_survival(double x) const override { return x >= e_ ? ninf : g_.log_survival(x); }
    bool has_density() const override { return g_.density_available(); }
    double log_density(double x) const override { return x >= e_ ? ninf : g_.log_density(x); }
    std::vector<Atom> atoms() const override
    {
        std::vector<Atom> out;
        for (Atom a : g_.atoms())
            if (a.at < e_)
                out.push_back(a);
        double above = std::exp(g_.log_survival(e_));
        if (above > 0.0)
            out.push_back({e_, above});
        return out;
    }
    std::vector<double> kinks() const override { return merged(g_.kinks(), {e_}); }
    double lower() const override { return std::min(e_, g_.left_edge()); }
    double upper() const override { return std::min(e_, g_.right_endpoint()); }
    bool cheap() const override { return g_.cheap(); }
    bool can_sample() const override { return g_.can_sample(); }
    double sample(Rng& rng) const override { return std::min(e_, g_.sample(rng)); }
    std::string describe() const override { return "cap(" + g_.describe() + "," + format_number(e_) + ")"; }

private:
    TailModel g_;
    double e_;
};

// ------------------------------------------------------------- max and min

class Extreme final : public TailModelImpl {
public:
    Extreme(JointTailModel j, bool is_max) : j_(std::move(j)), max_(is_max) {}

    double log_survival(double x) const override
    {
        const TailModel& f = j_.first();
        const TailModel& g = j_.second();
        double lj = j_.log_joint(x, x);
        if (!max_)
            return lj;
        double lf = f.log_survival(x), lg = g.log_survival(x);
        double sum = log_add(lf, lg);
        if (sum == ninf)
            return ninf;
        // F̄ + Ḡ - J, computed relative to the sum to keep precision
        double frac = std::exp(lj - sum);
        return std::min(0.0, sum + std::log1p(-std::min(frac, 1.0)));
    }
    bool has_density() const override
    {
        return j_.first().density_available() || j_.second().density_available();
    }
    double log_density(double x) const override
    {
        const TailModel& f = j_.first();
        const TailModel& g = j_.second();
        double ldf = f.log_density(x), ldg = g.log_density(x);
        double lf = f.log_survival(x), lg = g.log_survival(x);
        if (j_.coupling().kind == CouplingKind::comonotone) {
            bool f_smaller = lf <= lg;
            return max_ == f_smaller ? ldg : ldf;
        }
        double th = j_.coupling().kind == CouplingKind::fgm ? j_.coupling().theta : 0.0;
        double sf = std::exp(lf), sg = std::exp(lg);
        // -dJ/dx for J = F̄Ḡ(1 + θFG) is fḠ(1 + θG(1 - 2F̄)) + F̄g(1 + θF(1 - 2Ḡ))
        double wa = 1.0 + th * (1.0 - sg) * (1.0 - 2.0 * sf);
        double wb = 1.0 + th * (1.0 - sf) * (1.0 - 2.0 * sg);
        double lmin = log_add(ldf + lg + std::log(std::max(wa, 0.0)), lf + ldg + std::log(std::max(wb, 0.0)));
        if (!max_)
            return lmin;
        double lsum = log_add(ldf, ldg);
        if (lsum == ninf)
            return ninf;
        double frac = std::exp(lmin - lsum);
        return frac >= 1.0 ? ninf : lsum + std::log1p(-frac);
    }
    std::vector<Atom> atoms() const override
    {
        std::vector<Atom> out;
        if (j_.coupling().kind != CouplingKind::independent)
            return out;
        const TailModel& f = j_.first();
        const TailModel& g = j_.second();
        for (Atom a : f.atoms()) {
            double w = max_ ? 1.0 - g.survival(a.at) : g.survival(a.at);
            if (a.mass * w > 0.0)
                out.push_back({a.at, a.mass * w});
        }
        for (Atom b : g.atoms()) {
            double w = max_ ? 1.0 - f.survival(b.at) : f.survival(b.at);
            if (b.mass * w > 0.0)
                out.push_back({b.at, b.mass * w});
        }
        return out;
    }
    std::vector<double> kinks() const override { return merged(edges_of(j_.first()), edges_of(j_.second())); }
    double lower() const override
    {
        double a = j_.first().left_edge(), b = j_.second().left_edge();
        return max_ ? std::max(a, b) : std::min(a, b);
    }
    double upper() const override
    {
        double a = j_.first().right_endpoint(), b = j_.second().right_endpoint();
        return max_ ? std::max(a, b) : std::min(a, b);
    }
    bool cheap() const override { return j_.first().cheap() && j_.second().cheap(); }
    bool can_sample() const override { return j_.has_sampler(); }
    double sample(Rng& rng) const override
    {
        auto [x, y] = j_.draw(rng);
        return max_ ? std::max(x, y) : std::min(x, y);
    }
    std::string describe() const override { return (max_ ? "max(" : "min(") + j_.describe() + ")"; }

private:
    JointTailModel j_;
    bool max_;
};

} // namespace

TailModel shift(const TailModel& f, double c)
{
    require_model(f);
    if (!std::isfinite(c))
        throw Error(Errc::invalid_parameter, "shift must be finite");
    return TailModel(std::make_shared<Shifted>(f, c));
}

TailModel scaled_tail(const TailModel& f, double c)
{
    require_model(f);
    if (!(c > 0.0) || !std::isfinite(c))
        throw Error(Errc::invalid_parameter, "tail scale must be positive");
    if (c == 1.0)
        return f;
    return TailModel(std::make_shared<ScaledTail>(f, c));
}

TailModel floor_at(const TailModel& g, double eps)
{
    require_model(g);
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw Error(Errc::invalid_parameter, "epsilon must be positive");
    return TailModel(std::make_shared<Floored>(g, eps));
}

TailModel cap_at(const TailModel& g, double eps)
{
    require_model(g);
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw Error(Errc::invalid_parameter, "epsilon must be positive");
    return TailModel(std::make_shared<Capped>(g, eps));
}

TailModel mixture(const TailModel& f, const TailModel& g, double p)
{
    require_model(f);
    require_model(g);
    if (!(p > 0.0 && p < 1.0))
        throw Error(Errc::invalid_parameter, "mixture weight must lie in (0,1)");
    return finite_mixture({f, g}, {p, 1.0 - p});
}

TailModel max_tail(const JointTailModel& joint)
{
    return TailModel(std::make_shared<Extreme>(joint, true));
}

TailModel min_tail(const JointTailModel& joint)
{
    return TailModel(std::make_shared<Extreme>(joint, false));
}

} // namespace htail
