#include "htail/error.hpp"
#include "htail/quadrature.hpp"
#include "htail/tail_calculus.hpp"

#include <algorithm>
#include <cmath>

namespace htail {

namespace {

constexpr double ninf = -inf;
constexpr double remainder_rel = 1e-13;

// X Y for independent nonnegative X ~ F (survival side) and Y ~ G (density
// and atom side), integrated in u = ln y.
class Product final : public TailModelImpl {
public:
    Product(TailModel f, TailModel g) : f_(std::move(f)), g_(std::move(g)), ga_(g_.atoms()), fa_(f_.atoms()) {}

    double log_survival(double x) const override
    {
        if (x < 0.0)
            return 0.0;
        if (x == 0.0)
            return f_.log_survival(0.0) + g_.log_survival(0.0);
        double lf = f_.left_edge();
        double acc = ninf;
        for (const Atom& b : ga_)
            if (b.at > 0.0)
                acc = log_add(acc, std::log(b.mass) + f_.log_survival(x / b.at));
        if (!g_.density_available())
            return std::min(0.0, acc);
        // above y* = x / lF the factor F̄(x/y) is one: add G's continuous mass there
        double y_star = lf > 0.0 ? x / lf : inf;
        double y_hi = std::min(y_star, g_.right_endpoint());
        if (y_star < g_.right_endpoint()) {
            double cont = g_.log_survival(y_star);
            for (const Atom& b : ga_)
                if (b.at > y_star)
                    cont = log_sub(cont, std::log(b.mass));
            acc = log_add(acc, cont);
        }
        auto fn = [&](double u) {
            double y = std::exp(u);
            return g_.log_density(y) + u + f_.log_survival(x / y);
        };
        auto lower_bound = [&](double u) {
            // G(e^u) F̄(x e^-u) bounds the mass left out below u
            double y = std::exp(u);
            return std::log(-std::expm1(g_.log_survival(y))) + f_.log_survival(x / y);
        };
        auto upper_bound = [&](double u) { return g_.log_survival(std::exp(u)); };
        return std::min(0.0, log_add(acc, integrate(fn, lower_bound, upper_bound, std::log(x), y_hi, acc)));
    }

    bool has_density() const override
    {
        return (f_.density_available() && (g_.density_available() || !ga_.empty())) ||
               (g_.density_available() && !fa_.empty());
    }

    double log_density(double x) const override
    {
        if (!(x > 0.0))
            return ninf;
        double acc = ninf;
        if (f_.density_available())
            for (const Atom& b : ga_)
                if (b.at > 0.0)
                    acc = log_add(acc, std::log(b.mass) - std::log(b.at) + f_.log_density(x / b.at));
        if (g_.density_available())
            for (const Atom& a : fa_)
                if (a.at > 0.0)
                    acc = log_add(acc, std::log(a.mass) - std::log(a.at) + g_.log_density(x / a.at));
        if (!f_.density_available() || !g_.density_available())
            return acc;
        double lf = f_.left_edge();
        double y_hi = std::min(lf > 0.0 ? x / lf : inf, g_.right_endpoint());
        auto fn = [&](double u) {
            double y = std::exp(u);
            return g_.log_density(y) + f_.log_density(x / y);
        };
        auto lower_bound = [&](double u) {
            double y = std::exp(u);
            return std::log(-std::expm1(g_.log_survival(y))) + f_.log_survival(x / y) - std::log(x);
        };
        auto upper_bound = [&](double u) { return g_.log_survival(std::exp(u)) - u + f_.log_density(x / std::exp(u)); };
        return log_add(acc, integrate(fn, lower_bound, upper_bound, std::log(x), y_hi, acc));
    }

    std::vector<Atom> atoms() const override
    {
        std::vector<Atom> out;
        for (const Atom& a : fa_)
            for (const Atom& b : ga_)
                out.push_back({a.at * b.at, a.mass * b.mass});
        double pf = -std::expm1(f_.log_survival(0.0)), pg = -std::expm1(g_.log_survival(0.0));
        double p0 = pf + pg - pf * pg;
        if (p0 > 0.0)
            out.push_back({0.0, std::min(1.0, p0)});
        std::sort(out.begin(), out.end(), [](const Atom& l, const Atom& r) { return l.at < r.at; });
        return out;
    }
    std::vector<double> kinks() const override
    {
        std::vector<double> out;
        for (double a : {f_.left_edge(), f_.right_endpoint()})
            for (double b : {g_.left_edge(), g_.right_endpoint()})
                if (std::isfinite(a * b))
                    out.push_back(a * b);
        return out;
    }
    double lower() const override { return f_.left_edge() * g_.left_edge(); }
    double upper() const override { return f_.right_endpoint() * g_.right_endpoint(); }
    bool cheap() const override { return false; }
    bool can_sample() const override { return f_.can_sample() && g_.can_sample(); }
    double sample(Rng& rng) const override { return f_.sample(rng) * g_.sample(rng); }
    std::string describe() const override { return "product(" + f_.describe() + "," + g_.describe() + ")"; }

private:
    // Integrates fn over u in (ln lG, ln y_hi), extending an open lower or
    // upper end until the neglected mass is negligible against the total.
    double integrate(const std::function<double(double)>& fn, const std::function<double(double)>& low_rem,
                     const std::function<double(double)>& high_rem, double center, double y_hi,
                     double known) const
    {
        double lg = g_.left_edge();
        double u_lo_fixed = lg > 0.0 ? std::log(lg) : ninf;
        double u_hi_fixed = std::isfinite(y_hi) ? std::log(y_hi) : inf;
        if (!(u_hi_fixed > u_lo_fixed))
            return ninf;
        double a = std::isfinite(u_lo_fixed) ? u_lo_fixed : std::min(center, u_hi_fixed) - 40.0;
        double b = std::isfinite(u_hi_fixed) ? u_hi_fixed : std::max(center, a) + 40.0;
        std::vector<double> extra;
        for (double k : g_.kinks())
            if (k > 0.0)
                extra.push_back(std::log(k));
        double total = ninf;
        for (int round = 0; round < 40; ++round) {
            std::vector<double> br = edge_refined(a, b);
            for (double u = std::ceil(a); u < b; u += 1.0)
                br.push_back(u);
            std::sort(br.begin(), br.end());
            add_breaks(br, extra);
            total = integrate_log(fn, br).log_value;
            double ref = log_add(total, known) + std::log(remainder_rel);
            bool grow_lo = !std::isfinite(u_lo_fixed) && low_rem(a) > ref;
            bool grow_hi = !std::isfinite(u_hi_fixed) && high_rem(b) > ref;
            if (!grow_lo && !grow_hi)
                return total;
            if (grow_lo)
                a -= 40.0;
            if (grow_hi)
                b += 40.0;
        }
        throw Error(Errc::quadrature_failure, "product integral range did not close");
    }

    TailModel f_, g_;
    std::vector<Atom> ga_, fa_;
};

} // namespace

TailModel product_convolve(const TailModel& f, const TailModel& g)
{
    if (!f || !g)
        throw Error(Errc::invalid_parameter, "empty model");
    for (const TailModel* m : {&f, &g})
        if (m->support() != Support::nonnegative)
            throw Error(Errc::unsupported_support, m->describe() + " is not supported on the half-line");
    if (g.log_survival(0.0) == ninf)
        throw Error(Errc::degenerate_y, g.describe() + " is degenerate at zero");
    if (f.log_survival(0.0) == ninf)
        throw Error(Errc::degenerate_y, f.describe() + " is degenerate at zero");
    if (!g.density_available() && g.atoms().empty())
        throw Error(Errc::unsupported_support, g.describe() + " has neither density nor atoms");
    return TailModel(std::make_shared<Product>(f, g));
}

TruncatedProducts truncated_products(const TailModel& f, const TailModel& g, const TruncatedProductSpec& spec)
{
    if (!(spec.epsilon > 0.0) || !(spec.epsilon_prime > 0.0))
        throw Error(Errc::invalid_parameter, "truncation levels must be positive");
    TruncatedProducts out{product_convolve(f, floor_at(g, spec.epsilon)),
                          product_convolve(f, cap_at(g, spec.epsilon_prime)), g.survival(spec.epsilon),
                          g.survival(spec.epsilon_prime)};
    return out;
}

SandwichCheck check_sandwich(const TailModel& f, const TailModel& g, const TruncatedProductSpec& spec,
                             const GridSpec& grid)
{
    grid.validate();
    TruncatedProducts tp = truncated_products(f, g, spec);
    TailModel h = product_convolve(f, g);
    SandwichCheck out{true, inf, 0};
    // quadrature noise allowance on each side
    constexpr double slack = 1e-8;
    auto rel = [](double lo, double hi) {
        double s = std::max(std::fabs(hi), std::fabs(lo));
        return s > 0.0 ? (hi - lo) / s : 0.0;
    };
    for (double x : grid.points()) {
        double hv = h.survival(x), he = tp.h_eps.survival(x), hp = tp.h_eps_prime.survival(x);
        double s1 = rel(tp.p_exceed_eps * he, hv);
        double s2 = rel(hv, he);
        double s3 = rel(hp, hv);
        double s4 = rel(hv, hp + tp.p_exceed_eps_prime);
        double worst = std::min({s1, s2, s3, s4});
        out.worst_slack = std::min(out.worst_slack, worst);
        if (worst < -slack)
            out.holds = false;
        ++out.points;
    }
    return out;
}

} // namespace htail
