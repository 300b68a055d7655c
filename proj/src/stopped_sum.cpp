#include "htail/error.hpp"
#include "htail/quadrature.hpp"
#include "htail/tail_calculus.hpp"

#include <algorithm>
#include <cmath>

namespace htail {

namespace {

constexpr double ninf = -inf;

class StoppedSum final : public TailModelImpl {
public:
    StoppedSum(std::vector<TailModel> sums, std::vector<double> p) : s_(std::move(sums)), p_(std::move(p)) {}

    double log_survival(double x) const override
    {
        double acc = x < 0.0 && p_[0] > 0.0 ? std::log(p_[0]) : ninf;
        for (std::size_t n = 1; n < p_.size(); ++n)
            if (p_[n] > 0.0)
                acc = log_add(acc, std::log(p_[n]) + s_[n].log_survival(x));
        return std::min(0.0, acc);
    }
    bool has_density() const override
    {
        return std::all_of(s_.begin() + 1, s_.end(), [](const TailModel& m) { return m.density_available(); });
    }
    double log_density(double x) const override
    {
        double acc = ninf;
        for (std::size_t n = 1; n < p_.size(); ++n)
            if (p_[n] > 0.0)
                acc = log_add(acc, std::log(p_[n]) + s_[n].log_density(x));
        return acc;
    }
    std::vector<Atom> atoms() const override
    {
        std::vector<Atom> out;
        if (p_[0] > 0.0)
            out.push_back({0.0, p_[0]});
        return out;
    }
    std::vector<double> kinks() const override
    {
        std::vector<double> out;
        for (std::size_t n = 1; n < p_.size(); ++n) {
            if (!(p_[n] > 0.0))
                continue;
            out.push_back(s_[n].left_edge());
            auto k = s_[n].kinks();
            out.insert(out.end(), k.begin(), k.end());
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }
    double lower() const override
    {
        double l = p_[0] > 0.0 ? 0.0 : inf;
        for (std::size_t n = 1; n < p_.size(); ++n)
            if (p_[n] > 0.0)
                l = std::min(l, s_[n].left_edge());
        return l;
    }
    double upper() const override
    {
        double u = 0.0;
        for (std::size_t n = 1; n < p_.size(); ++n)
            if (p_[n] > 0.0)
                u = std::max(u, s_[n].right_endpoint());
        return u;
    }
    bool cheap() const override
    {
        return std::all_of(s_.begin() + 1, s_.end(), [](const TailModel& m) { return m.cheap(); });
    }
    std::string describe() const override
    {
        std::string s = "stopped_sum(" + s_[1].describe() + ";p=";
        for (std::size_t n = 0; n < p_.size(); ++n)
            s += (n ? "," : "") + format_number(p_[n]);
        return s + ")";
    }

private:
    std::vector<TailModel> s_;  // s_[n] is the law of S_n; s_[0] unused
    std::vector<double> p_;
};

class Clamped final : public TailModelImpl {
public:
    Clamped(TailModel f, double m) : f_(std::move(f)), lm_(std::log(m)) {}
    double log_survival(double x) const override { return std::min(0.0, lm_ + f_.log_survival(x)); }
    bool has_density() const override { return f_.density_available(); }
    double log_density(double x) const override
    {
        return lm_ + f_.log_survival(x) >= 0.0 ? ninf : lm_ + f_.log_density(x);
    }
    double lower() const override { return f_.left_edge(); }
    double upper() const override { return f_.right_endpoint(); }
    bool cheap() const override { return f_.cheap(); }
    std::string describe() const override
    {
        return format_number(std::exp(lm_)) + "*" + f_.describe();
    }

private:
    TailModel f_;
    double lm_;
};

} // namespace

double StoppedSumSpec::mean() const
{
    double m = 0.0;
    for (std::size_t n = 0; n < p.size(); ++n)
        m += static_cast<double>(n) * p[n];
    return m;
}

void StoppedSumSpec::validate() const
{
    if (p.empty())
        throw Error(Errc::invalid_parameter, "counting law is empty");
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw Error(Errc::invalid_parameter, "counting probabilities must be nonnegative");
        sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
        throw Error(Errc::invalid_parameter, "counting probabilities sum to " + format_number(sum));
    if (!(p[0] < 1.0))
        throw Error(Errc::invalid_parameter, "p_0 must be below 1");
    if (bound && (*bound < 1 || *bound > max_power || static_cast<int>(p.size()) - 1 > *bound))
        throw Error(Errc::invalid_parameter, "bound does not cover the counting law");
    if (tilt && !(*tilt > 0.0))
        throw Error(Errc::invalid_parameter, "tilt must be positive");
}

StoppedSumSpec StoppedSumSpec::bounded(std::vector<double> p)
{
    StoppedSumSpec s;
    s.bound = static_cast<int>(p.size()) - 1;
    s.p = std::move(p);
    s.validate();
    return s;
}

StoppedSumSpec StoppedSumSpec::poisson(double lambda, int truncate_at, double tilt)
{
    if (!(lambda > 0.0) || truncate_at < 1)
        throw Error(Errc::invalid_parameter, "poisson law needs lambda > 0 and a positive truncation");
    StoppedSumSpec s;
    double norm = 0.0;
    for (int n = 0; n <= truncate_at; ++n) {
        double v = std::exp(n * std::log(lambda) - lambda - std::lgamma(n + 1.0));
        s.p.push_back(v);
        norm += v;
    }
    for (double& v : s.p)
        v /= norm;
    s.tilt = tilt;
    s.validate();
    return s;
}

TailModel stopped_sum_tail(const std::vector<TailModel>& f_list, const StoppedSumSpec& spec)
{
    spec.validate();
    if (!spec.bound)
        throw Error(Errc::missing_bound, "counting variable has no upper bound");
    int k = spec.max_n();
    if (f_list.empty() || (f_list.size() != 1 && static_cast<int>(f_list.size()) < k))
        throw Error(Errc::invalid_parameter, "need one summand law per index up to the bound");
    bool identical = f_list.size() == 1 ||
                     std::all_of(f_list.begin(), f_list.end(),
                                 [&](const TailModel& m) { return m.identity() == f_list[0].identity(); });
    std::vector<TailModel> sums(static_cast<std::size_t>(k) + 1);
    for (int n = 1; n <= k; ++n) {
        if (identical)
            sums[static_cast<std::size_t>(n)] = power(f_list[0], n);
        else if (n == 1)
            sums[1] = f_list[0];
        else
            sums[static_cast<std::size_t>(n)] =
                convolve(f_list[static_cast<std::size_t>(n - 1)], tabulate(sums[static_cast<std::size_t>(n - 1)]));
    }
    if (k == 1 || (spec.p[0] == 0.0 && spec.p[1] == 1.0 && k >= 1 &&
                   std::all_of(spec.p.begin() + 2, spec.p.end(), [](double v) { return v == 0.0; })))
        return sums[1];
    return TailModel(std::make_shared<StoppedSum>(std::move(sums), spec.p));
}

StoppedSumApprox stopped_sum_asymptotic(const TailModel& f, const StoppedSumSpec& spec)
{
    spec.validate();
    if (!spec.tilt && !spec.bound)
        throw Error(Errc::precondition_not_declared, "E[(1+d)^N] < inf has not been declared");
    double m = spec.mean();
    StoppedSumApprox out{m == 1.0 ? f : TailModel(std::make_shared<Clamped>(f, m)), f.left_edge(), false};
    if (m > 1.0) {
        // first point where m F̄ drops below one
        double lo = f.left_edge(), hi = std::max(1.0, lo + 1.0);
        double lm = std::log(m);
        while (lm + f.log_survival(hi) > 0.0)
            hi = lo + 2.0 * (hi - lo);
        for (int i = 0; i < 200; ++i) {
            double mid = 0.5 * (lo + hi);
            (lm + f.log_survival(mid) > 0.0 ? lo : hi) = mid;
        }
        out.clamp_until = hi;
        out.small_x_clamped = true;
    }
    return out;
}

MonteCarloEstimate stopped_sum_mc(const TailModel& f, const StoppedSumSpec& spec, double x, std::size_t samples,
                                  std::uint64_t seed)
{
    spec.validate();
    if (!f.can_sample())
        throw Error(Errc::no_sampler, f.describe() + " has no sampler");
    if (samples == 0)
        throw Error(Errc::invalid_parameter, "need at least one sample");
    Rng rng = Rng(seed).split("stopped-sum");
    std::vector<double> cdf(spec.p.size());
    double acc = 0.0;
    for (std::size_t n = 0; n < spec.p.size(); ++n)
        cdf[n] = acc += spec.p[n];
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        double u = rng.uniform();
        auto n = static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u * acc) - cdf.begin());
        n = std::min(n, spec.p.size() - 1);
        double z = 0.0;
        if (n > 0) {
            // P[S_n > x] = n E[F̄(max(M_{n-1}, x - S_{n-1}))]
            double s = 0.0, mx = -inf;
            for (std::size_t j = 1; j < n; ++j) {
                double v = f.sample(rng);
                s += v;
                mx = std::max(mx, v);
            }
            z = static_cast<double>(n) * f.survival(std::max(mx, x - s));
        } else if (x < 0.0) {
            z = 1.0;
        }
        sum += z;
        sum2 += z * z;
    }
    double nn = static_cast<double>(samples);
    double mean = sum / nn;
    double var = std::max(0.0, sum2 / nn - mean * mean);
    return {mean, std::sqrt(var / nn), samples, seed};
}

ConvolutionBound certify_convolution_bound(const TailModel& f, int n, const GridSpec& grid)
{
    if (n < 2)
        throw Error(Errc::invalid_parameter, "n must be at least 2");
    grid.validate();
    TailModel s = power(f, n);
    double worst = 0.0;
    bool all = true;
    for (double x : grid.points()) {
        double l1 = f.log_survival(x);
        if (!std::isfinite(l1)) {
            all = false;
            break;
        }
        worst = std::max(worst, (s.log_survival(x) - l1) / (n - 1));
    }
    double c = std::max(1.0, std::exp(worst));
    return {c, n, all && std::isfinite(c)};
}

} // namespace htail
