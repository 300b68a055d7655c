#include "htail/tail_model.hpp"

#include "htail/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace htail {

double TailModelImpl::log_density(double) const
{
    return -inf;
}

double TailModelImpl::sample(Rng&) const
{
    throw Error(Errc::no_sampler, describe() + " has no sampler");
}

double TailModelImpl::inverse_survival(double s) const
{
    double ls = std::log(s);
    double lo = lower(), hi;
    if (!std::isfinite(lo))
        lo = -1.0;
    if (std::isfinite(upper())) {
        hi = upper();
    } else {
        hi = std::max(1.0, lo + 1.0);
        while (log_survival(hi) > ls)
            hi = lo + 2.0 * (hi - lo);
    }
    while (log_survival(lo) <= ls && std::isfinite(lo))
        lo = lo - 2.0 * std::max(1.0, std::fabs(lo));
    for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, std::fabs(hi)); ++i) {
        double mid = 0.5 * (lo + hi);
        (log_survival(mid) > ls ? lo : hi) = mid;
    }
    return hi;
}

TailModel::TailModel(std::shared_ptr<const TailModelImpl> impl) : impl_(std::move(impl)) {}

double TailModel::survival(double x) const
{
    double v = std::exp(impl_->log_survival(x));
    if (v < underflow_floor)
        return 0.0;
    return std::min(1.0, v);
}

bool TailModel::underflows(double x) const
{
    double l = impl_->log_survival(x);
    return std::isfinite(l) && std::exp(l) < underflow_floor;
}

double TailModel::density(double x) const
{
    return std::exp(impl_->log_density(x));
}

Support TailModel::support() const
{
    return impl_->lower() >= 0.0 ? Support::nonnegative : Support::whole_line;
}

std::vector<double> TailModel::discontinuities() const
{
    std::vector<double> out;
    for (const Atom& a : impl_->atoms())
        if (a.at > 0.0 && a.mass > 0.0)
            out.push_back(a.at);
    std::sort(out.begin(), out.end());
    return out;
}

double TailModel::sample(Rng& rng) const
{
    return impl_->sample(rng);
}

namespace {

class Empirical final : public TailModelImpl {
public:
    explicit Empirical(std::vector<double> s) : s_(std::move(s)) { std::sort(s_.begin(), s_.end()); }

    double log_survival(double x) const override
    {
        auto it = std::upper_bound(s_.begin(), s_.end(), x);
        auto above = static_cast<double>(s_.end() - it);
        if (above == 0.0)
            return -inf;
        return std::log(above / static_cast<double>(s_.size()));
    }
    std::vector<Atom> atoms() const override
    {
        std::vector<Atom> out;
        double w = 1.0 / static_cast<double>(s_.size());
        for (double v : s_) {
            if (!out.empty() && out.back().at == v)
                out.back().mass += w;
            else
                out.push_back({v, w});
        }
        return out;
    }
    double lower() const override { return s_.front(); }
    double upper() const override { return s_.back(); }
    bool can_sample() const override { return true; }
    double sample(Rng& rng) const override
    {
        auto i = static_cast<std::size_t>(rng.uniform() * static_cast<double>(s_.size()));
        return s_[std::min(i, s_.size() - 1)];
    }
    std::string describe() const override { return "empirical(n=" + std::to_string(s_.size()) + ")"; }

private:
    std::vector<double> s_;
};

} // namespace

TailModel empirical_tail(std::vector<double> samples)
{
    if (samples.empty())
        throw Error(Errc::empty_samples, "no samples");
    for (double v : samples)
        if (!std::isfinite(v))
            throw Error(Errc::invalid_parameter, "non-finite sample");
    return TailModel(std::make_shared<Empirical>(std::move(samples)));
}

std::string format_number(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    if (std::isnan(v))
        return "nan";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double discontinuity_gap(const TailModel& g, double d, double x)
{
    if (!(d > 0.0))
        throw Error(Errc::invalid_parameter, "d must be positive");
    return std::max(0.0, g.survival(x / d) - g.survival((x + 1.0) / d));
}

void GridSpec::validate() const
{
    if (!(x0 > 0.0) || !std::isfinite(x0))
        throw Error(Errc::invalid_parameter, "grid x0 must be positive");
    if (!(ratio > 1.0) || !std::isfinite(ratio))
        throw Error(Errc::invalid_parameter, "grid ratio must exceed 1");
    if (count < 16)
        throw Error(Errc::invalid_parameter, "grid count must be at least 16");
}

double GridSpec::at(int k) const
{
    return x0 * std::pow(ratio, k);
}

std::vector<double> GridSpec::points() const
{
    std::vector<double> out(static_cast<std::size_t>(count) + 1);
    for (int k = 0; k <= count; ++k)
        out[static_cast<std::size_t>(k)] = at(k);
    return out;
}

} // namespace htail
