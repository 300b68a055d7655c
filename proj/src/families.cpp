#include "htail/error.hpp"
#include "htail/quadrature.hpp"
#include "htail/tail_model.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace htail {

namespace {

constexpr double ln_sqrt_2pi = 0.91893853320467274178;

void require_positive(double v, const char* name)
{
    if (!(v > 0.0) || !std::isfinite(v))
        throw Error(Errc::invalid_parameter, std::string(name) + " must be positive and finite");
}

class Pareto final : public TailModelImpl {
public:
    Pareto(double a, double s) : a_(a), s_(s) {}
    double log_survival(double x) const override { return x <= s_ ? 0.0 : -a_ * std::log(x / s_); }
    bool has_density() const override { return true; }
    double log_density(double x) const override
    {
        if (x < s_)
            return -inf;
        return std::log(a_ / s_) - (a_ + 1.0) * std::log(x / s_);
    }
    double lower() const override { return s_; }
    bool can_sample() const override { return true; }
    double sample(Rng& rng) const override { return inverse_survival(rng.uniform()); }
    double inverse_survival(double u) const override { return s_ * std::pow(u, -1.0 / a_); }
    std::string describe() const override
    {
        return "pareto(alpha=" + format_number(a_) + ",scale=" + format_number(s_) + ")";
    }

private:
    double a_, s_;
};

class Exponential final : public TailModelImpl {
public:
    explicit Exponential(double l) : l_(l) {}
    double log_survival(double x) const override { return x <= 0.0 ? 0.0 : -l_ * x; }
    bool has_density() const override { return true; }
    double log_density(double x) const override { return x < 0.0 ? -inf : std::log(l_) - l_ * x; }
    double lower() const override { return 0.0; }
    bool can_sample() const override { return true; }
    double sample(Rng& rng) const override { return inverse_survival(rng.uniform()); }
    double inverse_survival(double u) const override { return -std::log(u) / l_; }
    std::string describe() const override { return "exponential(lambda=" + format_number(l_) + ")"; }

private:
    double l_;
};

class Weibull final : public TailModelImpl {
public:
    Weibull(double c, double r) : c_(c), r_(r) {}
    double log_survival(double x) const override { return x <= 0.0 ? 0.0 : -std::pow(r_ * x, c_); }
    bool has_density() const override { return true; }
    double log_density(double x) const override
    {
        if (x < 0.0)
            return -inf;
        if (x == 0.0)
            return c_ < 1.0 ? inf : (c_ == 1.0 ? std::log(r_) : -inf);
        double z = r_ * x;
        return std::log(c_ * r_) + (c_ - 1.0) * std::log(z) - std::pow(z, c_);
    }
    double lower() const override { return 0.0; }
    bool can_sample() const override { return true; }
    double sample(Rng& rng) const override { return inverse_survival(rng.uniform()); }
    double inverse_survival(double u) const override { return std::pow(-std::log(u), 1.0 / c_) / r_; }
    std::string describe() const override
    {
        return "weibull(c=" + format_number(c_) + ",rate=" + format_number(r_) + ")";
    }

private:
    double c_, r_;
};

// log of the standard normal upper tail
double log_normal_upper(double z)
{
    if (z < 30.0)
        return std::log(0.5 * std::erfc(z / std::sqrt(2.0)));
    double z2 = z * z;
    double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
    return -0.5 * z2 - std::log(z) - ln_sqrt_2pi + std::log(series);
}

class Lognormal final : public TailModelImpl {
public:
    Lognormal(double m, double s) : m_(m), s_(s) {}
    double log_survival(double x) const override
    {
        if (x <= 0.0)
            return 0.0;
        return log_normal_upper((std::log(x) - m_) / s_);
    }
    bool has_density() const override { return true; }
    double log_density(double x) const override
    {
        if (x <= 0.0)
            return -inf;
        double lx = std::log(x);
        double z = (lx - m_) / s_;
        return -0.5 * z * z - ln_sqrt_2pi - std::log(s_) - lx;
    }
    double lower() const override { return 0.0; }
    bool can_sample() const override { return true; }
    double sample(Rng& rng) const override { return inverse_survival(rng.uniform()); }
    double inverse_survival(double u) const override
    {
        double z = std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
        return std::exp(m_ + s_ * z);
    }
    std::string describe() const override
    {
        return "lognormal(mu=" + format_number(m_) + ",sigma=" + format_number(s_) + ")";
    }

private:
    double m_, s_;
};

class TruncatedUniform final : public TailModelImpl {
public:
    explicit TruncatedUniform(double b) : b_(b) {}
    double log_survival(double x) const override
    {
        if (x <= 0.0)
            return 0.0;
        if (x >= b_)
            return -inf;
        return std::log1p(-x / b_);
    }
    bool has_density() const override { return true; }
    double log_density(double x) const override { return (x < 0.0 || x > b_) ? -inf : -std::log(b_); }
    double lower() const override { return 0.0; }
    double upper() const override { return b_; }
    bool can_sample() const override { return true; }
    double sample(Rng& rng) const override { return inverse_survival(rng.uniform()); }
    double inverse_survival(double u) const override { return b_ * (1.0 - u); }
    std::string describe() const override { return "truncated_uniform(b=" + format_number(b_) + ")"; }

private:
    double b_;
};

class SlowlyVarying final : public TailModelImpl {
public:
    double log_survival(double x) const override
    {
        if (x <= 0.0)
            return 0.0;
        return -std::log(std::log(std::exp(1.0) + x));
    }
    bool has_density() const override { return true; }
    double log_density(double x) const override
    {
        if (x < 0.0)
            return -inf;
        double e = std::exp(1.0) + x;
        return -std::log(e) - 2.0 * std::log(std::log(e));
    }
    double lower() const override { return 0.0; }
    bool can_sample() const override { return true; }
    double sample(Rng& rng) const override { return inverse_survival(rng.uniform()); }
    double inverse_survival(double u) const override
    {
        return 1.0 / u > 700.0 ? inf : std::exp(1.0 / u) - std::exp(1.0);
    }
    std::string describe() const override { return "slowly_varying"; }
};

class Lattice final : public TailModelImpl {
public:
    explicit Lattice(std::vector<Atom> a) : a_(std::move(a))
    {
        std::sort(a_.begin(), a_.end(), [](const Atom& l, const Atom& r) { return l.at < r.at; });
        // suffix masses so each evaluation is a binary search
        suffix_.assign(a_.size() + 1, 0.0);
        for (std::size_t i = a_.size(); i-- > 0;)
            suffix_[i] = suffix_[i + 1] + a_[i].mass;
    }
    double log_survival(double x) const override
    {
        auto it = std::upper_bound(a_.begin(), a_.end(), x, [](double v, const Atom& a) { return v < a.at; });
        double m = suffix_[static_cast<std::size_t>(it - a_.begin())];
        return m > 0.0 ? std::log(std::min(1.0, m)) : -inf;
    }
    std::vector<Atom> atoms() const override { return a_; }
    double lower() const override { return a_.front().at; }
    double upper() const override { return a_.back().at; }
    bool can_sample() const override { return true; }
    double sample(Rng& rng) const override
    {
        double u = rng.uniform(), acc = 0.0;
        for (const Atom& a : a_) {
            acc += a.mass;
            if (u <= acc)
                return a.at;
        }
        return a_.back().at;
    }
    std::string describe() const override
    {
        std::string s = "lattice(";
        for (std::size_t i = 0; i < a_.size(); ++i)
            s += (i ? ";" : "") + format_number(a_[i].at) + "@" + format_number(a_[i].mass);
        return s + ")";
    }

private:
    std::vector<Atom> a_;
    std::vector<double> suffix_;
};

class Mixture final : public TailModelImpl {
public:
    Mixture(std::vector<TailModel> p, std::vector<double> w) : p_(std::move(p)), w_(std::move(w)) {}
    double log_survival(double x) const override
    {
        double acc = -inf;
        for (std::size_t i = 0; i < p_.size(); ++i)
            acc = log_add(acc, std::log(w_[i]) + p_[i].log_survival(x));
        return std::min(0.0, acc);
    }
    bool has_density() const override
    {
        return std::any_of(p_.begin(), p_.end(), [](const TailModel& m) { return m.density_available(); });
    }
    double log_density(double x) const override
    {
        double acc = -inf;
        for (std::size_t i = 0; i < p_.size(); ++i)
            if (p_[i].density_available())
                acc = log_add(acc, std::log(w_[i]) + p_[i].log_density(x));
        return acc;
    }
    std::vector<Atom> atoms() const override
    {
        std::vector<Atom> out;
        for (std::size_t i = 0; i < p_.size(); ++i)
            for (Atom a : p_[i].atoms())
                out.push_back({a.at, a.mass * w_[i]});
        return out;
    }
    std::vector<double> kinks() const override
    {
        std::vector<double> out;
        for (const TailModel& m : p_) {
            auto k = m.kinks();
            out.insert(out.end(), k.begin(), k.end());
            if (std::isfinite(m.left_edge()))
                out.push_back(m.left_edge());
            if (std::isfinite(m.right_endpoint()))
                out.push_back(m.right_endpoint());
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }
    double lower() const override
    {
        double l = inf;
        for (const TailModel& m : p_)
            l = std::min(l, m.left_edge());
        return l;
    }
    double upper() const override
    {
        double u = -inf;
        for (const TailModel& m : p_)
            u = std::max(u, m.right_endpoint());
        return u;
    }
    bool cheap() const override
    {
        return std::all_of(p_.begin(), p_.end(), [](const TailModel& m) { return m.cheap(); });
    }
    bool can_sample() const override
    {
        return std::all_of(p_.begin(), p_.end(), [](const TailModel& m) { return m.can_sample(); });
    }
    double sample(Rng& rng) const override
    {
        double u = rng.uniform(), acc = 0.0;
        for (std::size_t i = 0; i < p_.size(); ++i) {
            acc += w_[i];
            if (u <= acc)
                return p_[i].sample(rng);
        }
        return p_.back().sample(rng);
    }
    std::string describe() const override
    {
        std::string s = "mixture(";
        for (std::size_t i = 0; i < p_.size(); ++i)
            s += (i ? ";" : "") + format_number(w_[i]) + "*" + p_[i].describe();
        return s + ")";
    }

private:
    std::vector<TailModel> p_;
    std::vector<double> w_;
};

void check_weights(const std::vector<double>& w, bool allow_one)
{
    if (w.empty())
        throw Error(Errc::invalid_parameter, "weights are empty");
    double sum = 0.0;
    for (double v : w) {
        if (!(v > 0.0) || (allow_one ? v > 1.0 : v >= 1.0))
            throw Error(Errc::invalid_parameter, "weight " + format_number(v) + " outside (0,1)");
        sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
        throw Error(Errc::invalid_parameter, "weights sum to " + format_number(sum));
}

double param(const FamilySpec& s, const std::string& key, double fallback, bool required)
{
    auto it = s.params.find(key);
    if (it == s.params.end()) {
        if (required)
            throw Error(Errc::invalid_parameter, "missing parameter " + key);
        return fallback;
    }
    return it->second;
}

void check_keys(const FamilySpec& s, std::initializer_list<const char*> allowed)
{
    for (const auto& [k, v] : s.params) {
        bool ok = false;
        for (const char* a : allowed)
            ok = ok || k == a;
        if (!ok)
            throw Error(Errc::invalid_parameter, "unknown parameter " + k);
    }
}

} // namespace

TailModel pareto(double alpha, double scale)
{
    require_positive(alpha, "alpha");
    require_positive(scale, "scale");
    return TailModel(std::make_shared<Pareto>(alpha, scale));
}

TailModel exponential(double lambda)
{
    require_positive(lambda, "lambda");
    return TailModel(std::make_shared<Exponential>(lambda));
}

TailModel weibull(double shape, double rate)
{
    require_positive(shape, "shape");
    require_positive(rate, "rate");
    return TailModel(std::make_shared<Weibull>(shape, rate));
}

TailModel lognormal(double mu, double sigma)
{
    if (!std::isfinite(mu))
        throw Error(Errc::invalid_parameter, "mu must be finite");
    require_positive(sigma, "sigma");
    return TailModel(std::make_shared<Lognormal>(mu, sigma));
}

TailModel truncated_uniform(double b)
{
    require_positive(b, "b");
    return TailModel(std::make_shared<TruncatedUniform>(b));
}

TailModel lattice(std::vector<double> values, std::vector<double> weights)
{
    if (values.size() != weights.size() || values.empty())
        throw Error(Errc::invalid_parameter, "lattice values and weights differ in length");
    check_weights(weights, true);
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]))
            throw Error(Errc::invalid_parameter, "lattice value must be finite");
        atoms.push_back({values[i], weights[i]});
    }
    return TailModel(std::make_shared<Lattice>(std::move(atoms)));
}

TailModel point_mass(double at)
{
    return lattice({at}, {1.0});
}

TailModel slowly_varying()
{
    return TailModel(std::make_shared<SlowlyVarying>());
}

TailModel finite_mixture(std::vector<TailModel> parts, std::vector<double> weights)
{
    if (parts.size() != weights.size() || parts.size() < 2)
        throw Error(Errc::invalid_parameter, "mixture needs at least two weighted parts");
    check_weights(weights, false);
    return TailModel(std::make_shared<Mixture>(std::move(parts), std::move(weights)));
}

TailModel make_family(const FamilySpec& s)
{
    switch (s.kind) {
    case FamilyKind::pareto:
        check_keys(s, {"alpha", "scale"});
        return pareto(param(s, "alpha", 0, true), param(s, "scale", 1.0, false));
    case FamilyKind::exponential:
        check_keys(s, {"lambda"});
        return exponential(param(s, "lambda", 1.0, false));
    case FamilyKind::weibull:
        check_keys(s, {"c", "rate"});
        return weibull(param(s, "c", 0, true), param(s, "rate", 1.0, false));
    case FamilyKind::lognormal:
        check_keys(s, {"mu", "sigma"});
        return lognormal(param(s, "mu", 0.0, false), param(s, "sigma", 1.0, false));
    case FamilyKind::truncated_uniform:
        check_keys(s, {"b"});
        return truncated_uniform(param(s, "b", 1.0, false));
    case FamilyKind::slowly_varying:
        check_keys(s, {});
        return slowly_varying();
    case FamilyKind::lattice:
        check_keys(s, {});
        return lattice(s.values, s.weights);
    case FamilyKind::mixture: {
        check_keys(s, {});
        std::vector<TailModel> parts;
        for (const FamilySpec& c : s.components)
            parts.push_back(make_family(c));
        return finite_mixture(std::move(parts), s.weights);
    }
    }
    throw Error(Errc::invalid_parameter, "unknown family kind");
}

} // namespace htail
