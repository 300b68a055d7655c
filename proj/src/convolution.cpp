#include "htail/error.hpp"
#include "htail/quadrature.hpp"
#include "htail/tail_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <shared_mutex>

namespace htail {

namespace {

constexpr double ninf = -inf;

std::vector<double> edge_points(const TailModel& m)
{
    std::vector<double> out = m.kinks();
    if (std::isfinite(m.left_edge()))
        out.push_back(m.left_edge());
    if (std::isfinite(m.right_endpoint()))
        out.push_back(m.right_endpoint());
    for (const Atom& a : m.atoms())
        out.push_back(a.at);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<double> mirrored(const std::vector<double>& pts, double x)
{
    std::vector<double> out;
    out.reserve(pts.size());
    for (double p : pts)
        out.push_back(x - p);
    return out;
}

// ∫ exp(g) over [a, b] with refinement toward both ends and extra breaks
double log_integral(const std::function<double(double)>& g, double a, double b, const std::vector<double>& extra)
{
    if (!(b > a))
        return ninf;
    std::vector<double> br = edge_refined(a, b);
    add_breaks(br, extra);
    return integrate_log(g, br).log_value;
}

// X + Y where f contributes its density and atoms and g its survival function.
class Convolution final : public TailModelImpl {
public:
    Convolution(TailModel f, TailModel g)
        : f_(std::move(f)), g_(std::move(g)), lf_(f_.left_edge()), lg_(g_.left_edge()), fa_(f_.atoms()),
          ga_(g_.atoms()), fe_(edge_points(f_)), ge_(edge_points(g_))
    {
        if (!std::isfinite(lf_) || !std::isfinite(lg_))
            throw Error(Errc::unsupported_support, "convolution needs finite lower edges");
    }

    double log_survival(double x) const override
    {
        double w = x - lf_ - lg_;
        if (w < 0.0)
            return 0.0;
        double acc = f_.log_survival(x - lg_);
        for (const Atom& a : fa_)
            if (a.at <= x - lg_)
                acc = log_add(acc, std::log(a.mass) + g_.log_survival(x - a.at));
        if (f_.density_available() && w > 0.0) {
            double h = 0.5 * w;
            auto left = [&](double y) { return f_.log_density(y) + g_.log_survival(x - y); };
            auto right = [&](double u) { return f_.log_density(x - u) + g_.log_survival(u); };
            acc = log_add(acc, log_integral(left, lf_, lf_ + h, mirrored(ge_, x)));
            acc = log_add(acc, log_integral(right, lg_, lg_ + h, merged_with(ge_, mirrored(fe_, x))));
        }
        return std::min(0.0, acc);
    }

    bool has_density() const override { return f_.density_available() || g_.density_available(); }

    double log_density(double x) const override
    {
        double w = x - lf_ - lg_;
        if (w < 0.0)
            return ninf;
        double acc = ninf;
        if (g_.density_available())
            for (const Atom& a : fa_)
                acc = log_add(acc, std::log(a.mass) + g_.log_density(x - a.at));
        if (f_.density_available())
            for (const Atom& b : ga_)
                acc = log_add(acc, std::log(b.mass) + f_.log_density(x - b.at));
        if (f_.density_available() && g_.density_available() && w > 0.0) {
            double h = 0.5 * w;
            auto left = [&](double y) { return f_.log_density(y) + g_.log_density(x - y); };
            auto right = [&](double u) { return f_.log_density(x - u) + g_.log_density(u); };
            acc = log_add(acc, log_integral(left, lf_, lf_ + h, mirrored(ge_, x)));
            acc = log_add(acc, log_integral(right, lg_, lg_ + h, merged_with(ge_, mirrored(fe_, x))));
        }
        return acc;
    }

    std::vector<Atom> atoms() const override
    {
        std::map<double, double> m;
        for (const Atom& a : fa_)
            for (const Atom& b : ga_)
                m[a.at + b.at] += a.mass * b.mass;
        std::vector<Atom> out;
        for (auto [at, mass] : m)
            out.push_back({at, mass});
        return out;
    }

    std::vector<double> kinks() const override
    {
        std::vector<double> out;
        if (fe_.size() * ge_.size() > 4096)
            return out;
        for (double a : fe_)
            for (double b : ge_)
                out.push_back(a + b);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    double lower() const override { return lf_ + lg_; }
    double upper() const override { return f_.right_endpoint() + g_.right_endpoint(); }
    bool cheap() const override { return false; }
    bool can_sample() const override { return f_.can_sample() && g_.can_sample(); }
    double sample(Rng& rng) const override { return f_.sample(rng) + g_.sample(rng); }
    std::string describe() const override { return "convolve(" + f_.describe() + "," + g_.describe() + ")"; }

private:
    static std::vector<double> merged_with(std::vector<double> a, const std::vector<double>& b)
    {
        a.insert(a.end(), b.begin(), b.end());
        return a;
    }

    TailModel f_, g_;
    double lf_, lg_;
    std::vector<Atom> fa_, ga_;
    std::vector<double> fe_, ge_;
};

// Cubic Hermite spline of log F̄ in x with knots dense near the lower edge
// and 64 per decade beyond; the source is used outside the table.
class Tabulated final : public TailModelImpl {
public:
    Tabulated(TailModel src, double hi) : src_(std::move(src)), l_(src_.left_edge())
    {
        for (int i = 0; i <= 32; ++i)
            t_.push_back(i / 32.0);
        for (int k = 1;; ++k) {
            double t = std::pow(10.0, k / 64.0);
            if (t > hi)
                break;
            t_.push_back(t);
        }
        ls_.resize(t_.size());
        d_.resize(t_.size());
        for (std::size_t i = 0; i < t_.size(); ++i) {
            double x = l_ + t_[i];
            ls_[i] = src_.log_survival(x);
            d_[i] = src_.density_available() ? -std::exp(src_.log_density(x) - ls_[i]) : NAN;
        }
        // infinite or missing slopes fall back to the neighbouring secant
        for (std::size_t i = 0; i < t_.size(); ++i) {
            if (std::isfinite(d_[i]))
                continue;
            std::size_t j = i + 1 < t_.size() ? i + 1 : i - 1;
            double s = (ls_[j] - ls_[i]) / (t_[j] - t_[i]);
            d_[i] = std::isfinite(s) ? s : 0.0;
        }
    }

    double log_survival(double x) const override
    {
        double t = x - l_;
        if (t <= 0.0)
            return src_.log_survival(x);
        std::size_t i = segment(t);
        if (i == npos)
            return src_.log_survival(x);
        double h = t_[i + 1] - t_[i], s = (t - t_[i]) / h;
        double s2 = s * s, s3 = s2 * s;
        double v = (2 * s3 - 3 * s2 + 1) * ls_[i] + (s3 - 2 * s2 + s) * h * d_[i] + (-2 * s3 + 3 * s2) * ls_[i + 1] +
                   (s3 - s2) * h * d_[i + 1];
        return std::min(0.0, v);
    }

    bool has_density() const override { return src_.density_available(); }

    double log_density(double x) const override
    {
        double t = x - l_;
        std::size_t i = t > 0.0 ? segment(t) : npos;
        if (i == npos)
            return src_.log_density(x);
        double h = t_[i + 1] - t_[i], s = (t - t_[i]) / h;
        double s2 = s * s;
        double dp = ((6 * s2 - 6 * s) * ls_[i] + (3 * s2 - 4 * s + 1) * h * d_[i] + (-6 * s2 + 6 * s) * ls_[i + 1] +
                     (3 * s2 - 2 * s) * h * d_[i + 1]) /
                    h;
        // a flat stretch of the spline means a density too small to matter;
        // going back to the source here would reintroduce the quadrature
        if (!(dp < 0.0))
            return ninf;
        return std::log(-dp) + log_survival(x);
    }

    std::vector<Atom> atoms() const override { return src_.atoms(); }
    std::vector<double> kinks() const override { return src_.kinks(); }
    double lower() const override { return l_; }
    double upper() const override { return src_.right_endpoint(); }
    bool cheap() const override { return true; }
    bool can_sample() const override { return src_.can_sample(); }
    double sample(Rng& rng) const override { return src_.sample(rng); }
    std::string describe() const override { return src_.describe(); }

private:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    std::size_t segment(double t) const
    {
        if (t >= t_.back())
            return npos;
        auto it = std::upper_bound(t_.begin(), t_.end(), t);
        auto i = static_cast<std::size_t>(it - t_.begin()) - 1;
        if (!std::isfinite(ls_[i]) || !std::isfinite(ls_[i + 1]))
            return npos;
        return i;
    }

    TailModel src_;
    double l_;
    std::vector<double> t_, ls_, d_;
};

template <class Key>
class Memo {
public:
    template <class Make>
    TailModel get(const Key& k, Make make)
    {
        {
            std::shared_lock lock(mu_);
            auto it = map_.find(k);
            if (it != map_.end())
                return it->second;
        }
        TailModel made = make();
        std::unique_lock lock(mu_);
        return map_.try_emplace(k, made).first->second;
    }

private:
    std::shared_mutex mu_;
    std::map<Key, TailModel> map_;
};

Memo<std::pair<const void*, double>>& tab_memo()
{
    static Memo<std::pair<const void*, double>> m;
    return m;
}

Memo<std::pair<const void*, int>>& power_memo()
{
    static Memo<std::pair<const void*, int>> m;
    return m;
}

} // namespace

TailModel convolve(const TailModel& f, const TailModel& g)
{
    if (!f || !g)
        throw Error(Errc::invalid_parameter, "empty model");
    for (const TailModel* m : {&f, &g})
        if (m->support() != Support::nonnegative)
            throw Error(Errc::unsupported_support, m->describe() + " is not supported on the half-line");
    // the density side must have a density or atoms
    if (!f.density_available() && f.atoms().empty())
        return TailModel(std::make_shared<Convolution>(g, f));
    return TailModel(std::make_shared<Convolution>(f, g));
}

TailModel convolve_whole_line(const TailModel& f, const TailModel& g)
{
    if (!f || !g)
        throw Error(Errc::invalid_parameter, "empty model");
    if (!std::isfinite(f.left_edge()) || !std::isfinite(g.left_edge()))
        throw Error(Errc::unsupported_support, "lower edges must be finite");
    if (!g.density_available() && g.atoms().empty())
        throw Error(Errc::unsupported_support, g.describe() + " has neither density nor atoms");
    return TailModel(std::make_shared<Convolution>(g, f));
}

TailModel tabulate(const TailModel& f, double hi)
{
    if (!f)
        throw Error(Errc::invalid_parameter, "empty model");
    if (!std::isfinite(f.left_edge()))
        return f;
    // an atom at the lower edge leaves F̄ smooth to its right
    for (const Atom& a : f.atoms())
        if (a.at != f.left_edge())
            return f;
    return tab_memo().get({f.identity(), hi}, [&] { return TailModel(std::make_shared<Tabulated>(f, hi)); });
}

TailModel power(const TailModel& f, int n)
{
    if (!f)
        throw Error(Errc::invalid_parameter, "empty model");
    if (n < 1 || n > max_power)
        throw Error(Errc::invalid_parameter, "convolution power must lie in [1, " + std::to_string(max_power) + "]");
    if (f.support() != Support::nonnegative)
        throw Error(Errc::unsupported_support, f.describe() + " is not supported on the half-line");
    if (n == 1)
        return f;
    return power_memo().get({f.identity(), n}, [&] {
        TailModel base = f.cheap() ? f : tabulate(f);
        if (n == 2)
            return convolve(base, base);
        return convolve(base, tabulate(power(f, n - 1)));
    });
}

std::vector<double> self_convolution_ratio(const TailModel& f, int n, const GridSpec& grid)
{
    if (n < 2)
        throw Error(Errc::invalid_parameter, "n must be at least 2");
    grid.validate();
    TailModel h = power(f, n);
    std::vector<double> out;
    for (int k = 0; k <= grid.count; ++k) {
        double x = grid.at(k);
        double lf = f.log_survival(x), lh = h.log_survival(x);
        if (lf == ninf)
            out.push_back(lh == ninf ? NAN : inf);
        else
            out.push_back(std::exp(lh - lf));
    }
    return out;
}

namespace {

// ∫_{(a,b]} F̄(z - y) G(dy), using that F̄(z - y) = 1 once y >= z - lF
double stieltjes_piece(const TailModel& f, const TailModel& g, double z, double a, double b)
{
    double lf = f.left_edge();
    double cut = z - lf;
    double acc = ninf;
    // mass of G on (max(a, cut), b]
    double m_lo = std::max(a, cut);
    if (b > m_lo) {
        double hi = std::isfinite(b) ? g.log_survival(b) : ninf;
        acc = log_add(acc, log_sub(g.log_survival(m_lo), hi));
    }
    double c_lo = std::max(a, g.left_edge()), c_hi = std::min({b, cut, g.right_endpoint()});
    for (const Atom& at : g.atoms())
        if (at.at > a && at.at <= std::min(b, cut))
            acc = log_add(acc, std::log(at.mass) + f.log_survival(z - at.at));
    if (g.density_available() && c_hi > c_lo) {
        auto fn = [&](double y) { return g.log_density(y) + f.log_survival(z - y); };
        std::vector<double> extra = edge_points(g);
        auto fe = mirrored(edge_points(f), z);
        extra.insert(extra.end(), fe.begin(), fe.end());
        acc = log_add(acc, log_integral(fn, c_lo, c_hi, extra));
    }
    return acc;
}

} // namespace

Decomposition convolution_decomposition(const TailModel& f, const TailModel& g, double v, double x, double x0,
                                        double c, double q)
{
    if (!f || !g)
        throw Error(Errc::invalid_parameter, "empty model");
    if (!(v > 1.0))
        throw Error(Errc::invalid_parameter, "v must exceed 1");
    if (!std::isfinite(f.left_edge()) || !std::isfinite(g.left_edge()))
        throw Error(Errc::unsupported_support, "lower edges must be finite");
    double z = v * x;
    Decomposition d{};
    d.i1 = std::exp(stieltjes_piece(f, g, z, -inf, z - x0));
    d.i2 = std::exp(stieltjes_piece(f, g, z, z - x0, z));
    d.i3 = std::exp(stieltjes_piece(f, g, z, z, inf));
    d.total = d.i1 + d.i2 + d.i3;
    double hx = std::exp(stieltjes_piece(f, g, x, -inf, inf));
    d.bound13 = c * std::pow(v, -q) * hx;
    d.g_tail = g.survival(x);
    d.i1_ratio = d.bound13 > 0.0 ? d.i1 / d.bound13 : inf;
    d.i3_ratio = d.g_tail > 0.0 ? d.i3 / d.g_tail : (d.i3 == 0.0 ? 0.0 : inf);
    return d;
}

} // namespace htail
