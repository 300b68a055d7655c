#include "htail/dependence.hpp"

#include "htail/error.hpp"
#include "htail/indices.hpp"
#include "htail/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace htail {

Coupling Coupling::fgm(double theta)
{
    if (!(theta >= -1.0 && theta <= 1.0))
        throw Error(Errc::invalid_parameter, "FGM theta must lie in [-1, 1]");
    return {CouplingKind::fgm, theta};
}

std::string Coupling::describe() const
{
    switch (kind) {
    case CouplingKind::independent: return "independent";
    case CouplingKind::fgm: return "fgm(" + format_number(theta) + ")";
    case CouplingKind::comonotone: return "comonotone";
    }
    return "unknown";
}

JointTailModel::JointTailModel(TailModel first, TailModel second, Coupling coupling)
    : f_(std::move(first)), g_(std::move(second)), c_(coupling)
{
    if (!f_ || !g_)
        throw Error(Errc::invalid_parameter, "empty marginal");
    if (c_.kind == CouplingKind::fgm && !(c_.theta >= -1.0 && c_.theta <= 1.0))
        throw Error(Errc::invalid_parameter, "FGM theta must lie in [-1, 1]");
}

double JointTailModel::log_joint(double x, double y) const
{
    double lf = f_.log_survival(x), lg = g_.log_survival(y);
    switch (c_.kind) {
    case CouplingKind::independent: return lf + lg;
    case CouplingKind::comonotone: return std::min(lf, lg);
    case CouplingKind::fgm: {
        double cf = -std::expm1(lf), cg = -std::expm1(lg);
        return lf + lg + std::log1p(c_.theta * cf * cg);
    }
    }
    return lf + lg;
}

double JointTailModel::joint(double x, double y) const
{
    double v = std::exp(log_joint(x, y));
    return v < underflow_floor ? 0.0 : std::min(1.0, v);
}

std::optional<double> JointTailModel::sai_constant() const
{
    switch (c_.kind) {
    case CouplingKind::independent: return 1.0;
    case CouplingKind::fgm: return 1.0 + c_.theta;
    case CouplingKind::comonotone: return std::nullopt;
    }
    return std::nullopt;
}

bool JointTailModel::has_sampler() const
{
    return f_.can_sample() && g_.can_sample();
}

std::pair<double, double> JointTailModel::draw(Rng& rng) const
{
    if (!has_sampler())
        throw Error(Errc::no_sampler, describe() + " has no sampler");
    switch (c_.kind) {
    case CouplingKind::independent: return {f_.sample(rng), g_.sample(rng)};
    case CouplingKind::comonotone: {
        // common uniform pushed through both survival functions
        double u = rng.uniform();
        return {f_.inverse_survival(u), g_.inverse_survival(u)};
    }
    case CouplingKind::fgm: {
        // conditional inversion of the FGM copula C(u,v) = uv(1 + θ(1-u)(1-v))
        double u = rng.uniform(), w = rng.uniform();
        double a = c_.theta * (1.0 - 2.0 * u);
        double v = w;
        if (std::fabs(a) > 1e-12) {
            double b = 1.0 + a;
            v = 2.0 * w / (b + std::sqrt(b * b - 4.0 * a * w));
        }
        // survival levels 1-u and 1-v are again an FGM pair with the same θ
        return {f_.inverse_survival(u), g_.inverse_survival(v)};
    }
    }
    return {0.0, 0.0};
}

std::vector<std::pair<double, double>> JointTailModel::sample(std::size_t n, std::uint64_t seed) const
{
    if (!has_sampler())
        throw Error(Errc::no_sampler, describe() + " has no sampler");
    Rng rng = Rng(seed).split("joint");
    std::vector<std::pair<double, double>> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(draw(rng));
    return out;
}

std::string JointTailModel::describe() const
{
    return c_.describe() + "(" + f_.describe() + "," + g_.describe() + ")";
}

SaiEstimate sai_limit(const JointTailModel& joint, const GridSpec& grid)
{
    auto c = joint.sai_constant();
    if (!c)
        throw Error(Errc::no_limit, joint.describe() + ": joint(x,x)/(F̄Ḡ) diverges");
    WindowSeries s = window_series(
        grid, [&](double x) { return joint.log_joint(x, x); },
        [&](double x) { return joint.first().log_survival(x) + joint.second().log_survival(x); });
    SaiEstimate out{s.values.back(), *c, s.rel_slope, *c <= 0.0, s.values};
    if (joint.coupling().kind == CouplingKind::independent)
        out.value = 1.0;
    return out;
}

ConditionalDiag conditional_ratio_diag(const JointTailModel& joint, const std::vector<double>& x_grid,
                                       const std::vector<double>& t_grid, std::size_t samples, std::uint64_t seed,
                                       std::size_t bin_size)
{
    if (!joint.has_sampler())
        throw Error(Errc::no_sampler, joint.describe() + " has no sampler");
    if (!joint.first().density_available() || !joint.second().density_available())
        throw Error(Errc::invalid_parameter, "conditional diagnostics need marginal densities");
    auto draws = joint.sample(samples, seed);
    std::sort(draws.begin(), draws.end());
    ConditionalDiag out{{}, 0.0, false, seed, samples};
    if (draws.size() < bin_size)
        throw Error(Errc::insufficient_samples, "fewer samples than one conditioning bin");
    for (double t : t_grid) {
        // the bin_size draws whose X is closest to t
        auto it = std::lower_bound(draws.begin(), draws.end(), std::make_pair(t, -inf));
        std::size_t centre = static_cast<std::size_t>(it - draws.begin());
        std::size_t lo = centre > bin_size / 2 ? centre - bin_size / 2 : 0;
        lo = std::min(lo, draws.size() - bin_size);
        std::size_t hi = lo + bin_size;
        double width = draws[hi - 1].first - draws[lo].first;
        for (double x : x_grid) {
            if (!(x > t))
                continue;
            double level = x - t;
            std::size_t hits = 0;
            for (std::size_t i = lo; i < hi; ++i)
                if (draws[i].second > level)
                    ++hits;
            double p = joint.second().survival(level);
            if (hits < 100)
                throw Error(Errc::insufficient_samples, "conditional cell (x=" + format_number(x) + ", t=" +
                                                            format_number(t) + ") has " + std::to_string(hits) +
                                                            " hits");
            double r = (static_cast<double>(hits) / static_cast<double>(bin_size)) / p;
            out.cells.push_back({x, t, r, width, hits});
            out.max_ratio = std::max(out.max_ratio, r);
        }
    }
    // unbounded: ratios still growing with x at the largest t instead of settling
    if (!out.cells.empty()) {
        double first = out.cells.front().ratio, last_max = 0.0;
        double x_last = x_grid.empty() ? 0.0 : *std::max_element(x_grid.begin(), x_grid.end());
        for (const ConditionalCell& c : out.cells)
            if (c.x == x_last)
                last_max = std::max(last_max, c.ratio);
        out.unbounded = last_max > 1.5 * std::max(first, 1.0) && last_max > 2.0;
    }
    return out;
}

double spearman_rho(const std::vector<std::pair<double, double>>& draws)
{
    std::size_t n = draws.size();
    if (n < 2)
        throw Error(Errc::insufficient_samples, "need at least two draws");
    auto ranks = [&](bool second) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return second ? draws[a].second < draws[b].second : draws[a].first < draws[b].first;
        });
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i)
            r[idx[i]] = static_cast<double>(i);
        return r;
    };
    auto rx = ranks(false), ry = ranks(true);
    double mean = 0.5 * static_cast<double>(n - 1);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double a = rx[i] - mean, b = ry[i] - mean;
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    return sxy / std::sqrt(sxx * syy);
}

void write_samples(const std::vector<std::pair<double, double>>& draws, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error(Errc::config_parse, "cannot write " + path);
    out.precision(17);
    for (const auto& [x, y] : draws)
        out << x << ' ' << y << '\n';
}

} // namespace htail
