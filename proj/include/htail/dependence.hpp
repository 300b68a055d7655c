#pragma once

#include "htail/tail_model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace htail {

enum class CouplingKind { independent, fgm, comonotone };

struct Coupling {
    CouplingKind kind = CouplingKind::independent;
    double theta = 0.0;

    static Coupling independent() { return {}; }
    static Coupling fgm(double theta);
    static Coupling comonotone() { return {CouplingKind::comonotone, 0.0}; }
    std::string describe() const;
};

// Bivariate exceedance model P[X > x, Y > y] for a coupling with a closed form.
class JointTailModel {
public:
    JointTailModel(TailModel first, TailModel second, Coupling coupling = {});

    const TailModel& first() const { return f_; }
    const TailModel& second() const { return g_; }
    const Coupling& coupling() const { return c_; }

    double log_joint(double x, double y) const;
    double joint(double x, double y) const;

    // C in P[X>x, Y>y] ~ C F̄(x) Ḡ(y); empty when no finite limit exists
    std::optional<double> sai_constant() const;
    bool has_sampler() const;
    std::vector<std::pair<double, double>> sample(std::size_t n, std::uint64_t seed) const;
    // one draw from an existing stream
    std::pair<double, double> draw(Rng& rng) const;
    std::string describe() const;

private:
    TailModel f_, g_;
    Coupling c_;
};

struct SaiEstimate {
    double value;             // window estimate of joint(x,x) / (F̄(x) Ḡ(x))
    double expected;          // closed-form constant when known
    double slope;             // relative trend over the window
    bool boundary_violation;  // C = 0, outside the SAI assumption
    std::vector<double> series;
};

SaiEstimate sai_limit(const JointTailModel& joint, const GridSpec& grid);

struct ConditionalCell {
    double x;
    double t;
    double ratio;      // P[Y > x - t | X near t] / P[Y > x - t]
    double bin_width;  // width of the X-bin around t
    std::size_t hits;  // samples with Y > x - t inside the bin
};

struct ConditionalDiag {
    std::vector<ConditionalCell> cells;
    double max_ratio;
    bool unbounded;
    std::uint64_t seed;
    std::size_t samples;
};

// Small-bin Monte Carlo estimate of the conditional ratio; each bin holds
// the bin_size samples whose X is nearest to t.
ConditionalDiag conditional_ratio_diag(const JointTailModel& joint, const std::vector<double>& x_grid,
                                       const std::vector<double>& t_grid, std::size_t samples,
                                       std::uint64_t seed, std::size_t bin_size = 20000);

double spearman_rho(const std::vector<std::pair<double, double>>& draws);

// Writes one "x y" pair per line.
void write_samples(const std::vector<std::pair<double, double>>& draws, const std::string& path);

} // namespace htail
