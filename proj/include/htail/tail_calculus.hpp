#pragma once

#include "htail/dependence.hpp"
#include "htail/tail_model.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace htail {

// Elementary transforms
TailModel shift(const TailModel& f, double c);         // X + c
TailModel scaled_tail(const TailModel& f, double c);   // min(1, c F̄)
TailModel floor_at(const TailModel& g, double eps);    // Y v eps
TailModel cap_at(const TailModel& g, double eps);      // Y ^ eps
TailModel mixture(const TailModel& f, const TailModel& g, double p);

TailModel max_tail(const JointTailModel& joint);
TailModel min_tail(const JointTailModel& joint);

// Independent sum on the nonnegative half-line. The first argument enters
// through its density and atoms, the second through its survival function.
TailModel convolve(const TailModel& f, const TailModel& g);
TailModel power(const TailModel& f, int n);
inline constexpr int max_power = 16;

// Spline in x of log F̄ over [lower, hi]; reused when a quadrature-backed
// model is evaluated many times. Models with atoms away from the lower edge
// are returned unchanged.
TailModel tabulate(const TailModel& f, double hi = 1e13);

// F̄^{*n}(x_k) / F̄(x_k) along the grid
std::vector<double> self_convolution_ratio(const TailModel& f, int n, const GridSpec& grid);

struct Decomposition {
    double i1, i2, i3;
    double total;           // I1 + I2 + I3
    double bound13;         // C v^-q F̄*G(x), the bound on I1
    double g_tail;          // Ḡ(x), the bound on I3
    double i1_ratio;        // I1 / bound13
    double i3_ratio;        // I3 / Ḡ(x)
};

// Splits F̄*G(vx) = ∫ F̄(vx - y) G(dy) at vx - x0 and vx. G enters through its
// density, so either factor may have a negative lower edge.
Decomposition convolution_decomposition(const TailModel& f, const TailModel& g, double v, double x,
                                        double x0, double c = 1.0, double q = 0.0);

// The sum of the three pieces as a model; admits finite negative lower edges.
TailModel convolve_whole_line(const TailModel& f, const TailModel& g);

struct StoppedSumSpec {
    std::vector<double> p;          // p[n] = P[N = n]
    std::optional<int> bound;       // k with p_n = 0 for n > k
    std::optional<double> tilt;     // δ with E[(1+δ)^N] < ∞

    double mean() const;
    void validate() const;
    int max_n() const { return static_cast<int>(p.size()) - 1; }

    static StoppedSumSpec bounded(std::vector<double> p);
    static StoppedSumSpec poisson(double lambda, int truncate_at, double tilt);
};

TailModel stopped_sum_tail(const std::vector<TailModel>& f_list, const StoppedSumSpec& spec);

struct StoppedSumApprox {
    TailModel approx;        // min(1, E[N] F̄)
    double clamp_until;      // E[N] F̄(x) > 1 below this point
    bool small_x_clamped;
};

StoppedSumApprox stopped_sum_asymptotic(const TailModel& f, const StoppedSumSpec& spec);

struct MonteCarloEstimate {
    double value;
    double std_error;
    std::size_t samples;
    std::uint64_t seed;
};

// Conditional Monte Carlo for P[S_N > x]: given N = n and the first n - 1
// summands, the last one is integrated out exactly.
MonteCarloEstimate stopped_sum_mc(const TailModel& f, const StoppedSumSpec& spec, double x,
                                  std::size_t samples, std::uint64_t seed);

struct ConvolutionBound {
    double c_hat;
    int n;
    bool certified;
};

// Ĉ with F̄_{S_n} <= Ĉ^{n-1} F̄_1 on the grid, for identical summands
ConvolutionBound certify_convolution_bound(const TailModel& f, int n, const GridSpec& grid);

// Tail of X Y for independent nonnegative X ~ F and Y ~ G
TailModel product_convolve(const TailModel& f, const TailModel& g);

struct TruncatedProductSpec {
    double epsilon;
    double epsilon_prime;
};

struct TruncatedProducts {
    TailModel h_eps;        // X (Y v eps)
    TailModel h_eps_prime;  // X (Y ^ eps')
    double p_exceed_eps;
    double p_exceed_eps_prime;
};

TruncatedProducts truncated_products(const TailModel& f, const TailModel& g, const TruncatedProductSpec& spec);

struct SandwichCheck {
    bool holds;
    double worst_slack;  // most negative relative slack over all four inequalities
    std::size_t points;
};

SandwichCheck check_sandwich(const TailModel& f, const TailModel& g, const TruncatedProductSpec& spec,
                             const GridSpec& grid);

} // namespace htail
