#pragma once

#include "htail/rng.hpp"

#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace htail {

inline constexpr double inf = std::numeric_limits<double>::infinity();
inline constexpr double underflow_floor = 1e-300;

enum class Support { nonnegative, whole_line };

struct Atom {
    double at;
    double mass;
};

// Implementation interface for survival-function models. Everything is in
// log space so light tails stay representable far past 1e-300.
class TailModelImpl {
public:
    virtual ~TailModelImpl() = default;

    // log P[X > x]; -inf exactly when the probability is zero
    virtual double log_survival(double x) const = 0;
    virtual bool has_density() const { return false; }
    // log density of the absolutely continuous part
    virtual double log_density(double x) const;
    virtual std::vector<Atom> atoms() const { return {}; }
    // points where the density is not smooth; quadrature splits there
    virtual std::vector<double> kinks() const { return {}; }
    virtual double lower() const = 0;
    virtual double upper() const { return inf; }
    // false for quadrature-backed models, which callers tabulate before reuse
    virtual bool cheap() const { return true; }
    virtual bool can_sample() const { return false; }
    virtual double sample(Rng& rng) const;
    // smallest x with F̄(x) <= s; the default bisects log_survival
    virtual double inverse_survival(double s) const;
    virtual std::string describe() const = 0;
};

class TailModel {
public:
    TailModel() = default;
    explicit TailModel(std::shared_ptr<const TailModelImpl> impl);

    // F̄(x), with values below the underflow floor reported as 0
    double survival(double x) const;
    double log_survival(double x) const { return impl_->log_survival(x); }
    bool underflows(double x) const;

    bool density_available() const { return impl_->has_density(); }
    double density(double x) const;
    double log_density(double x) const { return impl_->log_density(x); }

    Support support() const;
    double left_edge() const { return impl_->lower(); }
    double right_endpoint() const { return impl_->upper(); }
    std::vector<Atom> atoms() const { return impl_->atoms(); }
    // D[F], the positive jump points
    std::vector<double> discontinuities() const;
    std::vector<double> kinks() const { return impl_->kinks(); }

    bool cheap() const { return impl_->cheap(); }
    bool can_sample() const { return impl_->can_sample(); }
    double sample(Rng& rng) const;
    double inverse_survival(double s) const { return impl_->inverse_survival(s); }
    std::string describe() const { return impl_->describe(); }

    const TailModelImpl* identity() const { return impl_.get(); }
    const std::shared_ptr<const TailModelImpl>& impl() const { return impl_; }
    explicit operator bool() const { return static_cast<bool>(impl_); }

private:
    std::shared_ptr<const TailModelImpl> impl_;
};

enum class FamilyKind {
    pareto,
    exponential,
    weibull,
    lognormal,
    truncated_uniform,
    mixture,
    lattice,
    slowly_varying,
};

struct FamilySpec {
    FamilyKind kind = FamilyKind::pareto;
    std::map<std::string, double> params;
    std::vector<FamilySpec> components;  // mixture
    std::vector<double> weights;         // mixture and lattice
    std::vector<double> values;          // lattice
};

TailModel make_family(const FamilySpec& spec);

TailModel pareto(double alpha, double scale = 1.0);
TailModel exponential(double lambda);
TailModel weibull(double shape, double rate = 1.0);
TailModel lognormal(double mu, double sigma);
TailModel truncated_uniform(double b);
TailModel lattice(std::vector<double> values, std::vector<double> weights);
TailModel point_mass(double at);
// F̄(x) = 1/ln(e + x)
TailModel slowly_varying();
TailModel finite_mixture(std::vector<TailModel> parts, std::vector<double> weights);

TailModel empirical_tail(std::vector<double> samples);

// Shortest round-trip decimal form; used for names and reports.
std::string format_number(double v);

// Ḡ(x/d) - Ḡ((x+1)/d)
double discontinuity_gap(const TailModel& g, double d, double x);

struct GridSpec {
    double x0 = 1.0;
    double ratio = 1.4142135623730951;
    int count = 53;

    void validate() const;
    double at(int k) const;
    double horizon() const { return at(count); }
    std::vector<double> points() const;
    // first index of the nominal final window
    int window_start() const { return (2 * (count + 1)) / 3; }
};

} // namespace htail
