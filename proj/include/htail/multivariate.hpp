#pragma once

#include "htail/classes.hpp"
#include "htail/dependence.hpp"
#include "htail/tail_model.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace htail {

using Direction = std::vector<double>;

// Joint exceedance P[X_1 > t_1 x, ..., X_n > t_n x]. A coordinate t_i = inf
// leaves X_i unconstrained, so a direction with one finite entry reduces to
// that marginal.
class VectorTailModel {
public:
    using LogJoint = std::function<double(const Direction&, double)>;

    // independent and comonotone couplings work for any n, FGM only for n = 2
    VectorTailModel(std::vector<TailModel> marginals, Coupling coupling = {},
                    std::optional<TailModel> reference = std::nullopt);
    // caller-supplied joint; it must honour the reduction to the marginals
    VectorTailModel(std::vector<TailModel> marginals, LogJoint log_joint, std::string name,
                    std::optional<TailModel> reference = std::nullopt);

    std::size_t dim() const { return marginals_.size(); }
    const std::vector<TailModel>& marginals() const { return marginals_; }
    const std::optional<TailModel>& reference() const { return reference_; }
    VectorTailModel with_reference(TailModel ref) const;

    double log_joint(const Direction& t, double x) const;
    double joint(const Direction& t, double x) const;
    std::string describe() const { return name_; }

private:
    std::vector<TailModel> marginals_;
    LogJoint log_joint_;
    std::string name_;
    std::optional<TailModel> reference_;
};

struct WeakEquivalence {
    bool holds = false;
    double upper = 0.0;  // window max of F̄/Ḡ
    double lower = 0.0;  // window min of F̄/Ḡ
    double margin = 0.0; // in log units against the bound
};

// F̄ ≍ Ḡ realised as 1/bound <= F̄/Ḡ <= bound across the window
WeakEquivalence weak_equivalence(const TailModel& f, const TailModel& g, const GridSpec& grid, double bound = 1e3);

struct VectorVerdict {
    std::string class_name;
    bool member = false;
    double margin = 0.0;              // dilation margin, comparable to the univariate one
    double certificate_margin = inf;  // weak-equivalence margin, D_n only
    std::vector<Direction> tested_t;
    std::vector<Direction> tested_dilations;
    std::vector<ClassVerdict> marginal_verdicts;
    std::vector<std::string> flags;
    double horizon = 0.0;
    std::string error;

    bool has_flag(std::string_view f) const;
};

constexpr std::size_t max_dimension = 4;
constexpr std::size_t max_directions = 40;

// Coordinates from {0.5, 1, 2, inf} without the all-inf vector. Diagonal and
// single-coordinate directions come first, the rest fill up to the cap.
std::vector<Direction> default_t_set(std::size_t n);
std::vector<Direction> default_b_set(std::size_t n, double b = 0.5);
std::vector<Direction> default_v_set(std::size_t n);

VectorVerdict is_Dn(const VectorTailModel& v, const std::vector<Direction>& t_set,
                    const std::vector<Direction>& b_set, const GridSpec& grid = {}, const Thresholds& th = {},
                    double bound = 1e3);
VectorVerdict is_PDn(const VectorTailModel& v, const std::vector<Direction>& t_set,
                     const std::vector<Direction>& v_set, const GridSpec& grid = {}, const Thresholds& th = {});
VectorVerdict intersect(const std::string& name, const VectorVerdict& a, const VectorVerdict& b);

// Componentwise minimum of two asymptotically independent vectors: the joint
// factorises into the product of the two joints.
VectorTailModel vector_min_tail(const VectorTailModel& a, const VectorTailModel& b);
// Exact form from a 2n-dimensional joint of (X, Y).
VectorTailModel vector_min_tail(const VectorTailModel& full, std::size_t n);

struct MinChainCheck {
    bool holds = false;
    double worst_slack = inf;  // min over grid of factor ratio - min ratio
};

// The minimum's dilation ratio never exceeds either factor's ratio.
MinChainCheck check_min_chain(const VectorTailModel& a, const VectorTailModel& b, const Direction& t,
                              const Direction& v, const GridSpec& grid = {});

} // namespace htail
