#pragma once

#include <functional>
#include <vector>

namespace htail {

struct LogIntegral {
    double log_value;  // log of the integral, -inf when it vanishes
    double rel_error;  // estimated relative error
};

struct QuadratureOptions {
    double rel_tol = 1e-10;
    double fail_tol = 1e-6;   // above this the result is rejected
    std::size_t max_intervals = 60000;
};

// Integrates exp(g(x)) over the piecewise interval given by sorted breakpoints.
// Global adaptive Simpson with the integrand rescaled by its running maximum,
// so integrands far below the double range are handled without underflow.
// Non-finite g is read as a zero integrand. Tolerances are widened to the
// rounding noise of g when |g| is huge, e.g. -x^2 far out.
LogIntegral integrate_log(const std::function<double(double)>& g,
                          const std::vector<double>& breaks,
                          const QuadratureOptions& opt = {});

// Breakpoints for [a, b] refined geometrically toward both ends, where
// integrable edge singularities and narrow peaks usually sit.
std::vector<double> edge_refined(double a, double b, double min_step_rel = 1e-15);

// Merges extra points inside [front, back] into sorted breakpoints.
void add_breaks(std::vector<double>& breaks, const std::vector<double>& extra);

double log_add(double a, double b);
double log_sub(double a, double b);  // log(e^a - e^b), a >= b

} // namespace htail
