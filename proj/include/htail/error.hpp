#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace htail {

enum class Errc {
    invalid_parameter,
    empty_samples,
    underflow_before_window,
    unsupported_support,
    quadrature_failure,
    transform_divergent,
    missing_bound,
    precondition_not_declared,
    degenerate_y,
    no_limit,
    no_sampler,
    insufficient_samples,
    missing_reference,
    dimension_mismatch,
    registry_incomplete,
    unknown_model,
    config_parse,
    pipeline_mismatch,
};

std::string_view to_string(Errc code);

// Library-wide exception; the code is what callers branch on.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what);
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace htail
