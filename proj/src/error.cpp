#include "htail/error.hpp"

namespace htail {

std::string_view to_string(Errc code)
{
    switch (code) {
    case Errc::invalid_parameter: return "invalid-parameter";
    case Errc::empty_samples: return "empty-sample-list";
    case Errc::underflow_before_window: return "underflow-before-window";
    case Errc::unsupported_support: return "unsupported-support";
    case Errc::quadrature_failure: return "quadrature-failure";
    case Errc::transform_divergent: return "transform-divergent";
    case Errc::missing_bound: return "missing-bound";
    case Errc::precondition_not_declared: return "precondition-not-declared";
    case Errc::degenerate_y: return "degenerate-Y";
    case Errc::no_limit: return "no-limit";
    case Errc::no_sampler: return "no-sampler";
    case Errc::insufficient_samples: return "insufficient-samples";
    case Errc::missing_reference: return "missing-reference";
    case Errc::dimension_mismatch: return "dimension-mismatch";
    case Errc::registry_incomplete: return "registry-incomplete";
    case Errc::unknown_model: return "unknown-model";
    case Errc::config_parse: return "config-parse";
    case Errc::pipeline_mismatch: return "pipeline-type-mismatch";
    }
    return "unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
{
}

} // namespace htail
