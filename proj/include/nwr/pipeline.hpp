#pragma once

#include "nwr/reduce.hpp"

#include <string>
#include <vector>

namespace nwr {

/// The model the reduction actually runs on, and how it was obtained.
struct PreparedModel {
    WpMdp model;
    std::vector<std::string> notes;
};

/// Front end of the reduction pipeline: validate, normalize the targets, de-weight
/// weighted models (trivially parametric construction for w~pMDPs, parametric one
/// otherwise) and forget the probabilities. Throws ModelError with the diagnostics when
/// the input is malformed. Deterministic, so `validate` can rebuild the same model.
PreparedModel prepare_for_reduction(WpMdp const& input);

/// prepare_for_reduction followed by reduce. The result's map and the report's original
/// stage refer to the prepared model; a note records the input counts when they differ.
ReductionResult run_reduction(WpMdp const& input, PruneConfig const& config, std::string instance = {},
                              FactObserver const& observer = {});

}  // namespace nwr
