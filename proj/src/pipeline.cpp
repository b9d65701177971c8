#include "nwr/pipeline.hpp"

#include "nwr/deweight.hpp"

#include <chrono>

namespace nwr {

PreparedModel prepare_for_reduction(WpMdp const& input) {
    auto diagnostics = validate_model(input);
    if (has_errors(diagnostics)) {
        throw ModelError("invalid model:\n" + format_diagnostics(diagnostics));
    }
    PreparedModel prepared{normalize_targets(input), {}};
    if (is_weighted(prepared.model.subclass())) {
        if (is_trivially_parametric(prepared.model.subclass())) {
            prepared.model = deweight_tpmdp(prepared.model).first;
            prepared.notes.push_back("de-weighted (trivially parametric construction)");
        } else {
            auto [deweighted, map] = deweight_pmdp(prepared.model);
            prepared.model = std::move(deweighted);
            prepared.notes.push_back("de-weighted (parametric construction, z = " + to_string(*map.z) + ")");
        }
    }
    if (!is_trivially_parametric(prepared.model.subclass())) {
        prepared.model = forget_probabilities(prepared.model);
        prepared.notes.push_back("probabilities forgotten");
    }
    return prepared;
}

ReductionResult run_reduction(WpMdp const& input, PruneConfig const& config, std::string instance,
                              FactObserver const& observer) {
    auto const start = std::chrono::steady_clock::now();
    PreparedModel prepared = prepare_for_reduction(input);
    ReductionResult result = reduce(prepared.model, config, observer);
    result.report.instance = std::move(instance);
    if (StageCounts::of(input) != result.report.original) {
        result.report.notes.insert(result.report.notes.begin(),
                                   "input has " + std::to_string(input.num_states()) + " states and " +
                                       std::to_string(input.num_choices()) + " choices; counts start after de-weighting");
    }
    result.report.notes.insert(result.report.notes.begin(), prepared.notes.begin(), prepared.notes.end());
    result.report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace nwr
