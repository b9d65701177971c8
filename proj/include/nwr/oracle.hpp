#pragma once

#include "nwr/graph.hpp"
#include "nwr/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nwr {

/// Concrete probabilities for every transition, aligned with Choice::transitions.
using ChoiceDistributions = std::vector<std::vector<Rational>>;

/// A point of the parameter space. Parametric models use `assignment`; trivially
/// parametric ones carry one full-support distribution per choice instead.
struct Valuation {
    ParameterAssignment assignment;
    ChoiceDistributions distributions;
};

class OracleError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

ChoiceDistributions instantiate(WpMdp const& model, Valuation const& valuation);

/// Non-negative entries, rows summing to exactly one, and non-zero wherever the
/// polynomial is not syntactically zero. `reason` receives the first failure.
bool is_graph_preserving(WpMdp const& model, ChoiceDistributions const& distributions, std::string* reason = nullptr);

enum class SamplingProfile {
    uniform,      ///< integer weights in [1,64], normalized
    adversarial,  ///< one heavy successor, the others get epsilon = 1/64
    mixed,        ///< alternates between the two by sample index
};

/// Deterministic per (model, seed). Only trivially parametric models can be sampled.
Valuation sample_valuation(WpMdp const& model, std::uint64_t seed, SamplingProfile profile = SamplingProfile::uniform);

struct ExactValues {
    std::vector<Rational> state;
    std::vector<Rational> choice;
    /// Optimal memoryless choice per state (none for targets and dead ends).
    std::vector<std::optional<ChoiceId>> strategy;

    Rational const& vertex(MdpGraph const& graph, Vertex v) const {
        return graph.is_state(v) ? state[v] : choice[graph.choice_of(v)];
    }
};

struct ExactLimits {
    std::size_t max_states = 400;
    std::uint64_t max_strategies = std::uint64_t{1} << 20;
};

/// Exact optimal expected target weight. Vertices that cannot reach a positive-weight
/// target are pinned to 0; the rest is solved by policy iteration with exact rational
/// linear solves of the induced chains. Throws OracleError past `limits.max_states`.
ExactValues solve_exact(WpMdp const& model, ChoiceDistributions const& distributions, ExactLimits const& limits = {});

/// Same values by brute force over all memoryless deterministic strategies
/// (componentwise maximum). Throws OracleError past `limits.max_strategies`.
ExactValues solve_exact_enumeration(WpMdp const& model, ChoiceDistributions const& distributions,
                                    ExactLimits const& limits = {});

struct ApproxValues {
    std::vector<double> state;
    std::vector<double> choice;
    std::vector<std::optional<ChoiceId>> strategy;
    bool converged = false;
    std::size_t iterations = 0;
    double residual = 0.0;
};

/// Gauss-Seidel value iteration from the zero vector with value-0 vertices pinned.
ApproxValues solve_iterative(WpMdp const& model, ChoiceDistributions const& distributions, double tolerance = 1e-10,
                             std::size_t max_iterations = 1'000'000);

/// Values of every vertex of `graph`, in vertex order.
std::vector<Rational> vertex_values(MdpGraph const& graph, ExactValues const& values);

struct PreservationViolation {
    std::size_t sample = 0;
    std::string state;
    double original = 0.0;
    double reduced = 0.0;
    std::string detail;
};

struct PreservationReport {
    std::size_t samples = 0;
    bool exact = true;
    double max_delta = 0.0;
    std::vector<PreservationViolation> violations;
    /// Per sample, per original state: |original value - reduced value|.
    std::vector<std::vector<double>> deltas;

    bool ok() const { return violations.empty(); }
};

struct PreservationOptions {
    std::size_t samples = 20;
    std::uint64_t seed = 1;
    SamplingProfile profile = SamplingProfile::mixed;
    ExactLimits limits{};
    double tolerance = 1e-8;
};

/// Samples valuations of `original`, lifts each one through `map` onto `reduced`, and
/// compares the value of every original state with the value of its image.
PreservationReport check_value_preservation(WpMdp const& original, WpMdp const& reduced, ModelMap const& map,
                                            PreservationOptions const& options = {});

/// Looks for a sampled valuation with Rew(v) > max over W. Absence proves nothing.
std::optional<Valuation> falsify_nwr(WpMdp const& model, Vertex v, std::vector<Vertex> const& W, std::size_t samples,
                                     std::uint64_t seed, SamplingProfile profile = SamplingProfile::mixed);

}  // namespace nwr
