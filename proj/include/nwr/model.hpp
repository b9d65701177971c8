#pragma once

#include "nwr/polynomial.hpp"
#include "nwr/rational.hpp"

#include <cstdint>
#include <optional>
#include <ranges>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nwr {

using StateId = std::uint32_t;
using ChoiceId = std::uint32_t;

/// The four model classes: weighted or not, general or trivially parametric.
enum class Subclass { wpmdp, pmdp, wtpmdp, tpmdp };

bool is_weighted(Subclass subclass);
bool is_trivially_parametric(Subclass subclass);
std::string_view to_string(Subclass subclass);
std::optional<Subclass> parse_subclass(std::string_view text);

/// A transition of a choice. Trivially parametric models leave `probability` empty:
/// only the support matters there and each transition is its own free parameter.
struct Transition {
    StateId target = 0;
    std::optional<Polynomial> probability;

    bool operator==(Transition const&) const = default;
};

struct Choice {
    StateId state = 0;
    std::string action;
    std::vector<Transition> transitions;

    bool operator==(Choice const&) const = default;
};

class ModelError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Explicit-state weighted parametric MDP. Targets are the states carrying a weight; they
/// must be sinks. Choices are stored grouped by state (stable with respect to insertion
/// order), so the choices of a state form a contiguous index range.
class WpMdp {
   public:
    WpMdp() = default;
    WpMdp(Subclass subclass, std::vector<std::string> params, std::vector<std::string> state_names,
          std::vector<std::optional<Rational>> weights, std::vector<Choice> choices, std::string name = {});

    Subclass subclass() const { return subclass_; }
    std::string const& name() const { return name_; }
    std::vector<std::string> const& params() const { return params_; }

    std::size_t num_states() const { return state_names_.size(); }
    std::size_t num_choices() const { return choices_.size(); }
    std::size_t num_transitions() const;

    std::string const& state_name(StateId state) const { return state_names_[state]; }
    std::vector<std::string> const& state_names() const { return state_names_; }
    std::optional<StateId> find_state(std::string_view name) const;

    bool is_target(StateId state) const { return weights_[state].has_value(); }
    std::optional<Rational> const& weight(StateId state) const { return weights_[state]; }
    std::vector<std::optional<Rational>> const& weights() const { return weights_; }
    /// Targets ordered by weight, ties by index.
    std::vector<StateId> targets() const;

    /// The weight-0 target; a target named "fail" wins ties.
    std::optional<StateId> fail() const;
    /// The weight-1 target of a non-weighted model; a target named "fin" wins ties.
    std::optional<StateId> fin() const;

    std::vector<Choice> const& choices() const { return choices_; }
    Choice const& choice(ChoiceId id) const { return choices_[id]; }
    auto choices_of(StateId state) const {
        return std::views::iota(row_groups_[state], row_groups_[state + 1]);
    }
    std::size_t num_choices_of(StateId state) const { return row_groups_[state + 1] - row_groups_[state]; }
    std::optional<ChoiceId> find_choice(StateId state, std::string_view action) const;

    bool operator==(WpMdp const& other) const;

   private:
    Subclass subclass_ = Subclass::tpmdp;
    std::string name_;
    std::vector<std::string> params_;
    std::vector<std::string> state_names_;
    std::vector<std::optional<Rational>> weights_;
    std::vector<Choice> choices_;
    std::vector<ChoiceId> row_groups_{0};
};

enum class Severity { warning, error };

struct Diagnostic {
    Severity severity = Severity::error;
    std::string location;
    std::string message;
};

/// Checks the model invariants; returns one entry per violation (empty when well formed).
std::vector<Diagnostic> validate_model(WpMdp const& model);
bool has_errors(std::vector<Diagnostic> const& diagnostics);
std::string format_diagnostics(std::vector<Diagnostic> const& diagnostics);

/// Merges equal-weight targets by redirecting all but one of them with a probability-1
/// choice, and inserts a weight-0 fail target when none exists. Rejects negative weights.
WpMdp normalize_targets(WpMdp const& model);

/// Gives every transition of a trivially parametric model its own parameter `x<c>_<k>`
/// (choice c, transition k). The result is a wpMDP/pMDP with the same graph.
WpMdp materialize_parameters(WpMdp const& model);

/// Forgets the probabilities of a (w)pMDP, keeping only the support (transitions with
/// syntactically zero polynomials are dropped).
WpMdp forget_probabilities(WpMdp const& model);

/// Picks a name not in `taken` starting from `base` ("base", "base_1", "base_2", ...).
std::string fresh_name(std::string const& base, std::vector<std::string> const& taken);

/// Relates a reduced model to the model it came from. Every original state has an image;
/// every reduced choice lists the original choices it was derived from.
struct ModelMap {
    std::vector<StateId> state_image;
    std::vector<std::vector<ChoiceId>> choice_sources;

    static ModelMap identity(WpMdp const& model);
    /// `*this` maps A to B and `next` maps B to C; the result maps A to C.
    ModelMap then(ModelMap const& next) const;
};

}  // namespace nwr
