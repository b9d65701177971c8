#pragma once

#include "nwr/graph.hpp"
#include "nwr/model.hpp"

#include <optional>
#include <vector>

namespace nwr {

/// How the vertices of a weighted model sit inside its de-weighted counterpart. Original
/// targets keep their state index but lose their weight and gain one choice.
struct DeweightMap {
    std::vector<StateId> state_injection;
    std::vector<ChoiceId> choice_injection;
    /// The fresh fin and fail states, in that order.
    std::vector<StateId> added_states;
    /// One fresh choice per original target, ordered by weight (a_0 ... a_n).
    std::vector<ChoiceId> added_choices;
    std::string action;
    StateId fin = 0;
    StateId fail = 0;
    /// 1 / rho(t_n); only set by the parametric construction.
    std::optional<Rational> z;
    /// Transitions to t_0 added to choices that could not reach a positive-weight target.
    std::size_t precondition_transitions = 0;

    Vertex map_vertex(MdpGraph const& from, MdpGraph const& to, Vertex v) const;
    /// New choices plus their transitions, i.e. the edges drawn for the construction.
    std::size_t added_edges(WpMdp const& result) const;
};

/// Parametric construction: every target t moves to a fresh fin with probability
/// rho(t)/rho(t_n) and to a fresh fail otherwise, so all values are scaled by z.
/// Trivially parametric inputs get explicit parameters first.
std::pair<WpMdp, DeweightMap> deweight_pmdp(WpMdp const& model);

/// Trivially parametric construction: target t_i gets a choice to {fin, t_(i-1)}
/// (t_0 to {fail}). Value order of the targets is kept, their ratios are not.
/// Parametric inputs are reduced to their support first.
std::pair<WpMdp, DeweightMap> deweight_tpmdp(WpMdp const& model);

}  // namespace nwr
