#pragma once

#include "nwr/graph.hpp"
#include "nwr/model.hpp"

#include <utility>
#include <vector>

namespace nwr {

using VertexMask = std::vector<bool>;

/// Vertices with a path to one of the marked vertices (the marked ones included).
VertexMask can_reach(MdpGraph const& graph, VertexMask const& goal);

/// Vertices with no path to fin. Requires a non-weighted model.
VertexMask value0_vertices(MdpGraph const& graph);

/// Vertices from which some strategy reaches fin with probability 1, for every
/// graph-preserving valuation. Requires a non-weighted model.
VertexMask value1_vertices(MdpGraph const& graph);

/// Almost-sure attractor of the marked states, treating them as sinks. Nature vertices
/// are included when all their successors lie in the attractor's support.
VertexMask almost_sure_attractor(MdpGraph const& graph, VertexMask const& goal_states);

/// True iff each path from a vertex of `from` to fin visits a vertex of `through`.
bool is_essential(std::vector<Vertex> const& from, std::vector<Vertex> const& through, MdpGraph const& graph);

/// True iff every vertex of `from` becomes value-1 once the targets are replaced by
/// `goal_states` (plus fail). Only the part of the graph reachable from `from` is explored.
bool almost_sure_reach(std::vector<Vertex> const& from, std::vector<StateId> const& goal_states,
                       MdpGraph const& graph);

struct Mec {
    std::vector<StateId> states;
    std::vector<ChoiceId> choices;
};

struct MecDecomposition {
    std::vector<Mec> mecs;
    /// Class [s] of every state; states outside all MECs get a class of their own.
    std::vector<std::uint32_t> class_of;
    std::uint32_t num_classes = 0;
};

MecDecomposition mec_decomposition(MdpGraph const& graph);

/// Contracts value-1 vertices into fin and value-0 vertices into fail. Choices of
/// surviving states that cannot reach fin are dropped (their state has no edge to them).
std::pair<WpMdp, ModelMap> contract_extremal(WpMdp const& model);

/// Quotient by maximal end components: every class keeps the choices of its members,
/// restricted to transitions leaving the class. Choices left without transitions are
/// dropped, and choices of a class with identical successor sets are merged.
std::pair<WpMdp, ModelMap> mec_quotient(WpMdp const& model);

/// Shared quotient construction. `image` maps each state to its class; classes are named
/// and weighted by the given vectors; choices with `keep_choice[c] == false` disappear.
/// For trivially parametric models the successor sets of a class's choices are
/// deduplicated; for parametric ones probabilities into the same class are summed.
struct QuotientRequest {
    std::vector<StateId> image;
    std::vector<std::string> class_names;
    std::vector<std::optional<Rational>> class_weights;
    std::vector<bool> keep_choice;
    bool drop_internal = false;
};

std::pair<WpMdp, ModelMap> quotient_model(WpMdp const& model, QuotientRequest const& request);

}  // namespace nwr
