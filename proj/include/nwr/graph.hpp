#pragma once

#include "nwr/model.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace nwr {

/// Vertices 0..n-1 are states, n..n+c-1 are nature vertices (one per choice).
using Vertex = std::uint32_t;

/// The bipartite graph of a model. A state has an edge to the nature vertex of one of its
/// choices iff that choice can move somewhere other than fail; a nature vertex has an edge
/// to every successor whose probability is not syntactically zero.
class MdpGraph {
   public:
    MdpGraph() = default;
    explicit MdpGraph(WpMdp const& model);

    std::size_t num_states() const { return num_states_; }
    std::size_t num_choices() const { return choice_state_.size(); }
    std::size_t num_vertices() const { return succ_.size(); }

    bool is_state(Vertex v) const { return v < num_states_; }
    bool is_nature(Vertex v) const { return v >= num_states_; }
    Vertex nature(ChoiceId c) const { return static_cast<Vertex>(num_states_ + c); }
    ChoiceId choice_of(Vertex v) const { return static_cast<ChoiceId>(v - num_states_); }
    StateId state_of(Vertex nature_vertex) const { return choice_state_[choice_of(nature_vertex)]; }
    /// Nature vertices of every choice of `s`, including those without an incoming edge.
    std::vector<Vertex> const& all_choices_of(StateId s) const { return state_choices_[s]; }

    std::vector<Vertex> const& successors(Vertex v) const { return succ_[v]; }
    std::vector<Vertex> const& predecessors(Vertex v) const { return pred_[v]; }
    bool has_edge(Vertex from, Vertex to) const;

    std::optional<StateId> fin() const { return fin_; }
    std::optional<StateId> fail() const { return fail_; }
    std::vector<bool> const& target_mask() const { return is_target_; }

    /// Deletes every edge into and out of the nature vertex of `c` (choice pruning).
    void remove_choice(ChoiceId c);

    bool operator==(MdpGraph const&) const = default;

   private:
    void remove_edge(Vertex from, Vertex to);

    std::size_t num_states_ = 0;
    std::vector<StateId> choice_state_;
    std::vector<std::vector<Vertex>> state_choices_;
    std::vector<std::vector<Vertex>> succ_;
    std::vector<std::vector<Vertex>> pred_;
    std::vector<bool> is_target_;
    std::optional<StateId> fin_;
    std::optional<StateId> fail_;
};

MdpGraph build_graph(WpMdp const& model);

}  // namespace nwr
