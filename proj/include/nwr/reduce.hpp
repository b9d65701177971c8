#pragma once

#include "nwr/graph.hpp"
#include "nwr/model.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace nwr {

/// Sorted, duplicate-free set of graph vertices.
using VertexSet = std::vector<Vertex>;
using NodeId = std::uint32_t;

struct PruneConfig {
    std::size_t max_inner = 3;
    std::size_t max_outer = 17;
    /// Run only the collapse step in the first outer iteration.
    bool skip_first_inner = true;
    /// On node insertion also add U -> W whenever {u} reaches W for every u in U.
    bool membership_edges = false;
    /// Initial edge vE -> {v} for nature vertices with a single successor, next to the
    /// state rule. Sound: such a nature vertex has exactly the value of its successor.
    bool single_successor_edges = true;

    /// At most 17 outer and 3 inner iterations, no inner loop in the first outer one.
    static PruneConfig setup1();
    /// At most 3 outer iterations, no action pruning.
    static PruneConfig setup2();
};

/// Graph over vertex sets whose paths are never-worse facts: a path U -> W means U is
/// never worse than W. {fail} has an implicit edge to every node and every node has an
/// implicit edge to {fin}; neither family is stored.
class UnderApproxGraph {
   public:
    /// Nodes {v} and vE for every vertex v, with edges {v} -> vE and vE -> {v} for states.
    explicit UnderApproxGraph(MdpGraph const& graph, PruneConfig const& config = {});

    std::size_t num_nodes() const { return nodes_.size(); }
    /// Stored edges only (the implicit fin/fail families are not counted).
    std::size_t num_edges() const { return edge_keys_.size(); }
    VertexSet const& members(NodeId node) const { return nodes_[node]; }
    std::optional<NodeId> find(VertexSet const& set) const;
    NodeId fin_node() const { return fin_node_; }
    NodeId fail_node() const { return fail_node_; }
    std::vector<NodeId> const& successors(NodeId node) const { return succ_[node]; }

    /// Idempotent. A new node gets edges from its stored subsets and to its stored supersets.
    NodeId add_node(VertexSet set);
    /// Adds both endpoints, then the edge. The caller vouches for U never worse than W.
    void add_edge(VertexSet const& from, VertexSet const& to);
    void add_edge(NodeId from, NodeId to);

    bool query(VertexSet const& from, VertexSet const& to);
    bool query(NodeId from, NodeId to) const;
    /// Nodes reachable from `from`, implicit edges included.
    std::vector<bool> reachable_from(NodeId from) const;
    /// Nodes with a path to `to`, implicit edges included.
    std::vector<bool> reaching(NodeId to) const;

    /// Least fixpoint of D -> D + {z | {z} reaches W + D}, over all vertices z.
    VertexSet lfp_f(VertexSet const& W);

    /// Calls f(to) for every successor, implicit ones included.
    template <typename F>
    void for_each_successor(NodeId node, F&& f) const {
        if (node == fail_node_) {
            for (NodeId other = 0; other < nodes_.size(); ++other) {
                f(other);
            }
            return;
        }
        for (NodeId other : succ_[node]) {
            f(other);
        }
        f(fin_node_);
    }

    /// True when a node or an edge was added since the last reset.
    bool changed() const { return changed_; }
    void reset_changed() { changed_ = false; }

   private:
    struct SetHash {
        std::size_t operator()(VertexSet const& set) const;
    };

    void insert_edge(NodeId from, NodeId to);

    std::size_t num_vertices_ = 0;
    bool membership_edges_ = false;
    bool initializing_ = true;
    bool changed_ = false;
    std::vector<VertexSet> nodes_;
    std::unordered_map<VertexSet, NodeId, SetHash> index_;
    std::vector<std::vector<NodeId>> containing_;
    std::vector<std::vector<NodeId>> succ_;
    std::vector<std::vector<NodeId>> pred_;
    std::unordered_set<std::uint64_t> edge_keys_;
    NodeId fin_node_ = 0;
    NodeId fail_node_ = 0;
};

/// U is never worse than W if U is essential for lfp_f(W). Adds the edge when it fires.
bool infer_essential(UnderApproxGraph& ua, VertexSet const& U, VertexSet const& W, MdpGraph const& graph);

/// U is never worse than W if some w in W almost surely reaches the states that U
/// reaches in the under-approximation. Adds the edge when it fires.
bool infer_almost_sure(UnderApproxGraph& ua, VertexSet const& U, VertexSet const& W, MdpGraph const& graph);

enum class PruneRule { query, essential, almost_sure };
std::string_view to_string(PruneRule rule);

/// A never-worse fact (U, W) with U = {(s, a)} and W = sE minus (s, a), in the vertex
/// numbering of the model the under-approximation was built for.
struct NwrFact {
    Vertex vertex = 0;
    VertexSet others;
    PruneRule rule = PruneRule::query;
};

struct PruneRecord {
    std::size_t iteration = 0;
    std::string state;
    std::string action;
    PruneRule rule = PruneRule::query;
};

struct PruneResult {
    std::vector<bool> pruned;
    std::vector<NwrFact> facts;
    std::size_t passes = 0;
    std::size_t count() const;
};

/// The action-pruning loop. `graph` is updated in place as choices disappear. The model
/// must have no non-trivial end components (take its MEC quotient first).
PruneResult prune_actions(WpMdp const& model, UnderApproxGraph& ua, MdpGraph& graph, PruneConfig const& config);

/// Merges states whose singleton nodes share a cycle of the under-approximation, drops
/// the pruned choices, and deduplicates choices with equal successor sets. The class
/// representative is its target member if any, else its smallest state.
std::pair<WpMdp, ModelMap> collapse_equivalences(WpMdp const& model, UnderApproxGraph const& ua,
                                                 std::vector<bool> const& pruned = {});

/// Extremal contraction followed by the MEC quotient.
std::pair<WpMdp, ModelMap> preprocess(WpMdp const& model);

struct StageCounts {
    std::size_t states = 0;
    std::size_t choices = 0;

    static StageCounts of(WpMdp const& model) { return {model.num_states(), model.num_choices()}; }
    bool operator==(StageCounts const&) const = default;
};

struct IterationRecord {
    std::size_t iteration = 0;
    bool inner_ran = false;
    std::size_t pruned = 0;
    std::size_t merged = 0;  ///< states removed by the collapse step
    StageCounts after;
};

struct ReductionReport {
    std::string instance;
    StageCounts original;
    StageCounts preprocessed;
    StageCounts reduced;
    double seconds = 0.0;
    std::vector<IterationRecord> iterations;
    std::vector<PruneRecord> prune_log;
    std::vector<std::string> notes;

    bool completely_reduced() const { return reduced.states <= 2; }
};

struct ReductionResult {
    WpMdp model;
    /// From the input model to `model`.
    ModelMap map;
    ReductionReport report;
};

/// Called once per outer iteration with the model the under-approximation was built for,
/// the final under-approximation of that iteration, and the pruning facts derived on it.
using FactObserver = std::function<void(WpMdp const&, UnderApproxGraph const&, std::vector<NwrFact> const&)>;

/// The full reduction: preprocess, then up to `max_outer` rounds of pruning and
/// collapsing with a fresh under-approximation each, preprocessing again after every
/// round. Stops early once a round that ran the pruning loop changed nothing. Markov
/// chains never run the pruning loop. Needs a non-weighted trivially parametric model.
ReductionResult reduce(WpMdp const& model, PruneConfig const& config = {}, FactObserver const& observer = {});

}  // namespace nwr
