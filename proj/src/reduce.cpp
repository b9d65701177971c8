#include "nwr/reduce.hpp"

#include "nwr/graph_analysis.hpp"
#include "nwr/scc.hpp"

#include <algorithm>
#include <chrono>
#include <deque>

namespace nwr {

namespace {

VertexSet singleton(Vertex v) {
    return VertexSet{v};
}

VertexSet set_union(VertexSet const& a, VertexSet const& b) {
    VertexSet result;
    result.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(result));
    return result;
}

std::uint64_t edge_key(NodeId from, NodeId to) {
    return (static_cast<std::uint64_t>(from) << 32) | to;
}

bool is_markov_chain(WpMdp const& model) {
    for (StateId s = 0; s < model.num_states(); ++s) {
        if (model.num_choices_of(s) > 1) {
            return false;
        }
    }
    return true;
}

}  // namespace

PruneConfig PruneConfig::setup1() {
    return PruneConfig{};
}

PruneConfig PruneConfig::setup2() {
    PruneConfig config;
    config.max_inner = 0;
    config.max_outer = 3;
    config.skip_first_inner = false;
    return config;
}

std::size_t UnderApproxGraph::SetHash::operator()(VertexSet const& set) const {
    std::size_t hash = set.size();
    for (Vertex v : set) {
        hash ^= v + 0x9e3779b97f4a7c15ULL + (hash << 6) + (hash >> 2);
    }
    return hash;
}

UnderApproxGraph::UnderApproxGraph(MdpGraph const& graph, PruneConfig const& config)
    : num_vertices_(graph.num_vertices()), membership_edges_(config.membership_edges), containing_(graph.num_vertices()) {
    if (!graph.fin() || !graph.fail()) {
        throw ModelError("the under-approximation needs a non-weighted model with fin and fail");
    }
    for (Vertex v = 0; v < graph.num_vertices(); ++v) {
        add_node(singleton(v));
    }
    fin_node_ = *find(singleton(*graph.fin()));
    fail_node_ = *find(singleton(*graph.fail()));
    for (Vertex v = 0; v < graph.num_vertices(); ++v) {
        if (!graph.successors(v).empty()) {
            add_node(graph.successors(v));
        }
    }
    for (Vertex v = 0; v < graph.num_vertices(); ++v) {
        auto const& succ = graph.successors(v);
        if (succ.empty()) {
            continue;
        }
        NodeId single = *find(singleton(v));
        NodeId out = *find(succ);
        add_edge(single, out);
        if (graph.is_state(v) || (config.single_successor_edges && succ.size() == 1)) {
            add_edge(out, single);
        }
    }
    initializing_ = false;
}

std::optional<NodeId> UnderApproxGraph::find(VertexSet const& set) const {
    auto it = index_.find(set);
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

NodeId UnderApproxGraph::add_node(VertexSet set) {
    if (auto existing = find(set)) {
        return *existing;
    }
    NodeId const id = static_cast<NodeId>(nodes_.size());
    nodes_.push_back(set);
    index_.emplace(set, id);
    succ_.emplace_back();
    pred_.emplace_back();
    changed_ = true;
    if (!initializing_) {
        // Count how many members each existing node shares with the new one.
        std::unordered_map<NodeId, std::size_t> shared;
        for (Vertex v : set) {
            for (NodeId other : containing_[v]) {
                ++shared[other];
            }
        }
        std::vector<NodeId> related;
        for (auto const& [other, count] : shared) {
            related.push_back(other);
        }
        std::sort(related.begin(), related.end());
        for (NodeId other : related) {
            std::size_t count = shared[other];
            if (count == nodes_[other].size()) {
                insert_edge(other, id);
            } else if (count == set.size()) {
                insert_edge(id, other);
            }
        }
        if (membership_edges_) {
            for (NodeId other = 0; other < id; ++other) {
                bool all = std::all_of(set.begin(), set.end(),
                                       [&](Vertex v) { return query(*find(singleton(v)), other); });
                if (all) {
                    insert_edge(id, other);
                }
            }
        }
    }
    for (Vertex v : set) {
        containing_[v].push_back(id);
    }
    return id;
}

void UnderApproxGraph::insert_edge(NodeId from, NodeId to) {
    if (from == to || from == fail_node_ || to == fin_node_) {
        return;
    }
    if (edge_keys_.insert(edge_key(from, to)).second) {
        succ_[from].push_back(to);
        pred_[to].push_back(from);
        changed_ = true;
    }
}

void UnderApproxGraph::add_edge(VertexSet const& from, VertexSet const& to) {
    NodeId a = add_node(from);
    NodeId b = add_node(to);
    add_edge(a, b);
}

void UnderApproxGraph::add_edge(NodeId from, NodeId to) {
    insert_edge(from, to);
}

bool UnderApproxGraph::query(VertexSet const& from, VertexSet const& to) {
    NodeId a = add_node(from);
    NodeId b = add_node(to);
    return query(a, b);
}

bool UnderApproxGraph::query(NodeId from, NodeId to) const {
    if (from == to || from == fail_node_ || to == fin_node_) {
        return true;
    }
    return reachable_from(from)[to];
}

std::vector<bool> UnderApproxGraph::reachable_from(NodeId from) const {
    // Every node reaches {fin}, so its stored successors are always reachable too.
    std::vector<bool> seen(nodes_.size(), false);
    std::vector<NodeId> stack{from, fin_node_};
    seen[from] = true;
    seen[fin_node_] = true;
    while (!stack.empty()) {
        NodeId node = stack.back();
        stack.pop_back();
        if (node == fail_node_) {
            return std::vector<bool>(nodes_.size(), true);
        }
        for (NodeId next : succ_[node]) {
            if (!seen[next]) {
                seen[next] = true;
                stack.push_back(next);
            }
        }
    }
    return seen;
}

std::vector<bool> UnderApproxGraph::reaching(NodeId to) const {
    // Whatever reaches {fail} reaches everything; if {fin} reaches `to`, so does every node.
    std::vector<bool> seen(nodes_.size(), false);
    std::vector<NodeId> stack{to, fail_node_};
    seen[to] = true;
    seen[fail_node_] = true;
    while (!stack.empty()) {
        NodeId node = stack.back();
        stack.pop_back();
        for (NodeId prev : pred_[node]) {
            if (!seen[prev]) {
                seen[prev] = true;
                stack.push_back(prev);
            }
        }
    }
    if (seen[fin_node_]) {
        return std::vector<bool>(nodes_.size(), true);
    }
    return seen;
}

VertexSet UnderApproxGraph::lfp_f(VertexSet const& W) {
    VertexSet D;
    while (true) {
        NodeId target = add_node(set_union(W, D));
        std::vector<bool> reach = reaching(target);
        VertexSet next = D;
        for (NodeId node = 0; node < nodes_.size(); ++node) {
            if (reach[node] && nodes_[node].size() == 1) {
                next.push_back(nodes_[node][0]);
            }
        }
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end()), next.end());
        if (next == D) {
            return D;
        }
        D = std::move(next);
    }
}

bool infer_essential(UnderApproxGraph& ua, VertexSet const& U, VertexSet const& W, MdpGraph const& graph) {
    VertexSet through = set_union(ua.lfp_f(W), W);
    if (!is_essential(U, through, graph)) {
        return false;
    }
    ua.add_edge(U, W);
    return true;
}

bool infer_almost_sure(UnderApproxGraph& ua, VertexSet const& U, VertexSet const& W, MdpGraph const& graph) {
    NodeId from = ua.add_node(U);
    std::vector<bool> reach = ua.reachable_from(from);
    std::vector<StateId> goal;
    for (NodeId node = 0; node < ua.num_nodes(); ++node) {
        auto const& members = ua.members(node);
        if (reach[node] && members.size() == 1 && graph.is_state(members[0])) {
            goal.push_back(members[0]);
        }
    }
    std::sort(goal.begin(), goal.end());
    for (Vertex w : W) {
        if (almost_sure_reach({w}, goal, graph)) {
            ua.add_edge(U, W);
            return true;
        }
    }
    return false;
}

std::string_view to_string(PruneRule rule) {
    switch (rule) {
        case PruneRule::query:
            return "query";
        case PruneRule::essential:
            return "essential";
        case PruneRule::almost_sure:
            return "almost_sure";
    }
    return "?";
}

std::size_t PruneResult::count() const {
    return static_cast<std::size_t>(std::count(pruned.begin(), pruned.end(), true));
}

PruneResult prune_actions(WpMdp const& model, UnderApproxGraph& ua, MdpGraph& graph, PruneConfig const& config) {
    if (!mec_decomposition(graph).mecs.empty()) {
        throw ModelError("action pruning needs a model without end components; take the MEC quotient first");
    }
    PruneResult result;
    result.pruned.assign(model.num_choices(), false);
    for (std::size_t pass = 0; pass < config.max_inner; ++pass) {
        ++result.passes;
        bool any = false;
        for (StateId s = 0; s < model.num_states(); ++s) {
            // Snapshot: the edges of s change while its choices are pruned.
            VertexSet out = graph.successors(s);
            for (Vertex v : out) {
                VertexSet W;
                for (Vertex w : graph.successors(s)) {
                    if (w != v) {
                        W.push_back(w);
                    }
                }
                if (W.empty() || !graph.has_edge(s, v)) {
                    continue;
                }
                VertexSet U = singleton(v);
                std::optional<PruneRule> rule;
                if (ua.query(U, W)) {
                    rule = PruneRule::query;
                } else if (infer_essential(ua, U, W, graph)) {
                    rule = PruneRule::essential;
                } else if (infer_almost_sure(ua, U, W, graph)) {
                    rule = PruneRule::almost_sure;
                }
                if (!rule) {
                    continue;
                }
                ChoiceId c = graph.choice_of(v);
                graph.remove_choice(c);
                result.pruned[c] = true;
                result.facts.push_back({v, std::move(W), *rule});
                any = true;
            }
        }
        if (!any) {
            break;
        }
    }
    return result;
}

std::pair<WpMdp, ModelMap> collapse_equivalences(WpMdp const& model, UnderApproxGraph const& ua,
                                                 std::vector<bool> const& pruned) {
    std::size_t const n = model.num_states();
    auto scc = strongly_connected_components(
        ua.num_nodes(), [&](std::uint32_t node, auto&& visit) { ua.for_each_successor(node, visit); });

    // Component of each state's singleton node; states sharing a component are merged.
    std::vector<std::uint32_t> component(n);
    for (StateId s = 0; s < n; ++s) {
        component[s] = scc.component[*ua.find(singleton(s))];
    }
    std::unordered_map<std::uint32_t, StateId> representative;
    for (StateId s = 0; s < n; ++s) {
        auto [it, inserted] = representative.emplace(component[s], s);
        if (!inserted && model.is_target(s) && !model.is_target(it->second)) {
            it->second = s;
        }
    }
    QuotientRequest request;
    request.image.assign(n, 0);
    std::vector<StateId> class_index(n, 0);
    std::vector<bool> assigned(n, false);
    for (StateId s = 0; s < n; ++s) {
        StateId rep = representative.at(component[s]);
        if (!assigned[rep]) {
            assigned[rep] = true;
            class_index[rep] = static_cast<StateId>(request.class_names.size());
            request.class_names.push_back(model.state_name(rep));
            request.class_weights.push_back(model.weight(rep));
        }
        request.image[s] = class_index[rep];
    }
    if (!pruned.empty()) {
        request.keep_choice.resize(model.num_choices());
        for (ChoiceId c = 0; c < model.num_choices(); ++c) {
            request.keep_choice[c] = !pruned[c];
        }
    }
    request.drop_internal = true;
    return quotient_model(model, request);
}

std::pair<WpMdp, ModelMap> preprocess(WpMdp const& model) {
    auto [contracted, first] = contract_extremal(model);
    auto [quotient, second] = mec_quotient(contracted);
    return {std::move(quotient), first.then(second)};
}

ReductionResult reduce(WpMdp const& input, PruneConfig const& config, FactObserver const& observer) {
    auto const start = std::chrono::steady_clock::now();
    if (is_weighted(input.subclass()) || !is_trivially_parametric(input.subclass())) {
        throw ModelError("reduce needs a non-weighted trivially parametric model; de-weight or forget probabilities first");
    }
    ReductionReport report;
    report.instance = input.name();
    report.original = StageCounts::of(input);

    auto [model, map] = preprocess(input);
    report.preprocessed = StageCounts::of(model);

    PruneConfig effective = config;
    if (is_markov_chain(input) && effective.max_inner > 0) {
        effective.max_inner = 0;
        report.notes.push_back("Markov chain input: action pruning disabled");
    }

    for (std::size_t iteration = 0; iteration < effective.max_outer; ++iteration) {
        bool const skipped = iteration == 0 && effective.skip_first_inner && effective.max_inner > 0;
        MdpGraph graph(model);
        UnderApproxGraph ua(graph, effective);
        PruneConfig round = effective;
        if (skipped) {
            round.max_inner = 0;
        }
        PruneResult pruning = prune_actions(model, ua, graph, round);
        for (auto const& fact : pruning.facts) {
            auto const& choice = model.choice(graph.choice_of(fact.vertex));
            report.prune_log.push_back({iteration, model.state_name(choice.state), choice.action, fact.rule});
        }
        if (observer) {
            observer(model, ua, pruning.facts);
        }
        auto [collapsed, collapse_map] = collapse_equivalences(model, ua, pruning.pruned);
        std::size_t merged = model.num_states() - collapsed.num_states();
        auto [next, next_map] = preprocess(collapsed);
        map = map.then(collapse_map).then(next_map);
        model = std::move(next);

        IterationRecord record;
        record.iteration = iteration;
        record.inner_ran = round.max_inner > 0;
        record.pruned = pruning.count();
        record.merged = merged;
        record.after = StageCounts::of(model);
        report.iterations.push_back(record);
        if (!skipped && record.pruned == 0 && record.merged == 0) {
            break;
        }
    }
    report.reduced = StageCounts::of(model);
    if (report.completely_reduced()) {
        report.notes.push_back("completely reduced");
    }
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(model), std::move(map), std::move(report)};
}

}  // namespace nwr
