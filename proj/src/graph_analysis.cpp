#include "nwr/graph_analysis.hpp"

#include "nwr/scc.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <unordered_set>

namespace nwr {

namespace {

void require_fin(MdpGraph const& graph) {
    if (!graph.fin()) {
        throw ModelError("graph analysis needs a non-weighted model with a fin target");
    }
}

VertexMask single(MdpGraph const& graph, Vertex v) {
    VertexMask mask(graph.num_vertices(), false);
    mask[v] = true;
    return mask;
}

// Nested fixpoint restricted to `region` (a list of vertices closed under nature successors).
// Returns the mask of region vertices that almost surely reach a goal state.
void attractor_within(MdpGraph const& graph, std::vector<Vertex> const& region, VertexMask const& goal,
                      VertexMask& in_region, VertexMask& result) {
    // U: region vertices that can reach the goal at all.
    VertexMask support(graph.num_vertices(), false);
    std::deque<Vertex> queue;
    for (Vertex v : region) {
        if (goal[v]) {
            support[v] = true;
            queue.push_back(v);
        }
    }
    while (!queue.empty()) {
        Vertex v = queue.front();
        queue.pop_front();
        for (Vertex p : graph.predecessors(v)) {
            if (in_region[p] && !support[p] && !goal[p]) {
                support[p] = true;
                queue.push_back(p);
            }
        }
    }
    while (true) {
        VertexMask attractor(graph.num_vertices(), false);
        for (Vertex v : region) {
            if (goal[v] && support[v]) {
                attractor[v] = true;
                queue.push_back(v);
            }
        }
        while (!queue.empty()) {
            Vertex v = queue.front();
            queue.pop_front();
            for (Vertex p : graph.predecessors(v)) {
                if (!support[p] || attractor[p] || goal[p]) {
                    continue;
                }
                if (graph.is_nature(p)) {
                    auto const& succ = graph.successors(p);
                    bool closed = std::all_of(succ.begin(), succ.end(), [&](Vertex w) { return support[w]; });
                    if (!closed) {
                        continue;
                    }
                }
                attractor[p] = true;
                queue.push_back(p);
            }
        }
        bool stable = true;
        for (Vertex v : region) {
            if (support[v] != attractor[v]) {
                stable = false;
                break;
            }
        }
        support = std::move(attractor);
        if (stable) {
            break;
        }
    }
    for (Vertex v : region) {
        result[v] = support[v];
        in_region[v] = false;
    }
}

}  // namespace

VertexMask can_reach(MdpGraph const& graph, VertexMask const& goal) {
    VertexMask result = goal;
    std::deque<Vertex> queue;
    for (Vertex v = 0; v < graph.num_vertices(); ++v) {
        if (goal[v]) {
            queue.push_back(v);
        }
    }
    while (!queue.empty()) {
        Vertex v = queue.front();
        queue.pop_front();
        for (Vertex p : graph.predecessors(v)) {
            if (!result[p]) {
                result[p] = true;
                queue.push_back(p);
            }
        }
    }
    return result;
}

VertexMask value0_vertices(MdpGraph const& graph) {
    require_fin(graph);
    VertexMask reach = can_reach(graph, single(graph, *graph.fin()));
    reach.flip();
    return reach;
}

VertexMask value1_vertices(MdpGraph const& graph) {
    require_fin(graph);
    return almost_sure_attractor(graph, single(graph, *graph.fin()));
}

VertexMask almost_sure_attractor(MdpGraph const& graph, VertexMask const& goal_states) {
    std::vector<Vertex> region(graph.num_vertices());
    for (Vertex v = 0; v < graph.num_vertices(); ++v) {
        region[v] = v;
    }
    VertexMask in_region(graph.num_vertices(), true);
    VertexMask result(graph.num_vertices(), false);
    attractor_within(graph, region, goal_states, in_region, result);
    return result;
}

bool is_essential(std::vector<Vertex> const& from, std::vector<Vertex> const& through, MdpGraph const& graph) {
    require_fin(graph);
    VertexMask blocked(graph.num_vertices(), false);
    for (Vertex w : through) {
        blocked[w] = true;
    }
    if (blocked[*graph.fin()]) {
        return true;
    }
    VertexMask seen(graph.num_vertices(), false);
    std::vector<Vertex> stack;
    for (Vertex u : from) {
        if (!blocked[u] && !seen[u]) {
            seen[u] = true;
            stack.push_back(u);
        }
    }
    while (!stack.empty()) {
        Vertex v = stack.back();
        stack.pop_back();
        if (v == *graph.fin()) {
            return false;
        }
        for (Vertex w : graph.successors(v)) {
            if (!blocked[w] && !seen[w]) {
                seen[w] = true;
                stack.push_back(w);
            }
        }
    }
    return true;
}

bool almost_sure_reach(std::vector<Vertex> const& from, std::vector<StateId> const& goal_states,
                       MdpGraph const& graph) {
    VertexMask goal(graph.num_vertices(), false);
    for (StateId s : goal_states) {
        goal[s] = true;
    }
    // Explore forward from `from`, stopping at goal states: with the targets replaced,
    // goal states are sinks and everything else outside the region is irrelevant.
    VertexMask in_region(graph.num_vertices(), false);
    std::vector<Vertex> region;
    std::vector<Vertex> stack;
    for (Vertex u : from) {
        if (!in_region[u]) {
            in_region[u] = true;
            region.push_back(u);
            stack.push_back(u);
        }
    }
    while (!stack.empty()) {
        Vertex v = stack.back();
        stack.pop_back();
        if (goal[v]) {
            continue;
        }
        for (Vertex w : graph.successors(v)) {
            if (!in_region[w]) {
                in_region[w] = true;
                region.push_back(w);
                stack.push_back(w);
            }
        }
    }
    VertexMask result(graph.num_vertices(), false);
    attractor_within(graph, region, goal, in_region, result);
    return std::all_of(from.begin(), from.end(), [&](Vertex u) { return result[u]; });
}

MecDecomposition mec_decomposition(MdpGraph const& graph) {
    std::size_t const n = graph.num_states();
    std::vector<bool> candidate(n, false);
    std::vector<bool> allowed(graph.num_choices(), false);
    for (StateId s = 0; s < n; ++s) {
        candidate[s] = !graph.target_mask()[s];
    }
    for (ChoiceId c = 0; c < graph.num_choices(); ++c) {
        Vertex v = graph.nature(c);
        allowed[c] = !graph.successors(v).empty() && graph.has_edge(graph.state_of(v), v);
    }

    SccResult scc;
    while (true) {
        // Choices may only stay if all successors are still candidates.
        for (ChoiceId c = 0; c < graph.num_choices(); ++c) {
            if (!allowed[c]) {
                continue;
            }
            Vertex v = graph.nature(c);
            if (!candidate[graph.state_of(v)]) {
                allowed[c] = false;
                continue;
            }
            for (Vertex t : graph.successors(v)) {
                if (!candidate[t]) {
                    allowed[c] = false;
                    break;
                }
            }
        }
        scc = strongly_connected_components(
            n,
            [&](std::uint32_t s, auto&& visit) {
                for (Vertex v : graph.all_choices_of(s)) {
                    if (allowed[graph.choice_of(v)]) {
                        for (Vertex t : graph.successors(v)) {
                            visit(t);
                        }
                    }
                }
            },
            candidate);
        bool changed = false;
        for (ChoiceId c = 0; c < graph.num_choices(); ++c) {
            if (!allowed[c]) {
                continue;
            }
            Vertex v = graph.nature(c);
            auto component = scc.component[graph.state_of(v)];
            for (Vertex t : graph.successors(v)) {
                if (scc.component[t] != component) {
                    allowed[c] = false;
                    changed = true;
                    break;
                }
            }
        }
        for (StateId s = 0; s < n; ++s) {
            if (!candidate[s]) {
                continue;
            }
            bool any = false;
            for (Vertex v : graph.all_choices_of(s)) {
                any = any || allowed[graph.choice_of(v)];
            }
            if (!any) {
                candidate[s] = false;
                changed = true;
            }
        }
        if (!changed) {
            break;
        }
    }

    MecDecomposition result;
    result.class_of.assign(n, 0);
    std::map<std::uint32_t, std::uint32_t> mec_of_component;
    std::uint32_t next_class = 0;
    for (StateId s = 0; s < n; ++s) {
        if (!candidate[s]) {
            result.class_of[s] = next_class++;
            continue;
        }
        auto [it, inserted] = mec_of_component.emplace(scc.component[s], static_cast<std::uint32_t>(result.mecs.size()));
        if (inserted) {
            result.mecs.emplace_back();
            result.class_of[s] = next_class++;
            // Remember the class id through the first member.
            result.mecs.back().states.push_back(s);
        } else {
            result.mecs[it->second].states.push_back(s);
            result.class_of[s] = result.class_of[result.mecs[it->second].states.front()];
        }
    }
    for (ChoiceId c = 0; c < graph.num_choices(); ++c) {
        if (allowed[c]) {
            auto s = graph.state_of(graph.nature(c));
            result.mecs[mec_of_component.at(scc.component[s])].choices.push_back(c);
        }
    }
    result.num_classes = next_class;
    return result;
}

std::pair<WpMdp, ModelMap> quotient_model(WpMdp const& model, QuotientRequest const& request) {
    bool const trivially = is_trivially_parametric(model.subclass());
    std::size_t const classes = request.class_names.size();
    std::vector<Choice> choices;
    ModelMap map;
    map.state_image = request.image;
    std::vector<std::vector<std::string>> used_actions(classes);
    std::map<std::pair<StateId, std::vector<StateId>>, std::size_t> merged;

    for (ChoiceId c = 0; c < model.num_choices(); ++c) {
        if (!request.keep_choice.empty() && !request.keep_choice[c]) {
            continue;
        }
        auto const& choice = model.choice(c);
        StateId cls = request.image[choice.state];
        if (request.class_weights[cls]) {
            continue;
        }
        std::map<StateId, std::optional<Polynomial>> grouped;
        for (auto const& transition : choice.transitions) {
            StateId target = request.image[transition.target];
            if (request.drop_internal && target == cls) {
                continue;
            }
            auto [it, inserted] = grouped.try_emplace(target, transition.probability);
            if (!inserted && it->second && transition.probability) {
                *it->second += *transition.probability;
            }
        }
        Choice reduced{cls, choice.action, {}};
        for (auto& [target, probability] : grouped) {
            if (probability && probability->is_zero()) {
                continue;
            }
            reduced.transitions.push_back({target, std::move(probability)});
        }
        if (reduced.transitions.empty()) {
            continue;
        }
        if (trivially) {
            std::vector<StateId> key;
            for (auto const& t : reduced.transitions) {
                key.push_back(t.target);
            }
            auto [it, inserted] = merged.try_emplace({cls, std::move(key)}, choices.size());
            if (!inserted) {
                map.choice_sources[it->second].push_back(c);
                continue;
            }
        }
        reduced.action = fresh_name(reduced.action, used_actions[cls]);
        used_actions[cls].push_back(reduced.action);
        choices.push_back(std::move(reduced));
        map.choice_sources.push_back({c});
    }
    // The model constructor groups choices by state; mirror that order in the map.
    std::vector<std::size_t> order(choices.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t lhs, std::size_t rhs) { return choices[lhs].state < choices[rhs].state; });
    std::vector<std::vector<ChoiceId>> sources;
    sources.reserve(order.size());
    for (auto i : order) {
        sources.push_back(std::move(map.choice_sources[i]));
    }
    map.choice_sources = std::move(sources);
    std::vector<std::string> params = trivially ? std::vector<std::string>{} : model.params();
    WpMdp result(model.subclass(), std::move(params), request.class_names, request.class_weights, std::move(choices),
                 model.name());
    return {std::move(result), std::move(map)};
}

std::pair<WpMdp, ModelMap> contract_extremal(WpMdp const& model) {
    MdpGraph graph(model);
    require_fin(graph);
    VertexMask zero = value0_vertices(graph);
    VertexMask one = value1_vertices(graph);
    StateId fin = *graph.fin();
    StateId fail = *graph.fail();

    QuotientRequest request;
    request.image.assign(model.num_states(), 0);
    std::vector<StateId> new_index(model.num_states(), 0);
    for (StateId s = 0; s < model.num_states(); ++s) {
        bool survives = s == fin || s == fail || (!zero[s] && !one[s]);
        if (survives) {
            new_index[s] = static_cast<StateId>(request.class_names.size());
            request.class_names.push_back(model.state_name(s));
            request.class_weights.push_back(model.weight(s));
        }
    }
    for (StateId s = 0; s < model.num_states(); ++s) {
        if (s == fin || one[s]) {
            request.image[s] = new_index[fin];
        } else if (s == fail || zero[s]) {
            request.image[s] = new_index[fail];
        } else {
            request.image[s] = new_index[s];
        }
    }
    request.keep_choice.assign(model.num_choices(), false);
    for (ChoiceId c = 0; c < model.num_choices(); ++c) {
        StateId s = model.choice(c).state;
        request.keep_choice[c] = !zero[s] && !one[s] && !zero[graph.nature(c)];
    }
    return quotient_model(model, request);
}

std::pair<WpMdp, ModelMap> mec_quotient(WpMdp const& model) {
    if (!is_trivially_parametric(model.subclass())) {
        throw ModelError("the MEC quotient is defined for trivially parametric models only");
    }
    MdpGraph graph(model);
    MecDecomposition mecs = mec_decomposition(graph);
    QuotientRequest request;
    request.image.assign(model.num_states(), 0);
    std::map<std::uint32_t, StateId> class_index;
    for (StateId s = 0; s < model.num_states(); ++s) {
        auto [it, inserted] = class_index.emplace(mecs.class_of[s], static_cast<StateId>(request.class_names.size()));
        if (inserted) {
            request.class_names.push_back(model.state_name(s));
            request.class_weights.push_back(model.weight(s));
        }
        request.image[s] = it->second;
    }
    request.drop_internal = true;
    return quotient_model(model, request);
}

}  // namespace nwr
