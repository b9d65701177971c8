#include "nwr/deweight.hpp"

#include "nwr/graph_analysis.hpp"

#include <algorithm>

namespace nwr {

namespace {

struct Shape {
    std::vector<StateId> targets;  // by increasing weight, t_0 first
};

Shape check_targets(WpMdp const& model) {
    if (!is_weighted(model.subclass())) {
        throw ModelError("de-weighting needs a weighted model");
    }
    Shape shape{model.targets()};
    if (shape.targets.empty() || *model.weight(shape.targets.front()) != 0) {
        throw ModelError("de-weighting needs a weight-0 target; normalize the targets first");
    }
    for (std::size_t i = 1; i < shape.targets.size(); ++i) {
        if (*model.weight(shape.targets[i]) == *model.weight(shape.targets[i - 1])) {
            throw ModelError("targets '" + model.state_name(shape.targets[i - 1]) + "' and '" +
                             model.state_name(shape.targets[i]) + "' share a weight; normalize the targets first");
        }
    }
    if (shape.targets.size() < 2) {
        throw ModelError("all target weights are zero; contract the model instead of de-weighting it");
    }
    return shape;
}

std::vector<std::string> all_actions(WpMdp const& model) {
    std::vector<std::string> actions;
    for (auto const& choice : model.choices()) {
        actions.push_back(choice.action);
    }
    return actions;
}

// Appends `extra[s]` after the original choices of every state, keeping the index
// bookkeeping in step with the model's grouping by state.
WpMdp assemble(WpMdp const& model, Subclass subclass, std::vector<std::string> params,
               std::vector<std::optional<Choice>> const& extra, DeweightMap& map) {
    auto names = model.state_names();
    map.fin = static_cast<StateId>(names.size());
    names.push_back(fresh_name("__fin", names));
    map.fail = static_cast<StateId>(names.size());
    names.push_back(fresh_name("__fail", names));
    map.added_states = {map.fin, map.fail};
    std::vector<std::optional<Rational>> weights(names.size());
    weights[map.fin] = Rational(1);
    weights[map.fail] = Rational(0);

    std::vector<Choice> choices;
    std::vector<ChoiceId> extra_index(model.num_states(), 0);
    map.state_injection.resize(model.num_states());
    map.choice_injection.resize(model.num_choices());
    for (StateId s = 0; s < model.num_states(); ++s) {
        map.state_injection[s] = s;
        for (ChoiceId c : model.choices_of(s)) {
            map.choice_injection[c] = static_cast<ChoiceId>(choices.size());
            choices.push_back(model.choice(c));
        }
        if (extra[s]) {
            extra_index[s] = static_cast<ChoiceId>(choices.size());
            choices.push_back(*extra[s]);
        }
    }
    for (StateId t : model.targets()) {
        map.added_choices.push_back(extra_index[t]);
    }
    return WpMdp(subclass, std::move(params), std::move(names), std::move(weights), std::move(choices), model.name());
}

}  // namespace

Vertex DeweightMap::map_vertex(MdpGraph const& from, MdpGraph const& to, Vertex v) const {
    if (from.is_state(v)) {
        return state_injection[v];
    }
    return to.nature(choice_injection[from.choice_of(v)]);
}

std::size_t DeweightMap::added_edges(WpMdp const& result) const {
    std::size_t edges = added_choices.size();
    for (ChoiceId c : added_choices) {
        edges += result.choice(c).transitions.size();
    }
    return edges;
}

std::pair<WpMdp, DeweightMap> deweight_pmdp(WpMdp const& input) {
    WpMdp model = is_trivially_parametric(input.subclass()) ? materialize_parameters(input) : input;
    Shape shape = check_targets(model);
    DeweightMap map;
    map.action = fresh_name("__deweight", all_actions(model));
    Rational z = 1 / *model.weight(shape.targets.back());
    z.canonicalize();
    map.z = z;

    StateId const fin = static_cast<StateId>(model.num_states());
    StateId const fail = fin + 1;
    std::vector<std::optional<Choice>> extra(model.num_states());
    for (StateId t : shape.targets) {
        Rational to_fin = *model.weight(t) * z;
        Rational to_fail = 1 - to_fin;
        Choice choice{t, map.action, {}};
        if (to_fin != 0) {
            choice.transitions.push_back({fin, Polynomial(to_fin)});
        }
        if (to_fail != 0) {
            choice.transitions.push_back({fail, Polynomial(to_fail)});
        }
        extra[t] = std::move(choice);
    }
    WpMdp result = assemble(model, Subclass::pmdp, model.params(), extra, map);
    return {std::move(result), std::move(map)};
}

std::pair<WpMdp, DeweightMap> deweight_tpmdp(WpMdp const& input) {
    WpMdp model = is_trivially_parametric(input.subclass()) ? input : forget_probabilities(input);
    Shape shape = check_targets(model);

    // Choices that cannot reach a positive-weight target get an edge to t_0; their value
    // stays 0 and the construction may assume it.
    StateId const t0 = shape.targets.front();
    MdpGraph graph(model);
    VertexMask positive(graph.num_vertices(), false);
    for (std::size_t i = 1; i < shape.targets.size(); ++i) {
        positive[shape.targets[i]] = true;
    }
    VertexMask reaches = can_reach(graph, positive);
    std::vector<Choice> choices = model.choices();
    std::size_t added = 0;
    for (ChoiceId c = 0; c < model.num_choices(); ++c) {
        if (reaches[graph.nature(c)]) {
            continue;
        }
        auto& transitions = choices[c].transitions;
        bool present = std::any_of(transitions.begin(), transitions.end(),
                                   [&](Transition const& t) { return t.target == t0; });
        if (!present) {
            transitions.push_back({t0, std::nullopt});
            ++added;
        }
    }
    if (added > 0) {
        model = WpMdp(model.subclass(), {}, model.state_names(), model.weights(), std::move(choices), model.name());
    }

    DeweightMap map;
    map.precondition_transitions = added;
    map.action = fresh_name("__deweight", all_actions(model));
    StateId const fin = static_cast<StateId>(model.num_states());
    StateId const fail = fin + 1;
    std::vector<std::optional<Choice>> extra(model.num_states());
    extra[t0] = Choice{t0, map.action, {{fail, std::nullopt}}};
    for (std::size_t i = 1; i < shape.targets.size(); ++i) {
        StateId t = shape.targets[i];
        extra[t] = Choice{t, map.action, {{fin, std::nullopt}, {shape.targets[i - 1], std::nullopt}}};
    }
    WpMdp result = assemble(model, Subclass::tpmdp, {}, extra, map);
    return {std::move(result), std::move(map)};
}

}  // namespace nwr
