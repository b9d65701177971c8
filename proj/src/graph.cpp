#include "nwr/graph.hpp"

#include <algorithm>

namespace nwr {

MdpGraph::MdpGraph(WpMdp const& model)
    : num_states_(model.num_states()),
      state_choices_(model.num_states()),
      succ_(model.num_states() + model.num_choices()),
      pred_(model.num_states() + model.num_choices()),
      is_target_(model.num_states(), false),
      fail_(model.fail()) {
    if (!is_weighted(model.subclass())) {
        fin_ = model.fin();
    }
    for (StateId s = 0; s < num_states_; ++s) {
        is_target_[s] = model.is_target(s);
    }
    choice_state_.reserve(model.num_choices());
    for (ChoiceId c = 0; c < model.num_choices(); ++c) {
        auto const& choice = model.choice(c);
        choice_state_.push_back(choice.state);
        Vertex v = nature(c);
        state_choices_[choice.state].push_back(v);
        bool leaves_fail = false;
        for (auto const& transition : choice.transitions) {
            if (transition.probability && transition.probability->is_zero()) {
                continue;
            }
            if (std::find(succ_[v].begin(), succ_[v].end(), transition.target) != succ_[v].end()) {
                continue;
            }
            succ_[v].push_back(transition.target);
            pred_[transition.target].push_back(v);
            leaves_fail = leaves_fail || !fail_ || transition.target != *fail_;
        }
        std::sort(succ_[v].begin(), succ_[v].end());
        if (leaves_fail) {
            succ_[choice.state].push_back(v);
            pred_[v].push_back(choice.state);
        }
    }
    for (auto& list : pred_) {
        std::sort(list.begin(), list.end());
    }
}

bool MdpGraph::has_edge(Vertex from, Vertex to) const {
    auto const& list = succ_[from];
    return std::find(list.begin(), list.end(), to) != list.end();
}

void MdpGraph::remove_edge(Vertex from, Vertex to) {
    std::erase(succ_[from], to);
    std::erase(pred_[to], from);
}

void MdpGraph::remove_choice(ChoiceId c) {
    Vertex v = nature(c);
    for (Vertex p : std::vector<Vertex>(pred_[v])) {
        remove_edge(p, v);
    }
    for (Vertex s : std::vector<Vertex>(succ_[v])) {
        remove_edge(v, s);
    }
}

MdpGraph build_graph(WpMdp const& model) {
    return MdpGraph(model);
}

}  // namespace nwr
