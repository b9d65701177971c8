#include "nwr/mc_equiv.hpp"

#include "nwr/graph.hpp"
#include "nwr/graph_analysis.hpp"

#include <algorithm>
#include <numeric>

namespace nwr {

namespace {

class UnionFind {
   public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    /// Keeps the root of `into`.
    void merge(std::size_t x, std::size_t into) { parent_[find(x)] = find(into); }

   private:
    std::vector<std::size_t> parent_;
};

using Adjacency = std::vector<std::vector<StateId>>;

void check_preconditions(WpMdp const& mc) {
    if (is_weighted(mc.subclass()) || !is_trivially_parametric(mc.subclass())) {
        throw ModelError("equivalence classes need a non-weighted trivially parametric Markov chain");
    }
    for (StateId s = 0; s < mc.num_states(); ++s) {
        if (mc.num_choices_of(s) > 1) {
            throw ModelError("state '" + mc.state_name(s) + "' has several actions; not a Markov chain");
        }
    }
    MdpGraph graph(mc);
    auto zero = value0_vertices(graph);
    auto one = value1_vertices(graph);
    for (StateId s = 0; s < mc.num_states(); ++s) {
        if (!mc.is_target(s) && (zero[s] || one[s])) {
            throw ModelError("state '" + mc.state_name(s) + "' has an extremal value; contract extremal states first");
        }
    }
}

// States of the folded chain that reach z with probability 1 for every valuation:
// everything except what can reach a state with no path to z while avoiding z.
std::vector<bool> almost_surely_reaching(Adjacency const& succ, Adjacency const& pred, StateId z) {
    std::size_t const n = succ.size();
    std::vector<bool> reaches(n, false);
    std::vector<StateId> stack{z};
    reaches[z] = true;
    while (!stack.empty()) {
        StateId v = stack.back();
        stack.pop_back();
        for (StateId u : pred[v]) {
            if (!reaches[u]) {
                reaches[u] = true;
                stack.push_back(u);
            }
        }
    }
    std::vector<bool> escapes(n, false);
    for (StateId v = 0; v < n; ++v) {
        if (!reaches[v]) {
            escapes[v] = true;
            stack.push_back(v);
        }
    }
    while (!stack.empty()) {
        StateId v = stack.back();
        stack.pop_back();
        for (StateId u : pred[v]) {
            if (u != z && !escapes[u]) {
                escapes[u] = true;
                stack.push_back(u);
            }
        }
    }
    escapes.flip();
    return escapes;
}

}  // namespace

EquivPartition mc_equiv_classes(WpMdp const& mc) {
    check_preconditions(mc);
    std::size_t const n = mc.num_states();

    // Fold single-successor states into their successor until none is left; folding can
    // create self-loops, which are dropped.
    UnionFind folded(n);
    std::vector<std::vector<StateId>> members(n);
    for (StateId s = 0; s < n; ++s) {
        members[s] = {s};
    }
    bool changed = true;
    while (changed) {
        changed = false;
        for (StateId s = 0; s < n; ++s) {
            if (folded.find(s) != s || mc.is_target(s)) {
                continue;
            }
            std::vector<StateId> out;
            for (StateId member : members[s]) {
                for (ChoiceId c : mc.choices_of(member)) {
                    for (auto const& transition : mc.choice(c).transitions) {
                        StateId target = static_cast<StateId>(folded.find(transition.target));
                        if (target != s) {
                            out.push_back(target);
                        }
                    }
                }
            }
            std::sort(out.begin(), out.end());
            out.erase(std::unique(out.begin(), out.end()), out.end());
            if (out.size() == 1) {
                StateId into = out[0];
                folded.merge(s, into);
                members[into].insert(members[into].end(), members[s].begin(), members[s].end());
                members[s].clear();
                changed = true;
            }
        }
    }

    Adjacency succ(n);
    Adjacency pred(n);
    for (auto const& choice : mc.choices()) {
        StateId from = static_cast<StateId>(folded.find(choice.state));
        for (auto const& transition : choice.transitions) {
            StateId to = static_cast<StateId>(folded.find(transition.target));
            if (from != to) {
                succ[from].push_back(to);
                pred[to].push_back(from);
            }
        }
    }

    // reached_by[z][u]: u reaches z almost surely (folded states only).
    std::vector<StateId> roots;
    for (StateId s = 0; s < n; ++s) {
        if (folded.find(s) == s && !mc.is_target(s)) {
            roots.push_back(s);
        }
    }
    UnionFind classes(n);
    for (StateId s = 0; s < n; ++s) {
        classes.merge(s, folded.find(s));
    }
    std::vector<std::vector<bool>> reached_by(n);
    for (StateId z : roots) {
        reached_by[z] = almost_surely_reaching(succ, pred, z);
        for (StateId u : roots) {
            if (u != z && reached_by[z][u]) {
                classes.merge(u, z);
            }
        }
    }

    EquivPartition partition;
    partition.class_of.assign(n, 0);
    std::vector<std::size_t> index(n, n);
    for (StateId s = 0; s < n; ++s) {
        std::size_t root = classes.find(s);
        if (index[root] == n) {
            index[root] = partition.classes.size();
            partition.classes.emplace_back();
        }
        partition.class_of[s] = index[root];
        partition.classes[index[root]].members.push_back(s);
    }

    for (std::size_t k = 0; k < partition.classes.size(); ++k) {
        auto& cls = partition.classes[k];
        if (cls.members.size() < 2) {
            continue;
        }
        std::vector<StateId> exits;
        for (StateId s : cls.members) {
            bool leaves = false;
            for (ChoiceId c : mc.choices_of(s)) {
                for (auto const& transition : mc.choice(c).transitions) {
                    leaves = leaves || partition.class_of[transition.target] != k;
                }
            }
            if (leaves) {
                exits.push_back(s);
            }
        }
        // States almost surely reached from every member of the class.
        std::vector<StateId> common;
        for (StateId z : roots) {
            if (partition.class_of[z] != k) {
                continue;
            }
            bool all = std::all_of(cls.members.begin(), cls.members.end(),
                                   [&](StateId u) { return reached_by[z][folded.find(u)]; });
            if (all) {
                common.push_back(z);
            }
        }
        std::string const label = "class of '" + mc.state_name(cls.members.front()) + "'";
        if (exits.size() != 1) {
            partition.diagnostics.push_back(label + " has " + std::to_string(exits.size()) + " exits");
        }
        if (common.size() != 1) {
            partition.diagnostics.push_back(label + " has " + std::to_string(common.size()) +
                                            " commonly almost surely reached states");
        }
        if (!exits.empty()) {
            cls.exit = exits.front();
        } else if (!common.empty()) {
            cls.exit = common.front();
        }
    }
    return partition;
}

std::pair<WpMdp, ModelMap> mc_collapse(WpMdp const& mc, EquivPartition const& partition) {
    QuotientRequest request;
    request.image.resize(mc.num_states());
    for (StateId s = 0; s < mc.num_states(); ++s) {
        request.image[s] = static_cast<StateId>(partition.class_of.at(s));
    }
    request.keep_choice.assign(mc.num_choices(), true);
    for (auto const& cls : partition.classes) {
        StateId keeper = cls.exit.value_or(cls.members.front());
        request.class_names.push_back(mc.state_name(keeper));
        request.class_weights.push_back(mc.weight(keeper));
        for (StateId s : cls.members) {
            if (s == keeper) {
                continue;
            }
            for (ChoiceId c : mc.choices_of(s)) {
                request.keep_choice[c] = false;
            }
        }
    }
    request.drop_internal = true;
    return quotient_model(mc, request);
}

}  // namespace nwr
