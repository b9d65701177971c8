#include "support/harness.hpp"

#include "nwr/graph_analysis.hpp"
#include "support/fixtures.hpp"

#include <algorithm>

namespace nwr::testing {

namespace {

template <typename Check>
std::vector<std::string> over_samples(WpMdp const& model, std::size_t samples, std::uint64_t seed,
                                      SamplingProfile profile, Check&& check) {
    std::vector<std::string> failures;
    MdpGraph graph(model);
    for (std::size_t i = 0; i < samples; ++i) {
        Valuation valuation = sample_valuation(model, seed + i, profile);
        auto values = vertex_values(graph, solve_exact(model, instantiate(model, valuation)));
        check(values, i, failures);
    }
    return failures;
}

Rational max_over(std::vector<Rational> const& values, VertexSet const& set) {
    Rational best = 0;
    for (Vertex w : set) {
        best = std::max(best, values[w]);
    }
    return best;
}

}  // namespace

std::vector<std::string> falsify_edges(WpMdp const& model, UnderApproxGraph const& ua, std::size_t samples,
                                       std::uint64_t seed, SamplingProfile profile) {
    return over_samples(model, samples, seed, profile, [&](auto const& values, std::size_t i, auto& failures) {
        for (NodeId from = 0; from < ua.num_nodes(); ++from) {
            for (NodeId to : ua.successors(from)) {
                Rational bound = max_over(values, ua.members(to));
                for (Vertex u : ua.members(from)) {
                    if (values[u] > bound) {
                        failures.push_back(model.name() + ": sample " + std::to_string(i) + " breaks edge " +
                                           std::to_string(from) + " -> " + std::to_string(to) + " at vertex " +
                                           std::to_string(u));
                    }
                }
            }
        }
    });
}

std::vector<std::string> falsify_facts(WpMdp const& model, std::vector<NwrFact> const& facts, std::size_t samples,
                                       std::uint64_t seed, SamplingProfile profile) {
    return over_samples(model, samples, seed, profile, [&](auto const& values, std::size_t i, auto& failures) {
        for (auto const& fact : facts) {
            if (values[fact.vertex] > max_over(values, fact.others)) {
                failures.push_back(model.name() + ": sample " + std::to_string(i) + " breaks the " +
                                   std::string(to_string(fact.rule)) + " fact for vertex " +
                                   std::to_string(fact.vertex));
            }
        }
    });
}

// u reaches z almost surely iff every state u reaches while avoiding z can still reach z.
bool reaches_almost_surely(WpMdp const& mc, StateId u, StateId z) {
    std::size_t const n = mc.num_states();
    auto successors = [&](StateId s) {
        std::vector<StateId> out;
        for (ChoiceId c : mc.choices_of(s)) {
            for (auto const& t : mc.choice(c).transitions) {
                out.push_back(t.target);
            }
        }
        return out;
    };
    auto can_reach_z = [&](StateId from) {
        std::vector<bool> seen(n, false);
        std::vector<StateId> stack{from};
        seen[from] = true;
        while (!stack.empty()) {
            StateId s = stack.back();
            stack.pop_back();
            if (s == z) {
                return true;
            }
            for (StateId t : successors(s)) {
                if (!seen[t]) {
                    seen[t] = true;
                    stack.push_back(t);
                }
            }
        }
        return false;
    };
    std::vector<bool> seen(n, false);
    std::vector<StateId> stack{u};
    seen[u] = true;
    while (!stack.empty()) {
        StateId s = stack.back();
        stack.pop_back();
        if (s == z) {
            continue;
        }
        if (!can_reach_z(s)) {
            return false;
        }
        for (StateId t : successors(s)) {
            if (!seen[t]) {
                seen[t] = true;
                stack.push_back(t);
            }
        }
    }
    return true;
}

// Pairwise: u and w are related iff some state is almost surely reached from both.
std::vector<std::vector<bool>> brute_force_relation(WpMdp const& mc) {
    std::size_t const n = mc.num_states();
    std::vector<std::vector<bool>> related(n, std::vector<bool>(n, false));
    for (StateId u = 0; u < n; ++u) {
        for (StateId w = 0; w < n; ++w) {
            if (u == w) {
                related[u][w] = true;
                continue;
            }
            if (mc.is_target(u) || mc.is_target(w)) {
                continue;
            }
            for (StateId z = 0; z < n && !related[u][w]; ++z) {
                related[u][w] = !mc.is_target(z) && reaches_almost_surely(mc, u, z) && reaches_almost_surely(mc, w, z);
            }
        }
    }
    return related;
}

WpMdp contracted_chain(std::mt19937_64& rng, std::size_t states) {
    return contract_extremal(random_tpmc(rng, states)).first;
}

}  // namespace nwr::testing
