#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace nwr {

struct SccResult {
    /// Component of each node. Components are numbered in reverse topological order
    /// (a component only has edges into components with a smaller or equal id).
    std::vector<std::uint32_t> component;
    std::uint32_t count = 0;
};

/// Iterative Tarjan over nodes 0..n-1. `for_each_successor(v, f)` must call f(w) for
/// every edge v -> w. Only nodes with `active[v]` (all when empty) take part.
template <typename Successors>
SccResult strongly_connected_components(std::size_t n, Successors&& for_each_successor,
                                        std::vector<bool> const& active = {}) {
    constexpr std::uint32_t unvisited = UINT32_MAX;
    SccResult result;
    result.component.assign(n, unvisited);
    std::vector<std::uint32_t> index(n, unvisited);
    std::vector<std::uint32_t> low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<std::uint32_t> stack;
    std::vector<std::pair<std::uint32_t, std::vector<std::uint32_t>>> call_stack;
    std::vector<std::size_t> position;
    std::uint32_t counter = 0;

    auto is_active = [&active](std::uint32_t v) { return active.empty() || active[v]; };
    auto push = [&](std::uint32_t v) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = true;
        std::vector<std::uint32_t> succ;
        for_each_successor(v, [&](std::uint32_t w) {
            if (is_active(w)) {
                succ.push_back(w);
            }
        });
        call_stack.emplace_back(v, std::move(succ));
        position.push_back(0);
    };

    for (std::uint32_t root = 0; root < n; ++root) {
        if (!is_active(root) || index[root] != unvisited) {
            continue;
        }
        push(root);
        while (!call_stack.empty()) {
            auto v = call_stack.back().first;
            auto& succ = call_stack.back().second;
            auto& pos = position.back();
            if (pos < succ.size()) {
                auto w = succ[pos++];
                if (index[w] == unvisited) {
                    push(w);
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            if (low[v] == index[v]) {
                std::uint32_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    result.component[w] = result.count;
                } while (w != v);
                ++result.count;
            }
            call_stack.pop_back();
            position.pop_back();
            if (!call_stack.empty()) {
                auto parent = call_stack.back().first;
                low[parent] = std::min(low[parent], low[v]);
            }
        }
    }
    return result;
}

}  // namespace nwr
