#include "nwr/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <random>
#include <set>

namespace nwr {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed ^ splitmix64(index + 1));
}

std::vector<Rational> sample_row(std::size_t k, std::mt19937_64& rng, SamplingProfile profile) {
    std::vector<Rational> row(k);
    if (k == 1) {
        row[0] = 1;
        return row;
    }
    if (profile == SamplingProfile::adversarial) {
        // Stays full support for any out-degree: past 32 successors epsilon shrinks.
        Rational epsilon = k <= 32 ? Rational(1, 64) : Rational(1, 2 * static_cast<unsigned long>(k));
        std::uniform_int_distribution<std::size_t> pick(0, k - 1);
        std::size_t heavy = pick(rng);
        for (std::size_t i = 0; i < k; ++i) {
            row[i] = epsilon;
        }
        row[heavy] = Rational(1) - epsilon * static_cast<unsigned long>(k - 1);
        return row;
    }
    std::uniform_int_distribution<int> weight(1, 64);
    long total = 0;
    std::vector<long> weights(k);
    for (auto& w : weights) {
        w = weight(rng);
        total += w;
    }
    for (std::size_t i = 0; i < k; ++i) {
        row[i] = Rational(weights[i], total);
        row[i].canonicalize();
    }
    return row;
}

bool is_free(Transition const& transition) {
    return !transition.probability || !transition.probability->is_zero();
}

// Sparse Gaussian elimination on a nonsingular M-matrix (no pivoting needed).
std::vector<Rational> solve_sparse(std::vector<std::map<std::uint32_t, Rational>> rows, std::vector<Rational> rhs) {
    std::size_t const n = rows.size();
    std::vector<std::set<std::uint32_t>> column_rows(n);
    for (std::uint32_t r = 0; r < n; ++r) {
        for (auto const& [c, value] : rows[r]) {
            column_rows[c].insert(r);
        }
    }
    for (std::uint32_t k = 0; k < n; ++k) {
        Rational pivot = rows[k].at(k);
        std::vector<std::uint32_t> targets;
        for (auto r : column_rows[k]) {
            if (r > k) {
                targets.push_back(r);
            }
        }
        for (auto r : targets) {
            Rational factor = rows[r].at(k) / pivot;
            for (auto const& [c, value] : rows[k]) {
                auto& entry = rows[r][c];
                bool was_zero = entry == 0;
                entry -= factor * value;
                if (entry == 0) {
                    rows[r].erase(c);
                    column_rows[c].erase(r);
                } else if (was_zero) {
                    column_rows[c].insert(r);
                }
            }
            rhs[r] -= factor * rhs[k];
        }
    }
    std::vector<Rational> x(n);
    for (std::size_t i = n; i-- > 0;) {
        Rational sum = rhs[i];
        for (auto const& [c, value] : rows[i]) {
            if (c > i) {
                sum -= value * x[c];
            }
        }
        x[i] = sum / rows[i].at(static_cast<std::uint32_t>(i));
    }
    return x;
}

struct Solver {
    WpMdp const& model;
    ChoiceDistributions const& dist;
    std::vector<bool> positive_reach;  // can reach a positive-weight target
    std::vector<bool> free_state;      // non-target with a choice and positive_reach

    Solver(WpMdp const& m, ChoiceDistributions const& d) : model(m), dist(d) {
        if (dist.size() != model.num_choices()) {
            throw OracleError("distribution count does not match the number of choices");
        }
        std::size_t const n = model.num_states();
        std::vector<std::vector<StateId>> pred(n);
        for (ChoiceId c = 0; c < model.num_choices(); ++c) {
            auto const& choice = model.choice(c);
            if (dist[c].size() != choice.transitions.size()) {
                throw OracleError("distribution of choice '" + choice.action + "' has the wrong length");
            }
            for (std::size_t k = 0; k < choice.transitions.size(); ++k) {
                if (dist[c][k] > 0) {
                    pred[choice.transitions[k].target].push_back(choice.state);
                }
            }
        }
        positive_reach.assign(n, false);
        std::deque<StateId> queue;
        for (StateId s = 0; s < n; ++s) {
            if (model.weight(s) && *model.weight(s) > 0) {
                positive_reach[s] = true;
                queue.push_back(s);
            }
        }
        while (!queue.empty()) {
            StateId t = queue.front();
            queue.pop_front();
            for (StateId s : pred[t]) {
                if (!positive_reach[s]) {
                    positive_reach[s] = true;
                    queue.push_back(s);
                }
            }
        }
        free_state.assign(n, false);
        for (StateId s = 0; s < n; ++s) {
            free_state[s] = !model.is_target(s) && positive_reach[s];
        }
    }

    Rational choice_value(ChoiceId c, std::vector<Rational> const& values) const {
        Rational sum(0);
        auto const& choice = model.choice(c);
        for (std::size_t k = 0; k < choice.transitions.size(); ++k) {
            if (dist[c][k] != 0) {
                sum += dist[c][k] * values[choice.transitions[k].target];
            }
        }
        return sum;
    }

    // Value of a memoryless strategy (one choice per free state).
    std::vector<Rational> evaluate(std::vector<std::optional<ChoiceId>> const& strategy) const {
        std::size_t const n = model.num_states();
        std::vector<Rational> values(n, Rational(0));
        std::vector<std::vector<StateId>> pred(n);
        for (StateId s = 0; s < n; ++s) {
            if (model.is_target(s)) {
                values[s] = *model.weight(s);
            } else if (strategy[s]) {
                auto const& choice = model.choice(*strategy[s]);
                for (std::size_t k = 0; k < choice.transitions.size(); ++k) {
                    if (dist[*strategy[s]][k] > 0) {
                        pred[choice.transitions[k].target].push_back(s);
                    }
                }
            }
        }
        std::vector<bool> reaches(n, false);
        std::deque<StateId> queue;
        for (StateId s = 0; s < n; ++s) {
            if (model.weight(s) && *model.weight(s) > 0) {
                reaches[s] = true;
                queue.push_back(s);
            }
        }
        while (!queue.empty()) {
            StateId t = queue.front();
            queue.pop_front();
            for (StateId s : pred[t]) {
                if (!reaches[s]) {
                    reaches[s] = true;
                    queue.push_back(s);
                }
            }
        }
        std::vector<std::uint32_t> index(n, UINT32_MAX);
        std::vector<StateId> unknowns;
        for (StateId s = 0; s < n; ++s) {
            if (reaches[s] && !model.is_target(s)) {
                index[s] = static_cast<std::uint32_t>(unknowns.size());
                unknowns.push_back(s);
            }
        }
        std::vector<std::map<std::uint32_t, Rational>> rows(unknowns.size());
        std::vector<Rational> rhs(unknowns.size(), Rational(0));
        for (std::uint32_t i = 0; i < unknowns.size(); ++i) {
            StateId s = unknowns[i];
            ChoiceId c = *strategy[s];
            rows[i][i] += 1;
            auto const& choice = model.choice(c);
            for (std::size_t k = 0; k < choice.transitions.size(); ++k) {
                Rational const& p = dist[c][k];
                if (p == 0) {
                    continue;
                }
                StateId t = choice.transitions[k].target;
                if (model.is_target(t)) {
                    rhs[i] += p * *model.weight(t);
                } else if (index[t] != UINT32_MAX) {
                    rows[i][index[t]] -= p;
                }
            }
            for (auto it = rows[i].begin(); it != rows[i].end();) {
                it = it->second == 0 ? rows[i].erase(it) : std::next(it);
            }
        }
        auto x = solve_sparse(std::move(rows), std::move(rhs));
        for (std::uint32_t i = 0; i < unknowns.size(); ++i) {
            values[unknowns[i]] = x[i];
        }
        return values;
    }

    ExactValues finish(std::vector<Rational> values) const {
        ExactValues result;
        result.state = std::move(values);
        result.choice.resize(model.num_choices());
        result.strategy.assign(model.num_states(), std::nullopt);
        for (ChoiceId c = 0; c < model.num_choices(); ++c) {
            result.choice[c] = choice_value(c, result.state);
        }
        for (StateId s = 0; s < model.num_states(); ++s) {
            if (!free_state[s]) {
                continue;
            }
            for (ChoiceId c : model.choices_of(s)) {
                if (!result.strategy[s] || result.choice[c] > result.choice[*result.strategy[s]]) {
                    result.strategy[s] = c;
                }
            }
        }
        return result;
    }
};

}  // namespace

ChoiceDistributions instantiate(WpMdp const& model, Valuation const& valuation) {
    if (is_trivially_parametric(model.subclass())) {
        if (valuation.distributions.size() != model.num_choices()) {
            throw OracleError("valuation does not provide a distribution for every choice");
        }
        return valuation.distributions;
    }
    ChoiceDistributions result(model.num_choices());
    for (ChoiceId c = 0; c < model.num_choices(); ++c) {
        for (auto const& transition : model.choice(c).transitions) {
            result[c].push_back(transition.probability->evaluate(valuation.assignment));
        }
    }
    return result;
}

bool is_graph_preserving(WpMdp const& model, ChoiceDistributions const& distributions, std::string* reason) {
    auto fail = [reason](std::string message) {
        if (reason) {
            *reason = std::move(message);
        }
        return false;
    };
    if (distributions.size() != model.num_choices()) {
        return fail("wrong number of rows");
    }
    for (ChoiceId c = 0; c < model.num_choices(); ++c) {
        auto const& choice = model.choice(c);
        std::string where = model.state_name(choice.state) + ":" + choice.action;
        if (distributions[c].size() != choice.transitions.size()) {
            return fail("row " + where + " has the wrong length");
        }
        Rational sum(0);
        for (std::size_t k = 0; k < choice.transitions.size(); ++k) {
            Rational const& p = distributions[c][k];
            if (p < 0) {
                return fail("negative probability in row " + where);
            }
            if (is_free(choice.transitions[k]) && p == 0) {
                return fail("zero probability on a support transition of row " + where);
            }
            if (!is_free(choice.transitions[k]) && p != 0) {
                return fail("non-zero probability on a zero transition of row " + where);
            }
            sum += p;
        }
        if (sum != 1) {
            return fail("row " + where + " sums to " + to_string(sum));
        }
    }
    return true;
}

namespace {

ChoiceDistributions sample_support(WpMdp const& model, std::uint64_t seed, SamplingProfile profile) {
    if (profile == SamplingProfile::mixed) {
        profile = (seed & 1) ? SamplingProfile::adversarial : SamplingProfile::uniform;
    }
    std::mt19937_64 rng(seed);
    ChoiceDistributions result(model.num_choices());
    for (ChoiceId c = 0; c < model.num_choices(); ++c) {
        auto const& transitions = model.choice(c).transitions;
        std::vector<std::size_t> support;
        for (std::size_t k = 0; k < transitions.size(); ++k) {
            if (is_free(transitions[k])) {
                support.push_back(k);
            }
        }
        result[c].assign(transitions.size(), Rational(0));
        if (support.empty()) {
            continue;
        }
        auto row = sample_row(support.size(), rng, profile);
        for (std::size_t i = 0; i < support.size(); ++i) {
            result[c][support[i]] = row[i];
        }
    }
    return result;
}

}  // namespace

Valuation sample_valuation(WpMdp const& model, std::uint64_t seed, SamplingProfile profile) {
    if (!is_trivially_parametric(model.subclass())) {
        throw OracleError("sampling graph-preserving valuations of general parametric models is not supported");
    }
    Valuation result;
    result.distributions = sample_support(model, seed, profile);
    return result;
}

ExactValues solve_exact(WpMdp const& model, ChoiceDistributions const& distributions, ExactLimits const& limits) {
    if (model.num_states() > limits.max_states) {
        throw OracleError("model has " + std::to_string(model.num_states()) + " states; exact solving is capped at " +
                          std::to_string(limits.max_states));
    }
    Solver solver(model, distributions);
    std::size_t const n = model.num_states();

    // Initial strategy: backward BFS from the positive targets, so that every free state
    // moves closer to them and the induced chain reaches them with positive probability.
    std::vector<std::optional<ChoiceId>> strategy(n);
    std::vector<std::vector<std::pair<StateId, ChoiceId>>> pred(n);
    for (ChoiceId c = 0; c < model.num_choices(); ++c) {
        auto const& choice = model.choice(c);
        for (std::size_t k = 0; k < choice.transitions.size(); ++k) {
            if (distributions[c][k] > 0) {
                pred[choice.transitions[k].target].emplace_back(choice.state, c);
            }
        }
    }
    std::vector<bool> seen(n, false);
    std::deque<StateId> queue;
    for (StateId s = 0; s < n; ++s) {
        if (model.weight(s) && *model.weight(s) > 0) {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while (!queue.empty()) {
        StateId t = queue.front();
        queue.pop_front();
        for (auto [s, c] : pred[t]) {
            if (!seen[s] && !model.is_target(s)) {
                seen[s] = true;
                strategy[s] = c;
                queue.push_back(s);
            }
        }
    }

    std::vector<Rational> values = solver.evaluate(strategy);
    while (true) {
        bool improved = false;
        for (StateId s = 0; s < n; ++s) {
            if (!solver.free_state[s]) {
                continue;
            }
            std::optional<ChoiceId> best;
            Rational best_value = values[s];
            for (ChoiceId c : model.choices_of(s)) {
                Rational q = solver.choice_value(c, values);
                if (q > best_value) {
                    best_value = q;
                    best = c;
                }
            }
            if (best) {
                strategy[s] = best;
                improved = true;
            }
        }
        if (!improved) {
            break;
        }
        values = solver.evaluate(strategy);
    }
    return solver.finish(std::move(values));
}

ExactValues solve_exact_enumeration(WpMdp const& model, ChoiceDistributions const& distributions,
                                    ExactLimits const& limits) {
    if (model.num_states() > limits.max_states) {
        throw OracleError("model too large for exact solving");
    }
    Solver solver(model, distributions);
    std::size_t const n = model.num_states();
    std::vector<StateId> deciders;
    std::uint64_t count = 1;
    for (StateId s = 0; s < n; ++s) {
        if (solver.free_state[s] && model.num_choices_of(s) > 0) {
            deciders.push_back(s);
            count *= model.num_choices_of(s);
            if (count > limits.max_strategies) {
                throw OracleError("more than " + std::to_string(limits.max_strategies) + " memoryless strategies");
            }
        }
    }
    std::vector<std::size_t> digit(deciders.size(), 0);
    std::vector<Rational> best(n, Rational(0));
    bool first = true;
    while (true) {
        std::vector<std::optional<ChoiceId>> strategy(n);
        for (std::size_t i = 0; i < deciders.size(); ++i) {
            strategy[deciders[i]] = *model.choices_of(deciders[i]).begin() + static_cast<ChoiceId>(digit[i]);
        }
        auto values = solver.evaluate(strategy);
        for (StateId s = 0; s < n; ++s) {
            if (first || values[s] > best[s]) {
                best[s] = values[s];
            }
        }
        first = false;
        std::size_t i = 0;
        for (; i < deciders.size(); ++i) {
            if (++digit[i] < model.num_choices_of(deciders[i])) {
                break;
            }
            digit[i] = 0;
        }
        if (i == deciders.size()) {
            break;
        }
    }
    return solver.finish(std::move(best));
}

ApproxValues solve_iterative(WpMdp const& model, ChoiceDistributions const& distributions, double tolerance,
                             std::size_t max_iterations) {
    Solver solver(model, distributions);
    std::size_t const n = model.num_states();
    std::vector<std::vector<double>> p(model.num_choices());
    for (ChoiceId c = 0; c < model.num_choices(); ++c) {
        for (auto const& value : distributions[c]) {
            p[c].push_back(value.get_d());
        }
    }
    ApproxValues result;
    result.state.assign(n, 0.0);
    for (StateId s = 0; s < n; ++s) {
        if (model.is_target(s)) {
            result.state[s] = model.weight(s)->get_d();
        }
    }
    auto q_value = [&](ChoiceId c) {
        double sum = 0.0;
        auto const& transitions = model.choice(c).transitions;
        for (std::size_t k = 0; k < transitions.size(); ++k) {
            sum += p[c][k] * result.state[transitions[k].target];
        }
        return sum;
    };
    while (result.iterations < max_iterations) {
        ++result.iterations;
        double residual = 0.0;
        for (StateId s = 0; s < n; ++s) {
            if (!solver.free_state[s]) {
                continue;
            }
            double best = 0.0;
            for (ChoiceId c : model.choices_of(s)) {
                best = std::max(best, q_value(c));
            }
            residual = std::max(residual, std::abs(best - result.state[s]));
            result.state[s] = best;
        }
        result.residual = residual;
        if (residual <= tolerance) {
            result.converged = true;
            break;
        }
    }
    result.choice.resize(model.num_choices());
    result.strategy.assign(n, std::nullopt);
    for (ChoiceId c = 0; c < model.num_choices(); ++c) {
        result.choice[c] = q_value(c);
        StateId s = model.choice(c).state;
        if (solver.free_state[s] && (!result.strategy[s] || result.choice[c] > result.choice[*result.strategy[s]])) {
            result.strategy[s] = c;
        }
    }
    return result;
}

std::vector<Rational> vertex_values(MdpGraph const& graph, ExactValues const& values) {
    std::vector<Rational> result(graph.num_vertices());
    for (Vertex v = 0; v < graph.num_vertices(); ++v) {
        result[v] = values.vertex(graph, v);
    }
    return result;
}

namespace {

struct Lifted {
    ChoiceDistributions distributions;
    std::string problem;
};

// Moves a valuation of `original` onto `reduced`: every reduced choice takes the
// distribution of its best source choice, aggregated by image and conditioned on leaving
// the choice's own class when the reduced choice has no self-loop.
Lifted lift(WpMdp const& original, ChoiceDistributions const& dist, std::vector<double> const& values,
            WpMdp const& reduced, ModelMap const& map) {
    Lifted result;
    result.distributions.resize(reduced.num_choices());
    if (map.choice_sources.size() != reduced.num_choices() || map.state_image.size() != original.num_states()) {
        result.problem = "map does not match the models";
        return result;
    }
    for (ChoiceId rc = 0; rc < reduced.num_choices(); ++rc) {
        auto const& choice = reduced.choice(rc);
        StateId own = choice.state;
        bool keeps_loop = std::any_of(choice.transitions.begin(), choice.transitions.end(),
                                      [own](Transition const& t) { return t.target == own; });
        auto& out = result.distributions[rc];
        out.assign(choice.transitions.size(), Rational(0));
        if (map.choice_sources[rc].empty()) {
            if (choice.transitions.size() == 1) {
                out[0] = 1;
                continue;
            }
            result.problem = "choice " + reduced.state_name(own) + ":" + choice.action + " has no source";
            return result;
        }
        std::optional<std::map<StateId, Rational>> best;
        double best_value = -1.0;
        for (ChoiceId c : map.choice_sources[rc]) {
            auto const& source = original.choice(c);
            std::map<StateId, Rational> mass;
            Rational total(0);
            double weighted = 0.0;
            for (std::size_t k = 0; k < source.transitions.size(); ++k) {
                if (dist[c][k] == 0) {
                    continue;
                }
                StateId image = map.state_image[source.transitions[k].target];
                if (image == own && !keeps_loop) {
                    continue;
                }
                mass[image] += dist[c][k];
                total += dist[c][k];
                weighted += dist[c][k].get_d() * values[source.transitions[k].target];
            }
            if (total == 0) {
                continue;
            }
            for (auto& [image, m] : mass) {
                m /= total;
            }
            double conditional = weighted / total.get_d();
            if (!best || conditional > best_value) {
                best = std::move(mass);
                best_value = conditional;
            }
        }
        if (!best) {
            result.problem = "choice " + reduced.state_name(own) + ":" + choice.action + " has no usable source";
            return result;
        }
        for (std::size_t k = 0; k < choice.transitions.size(); ++k) {
            auto it = best->find(choice.transitions[k].target);
            if (it != best->end()) {
                out[k] = it->second;
                best->erase(it);
            }
        }
        if (!best->empty()) {
            result.problem = "choice " + reduced.state_name(own) + ":" + choice.action +
                             " misses successor '" + reduced.state_name(best->begin()->first) + "'";
            return result;
        }
    }
    return result;
}

}  // namespace

PreservationReport check_value_preservation(WpMdp const& original, WpMdp const& reduced, ModelMap const& map,
                                            PreservationOptions const& options) {
    PreservationReport report;
    bool const exact = original.num_states() <= options.limits.max_states &&
                       reduced.num_states() <= options.limits.max_states;
    report.exact = exact;
    bool const constant_rows = !is_trivially_parametric(original.subclass()) && original.params().empty();

    for (std::size_t i = 0; i < options.samples; ++i) {
        ++report.samples;
        // A model without parameters is first checked at its own probabilities; all other
        // samples are valuations of the trivially parametric model with the same graph.
        ChoiceDistributions dist = (constant_rows && i == 0)
                                       ? instantiate(original, Valuation{})
                                       : sample_support(original, derive_seed(options.seed, i), options.profile);
        std::vector<double> original_values;
        std::vector<Rational> original_exact;
        if (exact) {
            auto solved = solve_exact(original, dist, options.limits);
            original_exact = solved.state;
            for (auto const& v : solved.state) {
                original_values.push_back(v.get_d());
            }
        } else {
            original_values = solve_iterative(original, dist, options.tolerance * 1e-3).state;
        }
        auto lifted = lift(original, dist, original_values, reduced, map);
        std::string reason;
        if (lifted.problem.empty() && !is_graph_preserving(reduced, lifted.distributions, &reason)) {
            lifted.problem = "lifted valuation is not graph preserving: " + reason;
        }
        if (!lifted.problem.empty()) {
            report.violations.push_back({i, "", 0.0, 0.0, lifted.problem});
            report.deltas.emplace_back();
            continue;
        }
        std::vector<double> reduced_values;
        std::vector<Rational> reduced_exact;
        if (exact) {
            reduced_exact = solve_exact(reduced, lifted.distributions, options.limits).state;
        } else {
            reduced_values = solve_iterative(reduced, lifted.distributions, options.tolerance * 1e-3).state;
        }
        std::vector<double> deltas(original.num_states(), 0.0);
        for (StateId s = 0; s < original.num_states(); ++s) {
            StateId image = map.state_image[s];
            bool equal;
            double lhs = original_values[s];
            double rhs;
            if (exact) {
                equal = original_exact[s] == reduced_exact[image];
                rhs = reduced_exact[image].get_d();
                deltas[s] = equal ? 0.0 : std::max(std::abs(lhs - rhs), 1e-300);
            } else {
                rhs = reduced_values[image];
                deltas[s] = std::abs(lhs - rhs);
                equal = deltas[s] <= options.tolerance;
            }
            report.max_delta = std::max(report.max_delta, deltas[s]);
            if (!equal) {
                report.violations.push_back({i, original.state_name(s), lhs, rhs, "value changed"});
            }
        }
        report.deltas.push_back(std::move(deltas));
    }
    return report;
}

std::optional<Valuation> falsify_nwr(WpMdp const& model, Vertex v, std::vector<Vertex> const& W, std::size_t samples,
                                     std::uint64_t seed, SamplingProfile profile) {
    if (W.empty()) {
        throw std::invalid_argument("falsify_nwr needs a non-empty right-hand side");
    }
    MdpGraph graph(model);
    for (std::size_t i = 0; i < samples; ++i) {
        SamplingProfile used = profile;
        if (profile == SamplingProfile::mixed) {
            used = (i % 2) ? SamplingProfile::adversarial : SamplingProfile::uniform;
        }
        Valuation valuation = sample_valuation(model, derive_seed(seed, i), used);
        auto values = solve_exact(model, valuation.distributions);
        Rational const& left = values.vertex(graph, v);
        bool dominated = std::any_of(W.begin(), W.end(), [&](Vertex w) { return values.vertex(graph, w) >= left; });
        if (!dominated) {
            return valuation;
        }
    }
    return std::nullopt;
}

}  // namespace nwr
