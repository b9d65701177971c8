#include "support/fixtures.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace nwr::testing {

StateId ModelSketch::lookup(std::string const& name) {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it != names_.end()) {
        return static_cast<StateId>(it - names_.begin());
    }
    names_.push_back(name);
    weights_.emplace_back();
    return static_cast<StateId>(names_.size() - 1);
}

StateId ModelSketch::state(std::string name) {
    return lookup(name);
}

StateId ModelSketch::target(std::string name, Rational weight) {
    StateId s = lookup(name);
    weights_[s] = weight;
    return s;
}

ModelSketch& ModelSketch::choice(std::string const& from, std::string action,
                                 std::vector<std::pair<std::string, std::string>> const& transitions) {
    Choice choice{lookup(from), std::move(action), {}};
    for (auto const& [to, poly] : transitions) {
        Transition t{lookup(to), std::nullopt};
        if (!poly.empty()) {
            t.probability = parse_polynomial(poly, params_);
        }
        choice.transitions.push_back(std::move(t));
    }
    choices_.push_back(std::move(choice));
    return *this;
}

WpMdp ModelSketch::build(std::string name) const {
    return WpMdp(subclass_, params_, names_, weights_, choices_, std::move(name));
}

WpMdp fig1_chain() {
    ModelSketch sketch(Subclass::wpmdp);
    sketch.state("p");
    sketch.state("q");
    sketch.target("0", 0);
    sketch.target("1", 1);
    sketch.target("4", 4);
    sketch.choice("p", "a", {{"0", "1/4"}, {"1", "3/4"}});
    sketch.choice("q", "a", {{"p", "1/2"}, {"4", "1/2"}});
    return sketch.build("fig1");
}

WpMdp fig2a_wpmdp() {
    ModelSketch sketch(Subclass::wpmdp, {"x", "y"});
    sketch.state("p");
    sketch.state("q");
    sketch.target("0", 0);
    sketch.target("1", 1);
    sketch.target("4", 4);
    sketch.choice("p", "a", {{"1", "2*y"}, {"q", "2*x^2 - y"}});
    sketch.choice("q", "a", {{"1", "1 - y"}, {"0", "y"}});
    sketch.choice("q", "b", {{"0", "1 - x"}, {"4", "x"}});
    return sketch.build("fig2a");
}

WpMdp fig2d_tpmdp() {
    ModelSketch sketch(Subclass::tpmdp);
    sketch.state("p");
    sketch.state("q");
    sketch.target("fin", 1);
    sketch.target("fail", 0);
    sketch.choice("p", "a", {{"fail", ""}});
    sketch.choice("q", "a", {{"p", ""}, {"fin", ""}});
    sketch.choice("q", "b", {{"fail", ""}, {"fin", ""}});
    return sketch.build("fig2d");
}

namespace {

std::size_t uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

std::vector<StateId> pick_distinct(std::mt19937_64& rng, std::size_t universe, std::size_t count) {
    std::vector<StateId> all(universe);
    std::iota(all.begin(), all.end(), StateId{0});
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(std::min(count, universe));
    std::sort(all.begin(), all.end());
    return all;
}

}  // namespace

WpMdp random_tpmdp(std::mt19937_64& rng, RandomModelOptions const& options) {
    std::size_t const n = uniform(rng, options.min_states, options.max_states);
    std::vector<std::string> names;
    std::vector<std::optional<Rational>> weights;
    for (std::size_t i = 0; i < n; ++i) {
        names.push_back("s" + std::to_string(i));
        weights.emplace_back();
    }
    bool const weighted = options.max_weights > 0;
    if (weighted) {
        std::size_t k = uniform(rng, 2, std::max<std::size_t>(2, options.max_weights));
        std::vector<long> values{0};
        while (values.size() < k) {
            long w = static_cast<long>(uniform(rng, 1, 12));
            if (std::find(values.begin(), values.end(), w) == values.end()) {
                values.push_back(w);
            }
        }
        for (std::size_t i = 0; i < values.size(); ++i) {
            names.push_back(i == 0 ? "fail" : "t" + std::to_string(values[i]));
            weights.emplace_back(Rational(values[i]));
        }
    } else {
        names.push_back("fin");
        weights.emplace_back(Rational(1));
        names.push_back("fail");
        weights.emplace_back(Rational(0));
    }
    std::size_t const total = names.size();
    std::vector<Choice> choices;
    std::bernoulli_distribution dead_end(options.dead_end_probability);
    for (StateId s = 0; s < n; ++s) {
        if (dead_end(rng)) {
            continue;
        }
        std::size_t actions = uniform(rng, 1, options.max_actions);
        for (std::size_t a = 0; a < actions; ++a) {
            Choice choice{s, "a" + std::to_string(a), {}};
            for (StateId t : pick_distinct(rng, total, uniform(rng, 1, options.max_successors))) {
                choice.transitions.push_back({t, std::nullopt});
            }
            choices.push_back(std::move(choice));
        }
    }
    Subclass subclass = weighted ? Subclass::wtpmdp : Subclass::tpmdp;
    return WpMdp(subclass, {}, std::move(names), std::move(weights), std::move(choices), "random");
}

WpMdp random_tpmc(std::mt19937_64& rng, std::size_t states, std::size_t max_successors) {
    RandomModelOptions options;
    options.min_states = states;
    options.max_states = states;
    options.max_actions = 1;
    options.max_successors = max_successors;
    return random_tpmdp(rng, options);
}

}  // namespace nwr::testing
