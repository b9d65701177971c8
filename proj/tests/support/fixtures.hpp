#pragma once

#include "nwr/model.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace nwr::testing {

/// Small helper for writing models in tests.
class ModelSketch {
   public:
    explicit ModelSketch(Subclass subclass, std::vector<std::string> params = {}) : subclass_(subclass), params_(std::move(params)) {}

    StateId state(std::string name);
    StateId target(std::string name, Rational weight);
    /// Transitions as (successor, polynomial text); empty text means trivially parametric.
    ModelSketch& choice(std::string const& from, std::string action,
                        std::vector<std::pair<std::string, std::string>> const& transitions);
    WpMdp build(std::string name = "test") const;

   private:
    StateId lookup(std::string const& name);

    Subclass subclass_;
    std::vector<std::string> params_;
    std::vector<std::string> names_;
    std::vector<std::optional<Rational>> weights_;
    std::vector<Choice> choices_;
};

/// Weighted Markov chain with Rew(p) = 3/4 and Rew(q) = 19/8.
WpMdp fig1_chain();
/// The wpMDP with parameters x, y and targets weighted 0, 1, 4.
WpMdp fig2a_wpmdp();
/// Its trivially parametric, non-weighted counterpart (p only reaches fail).
WpMdp fig2d_tpmdp();

struct RandomModelOptions {
    std::size_t min_states = 2;
    std::size_t max_states = 10;     ///< non-target states
    std::size_t max_actions = 3;
    std::size_t max_successors = 3;
    std::size_t max_weights = 0;     ///< 0: non-weighted (fin/fail); otherwise distinct weights incl. 0
    double dead_end_probability = 0.0;
};

/// Random trivially parametric model. Non-weighted models use targets fin (1) and fail (0).
WpMdp random_tpmdp(std::mt19937_64& rng, RandomModelOptions const& options);

/// Random trivially parametric Markov chain with `states` non-target states.
WpMdp random_tpmc(std::mt19937_64& rng, std::size_t states, std::size_t max_successors = 3);

}  // namespace nwr::testing
