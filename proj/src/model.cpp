#include "nwr/model.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace nwr {

bool is_weighted(Subclass subclass) {
    return subclass == Subclass::wpmdp || subclass == Subclass::wtpmdp;
}

bool is_trivially_parametric(Subclass subclass) {
    return subclass == Subclass::wtpmdp || subclass == Subclass::tpmdp;
}

std::string_view to_string(Subclass subclass) {
    switch (subclass) {
        case Subclass::wpmdp:
            return "wpmdp";
        case Subclass::pmdp:
            return "pmdp";
        case Subclass::wtpmdp:
            return "wtpmdp";
        case Subclass::tpmdp:
            return "tpmdp";
    }
    return "?";
}

std::optional<Subclass> parse_subclass(std::string_view text) {
    for (auto subclass : {Subclass::wpmdp, Subclass::pmdp, Subclass::wtpmdp, Subclass::tpmdp}) {
        if (text == to_string(subclass)) {
            return subclass;
        }
    }
    return std::nullopt;
}

WpMdp::WpMdp(Subclass subclass, std::vector<std::string> params, std::vector<std::string> state_names,
             std::vector<std::optional<Rational>> weights, std::vector<Choice> choices, std::string name)
    : subclass_(subclass),
      name_(std::move(name)),
      params_(std::move(params)),
      state_names_(std::move(state_names)),
      weights_(std::move(weights)),
      choices_(std::move(choices)) {
    if (weights_.size() != state_names_.size()) {
        throw ModelError("weight vector does not match the number of states");
    }
    for (auto const& choice : choices_) {
        if (choice.state >= state_names_.size()) {
            throw ModelError("choice '" + choice.action + "' refers to state #" + std::to_string(choice.state) +
                             " which does not exist");
        }
        for (auto const& transition : choice.transitions) {
            if (transition.target >= state_names_.size()) {
                throw ModelError("transition of choice '" + choice.action + "' targets state #" +
                                 std::to_string(transition.target) + " which does not exist");
            }
        }
    }
    std::stable_sort(choices_.begin(), choices_.end(),
                     [](Choice const& lhs, Choice const& rhs) { return lhs.state < rhs.state; });
    row_groups_.assign(state_names_.size() + 1, 0);
    for (auto const& choice : choices_) {
        ++row_groups_[choice.state + 1];
    }
    std::partial_sum(row_groups_.begin(), row_groups_.end(), row_groups_.begin());
}

std::size_t WpMdp::num_transitions() const {
    std::size_t result = 0;
    for (auto const& choice : choices_) {
        result += choice.transitions.size();
    }
    return result;
}

std::optional<StateId> WpMdp::find_state(std::string_view name) const {
    for (StateId s = 0; s < state_names_.size(); ++s) {
        if (state_names_[s] == name) {
            return s;
        }
    }
    return std::nullopt;
}

std::vector<StateId> WpMdp::targets() const {
    std::vector<StateId> result;
    for (StateId s = 0; s < state_names_.size(); ++s) {
        if (weights_[s]) {
            result.push_back(s);
        }
    }
    std::stable_sort(result.begin(), result.end(),
                     [this](StateId lhs, StateId rhs) { return *weights_[lhs] < *weights_[rhs]; });
    return result;
}

namespace {

std::optional<StateId> target_with_weight(WpMdp const& model, Rational const& weight, std::string_view preferred) {
    std::optional<StateId> result;
    for (StateId s = 0; s < model.num_states(); ++s) {
        if (model.weight(s) && *model.weight(s) == weight) {
            if (model.state_name(s) == preferred) {
                return s;
            }
            if (!result) {
                result = s;
            }
        }
    }
    return result;
}

}  // namespace

std::optional<StateId> WpMdp::fail() const {
    return target_with_weight(*this, Rational(0), "fail");
}

std::optional<StateId> WpMdp::fin() const {
    return target_with_weight(*this, Rational(1), "fin");
}

std::optional<ChoiceId> WpMdp::find_choice(StateId state, std::string_view action) const {
    for (ChoiceId c : choices_of(state)) {
        if (choices_[c].action == action) {
            return c;
        }
    }
    return std::nullopt;
}

bool WpMdp::operator==(WpMdp const& other) const {
    return subclass_ == other.subclass_ && name_ == other.name_ && params_ == other.params_ &&
           state_names_ == other.state_names_ && weights_ == other.weights_ && choices_ == other.choices_;
}

std::vector<Diagnostic> validate_model(WpMdp const& model) {
    std::vector<Diagnostic> result;
    auto report = [&result](Severity severity, std::string location, std::string message) {
        result.push_back({severity, std::move(location), std::move(message)});
    };
    bool const trivially = is_trivially_parametric(model.subclass());

    std::unordered_set<std::string> names;
    for (StateId s = 0; s < model.num_states(); ++s) {
        auto const& name = model.state_name(s);
        if (name.empty()) {
            report(Severity::error, "state #" + std::to_string(s), "empty state name");
        } else if (!names.insert(name).second) {
            report(Severity::error, "state '" + name + "'", "duplicate state name");
        }
        if (model.is_target(s)) {
            if (*model.weight(s) < 0) {
                report(Severity::error, "state '" + name + "'", "negative target weight");
            }
            if (model.num_choices_of(s) != 0) {
                report(Severity::error, "state '" + name + "'", "target not a sink");
            }
        }
    }

    std::map<ParameterId, std::string> variable_owner;
    for (ChoiceId c = 0; c < model.num_choices(); ++c) {
        auto const& choice = model.choice(c);
        std::string location = "choice '" + model.state_name(choice.state) + "':'" + choice.action + "'";
        if (model.find_choice(choice.state, choice.action) != c) {
            report(Severity::error, location, "duplicate action at state");
        }
        if (choice.transitions.empty()) {
            report(Severity::error, location, "choice without transitions");
        }
        std::set<StateId> seen;
        bool constant_row = true;
        Rational row_sum(0);
        for (auto const& transition : choice.transitions) {
            if (!seen.insert(transition.target).second) {
                report(Severity::error, location,
                       "duplicate successor '" + model.state_name(transition.target) + "'");
            }
            if (!transition.probability) {
                if (!trivially) {
                    report(Severity::error, location, "transition without probability in a parametric model");
                }
                constant_row = false;
                continue;
            }
            auto const& poly = *transition.probability;
            for (ParameterId p : poly.parameters()) {
                if (p >= model.params().size()) {
                    report(Severity::error, location, "parameter index out of range");
                }
            }
            if (trivially) {
                auto variable = poly.as_variable();
                if (!variable) {
                    report(Severity::error, location, "trivially parametric transition is not a single variable");
                } else if (auto [it, inserted] = variable_owner.emplace(*variable, location); !inserted) {
                    report(Severity::error, location, "variable shared with " + it->second);
                }
                constant_row = false;
                continue;
            }
            if (poly.is_constant()) {
                if (poly.constant_term() < 0) {
                    report(Severity::error, location, "negative probability");
                }
                row_sum += poly.constant_term();
            } else {
                constant_row = false;
            }
        }
        if (constant_row && !choice.transitions.empty() && row_sum != 1) {
            report(Severity::error, location, "constant row sums to " + to_string(row_sum) + ", not 1");
        }
    }

    auto targets = model.targets();
    if (!model.fail()) {
        report(Severity::warning, "targets", "no weight-0 fail target");
    }
    for (std::size_t i = 1; i < targets.size(); ++i) {
        if (*model.weight(targets[i]) == *model.weight(targets[i - 1])) {
            report(Severity::warning, "state '" + model.state_name(targets[i]) + "'",
                   "target weight equals that of '" + model.state_name(targets[i - 1]) + "'");
        }
    }
    if (!is_weighted(model.subclass())) {
        bool ok = targets.size() == 2 && *model.weight(targets[0]) == 0 && *model.weight(targets[1]) == 1;
        if (!ok) {
            report(Severity::error, "targets", "non-weighted model needs exactly the targets fin (1) and fail (0)");
        }
    }
    return result;
}

bool has_errors(std::vector<Diagnostic> const& diagnostics) {
    return std::any_of(diagnostics.begin(), diagnostics.end(),
                       [](Diagnostic const& d) { return d.severity == Severity::error; });
}

std::string format_diagnostics(std::vector<Diagnostic> const& diagnostics) {
    std::ostringstream out;
    for (auto const& d : diagnostics) {
        out << (d.severity == Severity::error ? "error: " : "warning: ") << d.location << ": " << d.message << '\n';
    }
    return out.str();
}

std::string fresh_name(std::string const& base, std::vector<std::string> const& taken) {
    std::unordered_set<std::string> used(taken.begin(), taken.end());
    if (!used.contains(base)) {
        return base;
    }
    for (std::size_t i = 1;; ++i) {
        std::string candidate = base + "_" + std::to_string(i);
        if (!used.contains(candidate)) {
            return candidate;
        }
    }
}

WpMdp normalize_targets(WpMdp const& model) {
    for (StateId s = 0; s < model.num_states(); ++s) {
        if (model.weight(s) && *model.weight(s) < 0) {
            throw ModelError("target '" + model.state_name(s) + "' has negative weight " + to_string(*model.weight(s)));
        }
    }
    auto names = model.state_names();
    auto weights = model.weights();
    auto choices = model.choices();
    bool const trivially = is_trivially_parametric(model.subclass());

    // One representative per weight; fail and fin keep their role when named so.
    std::map<Rational, StateId> representative;
    for (StateId s : model.targets()) {
        auto [it, inserted] = representative.emplace(*weights[s], s);
        if (!inserted) {
            bool preferred = (*weights[s] == 0 && names[s] == "fail") || (*weights[s] == 1 && names[s] == "fin");
            if (preferred) {
                it->second = s;
            }
        }
    }
    for (StateId s = 0; s < model.num_states(); ++s) {
        if (!weights[s]) {
            continue;
        }
        StateId keep = representative.at(*weights[s]);
        if (keep == s) {
            continue;
        }
        weights[s].reset();
        Transition redirect{keep, std::nullopt};
        if (!trivially) {
            redirect.probability = Polynomial(Rational(1));
        }
        choices.push_back(Choice{s, "__redirect", {redirect}});
    }
    if (!representative.contains(Rational(0))) {
        names.push_back(fresh_name("fail", names));
        weights.emplace_back(Rational(0));
    }
    return WpMdp(model.subclass(), model.params(), std::move(names), std::move(weights), std::move(choices),
                 model.name());
}

WpMdp materialize_parameters(WpMdp const& model) {
    if (!is_trivially_parametric(model.subclass())) {
        return model;
    }
    std::vector<std::string> params = model.params();
    std::vector<Choice> choices = model.choices();
    for (ChoiceId c = 0; c < choices.size(); ++c) {
        for (std::size_t k = 0; k < choices[c].transitions.size(); ++k) {
            auto& transition = choices[c].transitions[k];
            if (transition.probability) {
                continue;
            }
            params.push_back(fresh_name("x" + std::to_string(c) + "_" + std::to_string(k), params));
            transition.probability = Polynomial::variable(static_cast<ParameterId>(params.size() - 1));
        }
    }
    Subclass subclass = is_weighted(model.subclass()) ? Subclass::wpmdp : Subclass::pmdp;
    return WpMdp(subclass, std::move(params), model.state_names(), model.weights(), std::move(choices), model.name());
}

WpMdp forget_probabilities(WpMdp const& model) {
    std::vector<Choice> choices;
    choices.reserve(model.num_choices());
    for (auto const& choice : model.choices()) {
        Choice stripped{choice.state, choice.action, {}};
        for (auto const& transition : choice.transitions) {
            if (transition.probability && transition.probability->is_zero()) {
                continue;
            }
            stripped.transitions.push_back({transition.target, std::nullopt});
        }
        if (!stripped.transitions.empty()) {
            choices.push_back(std::move(stripped));
        }
    }
    Subclass subclass = is_weighted(model.subclass()) ? Subclass::wtpmdp : Subclass::tpmdp;
    return WpMdp(subclass, {}, model.state_names(), model.weights(), std::move(choices), model.name());
}

ModelMap ModelMap::identity(WpMdp const& model) {
    ModelMap result;
    result.state_image.resize(model.num_states());
    std::iota(result.state_image.begin(), result.state_image.end(), StateId{0});
    result.choice_sources.resize(model.num_choices());
    for (ChoiceId c = 0; c < model.num_choices(); ++c) {
        result.choice_sources[c] = {c};
    }
    return result;
}

ModelMap ModelMap::then(ModelMap const& next) const {
    ModelMap result;
    result.state_image.reserve(state_image.size());
    for (StateId image : state_image) {
        result.state_image.push_back(next.state_image.at(image));
    }
    result.choice_sources.resize(next.choice_sources.size());
    for (std::size_t c = 0; c < next.choice_sources.size(); ++c) {
        auto& sources = result.choice_sources[c];
        for (ChoiceId middle : next.choice_sources[c]) {
            auto const& inner = choice_sources.at(middle);
            sources.insert(sources.end(), inner.begin(), inner.end());
        }
        std::sort(sources.begin(), sources.end());
        sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
    }
    return result;
}

}  // namespace nwr
