#include "nwr/model_io.hpp"

#include "nwr/graph_analysis.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <iomanip>
#include <map>
#include <regex>
#include <set>
#include <sstream>

namespace nwr {

using nlohmann::json;

namespace {

json const& require(json const& object, char const* key, std::string const& where) {
    if (!object.is_object() || !object.contains(key)) {
        throw SchemaError(where + ": missing \"" + key + "\"");
    }
    return object.at(key);
}

std::size_t require_index(json const& value, std::size_t bound, std::string const& where) {
    if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<std::int64_t>() >= 0)) {
        throw SchemaError(where + ": expected a non-negative integer");
    }
    auto index = value.get<std::size_t>();
    if (index >= bound) {
        throw SchemaError(where + ": index " + std::to_string(index) + " out of range (" + std::to_string(bound) +
                          " states)");
    }
    return index;
}

std::string require_string(json const& value, std::string const& where) {
    if (!value.is_string()) {
        throw SchemaError(where + ": expected a string");
    }
    return value.get<std::string>();
}

// Numbers are read through their shortest decimal text so that 0.1 means 1/10.
Rational read_rational(json const& value, std::string const& where) {
    try {
        if (value.is_string()) {
            return parse_rational(value.get<std::string>());
        }
        if (value.is_number()) {
            return parse_rational(value.dump());
        }
    } catch (RationalParseError const& error) {
        throw SchemaError(where + ": " + error.what());
    }
    throw SchemaError(where + ": expected a rational number");
}

WpMdp checked(WpMdp model) {
    auto diagnostics = validate_model(model);
    if (has_errors(diagnostics)) {
        throw SchemaError("invalid model:\n" + format_diagnostics(diagnostics));
    }
    return model;
}

std::string lines(std::vector<std::string> const& items, std::string const& indent) {
    if (items.empty()) {
        return "[]";
    }
    std::string out = "[\n";
    for (std::size_t i = 0; i < items.size(); ++i) {
        out += indent + "  " + items[i] + (i + 1 < items.size() ? ",\n" : "\n");
    }
    return out + indent + "]";
}

std::string csv_field(std::string const& text) {
    if (text.find_first_of(",\"\n") == std::string::npos) {
        return text;
    }
    std::string out = "\"";
    for (char ch : text) {
        if (ch == '"') {
            out += '"';
        }
        out += ch;
    }
    return out + "\"";
}

json const* first_of(json const& object, std::initializer_list<char const*> keys) {
    for (char const* key : keys) {
        if (object.contains(key)) {
            return &object.at(key);
        }
    }
    return nullptr;
}

// Exporters print doubles, so a row like three times 1/3 arrives as 0.3333333333333333
// each. Constant rows within 1e-9 of 1 are made exact by adjusting their largest entry.
void repair_rounding(Choice& choice) {
    Rational sum = 0;
    Transition* largest = nullptr;
    for (auto& transition : choice.transitions) {
        if (!transition.probability->is_constant()) {
            return;
        }
        Rational value = transition.probability->constant_term();
        sum += value;
        if (!largest || value > largest->probability->constant_term()) {
            largest = &transition;
        }
    }
    Rational error = sum - 1;
    if (error == 0 || !largest || abs(error) > Rational(1, 1000000000)) {
        return;
    }
    largest->probability = Polynomial(largest->probability->constant_term() - error);
}

}  // namespace

WpMdp parse_model(std::string const& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (json::parse_error const& error) {
        throw SchemaError(std::string("malformed JSON: ") + error.what());
    }
    if (!doc.is_object()) {
        throw SchemaError("document: expected an object");
    }
    auto const& version = require(doc, "version", "document");
    if (!version.is_number_integer() || version.get<int>() != 1) {
        throw SchemaError("document: unsupported version " + version.dump());
    }
    auto subclass_text = require_string(require(doc, "subclass", "document"), "subclass");
    auto subclass = parse_subclass(subclass_text);
    if (!subclass) {
        throw SchemaError("subclass: unknown value \"" + subclass_text + "\"");
    }
    std::string name = doc.contains("name") ? require_string(doc.at("name"), "name") : std::string{};
    std::vector<std::string> params;
    if (doc.contains("params")) {
        for (auto const& param : doc.at("params")) {
            params.push_back(require_string(param, "params"));
        }
    }

    std::vector<std::string> names;
    std::vector<std::optional<Rational>> weights;
    auto const& states = require(doc, "states", "document");
    if (!states.is_array()) {
        throw SchemaError("states: expected a list");
    }
    for (std::size_t i = 0; i < states.size(); ++i) {
        std::string where = "states[" + std::to_string(i) + "]";
        names.push_back(require_string(require(states[i], "name", where), where + ".name"));
        if (states[i].contains("target_weight")) {
            weights.emplace_back(read_rational(states[i].at("target_weight"), where + ".target_weight"));
        } else {
            weights.emplace_back();
        }
    }

    std::vector<Choice> choices;
    auto const& choice_list = require(doc, "choices", "document");
    if (!choice_list.is_array()) {
        throw SchemaError("choices: expected a list");
    }
    for (std::size_t i = 0; i < choice_list.size(); ++i) {
        std::string where = "choices[" + std::to_string(i) + "]";
        auto const& entry = choice_list[i];
        Choice choice;
        choice.state = static_cast<StateId>(require_index(require(entry, "from", where), names.size(), where + ".from"));
        choice.action = require_string(require(entry, "action", where), where + ".action");
        auto const& transitions = require(entry, "transitions", where);
        if (!transitions.is_array()) {
            throw SchemaError(where + ".transitions: expected a list");
        }
        for (std::size_t k = 0; k < transitions.size(); ++k) {
            std::string at = where + ".transitions[" + std::to_string(k) + "]";
            Transition transition;
            transition.target = static_cast<StateId>(require_index(require(transitions[k], "to", at), names.size(), at + ".to"));
            if (transitions[k].contains("poly")) {
                try {
                    transition.probability = parse_polynomial(require_string(transitions[k].at("poly"), at + ".poly"), params);
                } catch (PolynomialParseError const& error) {
                    throw SchemaError(at + ".poly: " + error.what());
                }
            }
            choice.transitions.push_back(std::move(transition));
        }
        choices.push_back(std::move(choice));
    }
    try {
        return checked(WpMdp(*subclass, std::move(params), std::move(names), std::move(weights), std::move(choices),
                             std::move(name)));
    } catch (ModelError const& error) {
        throw SchemaError(error.what());
    }
}

WpMdp read_model(std::filesystem::path const& path) {
    return parse_model(read_text(path));
}

std::string format_model(WpMdp const& model) {
    std::vector<std::string> states;
    for (StateId s = 0; s < model.num_states(); ++s) {
        json state = {{"name", model.state_name(s)}};
        if (model.weight(s)) {
            state["target_weight"] = to_string(*model.weight(s));
        }
        states.push_back(state.dump());
    }
    std::vector<std::string> choices;
    for (auto const& choice : model.choices()) {
        json transitions = json::array();
        for (auto const& transition : choice.transitions) {
            json entry = {{"to", transition.target}};
            if (transition.probability) {
                entry["poly"] = to_string(*transition.probability, model.params());
            }
            transitions.push_back(std::move(entry));
        }
        json entry = {{"action", choice.action}, {"from", choice.state}, {"transitions", std::move(transitions)}};
        choices.push_back(entry.dump());
    }
    std::ostringstream out;
    out << "{\n";
    out << "  \"choices\": " << lines(choices, "  ") << ",\n";
    out << "  \"name\": " << json(model.name()).dump() << ",\n";
    out << "  \"params\": " << json(model.params()).dump() << ",\n";
    out << "  \"states\": " << lines(states, "  ") << ",\n";
    out << "  \"subclass\": " << json(std::string(to_string(model.subclass()))).dump() << ",\n";
    out << "  \"version\": 1\n";
    out << "}\n";
    return out.str();
}

void write_model(WpMdp const& model, std::filesystem::path const& path) {
    write_text(path, format_model(model));
}

namespace {

WpMdp import_storm_document(std::string const& text, std::vector<TargetLabel> const& targets, std::string name) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (json::parse_error const& error) {
        throw SchemaError(std::string("malformed JSON: ") + error.what());
    }
    json const* states = &doc;
    if (doc.is_object()) {
        states = first_of(doc, {"states", "nodes"});
        if (!states) {
            throw SchemaError("Storm export: no state list");
        }
    }
    if (!states->is_array()) {
        throw SchemaError("Storm export: expected a list of states");
    }

    // Ids may be sparse or unordered; number states by their position in the list.
    std::map<std::int64_t, StateId> position;
    for (std::size_t i = 0; i < states->size(); ++i) {
        auto const& state = (*states)[i];
        std::int64_t id = state.contains("id") ? state.at("id").get<std::int64_t>() : static_cast<std::int64_t>(i);
        if (!position.emplace(id, static_cast<StateId>(i)).second) {
            throw SchemaError("Storm export: duplicate state id " + std::to_string(id));
        }
    }

    // Parameters: every identifier occurring in a string probability.
    std::set<std::string> identifiers;
    std::regex identifier("[A-Za-z_][A-Za-z0-9_]*");
    for (auto const& state : *states) {
        json const* choices = first_of(state, {"c", "choices", "actions"});
        if (!choices) {
            continue;
        }
        for (auto const& choice : *choices) {
            json const* successors = first_of(choice, {"succ", "branches", "successors"});
            if (!successors) {
                continue;
            }
            for (auto const& successor : *successors) {
                json const* prob = first_of(successor, {"prob", "probability"});
                if (prob && prob->is_string()) {
                    auto const& expr = prob->get_ref<std::string const&>();
                    for (std::sregex_iterator it(expr.begin(), expr.end(), identifier), end; it != end; ++it) {
                        identifiers.insert(it->str());
                    }
                }
            }
        }
    }
    std::vector<std::string> params(identifiers.begin(), identifiers.end());

    std::vector<std::string> names;
    std::vector<std::optional<Rational>> weights;
    std::vector<Choice> choices;
    bool weighted = false;
    for (auto const& target : targets) {
        weighted = weighted || (target.weight != 0 && target.weight != 1);
    }
    for (std::size_t i = 0; i < states->size(); ++i) {
        auto const& state = (*states)[i];
        std::string where = "state " + std::to_string(i);
        names.push_back(state.contains("name") && state.at("name").is_string() ? state.at("name").get<std::string>()
                                                                              : "s" + std::to_string(i));
        std::optional<Rational> weight;
        if (json const* labels = first_of(state, {"lab", "labels"})) {
            for (auto const& target : targets) {
                for (auto const& label : *labels) {
                    if (label.is_string() && label.get<std::string>() == target.label && !weight) {
                        weight = target.weight;
                    }
                }
            }
        }
        weights.push_back(weight);
        if (weight) {
            continue;
        }
        json const* choice_list = first_of(state, {"c", "choices", "actions"});
        if (!choice_list) {
            continue;
        }
        for (std::size_t k = 0; k < choice_list->size(); ++k) {
            auto const& entry = (*choice_list)[k];
            Choice choice{static_cast<StateId>(i), "a" + std::to_string(k), {}};
            if (json const* label = first_of(entry, {"name", "action", "lab"})) {
                if (label->is_string()) {
                    choice.action = label->get<std::string>();
                } else if (label->is_array() && !label->empty() && (*label)[0].is_string()) {
                    choice.action = (*label)[0].get<std::string>();
                }
            }
            json const* successors = first_of(entry, {"succ", "branches", "successors"});
            if (!successors) {
                throw SchemaError(where + ", choice " + std::to_string(k) + ": no successor list");
            }
            for (auto const& successor : *successors) {
                json const* id = first_of(successor, {"id", "to", "target"});
                json const* prob = first_of(successor, {"prob", "probability"});
                if (!id || !prob) {
                    throw SchemaError(where + ", choice " + std::to_string(k) + ": successor without id or probability");
                }
                auto it = position.find(id->get<std::int64_t>());
                if (it == position.end()) {
                    throw SchemaError(where + ": successor id " + id->dump() + " does not exist");
                }
                Transition transition{it->second, std::nullopt};
                try {
                    transition.probability = prob->is_string() ? parse_polynomial(prob->get<std::string>(), params)
                                                               : Polynomial(read_rational(*prob, where));
                } catch (PolynomialParseError const& error) {
                    throw SchemaError(where + ": " + error.what());
                }
                choice.transitions.push_back(std::move(transition));
            }
            repair_rounding(choice);
            // Duplicate actions at a state get distinct names.
            std::vector<std::string> taken;
            for (auto it = choices.rbegin(); it != choices.rend() && it->state == i; ++it) {
                taken.push_back(it->action);
            }
            choice.action = fresh_name(choice.action, taken);
            choices.push_back(std::move(choice));
        }
    }
    Subclass subclass = weighted ? Subclass::wpmdp : Subclass::pmdp;
    WpMdp model(subclass, params, names, weights, std::move(choices), std::move(name));
    if (weighted) {
        return checked(normalize_targets(model));
    }

    // Non-weighted: all weight-1 targets become one fin, all weight-0 ones one fail.
    QuotientRequest request;
    request.image.assign(model.num_states(), 0);
    std::optional<StateId> fin_class;
    std::optional<StateId> fail_class;
    for (StateId s = 0; s < model.num_states(); ++s) {
        std::optional<StateId>* shared = nullptr;
        if (model.weight(s)) {
            shared = *model.weight(s) == 1 ? &fin_class : &fail_class;
            if (*shared) {
                request.image[s] = **shared;
                continue;
            }
        }
        request.image[s] = static_cast<StateId>(request.class_names.size());
        request.class_names.push_back(model.weight(s) ? (*model.weight(s) == 1 ? "fin" : "fail") : model.state_name(s));
        request.class_weights.push_back(model.weight(s));
        if (shared) {
            *shared = request.image[s];
        }
    }
    if (!fin_class) {
        throw SchemaError("Storm export: no state carries a weight-1 target label");
    }
    if (!fail_class) {
        request.class_names.push_back(fresh_name("fail", request.class_names));
        request.class_weights.emplace_back(Rational(0));
    }
    // Keep state names unique after renaming the merged targets.
    for (std::size_t i = 0; i < request.class_names.size(); ++i) {
        if (request.class_weights[i]) {
            continue;
        }
        auto& label = request.class_names[i];
        if (label == "fin" || label == "fail") {
            label = fresh_name(label, request.class_names);
        }
    }
    auto [merged, map] = quotient_model(model, request);
    return checked(std::move(merged));
}

}  // namespace

WpMdp import_storm_json(std::string const& text, std::vector<TargetLabel> const& targets, std::string name) {
    try {
        return import_storm_document(text, targets, std::move(name));
    } catch (json::exception const& error) {
        throw SchemaError(std::string("Storm export: ") + error.what());
    } catch (ModelError const& error) {
        throw SchemaError(std::string("Storm export: ") + error.what());
    }
}

void check_report(ReductionReport const& report) {
    auto increasing = [](StageCounts const& before, StageCounts const& after) {
        return after.states > before.states || after.choices > before.choices;
    };
    if (increasing(report.original, report.preprocessed) || increasing(report.preprocessed, report.reduced)) {
        throw SchemaError("report for '" + report.instance + "' has increasing stage counts");
    }
}

std::string format_report_csv(std::vector<ReductionReport> const& reports) {
    std::ostringstream out;
    out << "orig_states,orig_choices,pre_states,pre_choices,ua_states,ua_choices,seconds,instance\n";
    for (auto const& report : reports) {
        check_report(report);
        out << report.original.states << ',' << report.original.choices << ',' << report.preprocessed.states << ','
            << report.preprocessed.choices << ',' << report.reduced.states << ',' << report.reduced.choices << ','
            << std::fixed << std::setprecision(6) << report.seconds << ',' << csv_field(report.instance) << '\n';
    }
    return out.str();
}

std::string format_report_json(std::vector<ReductionReport> const& reports) {
    json list = json::array();
    for (auto const& report : reports) {
        check_report(report);
        auto counts = [](StageCounts const& c) { return json{{"states", c.states}, {"choices", c.choices}}; };
        json iterations = json::array();
        for (auto const& it : report.iterations) {
            iterations.push_back({{"iteration", it.iteration},
                                  {"inner_ran", it.inner_ran},
                                  {"pruned", it.pruned},
                                  {"merged", it.merged},
                                  {"states", it.after.states},
                                  {"choices", it.after.choices}});
        }
        json prunes = json::array();
        for (auto const& record : report.prune_log) {
            prunes.push_back({{"iteration", record.iteration},
                              {"state", record.state},
                              {"action", record.action},
                              {"rule", std::string(to_string(record.rule))}});
        }
        list.push_back({{"instance", report.instance},
                        {"original", counts(report.original)},
                        {"preprocessed", counts(report.preprocessed)},
                        {"reduced", counts(report.reduced)},
                        {"seconds", report.seconds},
                        {"iterations", std::move(iterations)},
                        {"prune_log", std::move(prunes)},
                        {"notes", report.notes}});
    }
    return list.dump(2) + "\n";
}

std::string format_model_map(ModelMap const& map) {
    json doc = {{"state_image", map.state_image}, {"choice_sources", map.choice_sources}};
    return doc.dump() + "\n";
}

ModelMap parse_model_map(std::string const& text) {
    try {
        json doc = json::parse(text);
        ModelMap map;
        map.state_image = doc.at("state_image").get<std::vector<StateId>>();
        map.choice_sources = doc.at("choice_sources").get<std::vector<std::vector<ChoiceId>>>();
        return map;
    } catch (json::exception const& error) {
        throw SchemaError(std::string("model map: ") + error.what());
    }
}

void write_text(std::filesystem::path const& path, std::string const& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out << text;
    if (!out) {
        throw IoError("failed writing '" + path.string() + "'");
    }
}

std::string read_text(std::filesystem::path const& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace nwr
