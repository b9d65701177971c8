#pragma once

#include "nwr/model.hpp"
#include "nwr/reduce.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nwr {

class IoError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// The document does not match the schema or describes an invalid model.
class SchemaError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Parses a model document:
///   {"version": 1, "name": str, "subclass": "wpmdp"|"pmdp"|"wtpmdp"|"tpmdp",
///    "params": [str], "states": [{"name": str, "target_weight": "rat"?}],
///    "choices": [{"from": int, "action": str, "transitions": [{"to": int, "poly": str}]}]}
/// Trivially parametric documents omit "poly". The model is validated; errors throw.
WpMdp parse_model(std::string const& text);
WpMdp read_model(std::filesystem::path const& path);

/// Canonical serialization: sorted keys, canonical polynomial text, one state or choice
/// per line. Equal models give byte-identical output.
std::string format_model(WpMdp const& model);
void write_model(WpMdp const& model, std::filesystem::path const& path);

/// Target declaration for imports: states carrying `label` become targets with `weight`.
struct TargetLabel {
    std::string label;
    Rational weight;
};

/// Imports the explicit JSON written by Storm's build export. Accepted dialect: a list of
/// states (or an object with a "states" list), each with "id", optional "lab"/"labels",
/// and choices under "c"/"choices"/"actions"; a choice has an optional name under
/// "lab"/"name"/"action" and successors under "succ"/"branches"/"successors", each with
/// "id"/"to"/"target" and "prob"/"probability". Probabilities are numbers (read as their
/// shortest decimal text) or polynomial strings over identifiers. Unknown fields are
/// ignored. Targets lose their choices; states with a weight-1 label merge into fin and
/// with a weight-0 label into fail when all weights are 0 or 1 (giving a pMDP).
WpMdp import_storm_json(std::string const& text, std::vector<TargetLabel> const& targets, std::string name = {});

/// Table 1 shaped rows:
/// orig_states,orig_choices,pre_states,pre_choices,ua_states,ua_choices,seconds,instance
std::string format_report_csv(std::vector<ReductionReport> const& reports);
/// Full reports including per-iteration curves, prune logs and notes.
std::string format_report_json(std::vector<ReductionReport> const& reports);
/// Throws SchemaError if some stage increases the state or choice count.
void check_report(ReductionReport const& report);
void write_text(std::filesystem::path const& path, std::string const& text);
std::string read_text(std::filesystem::path const& path);

/// The state and choice correspondence of a reduction, stored next to the reduced model
/// so it can be validated later: {"state_image": [int], "choice_sources": [[int]]}.
std::string format_model_map(ModelMap const& map);
ModelMap parse_model_map(std::string const& text);

}  // namespace nwr
