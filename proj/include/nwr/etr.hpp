#pragma once

#include "nwr/graph.hpp"
#include "nwr/model.hpp"
#include "nwr/oracle.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nwr {

class SolverError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

enum class Relation { eq, ge, gt };

/// lhs REL rhs, both sides polynomials over the query variables.
struct EtrAtom {
    Polynomial lhs;
    Relation relation = Relation::eq;
    Polynomial rhs;
};

/// Disjunction of atoms. `group` names the part of the encoding it belongs to
/// (T, Z, P, N, gp or nwr).
struct EtrClause {
    std::string group;
    std::vector<EtrAtom> atoms;
};

enum class VertexClass : char { target = 'T', zero = 'Z', player = 'P', nature = 'N' };

/// Existential sentence "some graph-preserving valuation gives v a strictly larger value
/// than every w in W". The sentence is the conjunction of `clauses`.
struct EtrQuery {
    /// Parameters first (model parameters, or one per transition for trivially
    /// parametric models), then one value variable per vertex.
    std::vector<std::string> variables;
    std::size_t num_parameters = 0;
    std::vector<ParameterId> value_variable;  ///< per vertex
    /// Trivially parametric models: the variable standing for transition k of choice c.
    std::vector<std::vector<ParameterId>> transition_variable;
    std::vector<VertexClass> partition;  ///< per vertex
    std::vector<EtrClause> clauses;
    Vertex v = 0;
    std::vector<Vertex> W;
};

/// Builds the sentence for v and W (vertices of MdpGraph(model)). States of a non-trivial
/// end component share one value, the maximum over the component's leaving choices, so
/// the value equations have a unique solution. Throws ModelError if W is empty or a
/// vertex is out of range.
EtrQuery encode_not_nwr(WpMdp const& model, Vertex v, std::vector<Vertex> const& W);

/// SMT-LIB 2 script over QF_NRA ending in (check-sat) and (get-model).
std::string format_smtlib(EtrQuery const& query);
/// The same sentence as plain text: "exists x y : (...) and (...)".
std::string format_plain(EtrQuery const& query);

/// Exact truth value of the sentence body under a full assignment of its variables.
bool evaluate(EtrQuery const& query, ParameterAssignment const& values);

struct SolverCommand {
    /// Executable and arguments; "{}" is replaced by the script path, which is appended
    /// when no argument contains it.
    std::vector<std::string> argv;
    double timeout_seconds = 60.0;

    /// Splits on whitespace.
    static SolverCommand parse(std::string const& text, double timeout_seconds = 60.0);
};

/// The solver command from NWR_SOLVER, else z3 with decimal model output if it is on PATH.
std::optional<SolverCommand> default_solver();

enum class Verdict { sat, unsat, unknown };
std::string_view to_string(Verdict verdict);

struct SolverResult {
    Verdict verdict = Verdict::unknown;
    /// Rationalized values by variable name, when the solver printed a model.
    std::vector<std::pair<std::string, Rational>> model;
    /// True when some value was printed as an approximation (for instance an algebraic number).
    bool approximate = false;
    double seconds = 0.0;
    bool timed_out = false;
    std::string output;
};

/// Writes the script to a temporary file and runs the solver on it. The verdict is the
/// first sat/unsat/unknown token; a timeout gives unknown. Throws SolverError when the
/// solver cannot be started or prints no verdict.
SolverResult run_solver(std::string const& script, SolverCommand const& command);

/// Parses solver output (exposed for tests).
SolverResult parse_solver_output(std::string const& output);

struct SatCheck {
    bool graph_preserving = false;
    bool formula_holds = false;  ///< under the parameters and the exact values
    bool values_match = false;   ///< solver values against the exact ones
    bool separates = false;      ///< exact Rew(v) > Rew(w) for every w in W
    Valuation valuation;
    std::vector<Rational> exact_values;  ///< per vertex
    std::string detail;

    bool ok() const { return graph_preserving && formula_holds && values_match && separates; }
};

/// Re-checks a sat answer: takes the parameter values from the solver model, checks they
/// are graph preserving, recomputes all values exactly and evaluates the sentence on them.
/// Approximate solver values are compared within `tolerance`, exact ones exactly.
SatCheck verify_sat(WpMdp const& model, EtrQuery const& query, SolverResult const& result, double tolerance = 1e-9);

}  // namespace nwr
