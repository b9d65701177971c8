#include "nwr/etr.hpp"

#include "nwr/graph_analysis.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace nwr {

namespace {

std::string sanitize(std::string const& name) {
    std::string out;
    for (char ch : name) {
        bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') || ch == '_';
        out += ok ? ch : '_';
    }
    return out;
}

Polynomial var(ParameterId id) {
    return Polynomial::variable(id);
}

Polynomial constant(Rational const& value) {
    return Polynomial(value);
}

EtrAtom atom(Polynomial lhs, Relation relation, Polynomial rhs) {
    return {std::move(lhs), relation, std::move(rhs)};
}

std::string smt_rational(Rational const& value) {
    Rational magnitude = abs(value);
    std::string text = magnitude.get_den() == 1
                           ? magnitude.get_num().get_str() + ".0"
                           : "(/ " + magnitude.get_num().get_str() + ".0 " + magnitude.get_den().get_str() + ".0)";
    return sgn(value) < 0 ? "(- " + text + ")" : text;
}

std::string smt_polynomial(Polynomial const& poly, std::vector<std::string> const& names) {
    if (poly.is_zero()) {
        return "0.0";
    }
    std::vector<std::string> terms;
    for (auto const& [monomial, coefficient] : poly.terms()) {
        std::vector<std::string> factors;
        if (coefficient != 1 || monomial.is_constant()) {
            factors.push_back(smt_rational(coefficient));
        }
        for (auto const& [param, exponent] : monomial.powers()) {
            for (std::uint32_t e = 0; e < exponent; ++e) {
                factors.push_back(names[param]);
            }
        }
        if (factors.size() == 1) {
            terms.push_back(factors[0]);
        } else {
            std::string product = "(*";
            for (auto const& factor : factors) {
                product += " " + factor;
            }
            terms.push_back(product + ")");
        }
    }
    if (terms.size() == 1) {
        return terms[0];
    }
    std::string sum = "(+";
    for (auto const& term : terms) {
        sum += " " + term;
    }
    return sum + ")";
}

std::string_view relation_text(Relation relation, bool smt) {
    switch (relation) {
        case Relation::eq:
            return smt ? "=" : "=";
        case Relation::ge:
            return ">=";
        case Relation::gt:
            return ">";
    }
    return "?";
}

bool holds(EtrAtom const& atom, ParameterAssignment const& values) {
    Rational lhs = atom.lhs.evaluate(values);
    Rational rhs = atom.rhs.evaluate(values);
    switch (atom.relation) {
        case Relation::eq:
            return lhs == rhs;
        case Relation::ge:
            return lhs >= rhs;
        case Relation::gt:
            return lhs > rhs;
    }
    return false;
}

// Minimal s-expression reader for solver output.
struct Sexp {
    std::string atom;
    std::vector<Sexp> list;
    bool is_list = false;
};

class SexpReader {
   public:
    explicit SexpReader(std::string const& text) : text_(text) {}

    std::vector<Sexp> read_all() {
        std::vector<Sexp> out;
        while (skip_space()) {
            if (text_[pos_] == ')') {
                ++pos_;  // stray closing parenthesis
                continue;
            }
            out.push_back(read());
        }
        return out;
    }

   private:
    bool skip_space() {
        while (pos_ < text_.size()) {
            char ch = text_[pos_];
            if (ch == ';') {
                while (pos_ < text_.size() && text_[pos_] != '\n') {
                    ++pos_;
                }
            } else if (std::isspace(static_cast<unsigned char>(ch))) {
                ++pos_;
            } else {
                return true;
            }
        }
        return false;
    }

    Sexp read() {
        Sexp node;
        if (text_[pos_] == '(') {
            ++pos_;
            node.is_list = true;
            while (skip_space() && text_[pos_] != ')') {
                node.list.push_back(read());
            }
            if (pos_ < text_.size()) {
                ++pos_;
            }
            return node;
        }
        if (text_[pos_] == '|' || text_[pos_] == '"') {
            char close = text_[pos_++];
            while (pos_ < text_.size() && text_[pos_] != close) {
                node.atom += text_[pos_++];
            }
            ++pos_;
            return node;
        }
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '(' &&
               text_[pos_] != ')') {
            node.atom += text_[pos_++];
        }
        return node;
    }

    std::string const& text_;
    std::size_t pos_ = 0;
};

// Value of a model term; sets `approximate` for decimals printed with a trailing '?'.
std::optional<Rational> model_value(Sexp const& term, bool& approximate) {
    if (!term.is_list) {
        std::string text = term.atom;
        if (!text.empty() && text.back() == '?') {
            approximate = true;
            text.pop_back();
        }
        try {
            return parse_rational(text);
        } catch (RationalParseError const&) {
            return std::nullopt;
        }
    }
    if (term.list.empty() || term.list[0].is_list) {
        return std::nullopt;
    }
    std::string const& head = term.list[0].atom;
    std::vector<Rational> args;
    for (std::size_t i = 1; i < term.list.size(); ++i) {
        auto value = model_value(term.list[i], approximate);
        if (!value) {
            return std::nullopt;
        }
        args.push_back(*value);
    }
    if (args.empty()) {
        return std::nullopt;
    }
    if (head == "-") {
        if (args.size() == 1) {
            return -args[0];
        }
        Rational result = args[0];
        for (std::size_t i = 1; i < args.size(); ++i) {
            result -= args[i];
        }
        return result;
    }
    if (head == "+" || head == "*") {
        Rational result = head == "+" ? 0 : 1;
        for (auto const& arg : args) {
            result = head == "+" ? Rational(result + arg) : Rational(result * arg);
        }
        return result;
    }
    if (head == "/" && args.size() == 2 && args[1] != 0) {
        return Rational(args[0] / args[1]);
    }
    return std::nullopt;
}

void collect_definitions(Sexp const& node, SolverResult& result) {
    if (!node.is_list) {
        return;
    }
    if (node.list.size() == 5 && !node.list[0].is_list && node.list[0].atom == "define-fun" && !node.list[1].is_list) {
        bool approximate = false;
        if (auto value = model_value(node.list[4], approximate)) {
            result.model.emplace_back(node.list[1].atom, *value);
            result.approximate = result.approximate || approximate;
        } else {
            // Unreadable value (for instance an algebraic number without decimal output).
            result.approximate = true;
        }
        return;
    }
    for (auto const& child : node.list) {
        collect_definitions(child, result);
    }
}

std::optional<std::string> find_on_path(std::string const& program) {
    char const* path = std::getenv("PATH");
    if (!path) {
        return std::nullopt;
    }
    std::stringstream dirs(path);
    std::string dir;
    while (std::getline(dirs, dir, ':')) {
        auto candidate = std::filesystem::path(dir.empty() ? "." : dir) / program;
        if (::access(candidate.c_str(), X_OK) == 0) {
            return candidate.string();
        }
    }
    return std::nullopt;
}

}  // namespace

EtrQuery encode_not_nwr(WpMdp const& model, Vertex v, std::vector<Vertex> const& W) {
    MdpGraph graph(model);
    if (W.empty()) {
        throw ModelError("the right-hand side W must not be empty");
    }
    if (v >= graph.num_vertices() ||
        std::any_of(W.begin(), W.end(), [&](Vertex w) { return w >= graph.num_vertices(); })) {
        throw ModelError("vertex out of range");
    }
    EtrQuery query;
    query.v = v;
    query.W = W;
    bool const trivially = is_trivially_parametric(model.subclass());

    if (trivially) {
        query.transition_variable.resize(model.num_choices());
        for (ChoiceId c = 0; c < model.num_choices(); ++c) {
            for (std::size_t k = 0; k < model.choice(c).transitions.size(); ++k) {
                query.transition_variable[c].push_back(static_cast<ParameterId>(query.variables.size()));
                query.variables.push_back("p_" + std::to_string(c) + "_" + std::to_string(k));
            }
        }
    } else {
        for (auto const& param : model.params()) {
            query.variables.push_back("x_" + sanitize(param));
        }
    }
    query.num_parameters = query.variables.size();
    for (Vertex u = 0; u < graph.num_vertices(); ++u) {
        query.value_variable.push_back(static_cast<ParameterId>(query.variables.size()));
        query.variables.push_back(graph.is_state(u) ? "y_s" + std::to_string(u)
                                                    : "y_c" + std::to_string(graph.choice_of(u)));
    }
    auto y = [&](Vertex u) { return var(query.value_variable[u]); };
    auto delta = [&](ChoiceId c, std::size_t k) -> Polynomial {
        auto const& transition = model.choice(c).transitions[k];
        return trivially ? var(query.transition_variable[c][k]) : *transition.probability;
    };

    // Partition: targets, vertices without a path to a target, states, nature vertices.
    VertexMask targets(graph.num_vertices(), false);
    for (StateId s = 0; s < model.num_states(); ++s) {
        targets[s] = model.is_target(s);
    }
    VertexMask reach = can_reach(graph, targets);
    query.partition.resize(graph.num_vertices());
    for (Vertex u = 0; u < graph.num_vertices(); ++u) {
        if (graph.is_state(u) && model.is_target(u)) {
            query.partition[u] = VertexClass::target;
        } else if (!reach[u]) {
            query.partition[u] = VertexClass::zero;
        } else {
            query.partition[u] = graph.is_state(u) ? VertexClass::player : VertexClass::nature;
        }
    }

    for (StateId s = 0; s < model.num_states(); ++s) {
        if (query.partition[s] == VertexClass::target) {
            query.clauses.push_back({"T", {atom(y(s), Relation::eq, constant(*model.weight(s)))}});
        }
    }
    for (Vertex u = 0; u < graph.num_vertices(); ++u) {
        if (query.partition[u] == VertexClass::zero) {
            query.clauses.push_back({"Z", {atom(y(u), Relation::eq, constant(0))}});
        }
    }

    // A state takes the maximum over its outgoing edges. Inside an end component every
    // state gets the component's value, the maximum over the choices leaving it; the plain
    // maximum would let the component float above its true value.
    auto max_of = [&](Vertex state, std::vector<Vertex> const& options) {
        EtrClause either{"P", {}};
        for (Vertex u : options) {
            query.clauses.push_back({"P", {atom(y(state), Relation::ge, y(u))}});
            either.atoms.push_back(atom(y(state), Relation::eq, y(u)));
        }
        query.clauses.push_back(std::move(either));
    };
    std::vector<bool> in_component(model.num_states(), false);
    for (auto const& mec : mec_decomposition(graph).mecs) {
        if (mec.choices.empty() || query.partition[mec.states.front()] != VertexClass::player) {
            continue;
        }
        StateId representative = mec.states.front();
        std::vector<Vertex> leaving;
        for (StateId s : mec.states) {
            in_component[s] = true;
            if (s != representative) {
                query.clauses.push_back({"P", {atom(y(s), Relation::eq, y(representative))}});
            }
            for (Vertex u : graph.successors(s)) {
                if (std::find(mec.choices.begin(), mec.choices.end(), graph.choice_of(u)) == mec.choices.end()) {
                    leaving.push_back(u);
                }
            }
        }
        max_of(representative, leaving);
    }
    for (StateId s = 0; s < model.num_states(); ++s) {
        if (query.partition[s] == VertexClass::player && !in_component[s]) {
            max_of(s, graph.successors(s));
        }
    }

    for (ChoiceId c = 0; c < model.num_choices(); ++c) {
        Vertex u = graph.nature(c);
        if (query.partition[u] != VertexClass::nature) {
            continue;
        }
        Polynomial sum;
        auto const& transitions = model.choice(c).transitions;
        for (std::size_t k = 0; k < transitions.size(); ++k) {
            if (trivially || !transitions[k].probability->is_zero()) {
                sum += delta(c, k) * y(transitions[k].target);
            }
        }
        query.clauses.push_back({"N", {atom(y(u), Relation::eq, sum)}});
    }

    for (ChoiceId c = 0; c < model.num_choices(); ++c) {
        Polynomial total;
        auto const& transitions = model.choice(c).transitions;
        for (std::size_t k = 0; k < transitions.size(); ++k) {
            if (!trivially && transitions[k].probability->is_zero()) {
                continue;
            }
            query.clauses.push_back({"gp", {atom(delta(c, k), Relation::gt, constant(0))}});
            total += delta(c, k);
        }
        query.clauses.push_back({"gp", {atom(total, Relation::eq, constant(1))}});
    }

    for (Vertex w : W) {
        query.clauses.push_back({"nwr", {atom(y(v), Relation::gt, y(w))}});
    }
    return query;
}

std::string format_smtlib(EtrQuery const& query) {
    std::ostringstream out;
    out << "; not (v never worse than W) for v = " << query.variables[query.value_variable[query.v]] << ", W = {";
    for (std::size_t i = 0; i < query.W.size(); ++i) {
        out << (i ? ", " : "") << query.variables[query.value_variable[query.W[i]]];
    }
    out << "}\n(set-logic QF_NRA)\n(set-option :produce-models true)\n";
    for (auto const& name : query.variables) {
        out << "(declare-fun " << name << " () Real)\n";
    }
    std::string group;
    for (auto const& clause : query.clauses) {
        if (clause.group != group) {
            group = clause.group;
            out << "; " << group << "\n";
        }
        auto print_atom = [&](EtrAtom const& a) {
            return "(" + std::string(relation_text(a.relation, true)) + " " + smt_polynomial(a.lhs, query.variables) +
                   " " + smt_polynomial(a.rhs, query.variables) + ")";
        };
        if (clause.atoms.empty()) {
            out << "(assert false)\n";
        } else if (clause.atoms.size() == 1) {
            out << "(assert " << print_atom(clause.atoms[0]) << ")\n";
        } else {
            out << "(assert (or";
            for (auto const& a : clause.atoms) {
                out << " " << print_atom(a);
            }
            out << "))\n";
        }
    }
    out << "(check-sat)\n(get-model)\n";
    return out.str();
}

std::string format_plain(EtrQuery const& query) {
    std::ostringstream out;
    out << "exists";
    for (auto const& name : query.variables) {
        out << " " << name;
    }
    out << " :\n";
    for (std::size_t i = 0; i < query.clauses.size(); ++i) {
        auto const& clause = query.clauses[i];
        out << (i == 0 ? "    " : "and ") << "(";
        if (clause.atoms.empty()) {
            out << "false";
        }
        for (std::size_t j = 0; j < clause.atoms.size(); ++j) {
            auto const& a = clause.atoms[j];
            out << (j ? " or " : "") << to_string(a.lhs, query.variables) << " " << relation_text(a.relation, false)
                << " " << to_string(a.rhs, query.variables);
        }
        out << ")\n";
    }
    return out.str();
}

bool evaluate(EtrQuery const& query, ParameterAssignment const& values) {
    return std::all_of(query.clauses.begin(), query.clauses.end(), [&](EtrClause const& clause) {
        return std::any_of(clause.atoms.begin(), clause.atoms.end(), [&](EtrAtom const& a) { return holds(a, values); });
    });
}

SolverCommand SolverCommand::parse(std::string const& text, double timeout_seconds) {
    SolverCommand command;
    std::istringstream in(text);
    std::string word;
    while (in >> word) {
        command.argv.push_back(word);
    }
    command.timeout_seconds = timeout_seconds;
    return command;
}

std::optional<SolverCommand> default_solver() {
    if (char const* configured = std::getenv("NWR_SOLVER"); configured && *configured) {
        return SolverCommand::parse(configured);
    }
    if (auto z3 = find_on_path("z3")) {
        return SolverCommand{{*z3, "-smt2", "pp.decimal=true", "pp.decimal_precision=60", "{}"}, 60.0};
    }
    return std::nullopt;
}

std::string_view to_string(Verdict verdict) {
    switch (verdict) {
        case Verdict::sat:
            return "sat";
        case Verdict::unsat:
            return "unsat";
        case Verdict::unknown:
            return "unknown";
    }
    return "?";
}

SolverResult parse_solver_output(std::string const& output) {
    SolverResult result;
    result.output = output;
    auto nodes = SexpReader(output).read_all();
    bool found = false;
    for (auto const& node : nodes) {
        if (!found && !node.is_list) {
            if (node.atom == "sat" || node.atom == "unsat" || node.atom == "unknown") {
                result.verdict = node.atom == "sat" ? Verdict::sat : node.atom == "unsat" ? Verdict::unsat : Verdict::unknown;
                found = true;
            }
            continue;
        }
        if (found && result.verdict == Verdict::sat) {
            collect_definitions(node, result);
        }
    }
    if (!found) {
        throw SolverError("no verdict in solver output: " + output.substr(0, 200));
    }
    return result;
}

SolverResult run_solver(std::string const& script, SolverCommand const& command) {
    if (command.argv.empty()) {
        throw SolverError("empty solver command");
    }
    auto dir = std::filesystem::temp_directory_path();
    std::string pattern = (dir / "nwr_etr_XXXXXX.smt2").string();
    int fd = ::mkstemps(pattern.data(), 5);
    if (fd < 0) {
        throw SolverError("cannot create a temporary file: " + std::string(std::strerror(errno)));
    }
    std::filesystem::path script_path = pattern;
    {
        std::size_t written = 0;
        while (written < script.size()) {
            ssize_t n = ::write(fd, script.data() + written, script.size() - written);
            if (n <= 0) {
                ::close(fd);
                std::filesystem::remove(script_path);
                throw SolverError("cannot write the solver script");
            }
            written += static_cast<std::size_t>(n);
        }
        ::close(fd);
    }

    std::vector<std::string> args = command.argv;
    bool substituted = false;
    for (auto& arg : args) {
        if (auto at = arg.find("{}"); at != std::string::npos) {
            arg.replace(at, 2, script_path.string());
            substituted = true;
        }
    }
    if (!substituted) {
        args.push_back(script_path.string());
    }
    std::vector<char*> c_args;
    for (auto& arg : args) {
        c_args.push_back(arg.data());
    }
    c_args.push_back(nullptr);

    int out_pipe[2];
    int err_pipe[2];
    if (::pipe(out_pipe) != 0 || ::pipe2(err_pipe, O_CLOEXEC) != 0) {
        std::filesystem::remove(script_path);
        throw SolverError("cannot create pipes");
    }
    auto const start = std::chrono::steady_clock::now();
    pid_t pid = ::fork();
    if (pid < 0) {
        std::filesystem::remove(script_path);
        throw SolverError("cannot fork");
    }
    if (pid == 0) {
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::dup2(out_pipe[1], STDERR_FILENO);
        ::close(out_pipe[0]);
        ::close(out_pipe[1]);
        ::close(err_pipe[0]);
        ::execvp(c_args[0], c_args.data());
        int error = errno;
        [[maybe_unused]] auto ignored = ::write(err_pipe[1], &error, sizeof error);
        ::_exit(127);
    }
    ::close(out_pipe[1]);
    ::close(err_pipe[1]);

    SolverResult result;
    std::string output;
    char buffer[4096];
    bool timed_out = false;
    while (true) {
        double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        double remaining = command.timeout_seconds - elapsed;
        if (remaining <= 0) {
            timed_out = true;
            break;
        }
        pollfd pfd{out_pipe[0], POLLIN, 0};
        int ready = ::poll(&pfd, 1, static_cast<int>(std::min(remaining, 1.0) * 1000) + 1);
        if (ready < 0 && errno != EINTR) {
            break;
        }
        if (ready <= 0) {
            continue;
        }
        ssize_t n = ::read(out_pipe[0], buffer, sizeof buffer);
        if (n <= 0) {
            break;
        }
        output.append(buffer, static_cast<std::size_t>(n));
    }
    if (timed_out) {
        ::kill(pid, SIGKILL);
    }
    int status = 0;
    ::waitpid(pid, &status, 0);
    ::close(out_pipe[0]);
    int exec_error = 0;
    ssize_t got = ::read(err_pipe[0], &exec_error, sizeof exec_error);
    ::close(err_pipe[0]);
    std::filesystem::remove(script_path);
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (got == static_cast<ssize_t>(sizeof exec_error)) {
        throw SolverError("cannot run '" + command.argv[0] + "': " + std::strerror(exec_error));
    }
    if (timed_out) {
        result.verdict = Verdict::unknown;
        result.timed_out = true;
        result.output = output;
        result.seconds = seconds;
        return result;
    }
    result = parse_solver_output(output);
    result.seconds = seconds;
    return result;
}

SatCheck verify_sat(WpMdp const& model, EtrQuery const& query, SolverResult const& result, double tolerance) {
    SatCheck check;
    if (result.verdict != Verdict::sat) {
        check.detail = "not a sat answer";
        return check;
    }
    std::unordered_map<std::string, ParameterId> index;
    for (ParameterId i = 0; i < query.variables.size(); ++i) {
        index.emplace(query.variables[i], i);
    }
    ParameterAssignment solver_values(query.variables.size());
    for (auto const& [name, value] : result.model) {
        if (auto it = index.find(name); it != index.end()) {
            solver_values[it->second] = value;
        }
    }
    for (std::size_t i = 0; i < query.num_parameters; ++i) {
        if (!solver_values[i]) {
            check.detail = "solver model lacks " + query.variables[i];
            return check;
        }
    }

    if (is_trivially_parametric(model.subclass())) {
        for (ChoiceId c = 0; c < model.num_choices(); ++c) {
            std::vector<Rational> row;
            Rational sum = 0;
            for (ParameterId id : query.transition_variable[c]) {
                row.push_back(*solver_values[id]);
                sum += row.back();
            }
            // Decimal approximations need not sum to one exactly.
            if (result.approximate && sum > 0) {
                for (auto& entry : row) {
                    entry /= sum;
                }
            }
            check.valuation.distributions.push_back(std::move(row));
        }
    } else {
        for (std::size_t i = 0; i < query.num_parameters; ++i) {
            check.valuation.assignment.push_back(solver_values[i]);
        }
    }
    ChoiceDistributions distributions;
    try {
        distributions = instantiate(model, check.valuation);
    } catch (std::exception const& error) {
        check.detail = error.what();
        return check;
    }
    check.graph_preserving = is_graph_preserving(model, distributions, &check.detail);
    if (!check.graph_preserving) {
        return check;
    }

    MdpGraph graph(model);
    check.exact_values = vertex_values(graph, solve_exact(model, distributions));
    ParameterAssignment full(query.variables.size());
    for (std::size_t i = 0; i < query.num_parameters; ++i) {
        full[i] = is_trivially_parametric(model.subclass()) ? std::optional<Rational>() : solver_values[i];
    }
    if (is_trivially_parametric(model.subclass())) {
        for (ChoiceId c = 0; c < model.num_choices(); ++c) {
            for (std::size_t k = 0; k < query.transition_variable[c].size(); ++k) {
                full[query.transition_variable[c][k]] = distributions[c][k];
            }
        }
    }
    for (Vertex u = 0; u < graph.num_vertices(); ++u) {
        full[query.value_variable[u]] = check.exact_values[u];
    }
    check.formula_holds = evaluate(query, full);

    check.values_match = true;
    for (Vertex u = 0; u < graph.num_vertices(); ++u) {
        auto const& reported = solver_values[query.value_variable[u]];
        if (!reported) {
            continue;
        }
        bool same = result.approximate ? std::abs(to_double(*reported - check.exact_values[u])) <= tolerance
                                       : *reported == check.exact_values[u];
        if (!same) {
            check.values_match = false;
            check.detail = query.variables[query.value_variable[u]] + ": solver " + to_string(*reported) + ", exact " +
                           to_string(check.exact_values[u]);
            break;
        }
    }
    check.separates = std::all_of(query.W.begin(), query.W.end(),
                                  [&](Vertex w) { return check.exact_values[query.v] > check.exact_values[w]; });
    if (!check.separates && check.detail.empty()) {
        check.detail = "exact values do not separate v from W";
    }
    return check;
}

}  // namespace nwr
