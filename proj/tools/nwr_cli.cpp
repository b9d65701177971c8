// Command-line front end: reduce, validate, mc-equiv, export-etr and bench.

#include "nwr/etr.hpp"
#include "nwr/graph_analysis.hpp"
#include "nwr/mc_equiv.hpp"
#include "nwr/model_io.hpp"
#include "nwr/oracle.hpp"
#include "nwr/pipeline.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace nwr;

namespace {

enum ExitCode : int { ok = 0, violation = 1, usage = 2, io = 3, external = 4 };

class UsageError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

struct PruneFlags {
    int setup = 1;
    std::optional<std::size_t> inner;
    std::optional<std::size_t> outer;
    bool no_skip_first = false;
    bool membership_edges = false;

    void attach(CLI::App* app) {
        app->add_option("--setup", setup, "Experimental setup: 1 (inner 3, outer 17) or 2 (inner 0, outer 3)")
            ->check(CLI::IsMember({1, 2}));
        app->add_option("--inner", inner, "Override the inner pruning iterations");
        app->add_option("--outer", outer, "Override the outer iterations");
        app->add_flag("--no-skip-first", no_skip_first, "Run the inner loop in the first outer iteration too");
        app->add_flag("--enable-membership-edges", membership_edges, "Add {v} -> W edges for v in W");
    }

    PruneConfig config() const {
        PruneConfig config = setup == 1 ? PruneConfig::setup1() : PruneConfig::setup2();
        if (inner) {
            config.max_inner = *inner;
        }
        if (outer) {
            config.max_outer = *outer;
        }
        if (no_skip_first) {
            config.skip_first_inner = false;
        }
        config.membership_edges = membership_edges;
        return config;
    }
};

std::string format_reports(std::vector<ReductionReport> const& reports, std::string const& format) {
    return format == "json" ? format_report_json(reports) : format_report_csv(reports);
}

void emit(std::optional<fs::path> const& path, std::string const& text) {
    if (path) {
        write_text(*path, text);
    } else {
        std::cout << text;
    }
}

// reduce

struct ReduceArgs {
    fs::path in;
    std::optional<fs::path> out;
    std::optional<fs::path> map;
    std::optional<fs::path> report;
    std::string format = "csv";
    PruneFlags prune;
};

int cmd_reduce(ReduceArgs const& args) {
    WpMdp input = read_model(args.in);
    auto result = run_reduction(input, args.prune.config(), args.in.stem().string());
    check_report(result.report);
    if (args.out) {
        write_model(result.model, *args.out);
    }
    if (args.map) {
        write_text(*args.map, format_model_map(result.map));
    }
    emit(args.report, format_reports({result.report}, args.format));
    for (auto const& note : result.report.notes) {
        std::cerr << "note: " << note << "\n";
    }
    return ok;
}

// validate

struct ValidateArgs {
    fs::path in;
    fs::path reduced;
    fs::path map;
    std::optional<fs::path> report;
    std::size_t samples = 20;
    std::uint64_t seed = 1;
};

int cmd_validate(ValidateArgs const& args) {
    PreparedModel prepared = prepare_for_reduction(read_model(args.in));
    WpMdp reduced = read_model(args.reduced);
    ModelMap map = parse_model_map(read_text(args.map));
    if (map.state_image.size() != prepared.model.num_states() ||
        std::any_of(map.state_image.begin(), map.state_image.end(),
                    [&](StateId s) { return s >= reduced.num_states(); })) {
        throw SchemaError("the map does not fit the models");
    }
    if (args.samples == 0) {
        std::cerr << "warning: no samples, nothing checked\n";
        return ok;
    }
    PreservationOptions options;
    options.samples = args.samples;
    options.seed = args.seed;
    auto result = check_value_preservation(prepared.model, reduced, map, options);

    nlohmann::json doc = {{"samples", result.samples},
                          {"exact", result.exact},
                          {"max_delta", result.max_delta},
                          {"violations", nlohmann::json::array()}};
    for (auto const& v : result.violations) {
        doc["violations"].push_back(
            {{"sample", v.sample}, {"state", v.state}, {"original", v.original}, {"reduced", v.reduced}, {"detail", v.detail}});
    }
    if (args.report) {
        write_text(*args.report, doc.dump(2) + "\n");
    }
    if (!result.ok()) {
        std::cerr << result.violations.size() << " violations in " << result.samples << " samples";
        if (args.report) {
            std::cerr << ", see " << args.report->string();
        } else {
            std::cerr << ", first: state '" << result.violations.front().state << "' "
                      << result.violations.front().detail;
        }
        std::cerr << "\n";
        return violation;
    }
    std::cout << "ok: " << result.samples << " samples, " << (result.exact ? "exact" : "iterative") << " values\n";
    return ok;
}

// mc-equiv

struct McEquivArgs {
    fs::path in;
    std::optional<fs::path> out;
    std::optional<fs::path> collapsed;
};

int cmd_mc_equiv(McEquivArgs const& args) {
    WpMdp input = read_model(args.in);
    auto diagnostics = validate_model(input);
    if (has_errors(diagnostics)) {
        throw ModelError("invalid model:\n" + format_diagnostics(diagnostics));
    }
    if (is_weighted(input.subclass())) {
        throw UsageError("mc-equiv needs a non-weighted chain");
    }
    for (StateId s = 0; s < input.num_states(); ++s) {
        if (input.num_choices_of(s) > 1) {
            throw UsageError("state '" + input.state_name(s) + "' has several actions; mc-equiv needs a Markov chain");
        }
    }
    WpMdp chain = is_trivially_parametric(input.subclass()) ? input : forget_probabilities(input);
    auto [contracted, contraction] = contract_extremal(chain);
    EquivPartition partition = mc_equiv_classes(contracted);

    // Classes over the input states; extremal states join the class of fin or fail.
    std::vector<std::vector<std::string>> members(partition.classes.size());
    for (StateId s = 0; s < input.num_states(); ++s) {
        members[partition.class_of[contraction.state_image[s]]].push_back(input.state_name(s));
    }
    nlohmann::json doc = {{"classes", nlohmann::json::array()}, {"diagnostics", partition.diagnostics}};
    for (std::size_t k = 0; k < partition.classes.size(); ++k) {
        auto const& cls = partition.classes[k];
        nlohmann::json entry = {{"members", members[k]}};
        entry["exit"] = cls.exit ? nlohmann::json(contracted.state_name(*cls.exit)) : nlohmann::json(nullptr);
        doc["classes"].push_back(std::move(entry));
    }
    emit(args.out, doc.dump(2) + "\n");
    if (args.collapsed) {
        write_model(mc_collapse(contracted, partition).first, *args.collapsed);
    }
    for (auto const& line : partition.diagnostics) {
        std::cerr << "warning: " << line << "\n";
    }
    return ok;
}

// export-etr

struct EtrArgs {
    fs::path in;
    std::optional<fs::path> out;
    std::string v;
    std::vector<std::string> W;
    bool solve = false;
    std::optional<std::string> solver_cmd;
    double timeout = 60.0;
    bool plain = false;
};

/// A state name, or "state:action" for the nature vertex of a choice.
Vertex resolve_vertex(WpMdp const& model, std::string const& name) {
    MdpGraph graph(model);
    if (auto s = model.find_state(name)) {
        return *s;
    }
    if (auto colon = name.rfind(':'); colon != std::string::npos) {
        if (auto s = model.find_state(name.substr(0, colon))) {
            if (auto c = model.find_choice(*s, name.substr(colon + 1))) {
                return graph.nature(*c);
            }
        }
    }
    throw UsageError("unknown vertex '" + name + "' (use a state name or state:action)");
}

int cmd_export_etr(EtrArgs const& args) {
    WpMdp model = read_model(args.in);
    auto diagnostics = validate_model(model);
    if (has_errors(diagnostics)) {
        throw ModelError("invalid model:\n" + format_diagnostics(diagnostics));
    }
    std::vector<Vertex> W;
    for (auto const& name : args.W) {
        W.push_back(resolve_vertex(model, name));
    }
    EtrQuery query = encode_not_nwr(model, resolve_vertex(model, args.v), W);
    std::string script = format_smtlib(query);
    if (args.plain) {
        std::cerr << format_plain(query);
    }
    if (args.out || !args.solve) {
        emit(args.out, script);
    }
    if (!args.solve) {
        return ok;
    }
    std::optional<SolverCommand> solver;
    if (args.solver_cmd) {
        solver = SolverCommand::parse(*args.solver_cmd, args.timeout);
    } else if ((solver = default_solver())) {
        solver->timeout_seconds = args.timeout;
    } else {
        throw UsageError("--solve needs a solver: pass --solver-cmd, set NWR_SOLVER or put z3 on PATH");
    }
    SolverResult result = run_solver(script, *solver);
    std::cout << to_string(result.verdict) << (result.timed_out ? " (timeout)" : "") << "\n";
    if (result.verdict != Verdict::sat) {
        return ok;
    }
    SatCheck check = verify_sat(model, query, result);
    MdpGraph graph(model);
    auto vertex_name = [&](Vertex u) {
        return graph.is_state(u) ? model.state_name(u)
                                 : model.state_name(graph.state_of(u)) + ":" + model.choice(graph.choice_of(u)).action;
    };
    if (is_trivially_parametric(model.subclass())) {
        for (ChoiceId c = 0; c < model.num_choices() && c < check.valuation.distributions.size(); ++c) {
            auto const& choice = model.choice(c);
            for (std::size_t k = 0; k < choice.transitions.size(); ++k) {
                std::cout << "P(" << vertex_name(graph.nature(c)) << " -> " << model.state_name(choice.transitions[k].target)
                          << ") = " << to_string(check.valuation.distributions[c][k]) << "\n";
            }
        }
    } else {
        for (std::size_t i = 0; i < model.params().size() && i < check.valuation.assignment.size(); ++i) {
            std::cout << model.params()[i] << " = " << to_string(*check.valuation.assignment[i]) << "\n";
        }
    }
    if (!check.exact_values.empty()) {
        std::cout << "Rew(" << vertex_name(query.v) << ") = " << to_string(check.exact_values[query.v]) << "\n";
        for (Vertex w : query.W) {
            std::cout << "Rew(" << vertex_name(w) << ") = " << to_string(check.exact_values[w]) << "\n";
        }
    }
    if (!check.ok()) {
        std::cerr << "solver answer does not re-verify: " << check.detail << "\n";
        return external;
    }
    return ok;
}

// bench

struct BenchArgs {
    fs::path dir;
    std::optional<fs::path> report;
    std::string format = "csv";
    std::size_t jobs = 1;
    PruneFlags prune;
};

int cmd_bench(BenchArgs const& args) {
    if (!fs::is_directory(args.dir)) {
        throw IoError("not a directory: " + args.dir.string());
    }
    std::vector<fs::path> instances;
    for (auto const& entry : fs::recursive_directory_iterator(args.dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            instances.push_back(entry.path());
        }
    }
    std::sort(instances.begin(), instances.end());

    PruneConfig const config = args.prune.config();
    std::vector<std::optional<ReductionReport>> reports(instances.size());
    std::vector<std::string> failures;
    std::mutex lock;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < instances.size(); i = next++) {
            try {
                auto result = run_reduction(read_model(instances[i]), config, instances[i].stem().string());
                check_report(result.report);
                std::lock_guard guard(lock);
                std::cerr << result.report.instance << ": " << result.report.reduced.states << " states, "
                          << result.report.reduced.choices << " choices (" << result.report.seconds << " s)\n";
                reports[i] = std::move(result.report);
            } catch (std::exception const& error) {
                std::lock_guard guard(lock);
                failures.push_back(instances[i].string() + ": " + error.what());
                std::cerr << "failed: " << failures.back() << "\n";
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < std::max<std::size_t>(1, args.jobs); ++j) {
        pool.emplace_back(worker);
    }
    for (auto& thread : pool) {
        thread.join();
    }
    std::vector<ReductionReport> done;
    for (auto& report : reports) {
        if (report) {
            done.push_back(std::move(*report));
        }
    }
    emit(args.report, format_reports(done, args.format));
    if (!failures.empty()) {
        std::cerr << failures.size() << " of " << instances.size() << " instances failed\n";
        return violation;
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Never-worse-relation reductions of weighted and parametric MDPs"};
    app.require_subcommand(1);

    ReduceArgs reduce_args;
    auto* reduce_cmd = app.add_subcommand("reduce", "Reduce a model and report the stage counts");
    reduce_cmd->add_option("--in", reduce_args.in, "Input model document")->required();
    reduce_cmd->add_option("--out", reduce_args.out, "Write the reduced model");
    reduce_cmd->add_option("--map", reduce_args.map, "Write the state and choice map (for validate)");
    reduce_cmd->add_option("--report", reduce_args.report, "Write the report (default: stdout)");
    reduce_cmd->add_option("--format", reduce_args.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
    reduce_args.prune.attach(reduce_cmd);

    ValidateArgs validate_args;
    auto* validate_cmd = app.add_subcommand("validate", "Check that a reduction preserves values on sampled valuations");
    validate_cmd->add_option("--in", validate_args.in, "The model given to reduce")->required();
    validate_cmd->add_option("--reduced", validate_args.reduced, "The reduced model")->required();
    validate_cmd->add_option("--map", validate_args.map, "The map written by reduce")->required();
    validate_cmd->add_option("--report", validate_args.report, "Write the violations as JSON");
    validate_cmd->add_option("--samples", validate_args.samples, "Number of sampled valuations");
    validate_cmd->add_option("--seed", validate_args.seed, "Sampling seed");

    McEquivArgs mc_args;
    auto* mc_cmd = app.add_subcommand("mc-equiv", "Value-equivalence classes of a parametric Markov chain");
    mc_cmd->add_option("--in", mc_args.in, "Input chain")->required();
    mc_cmd->add_option("--out", mc_args.out, "Write the partition as JSON (default: stdout)");
    mc_cmd->add_option("--collapsed", mc_args.collapsed, "Write the collapsed chain");

    EtrArgs etr_args;
    auto* etr_cmd = app.add_subcommand("export-etr", "Encode 'v is not never worse than W' as an SMT-LIB query");
    etr_cmd->add_option("--in", etr_args.in, "Input model")->required();
    etr_cmd->add_option("--out", etr_args.out, "Write the SMT-LIB script (default: stdout unless --solve)");
    etr_cmd->add_option("--v", etr_args.v, "Vertex v: a state name or state:action")->required();
    etr_cmd->add_option("--W", etr_args.W, "Vertices of W")->required()->delimiter(',');
    etr_cmd->add_flag("--solve", etr_args.solve, "Run the solver and re-check a sat answer exactly");
    etr_cmd->add_option("--solver-cmd", etr_args.solver_cmd,
                        "Solver command; {} is replaced by the script path (default: $NWR_SOLVER, else z3)");
    etr_cmd->add_option("--timeout", etr_args.timeout, "Solver timeout in seconds");
    etr_cmd->add_flag("--plain", etr_args.plain, "Also print the sentence in plain notation to stderr");

    BenchArgs bench_args;
    auto* bench_cmd = app.add_subcommand("bench", "Reduce every model document under a directory");
    bench_cmd->add_option("--in", bench_args.dir, "Directory of model documents")->required();
    bench_cmd->add_option("--report", bench_args.report, "Write the table (default: stdout)");
    bench_cmd->add_option("--format", bench_args.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
    bench_cmd->add_option("--jobs", bench_args.jobs, "Worker threads")->check(CLI::PositiveNumber);
    bench_args.prune.attach(bench_cmd);

    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const& error) {
        int code = app.exit(error);
        return code == 0 ? ok : usage;
    }

    try {
        if (reduce_cmd->parsed()) {
            return cmd_reduce(reduce_args);
        }
        if (validate_cmd->parsed()) {
            return cmd_validate(validate_args);
        }
        if (mc_cmd->parsed()) {
            return cmd_mc_equiv(mc_args);
        }
        if (etr_cmd->parsed()) {
            return cmd_export_etr(etr_args);
        }
        return cmd_bench(bench_args);
    } catch (UsageError const& error) {
        std::cerr << "error: " << error.what() << "\n";
        return usage;
    } catch (SolverError const& error) {
        std::cerr << "solver error: " << error.what() << "\n";
        return external;
    } catch (IoError const& error) {
        std::cerr << "I/O error: " << error.what() << "\n";
        return io;
    } catch (SchemaError const& error) {
        std::cerr << "bad input: " << error.what() << "\n";
        return io;
    } catch (ModelError const& error) {
        std::cerr << "bad input: " << error.what() << "\n";
        return io;
    } catch (std::exception const& error) {
        std::cerr << "error: " << error.what() << "\n";
        return violation;
    }
}
