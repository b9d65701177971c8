// Acceptance run: one PASS/FAIL/SKIP line per criterion, exit status 1 if any fails.

#include "nwr/deweight.hpp"
#include "nwr/etr.hpp"
#include "nwr/mc_equiv.hpp"
#include "nwr/model_io.hpp"
#include "nwr/oracle.hpp"
#include "nwr/pipeline.hpp"

#include "support/fixtures.hpp"
#include "support/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

using namespace nwr;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

enum class Outcome { pass, fail, skip };

struct Result {
    Outcome outcome = Outcome::fail;
    std::string detail;
};

Result pass(std::string detail) {
    return {Outcome::pass, std::move(detail)};
}

Result fail(std::string detail) {
    return {Outcome::fail, std::move(detail)};
}

std::string fmt(double value, int digits = 3) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(digits);
    out << value;
    return out.str();
}

std::string sci(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.1e", value);
    return buffer;
}

Result fig1_exact() {
    WpMdp model = nwr::testing::fig1_chain();
    auto dist = instantiate(model, Valuation{});
    auto start = Clock::now();
    auto values = solve_exact(model, dist);
    double ms = seconds_since(start) * 1e3;
    Rational p = values.state[*model.find_state("p")];
    Rational q = values.state[*model.find_state("q")];
    std::string detail = "Rew(p) = " + to_string(p) + ", Rew(q) = " + to_string(q) + ", " + fmt(ms) + " ms";
    return (p == Rational(3, 4) && q == Rational(19, 8) && ms < 1.0) ? pass(detail) : fail(detail);
}

Result fig2a_example() {
    WpMdp model = nwr::testing::fig2a_wpmdp();
    auto dist = instantiate(model, Valuation{{Rational(3, 5), Rational(7, 25)}, {}});
    StateId p = *model.find_state("p");
    StateId q = *model.find_state("q");
    ChoiceId qa = *model.find_choice(q, "a");
    ChoiceId qb = *model.find_choice(q, "b");
    auto exact = solve_exact(model, dist);
    auto approx = solve_iterative(model, dist, 1e-13);
    bool exact_ok = exact.choice[qa] == parse_rational("0.72") && exact.choice[qb] == parse_rational("2.4") &&
                    exact.state[p] == parse_rational("1.616");
    double error = std::max({std::abs(approx.choice[qa] - 0.72), std::abs(approx.choice[qb] - 2.4),
                             std::abs(approx.state[p] - 1.616)});
    std::string detail = "exact (" + to_string(exact.choice[qa]) + ", " + to_string(exact.choice[qb]) + ", " +
                         to_string(exact.state[p]) + "), iterative error " + sci(error);
    return (exact_ok && error <= 1e-9) ? pass(detail) : fail(detail);
}

Result table1(fs::path const& benchmarks) {
    struct Row {
        fs::path file;
        StageCounts pre;
        StageCounts reduced;
    };
    std::vector<Row> rows = {
        {benchmarks / "brp_not_rec_but_sent" / "brp_64_2_not_rec_but_sent.json", {8, 6}, {5, 3}},
        {benchmarks / "consensus_disagree" / "consensus_2_2_disagree.json", {232, 344}, {148, 260}},
    };
    std::string detail;
    bool ok = true;
    for (auto const& row : rows) {
        auto start = Clock::now();
        auto result = run_reduction(read_model(row.file), PruneConfig::setup1(), row.file.stem().string());
        double seconds = seconds_since(start);
        auto const& r = result.report;
        ok = ok && r.preprocessed == row.pre && r.reduced == row.reduced && seconds <= 300.0;
        detail += (detail.empty() ? "" : "; ") + r.instance + " " + std::to_string(r.preprocessed.states) + "/" +
                  std::to_string(r.preprocessed.choices) + " -> " + std::to_string(r.reduced.states) + "/" +
                  std::to_string(r.reduced.choices) + " in " + fmt(seconds) + " s";
    }
    return ok ? pass(detail) : fail(detail);
}

nwr::testing::RandomModelOptions weighted_corpus_options() {
    nwr::testing::RandomModelOptions options;
    options.max_weights = 4;
    options.max_states = 6;  // at most 10 states with the targets
    options.dead_end_probability = 0.05;
    return options;
}

Result deweight_ratio() {
    auto start = Clock::now();
    std::mt19937_64 rng(1001);
    auto options = weighted_corpus_options();
    std::size_t checked = 0;
    std::size_t violations = 0;
    for (int trial = 0; trial < 100; ++trial) {
        WpMdp model = nwr::testing::random_tpmdp(rng, options);
        auto [result, map] = deweight_pmdp(model);
        MdpGraph from(model);
        MdpGraph to(result);
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            auto sample = sample_valuation(model, seed, SamplingProfile::mixed);
            // One parameter per transition, numbered choice by choice.
            ParameterAssignment assignment;
            for (auto const& row : sample.distributions) {
                for (auto const& value : row) {
                    assignment.emplace_back(value);
                }
            }
            auto original = solve_exact(model, sample.distributions);
            auto scaled = solve_exact(result, instantiate(result, Valuation{assignment, {}}));
            for (Vertex v = 0; v < from.num_vertices(); ++v) {
                ++checked;
                if (scaled.vertex(to, map.map_vertex(from, to, v)) != *map.z * original.vertex(from, v)) {
                    ++violations;
                }
            }
        }
    }
    double seconds = seconds_since(start);
    std::string detail = std::to_string(checked) + " vertex values, " + std::to_string(violations) + " violations, " +
                         fmt(seconds) + " s";
    return (violations == 0 && seconds <= 60.0) ? pass(detail) : fail(detail);
}

Result deweight_ordering() {
    std::mt19937_64 rng(1001);  // same corpus as the ratio check
    auto options = weighted_corpus_options();
    std::size_t valuations = 0;
    std::size_t violations = 0;
    for (int trial = 0; trial < 100; ++trial) {
        WpMdp model = nwr::testing::random_tpmdp(rng, options);
        auto [result, map] = deweight_tpmdp(model);
        auto targets = model.targets();
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            ++valuations;
            auto values = solve_exact(result, sample_valuation(result, seed, SamplingProfile::mixed).distributions);
            bool ordered = values.state[map.state_injection[targets[0]]] == 0;
            for (std::size_t i = 1; i < targets.size(); ++i) {
                ordered = ordered && values.state[map.state_injection[targets[i - 1]]] <
                                         values.state[map.state_injection[targets[i]]];
            }
            violations += ordered ? 0 : 1;
        }
    }
    std::string detail = std::to_string(valuations) + " valuations, " + std::to_string(violations) + " violations";
    return violations == 0 ? pass(detail) : fail(detail);
}

struct SoundnessRun {
    Result values;
    Result edges;
};

SoundnessRun reduction_soundness() {
    auto start = Clock::now();
    std::mt19937_64 rng(2002);
    nwr::testing::RandomModelOptions options;
    options.max_states = 10;  // plus fin and fail
    options.max_actions = 3;
    std::size_t states = 0;
    std::size_t removed = 0;
    std::size_t value_violations = 0;
    std::size_t edges = 0;
    std::size_t counterexamples = 0;
    std::string first_problem;
    double edge_seconds = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        WpMdp model = nwr::testing::random_tpmdp(rng, options);
        auto observer = [&](WpMdp const& round, UnderApproxGraph const& ua, std::vector<NwrFact> const&) {
            auto edge_start = Clock::now();
            edges += ua.num_edges();
            auto found = nwr::testing::falsify_edges(round, ua, 50, 7919 * trial, SamplingProfile::adversarial);
            counterexamples += found.size();
            if (!found.empty() && first_problem.empty()) {
                first_problem = found.front();
            }
            edge_seconds += seconds_since(edge_start);
        };
        auto result = reduce(model, PruneConfig::setup1(), observer);
        PreservationOptions check;
        check.samples = 20;
        check.seed = trial;
        auto report = check_value_preservation(model, result.model, result.map, check);
        states += model.num_states();
        removed += model.num_states() - result.model.num_states();
        value_violations += report.violations.size();
        if (!report.ok() && first_problem.empty()) {
            first_problem = report.violations.front().detail;
        }
    }
    double seconds = seconds_since(start) - edge_seconds;
    SoundnessRun run;
    std::string values = "200 models, " + std::to_string(removed) + " of " + std::to_string(states) +
                         " states removed, " + std::to_string(value_violations) + " violations, " + fmt(seconds) + " s";
    run.values = (value_violations == 0 && seconds <= 300.0) ? pass(values) : fail(values + " " + first_problem);
    std::string edge_text = std::to_string(edges) + " edges x 50 adversarial valuations, " +
                            std::to_string(counterexamples) + " counterexamples, " + fmt(edge_seconds) + " s";
    run.edges = counterexamples == 0 ? pass(edge_text) : fail(edge_text + " " + first_problem);
    return run;
}

Result mc_equivalence() {
    std::mt19937_64 rng(3003);
    std::size_t mismatches = 0;
    std::size_t merged = 0;
    std::size_t preservation = 0;
    for (int trial = 0; trial < 100; ++trial) {
        WpMdp mc = nwr::testing::contracted_chain(rng, 6);
        auto partition = mc_equiv_classes(mc);
        auto related = nwr::testing::brute_force_relation(mc);
        for (StateId u = 0; u < mc.num_states(); ++u) {
            for (StateId w = 0; w < mc.num_states(); ++w) {
                mismatches += (partition.class_of[u] == partition.class_of[w]) != related[u][w] ? 1 : 0;
            }
        }
        merged += mc.num_states() - partition.classes.size();
        auto [collapsed, map] = mc_collapse(mc, partition);
        PreservationOptions options;
        options.samples = 20;
        options.seed = trial;
        preservation += check_value_preservation(mc, collapsed, map, options).violations.size();
    }
    std::string detail = "100 chains, " + std::to_string(merged) + " states merged, " + std::to_string(mismatches) +
                         " oracle mismatches, " + std::to_string(preservation) + " value violations";
    return (mismatches == 0 && preservation == 0) ? pass(detail) : fail(detail);
}

Result etr_round_trip() {
    auto solver = default_solver();
    if (!solver) {
        return {Outcome::skip, "no SMT solver found (set NWR_SOLVER or put z3 on PATH)"};
    }
    std::mt19937_64 rng(4004);
    nwr::testing::RandomModelOptions options;
    options.max_successors = 3;
    std::size_t sat = 0;
    std::size_t unsat = 0;
    std::size_t unknown = 0;
    std::size_t bad = 0;
    std::string first_problem;
    for (int trial = 0; trial < 30; ++trial) {
        bool weighted = trial % 3 == 0;
        options.max_weights = weighted ? 3 : 0;
        options.max_states = weighted ? 5 : 6;  // at most 8 states with the targets
        WpMdp model = nwr::testing::random_tpmdp(rng, options);
        MdpGraph graph(model);
        std::uniform_int_distribution<Vertex> pick(0, static_cast<Vertex>(graph.num_vertices() - 1));
        Vertex v = pick(rng);
        std::vector<Vertex> W{pick(rng)};
        if (trial % 2 == 0) {
            W.push_back(pick(rng));
        }
        EtrQuery query = encode_not_nwr(model, v, W);
        SolverResult result = run_solver(format_smtlib(query), *solver);
        auto counterexample = falsify_nwr(model, v, W, 200, 6007 * trial, SamplingProfile::mixed);
        std::string problem;
        if (result.verdict == Verdict::sat) {
            ++sat;
            SatCheck check = verify_sat(model, query, result);
            if (!check.ok()) {
                problem = "sat answer does not re-verify: " + check.detail;
            }
        } else if (result.verdict == Verdict::unsat) {
            ++unsat;
            if (counterexample) {
                problem = "unsat contradicted by a sampled valuation";
            }
        } else {
            ++unknown;
        }
        if (!problem.empty()) {
            ++bad;
            if (first_problem.empty()) {
                first_problem = "instance " + std::to_string(trial) + ": " + problem;
            }
        }
    }
    std::string detail = "30 instances: " + std::to_string(sat) + " sat, " + std::to_string(unsat) + " unsat, " +
                         std::to_string(unknown) + " unknown, " + std::to_string(bad) + " problems";
    return bad == 0 ? pass(detail) : fail(detail + "; " + first_problem);
}

}  // namespace

int main(int argc, char** argv) {
    fs::path benchmarks = argc > 1 ? fs::path(argv[1]) : fs::path(NWR_BENCHMARK_DIR);
    bool failed = false;
    auto report = [&](int number, std::string const& title, std::function<Result()> const& check) {
        Result verdict;
        try {
            verdict = check();
        } catch (std::exception const& error) {
            verdict = fail(std::string("exception: ") + error.what());
        }
        char const* tag = verdict.outcome == Outcome::pass ? "PASS" : verdict.outcome == Outcome::skip ? "SKIP" : "FAIL";
        failed = failed || verdict.outcome == Outcome::fail;
        std::printf("[%s] %d %s: %s\n", tag, number, title.c_str(), verdict.detail.c_str());
        std::fflush(stdout);
    };

    report(1, "Fig. 1 exact values", fig1_exact);
    report(2, "Fig. 2(a) values at x = 3/5, y = 7/25", fig2a_example);
    report(3, "Table 1 counts on bundled exports", [&] { return table1(benchmarks); });
    report(4, "deweight value ratio", deweight_ratio);
    report(5, "deweight target ordering", deweight_ordering);
    std::optional<SoundnessRun> soundness;
    auto soundness_part = [&](bool edges) {
        if (!soundness) {
            soundness = reduction_soundness();
        }
        return edges ? soundness->edges : soundness->values;
    };
    report(6, "reduction preserves values", [&] { return soundness_part(false); });
    report(7, "under-approximation edges survive falsification", [&] { return soundness_part(true); });
    report(8, "Markov chain equivalence classes", mc_equivalence);
    report(9, "ETR round trip", etr_round_trip);
    return failed ? 1 : 0;
}
