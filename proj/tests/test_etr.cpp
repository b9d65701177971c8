#include "nwr/etr.hpp"
#include "nwr/graph_analysis.hpp"

#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace nwr;

namespace {

Vertex state_vertex(WpMdp const& model, std::string const& name) {
    return *model.find_state(name);
}

EtrQuery without_group(EtrQuery query, std::string const& group) {
    std::erase_if(query.clauses, [&](EtrClause const& clause) { return clause.group == group; });
    return query;
}

/// Full assignment: the valuation's parameters plus the exact values.
ParameterAssignment exact_assignment(WpMdp const& model, EtrQuery const& query, Valuation const& valuation) {
    MdpGraph graph(model);
    auto distributions = instantiate(model, valuation);
    auto values = vertex_values(graph, solve_exact(model, distributions));
    ParameterAssignment full(query.variables.size());
    if (is_trivially_parametric(model.subclass())) {
        for (ChoiceId c = 0; c < model.num_choices(); ++c) {
            for (std::size_t k = 0; k < distributions[c].size(); ++k) {
                full[query.transition_variable[c][k]] = distributions[c][k];
            }
        }
    } else {
        for (std::size_t i = 0; i < query.num_parameters; ++i) {
            full[i] = valuation.assignment[i];
        }
    }
    for (Vertex u = 0; u < graph.num_vertices(); ++u) {
        full[query.value_variable[u]] = values[u];
    }
    return full;
}

Valuation uniform_valuation(WpMdp const& model) {
    Valuation valuation;
    for (auto const& choice : model.choices()) {
        std::size_t k = choice.transitions.size();
        valuation.distributions.emplace_back(k, Rational(1, static_cast<long>(k)));
    }
    return valuation;
}

std::size_t count_atoms(EtrQuery const& query) {
    std::size_t atoms = 0;
    for (auto const& clause : query.clauses) {
        atoms += clause.atoms.size();
    }
    return atoms;
}

}  // namespace

TEST(Etr, PartitionsTheVertices) {
    WpMdp model = nwr::testing::fig2d_tpmdp();
    MdpGraph graph(model);
    auto query = encode_not_nwr(model, state_vertex(model, "q"), {state_vertex(model, "fin")});
    EXPECT_EQ(query.partition[state_vertex(model, "fin")], VertexClass::target);
    EXPECT_EQ(query.partition[state_vertex(model, "fail")], VertexClass::target);
    // p only reaches fail, which is a target; it is a player state with value 0.
    EXPECT_EQ(query.partition[state_vertex(model, "q")], VertexClass::player);
    EXPECT_EQ(query.num_parameters, 5u);
    EXPECT_EQ(query.variables.size(), 5u + graph.num_vertices());
    EXPECT_THROW(encode_not_nwr(model, 0, {}), ModelError);
    EXPECT_THROW(encode_not_nwr(model, 99, {0}), ModelError);
}

TEST(Etr, StatesThatCannotReachATargetArePinnedToZero) {
    nwr::testing::ModelSketch sketch(Subclass::tpmdp);
    sketch.state("s");
    sketch.state("loop");
    sketch.target("fin", 1);
    sketch.target("fail", 0);
    sketch.choice("s", "a", {{"fin", ""}, {"fail", ""}});
    sketch.choice("s", "b", {{"loop", ""}});
    sketch.choice("loop", "a", {{"loop", ""}});
    WpMdp model = sketch.build();
    auto query = encode_not_nwr(model, 0, {1});
    EXPECT_EQ(query.partition[state_vertex(model, "loop")], VertexClass::zero);
    EXPECT_EQ(query.partition[MdpGraph(model).nature(2)], VertexClass::zero);
}

TEST(Etr, FormulaSizeIsLinearInTheModel) {
    std::mt19937_64 rng(11);
    nwr::testing::RandomModelOptions options;
    options.max_weights = 3;
    for (int trial = 0; trial < 50; ++trial) {
        WpMdp model = nwr::testing::random_tpmdp(rng, options);
        MdpGraph graph(model);
        std::size_t edges = 0;
        for (Vertex u = 0; u < graph.num_vertices(); ++u) {
            edges += graph.successors(u).size();
        }
        std::size_t transitions = 0;
        for (auto const& choice : model.choices()) {
            transitions += choice.transitions.size();
        }
        auto query = encode_not_nwr(model, 0, {1, 2});
        EXPECT_LE(count_atoms(query), 2 * edges + transitions + model.num_choices() + graph.num_vertices() + 2);
    }
}

TEST(Etr, ExactValuesAreTheOnlySolutionOfTheValueEquations) {
    std::mt19937_64 rng(5);
    nwr::testing::RandomModelOptions options;
    options.max_weights = 4;
    options.max_states = 7;
    for (int trial = 0; trial < 80; ++trial) {
        WpMdp model = nwr::testing::random_tpmdp(rng, options);
        auto query = without_group(encode_not_nwr(model, 0, {1}), "nwr");
        Valuation valuation = uniform_valuation(model);
        ParameterAssignment full = exact_assignment(model, query, valuation);
        ASSERT_TRUE(evaluate(query, full)) << format_plain(query);
        // Moving any single value breaks the sentence.
        for (ParameterId id : query.value_variable) {
            ParameterAssignment moved = full;
            *moved[id] += Rational(1, 7);
            EXPECT_FALSE(evaluate(query, moved)) << query.variables[id];
        }
    }
}

TEST(Etr, EndComponentsCannotFloat) {
    // s can stay in {s, t} forever; the only way out pays 1/2.
    nwr::testing::ModelSketch sketch(Subclass::tpmdp);
    sketch.state("s");
    sketch.state("t");
    sketch.target("fin", 1);
    sketch.target("fail", 0);
    sketch.choice("s", "stay", {{"t", ""}});
    sketch.choice("t", "back", {{"s", ""}});
    sketch.choice("t", "out", {{"fin", ""}, {"fail", ""}});
    WpMdp model = sketch.build();
    auto query = without_group(encode_not_nwr(model, 0, {2}), "nwr");
    ParameterAssignment full = exact_assignment(model, query, uniform_valuation(model));
    EXPECT_TRUE(evaluate(query, full));
    for (Vertex u : {state_vertex(model, "s"), state_vertex(model, "t")}) {
        full[query.value_variable[u]] = Rational(1);
    }
    full[query.value_variable[MdpGraph(model).nature(0)]] = Rational(1);
    full[query.value_variable[MdpGraph(model).nature(1)]] = Rational(1);
    EXPECT_FALSE(evaluate(query, full));
}

TEST(Etr, SmtLibOutputIsBalanced) {
    WpMdp model = nwr::testing::fig2a_wpmdp();
    auto text = format_smtlib(encode_not_nwr(model, state_vertex(model, "q"), {state_vertex(model, "1")}));
    EXPECT_EQ(std::count(text.begin(), text.end(), '('), std::count(text.begin(), text.end(), ')'));
    EXPECT_NE(text.find("(set-logic QF_NRA)"), std::string::npos);
    EXPECT_NE(text.find("(declare-fun x_x () Real)"), std::string::npos);
    EXPECT_NE(text.find("(* 2.0 x_x x_x)"), std::string::npos);
    EXPECT_NE(text.find("(check-sat)\n(get-model)\n"), std::string::npos);
    auto plain = format_plain(encode_not_nwr(model, state_vertex(model, "q"), {state_vertex(model, "1")}));
    EXPECT_EQ(plain.rfind("exists x_x x_y ", 0), 0u);
}

TEST(Etr, ParsesSolverOutput) {
    auto sat = parse_solver_output(
        "sat\n(\n  (define-fun x_x () Real\n    (/ 1.0 3.0))\n  (define-fun y_s0 () Real\n    (- 0.25))\n)\n");
    EXPECT_EQ(sat.verdict, Verdict::sat);
    EXPECT_FALSE(sat.approximate);
    ASSERT_EQ(sat.model.size(), 2u);
    EXPECT_EQ(sat.model[0], std::make_pair(std::string("x_x"), Rational(1, 3)));
    EXPECT_EQ(sat.model[1].second, Rational(-1, 4));

    auto approx = parse_solver_output("sat\n((define-fun y_c1 () Real 0.7071067811?))");
    EXPECT_TRUE(approx.approximate);
    EXPECT_EQ(approx.model.at(0).second, Rational(7071067811, 10000000000));

    auto unsat = parse_solver_output("unsat\n(error \"line 9 column 10: model is not available\")\n");
    EXPECT_EQ(unsat.verdict, Verdict::unsat);
    EXPECT_TRUE(unsat.model.empty());
    EXPECT_EQ(parse_solver_output("; comment\nunknown\n").verdict, Verdict::unknown);
    EXPECT_THROW(parse_solver_output("segmentation fault"), SolverError);
}

TEST(Etr, MissingSolverIsAnError) {
    EXPECT_THROW(run_solver("(check-sat)", SolverCommand::parse("/nonexistent/solver {}")), SolverError);
    EXPECT_THROW(run_solver("(check-sat)", SolverCommand{}), SolverError);
}

TEST(Etr, TimeoutGivesUnknown) {
    SolverCommand slow{{"sh", "-c", "sleep 5", "{}"}, 0.3};
    auto result = run_solver("(check-sat)", slow);
    EXPECT_EQ(result.verdict, Verdict::unknown);
    EXPECT_TRUE(result.timed_out);
    EXPECT_LT(result.seconds, 3.0);
}

class EtrSolver : public ::testing::Test {
   protected:
    void SetUp() override {
        solver_ = default_solver();
        if (!solver_) {
            GTEST_SKIP() << "no SMT solver (set NWR_SOLVER or put z3 on PATH)";
        }
    }

    SolverResult solve(EtrQuery const& query) { return run_solver(format_smtlib(query), *solver_); }

    std::optional<SolverCommand> solver_;
};

TEST_F(EtrSolver, NothingBeatsFin) {
    WpMdp model = nwr::testing::fig2d_tpmdp();
    Vertex fin = state_vertex(model, "fin");
    for (Vertex v = 0; v < MdpGraph(model).num_vertices(); ++v) {
        EXPECT_EQ(solve(encode_not_nwr(model, v, {fin})).verdict, Verdict::unsat) << v;
    }
}

TEST_F(EtrSolver, WeightedSeparationIsFoundAndRechecked) {
    WpMdp model = nwr::testing::fig2a_wpmdp();
    Vertex q = state_vertex(model, "q");
    auto query = encode_not_nwr(model, q, {state_vertex(model, "1")});
    auto result = solve(query);
    ASSERT_EQ(result.verdict, Verdict::sat) << result.output;
    auto check = verify_sat(model, query, result);
    EXPECT_TRUE(check.ok()) << check.detail;
    // Rew(q) <= max(1 - y, 4x) < 4.
    EXPECT_EQ(solve(encode_not_nwr(model, q, {state_vertex(model, "4")})).verdict, Verdict::unsat);
}

TEST_F(EtrSolver, AgreesWithSampling) {
    std::mt19937_64 rng(23);
    nwr::testing::RandomModelOptions options;
    options.max_states = 4;
    options.max_successors = 2;
    int sat = 0;
    int unsat = 0;
    for (int trial = 0; trial < 30; ++trial) {
        options.max_weights = trial % 3 == 0 ? 3 : 0;
        WpMdp model = nwr::testing::random_tpmdp(rng, options);
        MdpGraph graph(model);
        std::uniform_int_distribution<Vertex> pick(0, static_cast<Vertex>(graph.num_vertices() - 1));
        Vertex v = pick(rng);
        std::vector<Vertex> W{pick(rng)};
        auto query = encode_not_nwr(model, v, W);
        auto result = solve(query);
        auto counterexample = falsify_nwr(model, v, W, 200, rng());
        if (result.verdict == Verdict::sat) {
            ++sat;
            auto check = verify_sat(model, query, result);
            EXPECT_TRUE(check.ok()) << check.detail << "\n" << result.output;
        } else if (result.verdict == Verdict::unsat) {
            ++unsat;
            EXPECT_FALSE(counterexample) << "sampling separates what the solver calls unsat";
        }
        if (counterexample) {
            EXPECT_NE(result.verdict, Verdict::unsat);
        }
    }
    EXPECT_GT(sat, 0);
    EXPECT_GT(unsat, 0);
}
