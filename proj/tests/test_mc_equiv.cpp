#include "nwr/graph_analysis.hpp"
#include "nwr/mc_equiv.hpp"
#include "nwr/oracle.hpp"

#include "support/fixtures.hpp"
#include "support/harness.hpp"

#include <gtest/gtest.h>

using namespace nwr;
using nwr::testing::ModelSketch;

using nwr::testing::brute_force_relation;
using nwr::testing::contracted_chain;

TEST(McEquiv, PrivateExitsGiveSingletons) {
    // s and t both reach fin and fail directly and through each other, never surely.
    ModelSketch sketch(Subclass::tpmdp);
    sketch.target("fin", 1);
    sketch.target("fail", 0);
    sketch.choice("s", "a", {{"fin", ""}, {"fail", ""}, {"t", ""}});
    sketch.choice("t", "a", {{"fin", ""}, {"fail", ""}});
    WpMdp mc = sketch.build();
    auto partition = mc_equiv_classes(mc);
    EXPECT_EQ(partition.classes.size(), mc.num_states());
    EXPECT_TRUE(partition.diagnostics.empty());
    auto [collapsed, map] = mc_collapse(mc, partition);
    EXPECT_EQ(collapsed, mc);
}

TEST(McEquiv, SingleSuccessorJoinsItsSuccessor) {
    ModelSketch sketch(Subclass::tpmdp);
    sketch.target("fin", 1);
    sketch.target("fail", 0);
    sketch.choice("s", "a", {{"t", ""}});
    sketch.choice("t", "a", {{"fin", ""}, {"fail", ""}, {"s", ""}});
    WpMdp mc = sketch.build();
    auto partition = mc_equiv_classes(mc);
    StateId s = *mc.find_state("s");
    StateId t = *mc.find_state("t");
    EXPECT_EQ(partition.class_of[s], partition.class_of[t]);
    auto const& cls = partition.classes[partition.class_of[s]];
    ASSERT_TRUE(cls.exit);
    EXPECT_EQ(*cls.exit, t);
    EXPECT_TRUE(partition.diagnostics.empty());

    auto [collapsed, map] = mc_collapse(mc, partition);
    EXPECT_EQ(collapsed.num_states(), 3u);
    EXPECT_FALSE(collapsed.find_state("s"));
    EXPECT_EQ(map.state_image[s], map.state_image[t]);
    EXPECT_TRUE(check_value_preservation(mc, collapsed, map).ok());
}

TEST(McEquiv, AlmostSureFunnelFormsOneClass) {
    // u, a and b cannot avoid z, which is the only way out.
    ModelSketch sketch(Subclass::tpmdp);
    sketch.target("fin", 1);
    sketch.target("fail", 0);
    sketch.choice("u", "go", {{"a", ""}, {"b", ""}});
    sketch.choice("a", "go", {{"z", ""}, {"b", ""}});
    sketch.choice("b", "go", {{"z", ""}, {"a", ""}});
    sketch.choice("z", "go", {{"fin", ""}, {"fail", ""}});
    WpMdp mc = sketch.build();
    auto partition = mc_equiv_classes(mc);
    StateId z = *mc.find_state("z");
    auto const& cls = partition.classes[partition.class_of[z]];
    EXPECT_EQ(cls.members.size(), 4u);
    ASSERT_TRUE(cls.exit);
    EXPECT_EQ(*cls.exit, z);
    EXPECT_TRUE(partition.diagnostics.empty());
    auto [collapsed, map] = mc_collapse(mc, partition);
    EXPECT_EQ(collapsed.num_states(), 3u);
    EXPECT_TRUE(check_value_preservation(mc, collapsed, map).ok());
}

TEST(McEquiv, RejectsMultiActionAndExtremalInput) {
    EXPECT_THROW(mc_equiv_classes(nwr::testing::fig2d_tpmdp()), ModelError);
    ModelSketch sketch(Subclass::tpmdp);
    sketch.target("fin", 1);
    sketch.target("fail", 0);
    sketch.choice("s", "a", {{"fin", ""}});
    EXPECT_THROW(mc_equiv_classes(sketch.build()), ModelError);
    EXPECT_THROW(mc_equiv_classes(nwr::testing::fig1_chain()), ModelError);
}

TEST(McEquiv, MatchesThePairwiseOracle) {
    std::mt19937_64 rng(21);
    std::size_t merged = 0;
    for (int trial = 0; trial < 100; ++trial) {
        WpMdp mc = contracted_chain(rng, 6);
        auto partition = mc_equiv_classes(mc);
        merged += mc.num_states() - partition.classes.size();
        auto related = brute_force_relation(mc);
        for (StateId u = 0; u < mc.num_states(); ++u) {
            for (StateId w = 0; w < mc.num_states(); ++w) {
                EXPECT_EQ(partition.class_of[u] == partition.class_of[w], related[u][w])
                    << "trial " << trial << ": " << mc.state_name(u) << " vs " << mc.state_name(w);
            }
        }
        EXPECT_TRUE(partition.diagnostics.empty()) << partition.diagnostics.front();
    }
    EXPECT_GT(merged, 20u);
}

TEST(McEquiv, ClassesAreValueEqualAndCollapseIsExact) {
    std::mt19937_64 rng(22);
    std::size_t separated = 0;
    for (int trial = 0; trial < 50; ++trial) {
        WpMdp mc = contracted_chain(rng, 8);
        auto partition = mc_equiv_classes(mc);
        for (std::uint64_t sample = 0; sample < 20; ++sample) {
            auto values = solve_exact(mc, instantiate(mc, sample_valuation(mc, sample, SamplingProfile::mixed)));
            for (StateId u = 0; u < mc.num_states(); ++u) {
                for (StateId w = 0; w < mc.num_states(); ++w) {
                    if (partition.class_of[u] == partition.class_of[w]) {
                        EXPECT_EQ(values.state[u], values.state[w]);
                    } else if (values.state[u] != values.state[w]) {
                        ++separated;
                    }
                }
            }
        }
        auto [collapsed, map] = mc_collapse(mc, partition);
        PreservationOptions options;
        options.samples = 20;
        options.seed = trial;
        EXPECT_TRUE(check_value_preservation(mc, collapsed, map, options).ok());
        // The exits keep their names and no class is left with several states.
        EXPECT_EQ(collapsed.num_states(), partition.classes.size());
    }
    EXPECT_GT(separated, 0u);
}

TEST(McEquiv, ExitsLeaveTheirClass) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        WpMdp mc = contracted_chain(rng, 8);
        auto partition = mc_equiv_classes(mc);
        for (std::size_t k = 0; k < partition.classes.size(); ++k) {
            auto const& cls = partition.classes[k];
            if (cls.members.size() < 2) {
                continue;
            }
            ASSERT_TRUE(cls.exit);
            for (ChoiceId c : mc.choices_of(*cls.exit)) {
                bool outside = false;
                for (auto const& t : mc.choice(c).transitions) {
                    outside = outside || partition.class_of[t.target] != k;
                }
                EXPECT_TRUE(outside);
            }
        }
    }
}
