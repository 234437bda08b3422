#include <sstream>

#include <gtest/gtest.h>

#include "farel/core/episode.hpp"
#include "farel/core/trace_io.hpp"
#include "support/oracles.hpp"
#include "support/toy.hpp"

using namespace farel;

namespace {

EngineConfig toy_engine(std::vector<Objective> notions, WindowSpec w = WindowSpec::sliding(20)) {
    EngineConfig c;
    c.window = w;
    c.groups = {"g:a", "g:b"};
    c.notions = std::move(notions);
    return c;
}

} // namespace

TEST(AssembleReward, PacksPerformanceFirst) {
    const auto rv = assemble_reward(0.3, {{Objective::SP, -0.1}});
    EXPECT_EQ(rv.values, (std::vector<double>{0.3, -0.1}));
    EXPECT_EQ(rv.labels, (std::vector<Objective>{Objective::R, Objective::SP}));
}

TEST(AssembleReward, EmptyFairness) {
    const auto rv = assemble_reward(0.0, {});
    EXPECT_EQ(rv.values, std::vector<double>{0.0});
    EXPECT_EQ(rv.labels, std::vector<Objective>{Objective::R});
}

TEST(AssembleReward, ReordersCanonically) {
    const auto rv = assemble_reward(0.3, {{Objective::IF, -0.2}, {Objective::SP, -0.1}});
    EXPECT_EQ(rv.labels, (std::vector<Objective>{Objective::R, Objective::SP, Objective::IF}));
    EXPECT_EQ(rv.values, (std::vector<double>{0.3, -0.1, -0.2}));
}

TEST(AssembleReward, RejectsDuplicateLabel) {
    EXPECT_THROW(assemble_reward(0.0, {{Objective::SP, -0.1}, {Objective::SP, -0.2}}), contract_error);
}

TEST(Interaction, ValidationCatchesMalformedInput) {
    std::mt19937_64 rng(1);
    auto x = fixtures::random_interaction(rng, 0);
    EXPECT_NO_THROW(x.validate(2));
    auto bad = x;
    bad.action_dist = {0.5, 0.6};
    EXPECT_THROW(bad.validate(2), contract_error);
    bad = x;
    bad.groups.clear();
    EXPECT_THROW(bad.validate(2), contract_error);
    bad = x;
    bad.action = 2;
    EXPECT_THROW(bad.validate(2), contract_error);
    bad = x;
    bad.feedback = 5;
    EXPECT_THROW(bad.validate(2), contract_error);
}

TEST(RunEpisode, ZeroHorizonGivesEmptyTrace) {
    fixtures::ToyEnv env(0);
    fixtures::ToyPolicy pol(3);
    FairnessEngine engine(toy_engine({Objective::SP}));
    const auto tr = run_episode(env, pol, engine, 100, 1);
    EXPECT_TRUE(tr.interactions.empty());
    EXPECT_EQ(tr.returns.values, (std::vector<double>{0.0, 0.0}));
    EXPECT_FALSE(tr.truncated);
}

TEST(RunEpisode, RespectsStepBudgetAndFlagsTruncation) {
    fixtures::ToyEnv env(1000);
    fixtures::ToyPolicy pol(3);
    FairnessEngine engine(toy_engine({Objective::SP}));
    const auto tr = run_episode(env, pol, engine, 120, 1);
    EXPECT_EQ(tr.length(), 120u);
    EXPECT_TRUE(tr.truncated);

    const auto full = run_episode(env, pol, engine, 5000, 1);
    EXPECT_EQ(full.length(), 1000u);
    EXPECT_FALSE(full.truncated);
}

TEST(RunEpisode, DeterministicGivenSeeds) {
    auto once = [] {
        fixtures::ToyEnv env(200);
        fixtures::ToyPolicy pol(9);
        FairnessEngine engine(toy_engine({Objective::SP, Objective::EO, Objective::IF, Objective::CSC}));
        return run_episode(env, pol, engine, 1000, 77);
    };
    const auto a = once();
    const auto b = once();
    ASSERT_EQ(a.length(), b.length());
    for (std::size_t i = 0; i < a.length(); ++i) {
        EXPECT_EQ(a.interactions[i].reward, b.interactions[i].reward);
        EXPECT_EQ(a.interactions[i].action, b.interactions[i].action);
    }
    EXPECT_EQ(a.returns, b.returns);
}

TEST(RunEpisode, ReturnIsExactSumOfStepRewards) {
    fixtures::ToyEnv env(150);
    fixtures::ToyPolicy pol(2);
    FairnessEngine engine(toy_engine({Objective::SP, Objective::IF}));
    const auto tr = run_episode(env, pol, engine, 1000, 5);
    RewardVector sum = zero_reward(tr.returns.labels);
    for (const auto& x : tr.interactions) {
        sum += x.reward;
    }
    EXPECT_EQ(sum, tr.returns);
}

TEST(RunEpisode, ReplayingActionsReproducesRewards) {
    fixtures::ToyEnv env(100);
    fixtures::ToyPolicy pol(4);
    FairnessEngine engine(toy_engine({Objective::SP}));
    const auto tr = run_episode(env, pol, engine, 1000, 31);

    fixtures::ToyEnv env2(100);
    env2.reset(31);
    for (const auto& x : tr.interactions) {
        const auto s = env2.step(x.action);
        EXPECT_EQ(s.reward, *x.reward.get(Objective::R));
    }
}

TEST(RunEpisode, StepFairnessMatchesOracleOnTracePrefix) {
    fixtures::ToyEnv env(80);
    fixtures::ToyPolicy pol(8);
    const std::size_t w = 25;
    FairnessEngine engine(toy_engine({Objective::SP, Objective::EO, Objective::OAE, Objective::PP, Objective::PE,
                                      Objective::IF, Objective::CSC},
                                     WindowSpec::sliding(w)));
    const auto tr = run_episode(env, pol, engine, 1000, 13);
    for (std::size_t t = 0; t < tr.length(); ++t) {
        std::vector<oracle::Item> items;
        for (std::size_t i = (t + 1 > w ? t + 1 - w : 0); i <= t; ++i) {
            items.push_back({&tr.interactions[i], 1.0});
        }
        const auto& r = tr.interactions[t].reward;
        EXPECT_EQ(*r.get(Objective::SP), oracle::sp(items, "g:a", "g:b").value_or(0.0)) << t;
        EXPECT_EQ(*r.get(Objective::EO), oracle::eo(items, "g:a", "g:b").value_or(0.0)) << t;
        EXPECT_EQ(*r.get(Objective::PP), oracle::pp(items, "g:a", "g:b").value_or(0.0)) << t;
        EXPECT_NEAR(*r.get(Objective::IF), oracle::individual_fairness(items, oracle::Metric::heom, 0.1).value_or(0.0),
                    1e-12)
            << t;
        EXPECT_NEAR(*r.get(Objective::CSC), oracle::csc(items, oracle::Metric::heom, 5).value_or(0.0), 1e-12) << t;
    }
}

namespace {
class BrokenPolicy final : public Policy {
public:
    ActionChoice act(std::span<const double>) override { return {1, {0.7, 0.7}}; }
};
} // namespace

TEST(RunEpisode, MalformedInteractionAbortsWithDiagnostic) {
    fixtures::ToyEnv env(10);
    BrokenPolicy pol;
    FairnessEngine engine(toy_engine({Objective::SP}));
    log::threshold() = log::Level::off;
    const auto tr = run_episode(env, pol, engine, 100, 1);
    log::threshold() = log::Level::warning;
    EXPECT_TRUE(tr.aborted);
    EXPECT_TRUE(tr.interactions.empty());
    EXPECT_NE(tr.diagnostic.find("sum to 1"), std::string::npos);
}

TEST(TraceIo, RoundTripAndOfflineReplay) {
    fixtures::ToyEnv env(60);
    fixtures::ToyPolicy pol(8);
    const auto cfg = toy_engine({Objective::SP, Objective::EO, Objective::IF, Objective::CSC},
                                WindowSpec::discounted(10, 0.95, 1e-3, 3));
    FairnessEngine engine(cfg);
    const auto tr = run_episode(env, pol, engine, 1000, 21);

    std::stringstream ss;
    write_trace(ss, tr, cfg, *env.individual_schema(), 21);
    const auto loaded = read_trace(ss);
    ASSERT_EQ(loaded.interactions.size(), tr.length());
    EXPECT_EQ(loaded.seed, 21u);
    EXPECT_EQ(*loaded.schema, *env.individual_schema());
    for (std::size_t i = 0; i < tr.length(); ++i) {
        EXPECT_EQ(loaded.interactions[i].reward, tr.interactions[i].reward);
        EXPECT_EQ(loaded.interactions[i].individual.numeric, tr.interactions[i].individual.numeric);
        EXPECT_EQ(loaded.interactions[i].feedback, tr.interactions[i].feedback);
    }
    const auto rep = replay_trace(loaded);
    EXPECT_EQ(rep.steps, tr.length());
    EXPECT_EQ(rep.max_abs_diff, 0.0);
    EXPECT_EQ(rep.recomputed_returns, tr.returns);
}
