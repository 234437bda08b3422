#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "farel/env/fraud.hpp"
#include "farel/env/hiring.hpp"

using namespace farel;

namespace {

double sigma3(double p, double n) { return 3.0 * std::sqrt(p * (1.0 - p) / n); }

} // namespace

TEST(Hiring, MaxExperience) {
    EXPECT_EQ(hiring::max_experience(24, 1, 0), 3);
    EXPECT_EQ(hiring::max_experience(18, 0, 0), 0);
    EXPECT_EQ(hiring::max_experience(30, 1, 1), 7);
    EXPECT_EQ(hiring::max_experience(19, 1, 1), 0);
}

TEST(Hiring, ExperienceProbability) {
    EXPECT_DOUBLE_EQ(hiring::experience_probability(3, 3), 0.4);
    EXPECT_EQ(hiring::experience_probability(0, 0), 1.0);
    double s = 0.0;
    for (int y = 0; y <= 7; ++y) {
        s += hiring::experience_probability(y, 7);
    }
    EXPECT_NEAR(s, 1.0, 1e-15);
    EXPECT_EQ(hiring::experience_probability(8, 7), 0.0);
}

TEST(Hiring, GoodnessExamples) {
    const std::vector<double> f{0.2, 0.3};
    EXPECT_EQ(hiring::goodness_score(f, f, 100.0), 0.0);
    const double K = 100.0;
    const std::vector<double> g{0.2 + 1.0 / K, 0.3 + 1.0 / K};
    EXPECT_NEAR(hiring::goodness_score(f, g, K), 1.0, 1e-12);
    const std::vector<double> big{0.9, 0.9};
    EXPECT_EQ(hiring::goodness_score(f, big, K), 1.0);
}

TEST(Hiring, GoodnessMonotoneInDegrees) {
    hiring::HiringConfig cfg;
    cfg.potential_sd = 0.0;
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 500; ++trial) {
        hiring::TeamTotals team;
        for (int i = 0; i < 20; ++i) {
            team.add(hiring::sample_applicant(cfg.population, rng));
        }
        auto a = hiring::sample_applicant(cfg.population, rng);
        a.degree = 0;
        a.extra_degree = 0;
        a.age = 40;
        a.experience = std::min(a.experience, hiring::max_experience(40, 1, 1));
        auto score = [&](const hiring::Applicant& x) {
            const double K = cfg.team_target;
            const auto now = hiring::company_features(team, K, team.potential_units / K);
            auto next = team;
            next.add(x);
            const auto est = hiring::company_features(next, K, next.potential_units / K);
            return hiring::goodness_score(now, est, K);
        };
        auto b = a;
        b.degree = 1;
        auto c = b;
        c.extra_degree = 1;
        EXPECT_LE(score(a), score(b));
        EXPECT_LE(score(b), score(c));
    }
}

TEST(Hiring, RewardExamples) {
    EXPECT_EQ(hiring::hiring_reward(0.5, 1, 0.5, 0.0, 0.0), 0.0);
    EXPECT_NEAR(hiring::hiring_reward(0.8, 0, 0.5, 0.0, 0.0), -0.3, 1e-15);
    hiring::BiasSpec bias{hiring::BiasKind::men, 0.1};
    hiring::Applicant man;
    man.gender = hiring::man;
    hiring::Applicant woman;
    woman.gender = hiring::woman;
    EXPECT_TRUE(bias.applies(man));
    EXPECT_FALSE(bias.applies(woman));
    EXPECT_NEAR(hiring::hiring_reward(0.5, 1, 0.5, 0.0, bias.amount), 0.1, 1e-15);
    hiring::BiasSpec bm{hiring::BiasKind::belgian_men, 0.1};
    man.nationality = hiring::foreign;
    EXPECT_FALSE(bm.applies(man));
}

TEST(Hiring, RejectIsExactNegationOfHire) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0.0, 0.01);
    for (int i = 0; i < 1000; ++i) {
        const double g = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
        const double e = n(rng);
        EXPECT_EQ(hiring::hiring_reward(g, 0, 0.5, e, 0.1), -hiring::hiring_reward(g, 1, 0.5, e, 0.1));
    }
}

TEST(Hiring, FeedbackThreshold) {
    EXPECT_EQ(hiring::correct_action(0.6, 0.5), 1);
    EXPECT_EQ(hiring::correct_action(0.4, 0.5), 0);
    EXPECT_EQ(hiring::correct_action(0.5, 0.5), 1);
}

TEST(Hiring, Attrition) {
    std::mt19937_64 rng(4);
    std::vector<hiring::Applicant> team(1000);
    for (std::size_t i = 0; i < team.size(); ++i) {
        team[i].age = 18 + static_cast<int>(i % 48);
    }
    auto t0 = team;
    EXPECT_EQ(hiring::apply_attrition(t0, {{18, 65, 0.0}}, rng), 0u);
    EXPECT_EQ(t0.size(), 1000u);
    auto t1 = team;
    EXPECT_EQ(hiring::apply_attrition(t1, {{18, 65, 1.0}}, rng), 1000u);
    EXPECT_TRUE(t1.empty());
    auto t2 = team;
    const double left = static_cast<double>(hiring::apply_attrition(t2, {{18, 65, 0.1}}, rng));
    EXPECT_NEAR(left, 100.0, 3.0 * std::sqrt(1000 * 0.1 * 0.9));
}

TEST(Hiring, ApplicantsRespectExperienceBound) {
    std::mt19937_64 rng(6);
    const auto pop = hiring::PopulationSpec::preset("default");
    for (int i = 0; i < 20000; ++i) {
        const auto a = hiring::sample_applicant(pop, rng);
        EXPECT_LE(a.experience, hiring::max_experience(a.age, a.degree, a.extra_degree));
        EXPECT_GE(a.experience, 0);
        EXPECT_GE(a.age, 18);
        EXPECT_LE(a.age, 65);
    }
}

class PresetFrequencies : public ::testing::TestWithParam<const char*> {};

TEST_P(PresetFrequencies, JointMatchesSpec) {
    const auto pop = hiring::PopulationSpec::preset(GetParam());
    std::mt19937_64 rng(12);
    const int n = 100000;
    std::array<int, 4> counts{};
    for (int i = 0; i < n; ++i) {
        const auto a = hiring::sample_applicant(pop, rng);
        counts[static_cast<std::size_t>(a.nationality * 2 + a.gender)] += 1;
    }
    for (std::size_t c = 0; c < 4; ++c) {
        EXPECT_NEAR(counts[c] / double(n), pop.joint[c], sigma3(pop.joint[c], n)) << c;
    }
}

INSTANTIATE_TEST_SUITE_P(Presets, PresetFrequencies, ::testing::Values("default", "gender", "nationality-gender"));

TEST(Hiring, PresetValidation) {
    EXPECT_THROW(hiring::PopulationSpec::preset("nope"), contract_error);
    auto p = hiring::PopulationSpec::preset("default");
    p.joint = {0.5, 0.5, 0.5, 0.0};
    EXPECT_THROW(p.validate(), contract_error);
}

TEST(Hiring, LanguageEntropyBounds) {
    EXPECT_EQ(hiring::language_entropy({0, 0, 0, 0}), 0.0);
    EXPECT_EQ(hiring::language_entropy({5, 0, 0, 0}), 0.0);
    EXPECT_NEAR(hiring::language_entropy({1, 1, 1, 1}), 1.0, 1e-15);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 50.0);
    for (int i = 0; i < 1000; ++i) {
        const double h = hiring::language_entropy({u(rng), u(rng), u(rng), u(rng)});
        EXPECT_GE(h, 0.0);
        EXPECT_LE(h, 1.0);
    }
}

TEST(Hiring, EpisodeShapeAndDeterminism) {
    hiring::HiringEnv env;
    auto run = [&](std::uint64_t seed) {
        std::vector<double> rewards;
        auto obs = env.reset(seed);
        EXPECT_EQ(obs.size(), env.observation_size());
        for (std::size_t t = 0; t < env.horizon(); ++t) {
            const auto s = env.step(static_cast<int>(t % 3 == 0));
            rewards.push_back(s.reward);
            EXPECT_TRUE(s.feedback.has_value());
            EXPECT_EQ(s.observation.size(), env.observation_size());
            for (double f : env.features()) {
                EXPECT_GE(f, 0.0);
                EXPECT_LE(f, 1.0);
            }
            EXPECT_GE(env.goodness(), -1.0);
            EXPECT_LE(env.goodness(), 1.0);
            EXPECT_EQ(s.done, t + 1 == env.horizon());
        }
        return rewards;
    };
    const auto a = run(5);
    const auto b = run(5);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, run(6));
}

TEST(Fraud, ProbabilitiesAverageToRate) {
    fraud::FraudGenSpec g;
    const double pa = g.fraud_probability(fraud::continent_a);
    const double pb = g.fraud_probability(fraud::continent_b);
    EXPECT_NEAR(0.5 * pa + 0.5 * pb, 0.10, 1e-15);
    EXPECT_NEAR(pa / pb, 0.44 / 0.73, 1e-12);
}

TEST(Fraud, ZeroRateNeverFraud) {
    fraud::FraudGenSpec g;
    g.fraud_rate = 0.0;
    fraud::TransactionGenerator gen(g);
    gen.reset(1);
    for (int i = 0; i < 2000; ++i) {
        auto t = gen.next();
        if (!t) {
            break;
        }
        EXPECT_FALSE(t->is_fraud);
    }
}

TEST(Fraud, DrawFrequencies) {
    fraud::FraudGenSpec g;
    g.customers = 2000;
    fraud::TransactionGenerator gen(g);
    gen.reset(7);
    const int n = 100000;
    int frauds = 0;
    std::array<int, 2> per{};
    std::array<int, 2> seen{};
    for (int i = 0; i < n; ++i) {
        const auto t = gen.draw(0, 0);
        frauds += t.is_fraud;
        seen[static_cast<std::size_t>(t.continent)] += 1;
        per[static_cast<std::size_t>(t.continent)] += t.is_fraud;
    }
    EXPECT_NEAR(frauds / double(n), 0.10, sigma3(0.10, n) + 0.005);
    for (std::int64_t c : {fraud::continent_a, fraud::continent_b}) {
        const double p = g.fraud_probability(c);
        const auto k = static_cast<std::size_t>(c);
        EXPECT_NEAR(per[k] / double(seen[k]), p, sigma3(p, seen[k]));
    }
}

TEST(Fraud, ProcessExamples) {
    fraud::FraudGenSpec g;
    fraud::FraudBiasSpec none;
    fraud::Customer c;
    fraud::Transaction genuine;
    fraud::Transaction theft;
    theft.is_fraud = true;

    auto r = fraud::process(genuine, fraud::authenticate_action, c, g, none);
    EXPECT_EQ(r.reward, 1.0);
    ASSERT_TRUE(r.feedback.has_value());
    EXPECT_EQ(*r.feedback, fraud::ignore_action);
    EXPECT_NEAR(c.satisfaction, 0.9, 1e-15);

    r = fraud::process(theft, fraud::authenticate_action, c, g, none);
    EXPECT_EQ(r.reward, -1.0);
    EXPECT_EQ(*r.feedback, fraud::authenticate_action);

    for (const auto& t : {genuine, theft}) {
        r = fraud::process(t, fraud::ignore_action, c, g, none);
        EXPECT_EQ(r.reward, 0.0);
        EXPECT_FALSE(r.feedback.has_value());
    }
}

TEST(Fraud, CancellationAndBias) {
    fraud::FraudGenSpec g;
    fraud::Customer c;
    c.satisfaction = 0.55;
    fraud::Transaction genuine;
    auto r = fraud::process(genuine, fraud::authenticate_action, c, g, {});
    EXPECT_TRUE(r.cancelled);
    EXPECT_EQ(r.reward, -1.0);
    EXPECT_FALSE(c.active);

    fraud::FraudBiasSpec bias{fraud::FraudBiasKind::continent_a, 0.1};
    fraud::Customer d;
    EXPECT_NEAR(fraud::process(genuine, fraud::ignore_action, d, g, bias).reward, 0.1, 1e-15);
    genuine.continent = fraud::continent_b;
    EXPECT_EQ(fraud::process(genuine, fraud::ignore_action, d, g, bias).reward, 0.0);
    fraud::FraudBiasSpec narrow{fraud::FraudBiasKind::continent_a_merchant0, 0.1};
    genuine.continent = fraud::continent_a;
    genuine.merchant_id = 1;
    EXPECT_FALSE(narrow.applies(genuine));
}

TEST(Fraud, EpisodeProperties) {
    fraud::FraudEnv env;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        env.reset(seed);
        double ignore_return = 0.0;
        std::size_t steps = 0;
        for (bool done = false; !done; ++steps) {
            const auto s = env.step(fraud::ignore_action);
            ignore_return += s.reward;
            EXPECT_FALSE(s.feedback.has_value());
            done = s.done;
        }
        EXPECT_EQ(ignore_return, 0.0);
        EXPECT_LE(steps, 1000u);
        EXPECT_GT(steps, 850u);

        env.reset(seed);
        for (bool done = false; !done;) {
            const auto s = env.step(fraud::authenticate_action);
            EXPECT_TRUE(s.feedback.has_value());
            const double sat = env.average_satisfaction();
            EXPECT_GE(sat, 0.0);
            EXPECT_LE(sat, 1.0);
            done = s.done;
        }
    }
}

TEST(Fraud, DepartedCustomersEmitNothing) {
    fraud::FraudGenSpec g;
    g.customers = 20;
    g.satisfaction_decay = 0.5;
    fraud::FraudEnv env({g, {}});
    env.reset(3);
    std::set<std::int64_t> gone;
    for (bool done = false; !done;) {
        const auto card = env.transaction()->card_id;
        EXPECT_EQ(gone.count(card), 0u);
        const auto before = env.cancellations();
        const auto s = env.step(fraud::authenticate_action);
        if (env.cancellations() > before) {
            gone.insert(card);
        }
        done = s.done;
    }
    EXPECT_FALSE(gone.empty());
}
