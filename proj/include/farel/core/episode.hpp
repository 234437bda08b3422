#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "farel/core/environment.hpp"
#include "farel/core/log.hpp"
#include "farel/fairness/engine.hpp"

namespace farel {

struct EpisodeTrace {
    std::vector<Interaction> interactions;
    RewardVector returns;
    /// History size after each step (post-pruning).
    std::vector<std::size_t> history_sizes;
    /// The step budget ran out before the environment finished.
    bool truncated = false;
    /// The fairness engine rejected an interaction; `diagnostic` says why.
    bool aborted = false;
    std::string diagnostic;

    std::size_t length() const noexcept { return interactions.size(); }
};

/// Labels of the reward vectors an engine produces: R followed by its notions.
inline std::vector<Objective> reward_labels(const FairnessEngine& engine) {
    std::vector<Objective> labels{Objective::R};
    const auto& n = engine.config().notions;
    labels.insert(labels.end(), n.begin(), n.end());
    return labels;
}

/// Runs one episode, materialising the interaction history. Each step's reward
/// vector carries the fairness notions evaluated after the interaction joined
/// the history.
inline EpisodeTrace run_episode(Environment& env, Policy& policy, FairnessEngine& engine, std::size_t max_steps,
                                std::uint64_t seed) {
    EpisodeTrace trace;
    trace.returns = zero_reward(reward_labels(engine));
    engine.reset();

    auto obs = env.reset(seed);
    const auto obs_schema = FeatureSchema::numeric_only(env.observation_size());
    const std::size_t limit = std::min(max_steps, env.horizon());
    policy.begin_episode(obs);

    bool done = env.horizon() == 0;
    std::int64_t t = 0;
    while (!done && static_cast<std::size_t>(t) < limit) {
        const ActionChoice choice = policy.act(obs);
        EnvStep step = env.step(choice.action);

        Interaction x;
        x.t = t;
        x.state = FeatureVector{obs_schema, obs, {}};
        x.individual = std::move(step.individual);
        x.groups = std::move(step.groups);
        x.action = choice.action;
        x.action_dist = choice.dist;
        x.feedback = step.feedback;
        x.late_feedback = std::move(step.late_feedback);
        try {
            engine.push(x);
        } catch (const contract_error& e) {
            trace.aborted = true;
            trace.diagnostic = "step " + std::to_string(t) + ": " + e.what();
            log::error("episode aborted at " + trace.diagnostic);
            break;
        }
        x.reward = assemble_reward(step.reward, engine.values());
        trace.returns += x.reward;
        trace.history_sizes.push_back(engine.history().size());

        done = step.done;
        policy.observe(Transition{obs, choice.action, &x.reward, step.observation, done});
        trace.interactions.push_back(std::move(x));
        obs = std::move(step.observation);
        ++t;
    }
    trace.truncated = !done && !trace.aborted && static_cast<std::size_t>(t) >= limit && limit > 0;
    return trace;
}

} // namespace farel
