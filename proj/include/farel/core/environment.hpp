#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "farel/core/feature.hpp"
#include "farel/core/interaction.hpp"
#include "farel/core/objective.hpp"

namespace farel {

/// Result of one environment transition. `individual` and `groups` describe
/// who the action was applied to; `observation` is the next state.
struct EnvStep {
    std::vector<double> observation;
    double reward = 0.0;
    std::optional<int> feedback;
    std::vector<DelayedFeedback> late_feedback;
    FeatureVector individual;
    std::vector<GroupId> groups;
    bool done = false;
};

/// Contract of a fairness MDP: deterministic given the reset seed and the
/// action sequence, finite horizon.
class Environment {
public:
    virtual ~Environment() = default;

    virtual std::string name() const = 0;
    virtual int action_count() const = 0;
    virtual std::size_t observation_size() const = 0;
    virtual std::size_t horizon() const = 0;
    virtual SchemaPtr individual_schema() const = 0;
    /// Group pair compared by the group notions.
    virtual std::pair<GroupId, GroupId> protected_groups() const = 0;

    virtual std::vector<double> reset(std::uint64_t seed) = 0;
    virtual EnvStep step(int action) = 0;
};

struct ActionChoice {
    int action = 0;
    std::vector<double> dist;
};

struct Transition {
    std::span<const double> observation;
    int action = 0;
    const RewardVector* reward = nullptr;
    std::span<const double> next_observation;
    bool done = false;
};

/// Action selector threaded through the episode loop.
class Policy {
public:
    virtual ~Policy() = default;
    virtual void begin_episode(std::span<const double> /*observation*/) {}
    virtual ActionChoice act(std::span<const double> observation) = 0;
    virtual void observe(const Transition& /*tr*/) {}
};

} // namespace farel
