#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "farel/core/error.hpp"
#include "farel/core/feature.hpp"
#include "farel/core/objective.hpp"

namespace farel {

using GroupId = std::string;

/// The preferable / positive action (hire, authenticate) for binary decision problems.
inline constexpr int positive_action = 1;

/// Ground truth for an earlier timestep that only became known later.
struct DelayedFeedback {
    std::int64_t t = 0;
    int correct_action = 0;
};

/// One agent-environment interaction: the atom of every fairness computation.
struct Interaction {
    std::int64_t t = 0;
    FeatureVector state;
    FeatureVector individual;
    std::vector<GroupId> groups;
    int action = 0;
    std::vector<double> action_dist;
    RewardVector reward;
    std::optional<int> feedback;
    std::vector<DelayedFeedback> late_feedback;

    bool in_group(const GroupId& g) const {
        for (const auto& x : groups) {
            if (x == g) {
                return true;
            }
        }
        return false;
    }

    void validate(int action_count) const {
        require(t >= 0, "interaction timestep must be non-negative");
        require(action >= 0 && action < action_count, "action index out of range");
        require(static_cast<int>(action_dist.size()) == action_count, "action distribution has wrong width");
        double sum = 0.0;
        for (double p : action_dist) {
            require(p >= 0.0 && std::isfinite(p), "action distribution has a negative or non-finite entry");
            sum += p;
        }
        require(std::abs(sum - 1.0) <= 1e-9, "action distribution does not sum to 1");
        require(!groups.empty(), "interaction must belong to at least one group");
        if (feedback) {
            require(*feedback >= 0 && *feedback < action_count, "feedback action out of range");
        }
        individual.validate();
    }
};

} // namespace farel
