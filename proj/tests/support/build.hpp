#pragma once

// Hand-built interactions for example-style tests.

#include <optional>
#include <string>
#include <vector>

#include "farel/core/interaction.hpp"
#include "support/toy.hpp"

namespace farel::fixtures {

inline Interaction make_interaction(std::int64_t t, std::vector<GroupId> groups, int action,
                                    std::optional<int> feedback = std::nullopt, double score = 5.0) {
    Interaction x;
    x.t = t;
    x.individual = toy_individual(score, 30.0, 0, 0);
    x.state = FeatureVector{FeatureSchema::numeric_only(1), {0.0}, {}};
    x.groups = std::move(groups);
    x.action = action;
    x.action_dist = action == 1 ? std::vector<double>{0.0, 1.0} : std::vector<double>{1.0, 0.0};
    x.feedback = feedback;
    return x;
}

} // namespace farel::fixtures
