#pragma once

#include "farel/core/interaction.hpp"

namespace farel {

/// Weighted confusion statistics of one group. tp/fp/fn/tn only count
/// interactions that carry feedback; positive_actions and total count all of them.
struct WeightedConfusionMatrix {
    double tp = 0.0;
    double fp = 0.0;
    double fn = 0.0;
    double tn = 0.0;
    double positive_actions = 0.0;
    double total = 0.0;

    double labelled() const noexcept { return tp + fp + fn + tn; }

    void add(const Interaction& x, double w) {
        total += w;
        if (x.action == positive_action) {
            positive_actions += w;
        }
        if (x.feedback) {
            add_feedback(x.action, *x.feedback, w);
        }
    }

    void add_feedback(int action, int correct, double w) {
        const bool acted = action == positive_action;
        const bool truth = correct == positive_action;
        if (acted && truth) {
            tp += w;
        } else if (acted) {
            fp += w;
        } else if (truth) {
            fn += w;
        } else {
            tn += w;
        }
    }

    void scale(double f) noexcept {
        tp *= f;
        fp *= f;
        fn *= f;
        tn *= f;
        positive_actions *= f;
        total *= f;
    }

    bool operator==(const WeightedConfusionMatrix&) const = default;
};

} // namespace farel
