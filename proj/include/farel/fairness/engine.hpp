#pragma once

#include <algorithm>
#include <optional>
#include <utility>
#include <vector>

#include "farel/core/error.hpp"
#include "farel/core/interaction.hpp"
#include "farel/core/objective.hpp"
#include "farel/fairness/incremental.hpp"
#include "farel/fairness/notions.hpp"
#include "farel/history/history.hpp"

namespace farel {

struct EngineConfig {
    WindowSpec window = WindowSpec::sliding(500);
    GroupPair groups;
    DistanceKind distance = DistanceKind::heom;
    double lambda = 0.1;
    std::size_t k = 5;
    /// Notion whose stability drives truncation of a discounted history.
    Objective guiding = Objective::IF;
    /// Notions evaluated at every step.
    std::vector<Objective> notions;
    int action_count = 2;

    NotionSpec notion(Objective kind) const {
        NotionSpec s;
        s.kind = kind;
        s.groups = groups;
        s.distance = distance;
        s.lambda = lambda;
        s.k = k;
        return s;
    }

    void validate() const {
        window.validate();
        require(lambda > 0.0, "lambda must be positive");
        require(k >= 1, "k must be at least 1");
        require(action_count >= 1, "action count must be positive");
        require(guiding != Objective::R, "guiding notion must be a fairness notion");
        for (auto o : notions) {
            require(o != Objective::R, "R is not a fairness notion");
            notion(o).validate();
        }
    }
};

/// Owns the shared interaction history (plus the one-step history) and keeps
/// every requested notion evaluable in at most O(n) per step.
class FairnessEngine {
public:
    explicit FairnessEngine(EngineConfig cfg)
        : cfg_(std::move(cfg)), history_(cfg_.window), step_history_(WindowSpec::sliding(1)) {
        cfg_.validate();
        cfg_.notions = canonical_objectives(cfg_.notions);
        const bool discounted = cfg_.window.kind == WindowKind::discounted;
        const double gamma = discounted ? cfg_.window.gamma : 1.0;
        track_if_ = wants(Objective::IF) || (discounted && cfg_.guiding == Objective::IF);
        track_csc_ = wants(Objective::CSC) || (discounted && cfg_.guiding == Objective::CSC);
        if_full_ = PairwiseFairness(cfg_.distance, cfg_.lambda, gamma);
        if_tail_ = if_full_;
        csc_ = KnnConsistency(cfg_.distance, cfg_.k, gamma);
    }

    const EngineConfig& config() const noexcept { return cfg_; }
    const FairnessHistory& history() const noexcept { return history_; }
    const FairnessHistory& step_history() const noexcept { return step_history_; }
    std::size_t last_pruned() const noexcept { return last_pruned_; }

    void reset() {
        history_.clear();
        step_history_.clear();
        if_full_.clear();
        if_tail_.clear();
        csc_.clear();
        last_pruned_ = 0;
    }

    /// Appends an interaction, updates every cache and applies the truncation rule.
    void push(Interaction x) {
        x.validate(cfg_.action_count);
        last_pruned_ = 0;
        const auto t = x.t;
        const int action = x.action;
        DistanceView view = (track_if_ || track_csc_) ? make_distance_view(x.individual) : DistanceView{};
        std::vector<double> dist = x.action_dist;

        step_history_.push(x);
        const auto evicted = history_.push(std::move(x));
        if (evicted) {
            if (track_if_) {
                if_full_.pop_oldest();
            }
            if (track_csc_) {
                csc_.pop_oldest();
            }
        }
        if (track_if_) {
            if_full_.push(t, view, dist);
            if (discounted()) {
                // Same pop-then-push order as a sliding window so that both
                // produce bit-identical sums over identical contents.
                if (if_tail_.size() == cfg_.window.window) {
                    if_tail_.pop_oldest();
                }
                if_tail_.push(t, view, dist);
            }
        }
        if (track_csc_) {
            csc_.push(t, std::move(view), action);
        }
        if (discounted()) {
            apply_truncation_rule();
        }
    }

    /// Current value of a fairness notion over the shared history.
    FairnessValue value(Objective o) const {
        if (is_group_notion(o)) {
            return group_notion(o, history_.confusion(cfg_.groups.g), history_.confusion(cfg_.groups.h));
        }
        if (o == Objective::IF) {
            return track_if_ ? if_full_.value(history_.now()) : individual_fairness(view_of(history_), cfg_.notion(o));
        }
        if (o == Objective::CSC) {
            return track_csc_ ? csc_.value(history_.now())
                              : consistency_score_complement(view_of(history_), cfg_.notion(o));
        }
        throw contract_error("R is not a fairness notion");
    }

    /// Value of a notion over the history of the current timestep only.
    FairnessValue step_value(Objective o) const { return evaluate_notion(view_of(step_history_), cfg_.notion(o)); }

    /// All configured notions with undefined values mapped to 0.
    std::vector<std::pair<Objective, double>> values() const {
        std::vector<std::pair<Objective, double>> out;
        out.reserve(cfg_.notions.size());
        for (auto o : cfg_.notions) {
            out.emplace_back(o, value(o).or_zero());
        }
        return out;
    }

private:
    bool wants(Objective o) const {
        return std::find(cfg_.notions.begin(), cfg_.notions.end(), o) != cfg_.notions.end();
    }
    bool discounted() const noexcept { return cfg_.window.kind == WindowKind::discounted; }

    FairnessValue tail_value(Objective o) const {
        if (o == Objective::IF && track_if_) {
            return if_tail_.value(history_.now());
        }
        return evaluate_notion(tail_view(history_, cfg_.window.window), cfg_.notion(o));
    }

    void apply_truncation_rule() {
        if (history_.size() <= cfg_.window.window) {
            history_.reset_stability();
            return;
        }
        const auto full = value(cfg_.guiding);
        const auto tail = tail_value(cfg_.guiding);
        if (!full.defined || !tail.defined) {
            history_.reset_stability();
            return;
        }
        last_pruned_ = history_.prune(full.value - tail.value);
        if (last_pruned_ > 0) {
            if (track_if_) {
                if_full_ = if_tail_;
            }
            if (track_csc_) {
                csc_.keep_newest(cfg_.window.window);
            }
        }
    }

    EngineConfig cfg_;
    FairnessHistory history_;
    FairnessHistory step_history_;
    PairwiseFairness if_full_;
    PairwiseFairness if_tail_;
    KnnConsistency csc_;
    bool track_if_ = false;
    bool track_csc_ = false;
    std::size_t last_pruned_ = 0;
};

} // namespace farel
