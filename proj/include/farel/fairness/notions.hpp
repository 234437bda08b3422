#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "farel/core/error.hpp"
#include "farel/core/interaction.hpp"
#include "farel/core/objective.hpp"
#include "farel/fairness/distance.hpp"
#include "farel/history/history.hpp"

namespace farel {

struct GroupPair {
    GroupId g;
    GroupId h;
};

struct NotionSpec {
    Objective kind = Objective::SP;
    GroupPair groups;
    DistanceKind distance = DistanceKind::heom;
    double lambda = 0.1;
    std::size_t k = 5;

    void validate() const {
        require(kind != Objective::R, "R is not a fairness notion");
        require(lambda > 0.0, "lambda must be positive");
        require(k >= 1, "k must be at least 1");
        if (is_group_notion(kind)) {
            require(!groups.g.empty() && !groups.h.empty(), "group notions need both group ids");
        }
    }
};

/// Value of a fairness notion; `defined` is false when a conditional
/// probability it relies on has an empty condition.
struct FairnessValue {
    double value = 0.0;
    bool defined = false;

    static FairnessValue undefined() { return {}; }
    static FairnessValue of(double v) { return {v, true}; }

    /// Reward wiring: an undefined notion carries no penalty.
    double or_zero() const noexcept { return defined ? value : 0.0; }
};

namespace detail {

struct Ratio {
    double num = 0.0;
    double den = 0.0;
};

inline FairnessValue rate_gap(Ratio a, Ratio b) {
    if (a.den == 0.0 || b.den == 0.0) {
        return FairnessValue::undefined();
    }
    return FairnessValue::of(-std::abs(a.num / a.den - b.num / b.den));
}

} // namespace detail

// Group notions from two groups' weighted confusion statistics.

inline FairnessValue statistical_parity(const WeightedConfusionMatrix& g, const WeightedConfusionMatrix& h) {
    return detail::rate_gap({g.positive_actions, g.total}, {h.positive_actions, h.total});
}

inline FairnessValue equal_opportunity(const WeightedConfusionMatrix& g, const WeightedConfusionMatrix& h) {
    return detail::rate_gap({g.tp, g.tp + g.fn}, {h.tp, h.tp + h.fn});
}

inline FairnessValue overall_accuracy_equality(const WeightedConfusionMatrix& g, const WeightedConfusionMatrix& h) {
    return detail::rate_gap({g.tp + g.tn, g.labelled()}, {h.tp + h.tn, h.labelled()});
}

inline FairnessValue predictive_parity(const WeightedConfusionMatrix& g, const WeightedConfusionMatrix& h) {
    return detail::rate_gap({g.tp, g.tp + g.fp}, {h.tp, h.tp + h.fp});
}

inline FairnessValue predictive_equality(const WeightedConfusionMatrix& g, const WeightedConfusionMatrix& h) {
    return detail::rate_gap({g.fp, g.fp + g.tn}, {h.fp, h.fp + h.tn});
}

inline FairnessValue group_notion(Objective kind, const WeightedConfusionMatrix& g, const WeightedConfusionMatrix& h) {
    switch (kind) {
    case Objective::SP:
        return statistical_parity(g, h);
    case Objective::EO:
        return equal_opportunity(g, h);
    case Objective::OAE:
        return overall_accuracy_equality(g, h);
    case Objective::PP:
        return predictive_parity(g, h);
    case Objective::PE:
        return predictive_equality(g, h);
    default:
        throw contract_error("not a group notion: " + std::string(objective_name(kind)));
    }
}

/// Interactions together with their weights at evaluation time.
struct HistoryView {
    std::vector<const Interaction*> items;
    std::vector<double> weights;

    std::size_t size() const noexcept { return items.size(); }
};

/// The whole buffer, weighted at `now`.
inline HistoryView view_of(const FairnessHistory& h, std::int64_t now) {
    HistoryView v;
    v.items.reserve(h.size());
    v.weights.reserve(h.size());
    for (const auto& x : h.buffer()) {
        v.items.push_back(&x);
        v.weights.push_back(h.weight_of(x, now));
    }
    return v;
}

inline HistoryView view_of(const FairnessHistory& h) { return view_of(h, h.now()); }

/// The newest `count` interactions of the buffer, weighted at the newest timestep.
inline HistoryView tail_view(const FairnessHistory& h, std::size_t count) {
    HistoryView v;
    const auto& buf = h.buffer();
    const std::size_t start = buf.size() > count ? buf.size() - count : 0;
    for (std::size_t i = start; i < buf.size(); ++i) {
        v.items.push_back(&buf[i]);
        v.weights.push_back(h.weight_of(buf[i], h.now()));
    }
    return v;
}

inline WeightedConfusionMatrix confusion_of(const HistoryView& v, const GroupId& group) {
    WeightedConfusionMatrix m;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v.items[i]->in_group(group)) {
            m.add(*v.items[i], v.weights[i]);
        }
    }
    return m;
}

inline FairnessValue group_notion(const HistoryView& v, Objective kind, const GroupPair& gp) {
    return group_notion(kind, confusion_of(v, gp.g), confusion_of(v, gp.h));
}

// History-level group notions (full recomputation at `now`).

inline FairnessValue statistical_parity(const FairnessHistory& h, const GroupId& g, const GroupId& g2,
                                        std::int64_t now) {
    return statistical_parity(h.recompute_confusion(g, now), h.recompute_confusion(g2, now));
}
inline FairnessValue equal_opportunity(const FairnessHistory& h, const GroupId& g, const GroupId& g2,
                                       std::int64_t now) {
    return equal_opportunity(h.recompute_confusion(g, now), h.recompute_confusion(g2, now));
}
inline FairnessValue overall_accuracy_equality(const FairnessHistory& h, const GroupId& g, const GroupId& g2,
                                               std::int64_t now) {
    return overall_accuracy_equality(h.recompute_confusion(g, now), h.recompute_confusion(g2, now));
}
inline FairnessValue predictive_parity(const FairnessHistory& h, const GroupId& g, const GroupId& g2,
                                       std::int64_t now) {
    return predictive_parity(h.recompute_confusion(g, now), h.recompute_confusion(g2, now));
}
inline FairnessValue predictive_equality(const FairnessHistory& h, const GroupId& g, const GroupId& g2,
                                         std::int64_t now) {
    return predictive_equality(h.recompute_confusion(g, now), h.recompute_confusion(g2, now));
}

inline std::vector<DistanceView> distance_views(const HistoryView& v) {
    std::vector<DistanceView> out;
    out.reserve(v.size());
    for (const auto* x : v.items) {
        out.push_back(make_distance_view(x->individual));
    }
    return out;
}

/// Individual fairness over every ordered pair of individuals in the view:
/// -1 + sum w_i w_j (d(i,j) - TV(M_i, M_j)) / sum w_i w_j, clamped to [-1, 0].
inline FairnessValue individual_fairness(const HistoryView& v, const NotionSpec& spec) {
    const std::size_t n = v.size();
    if (n < 2) {
        return FairnessValue::undefined();
    }
    const auto views = distance_views(v);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) {
                continue;
            }
            const double w = v.weights[i] * v.weights[j];
            const double d = individual_metric(spec.distance, views[i], views[j], spec.lambda);
            const double tv = total_variation(v.items[i]->action_dist, v.items[j]->action_dist);
            num += w * (d - tv);
            den += w;
        }
    }
    if (den <= 0.0) {
        return FairnessValue::undefined();
    }
    return FairnessValue::of(std::clamp(-1.0 + num / den, -1.0, 0.0));
}

/// k nearest neighbours of item `i` under the raw metric, ties broken by the
/// earlier timestep.
inline std::vector<std::size_t> nearest_neighbours(const HistoryView& v, const std::vector<DistanceView>& views,
                                                   std::size_t i, const NotionSpec& spec) {
    std::vector<std::pair<double, std::size_t>> cand;
    cand.reserve(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) {
        if (j != i) {
            cand.emplace_back(raw_distance(spec.distance, views[i], views[j]), j);
        }
    }
    const std::size_t k = std::min(spec.k, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(),
                      [&](const auto& a, const auto& b) {
                          if (a.first != b.first) {
                              return a.first < b.first;
                          }
                          return v.items[a.second]->t < v.items[b.second]->t;
                      });
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t q = 0; q < k; ++q) {
        out.push_back(cand[q].second);
    }
    return out;
}

/// Consistency score complement: -(sum_i w_i (1/k)|a_i - sum_{j in kNN(i)} a_j|) / sum_i w_i.
inline FairnessValue consistency_score_complement(const HistoryView& v, const NotionSpec& spec) {
    const std::size_t n = v.size();
    if (n < spec.k + 1) {
        return FairnessValue::undefined();
    }
    const auto views = distance_views(v);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double neigh = 0.0;
        for (auto j : nearest_neighbours(v, views, i, spec)) {
            neigh += static_cast<double>(v.items[j]->action);
        }
        const double term = std::abs(static_cast<double>(v.items[i]->action) - neigh) / static_cast<double>(spec.k);
        num += v.weights[i] * term;
        den += v.weights[i];
    }
    return FairnessValue::of(-num / den);
}

inline FairnessValue individual_fairness(const FairnessHistory& h, const NotionSpec& spec, std::int64_t now) {
    return individual_fairness(view_of(h, now), spec);
}

inline FairnessValue consistency_score_complement(const FairnessHistory& h, const NotionSpec& spec,
                                                  std::int64_t now) {
    return consistency_score_complement(view_of(h, now), spec);
}

/// Batch evaluation of any notion over a view.
inline FairnessValue evaluate_notion(const HistoryView& v, const NotionSpec& spec) {
    if (is_group_notion(spec.kind)) {
        return group_notion(v, spec.kind, spec.groups);
    }
    if (spec.kind == Objective::IF) {
        return individual_fairness(v, spec);
    }
    if (spec.kind == Objective::CSC) {
        return consistency_score_complement(v, spec);
    }
    throw contract_error("cannot evaluate objective " + std::string(objective_name(spec.kind)) + " as a notion");
}

} // namespace farel
