#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <vector>

#include "farel/fairness/distance.hpp"
#include "farel/fairness/notions.hpp"

namespace farel {

/// Individual fairness maintained under push / pop-oldest in O(n) per update.
///
/// Each entry i keeps r_i = sum over earlier partners j of gamma^(t_i - t_j) * tau_ij
/// and c_i = sum of the same weights, where tau_ij = d(i,j) - TV(M_i, M_j). The pair
/// weight gamma^((now - t_i) + (now - t_j)) then factors as gamma^(2(now - t_i)) times
/// the stored weight, so the value is recovered in O(n) at any time.
class PairwiseFairness {
public:
    PairwiseFairness() = default;
    PairwiseFairness(DistanceKind kind, double lambda, double gamma) : kind_(kind), lambda_(lambda), gamma_(gamma) {}

    void clear() { entries_.clear(); }
    std::size_t size() const noexcept { return entries_.size(); }

    void push(std::int64_t t, DistanceView view, std::vector<double> dist) {
        Entry e{t, std::move(view), std::move(dist), 0.0, 0.0};
        for (const auto& j : entries_) {
            const double w = weight(t - j.t);
            e.r += w * term(e, j);
            e.c += w;
        }
        entries_.push_back(std::move(e));
    }

    void pop_oldest() {
        if (entries_.empty()) {
            return;
        }
        const Entry old = std::move(entries_.front());
        entries_.pop_front();
        for (auto& e : entries_) {
            const double w = weight(e.t - old.t);
            e.r -= w * term(e, old);
            e.c -= w;
        }
    }

    FairnessValue value(std::int64_t now) const {
        if (entries_.size() < 2) {
            return FairnessValue::undefined();
        }
        double num = 0.0;
        double den = 0.0;
        for (const auto& e : entries_) {
            const double w = weight(2 * (now - e.t));
            num += w * e.r;
            den += w * e.c;
        }
        if (den <= 0.0) {
            return FairnessValue::undefined();
        }
        return FairnessValue::of(std::clamp(-1.0 + num / den, -1.0, 0.0));
    }

private:
    struct Entry {
        std::int64_t t;
        DistanceView view;
        std::vector<double> dist;
        double r;
        double c;
    };

    double weight(std::int64_t age) const { return gamma_ == 1.0 ? 1.0 : std::pow(gamma_, static_cast<double>(age)); }

    double term(const Entry& a, const Entry& b) const {
        return individual_metric(kind_, a.view, b.view, lambda_) - total_variation(a.dist, b.dist);
    }

    DistanceKind kind_ = DistanceKind::heom;
    double lambda_ = 0.1;
    double gamma_ = 1.0;
    std::deque<Entry> entries_;
};

/// Consistency score complement with per-individual kNN lists kept up to date.
/// Insertion costs O(n); evicting the oldest individual recomputes only the lists
/// that contained it.
class KnnConsistency {
public:
    KnnConsistency() = default;
    KnnConsistency(DistanceKind kind, std::size_t k, double gamma) : kind_(kind), k_(k), gamma_(gamma) {}

    void clear() { entries_.clear(); }
    std::size_t size() const noexcept { return entries_.size(); }

    void push(std::int64_t t, DistanceView view, int action) {
        Entry x{t, std::move(view), action, {}};
        for (auto& j : entries_) {
            const double d = raw_distance(kind_, x.view, j.view);
            x.neighbours.push_back({d, j.t, j.action});
            offer(j, {d, t, action});
        }
        trim(x.neighbours);
        entries_.push_back(std::move(x));
    }

    void pop_oldest() {
        if (entries_.empty()) {
            return;
        }
        const std::int64_t gone = entries_.front().t;
        entries_.pop_front();
        for (auto& e : entries_) {
            const bool had = std::any_of(e.neighbours.begin(), e.neighbours.end(),
                                         [&](const Neighbour& n) { return n.t == gone; });
            if (had) {
                recompute(e);
            }
        }
    }

    /// Keeps only the newest `count` individuals and recomputes all lists.
    void keep_newest(std::size_t count) {
        if (entries_.size() > count) {
            entries_.erase(entries_.begin(), entries_.end() - static_cast<std::ptrdiff_t>(count));
        }
        for (auto& e : entries_) {
            recompute(e);
        }
    }

    FairnessValue value(std::int64_t now) const {
        if (entries_.size() < k_ + 1) {
            return FairnessValue::undefined();
        }
        double num = 0.0;
        double den = 0.0;
        for (const auto& e : entries_) {
            double neigh = 0.0;
            for (const auto& n : e.neighbours) {
                neigh += static_cast<double>(n.action);
            }
            const double w = gamma_ == 1.0 ? 1.0 : std::pow(gamma_, static_cast<double>(now - e.t));
            num += w * std::abs(static_cast<double>(e.action) - neigh) / static_cast<double>(k_);
            den += w;
        }
        return FairnessValue::of(-num / den);
    }

private:
    struct Neighbour {
        double d;
        std::int64_t t;
        int action;
    };
    struct Entry {
        std::int64_t t;
        DistanceView view;
        int action;
        std::vector<Neighbour> neighbours;
    };

    static bool closer(const Neighbour& a, const Neighbour& b) {
        if (a.d != b.d) {
            return a.d < b.d;
        }
        return a.t < b.t;
    }

    void trim(std::vector<Neighbour>& list) const {
        const std::size_t k = std::min(k_, list.size());
        std::partial_sort(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(k), list.end(), closer);
        list.resize(k);
    }

    void offer(Entry& e, Neighbour cand) const {
        if (e.neighbours.size() < k_) {
            e.neighbours.insert(std::upper_bound(e.neighbours.begin(), e.neighbours.end(), cand, closer), cand);
            return;
        }
        if (closer(cand, e.neighbours.back())) {
            e.neighbours.pop_back();
            e.neighbours.insert(std::upper_bound(e.neighbours.begin(), e.neighbours.end(), cand, closer), cand);
        }
    }

    void recompute(Entry& e) const {
        e.neighbours.clear();
        for (const auto& j : entries_) {
            if (j.t != e.t) {
                e.neighbours.push_back({raw_distance(kind_, e.view, j.view), j.t, j.action});
            }
        }
        trim(e.neighbours);
    }

    DistanceKind kind_ = DistanceKind::heom;
    std::size_t k_ = 5;
    double gamma_ = 1.0;
    std::deque<Entry> entries_;
};

} // namespace farel
