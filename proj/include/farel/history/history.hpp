#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>

#include "farel/core/interaction.hpp"
#include "farel/core/log.hpp"
#include "farel/history/confusion.hpp"
#include "farel/history/window.hpp"

namespace farel {

/// Ordered store of interactions under sliding-window or discounted semantics,
/// with per-group weighted confusion statistics kept in sync incrementally.
class FairnessHistory {
public:
    explicit FairnessHistory(WindowSpec spec = {}) : spec_(spec) { spec_.validate(); }

    const WindowSpec& spec() const noexcept { return spec_; }
    const std::deque<Interaction>& buffer() const noexcept { return buffer_; }
    std::size_t size() const noexcept { return buffer_.size(); }
    bool empty() const noexcept { return buffer_.empty(); }
    std::size_t stable_count() const noexcept { return stable_count_; }

    /// Timestep of the newest interaction (-1 when empty).
    std::int64_t now() const noexcept { return buffer_.empty() ? -1 : buffer_.back().t; }

    void clear() {
        buffer_.clear();
        cache_.clear();
        stable_count_ = 0;
    }

    /// Appends an interaction. For a sliding window the oldest interaction is
    /// evicted once the window is full and returned to the caller.
    std::optional<Interaction> push(Interaction x) {
        require(buffer_.empty() || x.t > buffer_.back().t, "interaction timesteps must be strictly increasing");
        require(!x.groups.empty(), "interaction must belong to at least one group");

        if (spec_.kind == WindowKind::discounted && !buffer_.empty()) {
            const double f = std::pow(spec_.gamma, static_cast<double>(x.t - buffer_.back().t));
            for (auto& [g, m] : cache_) {
                m.scale(f);
            }
        }
        apply_late_feedback(x);
        for (const auto& g : x.groups) {
            cache_[g].add(x, 1.0);
        }
        buffer_.push_back(std::move(x));

        if (spec_.kind == WindowKind::sliding && buffer_.size() > spec_.window) {
            Interaction old = std::move(buffer_.front());
            buffer_.pop_front();
            for (const auto& g : old.groups) {
                auto& m = cache_[g];
                m.total -= 1.0;
                if (old.action == positive_action) {
                    m.positive_actions -= 1.0;
                }
                if (old.feedback) {
                    m.add_feedback(old.action, *old.feedback, -1.0);
                }
            }
            return old;
        }
        return std::nullopt;
    }

    double weight_of(const Interaction& x, std::int64_t now) const {
        if (spec_.kind == WindowKind::sliding) {
            return 1.0;
        }
        return std::pow(spec_.gamma, static_cast<double>(now - x.t));
    }

    /// Weight of buffer entry `i` relative to the newest interaction.
    double weight_at(std::size_t i) const { return weight_of(buffer_[i], now()); }

    /// Threshold/delay truncation rule of the discounted history. `delta` is the
    /// change of the guiding notion between the full buffer and its newest `window`
    /// interactions. Returns the number of interactions dropped.
    std::size_t prune(double delta) {
        if (spec_.kind != WindowKind::discounted) {
            log::warn("prune called on a sliding-window history; ignored");
            return 0;
        }
        if (std::abs(delta) < spec_.threshold) {
            ++stable_count_;
        } else {
            stable_count_ = 0;
        }
        if (stable_count_ < spec_.delay) {
            return 0;
        }
        stable_count_ = 0;
        if (buffer_.size() <= spec_.window) {
            return 0;
        }
        const std::size_t drop = buffer_.size() - spec_.window;
        buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(drop));
        rebuild_cache();
        return drop;
    }

    /// Resets the stability counter without truncating (guiding notion undefined).
    void reset_stability() noexcept { stable_count_ = 0; }

    /// Cached weighted confusion statistics of `group` at the newest timestep.
    WeightedConfusionMatrix confusion(const GroupId& group) const {
        auto it = cache_.find(group);
        return it == cache_.end() ? WeightedConfusionMatrix{} : it->second;
    }

    /// Full recomputation over the buffer, weights evaluated at `now`.
    WeightedConfusionMatrix recompute_confusion(const GroupId& group, std::int64_t now) const {
        WeightedConfusionMatrix m;
        for (const auto& x : buffer_) {
            if (x.in_group(group)) {
                m.add(x, weight_of(x, now));
            }
        }
        return m;
    }

    const std::map<GroupId, WeightedConfusionMatrix>& cached_groups() const noexcept { return cache_; }

private:
    void apply_late_feedback(const Interaction& x) {
        for (const auto& lf : x.late_feedback) {
            auto it = std::lower_bound(buffer_.begin(), buffer_.end(), lf.t,
                                       [](const Interaction& a, std::int64_t t) { return a.t < t; });
            if (it == buffer_.end() || it->t != lf.t || it->feedback) {
                continue;
            }
            it->feedback = lf.correct_action;
            // Weight relative to x.t, the timestep the caches are about to represent.
            const double w = weight_of(*it, x.t);
            for (const auto& g : it->groups) {
                cache_[g].add_feedback(it->action, lf.correct_action, w);
            }
        }
    }

    void rebuild_cache() {
        for (auto& [g, m] : cache_) {
            m = WeightedConfusionMatrix{};
        }
        const auto t_now = now();
        for (const auto& x : buffer_) {
            const double w = weight_of(x, t_now);
            for (const auto& g : x.groups) {
                cache_[g].add(x, w);
            }
        }
    }

    WindowSpec spec_;
    std::deque<Interaction> buffer_;
    std::map<GroupId, WeightedConfusionMatrix> cache_;
    std::size_t stable_count_ = 0;
};

} // namespace farel
