#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "farel/core/error.hpp"

namespace farel::agents {

struct Experience {
    std::vector<double> observation;
    int action = 0;
    double reward = 0.0;
    std::vector<double> next_observation;
    bool done = false;
};

/// Fixed-capacity ring buffer of single-objective transitions.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 10000) : capacity_(capacity) {
        require(capacity >= 1, "replay buffer capacity must be at least 1");
        data_.reserve(std::min<std::size_t>(capacity, 1 << 16));
    }

    std::size_t size() const noexcept { return data_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    const Experience& operator[](std::size_t i) const { return data_[i]; }

    void push(Experience e) {
        if (data_.size() < capacity_) {
            data_.push_back(std::move(e));
        } else {
            data_[next_] = std::move(e);
        }
        next_ = (next_ + 1) % capacity_;
    }

    /// Indices drawn uniformly with replacement.
    template <class Rng>
    std::vector<std::size_t> sample(std::size_t n, Rng& rng) const {
        require(!data_.empty(), "cannot sample from an empty replay buffer");
        std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
        std::vector<std::size_t> out(n);
        for (auto& i : out) {
            i = pick(rng);
        }
        return out;
    }

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Experience> data_;
};

} // namespace farel::agents
