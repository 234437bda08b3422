#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "farel/agents/replay_buffer.hpp"
#include "farel/core/environment.hpp"
#include "farel/neural/dense_net.hpp"

namespace farel::agents {

struct DqnConfig {
    std::size_t hidden = 64;
    double epsilon = 0.1;
    double gamma = 1.0;
    double lr = 1e-3;
    std::size_t buffer_capacity = 10000;
    std::size_t batch_size = 32;
    std::size_t target_sync = 250;
    std::size_t learn_start = 100;
    std::size_t train_every = 1;

    void validate() const {
        require(hidden >= 1, "hidden width must be positive");
        require(epsilon >= 0.0 && epsilon <= 1.0, "epsilon must lie in [0,1]");
        require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0,1]");
        require(lr > 0.0, "learning rate must be positive");
        require(batch_size >= 1 && target_sync >= 1 && train_every >= 1, "DQN counts must be positive");
    }
};

inline std::size_t argmax(const nn::Matrix& col) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < col.rows(); ++i) {
        if (col(i, 0) > col(best, 0)) {
            best = i;
        }
    }
    return static_cast<std::size_t>(best);
}

/// Epsilon-greedy deep Q-learning on the performance reward R.
class DqnAgent final : public Policy {
public:
    DqnAgent(std::size_t observation_size, int action_count, DqnConfig cfg, std::uint64_t seed)
        : cfg_(cfg), actions_(action_count), rng_(seed), buffer_(cfg.buffer_capacity) {
        cfg_.validate();
        require(action_count >= 1, "DQN needs at least one action");
        q_ = nn::DenseNet({observation_size, cfg_.hidden, static_cast<std::size_t>(action_count)},
                          {nn::Activation::relu, nn::Activation::identity}, rng_);
        target_ = q_;
        opt_ = nn::Adam(q_, {cfg_.lr});
    }

    const DqnConfig& config() const noexcept { return cfg_; }
    const nn::DenseNet& network() const noexcept { return q_; }
    nn::DenseNet& network() noexcept { return q_; }
    const nn::DenseNet& target_network() const noexcept { return target_; }
    const ReplayBuffer& buffer() const noexcept { return buffer_; }
    void set_epsilon(double e) {
        require(e >= 0.0 && e <= 1.0, "epsilon must lie in [0,1]");
        cfg_.epsilon = e;
    }
    /// Frozen agents act but neither store transitions nor learn.
    void set_learning(bool on) noexcept { learning_ = on; }

    nn::Matrix q_values(std::span<const double> obs) const {
        nn::Matrix x(static_cast<Eigen::Index>(obs.size()), 1);
        for (std::size_t i = 0; i < obs.size(); ++i) {
            x(static_cast<Eigen::Index>(i), 0) = obs[i];
        }
        return q_.forward(x);
    }

    int greedy(std::span<const double> obs) const { return static_cast<int>(argmax(q_values(obs))); }

    ActionChoice act(std::span<const double> obs) override {
        const int best = greedy(obs);
        ActionChoice c;
        c.dist.assign(static_cast<std::size_t>(actions_), cfg_.epsilon / actions_);
        c.dist[static_cast<std::size_t>(best)] += 1.0 - cfg_.epsilon;
        if (cfg_.epsilon > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < cfg_.epsilon) {
            c.action = std::uniform_int_distribution<int>(0, actions_ - 1)(rng_);
        } else {
            c.action = best;
        }
        return c;
    }

    void observe(const Transition& tr) override {
        if (!learning_) {
            return;
        }
        const double r = tr.reward ? tr.reward->get(Objective::R).value_or(0.0) : 0.0;
        buffer_.push({{tr.observation.begin(), tr.observation.end()},
                      tr.action,
                      r,
                      {tr.next_observation.begin(), tr.next_observation.end()},
                      tr.done});
        ++steps_;
        if (buffer_.size() >= cfg_.learn_start && steps_ % cfg_.train_every == 0) {
            train_step(buffer_.sample(cfg_.batch_size, rng_));
        }
    }

    /// One gradient step on the mean squared TD error of the given buffer
    /// entries. Returns the loss before the update.
    double train_step(const std::vector<std::size_t>& batch) {
        std::vector<const Experience*> exps;
        for (auto i : batch) {
            exps.push_back(&buffer_[i]);
        }
        return train_on(exps);
    }

    double train_on(const std::vector<const Experience*>& batch) {
        const auto n = static_cast<Eigen::Index>(batch.size());
        const auto width = static_cast<Eigen::Index>(q_.input_size());
        nn::Matrix s(width, n);
        nn::Matrix s2(width, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index i = 0; i < width; ++i) {
                s(i, j) = batch[static_cast<std::size_t>(j)]->observation[static_cast<std::size_t>(i)];
                s2(i, j) = batch[static_cast<std::size_t>(j)]->next_observation[static_cast<std::size_t>(i)];
            }
        }
        const nn::Matrix next_q = target_.forward(s2);
        nn::ForwardCache cache;
        const nn::Matrix q = q_.forward(s, cache);
        nn::Matrix dq = nn::Matrix::Zero(q.rows(), q.cols());
        double loss = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto& e = *batch[static_cast<std::size_t>(j)];
            const double bootstrap = e.done ? 0.0 : cfg_.gamma * next_q.col(j).maxCoeff();
            const double err = q(e.action, j) - (e.reward + bootstrap);
            loss += 0.5 * err * err;
            dq(e.action, j) = err / static_cast<double>(n);
        }
        opt_.step(q_, q_.backward(cache, dq));
        if (++updates_ % cfg_.target_sync == 0) {
            target_ = q_;
        }
        return loss / static_cast<double>(n);
    }

    void sync_target() { target_ = q_; }

private:
    DqnConfig cfg_;
    int actions_;
    std::mt19937_64 rng_;
    nn::DenseNet q_;
    nn::DenseNet target_;
    nn::Adam opt_;
    ReplayBuffer buffer_;
    std::size_t steps_ = 0;
    std::size_t updates_ = 0;
    bool learning_ = true;
};

} // namespace farel::agents
