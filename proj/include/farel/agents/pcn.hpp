#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "farel/core/environment.hpp"
#include "farel/core/objective.hpp"
#include "farel/neural/dense_net.hpp"
#include "farel/pareto/pareto.hpp"

namespace farel::agents {

enum class EmbeddingMode { concat, product };

inline EmbeddingMode parse_embedding_mode(std::string_view s) {
    if (s == "concat") {
        return EmbeddingMode::concat;
    }
    if (s == "product") {
        return EmbeddingMode::product;
    }
    throw contract_error("unknown embedding mode '" + std::string(s) + "'");
}

inline const char* embedding_mode_name(EmbeddingMode m) { return m == EmbeddingMode::concat ? "concat" : "product"; }

struct PcnConfig {
    std::size_t hidden = 64;
    EmbeddingMode mode = EmbeddingMode::concat;
    double lr = 1e-3;
    std::size_t buffer_capacity = 1024;
    std::size_t batch_size = 256;
    std::size_t updates_per_episode = 20;
    // Input scaling of desired returns and horizon; 0 means 1/horizon.
    double return_scale = 0.0;
    double horizon_scale = 0.0;

    void validate() const {
        require(hidden >= 1, "hidden width must be positive");
        require(lr > 0.0, "learning rate must be positive");
        require(buffer_capacity >= 1 && batch_size >= 1, "PCN buffer and batch sizes must be positive");
        require(return_scale >= 0.0 && horizon_scale >= 0.0, "PCN input scales must be non-negative");
    }
};

struct Command {
    std::vector<double> desired_return;
    double desired_horizon = 1.0;
};

/// R^ <- R^ - r, h^ <- max(h^ - 1, 1).
inline Command update_command(Command c, std::span<const double> reward) {
    require(reward.size() == c.desired_return.size(), "reward and command have different widths");
    for (std::size_t i = 0; i < reward.size(); ++i) {
        c.desired_return[i] -= reward[i];
    }
    c.desired_horizon = std::max(c.desired_horizon - 1.0, 1.0);
    return c;
}

/// The four networks of a PCN: state, horizon and return embeddings feeding
/// a two-layer head that outputs action logits.
class PcnModel {
public:
    PcnModel() = default;

    template <class Rng>
    PcnModel(std::size_t observation_size, std::size_t objectives, int action_count, const PcnConfig& cfg,
             double return_scale, double horizon_scale, Rng& rng)
        : mode_(cfg.mode), return_scale_(return_scale), horizon_scale_(horizon_scale) {
        using nn::Activation;
        state_ = nn::DenseNet({observation_size, cfg.hidden}, {Activation::sigmoid}, rng);
        horizon_ = nn::DenseNet({1, cfg.hidden}, {Activation::sigmoid}, rng);
        return_ = nn::DenseNet({objectives, cfg.hidden}, {Activation::sigmoid}, rng);
        const std::size_t joint = mode_ == EmbeddingMode::concat ? 3 * cfg.hidden : cfg.hidden;
        head_ = nn::DenseNet({joint, cfg.hidden, static_cast<std::size_t>(action_count)},
                             {Activation::relu, Activation::identity}, rng);
    }

    PcnModel(EmbeddingMode mode, double return_scale, double horizon_scale, nn::DenseNet state, nn::DenseNet horizon,
             nn::DenseNet ret, nn::DenseNet head)
        : mode_(mode), return_scale_(return_scale), horizon_scale_(horizon_scale), state_(std::move(state)),
          horizon_(std::move(horizon)), return_(std::move(ret)), head_(std::move(head)) {}

    EmbeddingMode mode() const noexcept { return mode_; }
    double return_scale() const noexcept { return return_scale_; }
    double horizon_scale() const noexcept { return horizon_scale_; }
    std::size_t objectives() const noexcept { return return_.input_size(); }
    std::size_t observation_size() const noexcept { return state_.input_size(); }
    int action_count() const noexcept { return static_cast<int>(head_.output_size()); }
    nn::DenseNet& state_net() noexcept { return state_; }
    nn::DenseNet& horizon_net() noexcept { return horizon_; }
    nn::DenseNet& return_net() noexcept { return return_; }
    nn::DenseNet& head_net() noexcept { return head_; }
    const nn::DenseNet& state_net() const noexcept { return state_; }
    const nn::DenseNet& horizon_net() const noexcept { return horizon_; }
    const nn::DenseNet& return_net() const noexcept { return return_; }
    const nn::DenseNet& head_net() const noexcept { return head_; }

    struct Batch {
        nn::Matrix states;  // obs x B
        nn::Matrix horizon; // 1 x B (unscaled)
        nn::Matrix returns; // d x B (unscaled)
    };

    struct Cache {
        nn::ForwardCache s, h, r, head;
        nn::Matrix es, eh, er;
    };

    nn::Matrix logits(const Batch& b) const {
        Cache c;
        return logits(b, c);
    }

    nn::Matrix logits(const Batch& b, Cache& c) const {
        c.es = state_.forward(b.states, c.s);
        c.eh = horizon_.forward(b.horizon * horizon_scale_, c.h);
        c.er = return_.forward(b.returns * return_scale_, c.r);
        return head_.forward(joint(c), c.head);
    }

    struct Grads {
        nn::Gradients s, h, r, head;
    };

    Grads backward(const Cache& c, const nn::Matrix& dlogits) const {
        Grads g;
        nn::Matrix dj;
        g.head = head_.backward(c.head, dlogits, &dj);
        const auto hd = c.es.rows();
        nn::Matrix des;
        nn::Matrix deh;
        nn::Matrix der;
        if (mode_ == EmbeddingMode::concat) {
            des = dj.topRows(hd);
            deh = dj.middleRows(hd, hd);
            der = dj.bottomRows(hd);
        } else {
            des = dj.cwiseProduct(c.eh).cwiseProduct(c.er);
            deh = dj.cwiseProduct(c.es).cwiseProduct(c.er);
            der = dj.cwiseProduct(c.es).cwiseProduct(c.eh);
        }
        g.s = state_.backward(c.s, des);
        g.h = horizon_.backward(c.h, deh);
        g.r = return_.backward(c.r, der);
        return g;
    }

private:
    nn::Matrix joint(const Cache& c) const {
        if (mode_ == EmbeddingMode::concat) {
            nn::Matrix j(c.es.rows() * 3, c.es.cols());
            j << c.es, c.eh, c.er;
            return j;
        }
        return c.es.cwiseProduct(c.eh).cwiseProduct(c.er);
    }

    EmbeddingMode mode_ = EmbeddingMode::concat;
    double return_scale_ = 1.0;
    double horizon_scale_ = 1.0;
    nn::DenseNet state_;
    nn::DenseNet horizon_;
    nn::DenseNet return_;
    nn::DenseNet head_;
};

inline nn::Matrix softmax_columns(const nn::Matrix& logits) {
    nn::Matrix p = logits;
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
        const double m = p.col(j).maxCoeff();
        p.col(j) = (p.col(j).array() - m).exp().matrix();
        p.col(j) /= p.col(j).sum();
    }
    return p;
}

inline nn::Matrix column(std::span<const double> v) {
    nn::Matrix m(static_cast<Eigen::Index>(v.size()), 1);
    for (std::size_t i = 0; i < v.size(); ++i) {
        m(static_cast<Eigen::Index>(i), 0) = v[i];
    }
    return m;
}

/// Acts with a fixed model under a command that is updated by the received
/// rewards. Greedy policies report a one-hot action distribution.
class PcnPolicy : public Policy {
public:
    PcnPolicy(const PcnModel& model, std::vector<Objective> objectives, Command command, bool greedy,
              std::uint64_t seed)
        : model_(&model), objectives_(std::move(objectives)), initial_(std::move(command)), command_(initial_),
          greedy_(greedy), rng_(seed) {
        require(initial_.desired_return.size() == objectives_.size(), "command width must match the objectives");
    }

    const Command& command() const noexcept { return command_; }
    void set_command(Command c) {
        require(c.desired_return.size() == objectives_.size(), "command width must match the objectives");
        initial_ = std::move(c);
        command_ = initial_;
    }
    void set_greedy(bool g) noexcept { greedy_ = g; }

    void begin_episode(std::span<const double>) override { command_ = initial_; }

    ActionChoice act(std::span<const double> obs) override {
        PcnModel::Batch b{column(obs), nn::Matrix::Constant(1, 1, command_.desired_horizon), column(command_.desired_return)};
        const nn::Matrix p = softmax_columns(model_->logits(b));
        ActionChoice c;
        const auto n = static_cast<std::size_t>(p.rows());
        c.dist.resize(n);
        if (greedy_) {
            Eigen::Index best = 0;
            for (Eigen::Index i = 1; i < p.rows(); ++i) {
                if (p(i, 0) > p(best, 0)) {
                    best = i;
                }
            }
            c.action = static_cast<int>(best);
            c.dist[static_cast<std::size_t>(best)] = 1.0;
            return c;
        }
        double acc = 0.0;
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
        c.action = static_cast<int>(n - 1);
        bool picked = false;
        for (std::size_t i = 0; i < n; ++i) {
            c.dist[i] = p(static_cast<Eigen::Index>(i), 0);
            acc += c.dist[i];
            if (!picked && u < acc) {
                c.action = static_cast<int>(i);
                picked = true;
            }
        }
        return c;
    }

    void observe(const Transition& tr) override {
        if (tr.reward != nullptr) {
            command_ = update_command(command_, tr.reward->project(objectives_));
        }
    }

protected:
    const PcnModel* model_;
    std::vector<Objective> objectives_;
    Command initial_;
    Command command_;
    bool greedy_;
    std::mt19937_64 rng_;
};

struct StoredEpisode {
    std::vector<std::vector<double>> observations;
    std::vector<int> actions;
    std::vector<std::vector<double>> rewards;
    std::vector<double> returns;

    std::size_t length() const noexcept { return actions.size(); }
};

/// Pareto Conditioned Network: executes commands drawn from its best buffered
/// episodes and learns to reproduce the actions that achieved them.
class PcnAgent final : public PcnPolicy {
public:
    PcnAgent(std::size_t observation_size, int action_count, std::vector<Objective> objectives, std::size_t horizon,
             PcnConfig cfg, std::uint64_t seed)
        : PcnPolicy(model_storage_, objectives, Command{std::vector<double>(objectives.size(), 0.0), 1.0}, false,
                    seed ^ 0x9e3779b97f4a7c15ULL),
          cfg_(cfg), rng_train_(seed) {
        cfg_.validate();
        require(!objectives_.empty(), "PCN needs at least one objective");
        const double h = static_cast<double>(std::max<std::size_t>(horizon, 1));
        const double rs = cfg_.return_scale > 0.0 ? cfg_.return_scale : 1.0 / h;
        const double hs = cfg_.horizon_scale > 0.0 ? cfg_.horizon_scale : 1.0 / h;
        model_storage_ = PcnModel(observation_size, objectives_.size(), action_count, cfg_, rs, hs, rng_train_);
        model_ = &model_storage_;
        reset_optimizers();
    }

    PcnAgent(const PcnAgent&) = delete;
    PcnAgent& operator=(const PcnAgent&) = delete;

    const PcnConfig& config() const noexcept { return cfg_; }
    const PcnModel& model() const noexcept { return model_storage_; }
    PcnModel& model() noexcept { return model_storage_; }
    const std::vector<Objective>& objectives() const noexcept { return objectives_; }
    const std::vector<StoredEpisode>& buffer() const noexcept { return buffer_; }

    void begin_episode(std::span<const double> obs) override {
        PcnPolicy::begin_episode(obs);
        current_ = {};
    }

    /// Uniformly random actions (warm-up episodes); the command is still tracked.
    void set_explore(bool e) noexcept { explore_ = e; }
    bool exploring() const noexcept { return explore_; }

    ActionChoice act(std::span<const double> obs) override {
        current_.observations.emplace_back(obs.begin(), obs.end());
        if (!explore_) {
            return PcnPolicy::act(obs);
        }
        const auto n = static_cast<std::size_t>(model_storage_.action_count());
        ActionChoice c;
        c.dist.assign(n, 1.0 / static_cast<double>(n));
        c.action = static_cast<int>(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_));
        return c;
    }

    void observe(const Transition& tr) override {
        const auto r = tr.reward != nullptr ? tr.reward->project(objectives_) : std::vector<double>(objectives_.size(), 0.0);
        current_.actions.push_back(tr.action);
        current_.rewards.push_back(r);
        PcnPolicy::observe(tr);
    }

    /// Moves the recorded episode into the buffer. Empty episodes are dropped.
    void end_episode() {
        if (current_.actions.empty()) {
            return;
        }
        current_.observations.resize(current_.actions.size());
        current_.returns.assign(objectives_.size(), 0.0);
        for (const auto& r : current_.rewards) {
            for (std::size_t k = 0; k < r.size(); ++k) {
                current_.returns[k] += r[k];
            }
        }
        add_episode(std::move(current_));
        current_ = {};
    }

    void add_episode(StoredEpisode ep) {
        require(ep.returns.size() == objectives_.size(), "episode return has the wrong width");
        buffer_.push_back(std::move(ep));
        if (buffer_.size() > cfg_.buffer_capacity) {
            prune_buffer();
        }
    }

    /// Keeps the best `capacity` episodes ordered by non-dominance rank, then
    /// crowding distance (larger first).
    void prune_buffer() {
        std::vector<pareto::Point> pts;
        for (const auto& e : buffer_) {
            pts.push_back(e.returns);
        }
        const auto rank = pareto::nondominated_ranks(pts);
        std::vector<double> crowd(pts.size(), 0.0);
        const std::size_t max_rank = *std::max_element(rank.begin(), rank.end());
        for (std::size_t r = 0; r <= max_rank; ++r) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < rank.size(); ++i) {
                if (rank[i] == r) {
                    members.push_back(i);
                }
            }
            const auto cd = pareto::crowding_distance(pts, members);
            for (std::size_t q = 0; q < members.size(); ++q) {
                crowd[members[q]] = cd[q];
            }
        }
        std::vector<std::size_t> order(pts.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (rank[a] != rank[b]) {
                return rank[a] < rank[b];
            }
            return crowd[a] > crowd[b];
        });
        order.resize(std::min(order.size(), cfg_.buffer_capacity));
        std::sort(order.begin(), order.end());
        std::vector<StoredEpisode> kept;
        kept.reserve(order.size());
        for (auto i : order) {
            kept.push_back(std::move(buffer_[i]));
        }
        buffer_ = std::move(kept);
    }

    /// Indices of buffered episodes with non-dominated returns.
    std::vector<std::size_t> nondominated_episodes() const {
        std::vector<pareto::Point> pts;
        for (const auto& e : buffer_) {
            pts.push_back(e.returns);
        }
        return pareto::nondominated_indices(pts);
    }

    /// Per-objective sample std of the non-dominated returns (0 with fewer than two).
    std::vector<double> nondominated_std() const {
        const auto nd = nondominated_episodes();
        std::vector<const pareto::Point*> pts;
        for (auto i : nd) {
            pts.push_back(&buffer_[i].returns);
        }
        if (pts.empty()) {
            return std::vector<double>(objectives_.size(), 0.0);
        }
        return pareto::column_std(pts, pareto::column_mean(pts));
    }

    /// Command from a uniformly chosen non-dominated episode: its return with one
    /// objective raised by U(0, std of that objective), horizon = its length.
    Command select_command() {
        require(!buffer_.empty(), "cannot select a command from an empty buffer");
        const auto nd = nondominated_episodes();
        const auto& ep = buffer_[nd[std::uniform_int_distribution<std::size_t>(0, nd.size() - 1)(rng_train_)]];
        const auto sd = nondominated_std();
        Command c{ep.returns, static_cast<double>(ep.length())};
        const auto k = std::uniform_int_distribution<std::size_t>(0, objectives_.size() - 1)(rng_train_);
        if (sd[k] > 0.0) {
            c.desired_return[k] += std::uniform_real_distribution<double>(0.0, sd[k])(rng_train_);
        }
        return c;
    }

    struct Sample {
        std::size_t episode;
        std::size_t step;
    };

    template <class Rng>
    std::vector<Sample> sample_batch(std::size_t n, Rng& rng) const {
        require(!buffer_.empty(), "cannot sample from an empty buffer");
        std::vector<Sample> out(n);
        std::uniform_int_distribution<std::size_t> pick_ep(0, buffer_.size() - 1);
        for (auto& s : out) {
            s.episode = pick_ep(rng);
            s.step = std::uniform_int_distribution<std::size_t>(0, buffer_[s.episode].length() - 1)(rng);
        }
        return out;
    }

    /// Inputs (s_t, T - t, suffix return from t) and targets a_t of a batch.
    std::pair<PcnModel::Batch, std::vector<int>> make_batch(const std::vector<Sample>& samples) const {
        const auto n = static_cast<Eigen::Index>(samples.size());
        PcnModel::Batch b{nn::Matrix(static_cast<Eigen::Index>(model_storage_.observation_size()), n),
                          nn::Matrix(1, n), nn::Matrix(static_cast<Eigen::Index>(objectives_.size()), n)};
        std::vector<int> targets;
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto& s = samples[static_cast<std::size_t>(j)];
            const auto& ep = buffer_[s.episode];
            const auto& o = ep.observations[s.step];
            for (std::size_t i = 0; i < o.size(); ++i) {
                b.states(static_cast<Eigen::Index>(i), j) = o[i];
            }
            b.horizon(0, j) = static_cast<double>(ep.length() - s.step);
            for (std::size_t k = 0; k < objectives_.size(); ++k) {
                double suffix = 0.0;
                for (std::size_t t = s.step; t < ep.length(); ++t) {
                    suffix += ep.rewards[t][k];
                }
                b.returns(static_cast<Eigen::Index>(k), j) = suffix;
            }
            targets.push_back(ep.actions[s.step]);
        }
        return {std::move(b), std::move(targets)};
    }

    /// Mean cross-entropy of the executed actions; one Adam step when `update`.
    double train_on(const PcnModel::Batch& b, const std::vector<int>& targets, bool update = true) {
        PcnModel::Cache cache;
        const nn::Matrix logits = model_storage_.logits(b, cache);
        const nn::Matrix p = softmax_columns(logits);
        const auto n = static_cast<double>(targets.size());
        nn::Matrix d = p;
        double loss = 0.0;
        for (std::size_t j = 0; j < targets.size(); ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            loss -= std::log(std::max(p(targets[j], jj), 1e-300));
            d(targets[j], jj) -= 1.0;
        }
        if (update) {
            d /= n;
            auto g = model_storage_.backward(cache, d);
            opt_state_.step(model_storage_.state_net(), g.s);
            opt_horizon_.step(model_storage_.horizon_net(), g.h);
            opt_return_.step(model_storage_.return_net(), g.r);
            opt_head_.step(model_storage_.head_net(), g.head);
        }
        return loss / n;
    }

    double train_step() {
        const auto [b, targets] = make_batch(sample_batch(cfg_.batch_size, rng_train_));
        return train_on(b, targets);
    }

    /// Runs the configured number of updates; returns the last loss.
    double train_after_episode() {
        double loss = 0.0;
        for (std::size_t i = 0; i < cfg_.updates_per_episode; ++i) {
            loss = train_step();
        }
        return loss;
    }

    /// Draws the next training command from the buffer.
    void next_command() { set_command(select_command()); }

    std::mt19937_64& train_rng() noexcept { return rng_train_; }

private:
    void reset_optimizers() {
        nn::AdamConfig a{cfg_.lr};
        opt_state_ = nn::Adam(model_storage_.state_net(), a);
        opt_horizon_ = nn::Adam(model_storage_.horizon_net(), a);
        opt_return_ = nn::Adam(model_storage_.return_net(), a);
        opt_head_ = nn::Adam(model_storage_.head_net(), a);
    }

    PcnModel model_storage_;
    PcnConfig cfg_;
    std::mt19937_64 rng_train_;
    nn::Adam opt_state_;
    nn::Adam opt_horizon_;
    nn::Adam opt_return_;
    nn::Adam opt_head_;
    std::vector<StoredEpisode> buffer_;
    StoredEpisode current_;
    bool explore_ = false;
};

/// Checkpoint: four network files plus a JSON manifest.
inline void save_checkpoint(const std::filesystem::path& dir, const PcnModel& model,
                            const std::vector<Objective>& objectives, const std::string& config_hash) {
    std::filesystem::create_directories(dir);
    const std::pair<const char*, const nn::DenseNet*> nets[] = {{"state.bin", &model.state_net()},
                                                                 {"horizon.bin", &model.horizon_net()},
                                                                 {"return.bin", &model.return_net()},
                                                                 {"head.bin", &model.head_net()}};
    for (const auto& [name, net] : nets) {
        std::ofstream os(dir / name, std::ios::binary);
        require(static_cast<bool>(os), "cannot write checkpoint file " + (dir / name).string());
        nn::save(os, *net);
    }
    nlohmann::json m;
    m["format"] = "farel-pcn";
    m["version"] = 1;
    std::vector<std::string> labels;
    for (auto o : objectives) {
        labels.emplace_back(objective_name(o));
    }
    m["objectives"] = labels;
    m["config_hash"] = config_hash;
    m["embedding"] = embedding_mode_name(model.mode());
    m["return_scale"] = model.return_scale();
    m["horizon_scale"] = model.horizon_scale();
    std::ofstream(dir / "manifest.json") << m.dump(2) << "\n";
}

struct LoadedCheckpoint {
    PcnModel model;
    std::vector<Objective> objectives;
    std::string config_hash;
};

inline LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir) {
    std::ifstream ms(dir / "manifest.json");
    require(static_cast<bool>(ms), "missing checkpoint manifest in " + dir.string());
    const auto m = nlohmann::json::parse(ms);
    require(m.value("format", "") == "farel-pcn", "not a PCN checkpoint");
    auto read = [&](const char* name) {
        std::ifstream is(dir / name, std::ios::binary);
        require(static_cast<bool>(is), std::string("missing checkpoint file ") + name);
        return nn::load(is);
    };
    LoadedCheckpoint c;
    for (const auto& s : m.at("objectives")) {
        const auto o = parse_objective(s.get<std::string>());
        require(o.has_value(), "unknown objective in checkpoint manifest");
        c.objectives.push_back(*o);
    }
    c.config_hash = m.value("config_hash", "");
    c.model = PcnModel(parse_embedding_mode(m.at("embedding").get<std::string>()), m.at("return_scale").get<double>(),
                       m.at("horizon_scale").get<double>(), read("state.bin"), read("horizon.bin"), read("return.bin"),
                       read("head.bin"));
    return c;
}

} // namespace farel::agents
