#pragma once

#include <algorithm>
#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "farel/agents/dqn.hpp"
#include "farel/agents/pcn.hpp"
#include "farel/core/error.hpp"
#include "farel/core/objective.hpp"
#include "farel/core/trace_io.hpp"
#include "farel/env/fraud.hpp"
#include "farel/env/hiring.hpp"
#include "farel/fairness/distance.hpp"
#include "farel/history/window.hpp"
#include "farel/pareto/pareto.hpp"

namespace farel::experiment {

using json = nlohmann::json;

/// Raised for malformed or inconsistent experiment configs.
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Independent RNG stream for `tag` under run seed `seed`.
inline std::uint64_t stream_seed(std::uint64_t seed, std::string_view tag) {
    return splitmix64(splitmix64(seed) ^ fnv1a64(tag));
}

/// Seed of the i-th draw (episode, evaluation rollout, ...) from a stream.
inline std::uint64_t draw_seed(std::uint64_t stream, std::uint64_t i) { return splitmix64(stream + i); }

enum class AgentKind { pcn, dqn };

struct ExperimentConfig {
    std::string name = "experiment";
    std::string scenario = "hiring";
    std::vector<std::vector<Objective>> objective_sets{{Objective::R, Objective::SP, Objective::IF}};
    std::vector<WindowSpec> windows{WindowSpec::sliding(500)};
    std::vector<DistanceKind> distances{DistanceKind::heom};
    std::vector<std::string> populations{"default"};
    std::vector<std::string> biases{"none"};
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::size_t timesteps = 500000;
    /// Episode length override; 0 keeps the scenario's own horizon.
    std::size_t episode_steps = 0;
    std::size_t eval_episodes = 3;
    AgentKind agent = AgentKind::pcn;
    agents::PcnConfig pcn;
    std::size_t random_episodes = 10;
    std::size_t max_policies = 20;
    agents::DqnConfig dqn;
    double lambda = 0.1;
    std::size_t k = 5;
    double hiring_reward_max = pareto::hiring_reward_max;
    double fraud_reward_max = pareto::fraud_reward_max;
    std::size_t representatives = 10;
    std::size_t trace_every = 10;
    /// Parallel grid cells; does not affect results.
    std::size_t workers = 1;

    pareto::NormalizationSpec normalization() const {
        return {{{Objective::R, scenario == "hiring" ? hiring_reward_max : fraud_reward_max}}};
    }
};

namespace detail {

inline void check(bool ok, const std::string& msg) {
    if (!ok) {
        throw config_error(msg);
    }
}

inline std::vector<Objective> objective_set_from(const json& j) {
    check(j.is_array() && !j.empty(), "an objective set must be a non-empty array");
    std::vector<Objective> out;
    for (const auto& s : j) {
        check(s.is_string(), "objective labels must be strings");
        const auto o = parse_objective(s.get<std::string>());
        check(o.has_value(), "unknown objective '" + s.get<std::string>() + "'");
        out.push_back(*o);
    }
    try {
        out = canonical_objectives(out);
    } catch (const contract_error& e) {
        throw config_error(e.what());
    }
    check(out.front() == Objective::R, "every objective set must contain R");
    return out;
}

inline WindowSpec window_from(const json& j) {
    if (j.is_number_integer()) {
        check(j.get<std::int64_t>() >= 1, "window size must be at least 1");
        return WindowSpec::sliding(j.get<std::size_t>());
    }
    check(j.is_object(), "a window must be a size or an object");
    const auto kind = j.value("kind", std::string("sliding"));
    WindowSpec w;
    if (kind == "sliding") {
        w = WindowSpec::sliding(j.value("window", std::size_t{500}));
    } else if (kind == "discounted") {
        w = WindowSpec::discounted(j.value("window", std::size_t{500}), j.value("gamma", 1.0),
                                   j.value("threshold", 1e-4), j.value("delay", std::size_t{10}));
    } else {
        throw config_error("unknown window kind '" + kind + "'");
    }
    try {
        w.validate();
    } catch (const contract_error& e) {
        throw config_error(e.what());
    }
    return w;
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw config_error(std::string("config key '") + key + "' has the wrong type");
    }
}

} // namespace detail

inline ExperimentConfig config_from_json(const json& j) {
    using detail::check;
    using detail::get_or;
    check(j.is_object(), "config must be a JSON object");
    static const std::vector<std::string> known{
        "name", "scenario", "objectives", "windows", "distances", "populations", "biases", "seeds",
        "timesteps", "episode_steps", "eval_episodes", "agent", "pcn", "dqn", "fairness", "normalization",
        "representatives", "trace_every", "workers"};
    for (const auto& [key, _] : j.items()) {
        check(std::find(known.begin(), known.end(), key) != known.end(), "unknown config key '" + key + "'");
    }
    ExperimentConfig c;
    c.name = get_or(j, "name", c.name);
    c.scenario = get_or(j, "scenario", c.scenario);
    check(c.scenario == "hiring" || c.scenario == "fraud", "scenario must be 'hiring' or 'fraud'");

    if (j.contains("objectives")) {
        const auto& o = j.at("objectives");
        check(o.is_array() && !o.empty(), "objectives must be a non-empty array");
        c.objective_sets.clear();
        if (o.front().is_string()) {
            c.objective_sets.push_back(detail::objective_set_from(o));
        } else {
            for (const auto& s : o) {
                c.objective_sets.push_back(detail::objective_set_from(s));
            }
        }
    }
    if (j.contains("windows")) {
        check(j.at("windows").is_array() && !j.at("windows").empty(), "windows must be a non-empty array");
        c.windows.clear();
        for (const auto& w : j.at("windows")) {
            c.windows.push_back(detail::window_from(w));
        }
    }
    if (j.contains("distances")) {
        check(j.at("distances").is_array() && !j.at("distances").empty(), "distances must be a non-empty array");
        c.distances.clear();
        for (const auto& d : j.at("distances")) {
            try {
                c.distances.push_back(parse_distance(d.get<std::string>()));
            } catch (const std::exception& e) {
                throw config_error(e.what());
            }
        }
    }
    c.populations = get_or(j, "populations", c.populations);
    c.biases = get_or(j, "biases", c.biases);
    check(!c.populations.empty() && !c.biases.empty(), "populations and biases must be non-empty");
    for (const auto& p : c.populations) {
        if (c.scenario == "hiring") {
            try {
                hiring::PopulationSpec::preset(p);
            } catch (const contract_error& e) {
                throw config_error(e.what());
            }
        } else {
            check(p == "default", "the fraud scenario only has the 'default' population");
        }
    }
    for (const auto& b : c.biases) {
        try {
            if (c.scenario == "hiring") {
                hiring::BiasSpec::parse(b);
            } else {
                fraud::FraudBiasSpec::parse(b);
            }
        } catch (const contract_error& e) {
            throw config_error(e.what());
        }
    }
    c.seeds = get_or(j, "seeds", c.seeds);
    check(!c.seeds.empty(), "seeds must be non-empty");
    c.timesteps = get_or(j, "timesteps", c.timesteps);
    check(c.timesteps >= 1, "timesteps must be positive");
    c.episode_steps = get_or(j, "episode_steps", c.episode_steps);
    c.eval_episodes = get_or(j, "eval_episodes", c.eval_episodes);
    check(c.eval_episodes >= 1, "eval_episodes must be positive");

    const auto agent = get_or(j, "agent", std::string("pcn"));
    check(agent == "pcn" || agent == "dqn", "agent must be 'pcn' or 'dqn'");
    c.agent = agent == "pcn" ? AgentKind::pcn : AgentKind::dqn;
    if (j.contains("pcn")) {
        const auto& p = j.at("pcn");
        check(p.is_object(), "pcn must be an object");
        c.pcn.hidden = get_or(p, "hidden", c.pcn.hidden);
        c.pcn.lr = get_or(p, "lr", c.pcn.lr);
        c.pcn.buffer_capacity = get_or(p, "buffer_capacity", c.pcn.buffer_capacity);
        c.pcn.batch_size = get_or(p, "batch_size", c.pcn.batch_size);
        c.pcn.updates_per_episode = get_or(p, "updates_per_episode", c.pcn.updates_per_episode);
        c.pcn.return_scale = get_or(p, "return_scale", c.pcn.return_scale);
        c.pcn.horizon_scale = get_or(p, "horizon_scale", c.pcn.horizon_scale);
        try {
            c.pcn.mode = agents::parse_embedding_mode(get_or(p, "embedding", std::string("concat")));
        } catch (const contract_error& e) {
            throw config_error(e.what());
        }
        c.random_episodes = get_or(p, "random_episodes", c.random_episodes);
        c.max_policies = get_or(p, "max_policies", c.max_policies);
        check(c.max_policies >= 1, "pcn.max_policies must be positive");
    }
    if (j.contains("dqn")) {
        const auto& d = j.at("dqn");
        check(d.is_object(), "dqn must be an object");
        c.dqn.hidden = get_or(d, "hidden", c.dqn.hidden);
        c.dqn.epsilon = get_or(d, "epsilon", c.dqn.epsilon);
        c.dqn.gamma = get_or(d, "gamma", c.dqn.gamma);
        c.dqn.lr = get_or(d, "lr", c.dqn.lr);
        c.dqn.buffer_capacity = get_or(d, "buffer_capacity", c.dqn.buffer_capacity);
        c.dqn.batch_size = get_or(d, "batch_size", c.dqn.batch_size);
        c.dqn.target_sync = get_or(d, "target_sync", c.dqn.target_sync);
        c.dqn.learn_start = get_or(d, "learn_start", c.dqn.learn_start);
        c.dqn.train_every = get_or(d, "train_every", c.dqn.train_every);
    }
    try {
        c.pcn.validate();
        c.dqn.validate();
    } catch (const contract_error& e) {
        throw config_error(e.what());
    }
    if (j.contains("fairness")) {
        c.lambda = get_or(j.at("fairness"), "lambda", c.lambda);
        c.k = get_or(j.at("fairness"), "k", c.k);
    }
    check(c.lambda > 0.0 && c.k >= 1, "fairness.lambda must be positive and fairness.k at least 1");
    if (j.contains("normalization")) {
        c.hiring_reward_max = get_or(j.at("normalization"), "hiring_reward_max", c.hiring_reward_max);
        c.fraud_reward_max = get_or(j.at("normalization"), "fraud_reward_max", c.fraud_reward_max);
    }
    c.representatives = get_or(j, "representatives", c.representatives);
    c.trace_every = get_or(j, "trace_every", c.trace_every);
    check(c.representatives >= 1 && c.trace_every >= 1, "representatives and trace_every must be positive");
    c.workers = get_or(j, "workers", c.workers);
    check(c.workers >= 1, "workers must be positive");
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw config_error("cannot open config '" + path + "'");
    }
    try {
        return config_from_json(json::parse(is));
    } catch (const json::parse_error& e) {
        throw config_error(std::string("invalid JSON in '") + path + "': " + e.what());
    }
}

/// Every field that can change results, with defaults filled in.
inline json semantic_json(const ExperimentConfig& c) {
    json sets = json::array();
    for (const auto& s : c.objective_sets) {
        sets.push_back(trace_json::objectives_to_json(s));
    }
    json windows = json::array();
    for (const auto& w : c.windows) {
        windows.push_back(trace_json::window_to_json(w));
    }
    json distances = json::array();
    for (auto d : c.distances) {
        distances.push_back(std::string(distance_name(d)));
    }
    return {{"name", c.name},
            {"scenario", c.scenario},
            {"objectives", sets},
            {"windows", windows},
            {"distances", distances},
            {"populations", c.populations},
            {"biases", c.biases},
            {"seeds", c.seeds},
            {"timesteps", c.timesteps},
            {"episode_steps", c.episode_steps},
            {"eval_episodes", c.eval_episodes},
            {"agent", c.agent == AgentKind::pcn ? "pcn" : "dqn"},
            {"pcn",
             {{"hidden", c.pcn.hidden},
              {"lr", c.pcn.lr},
              {"buffer_capacity", c.pcn.buffer_capacity},
              {"batch_size", c.pcn.batch_size},
              {"updates_per_episode", c.pcn.updates_per_episode},
              {"return_scale", c.pcn.return_scale},
              {"horizon_scale", c.pcn.horizon_scale},
              {"embedding", agents::embedding_mode_name(c.pcn.mode)},
              {"random_episodes", c.random_episodes},
              {"max_policies", c.max_policies}}},
            {"dqn",
             {{"hidden", c.dqn.hidden},
              {"epsilon", c.dqn.epsilon},
              {"gamma", c.dqn.gamma},
              {"lr", c.dqn.lr},
              {"buffer_capacity", c.dqn.buffer_capacity},
              {"batch_size", c.dqn.batch_size},
              {"target_sync", c.dqn.target_sync},
              {"learn_start", c.dqn.learn_start},
              {"train_every", c.dqn.train_every}}},
            {"fairness", {{"lambda", c.lambda}, {"k", c.k}}},
            {"normalization", {{"hiring_reward_max", c.hiring_reward_max}, {"fraud_reward_max", c.fraud_reward_max}}},
            {"representatives", c.representatives},
            {"trace_every", c.trace_every}};
}

/// FNV-1a over the canonical (key-sorted) dump of the semantic fields.
inline std::string config_hash(const ExperimentConfig& c) { return hex64(fnv1a64(semantic_json(c).dump())); }

/// FAREL_SEED replaces the seed list, FAREL_STEPS the timestep budget.
inline void apply_env_overrides(ExperimentConfig& c) {
    auto parse = [](const char* name, const char* v) {
        char* end = nullptr;
        errno = 0;
        const unsigned long long x = std::strtoull(v, &end, 10);
        if (end == v || *end != '\0' || errno != 0 || v[0] == '-') {
            throw config_error(std::string(name) + " must be a non-negative integer, got '" + v + "'");
        }
        return static_cast<std::uint64_t>(x);
    };
    if (const char* s = std::getenv("FAREL_SEED"); s != nullptr && *s != '\0') {
        c.seeds = {parse("FAREL_SEED", s)};
    }
    if (const char* s = std::getenv("FAREL_STEPS"); s != nullptr && *s != '\0') {
        c.timesteps = parse("FAREL_STEPS", s);
        if (c.timesteps == 0) {
            throw config_error("FAREL_STEPS must be positive");
        }
    }
}

/// One point of the seed x objectives x window x distance x population x bias grid.
struct Cell {
    std::vector<Objective> objectives;
    WindowSpec window;
    DistanceKind distance = DistanceKind::heom;
    std::string population;
    std::string bias;
    std::uint64_t seed = 0;

    std::string objectives_tag() const {
        std::string s;
        for (auto o : objectives) {
            s += (s.empty() ? "" : "-") + std::string(objective_name(o));
        }
        return s;
    }

    /// Directory name, e.g. "R-SP-IF_default_none_HEOM_w500_seed0".
    std::string label() const {
        return objectives_tag() + "_" + population + "_" + bias + "_" + std::string(distance_name(distance)) + "_" +
               window.label() + "_seed" + std::to_string(seed);
    }
};

inline std::vector<Cell> expand_grid(const ExperimentConfig& c) {
    std::vector<Cell> cells;
    for (const auto& objs : c.objective_sets) {
        for (const auto& pop : c.populations) {
            for (const auto& bias : c.biases) {
                for (auto d : c.distances) {
                    for (const auto& w : c.windows) {
                        for (auto seed : c.seeds) {
                            cells.push_back({objs, w, d, pop, bias, seed});
                        }
                    }
                }
            }
        }
    }
    return cells;
}

} // namespace farel::experiment
