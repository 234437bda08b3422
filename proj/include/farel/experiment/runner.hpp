#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "farel/agents/dqn.hpp"
#include "farel/agents/pcn.hpp"
#include "farel/core/episode.hpp"
#include "farel/core/log.hpp"
#include "farel/env/fraud.hpp"
#include "farel/env/hiring.hpp"
#include "farel/experiment/config.hpp"
#include "farel/experiment/format.hpp"
#include "farel/pareto/pareto.hpp"
#include "farel/version.hpp"

namespace farel::experiment {

inline std::unique_ptr<Environment> make_environment(const ExperimentConfig& cfg, const Cell& cell) {
    if (cfg.scenario == "hiring") {
        hiring::HiringConfig h;
        h.population = hiring::PopulationSpec::preset(cell.population);
        h.bias.kind = hiring::BiasSpec::parse(cell.bias);
        if (cfg.episode_steps > 0) {
            h.horizon = cfg.episode_steps;
        }
        return std::make_unique<hiring::HiringEnv>(h);
    }
    fraud::FraudConfig f;
    f.bias.kind = fraud::FraudBiasSpec::parse(cell.bias);
    if (cfg.episode_steps > 0) {
        f.gen.max_transactions = cfg.episode_steps;
    }
    return std::make_unique<fraud::FraudEnv>(f);
}

inline EngineConfig engine_config(const ExperimentConfig& cfg, const Cell& cell, const Environment& env,
                                  std::vector<Objective> notions) {
    EngineConfig e;
    e.window = cell.window;
    const auto [g, h] = env.protected_groups();
    e.groups = {g, h};
    e.distance = cell.distance;
    e.lambda = cfg.lambda;
    e.k = cfg.k;
    e.notions = std::move(notions);
    e.action_count = env.action_count();
    return e;
}

inline std::vector<Objective> fairness_part(const std::vector<Objective>& objs) {
    std::vector<Objective> out;
    for (auto o : objs) {
        if (o != Objective::R) {
            out.push_back(o);
        }
    }
    return out;
}

struct CellResult {
    Cell cell;
    bool ok = false;
    std::string error;
    std::size_t train_steps = 0;
    std::size_t train_episodes = 0;
    /// Every evaluated policy, returns over all eight objectives.
    std::vector<pareto::PolicyPoint> candidates;
    /// Indices into `candidates` of the coverage set.
    std::vector<std::size_t> coverage;
    std::vector<pareto::PolicyPoint> representatives;
    std::vector<WindowTraceRow> trace;
    double seconds = 0.0;
};

/// Mean return vector (all eight objectives) of `policy` over the evaluation episodes.
inline pareto::Point evaluate_policy(const ExperimentConfig& cfg, const Cell& cell, Environment& env, Policy& policy) {
    FairnessEngine engine(engine_config(cfg, cell, env, {fairness_objectives.begin(), fairness_objectives.end()}));
    const std::uint64_t stream = stream_seed(cell.seed, "eval-env");
    const std::vector<Objective> labels(all_objectives.begin(), all_objectives.end());
    pareto::Point mean(objective_count, 0.0);
    for (std::size_t e = 0; e < cfg.eval_episodes; ++e) {
        const auto trace = run_episode(env, policy, engine, env.horizon(), draw_seed(stream, e));
        if (trace.aborted) {
            throw std::runtime_error("evaluation aborted: " + trace.diagnostic);
        }
        const auto r = trace.returns.project(labels);
        for (std::size_t k = 0; k < objective_count; ++k) {
            mean[k] += r[k];
        }
    }
    for (auto& v : mean) {
        v /= static_cast<double>(cfg.eval_episodes);
    }
    return mean;
}

inline std::string command_provenance(const agents::Command& c) {
    std::ostringstream os;
    os << "h=" << format_number(c.desired_horizon, 6) << ";R^=";
    for (std::size_t i = 0; i < c.desired_return.size(); ++i) {
        os << (i ? ":" : "") << format_number(c.desired_return[i], 6);
    }
    return os.str();
}

namespace detail {

inline void train_pcn(const ExperimentConfig& cfg, const Cell& cell, Environment& env, CellResult& res,
                      WindowTrace& wt, const std::filesystem::path* checkpoint_dir) {
    FairnessEngine engine(engine_config(cfg, cell, env, fairness_part(cell.objectives)));
    agents::PcnAgent agent(env.observation_size(), env.action_count(), cell.objectives, env.horizon(), cfg.pcn,
                           stream_seed(cell.seed, "agent"));
    const std::uint64_t env_stream = stream_seed(cell.seed, "train-env");
    while (res.train_steps < cfg.timesteps) {
        agent.set_explore(res.train_episodes < cfg.random_episodes || agent.buffer().empty());
        if (!agent.exploring()) {
            agent.train_after_episode();
            agent.next_command();
        }
        const std::size_t budget = std::min(env.horizon(), cfg.timesteps - res.train_steps);
        const auto trace = run_episode(env, agent, engine, budget, draw_seed(env_stream, res.train_episodes));
        if (trace.aborted) {
            throw std::runtime_error("training aborted: " + trace.diagnostic);
        }
        agent.end_episode();
        wt.add_episode(trace.history_sizes);
        res.train_steps += trace.length();
        ++res.train_episodes;
        if (trace.length() == 0) {
            break;
        }
    }
    if (agent.buffer().empty()) {
        throw std::runtime_error("PCN buffer is empty after training");
    }
    if (checkpoint_dir != nullptr) {
        save_checkpoint(*checkpoint_dir, agent.model(), agent.objectives(), config_hash(cfg));
    }

    // Candidate commands: distinct non-dominated buffered episodes.
    std::vector<agents::Command> commands;
    for (auto i : agent.nondominated_episodes()) {
        const auto& ep = agent.buffer()[i];
        agents::Command c{ep.returns, static_cast<double>(ep.length())};
        const bool seen = std::any_of(commands.begin(), commands.end(), [&](const agents::Command& o) {
            return o.desired_return == c.desired_return && o.desired_horizon == c.desired_horizon;
        });
        if (!seen) {
            commands.push_back(std::move(c));
        }
    }
    if (commands.size() > cfg.max_policies) {
        std::vector<pareto::Point> pts;
        for (const auto& c : commands) {
            pts.push_back(c.desired_return);
        }
        std::mt19937_64 rng(stream_seed(cell.seed, "commands"));
        auto keep = pareto::representative_subset(pts, cfg.max_policies, rng);
        std::sort(keep.begin(), keep.end());
        std::vector<agents::Command> kept;
        for (auto i : keep) {
            kept.push_back(commands[i]);
        }
        commands = std::move(kept);
    }
    for (std::size_t i = 0; i < commands.size(); ++i) {
        agents::PcnPolicy policy(agent.model(), cell.objectives, commands[i], true,
                                 draw_seed(stream_seed(cell.seed, "eval-policy"), i));
        res.candidates.push_back({evaluate_policy(cfg, cell, env, policy), cell.seed, command_provenance(commands[i])});
    }
}

inline void train_dqn(const ExperimentConfig& cfg, const Cell& cell, Environment& env, CellResult& res,
                      WindowTrace& wt) {
    FairnessEngine engine(engine_config(cfg, cell, env, fairness_part(cell.objectives)));
    agents::DqnAgent agent(env.observation_size(), env.action_count(), cfg.dqn, stream_seed(cell.seed, "agent"));
    const std::uint64_t env_stream = stream_seed(cell.seed, "train-env");
    while (res.train_steps < cfg.timesteps) {
        const std::size_t budget = std::min(env.horizon(), cfg.timesteps - res.train_steps);
        const auto trace = run_episode(env, agent, engine, budget, draw_seed(env_stream, res.train_episodes));
        if (trace.aborted) {
            throw std::runtime_error("training aborted: " + trace.diagnostic);
        }
        wt.add_episode(trace.history_sizes);
        res.train_steps += trace.length();
        ++res.train_episodes;
        if (trace.length() == 0) {
            break;
        }
    }
    agent.set_learning(false);
    agent.set_epsilon(0.0);
    res.candidates.push_back({evaluate_policy(cfg, cell, env, agent), cell.seed, "dqn-greedy"});
}

} // namespace detail

/// Trains and evaluates one grid cell. Errors are captured in the result.
inline CellResult run_cell(const ExperimentConfig& cfg, const Cell& cell,
                           const std::filesystem::path* checkpoint_dir = nullptr) {
    const auto start = std::chrono::steady_clock::now();
    CellResult res;
    res.cell = cell;
    try {
        auto env = make_environment(cfg, cell);
        WindowTrace wt;
        if (cfg.agent == AgentKind::pcn) {
            detail::train_pcn(cfg, cell, *env, res, wt, checkpoint_dir);
        } else {
            detail::train_dqn(cfg, cell, *env, res, wt);
        }
        res.trace = wt.rows(cfg.trace_every);

        std::vector<pareto::Point> pts;
        for (const auto& c : res.candidates) {
            pts.push_back(c.returns);
        }
        res.coverage = pareto::nondominated_indices(pts);
        std::vector<pareto::Point> cover;
        for (auto i : res.coverage) {
            cover.push_back(pts[i]);
        }
        std::mt19937_64 rng(stream_seed(cell.seed, "subset"));
        auto pick = pareto::representative_subset(cover, cfg.representatives, rng);
        std::sort(pick.begin(), pick.end());
        for (auto i : pick) {
            res.representatives.push_back(res.candidates[res.coverage[i]]);
        }
        res.ok = true;
    } catch (const std::exception& e) {
        res.ok = false;
        res.error = e.what();
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

inline nlohmann::json versions_json() {
    return {{"farel", version},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
            {"compiler", __VERSION__}};
}

inline std::string objectives_column(const Cell& cell) { return cell.objectives_tag(); }

/// Writes policies.csv, summary.csv, radar.svg, window_trace.csv and manifest.json.
inline void write_cell(const std::filesystem::path& dir, const ExperimentConfig& cfg, const CellResult& res) {
    std::filesystem::create_directories(dir);
    const auto& cell = res.cell;
    nlohmann::json m;
    m["config_hash"] = config_hash(cfg);
    m["cell_hash"] = hex64(fnv1a64(config_hash(cfg) + "/" + cell.label()));
    m["cell"] = {{"label", cell.label()},
                 {"objectives", trace_json::objectives_to_json(cell.objectives)},
                 {"window", trace_json::window_to_json(cell.window)},
                 {"distance", std::string(distance_name(cell.distance))},
                 {"population", cell.population},
                 {"bias", cell.bias},
                 {"seed", cell.seed}};
    m["scenario"] = cfg.scenario;
    m["agent"] = cfg.agent == AgentKind::pcn ? "pcn" : "dqn";
    m["seed_derivation"] = "stream = splitmix64(splitmix64(seed) ^ fnv1a64(tag)); draw i = splitmix64(stream + i)";
    m["versions"] = versions_json();
    m["status"] = res.ok ? "ok" : "failed";
    if (!res.ok) {
        m["error"] = res.error;
    }
    m["train_steps"] = res.train_steps;
    m["train_episodes"] = res.train_episodes;
    m["candidates"] = res.candidates.size();
    m["coverage_set"] = res.coverage.size();
    m["representatives"] = res.representatives.size();
    {
        std::ofstream os(dir / "manifest.json", std::ios::binary);
        os << m.dump(2) << "\n";
    }
    if (!res.ok) {
        return;
    }
    {
        std::ofstream os(dir / "policies.csv", std::ios::binary);
        write_policy_table(os, objectives_column(cell), res.representatives);
    }
    {
        std::ofstream os(dir / "summary.csv", std::ios::binary);
        write_summary_table(os, pareto::summarize(res.representatives));
    }
    {
        std::vector<pareto::Point> pts;
        for (const auto& p : res.representatives) {
            pts.push_back(p.returns);
        }
        const std::vector<Objective> labels(all_objectives.begin(), all_objectives.end());
        std::ofstream os(dir / "radar.svg", std::ios::binary);
        write_radar(os, pareto::normalize(pts, labels, cfg.normalization()), cell.label());
    }
    {
        std::ofstream os(dir / "window_trace.csv", std::ios::binary);
        write_window_trace(os, res.trace);
    }
}

struct GridResult {
    std::vector<CellResult> cells;
    std::size_t failures = 0;
};

/// Runs every cell (cfg.workers at a time) and writes one directory per cell
/// under `out`. A failing cell leaves the others untouched.
inline GridResult run_grid(const ExperimentConfig& cfg, const std::filesystem::path& out, bool checkpoints = false) {
    const auto cells = expand_grid(cfg);
    GridResult grid;
    grid.cells.resize(cells.size());
    std::filesystem::create_directories(out);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            const auto dir = out / cells[i].label();
            log::info("cell " + cells[i].label() + " started");
            const auto ckpt = dir / "checkpoint";
            grid.cells[i] = run_cell(cfg, cells[i], checkpoints ? &ckpt : nullptr);
            write_cell(dir, cfg, grid.cells[i]);
            if (grid.cells[i].ok) {
                log::info("cell " + cells[i].label() + " finished in " + format_number(grid.cells[i].seconds, 1) + " s");
            } else {
                log::error("cell " + cells[i].label() + " failed: " + grid.cells[i].error);
            }
        }
    };
    const std::size_t n = std::min(cfg.workers, cells.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < n; ++w) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }
    nlohmann::json m;
    m["name"] = cfg.name;
    m["config_hash"] = config_hash(cfg);
    m["config"] = semantic_json(cfg);
    m["versions"] = versions_json();
    nlohmann::json list = nlohmann::json::array();
    for (const auto& c : grid.cells) {
        list.push_back({{"label", c.cell.label()}, {"status", c.ok ? "ok" : "failed"}});
        grid.failures += c.ok ? 0 : 1;
    }
    m["cells"] = list;
    std::ofstream(out / "manifest.json", std::ios::binary) << m.dump(2) << "\n";
    return grid;
}

} // namespace farel::experiment
