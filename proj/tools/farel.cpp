// farel: experiment runner and scenario utilities.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "farel/core/episode.hpp"
#include "farel/core/log.hpp"
#include "farel/core/trace_io.hpp"
#include "farel/experiment/config.hpp"
#include "farel/experiment/format.hpp"
#include "farel/experiment/runner.hpp"

namespace fx = farel::experiment;
using nlohmann::json;

namespace {

constexpr int exit_config = 2;
constexpr int exit_partial = 3;

class UniformPolicy final : public farel::Policy {
public:
    UniformPolicy(int actions, std::uint64_t seed) : actions_(actions), rng_(seed) {}
    farel::ActionChoice act(std::span<const double>) override {
        farel::ActionChoice c;
        c.action = std::uniform_int_distribution<int>(0, actions_ - 1)(rng_);
        c.dist.assign(static_cast<std::size_t>(actions_), 1.0 / actions_);
        return c;
    }

private:
    int actions_;
    std::mt19937_64 rng_;
};

fx::ExperimentConfig scenario_config(const std::string& scenario, const std::string& population,
                                     const std::string& bias, std::size_t steps) {
    json j = {{"scenario", scenario}, {"populations", {population}}, {"biases", {bias}}, {"episode_steps", steps}};
    return fx::config_from_json(j);
}

json describe(const std::string& scenario) {
    json d;
    d["scenario"] = scenario;
    fx::ExperimentConfig c;
    c.scenario = scenario;
    const auto cell = fx::expand_grid(c).front();
    const auto env = fx::make_environment(c, cell);
    d["actions"] = env->action_count();
    d["observation_size"] = env->observation_size();
    d["horizon"] = env->horizon();
    d["protected_groups"] = {env->protected_groups().first, env->protected_groups().second};
    json fields = json::array();
    for (const auto& f : env->individual_schema()->fields()) {
        fields.push_back({{"name", f.name},
                          {"kind", f.kind == farel::FeatureKind::numeric ? "numeric" : "nominal"},
                          {"sensitive", f.sensitive},
                          {"lower", f.lower},
                          {"upper", f.upper}});
    }
    d["individual_fields"] = fields;
    if (scenario == "hiring") {
        const farel::hiring::HiringConfig h;
        d["populations"] = {"default", "gender", "nationality-gender"};
        d["biases"] = {"none", "men", "belgian_men"};
        d["defaults"] = {{"team_target", h.team_target},
                         {"initial_team", h.initial_team},
                         {"epsilon", h.epsilon},
                         {"potential_sd", h.potential_sd},
                         {"reward_noise_sd", h.reward_noise_sd},
                         {"attrition_period", h.attrition_period},
                         {"attrition_probability", h.attrition.front().probability},
                         {"bias_amount", h.bias.amount},
                         {"joint_belgian_man_woman_foreign_man_woman", h.population.joint},
                         {"p_degree", h.population.p_degree},
                         {"p_extra_given_degree", h.population.p_extra_given_degree},
                         {"p_married", h.population.p_married},
                         {"languages", h.population.languages},
                         {"reward_max", farel::pareto::hiring_reward_max}};
    } else {
        const farel::fraud::FraudConfig f;
        d["populations"] = {"default"};
        d["biases"] = {"none", "continent_a", "continent_a_merchant0"};
        d["defaults"] = {{"fraud_rate", f.gen.fraud_rate},
                         {"continent_a_share", f.gen.continent_a_share},
                         {"propensity_a", f.gen.propensity_a},
                         {"propensity_b", f.gen.propensity_b},
                         {"customers", f.gen.customers},
                         {"merchants", f.gen.merchants},
                         {"currencies", f.gen.currencies},
                         {"hours", f.gen.hours},
                         {"max_transactions", f.gen.max_transactions},
                         {"satisfaction_decay", f.gen.satisfaction_decay},
                         {"leave_threshold", f.gen.leave_threshold},
                         {"bias_amount", f.bias.amount},
                         {"reward_max", farel::pareto::fraud_reward_max}};
    }
    return d;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fairness-aware multi-objective RL experiments"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

    auto* run = app.add_subcommand("run", "Run an experiment grid from a JSON config");
    std::string config_path;
    std::string out_dir = "results";
    std::size_t workers = 0;
    bool checkpoints = false;
    run->add_option("config", config_path, "Experiment config file")->required();
    run->add_option("-o,--out", out_dir, "Output directory");
    run->add_option("-j,--workers", workers, "Parallel cells (overrides the config)");
    run->add_flag("--checkpoints", checkpoints, "Save PCN checkpoints per cell");

    auto* env = app.add_subcommand("env", "Inspect a scenario");
    env->require_subcommand(1);
    auto* describe_cmd = env->add_subcommand("describe", "Print the scenario's schema and defaults");
    std::string scenario;
    describe_cmd->add_option("scenario", scenario)->required()->check(CLI::IsMember({"hiring", "fraud"}));

    auto* sample = env->add_subcommand("sample", "Print individuals as CSV, acting uniformly at random");
    std::size_t n = 20;
    std::uint64_t seed = 0;
    std::string population = "default";
    std::string bias = "none";
    sample->add_option("scenario", scenario)->required()->check(CLI::IsMember({"hiring", "fraud"}));
    sample->add_option("-n,--count", n, "Number of steps");
    sample->add_option("-s,--seed", seed, "Episode seed");
    sample->add_option("--population", population, "Population preset");
    sample->add_option("--bias", bias, "Reward bias preset");

    auto* rollout = env->add_subcommand("rollout", "Write a trace of a uniform random policy");
    std::string trace_out;
    std::size_t window = 500;
    std::string distance = "HEOM";
    std::vector<std::string> objectives{"SP", "EO", "OAE", "PP", "PE", "IF", "CSC"};
    rollout->add_option("scenario", scenario)->required()->check(CLI::IsMember({"hiring", "fraud"}));
    rollout->add_option("-n,--count", n, "Number of steps");
    rollout->add_option("-s,--seed", seed, "Episode seed");
    rollout->add_option("-w,--window", window, "Sliding window size");
    rollout->add_option("--distance", distance, "Distance metric (HEOM, HMOM, braycurtis)");
    rollout->add_option("--notions", objectives, "Fairness notions to record");
    rollout->add_option("-o,--out", trace_out, "Trace file")->required();

    auto* replay = app.add_subcommand("replay", "Recompute a trace's fairness rewards offline");
    std::string trace_path;
    replay->add_option("trace", trace_path, "Trace file")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);
    farel::log::threshold() = verbose ? farel::log::Level::info : farel::log::Level::warning;

    try {
        if (*run) {
            fx::ExperimentConfig cfg;
            try {
                cfg = fx::load_config(config_path);
                fx::apply_env_overrides(cfg);
            } catch (const fx::config_error& e) {
                std::cerr << "config error: " << e.what() << "\n";
                return exit_config;
            }
            if (workers > 0) {
                cfg.workers = workers;
            }
            const auto grid = fx::run_grid(cfg, out_dir, checkpoints);
            for (const auto& c : grid.cells) {
                std::cout << (c.ok ? "ok     " : "FAILED ") << c.cell.label() << "  (" << fx::format_number(c.seconds, 1)
                          << " s" << (c.ok ? "" : ", " + c.error) << ")\n";
            }
            return grid.failures == 0 ? 0 : exit_partial;
        }
        if (*describe_cmd) {
            std::cout << describe(scenario).dump(2) << "\n";
            return 0;
        }
        if (*sample) {
            fx::ExperimentConfig cfg;
            try {
                cfg = scenario_config(scenario, population, bias, 0);
            } catch (const fx::config_error& e) {
                std::cerr << "config error: " << e.what() << "\n";
                return exit_config;
            }
            const auto cell = fx::expand_grid(cfg).front();
            auto e = fx::make_environment(cfg, cell);
            UniformPolicy policy(e->action_count(), seed + 1);
            auto obs = e->reset(seed);
            std::cout << "step";
            for (const auto& f : e->individual_schema()->fields()) {
                std::cout << "," << f.name;
            }
            std::cout << ",groups,action,reward,feedback\n";
            for (std::size_t t = 0; t < n; ++t) {
                const auto c = policy.act(obs);
                const auto s = e->step(c.action);
                std::cout << t;
                std::size_t ni = 0;
                std::size_t ci = 0;
                for (const auto& f : s.individual.schema->fields()) {
                    if (f.kind == farel::FeatureKind::numeric) {
                        std::cout << "," << fx::format_number(s.individual.numeric[ni++], 5);
                    } else {
                        std::cout << "," << s.individual.nominal[ci++];
                    }
                }
                std::string groups;
                for (const auto& g : s.groups) {
                    groups += (groups.empty() ? "" : ";") + g;
                }
                std::cout << "," << groups << "," << c.action << "," << fx::format_number(s.reward, 5) << ","
                          << (s.feedback ? std::to_string(*s.feedback) : "") << "\n";
                obs = s.observation;
                if (s.done) {
                    break;
                }
            }
            return 0;
        }
        if (*rollout) {
            fx::ExperimentConfig cfg;
            try {
                json j = {{"scenario", scenario},
                          {"episode_steps", n},
                          {"windows", {window}},
                          {"distances", {distance}},
                          {"fairness", {{"lambda", 0.1}, {"k", 5}}}};
                cfg = fx::config_from_json(j);
            } catch (const fx::config_error& e) {
                std::cerr << "config error: " << e.what() << "\n";
                return exit_config;
            }
            std::vector<farel::Objective> notions;
            for (const auto& s : objectives) {
                const auto o = farel::parse_objective(s);
                if (!o || *o == farel::Objective::R) {
                    std::cerr << "config error: '" << s << "' is not a fairness notion\n";
                    return exit_config;
                }
                notions.push_back(*o);
            }
            const auto cell = fx::expand_grid(cfg).front();
            auto e = fx::make_environment(cfg, cell);
            farel::FairnessEngine engine(fx::engine_config(cfg, cell, *e, notions));
            UniformPolicy policy(e->action_count(), seed + 1);
            const auto trace = farel::run_episode(*e, policy, engine, n, seed);
            std::ofstream os(trace_out);
            farel::write_trace(os, trace, engine.config(), *e->individual_schema(), seed);
            std::cout << "wrote " << trace.length() << " steps to " << trace_out << "\n";
            return trace.aborted ? 1 : 0;
        }
        if (*replay) {
            std::ifstream is(trace_path);
            const auto tr = farel::read_trace(is);
            const auto rep = farel::replay_trace(tr);
            json r;
            r["steps"] = rep.steps;
            r["max_abs_diff"] = rep.max_abs_diff;
            json ret;
            for (std::size_t i = 0; i < rep.recomputed_returns.labels.size(); ++i) {
                ret[std::string(farel::objective_name(rep.recomputed_returns.labels[i]))] =
                    rep.recomputed_returns.values[i];
            }
            r["returns"] = ret;
            std::cout << r.dump(2) << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
