#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "farel/core/episode.hpp"
#include "farel/fairness/engine.hpp"

namespace farel {

// JSON-lines trace format. Line 1 is a header object
//   {"format":"farel-trace","version":1,"seed":..,"schema":[..],"engine":{..}}
// followed by one object per interaction:
//   {"t":..,"state":[..],"individual":{"numeric":[..],"nominal":[..]},"groups":[..],
//    "action":..,"action_dist":[..],"feedback":null|int,
//    "late_feedback":[[t,a],..],"reward":{"labels":[..],"values":[..]}}

namespace trace_json {

using nlohmann::json;

inline json schema_to_json(const FeatureSchema& s) {
    json arr = json::array();
    for (const auto& f : s.fields()) {
        arr.push_back({{"name", f.name},
                       {"kind", f.kind == FeatureKind::numeric ? "numeric" : "nominal"},
                       {"sensitive", f.sensitive},
                       {"lower", f.lower},
                       {"upper", f.upper}});
    }
    return arr;
}

inline SchemaPtr schema_from_json(const json& j) {
    std::vector<FeatureField> fields;
    for (const auto& f : j) {
        FeatureField ff;
        ff.name = f.at("name").get<std::string>();
        ff.kind = f.at("kind").get<std::string>() == "numeric" ? FeatureKind::numeric : FeatureKind::nominal;
        ff.sensitive = f.at("sensitive").get<bool>();
        ff.lower = f.at("lower").get<double>();
        ff.upper = f.at("upper").get<double>();
        fields.push_back(std::move(ff));
    }
    return std::make_shared<const FeatureSchema>(std::move(fields));
}

inline json window_to_json(const WindowSpec& w) {
    return {{"kind", w.kind == WindowKind::sliding ? "sliding" : "discounted"},
            {"window", w.window},
            {"gamma", w.gamma},
            {"threshold", w.threshold},
            {"delay", w.delay}};
}

inline WindowSpec window_from_json(const json& j) {
    WindowSpec w;
    const auto kind = j.at("kind").get<std::string>();
    require(kind == "sliding" || kind == "discounted", "window kind must be 'sliding' or 'discounted'");
    w.kind = kind == "sliding" ? WindowKind::sliding : WindowKind::discounted;
    w.window = j.at("window").get<std::size_t>();
    w.gamma = j.value("gamma", 1.0);
    w.threshold = j.value("threshold", 1e-4);
    w.delay = j.value("delay", std::size_t{10});
    w.validate();
    return w;
}

inline json objectives_to_json(const std::vector<Objective>& objs) {
    json arr = json::array();
    for (auto o : objs) {
        arr.push_back(std::string(objective_name(o)));
    }
    return arr;
}

inline std::vector<Objective> objectives_from_json(const json& j) {
    std::vector<Objective> out;
    for (const auto& s : j) {
        auto o = parse_objective(s.get<std::string>());
        require(o.has_value(), "unknown objective '" + s.get<std::string>() + "'");
        out.push_back(*o);
    }
    return out;
}

inline json engine_to_json(const EngineConfig& c) {
    return {{"window", window_to_json(c.window)},
            {"groups", {c.groups.g, c.groups.h}},
            {"distance", std::string(distance_name(c.distance))},
            {"lambda", c.lambda},
            {"k", c.k},
            {"guiding", std::string(objective_name(c.guiding))},
            {"notions", objectives_to_json(c.notions)},
            {"action_count", c.action_count}};
}

inline EngineConfig engine_from_json(const json& j) {
    EngineConfig c;
    c.window = window_from_json(j.at("window"));
    c.groups = {j.at("groups").at(0).get<std::string>(), j.at("groups").at(1).get<std::string>()};
    c.distance = parse_distance(j.at("distance").get<std::string>());
    c.lambda = j.at("lambda").get<double>();
    c.k = j.at("k").get<std::size_t>();
    auto g = parse_objective(j.at("guiding").get<std::string>());
    require(g.has_value(), "unknown guiding notion");
    c.guiding = *g;
    c.notions = objectives_from_json(j.at("notions"));
    c.action_count = j.at("action_count").get<int>();
    return c;
}

inline json interaction_to_json(const Interaction& x) {
    json late = json::array();
    for (const auto& lf : x.late_feedback) {
        late.push_back({lf.t, lf.correct_action});
    }
    return {{"t", x.t},
            {"state", x.state.numeric},
            {"individual", {{"numeric", x.individual.numeric}, {"nominal", x.individual.nominal}}},
            {"groups", x.groups},
            {"action", x.action},
            {"action_dist", x.action_dist},
            {"feedback", x.feedback ? json(*x.feedback) : json(nullptr)},
            {"late_feedback", late},
            {"reward", {{"labels", objectives_to_json(x.reward.labels)}, {"values", x.reward.values}}}};
}

inline Interaction interaction_from_json(const json& j, const SchemaPtr& schema, const SchemaPtr& state_schema) {
    Interaction x;
    x.t = j.at("t").get<std::int64_t>();
    x.state = FeatureVector{state_schema, j.at("state").get<std::vector<double>>(), {}};
    x.individual = FeatureVector{schema, j.at("individual").at("numeric").get<std::vector<double>>(),
                                 j.at("individual").at("nominal").get<std::vector<std::int64_t>>()};
    x.groups = j.at("groups").get<std::vector<std::string>>();
    x.action = j.at("action").get<int>();
    x.action_dist = j.at("action_dist").get<std::vector<double>>();
    if (!j.at("feedback").is_null()) {
        x.feedback = j.at("feedback").get<int>();
    }
    for (const auto& lf : j.value("late_feedback", json::array())) {
        x.late_feedback.push_back({lf.at(0).get<std::int64_t>(), lf.at(1).get<int>()});
    }
    x.reward.labels = objectives_from_json(j.at("reward").at("labels"));
    x.reward.values = j.at("reward").at("values").get<std::vector<double>>();
    return x;
}

} // namespace trace_json

struct LoadedTrace {
    std::uint64_t seed = 0;
    SchemaPtr schema;
    EngineConfig engine;
    std::vector<Interaction> interactions;
};

inline void write_trace(std::ostream& os, const EpisodeTrace& trace, const EngineConfig& engine,
                        const FeatureSchema& schema, std::uint64_t seed) {
    using trace_json::json;
    json header = {{"format", "farel-trace"},
                   {"version", 1},
                   {"seed", seed},
                   {"schema", trace_json::schema_to_json(schema)},
                   {"engine", trace_json::engine_to_json(engine)}};
    os << header.dump() << '\n';
    for (const auto& x : trace.interactions) {
        os << trace_json::interaction_to_json(x).dump() << '\n';
    }
}

inline LoadedTrace read_trace(std::istream& is) {
    using trace_json::json;
    LoadedTrace out;
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), "trace is empty");
    const json header = json::parse(line);
    require(header.value("format", std::string{}) == "farel-trace", "not a farel trace (bad header)");
    out.seed = header.at("seed").get<std::uint64_t>();
    out.schema = trace_json::schema_from_json(header.at("schema"));
    out.engine = trace_json::engine_from_json(header.at("engine"));
    SchemaPtr state_schema;
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        const json j = json::parse(line);
        if (!state_schema) {
            state_schema = FeatureSchema::numeric_only(j.at("state").size());
        }
        out.interactions.push_back(trace_json::interaction_from_json(j, out.schema, state_schema));
    }
    return out;
}

struct ReplayReport {
    std::size_t steps = 0;
    double max_abs_diff = 0.0;
    RewardVector recomputed_returns;
};

/// Recomputes every step's fairness values offline from the recorded interactions.
inline ReplayReport replay_trace(const LoadedTrace& tr) {
    FairnessEngine engine(tr.engine);
    ReplayReport rep;
    rep.recomputed_returns = zero_reward(reward_labels(engine));
    for (const auto& rec : tr.interactions) {
        Interaction x = rec;
        x.reward = {};
        engine.push(x);
        const double perf = rec.reward.get(Objective::R).value_or(0.0);
        const RewardVector rv = assemble_reward(perf, engine.values());
        rep.recomputed_returns += rv;
        for (std::size_t i = 0; i < rv.labels.size(); ++i) {
            const auto recorded = rec.reward.get(rv.labels[i]);
            if (recorded) {
                rep.max_abs_diff = std::max(rep.max_abs_diff, std::abs(*recorded - rv.values[i]));
            }
        }
        ++rep.steps;
    }
    return rep;
}

} // namespace farel
