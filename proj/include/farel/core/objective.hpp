#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "farel/core/error.hpp"

namespace farel {

/// Objectives in canonical reward-vector order.
enum class Objective : int { R = 0, SP, EO, OAE, PP, PE, IF, CSC };

inline constexpr std::size_t objective_count = 8;

inline constexpr std::array<Objective, objective_count> all_objectives{
    Objective::R, Objective::SP, Objective::EO, Objective::OAE,
    Objective::PP, Objective::PE, Objective::IF, Objective::CSC};

inline constexpr std::array<Objective, 7> fairness_objectives{
    Objective::SP, Objective::EO, Objective::OAE, Objective::PP,
    Objective::PE, Objective::IF, Objective::CSC};

inline constexpr std::string_view objective_name(Objective o) {
    constexpr std::array<std::string_view, objective_count> names{"R", "SP", "EO", "OAE", "PP", "PE", "IF", "CSC"};
    return names[static_cast<std::size_t>(o)];
}

inline std::optional<Objective> parse_objective(std::string_view s) {
    for (auto o : all_objectives) {
        if (objective_name(o) == s) {
            return o;
        }
    }
    return std::nullopt;
}

inline constexpr std::size_t index_of(Objective o) { return static_cast<std::size_t>(o); }

inline bool is_group_notion(Objective o) {
    return o == Objective::SP || o == Objective::EO || o == Objective::OAE || o == Objective::PP ||
           o == Objective::PE;
}

/// Sorts objectives canonically and rejects duplicates.
inline std::vector<Objective> canonical_objectives(std::vector<Objective> objs) {
    std::sort(objs.begin(), objs.end());
    require(std::adjacent_find(objs.begin(), objs.end()) == objs.end(), "duplicate objective label");
    return objs;
}

/// "R:SP:IF" style label used in tables.
inline std::string objectives_label(const std::vector<Objective>& objs) {
    std::string out;
    for (auto o : objs) {
        if (!out.empty()) {
            out += ':';
        }
        out += objective_name(o);
    }
    return out;
}

struct RewardVector {
    std::vector<double> values;
    std::vector<Objective> labels;

    std::size_t size() const noexcept { return values.size(); }

    std::optional<double> get(Objective o) const {
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == o) {
                return values[i];
            }
        }
        return std::nullopt;
    }

    /// Values for `wanted` in the order given; missing labels read as 0.
    std::vector<double> project(const std::vector<Objective>& wanted) const {
        std::vector<double> out;
        out.reserve(wanted.size());
        for (auto o : wanted) {
            out.push_back(get(o).value_or(0.0));
        }
        return out;
    }

    RewardVector& operator+=(const RewardVector& o) {
        require(labels == o.labels, "reward vectors with different labels cannot be added");
        for (std::size_t i = 0; i < values.size(); ++i) {
            values[i] += o.values[i];
        }
        return *this;
    }

    bool operator==(const RewardVector&) const = default;
};

/// Packs the performance reward and labelled fairness values into canonical order, R first.
inline RewardVector assemble_reward(double performance, std::vector<std::pair<Objective, double>> fairness) {
    for (const auto& [o, v] : fairness) {
        require(o != Objective::R, "performance reward passed as a fairness value");
    }
    std::sort(fairness.begin(), fairness.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < fairness.size(); ++i) {
        require(fairness[i].first != fairness[i - 1].first,
                "duplicate objective label " + std::string(objective_name(fairness[i].first)));
    }
    RewardVector rv;
    rv.values.push_back(performance);
    rv.labels.push_back(Objective::R);
    for (const auto& [o, v] : fairness) {
        rv.values.push_back(v);
        rv.labels.push_back(o);
    }
    return rv;
}

inline RewardVector zero_reward(const std::vector<Objective>& labels) {
    RewardVector rv;
    rv.labels = labels;
    rv.values.assign(labels.size(), 0.0);
    return rv;
}

} // namespace farel
