#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "farel/core/environment.hpp"
#include "farel/core/error.hpp"

namespace farel::hiring {

inline constexpr std::size_t language_count = 4;
inline constexpr int min_age = 18;
inline constexpr int max_age = 65;
inline constexpr double max_experience_years = max_age - min_age;

enum Gender : std::int64_t { man = 0, woman = 1 };
enum Nationality : std::int64_t { belgian = 0, foreign = 1 };

struct Applicant {
    std::int64_t gender = man;
    std::int64_t nationality = belgian;
    std::int64_t married = 0;
    int age = min_age;
    int degree = 0;
    int extra_degree = 0;
    int experience = 0;
    std::array<int, language_count> languages{};
};

inline int max_experience(int age, int degree, int extra_degree) {
    return std::max(0, age - min_age - 3 * degree - 2 * extra_degree);
}

/// P(year) = (year + 1) / sum_{y=0}^{max_e} (y + 1).
inline double experience_probability(int year, int max_e) {
    require(max_e >= 0, "max experience must be non-negative");
    if (year < 0 || year > max_e) {
        return 0.0;
    }
    const double total = 0.5 * (max_e + 1.0) * (max_e + 2.0);
    return (year + 1.0) / total;
}

/// Joint (nationality, gender) proportions, ordered
/// (belgian man, belgian woman, foreign man, foreign woman).
struct PopulationSpec {
    std::string name = "default";
    std::array<double, 4> joint{0.30, 0.31, 0.20, 0.19};
    double p_degree = 0.45;
    double p_extra_given_degree = 0.35;
    double p_married = 0.5;
    std::array<double, language_count> languages{0.60, 0.40, 0.20, 0.10};

    void validate() const {
        double s = 0.0;
        for (double p : joint) {
            require(p >= 0.0, "population proportions must be non-negative");
            s += p;
        }
        require(std::abs(s - 1.0) <= 1e-9, "population proportions must sum to 1");
        for (double p : {p_degree, p_extra_given_degree, p_married}) {
            require(p >= 0.0 && p <= 1.0, "population probabilities must lie in [0,1]");
        }
        for (double p : languages) {
            require(p >= 0.0 && p <= 1.0, "language prevalence must lie in [0,1]");
        }
    }

    static PopulationSpec preset(std::string_view name) {
        PopulationSpec p;
        if (name == "default") {
            return p;
        }
        if (name == "gender") {
            // 70% men, nationality split kept at the default 60/40.
            p.name = "gender";
            p.joint = {0.42, 0.186, 0.28, 0.114};
            return p;
        }
        if (name == "nationality-gender") {
            p.name = "nationality-gender";
            p.joint = {0.40, 0.40, 0.15, 0.05};
            return p;
        }
        throw contract_error("unknown population preset '" + std::string(name) + "'");
    }
};

enum class BiasKind { none, men, belgian_men };

struct BiasSpec {
    BiasKind kind = BiasKind::none;
    double amount = 0.1;

    bool applies(const Applicant& a) const {
        switch (kind) {
        case BiasKind::none:
            return false;
        case BiasKind::men:
            return a.gender == man;
        case BiasKind::belgian_men:
            return a.gender == man && a.nationality == belgian;
        }
        return false;
    }
    std::string label() const {
        switch (kind) {
        case BiasKind::men:
            return "men";
        case BiasKind::belgian_men:
            return "belgian_men";
        default:
            return "none";
        }
    }
    static BiasKind parse(std::string_view s) {
        if (s == "none") {
            return BiasKind::none;
        }
        if (s == "men") {
            return BiasKind::men;
        }
        if (s == "belgian_men") {
            return BiasKind::belgian_men;
        }
        throw contract_error("unknown hiring bias '" + std::string(s) + "'");
    }
};

struct AttritionBracket {
    int min_age = hiring::min_age;
    int max_age = hiring::max_age;
    double probability = 0.02;
};

struct HiringConfig {
    PopulationSpec population;
    BiasSpec bias;
    std::size_t horizon = 1000;
    double team_target = 100.0; // K
    std::size_t initial_team = 20;
    double epsilon = 0.5;
    double potential_sd = 0.01;
    double reward_noise_sd = 0.01;
    std::size_t attrition_period = 30;
    std::vector<AttritionBracket> attrition{AttritionBracket{}};

    void validate() const {
        population.validate();
        require(team_target > 0.0, "team target size must be positive");
        require(potential_sd >= 0.0 && reward_noise_sd >= 0.0, "noise levels must be non-negative");
        require(attrition_period >= 1, "attrition period must be at least 1");
        for (const auto& b : attrition) {
            require(b.probability >= 0.0 && b.probability <= 1.0, "attrition probability must lie in [0,1]");
            require(b.min_age <= b.max_age, "attrition bracket bounds reversed");
        }
    }
};

inline std::vector<GroupId> groups_of(const Applicant& a) {
    const std::string g = a.gender == man ? "man" : "woman";
    const std::string n = a.nationality == belgian ? "belgian" : "foreign";
    return {"gender:" + g, "nationality:" + n, "nationality-gender:" + n + "-" + g};
}

template <class Rng>
Applicant sample_applicant(const PopulationSpec& pop, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Applicant a;
    double r = u(rng);
    std::size_t cell = 0;
    while (cell + 1 < pop.joint.size() && r >= pop.joint[cell]) {
        r -= pop.joint[cell];
        ++cell;
    }
    a.nationality = cell < 2 ? belgian : foreign;
    a.gender = cell % 2 == 0 ? man : woman;
    a.age = std::uniform_int_distribution<int>(min_age, max_age)(rng);
    a.married = u(rng) < pop.p_married ? 1 : 0;
    a.degree = u(rng) < pop.p_degree ? 1 : 0;
    a.extra_degree = (a.degree == 1 && u(rng) < pop.p_extra_given_degree) ? 1 : 0;
    const int me = max_experience(a.age, a.degree, a.extra_degree);
    // Inverse CDF of the linearly increasing experience distribution.
    double q = u(rng);
    int year = 0;
    for (; year < me; ++year) {
        q -= experience_probability(year, me);
        if (q < 0.0) {
            break;
        }
    }
    a.experience = year;
    for (std::size_t l = 0; l < language_count; ++l) {
        a.languages[l] = u(rng) < pop.languages[l] ? 1 : 0;
    }
    return a;
}

/// Shannon entropy of the L1-normalized language counts, scaled to [0,1].
inline double language_entropy(const std::array<double, language_count>& counts) {
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    if (total <= 0.0) {
        return 0.0;
    }
    double h = 0.0;
    for (double c : counts) {
        if (c > 0.0) {
            const double p = c / total;
            h -= p * std::log(p);
        }
    }
    return std::clamp(h / std::log(static_cast<double>(language_count)), 0.0, 1.0);
}

/// Goodness g = (K/N) * sum_f (next_f - now_f), clamped to [-1, 1].
inline double goodness_score(std::span<const double> now, std::span<const double> next, double K) {
    require(now.size() == next.size() && !now.empty(), "goodness needs matching non-empty feature sets");
    double s = 0.0;
    for (std::size_t i = 0; i < now.size(); ++i) {
        s += next[i] - now[i];
    }
    return std::clamp(K / static_cast<double>(now.size()) * s, -1.0, 1.0);
}

/// Hire reward g - epsilon + noise (+ bias); rejecting yields its negation.
inline double hiring_reward(double g, int action, double epsilon, double noise, double bias) {
    const double hire = g - epsilon + noise + bias;
    return action == 1 ? hire : -hire;
}

inline int correct_action(double g, double epsilon) { return g >= epsilon ? 1 : 0; }

/// Each employee leaves independently with the probability of their age bracket.
template <class Rng>
std::size_t apply_attrition(std::vector<Applicant>& team, const std::vector<AttritionBracket>& brackets, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto before = team.size();
    std::erase_if(team, [&](const Applicant& a) {
        double p = 0.0;
        for (const auto& b : brackets) {
            if (a.age >= b.min_age && a.age <= b.max_age) {
                p = b.probability;
                break;
            }
        }
        return u(rng) < p;
    });
    return before - team.size();
}

/// Aggregate skill statistics of a team.
struct TeamTotals {
    double potential_units = 0.0; // sum over employees of (#non-zero among degree, extra, experience) / 3
    double degrees = 0.0;
    double extra_degrees = 0.0;
    double experience = 0.0;
    std::array<double, language_count> languages{};

    void add(const Applicant& a, double sign = 1.0) {
        potential_units += sign * ((a.degree != 0) + (a.extra_degree != 0) + (a.experience != 0)) / 3.0;
        degrees += sign * a.degree;
        extra_degrees += sign * a.extra_degree;
        experience += sign * a.experience;
        for (std::size_t l = 0; l < language_count; ++l) {
            languages[l] += sign * a.languages[l];
        }
    }
};

inline constexpr std::size_t company_feature_count = 5;

/// Company features (potential, %degree, %extra degree, experience, language
/// entropy) with the potential drawn around its mean.
inline std::array<double, company_feature_count> company_features(const TeamTotals& tt, double K, double potential) {
    auto c = [](double v) { return std::clamp(v, 0.0, 1.0); };
    return {c(potential), c(tt.degrees / K), c(tt.extra_degrees / K), c(tt.experience / (K * max_experience_years)),
            language_entropy(tt.languages)};
}

inline SchemaPtr applicant_schema() {
    static const SchemaPtr schema = std::make_shared<const FeatureSchema>(std::vector<FeatureField>{
        {"gender", FeatureKind::nominal, true, 0.0, 1.0},
        {"nationality", FeatureKind::nominal, true, 0.0, 1.0},
        {"married", FeatureKind::nominal, true, 0.0, 1.0},
        {"age", FeatureKind::numeric, true, double(min_age), double(max_age)},
        {"degree", FeatureKind::nominal, false, 0.0, 1.0},
        {"extra_degree", FeatureKind::nominal, false, 0.0, 1.0},
        {"experience", FeatureKind::numeric, false, 0.0, max_experience_years},
        {"lang_dutch", FeatureKind::nominal, false, 0.0, 1.0},
        {"lang_french", FeatureKind::nominal, false, 0.0, 1.0},
        {"lang_english", FeatureKind::nominal, false, 0.0, 1.0},
        {"lang_german", FeatureKind::nominal, false, 0.0, 1.0},
    });
    return schema;
}

inline FeatureVector to_features(const Applicant& a) {
    FeatureVector fv;
    fv.schema = applicant_schema();
    fv.numeric = {static_cast<double>(a.age), static_cast<double>(a.experience)};
    fv.nominal = {a.gender, a.nationality, a.married, a.degree, a.extra_degree};
    for (int l : a.languages) {
        fv.nominal.push_back(l);
    }
    return fv;
}

/// Job-hiring fMDP: one applicant per step, hire (1) or reject (0).
class HiringEnv final : public Environment {
public:
    explicit HiringEnv(HiringConfig cfg = {}) : cfg_(std::move(cfg)) { cfg_.validate(); }

    const HiringConfig& config() const noexcept { return cfg_; }
    std::string name() const override { return "hiring"; }
    int action_count() const override { return 2; }
    std::size_t observation_size() const override { return company_feature_count + 11; }
    std::size_t horizon() const override { return cfg_.horizon; }
    SchemaPtr individual_schema() const override { return applicant_schema(); }
    std::pair<GroupId, GroupId> protected_groups() const override { return {"gender:man", "gender:woman"}; }

    std::vector<double> reset(std::uint64_t seed) override {
        rng_.seed(seed);
        noise_.reset();
        t_ = 0;
        team_.clear();
        totals_ = {};
        for (std::size_t i = 0; i < cfg_.initial_team; ++i) {
            hire(sample_applicant(cfg_.population, rng_));
        }
        present_next();
        return observation();
    }

    EnvStep step(int action) override {
        require(action == 0 || action == 1, "hiring action must be 0 (reject) or 1 (hire)");
        EnvStep s;
        const double noise = cfg_.reward_noise_sd > 0.0 ? noise_(rng_) * cfg_.reward_noise_sd : 0.0;
        const double bias = cfg_.bias.applies(applicant_) ? cfg_.bias.amount : 0.0;
        s.reward = hiring_reward(goodness_, action, cfg_.epsilon, noise, bias);
        s.feedback = correct_action(goodness_, cfg_.epsilon);
        s.individual = to_features(applicant_);
        s.groups = groups_of(applicant_);
        if (action == 1) {
            hire(applicant_);
        }
        ++t_;
        if (t_ % cfg_.attrition_period == 0) {
            apply_attrition(team_, cfg_.attrition, rng_);
            totals_ = {};
            for (const auto& a : team_) {
                totals_.add(a);
            }
        }
        s.done = t_ >= cfg_.horizon;
        present_next();
        s.observation = observation();
        return s;
    }

    const Applicant& applicant() const noexcept { return applicant_; }
    double goodness() const noexcept { return goodness_; }
    const std::vector<Applicant>& team() const noexcept { return team_; }
    const std::array<double, company_feature_count>& features() const noexcept { return features_; }

private:
    void hire(const Applicant& a) {
        team_.push_back(a);
        totals_.add(a);
    }

    double draw_potential(double units) {
        const double mean = units / cfg_.team_target;
        return cfg_.potential_sd > 0.0 ? mean + noise_(rng_) * cfg_.potential_sd : mean;
    }

    void present_next() {
        applicant_ = sample_applicant(cfg_.population, rng_);
        features_ = company_features(totals_, cfg_.team_target, draw_potential(totals_.potential_units));
        TeamTotals next = totals_;
        next.add(applicant_);
        const auto est = company_features(next, cfg_.team_target, draw_potential(next.potential_units));
        goodness_ = goodness_score(features_, est, cfg_.team_target);
    }

    std::vector<double> observation() const {
        std::vector<double> o(features_.begin(), features_.end());
        const auto& a = applicant_;
        o.push_back(static_cast<double>(a.gender));
        o.push_back(static_cast<double>(a.nationality));
        o.push_back(static_cast<double>(a.married));
        o.push_back((a.age - min_age) / max_experience_years);
        o.push_back(a.degree);
        o.push_back(a.extra_degree);
        o.push_back(a.experience / max_experience_years);
        for (int l : a.languages) {
            o.push_back(l);
        }
        return o;
    }

    HiringConfig cfg_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> noise_{0.0, 1.0};
    std::size_t t_ = 0;
    std::vector<Applicant> team_;
    TeamTotals totals_;
    Applicant applicant_;
    std::array<double, company_feature_count> features_{};
    double goodness_ = 0.0;
};

} // namespace farel::hiring
