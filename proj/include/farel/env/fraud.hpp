#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "farel/core/environment.hpp"
#include "farel/core/error.hpp"

namespace farel::fraud {

inline constexpr int ignore_action = 0;
inline constexpr int authenticate_action = 1;
inline constexpr std::int64_t continent_a = 0;
inline constexpr std::int64_t continent_b = 1;
inline constexpr int hours_per_day = 24;

struct Transaction {
    std::int64_t card_id = 0;
    std::int64_t merchant_id = 0;
    std::int64_t currency = 0;
    std::int64_t country = 0;
    std::int64_t continent = continent_a;
    double amount = 0.0;
    int day = 0;
    int hour = 0;
    bool is_fraud = false;
};

struct FraudGenSpec {
    double fraud_rate = 0.10;
    double continent_a_share = 0.5;
    // Relative fraud propensities of the two continents.
    double propensity_a = 0.44;
    double propensity_b = 0.73;
    std::size_t customers = 400;
    std::size_t merchants = 5;
    std::size_t currencies = 3;
    std::size_t hours = 7 * hours_per_day;
    std::size_t max_transactions = 1000;
    double satisfaction_decay = 0.1;
    double leave_threshold = 0.5;
    double genuine_log_amount_mean = 3.0;
    double fraud_log_amount_mean = 4.0;
    double log_amount_sd = 0.8;
    double max_amount = 1000.0;

    void validate() const {
        require(fraud_rate >= 0.0 && fraud_rate <= 1.0, "fraud rate must lie in [0,1]");
        require(continent_a_share >= 0.0 && continent_a_share <= 1.0, "continent share must lie in [0,1]");
        require(propensity_a >= 0.0 && propensity_b >= 0.0 && propensity_a + propensity_b > 0.0,
                "fraud propensities must be non-negative and not both zero");
        require(customers >= 1 && merchants >= 1 && currencies >= 1, "generator needs customers, merchants and currencies");
        require(hours >= 1 && max_transactions >= 1, "episode needs at least one hour and one transaction");
        require(satisfaction_decay >= 0.0 && leave_threshold >= 0.0 && leave_threshold <= 1.0,
                "satisfaction parameters out of range");
        require(log_amount_sd > 0.0 && max_amount > 0.0, "amount distribution parameters out of range");
        require(fraud_probability_unchecked(continent_a) <= 1.0 && fraud_probability_unchecked(continent_b) <= 1.0,
                "fraud rate and propensities give a probability above 1");
    }

    /// P(fraud | continent) = rate * w_c / sum_c' share_c' w_c'.
    double fraud_probability(std::int64_t continent) const {
        require(continent == continent_a || continent == continent_b, "unknown continent");
        return fraud_probability_unchecked(continent);
    }

    double arrivals_per_hour() const { return static_cast<double>(max_transactions) / static_cast<double>(hours); }

private:
    double fraud_probability_unchecked(std::int64_t continent) const {
        const double norm = continent_a_share * propensity_a + (1.0 - continent_a_share) * propensity_b;
        if (norm <= 0.0) {
            return 0.0;
        }
        return fraud_rate * (continent == continent_a ? propensity_a : propensity_b) / norm;
    }
};

enum class FraudBiasKind { none, continent_a, continent_a_merchant0 };

struct FraudBiasSpec {
    FraudBiasKind kind = FraudBiasKind::none;
    double amount = 0.1;

    bool applies(const Transaction& t) const {
        switch (kind) {
        case FraudBiasKind::none:
            return false;
        case FraudBiasKind::continent_a:
            return t.continent == fraud::continent_a;
        case FraudBiasKind::continent_a_merchant0:
            return t.continent == fraud::continent_a && t.merchant_id == 0;
        }
        return false;
    }
    std::string label() const {
        switch (kind) {
        case FraudBiasKind::continent_a:
            return "continent_a";
        case FraudBiasKind::continent_a_merchant0:
            return "continent_a_merchant0";
        default:
            return "none";
        }
    }
    static FraudBiasKind parse(std::string_view s) {
        if (s == "none") {
            return FraudBiasKind::none;
        }
        if (s == "continent_a") {
            return FraudBiasKind::continent_a;
        }
        if (s == "continent_a_merchant0") {
            return FraudBiasKind::continent_a_merchant0;
        }
        throw contract_error("unknown fraud bias '" + std::string(s) + "'");
    }
};

struct FraudConfig {
    FraudGenSpec gen;
    FraudBiasSpec bias;
    void validate() const { gen.validate(); }
};

struct Customer {
    std::int64_t card_id = 0;
    std::int64_t continent = continent_a;
    std::int64_t country = 0;
    std::int64_t currency = 0;
    double satisfaction = 1.0;
    bool active = true;
};

/// Outcome of acting on one transaction.
struct ProcessResult {
    double reward = 0.0;
    std::optional<int> feedback;
    double satisfaction_delta = 0.0;
    bool cancelled = false;
};

/// Reward, feedback and satisfaction change for `action` on `txn`. A genuine
/// authentication lowers satisfaction; a customer pushed below the leave
/// threshold cancels (-1) and leaves.
inline ProcessResult process(const Transaction& txn, int action, Customer& customer, const FraudGenSpec& gen,
                             const FraudBiasSpec& bias) {
    require(action == ignore_action || action == authenticate_action, "fraud action must be 0 (ignore) or 1 (authenticate)");
    ProcessResult r;
    if (action == authenticate_action) {
        r.feedback = txn.is_fraud ? authenticate_action : ignore_action;
        if (txn.is_fraud) {
            r.reward = -1.0;
        } else {
            const double before = customer.satisfaction;
            customer.satisfaction = std::max(0.0, customer.satisfaction - gen.satisfaction_decay);
            r.satisfaction_delta = customer.satisfaction - before;
            if (customer.satisfaction < gen.leave_threshold) {
                customer.active = false;
                r.cancelled = true;
                r.reward = -1.0;
            } else {
                r.reward = 1.0;
            }
        }
    }
    if (bias.applies(txn)) {
        r.reward += bias.amount;
    }
    return r;
}

inline SchemaPtr transaction_schema(const FraudGenSpec& gen) {
    return std::make_shared<const FeatureSchema>(std::vector<FeatureField>{
        {"card_id", FeatureKind::nominal, false, 0.0, 1.0},
        {"merchant_id", FeatureKind::nominal, false, 0.0, 1.0},
        {"currency", FeatureKind::nominal, false, 0.0, 1.0},
        {"country", FeatureKind::nominal, true, 0.0, 1.0},
        {"continent", FeatureKind::nominal, true, 0.0, 1.0},
        {"amount", FeatureKind::numeric, false, 0.0, gen.max_amount},
        {"day", FeatureKind::numeric, false, 0.0, 6.0},
        {"hour", FeatureKind::numeric, false, 0.0, 23.0},
    });
}

inline FeatureVector to_features(const Transaction& t, const SchemaPtr& schema) {
    return FeatureVector{schema,
                         {t.amount, static_cast<double>(t.day), static_cast<double>(t.hour)},
                         {t.card_id, t.merchant_id, t.currency, t.country, t.continent}};
}

inline std::vector<GroupId> groups_of(const Transaction& t) {
    return {t.continent == continent_a ? "continent:A" : "continent:B", "country:" + std::to_string(t.country)};
}

/// Synthetic transaction stream: Poisson arrivals per hour from the active
/// customers, fraud drawn with the continent-conditional probability.
class TransactionGenerator {
public:
    explicit TransactionGenerator(FraudGenSpec spec = {}) : spec_(std::move(spec)) { spec_.validate(); }

    const FraudGenSpec& spec() const noexcept { return spec_; }
    std::vector<Customer>& customers() noexcept { return customers_; }
    std::size_t hour() const noexcept { return hour_; }

    void reset(std::uint64_t seed) {
        rng_.seed(seed);
        normal_.reset();
        hour_ = 0;
        pending_.clear();
        customers_.clear();
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (std::size_t i = 0; i < spec_.customers; ++i) {
            Customer c;
            c.card_id = static_cast<std::int64_t>(i);
            c.continent = u(rng_) < spec_.continent_a_share ? continent_a : continent_b;
            c.country = c.continent * 2 + (u(rng_) < 0.5 ? 0 : 1);
            c.currency = std::uniform_int_distribution<std::int64_t>(0, static_cast<std::int64_t>(spec_.currencies) - 1)(rng_);
            customers_.push_back(c);
        }
        fill_hour();
    }

    /// Next transaction from an active customer, or nullopt once the week is over.
    std::optional<Transaction> next() {
        while (true) {
            while (!pending_.empty()) {
                Transaction t = pending_.front();
                pending_.pop_front();
                if (customers_[static_cast<std::size_t>(t.card_id)].active) {
                    return t;
                }
            }
            ++hour_;
            if (hour_ >= spec_.hours) {
                return std::nullopt;
            }
            fill_hour();
        }
    }

    /// A single transaction drawn outside the hourly schedule.
    Transaction draw(int day, int hour) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<std::size_t> active;
        for (std::size_t i = 0; i < customers_.size(); ++i) {
            if (customers_[i].active) {
                active.push_back(i);
            }
        }
        require(!active.empty(), "no active customers left");
        const auto& c = customers_[active[std::uniform_int_distribution<std::size_t>(0, active.size() - 1)(rng_)]];
        Transaction t;
        t.card_id = c.card_id;
        t.continent = c.continent;
        t.country = c.country;
        t.currency = c.currency;
        t.merchant_id = std::uniform_int_distribution<std::int64_t>(0, static_cast<std::int64_t>(spec_.merchants) - 1)(rng_);
        t.day = day;
        t.hour = hour;
        t.is_fraud = u(rng_) < spec_.fraud_probability(c.continent);
        const double mu = t.is_fraud ? spec_.fraud_log_amount_mean : spec_.genuine_log_amount_mean;
        t.amount = std::min(spec_.max_amount, std::exp(mu + spec_.log_amount_sd * normal_(rng_)));
        return t;
    }

private:
    void fill_hour() {
        const int day = static_cast<int>(hour_ / hours_per_day) % 7;
        const int hod = static_cast<int>(hour_ % hours_per_day);
        // Genuine traffic peaks during the day; the hourly rate is scaled so a
        // week holds max_transactions in expectation.
        const double shape = 1.0 + 0.5 * std::sin((hod - 6) * 3.14159265358979323846 / 12.0);
        std::poisson_distribution<int> arrivals(spec_.arrivals_per_hour() * shape);
        const int n = arrivals(rng_);
        const bool any_active = std::any_of(customers_.begin(), customers_.end(), [](const Customer& c) { return c.active; });
        for (int i = 0; i < n && any_active; ++i) {
            pending_.push_back(draw(day, hod));
        }
    }

    FraudGenSpec spec_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::size_t hour_ = 0;
    std::deque<Transaction> pending_;
    std::vector<Customer> customers_;
};

/// Fraud-detection fMDP over one simulated week, capped at max_transactions.
class FraudEnv final : public Environment {
public:
    explicit FraudEnv(FraudConfig cfg = {})
        : cfg_(std::move(cfg)), gen_(cfg_.gen), schema_(transaction_schema(cfg_.gen)) {
        cfg_.validate();
    }

    const FraudConfig& config() const noexcept { return cfg_; }
    std::string name() const override { return "fraud"; }
    int action_count() const override { return 2; }
    std::size_t observation_size() const override { return 10; }
    std::size_t horizon() const override { return cfg_.gen.max_transactions; }
    SchemaPtr individual_schema() const override { return schema_; }
    std::pair<GroupId, GroupId> protected_groups() const override { return {"continent:A", "continent:B"}; }

    std::vector<double> reset(std::uint64_t seed) override {
        gen_.reset(seed);
        processed_ = 0;
        genuine_ = 0;
        frauds_ = 0;
        cancellations_ = 0;
        current_ = gen_.next();
        return observation();
    }

    EnvStep step(int action) override {
        require(current_.has_value(), "step called after the episode ended");
        EnvStep s;
        const Transaction txn = *current_;
        auto& customer = gen_.customers()[static_cast<std::size_t>(txn.card_id)];
        const auto r = process(txn, action, customer, cfg_.gen, cfg_.bias);
        s.reward = r.reward;
        s.feedback = r.feedback;
        s.individual = to_features(txn, schema_);
        s.groups = groups_of(txn);
        cancellations_ += r.cancelled ? 1 : 0;
        ++processed_;
        (txn.is_fraud ? frauds_ : genuine_) += 1;
        current_ = processed_ < cfg_.gen.max_transactions ? gen_.next() : std::nullopt;
        s.done = !current_.has_value();
        s.observation = observation();
        return s;
    }

    const std::optional<Transaction>& transaction() const noexcept { return current_; }
    std::size_t cancellations() const noexcept { return cancellations_; }

    /// Share of genuine transactions among those processed so far.
    double genuine_ratio() const {
        return processed_ == 0 ? 1.0 : static_cast<double>(genuine_) / static_cast<double>(processed_);
    }

    double average_satisfaction() {
        double s = 0.0;
        std::size_t n = 0;
        for (const auto& c : gen_.customers()) {
            if (c.active) {
                s += c.satisfaction;
                ++n;
            }
        }
        return n == 0 ? 0.0 : s / static_cast<double>(n);
    }

private:
    std::vector<double> observation() {
        std::vector<double> o{genuine_ratio(), average_satisfaction()};
        if (!current_) {
            o.resize(observation_size(), 0.0);
            return o;
        }
        const auto& t = *current_;
        const auto& g = cfg_.gen;
        auto frac = [](double v, double n) { return n > 1.0 ? v / (n - 1.0) : 0.0; };
        o.push_back(static_cast<double>(t.continent));
        o.push_back(frac(static_cast<double>(t.country), 4.0));
        o.push_back(frac(static_cast<double>(t.merchant_id), static_cast<double>(g.merchants)));
        o.push_back(frac(static_cast<double>(t.currency), static_cast<double>(g.currencies)));
        o.push_back(std::log1p(t.amount) / std::log1p(g.max_amount));
        o.push_back(t.day / 6.0);
        o.push_back(t.hour / 23.0);
        o.push_back(gen_.customers()[static_cast<std::size_t>(t.card_id)].satisfaction);
        return o;
    }

    FraudConfig cfg_;
    TransactionGenerator gen_;
    SchemaPtr schema_;
    std::optional<Transaction> current_;
    std::size_t processed_ = 0;
    std::size_t genuine_ = 0;
    std::size_t frauds_ = 0;
    std::size_t cancellations_ = 0;
};

} // namespace farel::fraud
