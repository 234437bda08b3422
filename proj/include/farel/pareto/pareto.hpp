#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "farel/core/error.hpp"
#include "farel/core/objective.hpp"

namespace farel::pareto {

using Point = std::vector<double>;

/// An evaluated policy: mean episode returns in canonical objective order.
struct PolicyPoint {
    Point returns;
    std::uint64_t seed = 0;
    std::string provenance;
};

/// a >= b componentwise with at least one strict >.
inline bool dominates(const Point& a, const Point& b) {
    require(a.size() == b.size(), "dominance between vectors of different length");
    bool strict = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) {
            return false;
        }
        strict = strict || a[i] > b[i];
    }
    return strict;
}

/// Indices (ascending) of the non-dominated points; among duplicates only the first is kept.
inline std::vector<std::size_t> nondominated_indices(const std::vector<Point>& pts) {
    std::vector<std::size_t> order(pts.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> sum(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        sum[i] = std::accumulate(pts[i].begin(), pts[i].end(), 0.0);
    }
    // Any dominator has a larger (or, after rounding, equal but lexicographically
    // larger) sum, so it is visited first and a single pass against the current
    // front suffices.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (sum[a] != sum[b]) {
            return sum[a] > sum[b];
        }
        return pts[b] < pts[a];
    });
    std::vector<std::size_t> front;
    for (auto i : order) {
        bool keep = true;
        for (auto f : front) {
            if (dominates(pts[f], pts[i]) || pts[f] == pts[i]) {
                keep = false;
                break;
            }
        }
        if (keep) {
            front.push_back(i);
        }
    }
    std::sort(front.begin(), front.end());
    return front;
}

inline std::vector<Point> nondominated(const std::vector<Point>& pts) {
    std::vector<Point> out;
    for (auto i : nondominated_indices(pts)) {
        out.push_back(pts[i]);
    }
    return out;
}

/// Non-dominance rank per point (0 = first front); duplicates share a rank.
inline std::vector<std::size_t> nondominated_ranks(const std::vector<Point>& pts) {
    std::vector<std::size_t> rank(pts.size(), 0);
    std::vector<std::size_t> remaining(pts.size());
    std::iota(remaining.begin(), remaining.end(), 0);
    for (std::size_t r = 0; !remaining.empty(); ++r) {
        std::vector<std::size_t> next;
        std::vector<std::size_t> current;
        for (auto i : remaining) {
            bool dominated = false;
            for (auto j : remaining) {
                if (dominates(pts[j], pts[i])) {
                    dominated = true;
                    break;
                }
            }
            (dominated ? next : current).push_back(i);
        }
        for (auto i : current) {
            rank[i] = r;
        }
        remaining = std::move(next);
    }
    return rank;
}

/// Crowding distance of each member of `members` within that set.
inline std::vector<double> crowding_distance(const std::vector<Point>& pts, const std::vector<std::size_t>& members) {
    const std::size_t n = members.size();
    std::vector<double> dist(n, 0.0);
    if (n == 0) {
        return dist;
    }
    const std::size_t d = pts[members[0]].size();
    std::vector<std::size_t> idx(n);
    for (std::size_t k = 0; k < d; ++k) {
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return pts[members[a]][k] < pts[members[b]][k]; });
        const double lo = pts[members[idx.front()]][k];
        const double hi = pts[members[idx.back()]][k];
        dist[idx.front()] = std::numeric_limits<double>::infinity();
        dist[idx.back()] = std::numeric_limits<double>::infinity();
        if (hi <= lo) {
            continue;
        }
        for (std::size_t q = 1; q + 1 < n; ++q) {
            dist[idx[q]] += (pts[members[idx[q + 1]]][k] - pts[members[idx[q - 1]]][k]) / (hi - lo);
        }
    }
    return dist;
}

/// Up to `m` indices: every per-objective argmax (first on ties), then greedy
/// max-min Euclidean distance in min-max normalized space. Exact ties in the
/// greedy step are broken with `rng`.
template <class Rng>
std::vector<std::size_t> representative_subset(const std::vector<Point>& pts, std::size_t m, Rng& rng) {
    std::vector<std::size_t> chosen;
    if (pts.size() <= m) {
        chosen.resize(pts.size());
        std::iota(chosen.begin(), chosen.end(), 0);
        return chosen;
    }
    const std::size_t d = pts[0].size();
    std::vector<bool> taken(pts.size(), false);
    for (std::size_t k = 0; k < d; ++k) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < pts.size(); ++i) {
            if (pts[i][k] > pts[best][k]) {
                best = i;
            }
        }
        if (!taken[best]) {
            taken[best] = true;
            chosen.push_back(best);
        }
    }

    std::vector<double> lo(d, std::numeric_limits<double>::infinity());
    std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
    for (const auto& p : pts) {
        for (std::size_t k = 0; k < d; ++k) {
            lo[k] = std::min(lo[k], p[k]);
            hi[k] = std::max(hi[k], p[k]);
        }
    }
    auto norm_dist = [&](const Point& a, const Point& b) {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double span = hi[k] - lo[k];
            if (span > 0.0) {
                const double diff = (a[k] - b[k]) / span;
                s += diff * diff;
            }
        }
        return std::sqrt(s);
    };

    std::vector<double> gap(pts.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (auto c : chosen) {
            gap[i] = std::min(gap[i], norm_dist(pts[i], pts[c]));
        }
    }
    while (chosen.size() < m) {
        double best = -1.0;
        std::vector<std::size_t> ties;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (taken[i]) {
                continue;
            }
            if (gap[i] > best) {
                best = gap[i];
                ties.assign(1, i);
            } else if (gap[i] == best) {
                ties.push_back(i);
            }
        }
        if (ties.empty()) {
            break;
        }
        const std::size_t pick = ties.size() == 1 ? ties[0] : ties[std::uniform_int_distribution<std::size_t>(0, ties.size() - 1)(rng)];
        taken[pick] = true;
        chosen.push_back(pick);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            gap[i] = std::min(gap[i], norm_dist(pts[i], pts[pick]));
        }
    }
    return chosen;
}

inline constexpr double hiring_reward_max = 46.53243;
inline constexpr double fraud_reward_max = 906.0;

/// Known per-objective maxima; objectives without one are scaled by the run minimum.
struct NormalizationSpec {
    std::map<Objective, double> maxima;

    static NormalizationSpec for_scenario(const std::string& scenario) {
        if (scenario == "hiring") {
            return {{{Objective::R, hiring_reward_max}}};
        }
        if (scenario == "fraud") {
            return {{{Objective::R, fraud_reward_max}}};
        }
        return {};
    }
};

/// Objectives with a known maximum map to (v - max)/|max|; the others to
/// v / |column minimum| (0 when the column never drops below 0).
inline std::vector<Point> normalize(const std::vector<Point>& pts, const std::vector<Objective>& labels,
                                    const NormalizationSpec& spec) {
    std::vector<Point> out = pts;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        auto it = spec.maxima.find(labels[k]);
        if (it != spec.maxima.end() && it->second != 0.0) {
            const double mx = it->second;
            for (auto& p : out) {
                p[k] = (p[k] - mx) / std::abs(mx);
            }
            continue;
        }
        double mn = 0.0;
        for (const auto& p : pts) {
            mn = std::min(mn, p[k]);
        }
        for (auto& p : out) {
            p[k] = mn < 0.0 ? p[k] / std::abs(mn) : 0.0;
        }
    }
    return out;
}

struct SummaryRow {
    std::string seed; // seed value or "All"
    std::string statistic; // "mean" or "std"
    Point values;
    bool std_undefined = false;
};

inline Point column_mean(const std::vector<const Point*>& pts) {
    Point m(pts.front()->size(), 0.0);
    for (const auto* p : pts) {
        for (std::size_t k = 0; k < m.size(); ++k) {
            m[k] += (*p)[k];
        }
    }
    for (auto& v : m) {
        v /= static_cast<double>(pts.size());
    }
    return m;
}

/// Sample (n-1) standard deviation; a single point yields zeros.
inline Point column_std(const std::vector<const Point*>& pts, const Point& mean) {
    Point s(mean.size(), 0.0);
    if (pts.size() < 2) {
        return s;
    }
    for (const auto* p : pts) {
        for (std::size_t k = 0; k < s.size(); ++k) {
            const double d = (*p)[k] - mean[k];
            s[k] += d * d;
        }
    }
    for (auto& v : s) {
        v = std::sqrt(v / static_cast<double>(pts.size() - 1));
    }
    return s;
}

/// Per-seed mean/std rows (seeds ascending) followed by pooled "All" rows.
inline std::vector<SummaryRow> summarize(const std::vector<PolicyPoint>& points) {
    std::vector<SummaryRow> rows;
    if (points.empty()) {
        return rows;
    }
    std::map<std::uint64_t, std::vector<const Point*>> by_seed;
    std::vector<const Point*> all;
    for (const auto& p : points) {
        by_seed[p.seed].push_back(&p.returns);
        all.push_back(&p.returns);
    }
    auto emit = [&](const std::string& label, const std::vector<const Point*>& g) {
        const auto mean = column_mean(g);
        rows.push_back({label, "mean", mean, false});
        rows.push_back({label, "std", column_std(g, mean), g.size() < 2});
    };
    for (const auto& [seed, g] : by_seed) {
        emit(std::to_string(seed), g);
    }
    emit("All", all);
    return rows;
}

} // namespace farel::pareto
