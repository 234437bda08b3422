#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "farel/core/error.hpp"
#include "farel/core/feature.hpp"
#include "farel/core/log.hpp"

namespace farel {

enum class DistanceKind { braycurtis, heom, hmom };

inline std::string_view distance_name(DistanceKind k) {
    switch (k) {
    case DistanceKind::braycurtis:
        return "braycurtis";
    case DistanceKind::heom:
        return "HEOM";
    case DistanceKind::hmom:
        return "HMOM";
    }
    return "?";
}

inline DistanceKind parse_distance(std::string_view s) {
    if (s == "braycurtis") {
        return DistanceKind::braycurtis;
    }
    if (s == "HEOM" || s == "heom") {
        return DistanceKind::heom;
    }
    if (s == "HMOM" || s == "hmom") {
        return DistanceKind::hmom;
    }
    throw contract_error("unknown distance metric '" + std::string(s) + "'");
}

namespace detail {

inline void check_views(const DistanceView& a, const DistanceView& b) {
    require(a.numeric.size() == b.numeric.size() && a.nominal.size() == b.nominal.size(),
            "distance between feature vectors of different schemas");
}

inline DistanceView raw_view(const FeatureVector& i, const FeatureVector& j) {
    require(i.schema && j.schema && (i.schema == j.schema || *i.schema == *j.schema),
            "distance between feature vectors of different schemas");
    return make_distance_view(i, false);
}

} // namespace detail

/// Bray-Curtis over non-sensitive positions; nominal codes take part as numbers.
/// Lies in [0,1] when every value is non-negative.
inline double braycurtis(const DistanceView& a, const DistanceView& b) {
    detail::check_views(a, b);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < a.numeric.size(); ++k) {
        num += std::abs(a.numeric[k] - b.numeric[k]);
        den += std::abs(a.numeric[k] + b.numeric[k]);
    }
    for (std::size_t k = 0; k < a.nominal.size(); ++k) {
        const auto x = static_cast<double>(a.nominal[k]);
        const auto y = static_cast<double>(b.nominal[k]);
        num += std::abs(x - y);
        den += std::abs(x + y);
    }
    if (den == 0.0) {
        log::write(log::Level::debug, "braycurtis: zero denominator, distance set to 0");
        return 0.0;
    }
    return num / den;
}

/// Heterogeneous Euclidean-Overlap Metric, written per feature as sqrt((a-b)^2)
/// for numeric positions plus one per nominal mismatch.
inline double heom(const DistanceView& a, const DistanceView& b) {
    detail::check_views(a, b);
    double d = 0.0;
    for (std::size_t k = 0; k < a.numeric.size(); ++k) {
        const double diff = a.numeric[k] - b.numeric[k];
        d += std::sqrt(diff * diff);
    }
    for (std::size_t k = 0; k < a.nominal.size(); ++k) {
        d += a.nominal[k] != b.nominal[k] ? 1.0 : 0.0;
    }
    return d;
}

/// Heterogeneous Manhattan-Overlap Metric.
inline double hmom(const DistanceView& a, const DistanceView& b) {
    detail::check_views(a, b);
    double d = 0.0;
    for (std::size_t k = 0; k < a.numeric.size(); ++k) {
        d += std::abs(a.numeric[k] - b.numeric[k]);
    }
    for (std::size_t k = 0; k < a.nominal.size(); ++k) {
        d += a.nominal[k] != b.nominal[k] ? 1.0 : 0.0;
    }
    return d;
}

// Raw (unscaled) overloads on feature vectors; sensitive positions are skipped.
inline double braycurtis(const FeatureVector& i, const FeatureVector& j) {
    return braycurtis(detail::raw_view(i, j), make_distance_view(j, false));
}
inline double heom(const FeatureVector& i, const FeatureVector& j) {
    return heom(detail::raw_view(i, j), make_distance_view(j, false));
}
inline double hmom(const FeatureVector& i, const FeatureVector& j) {
    return hmom(detail::raw_view(i, j), make_distance_view(j, false));
}

/// e^(-lambda * raw): maps a distance onto a similarity in (0, 1].
inline double similarity_exp(double raw, double lambda) {
    require(lambda > 0.0, "smoothing parameter lambda must be positive");
    return std::exp(-lambda * raw);
}

inline double raw_distance(DistanceKind kind, const DistanceView& a, const DistanceView& b) {
    switch (kind) {
    case DistanceKind::braycurtis:
        return braycurtis(a, b);
    case DistanceKind::heom:
        return heom(a, b);
    case DistanceKind::hmom:
        return hmom(a, b);
    }
    return 0.0;
}

/// The d(i,j) entering individual fairness: Bray-Curtis is used as is, the
/// heterogeneous metrics pass through the exponential similarity.
inline double individual_metric(DistanceKind kind, const DistanceView& a, const DistanceView& b, double lambda) {
    if (kind == DistanceKind::braycurtis) {
        return braycurtis(a, b);
    }
    return similarity_exp(raw_distance(kind, a, b), lambda);
}

/// Total variation distance between two action distributions.
inline double total_variation(std::span<const double> p, std::span<const double> q) {
    require(p.size() == q.size(), "action distributions of different widths");
    double s = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        s += std::abs(p[k] - q[k]);
    }
    return 0.5 * s;
}

} // namespace farel
