#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "farel/core/error.hpp"

namespace farel {

enum class FeatureKind { numeric, nominal };

struct FeatureField {
    std::string name;
    FeatureKind kind = FeatureKind::numeric;
    bool sensitive = false;
    // Bounds used for min-max scaling of numeric fields.
    double lower = 0.0;
    double upper = 1.0;
};

/// Per-position description of a feature vector. Numeric and nominal values
/// are stored in two separate arrays; the k-th numeric field of the schema maps
/// onto numeric[k], and likewise for nominal fields.
class FeatureSchema {
public:
    FeatureSchema() = default;
    explicit FeatureSchema(std::vector<FeatureField> fields) : fields_(std::move(fields)) {
        for (const auto& f : fields_) {
            if (f.kind == FeatureKind::numeric) {
                require(f.upper > f.lower, "feature '" + f.name + "': upper bound must exceed lower bound");
                ++numeric_count_;
            } else {
                ++nominal_count_;
            }
        }
    }

    const std::vector<FeatureField>& fields() const noexcept { return fields_; }
    std::size_t size() const noexcept { return fields_.size(); }
    std::size_t numeric_count() const noexcept { return numeric_count_; }
    std::size_t nominal_count() const noexcept { return nominal_count_; }

    /// Schema describing an all-numeric vector of the given width (agent observations).
    static std::shared_ptr<const FeatureSchema> numeric_only(std::size_t width) {
        std::vector<FeatureField> fields(width);
        for (std::size_t i = 0; i < width; ++i) {
            fields[i].name = "x" + std::to_string(i);
        }
        return std::make_shared<const FeatureSchema>(std::move(fields));
    }

    bool operator==(const FeatureSchema& o) const {
        if (fields_.size() != o.fields_.size()) {
            return false;
        }
        for (std::size_t i = 0; i < fields_.size(); ++i) {
            const auto& a = fields_[i];
            const auto& b = o.fields_[i];
            if (a.name != b.name || a.kind != b.kind || a.sensitive != b.sensitive || a.lower != b.lower ||
                a.upper != b.upper) {
                return false;
            }
        }
        return true;
    }

private:
    std::vector<FeatureField> fields_;
    std::size_t numeric_count_ = 0;
    std::size_t nominal_count_ = 0;
};

using SchemaPtr = std::shared_ptr<const FeatureSchema>;

struct FeatureVector {
    SchemaPtr schema;
    std::vector<double> numeric;
    std::vector<std::int64_t> nominal;

    void validate() const {
        require(schema != nullptr, "feature vector has no schema");
        require(numeric.size() == schema->numeric_count(), "numeric length does not match schema");
        require(nominal.size() == schema->nominal_count(), "nominal length does not match schema");
    }
};

/// The non-sensitive part of a feature vector, numerics min-max scaled to [0,1].
/// This is what every distance metric consumes inside the fairness engine.
struct DistanceView {
    std::vector<double> numeric;
    std::vector<std::int64_t> nominal;
};

inline DistanceView make_distance_view(const FeatureVector& fv, bool scale = true) {
    fv.validate();
    DistanceView out;
    std::size_t ni = 0;
    std::size_t ci = 0;
    for (const auto& f : fv.schema->fields()) {
        if (f.kind == FeatureKind::numeric) {
            const double v = fv.numeric[ni++];
            if (!f.sensitive) {
                out.numeric.push_back(scale ? std::clamp((v - f.lower) / (f.upper - f.lower), 0.0, 1.0) : v);
            }
        } else {
            const auto v = fv.nominal[ci++];
            if (!f.sensitive) {
                out.nominal.push_back(v);
            }
        }
    }
    return out;
}

} // namespace farel
