#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace synteval {

enum class FeatureType { Continuous, Binary, Categorical };

struct Feature {
    std::string name;
    FeatureType type = FeatureType::Continuous;
    // Category labels, in declared order. Binary always carries {"0","1"}.
    std::vector<std::string> categories;

    bool is_discrete() const { return type != FeatureType::Continuous; }
    std::size_t cardinality() const { return categories.size(); }
};

/// Immutable feature layout shared by datasets, predictors and generators.
class Schema {
public:
    Schema(std::vector<Feature> features, const std::string& label_name);

    static std::shared_ptr<const Schema> from_json(const nlohmann::json& doc);
    static std::shared_ptr<const Schema> load(const std::string& path);
    nlohmann::json to_json() const;

    const std::vector<Feature>& features() const { return features_; }
    const Feature& feature(std::size_t i) const { return features_[i]; }
    std::size_t size() const { return features_.size(); }

    std::size_t index_of(const std::string& name) const;  // throws UnknownFeature
    bool has_feature(const std::string& name) const;

    std::size_t label_index() const { return label_index_; }
    const Feature& label() const { return features_[label_index_]; }

    /// Category index of the positive class for binary metrics: the category
    /// named "1" when present, otherwise the last declared category.
    std::int32_t positive_class() const;

    std::int32_t category_index(std::size_t feature, const std::string& value) const;

    /// FNV-1a hash of the canonical JSON form; embedded in serialized
    /// generators so a mismatched schema is caught on load.
    std::uint64_t hash() const;

    bool operator==(const Schema& other) const;

private:
    std::vector<Feature> features_;
    std::size_t label_index_;
    std::unordered_map<std::string, std::size_t> by_name_;
};

using SchemaPtr = std::shared_ptr<const Schema>;

}  // namespace synteval
