#include "core/schema.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "core/error.hpp"

namespace synteval {

Schema::Schema(std::vector<Feature> features, const std::string& label_name)
    : features_(std::move(features)) {
    if (features_.empty()) throw_config("EmptySchema", "schema declares no features");
    for (std::size_t i = 0; i < features_.size(); ++i) {
        Feature& f = features_[i];
        if (f.name.empty()) throw_config("BadSchema", "feature with empty name");
        if (!by_name_.emplace(f.name, i).second)
            throw_config("BadSchema", "duplicate feature name '" + f.name + "'");
        if (f.type == FeatureType::Binary) {
            f.categories = {"0", "1"};
        } else if (f.type == FeatureType::Categorical) {
            if (f.categories.size() < 2)
                throw_config("BadSchema",
                             "categorical feature '" + f.name + "' needs >= 2 categories");
            std::set<std::string> uniq(f.categories.begin(), f.categories.end());
            if (uniq.size() != f.categories.size())
                throw_config("BadSchema",
                             "categorical feature '" + f.name + "' has duplicate categories");
        }
    }
    auto it = by_name_.find(label_name);
    if (it == by_name_.end())
        throw_config("BadSchema", "label '" + label_name + "' is not a declared feature");
    label_index_ = it->second;
    if (features_[label_index_].type == FeatureType::Continuous)
        throw_config("BadSchema", "label '" + label_name + "' must be binary or categorical");
}

SchemaPtr Schema::from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("features") || !doc.contains("label"))
        throw_config("BadSchema", "schema JSON needs 'features' and 'label'");
    std::vector<Feature> features;
    for (const auto& fj : doc.at("features")) {
        Feature f;
        f.name = fj.at("name").get<std::string>();
        const std::string kind = fj.at("kind").get<std::string>();
        if (kind == "continuous") {
            f.type = FeatureType::Continuous;
        } else if (kind == "binary") {
            f.type = FeatureType::Binary;
        } else if (kind == "categorical") {
            f.type = FeatureType::Categorical;
            if (!fj.contains("categories"))
                throw_config("BadSchema", "categorical '" + f.name + "' needs 'categories'");
            f.categories = fj.at("categories").get<std::vector<std::string>>();
        } else {
            throw_config("BadSchema", "unknown feature kind '" + kind + "'");
        }
        features.push_back(std::move(f));
    }
    return std::make_shared<Schema>(std::move(features), doc.at("label").get<std::string>());
}

SchemaPtr Schema::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_config("MissingFile", "cannot open schema file '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw_config("BadSchema", std::string("schema JSON parse error: ") + e.what());
    }
    return from_json(doc);
}

nlohmann::json Schema::to_json() const {
    nlohmann::json features = nlohmann::json::array();
    for (const auto& f : features_) {
        nlohmann::json fj{{"name", f.name}};
        switch (f.type) {
            case FeatureType::Continuous: fj["kind"] = "continuous"; break;
            case FeatureType::Binary: fj["kind"] = "binary"; break;
            case FeatureType::Categorical:
                fj["kind"] = "categorical";
                fj["categories"] = f.categories;
                break;
        }
        features.push_back(std::move(fj));
    }
    return nlohmann::json{{"features", features}, {"label", features_[label_index_].name}};
}

std::size_t Schema::index_of(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw_data("UnknownFeature", "no feature named '" + name + "'");
    return it->second;
}

bool Schema::has_feature(const std::string& name) const { return by_name_.count(name) > 0; }

std::int32_t Schema::positive_class() const {
    const Feature& lab = label();
    for (std::size_t i = 0; i < lab.categories.size(); ++i)
        if (lab.categories[i] == "1") return static_cast<std::int32_t>(i);
    return static_cast<std::int32_t>(lab.categories.size()) - 1;
}

std::int32_t Schema::category_index(std::size_t feature, const std::string& value) const {
    const Feature& f = features_[feature];
    for (std::size_t i = 0; i < f.categories.size(); ++i)
        if (f.categories[i] == value) return static_cast<std::int32_t>(i);
    throw_data("UnknownCategory",
               "value '" + value + "' not declared for feature '" + f.name + "'");
}

std::uint64_t Schema::hash() const {
    const std::string canon = to_json().dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

bool Schema::operator==(const Schema& other) const {
    return to_json() == other.to_json();
}

}  // namespace synteval
