#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/schema.hpp"

namespace testsupport {

using namespace synteval;

inline SchemaPtr mixed_schema() {
    std::vector<Feature> features;
    features.push_back({"age", FeatureType::Continuous, {}});
    features.push_back({"race", FeatureType::Categorical, {"White", "Black", "Other"}});
    features.push_back({"sex", FeatureType::Categorical, {"F", "M"}});
    features.push_back({"y", FeatureType::Binary, {}});
    return std::make_shared<Schema>(features, "y");
}

inline Row make_row(double age, std::int32_t race, std::int32_t sex, std::int32_t y) {
    return Row{age, race, sex, y};
}

inline std::filesystem::path tmp_dir() {
    auto dir = std::filesystem::current_path() / "test_tmp";
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string write_file(const std::string& name, const std::string& content) {
    const auto path = tmp_dir() / name;
    std::ofstream out(path);
    out << content;
    return path.string();
}

// independent quantile oracle: plain sort + type-7 interpolation
inline double quantile_oracle(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double h = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

}  // namespace testsupport
