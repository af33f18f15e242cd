#include "core/subgroup.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "core/error.hpp"

namespace synteval {

SubgroupSpec SubgroupSpec::category_equals(const Schema& schema, const std::string& feature,
                                           const std::string& value) {
    SubgroupSpec s;
    s.add_category(schema, feature, value);
    return s;
}

SubgroupSpec& SubgroupSpec::add_category(const Schema& schema, const std::string& feature,
                                         const std::string& value) {
    const std::size_t f = schema.index_of(feature);
    if (!schema.feature(f).is_discrete())
        throw_data("KindMismatch", "category atom on continuous feature '" + feature + "'");
    atoms_.push_back(CategoryEqualsAtom{f, schema.category_index(f, value)});
    return *this;
}

SubgroupSpec& SubgroupSpec::add_interval(const Schema& schema, const std::string& feature,
                                         double low, double high, bool low_closed,
                                         bool high_closed) {
    const std::size_t f = schema.index_of(feature);
    if (schema.feature(f).type != FeatureType::Continuous)
        throw_data("KindMismatch", "interval atom on non-continuous feature '" + feature + "'");
    if (!(low <= high)) throw_config("BadInterval", "interval low > high");
    atoms_.push_back(IntervalAtom{f, low, high, low_closed, high_closed});
    return *this;
}

SubgroupSpec& SubgroupSpec::add_neighborhood(const Dataset& reference, const Row& center,
                                             double radius) {
    return add_neighborhood(center, radius, neighborhood_scales(reference));
}

SubgroupSpec& SubgroupSpec::add_neighborhood(const Row& center, double radius,
                                             std::vector<double> scale) {
    if (!(radius > 0.0)) throw_config("BadRadius", "neighborhood radius must be > 0");
    atoms_.push_back(NeighborhoodAtom{center, radius, std::move(scale)});
    return *this;
}

SubgroupSpec& SubgroupSpec::append(const SubgroupSpec& other) {
    atoms_.insert(atoms_.end(), other.atoms_.begin(), other.atoms_.end());
    return *this;
}

std::vector<double> neighborhood_scales(const Dataset& reference) {
    const Schema& schema = reference.schema();
    std::vector<double> scale(schema.size(), 1.0);
    for (std::size_t f = 0; f < schema.size(); ++f) {
        if (schema.feature(f).type == FeatureType::Continuous) {
            const double sd = reference.column_sd(f);
            scale[f] = sd > 0.0 ? 1.0 / sd : 1.0;
        }
    }
    return scale;
}

double standardized_distance(const Schema& schema, const Row& a, const Row& b,
                             const std::vector<double>& scale) {
    double d2 = 0.0;
    for (std::size_t f = 0; f < schema.size(); ++f) {
        if (schema.feature(f).type == FeatureType::Continuous) {
            const double diff = (std::get<double>(a[f]) - std::get<double>(b[f])) * scale[f];
            d2 += diff * diff;
        } else if (std::get<std::int32_t>(a[f]) != std::get<std::int32_t>(b[f])) {
            d2 += 1.0;
        }
    }
    return std::sqrt(d2);
}

namespace {

bool interval_contains(const IntervalAtom& atom, double v) {
    if (atom.low_closed ? v < atom.low : v <= atom.low) return false;
    if (atom.high_closed ? v > atom.high : v >= atom.high) return false;
    return true;
}

double neighborhood_distance_to(const NeighborhoodAtom& atom, const Schema& schema,
                                const Dataset& data, std::size_t row) {
    double d2 = 0.0;
    for (std::size_t f = 0; f < schema.size(); ++f) {
        if (schema.feature(f).type == FeatureType::Continuous) {
            const double diff =
                (data.numeric(f, row) - std::get<double>(atom.center[f])) * atom.scale[f];
            d2 += diff * diff;
        } else if (data.category(f, row) != std::get<std::int32_t>(atom.center[f])) {
            d2 += 1.0;
        }
    }
    return std::sqrt(d2);
}

}  // namespace

bool SubgroupSpec::matches(const Dataset& data, std::size_t row) const {
    const Schema& schema = data.schema();
    for (const SubgroupAtom& atom : atoms_) {
        const bool ok = std::visit(
            [&](const auto& a) -> bool {
                using T = std::decay_t<decltype(a)>;
                if constexpr (std::is_same_v<T, CategoryEqualsAtom>) {
                    return data.category(a.feature, row) == a.category;
                } else if constexpr (std::is_same_v<T, IntervalAtom>) {
                    return interval_contains(a, data.numeric(a.feature, row));
                } else {
                    return neighborhood_distance_to(a, schema, data, row) <= a.radius;
                }
            },
            atom);
        if (!ok) return false;
    }
    return true;
}

bool SubgroupSpec::matches_row(const Schema& schema, const Row& row) const {
    for (const SubgroupAtom& atom : atoms_) {
        const bool ok = std::visit(
            [&](const auto& a) -> bool {
                using T = std::decay_t<decltype(a)>;
                if constexpr (std::is_same_v<T, CategoryEqualsAtom>) {
                    return std::get<std::int32_t>(row[a.feature]) == a.category;
                } else if constexpr (std::is_same_v<T, IntervalAtom>) {
                    return interval_contains(a, std::get<double>(row[a.feature]));
                } else {
                    return standardized_distance(schema, row, a.center, a.scale) <= a.radius;
                }
            },
            atom);
        if (!ok) return false;
    }
    return true;
}

std::string SubgroupSpec::label(const Schema& schema) const {
    if (atoms_.empty()) return "all";
    std::ostringstream out;
    bool first = true;
    for (const SubgroupAtom& atom : atoms_) {
        if (!first) out << " & ";
        first = false;
        std::visit(
            [&](const auto& a) {
                using T = std::decay_t<decltype(a)>;
                if constexpr (std::is_same_v<T, CategoryEqualsAtom>) {
                    out << schema.feature(a.feature).name << "="
                        << schema.feature(a.feature).categories[static_cast<std::size_t>(a.category)];
                } else if constexpr (std::is_same_v<T, IntervalAtom>) {
                    out << schema.feature(a.feature).name << " in "
                        << (a.low_closed ? '[' : '(') << a.low << "," << a.high
                        << (a.high_closed ? ']' : ')');
                } else {
                    out << "near(r=" << a.radius << ")";
                }
            },
            atom);
    }
    return out.str();
}

SubgroupSpec SubgroupSpec::from_json(const nlohmann::json& doc, const Schema& schema) {
    SubgroupSpec spec;
    if (doc.is_null()) return spec;
    const nlohmann::json& atoms = doc.is_array() ? doc : doc.at("atoms");
    for (const auto& aj : atoms) {
        const std::string type = aj.at("type").get<std::string>();
        if (type == "category_equals") {
            spec.add_category(schema, aj.at("feature").get<std::string>(),
                              aj.at("value").get<std::string>());
        } else if (type == "interval") {
            spec.add_interval(
                schema, aj.at("feature").get<std::string>(),
                aj.value("low", -std::numeric_limits<double>::infinity()),
                aj.value("high", std::numeric_limits<double>::infinity()),
                aj.value("low_closed", true), aj.value("high_closed", true));
        } else if (type == "neighborhood") {
            NeighborhoodAtom atom;
            atom.radius = aj.at("radius").get<double>();
            atom.center.resize(schema.size());
            atom.scale.assign(schema.size(), 1.0);
            const auto& center = aj.at("center");
            for (std::size_t f = 0; f < schema.size(); ++f) {
                const Feature& feat = schema.feature(f);
                if (feat.type == FeatureType::Continuous)
                    atom.center[f] = center.at(feat.name).get<double>();
                else
                    atom.center[f] =
                        schema.category_index(f, center.at(feat.name).get<std::string>());
            }
            if (aj.contains("scales")) {
                for (const auto& [name, v] : aj.at("scales").items())
                    atom.scale[schema.index_of(name)] = v.get<double>();
            }
            spec.atoms_.push_back(std::move(atom));
        } else {
            throw_config("BadSubgroup", "unknown atom type '" + type + "'");
        }
    }
    return spec;
}

nlohmann::json SubgroupSpec::to_json(const Schema& schema) const {
    nlohmann::json atoms = nlohmann::json::array();
    for (const SubgroupAtom& atom : atoms_) {
        std::visit(
            [&](const auto& a) {
                using T = std::decay_t<decltype(a)>;
                if constexpr (std::is_same_v<T, CategoryEqualsAtom>) {
                    atoms.push_back(
                        {{"type", "category_equals"},
                         {"feature", schema.feature(a.feature).name},
                         {"value",
                          schema.feature(a.feature).categories[static_cast<std::size_t>(a.category)]}});
                } else if constexpr (std::is_same_v<T, IntervalAtom>) {
                    nlohmann::json j{{"type", "interval"},
                                     {"feature", schema.feature(a.feature).name},
                                     {"low_closed", a.low_closed},
                                     {"high_closed", a.high_closed}};
                    if (std::isfinite(a.low)) j["low"] = a.low;
                    if (std::isfinite(a.high)) j["high"] = a.high;
                    atoms.push_back(std::move(j));
                } else {
                    nlohmann::json center;
                    for (std::size_t f = 0; f < schema.size(); ++f) {
                        const Feature& feat = schema.feature(f);
                        if (feat.type == FeatureType::Continuous)
                            center[feat.name] = std::get<double>(a.center[f]);
                        else
                            center[feat.name] =
                                feat.categories[static_cast<std::size_t>(std::get<std::int32_t>(a.center[f]))];
                    }
                    nlohmann::json scales;
                    for (std::size_t f = 0; f < schema.size(); ++f)
                        scales[schema.feature(f).name] = a.scale[f];
                    atoms.push_back({{"type", "neighborhood"},
                                     {"center", center},
                                     {"radius", a.radius},
                                     {"scales", scales}});
                }
            },
            atom);
    }
    return nlohmann::json{{"atoms", atoms}};
}

std::vector<std::size_t> subgroup_indices(const Dataset& data, const SubgroupSpec& spec) {
    std::vector<std::size_t> idx;
    for (std::size_t r = 0; r < data.n_rows(); ++r)
        if (spec.matches(data, r)) idx.push_back(r);
    return idx;
}

Dataset subgroup_filter(const Dataset& data, const SubgroupSpec& spec) {
    const std::vector<std::size_t> idx = subgroup_indices(data, spec);
    return data.take(idx);
}

}  // namespace synteval
