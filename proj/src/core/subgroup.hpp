#pragma once

#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "core/dataset.hpp"

namespace synteval {

struct CategoryEqualsAtom {
    std::size_t feature;
    std::int32_t category;
};

struct IntervalAtom {
    std::size_t feature;
    double low = -std::numeric_limits<double>::infinity();
    double high = std::numeric_limits<double>::infinity();
    bool low_closed = true;
    bool high_closed = true;
};

/// Ball around a reference row under a standardized metric: continuous
/// coordinates are scaled by the reference standard deviation, categorical
/// mismatches contribute 1.
struct NeighborhoodAtom {
    Row center;
    double radius = 0.0;
    std::vector<double> scale;  // per feature; 0 entries are skipped
};

using SubgroupAtom = std::variant<CategoryEqualsAtom, IntervalAtom, NeighborhoodAtom>;

/// Conjunction of atoms; an empty atom list is the full space.
class SubgroupSpec {
public:
    SubgroupSpec() = default;

    static SubgroupSpec full_space() { return SubgroupSpec{}; }
    static SubgroupSpec category_equals(const Schema& schema, const std::string& feature,
                                        const std::string& value);
    SubgroupSpec& add_category(const Schema& schema, const std::string& feature,
                               const std::string& value);
    SubgroupSpec& add_interval(const Schema& schema, const std::string& feature, double low,
                               double high, bool low_closed = true, bool high_closed = true);
    /// Scales come from `reference` (typically the training split).
    SubgroupSpec& add_neighborhood(const Dataset& reference, const Row& center, double radius);
    SubgroupSpec& add_neighborhood(const Row& center, double radius, std::vector<double> scale);

    /// Conjunction: appends the other spec's atoms.
    SubgroupSpec& append(const SubgroupSpec& other);

    static SubgroupSpec from_json(const nlohmann::json& doc, const Schema& schema);
    nlohmann::json to_json(const Schema& schema) const;

    const std::vector<SubgroupAtom>& atoms() const { return atoms_; }
    bool is_full_space() const { return atoms_.empty(); }

    bool matches(const Dataset& data, std::size_t row) const;
    bool matches_row(const Schema& schema, const Row& row) const;

    /// Short human label, used in reports and result files.
    std::string label(const Schema& schema) const;

private:
    std::vector<SubgroupAtom> atoms_;
};

/// Rows of `data` satisfying `spec`, order and weights preserved.
Dataset subgroup_filter(const Dataset& data, const SubgroupSpec& spec);

/// Indices of matching rows.
std::vector<std::size_t> subgroup_indices(const Dataset& data, const SubgroupSpec& spec);

/// Standardized distance between two rows (the neighborhood metric).
double standardized_distance(const Schema& schema, const Row& a, const Row& b,
                             const std::vector<double>& scale);

/// Per-feature scales (1/sd for continuous with sd > 0, 1 otherwise).
std::vector<double> neighborhood_scales(const Dataset& reference);

}  // namespace synteval
