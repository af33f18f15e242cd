#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace synteval {

/// Empirical marginal of a continuous feature: a piecewise-linear CDF over
/// the unique observed values at their averaged mid-ranks, with Gaussian
/// tails (sd = feature sd) beyond the observed range, truncated at 8 sd.
class ContinuousMarginal {
public:
    ContinuousMarginal() = default;
    static ContinuousMarginal fit(std::span<const double> values);

    double cdf(double v) const;
    double inv_cdf(double u) const;

    /// Mid-rank CDF value of an observed fitting value (used for normal
    /// scores). Falls back to cdf() for unseen values.
    double midrank(double v) const;

    double support_low() const;
    double support_high() const;
    bool in_support(double v) const { return v >= support_low() && v <= support_high(); }

    double tail_sd() const { return tail_sd_; }
    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& cdf_grid() const { return cdf_; }

    nlohmann::json to_json() const;
    static ContinuousMarginal from_json(const nlohmann::json& doc);

private:
    std::vector<double> values_;  // unique, ascending
    std::vector<double> cdf_;     // strictly increasing, in (0,1)
    double tail_sd_ = 1.0;
};

/// Laplace-smoothed category distribution with cumulative intervals
/// partitioning [0,1).
class CategoricalMarginal {
public:
    CategoricalMarginal() = default;
    static CategoricalMarginal fit(std::span<const std::int32_t> values, std::size_t n_categories,
                                   double pseudo_count = 1.0);
    static CategoricalMarginal from_probabilities(std::vector<double> prob);

    std::size_t size() const { return prob_.size(); }
    double probability(std::int32_t cat) const { return prob_[static_cast<std::size_t>(cat)]; }
    const std::vector<double>& probabilities() const { return prob_; }

    /// [low, high) cumulative interval of a category.
    std::pair<double, double> interval(std::int32_t cat) const;
    double interval_midpoint(std::int32_t cat) const;

    /// Category whose interval contains u in [0,1).
    std::int32_t inv(double u) const;

    nlohmann::json to_json() const;
    static CategoricalMarginal from_json(const nlohmann::json& doc);

private:
    std::vector<double> prob_;
    std::vector<double> bounds_;  // size m+1, bounds_[0]=0, bounds_[m]=1
    void rebuild_bounds();
};

using MarginalModel = std::variant<ContinuousMarginal, CategoricalMarginal>;

}  // namespace synteval
