#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "core/dataset.hpp"
#include "core/marginal.hpp"

namespace synteval {

/// Fixed values for a feature subset, used for conditional generation.
class ConditionSpec {
public:
    ConditionSpec() = default;

    ConditionSpec& set(const Schema& schema, const std::string& feature, double value);
    ConditionSpec& set(const Schema& schema, const std::string& feature,
                       const std::string& category);
    ConditionSpec& set_index(std::size_t feature, Value value);

    static ConditionSpec from_json(const nlohmann::json& doc, const Schema& schema);

    const std::vector<std::pair<std::size_t, Value>>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }

private:
    std::vector<std::pair<std::size_t, Value>> entries_;
};

/// Rows plus the latent normal vector each row decoded from.
struct GeneratedSample {
    Dataset data;
    Eigen::MatrixXd latents;  // n x d_z

    explicit GeneratedSample(SchemaPtr schema) : data(std::move(schema)) {}
};

/// Gaussian copula over all schema features (label included): empirical
/// marginals with dequantized discrete margins, and a shrunk correlation
/// matrix of latent normal scores. Supports exact conditional sampling via
/// the conditional multivariate normal.
class CopulaGenerator {
public:
    static CopulaGenerator fit(const Dataset& data, double shrinkage, std::uint64_t seed);

    const Schema& schema() const { return *schema_; }
    SchemaPtr schema_ptr() const { return schema_; }
    std::size_t dim() const { return static_cast<std::size_t>(sigma_.rows()); }
    const Eigen::MatrixXd& sigma() const { return sigma_; }
    double shrinkage() const { return shrinkage_; }
    std::uint64_t seed() const { return seed_; }
    const MarginalModel& marginal(std::size_t feature) const { return marginals_[feature]; }

    GeneratedSample sample(std::size_t n, std::uint64_t seed) const;
    GeneratedSample sample_conditional(const ConditionSpec& cond, std::size_t n,
                                       std::uint64_t seed) const;

    /// Per-row conditioning: `columns[j]` holds n values for feature
    /// `features[j]`; the remaining coordinates are drawn from the
    /// conditional normal and every conditioned coordinate is copied into
    /// the output exactly.
    GeneratedSample sample_given_columns(const std::vector<std::size_t>& features,
                                         const std::vector<std::vector<Value>>& columns,
                                         std::uint64_t seed) const;

    /// Latent coordinate of a condition value: Phi^-1 of the continuous CDF,
    /// or Phi^-1 of the category's cumulative-interval midpoint.
    double latent_of_value(std::size_t feature, const Value& v) const;

    /// Mahalanobis norm sqrt(z' Sigma^-1 z) of a retained latent.
    double latent_radius(const Eigen::VectorXd& z) const;

    nlohmann::json to_json() const;
    static CopulaGenerator from_json(const nlohmann::json& doc);
    void save(const std::string& path) const;
    static CopulaGenerator load(const std::string& path);

private:
    CopulaGenerator() = default;
    void finalize();  // validates sigma and caches the Cholesky factor

    SchemaPtr schema_;
    std::vector<MarginalModel> marginals_;
    Eigen::MatrixXd sigma_;
    Eigen::MatrixXd chol_lower_;
    double shrinkage_ = 0.05;
    std::uint64_t seed_ = 0;
};

/// K independently fitted generators; member k is fitted on a bootstrap
/// resample of the data with seed `seed + k`.
class GeneratorEnsemble {
public:
    static GeneratorEnsemble fit(const Dataset& data, std::size_t k, double shrinkage,
                                 std::uint64_t seed);
    static GeneratorEnsemble from_members(std::vector<CopulaGenerator> members);

    std::size_t size() const { return members_.size(); }
    const CopulaGenerator& member(std::size_t k) const { return members_[k]; }
    const Schema& schema() const { return members_.front().schema(); }

private:
    std::vector<CopulaGenerator> members_;
};

}  // namespace synteval
