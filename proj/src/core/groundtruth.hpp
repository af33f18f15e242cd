#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "core/dataset.hpp"
#include "core/predictor.hpp"

namespace synteval {

/// Fully specified data-generating process used to validate estimators
/// against a knowable truth: a subgroup mixture over correlated latent
/// features and a noisy-threshold label rule. True subgroup accuracies are
/// computable (the clean rule scores 1 - noise on its subgroup).
class GroundTruthSpec {
public:
    struct ContinuousParams {
        std::vector<double> mean, sd;  // per subgroup
    };
    struct BinaryParams {
        std::vector<double> prevalence;  // per subgroup
    };
    struct CategoricalParams {
        std::vector<double> probs;  // shared across subgroups
    };

    static GroundTruthSpec from_json(const nlohmann::json& doc);
    static GroundTruthSpec load(const std::string& path);
    /// The specification used by the acceptance experiments.
    static GroundTruthSpec builtin();
    nlohmann::json to_json() const;

    SchemaPtr schema() const { return schema_; }
    const std::string& subgroup_feature() const { return subgroup_feature_; }
    std::size_t n_subgroups() const { return subgroup_probs_.size(); }
    const std::vector<double>& subgroup_probs() const { return subgroup_probs_; }
    double noise_of(std::size_t subgroup) const { return noise_per_group_[subgroup]; }
    bool has_noise_gradient() const { return !noise_feature_.empty(); }
    std::uint64_t spec_seed() const { return seed_; }

    Dataset simulate(std::size_t n, std::uint64_t seed) const;

    /// The noise-free decision rule as a predictor (the Bayes classifier of
    /// this process). Confidence is 1 - noise of the row's subgroup.
    PredictorPtr bayes_predictor() const;

    /// Deterministic label score (before noise) of a row.
    double label_score(const Dataset& data, std::size_t row) const;

private:
    SchemaPtr schema_;
    std::string subgroup_feature_;
    std::size_t subgroup_index_ = 0;
    std::vector<double> subgroup_probs_;

    struct FeatureGen {
        std::size_t feature;  // schema index
        enum class Kind { Continuous, Binary, Categorical } kind;
        ContinuousParams continuous;
        BinaryParams binary;
        CategoricalParams categorical;
    };
    std::vector<FeatureGen> generated_;  // consumes one latent each, in order
    Eigen::MatrixXd latent_chol_;
    Eigen::MatrixXd latent_corr_;

    std::map<std::string, double> label_weights_;
    double label_bias_ = 0.0;
    std::vector<double> label_bias_per_group_;
    std::vector<double> noise_per_group_;
    // optional feature-dependent flip-rate gradient:
    // noise(row) = noise_per_group[g] + slope * (feature - ref), clamped
    std::string noise_feature_;
    double noise_slope_ = 0.0;
    double noise_ref_ = 0.0;
    std::uint64_t seed_ = 0;

    double noise_of_row(const Dataset& data, std::size_t row) const;

    friend class BayesRulePredictor;
};

}  // namespace synteval
