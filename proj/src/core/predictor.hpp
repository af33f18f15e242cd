#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "core/dataset.hpp"

namespace synteval {

/// Black-box classifier interface: a label and the probability of that
/// label. Fitted predictors are immutable.
class Predictor {
public:
    virtual ~Predictor() = default;
    virtual std::int32_t predict(const Dataset& data, std::size_t row) const = 0;
    virtual double confidence(const Dataset& data, std::size_t row) const = 0;
};

using PredictorPtr = std::shared_ptr<const Predictor>;

/// Fit one of the built-in classifiers on `train`.
///
/// kind: "logistic" | "tree" | "knn" | "naive_bayes".
/// hyper: optional JSON object. Recognized keys:
///   logistic: "l2" (1e-4), "learning_rate" (0.1), "iterations" (500)
///   tree:     "max_depth" (6), "min_leaf" (5)
///   knn:      "k" (5)
PredictorPtr fit_predictor(const std::string& kind, const Dataset& train,
                           const nlohmann::json& hyper, std::uint64_t seed);

/// Lookup predictor backed by a predictions CSV (row_index,label,confidence).
/// Row indices refer to the evaluation dataset's row order; querying a row
/// without an entry is an error.
PredictorPtr load_external(const std::string& path);

/// Standardized one-hot encoding shared by logistic and knn. Continuous
/// features are centered and scaled by the fitting-set statistics.
class FeatureEncoder {
public:
    explicit FeatureEncoder(const Dataset& fit_data);

    std::size_t dim() const { return dim_; }
    void encode(const Dataset& data, std::size_t row, double* out) const;
    std::vector<double> encode(const Dataset& data, std::size_t row) const;

private:
    SchemaPtr schema_;
    std::vector<double> mean_, inv_sd_;
    std::vector<std::size_t> offset_;
    std::size_t dim_ = 0;
};

std::vector<std::int32_t> predict_all(const Predictor& f, const Dataset& data);

}  // namespace synteval
