#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/evaluate.hpp"
#include "core/shift.hpp"

namespace synteval {

struct BaselineResult {
    std::string name;             // Bootstrap | ATC | DOC | IM | MS | RS
    double estimate = 0.0;
    std::optional<Interval> interval;  // Bootstrap only
    std::string inputs_used;      // "none" or "unlabeled_target"
    bool flagged = false;         // e.g. DOC clipped
    std::string flag;
};

/// B full-size resamples with replacement; mean +- 2 sd of the per-resample
/// subgroup estimates.
BaselineResult bootstrap_interval(const Predictor& f, const Dataset& data,
                                  const SubgroupSpec& spec, const MetricKind& metric,
                                  std::size_t b, std::uint64_t seed);

/// Average-threshold-confidence: pick t so the source fraction above t
/// matches source accuracy, then report the target fraction above t.
BaselineResult atc_predict(const Predictor& f, const Dataset& source_labeled,
                           const Dataset& target_unlabeled);

/// Difference-of-confidences: source accuracy plus the mean-confidence gap,
/// clipped to [0,1].
BaselineResult doc_predict(const Predictor& f, const Dataset& source_labeled,
                           const Dataset& target_unlabeled);

/// Importance reweighting with Laplace-smoothed shared-bin histogram
/// density ratios over the given features (product across features).
BaselineResult im_predict(const Predictor& f, const Dataset& source_labeled,
                          const Dataset& target_features,
                          const std::vector<std::string>& features, std::size_t bins);

/// Naive real-data mean shift: copy the test rows, add s to the feature,
/// evaluate. Breaks p(rest | feature) by construction.
BaselineResult ms_baseline(const Dataset& test, const Predictor& f, const std::string& feature,
                           double s, const MetricKind& metric);

/// Real-data rejection sampling toward the shifted marginal, then evaluate.
BaselineResult rs_baseline(const Dataset& test, const Predictor& f, const ShiftTarget& target,
                           std::size_t n_s, const MetricKind& metric, std::uint64_t seed);

}  // namespace synteval
