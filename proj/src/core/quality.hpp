#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "core/copula.hpp"
#include "core/dataset.hpp"

namespace synteval {

/// Unbiased MMD^2 estimate with an RBF kernel over standardized one-hot
/// encoded rows (label included). bandwidth <= 0 selects the median
/// pairwise distance over the pooled sets.
double mmd_rbf(const Dataset& a, const Dataset& b, double bandwidth);

struct Divergences {
    double jsd = 0.0;      // mean per-feature Jensen-Shannon divergence, nats
    double inv_kld = 1.0;  // mean per-feature 1 / (1 + KL(A || B))
};

/// Per-feature histogram divergences on shared bins (categories as-is,
/// continuous on equal-width bins over the union range).
Divergences marginal_divergences(const Dataset& a, const Dataset& b, std::size_t bins,
                                 double pseudo_count = 1.0);

struct GeneratorConfig {
    double shrinkage = 0.05;
    std::uint64_t seed_offset = 0;  // added to the fit seed (dequantization variant)
};

struct QualityScore {
    double mmd = 0.0;
    double jsd = 0.0;
    double inv_kld = 0.0;
    GeneratorConfig config;
    nlohmann::json to_json() const;
};

struct SelectionResult {
    std::size_t best_index = 0;
    GeneratorConfig best;
    std::vector<QualityScore> scores;
};

/// Fit each candidate on fit_data, sample n_score rows, score MMD against
/// the holdout, and return the argmin (ties keep candidate order).
SelectionResult select_generator(const std::vector<GeneratorConfig>& candidates,
                                 const Dataset& fit_data, const Dataset& holdout,
                                 std::size_t n_score, std::uint64_t seed);

/// Default search grid: shrinkage {0.01, 0.05, 0.2} x dequantization seed
/// offsets {0, 1}.
std::vector<GeneratorConfig> default_generator_grid();

}  // namespace synteval
