#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "core/copula.hpp"
#include "core/predictor.hpp"
#include "core/subgroup.hpp"

namespace synteval {

struct MetricKind {
    enum class Kind { Accuracy, F1, DIRatio, EORatio };
    Kind kind = Kind::Accuracy;
    std::string sensitive;  // for DIRatio / EORatio

    static MetricKind accuracy() { return {}; }
    static MetricKind f1() { return {Kind::F1, {}}; }
    static MetricKind di_ratio(std::string sensitive) { return {Kind::DIRatio, std::move(sensitive)}; }
    static MetricKind eo_ratio(std::string sensitive) { return {Kind::EORatio, std::move(sensitive)}; }

    static MetricKind from_json(const nlohmann::json& doc);
    std::string name() const;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
    bool contains(double v) const { return v >= lo && v <= hi; }
};

struct PerfEstimate {
    double value = 0.0;
    std::string source;  // "real_test" | "synthetic" | "synthetic_plus" | "oracle" | baseline name
    std::size_t n_eval = 0;
    std::string subgroup;
    std::optional<Interval> interval;
    bool flagged = false;   // e.g. ill-defined F1 reported as 0
    std::string flag;
};

/// Eq.-1 style estimate: restrict the dataset to the subgroup and average
/// the per-row metric (weights honored). Errors with EmptySubgroup when the
/// restriction is empty.
PerfEstimate estimate(const Predictor& f, const Dataset& data, const SubgroupSpec& spec,
                      const MetricKind& metric);

/// Metric over a whole dataset (no restriction).
double metric_value(const Predictor& f, const Dataset& data, const MetricKind& metric,
                    bool* flagged = nullptr);

struct EnsembleEstimate {
    double mean = 0.0;
    double sd = 0.0;
    Interval interval;
    bool degenerate = false;  // K = 1: sd is structurally zero
    std::vector<double> member_values;
};

/// DGE estimate: each member generates a spec-conditional set of
/// n_per_member rows, the metric is evaluated per member, and the interval
/// is mean +- 2 sd clipped to [0,1].
EnsembleEstimate ensemble_estimate(const GeneratorEnsemble& ens, const Predictor& f,
                                   const SubgroupSpec& spec, const MetricKind& metric,
                                   std::size_t n_per_member, std::uint64_t seed);

/// Mean, unbiased sd and clipped mean +- 2 sd interval of member values.
EnsembleEstimate summarize_members(std::vector<double> member_values);

/// Balanced-rule sample size: the largest subgroup count in the reference
/// test set across the given subgroups.
std::size_t balanced_sample_size(const Dataset& reference,
                                 const std::vector<SubgroupSpec>& subgroups);

struct MatrixCell {
    bool null = true;
    double value = 0.0;
    std::size_t n = 0;
};

struct IntersectionalMatrix {
    std::string feature_a, feature_b;
    std::vector<std::string> labels_a, labels_b;
    std::vector<std::string> cell_subgroup_json;  // flattened a-major, for provenance
    std::vector<std::vector<MatrixCell>> cells;   // [a][b]
    std::size_t min_n = 100;

    static constexpr std::size_t kDefaultMinN = 100;
};

/// Subgroup specs for the axes' cross product. Continuous features are
/// binned into quartiles of the reference dataset.
struct MatrixAxes {
    std::vector<std::string> labels_a, labels_b;
    std::vector<std::vector<SubgroupSpec>> specs;  // [a][b]
};
MatrixAxes intersectional_axes(const Dataset& reference, const std::string& feature_a,
                               const std::string& feature_b);

/// Matrix from real data: a cell is Null iff its evaluation count < min_n.
IntersectionalMatrix intersectional_matrix(const Predictor& f, const Dataset& data,
                                           const std::string& feature_a,
                                           const std::string& feature_b,
                                           const MetricKind& metric, std::size_t min_n,
                                           const Dataset& reference);

/// Matrix from synthetic data: every producible cell is evaluated on
/// n_per_cell generated rows (per ensemble member, averaged).
IntersectionalMatrix intersectional_matrix_synthetic(const GeneratorEnsemble& ens,
                                                     const Predictor& f,
                                                     const std::string& feature_a,
                                                     const std::string& feature_b,
                                                     const MetricKind& metric,
                                                     std::size_t n_per_cell, std::uint64_t seed,
                                                     const Dataset& reference);

/// Mean absolute cell difference, skipping cells Null in either matrix.
/// Returns nullopt when no cell is comparable.
std::optional<double> matrix_mae(const IntersectionalMatrix& a, const IntersectionalMatrix& b);

/// Coverage = fraction of truths inside their closed interval;
/// width = mean interval length.
std::pair<double, double> coverage_width(const std::vector<Interval>& intervals,
                                         const std::vector<double>& truths);

enum class FairnessKind { DI, EO };
double fairness_ratio(const Predictor& f, const Dataset& data, FairnessKind kind,
                      const std::string& sensitive);

struct DensityBand {
    double q_lo = 0.0, q_hi = 1.0;
    double radius_lo = 0.0, radius_hi = 0.0;
    PerfEstimate estimate;
};

/// Partition a generated sample into latent-radius quantile bands and
/// evaluate the model per band. Band fractions follow the quantile grid
/// exactly (sorted-index split).
std::vector<DensityBand> density_band_report(const CopulaGenerator& gen, const Predictor& f,
                                             const std::vector<double>& quantiles,
                                             std::size_t n_total, const MetricKind& metric,
                                             std::uint64_t seed);

struct NeighborhoodOptions {
    std::optional<std::size_t> k;      // dataset source: k nearest rows
    std::optional<double> epsilon;     // ball radius (standardized metric)
    std::size_t generator_target = 10; // rows to retain from a generator
};

/// Performance near a point of interest. Dataset source: the k nearest rows
/// (or the epsilon-ball). Generator source: condition on the center's
/// categorical values and retain generated rows within epsilon.
PerfEstimate neighborhood_report(const Dataset& test, const Predictor& f, const Row& center,
                                 const NeighborhoodOptions& opts, const MetricKind& metric,
                                 const Dataset& reference);
PerfEstimate neighborhood_report(const CopulaGenerator& gen, const Predictor& f, const Row& center,
                                 const NeighborhoodOptions& opts, const MetricKind& metric,
                                 const Dataset& reference, std::uint64_t seed);

}  // namespace synteval
