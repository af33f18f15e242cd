#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "core/copula.hpp"
#include "core/evaluate.hpp"
#include "core/kde.hpp"

namespace synteval {

/// Single-feature marginal shift families.
struct MeanShift {
    double s = 0.0;  // continuous: p^s(x) = p^0(x - s)
};
struct LogitShift {
    double s = 0.0;  // binary: prevalence' = sigmoid(logit(p0) + s)
};
struct CategoricalReweight {
    std::string target;  // category whose probability becomes q
    double q = 0.5;      // in (0,1); the others are rescaled proportionally
};

struct MarginalShiftSpec {
    std::string feature;
    std::variant<MeanShift, LogitShift, CategoricalReweight> kind;

    static MarginalShiftSpec mean_shift(std::string feature, double s) {
        return {std::move(feature), MeanShift{s}};
    }
    static MarginalShiftSpec logit_shift(std::string feature, double s) {
        return {std::move(feature), LogitShift{s}};
    }
    static MarginalShiftSpec reweight(std::string feature, std::string target, double q) {
        return {std::move(feature), CategoricalReweight{std::move(target), q}};
    }
    static MarginalShiftSpec from_json(const nlohmann::json& doc);
};

/// Shifted probability vector for a categorical reweight: the target entry
/// is q and the rest keep their relative proportions.
std::vector<double> reweighted_probabilities(const std::vector<double>& base,
                                             std::size_t target_index, double q);

/// Draw n values of the shifted feature from the generator's fitted
/// marginal under the shift.
std::vector<Value> shift_marginal(const CopulaGenerator& gen, const MarginalShiftSpec& shift,
                                  std::size_t n, std::uint64_t seed);

/// Full shifted dataset: shifted draws of the feature, everything else from
/// the generator's conditional (p(rest | feature) held at the fit).
GeneratedSample generate_shifted(const CopulaGenerator& gen, const MarginalShiftSpec& shift,
                                 std::size_t n, std::uint64_t seed);

/// Target-domain priors for observed features. Empirical entries that share
/// a source id are drawn jointly (same row index).
struct NormalPrior {
    double mu = 0.0, sigma = 1.0;
};
struct BernoulliPrior {
    double p = 0.5;
};
struct EmpiricalPrior {
    std::vector<Value> values;
    int joint_source = -1;  // >= 0: entries with equal ids draw the same row
};

struct PriorEntry {
    std::string feature;
    std::variant<NormalPrior, BernoulliPrior, EmpiricalPrior> dist;
};

struct PriorMarginalSpec {
    std::vector<PriorEntry> entries;

    static PriorMarginalSpec from_json(const nlohmann::json& doc, const Schema& schema);
    /// Joint empirical priors over the named columns of a target sample.
    static PriorMarginalSpec from_observed(const Dataset& target,
                                           const std::vector<std::string>& features);
};

/// Draw the observed features from their priors, then generate the rest
/// conditionally.
GeneratedSample generate_with_prior(const CopulaGenerator& gen, const PriorMarginalSpec& priors,
                                    std::size_t n, std::uint64_t seed);

/// Density-ratio model p_s(x_c)/p_0(x_c) for rejection sampling. Continuous
/// factors use a Gaussian KDE of the source; discrete factors use
/// Laplace-smoothed frequency tables. Multi-feature targets multiply
/// per-feature ratios.
class ShiftTarget {
public:
    static ShiftTarget from_marginal_shift(const Dataset& source, const MarginalShiftSpec& shift,
                                           double bandwidth /* <=0 => Silverman */);
    static ShiftTarget from_priors(const Dataset& source, const PriorMarginalSpec& priors,
                                   double bandwidth);

    double ratio(const Dataset& data, std::size_t row) const;

private:
    struct ContinuousFactor {
        std::size_t feature;
        Kde1d source_kde;
        double mean_shift = 0.0;                   // p_s(x) = kde(x - s)
        std::optional<NormalPrior> normal_target;  // p_s = analytic normal
        std::optional<Kde1d> target_kde;           // p_s = KDE of prior draws
    };
    struct DiscreteFactor {
        std::size_t feature;
        std::vector<double> p0, ps;
    };
    std::vector<ContinuousFactor> continuous_;
    std::vector<DiscreteFactor> discrete_;
};

/// Algorithm: fit the source density over X_c, bound the ratio by its
/// maximum over the source rows, then accept row draws with probability
/// ratio / M. Draws are with replacement; stalls raise AcceptanceStall.
Dataset rejection_sample(const Dataset& source, const ShiftTarget& target, std::size_t n_s,
                         std::uint64_t seed);

enum class ShiftBucket { Minus, PlusMinus, Plus };
const char* bucket_name(ShiftBucket b);

/// Bucket of a shifted mean against the source feature's quartiles:
/// below Q1 -> Minus, above Q3 -> Plus, otherwise (ties included) PlusMinus.
ShiftBucket bucket_of(const Dataset& source, const std::string& feature, double shifted_mean);

struct SweepPoint {
    double s = 0.0;
    ShiftBucket bucket = ShiftBucket::PlusMinus;
    double estimate = 0.0;
    double sd = 0.0;
    std::size_t members = 1;
};

/// Default sweep grid: `points` values of s uniformly spaced over
/// [min(feature) - mean, max(feature) - mean] of the reference data.
std::vector<double> default_shift_grid(const Dataset& reference, const std::string& feature,
                                       std::size_t points = 21);

/// One generate-shifted + evaluate per grid point, sorted by s. The shift
/// family is inferred from the feature kind: mean shift for continuous,
/// logit shift for binary; categorical features need `category`, and the
/// grid is then interpreted as target probabilities q in (0,1).
std::vector<SweepPoint> sensitivity_sweep(const GeneratorEnsemble& ens, const Predictor& f,
                                          const std::string& feature,
                                          const std::vector<double>& s_grid, std::size_t n,
                                          const MetricKind& metric, const Dataset& reference,
                                          std::uint64_t seed,
                                          const std::optional<std::string>& category = std::nullopt);

}  // namespace synteval
