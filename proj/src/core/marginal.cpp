#include "core/marginal.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "core/error.hpp"
#include "core/stats.hpp"

namespace synteval {

namespace {
constexpr double kTailSds = 8.0;
constexpr double kUnitEps = 1e-16;
}  // namespace

ContinuousMarginal ContinuousMarginal::fit(std::span<const double> values) {
    if (values.empty()) throw_data("Empty", "cannot fit marginal on empty column");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();

    ContinuousMarginal m;
    m.tail_sd_ = std::max(sample_sd(sorted), 1e-12);

    // collapse ties to their average mid-rank
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && sorted[j] == sorted[i]) ++j;
        const double rank_sum =
            0.5 * static_cast<double>(i + j - 1) + 0.5;  // mean of i..j-1, then +0.5
        m.values_.push_back(sorted[i]);
        m.cdf_.push_back(rank_sum / static_cast<double>(n));
        i = j;
    }
    return m;
}

double ContinuousMarginal::support_low() const { return values_.front() - kTailSds * tail_sd_; }
double ContinuousMarginal::support_high() const { return values_.back() + kTailSds * tail_sd_; }

double ContinuousMarginal::cdf(double v) const {
    const double lo = values_.front(), hi = values_.back();
    const double p_lo = cdf_.front(), p_hi = cdf_.back();
    if (v < lo) return 2.0 * p_lo * normal_cdf((v - lo) / tail_sd_);
    if (v > hi) return 1.0 - 2.0 * (1.0 - p_hi) * normal_cdf((hi - v) / tail_sd_);
    auto it = std::lower_bound(values_.begin(), values_.end(), v);
    const std::size_t k = static_cast<std::size_t>(it - values_.begin());
    if (it != values_.end() && *it == v) return cdf_[k];
    // v strictly between values_[k-1] and values_[k]
    const double frac = (v - values_[k - 1]) / (values_[k] - values_[k - 1]);
    return cdf_[k - 1] + frac * (cdf_[k] - cdf_[k - 1]);
}

double ContinuousMarginal::inv_cdf(double u) const {
    u = std::clamp(u, kUnitEps, 1.0 - kUnitEps);
    const double p_lo = cdf_.front(), p_hi = cdf_.back();
    if (u < p_lo) {
        const double z = normal_quantile(std::max(u / (2.0 * p_lo), kUnitEps));
        return std::max(values_.front() + tail_sd_ * z, support_low());
    }
    if (u > p_hi) {
        const double q = 1.0 - (1.0 - u) / (2.0 * (1.0 - p_hi));
        const double z = normal_quantile(std::min(q, 1.0 - kUnitEps));
        return std::min(values_.back() + tail_sd_ * z, support_high());
    }
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    const std::size_t k = static_cast<std::size_t>(it - cdf_.begin());
    if (cdf_[k] == u || k == 0) return values_[k];
    const double frac = (u - cdf_[k - 1]) / (cdf_[k] - cdf_[k - 1]);
    return values_[k - 1] + frac * (values_[k] - values_[k - 1]);
}

double ContinuousMarginal::midrank(double v) const {
    auto it = std::lower_bound(values_.begin(), values_.end(), v);
    if (it != values_.end() && *it == v)
        return cdf_[static_cast<std::size_t>(it - values_.begin())];
    return cdf(v);
}

nlohmann::json ContinuousMarginal::to_json() const {
    return nlohmann::json{
        {"kind", "continuous"}, {"values", values_}, {"cdf", cdf_}, {"tail_sd", tail_sd_}};
}

ContinuousMarginal ContinuousMarginal::from_json(const nlohmann::json& doc) {
    ContinuousMarginal m;
    m.values_ = doc.at("values").get<std::vector<double>>();
    m.cdf_ = doc.at("cdf").get<std::vector<double>>();
    m.tail_sd_ = doc.at("tail_sd").get<double>();
    if (m.values_.empty() || m.values_.size() != m.cdf_.size())
        throw_data("BadGeneratorFile", "inconsistent continuous marginal");
    return m;
}

CategoricalMarginal CategoricalMarginal::fit(std::span<const std::int32_t> values,
                                             std::size_t n_categories, double pseudo_count) {
    if (values.empty()) throw_data("Empty", "cannot fit marginal on empty column");
    std::vector<double> counts(n_categories, pseudo_count);
    for (std::int32_t v : values) counts[static_cast<std::size_t>(v)] += 1.0;
    const double total =
        static_cast<double>(values.size()) + pseudo_count * static_cast<double>(n_categories);
    for (double& c : counts) c /= total;
    return from_probabilities(std::move(counts));
}

CategoricalMarginal CategoricalMarginal::from_probabilities(std::vector<double> prob) {
    double total = 0.0;
    for (double p : prob) {
        if (!(p > 0.0)) throw_data("BadProbability", "category probability must be > 0");
        total += p;
    }
    if (std::fabs(total - 1.0) > 1e-9)
        throw_data("BadProbability", "category probabilities must sum to 1");
    // Stored as given (no renormalization) so serialization round trips
    // bit-exactly; bounds absorb the residual in the final interval.
    CategoricalMarginal m;
    m.prob_ = std::move(prob);
    m.rebuild_bounds();
    return m;
}

void CategoricalMarginal::rebuild_bounds() {
    bounds_.assign(prob_.size() + 1, 0.0);
    double acc = 0.0;
    for (std::size_t j = 0; j < prob_.size(); ++j) {
        acc += prob_[j];
        bounds_[j + 1] = acc;
    }
    bounds_.back() = 1.0;
}

std::pair<double, double> CategoricalMarginal::interval(std::int32_t cat) const {
    const auto c = static_cast<std::size_t>(cat);
    return {bounds_[c], bounds_[c + 1]};
}

double CategoricalMarginal::interval_midpoint(std::int32_t cat) const {
    const auto [lo, hi] = interval(cat);
    return 0.5 * (lo + hi);
}

std::int32_t CategoricalMarginal::inv(double u) const {
    u = std::clamp(u, 0.0, 1.0 - kUnitEps);
    auto it = std::upper_bound(bounds_.begin() + 1, bounds_.end(), u);
    std::size_t k = static_cast<std::size_t>(it - bounds_.begin()) - 1;
    if (k >= prob_.size()) k = prob_.size() - 1;
    return static_cast<std::int32_t>(k);
}

nlohmann::json CategoricalMarginal::to_json() const {
    return nlohmann::json{{"kind", "categorical"}, {"prob", prob_}};
}

CategoricalMarginal CategoricalMarginal::from_json(const nlohmann::json& doc) {
    return from_probabilities(doc.at("prob").get<std::vector<double>>());
}

}  // namespace synteval
