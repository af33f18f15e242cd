#include "core/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/stats.hpp"

namespace synteval {

BaselineResult bootstrap_interval(const Predictor& f, const Dataset& data,
                                  const SubgroupSpec& spec, const MetricKind& metric,
                                  std::size_t b, std::uint64_t seed) {
    if (b < 2) throw_config("BadConfig", "bootstrap needs B >= 2");
    if (subgroup_indices(data, spec).empty())
        throw_data("EmptySubgroup", "bootstrap subgroup is empty in the data");

    Rng rng(Rng::derive(seed, /*stream=*/14));
    const std::size_t n = data.n_rows();
    std::vector<double> values;
    values.reserve(b);
    std::vector<std::size_t> rows(n);
    for (std::size_t rep = 0; rep < b; ++rep) {
        for (auto& r : rows) r = rng.uniform_index(n);
        const Dataset resample = data.take(rows);
        const Dataset restricted = subgroup_filter(resample, spec);
        if (restricted.empty()) continue;  // vanishing-probability event for desk-scale groups
        values.push_back(metric_value(f, restricted, metric, nullptr));
    }
    if (values.size() < 2)
        throw_data("EmptySubgroup", "bootstrap resamples kept missing the subgroup");

    BaselineResult out;
    out.name = "Bootstrap";
    out.inputs_used = "none";
    out.estimate = mean(values);
    const double sd = sample_sd(values);
    out.interval = Interval{std::clamp(out.estimate - 2.0 * sd, 0.0, 1.0),
                            std::clamp(out.estimate + 2.0 * sd, 0.0, 1.0)};
    return out;
}

namespace {

double source_accuracy(const Predictor& f, const Dataset& source) {
    double correct = 0.0;
    for (std::size_t r = 0; r < source.n_rows(); ++r)
        if (f.predict(source, r) == source.label(r)) correct += 1.0;
    return correct / static_cast<double>(source.n_rows());
}

std::vector<double> confidences(const Predictor& f, const Dataset& d) {
    std::vector<double> out(d.n_rows());
    for (std::size_t r = 0; r < d.n_rows(); ++r) out[r] = f.confidence(d, r);
    return out;
}

}  // namespace

BaselineResult atc_predict(const Predictor& f, const Dataset& source_labeled,
                           const Dataset& target_unlabeled) {
    if (source_labeled.empty() || target_unlabeled.empty())
        throw_data("Empty", "ATC needs non-empty source and target");
    const double acc = source_accuracy(f, source_labeled);
    const std::vector<double> src_conf = confidences(f, source_labeled);
    const double threshold = quantile_type7(src_conf, std::clamp(1.0 - acc, 0.0, 1.0));
    const std::vector<double> tgt_conf = confidences(f, target_unlabeled);
    double above = 0.0;
    for (double c : tgt_conf)
        if (c > threshold) above += 1.0;

    BaselineResult out;
    out.name = "ATC";
    out.inputs_used = "unlabeled_target";
    out.estimate = above / static_cast<double>(tgt_conf.size());
    return out;
}

BaselineResult doc_predict(const Predictor& f, const Dataset& source_labeled,
                           const Dataset& target_unlabeled) {
    if (source_labeled.empty() || target_unlabeled.empty())
        throw_data("Empty", "DOC needs non-empty source and target");
    const double acc = source_accuracy(f, source_labeled);
    const double gap = mean(confidences(f, target_unlabeled)) -
                       mean(confidences(f, source_labeled));
    BaselineResult out;
    out.name = "DOC";
    out.inputs_used = "unlabeled_target";
    const double raw = acc + gap;
    out.estimate = std::clamp(raw, 0.0, 1.0);
    if (raw != out.estimate) {
        out.flagged = true;
        out.flag = "clipped";
    }
    return out;
}

BaselineResult im_predict(const Predictor& f, const Dataset& source_labeled,
                          const Dataset& target_features,
                          const std::vector<std::string>& features, std::size_t bins) {
    if (bins < 2) throw_config("BadBins", "IM needs >= 2 bins");
    if (source_labeled.empty() || target_features.empty())
        throw_data("Empty", "IM needs non-empty source and target");
    const Schema& schema = source_labeled.schema();

    // per-feature shared-bin histograms; weights multiply across features
    struct Factor {
        std::size_t feature;
        bool discrete;
        double lo = 0.0, width = 1.0;
        std::vector<double> ratio;  // per bin: p_tgt / p_src, Laplace-smoothed
    };
    std::vector<Factor> factors;
    for (const std::string& name : features) {
        const std::size_t fi = schema.index_of(name);
        Factor factor;
        factor.feature = fi;
        factor.discrete = schema.feature(fi).is_discrete();
        std::size_t n_bins;
        if (factor.discrete) {
            n_bins = schema.feature(fi).cardinality();
        } else {
            const auto cs = source_labeled.numeric_column(fi);
            const auto ct = target_features.numeric_column(fi);
            double lo = std::min(*std::min_element(cs.begin(), cs.end()),
                                 *std::min_element(ct.begin(), ct.end()));
            double hi = std::max(*std::max_element(cs.begin(), cs.end()),
                                 *std::max_element(ct.begin(), ct.end()));
            if (hi <= lo) hi = lo + 1.0;
            factor.lo = lo;
            factor.width = (hi - lo) / static_cast<double>(bins);
            n_bins = bins;
        }
        std::vector<double> hs(n_bins, 1.0), ht(n_bins, 1.0);
        auto bin_of = [&](const Dataset& d, std::size_t r) {
            if (factor.discrete) return static_cast<std::size_t>(d.category(factor.feature, r));
            auto k = static_cast<std::size_t>((d.numeric(factor.feature, r) - factor.lo) /
                                              factor.width);
            return std::min(k, n_bins - 1);
        };
        for (std::size_t r = 0; r < source_labeled.n_rows(); ++r) hs[bin_of(source_labeled, r)] += 1.0;
        for (std::size_t r = 0; r < target_features.n_rows(); ++r)
            ht[bin_of(target_features, r)] += 1.0;
        double zs = 0.0, zt = 0.0;
        for (double v : hs) zs += v;
        for (double v : ht) zt += v;
        factor.ratio.resize(n_bins);
        for (std::size_t k = 0; k < n_bins; ++k) factor.ratio[k] = (ht[k] / zt) / (hs[k] / zs);
        factors.push_back(std::move(factor));
    }

    double weighted_correct = 0.0, weight_total = 0.0;
    for (std::size_t r = 0; r < source_labeled.n_rows(); ++r) {
        double w = 1.0;
        for (const Factor& factor : factors) {
            std::size_t k;
            if (factor.discrete) {
                k = static_cast<std::size_t>(source_labeled.category(factor.feature, r));
            } else {
                k = static_cast<std::size_t>(
                    (source_labeled.numeric(factor.feature, r) - factor.lo) / factor.width);
                k = std::min(k, factor.ratio.size() - 1);
            }
            w *= factor.ratio[k];
        }
        weight_total += w;
        if (f.predict(source_labeled, r) == source_labeled.label(r)) weighted_correct += w;
    }

    BaselineResult out;
    out.name = "IM";
    out.inputs_used = "unlabeled_target";
    out.estimate = weighted_correct / weight_total;
    return out;
}

BaselineResult ms_baseline(const Dataset& test, const Predictor& f, const std::string& feature,
                           double s, const MetricKind& metric) {
    const std::size_t fi = test.schema().index_of(feature);
    if (test.schema().feature(fi).type != FeatureType::Continuous)
        throw_data("NotContinuous", "mean-shift baseline needs a continuous feature");
    Dataset shifted(test.schema_ptr());
    shifted.reserve(test.n_rows());
    for (std::size_t r = 0; r < test.n_rows(); ++r) {
        Row row = test.row(r);
        row[fi] = std::get<double>(row[fi]) + s;
        shifted.append(row, test.weight(r));
    }
    BaselineResult out;
    out.name = "MS";
    out.inputs_used = "none";
    out.estimate = metric_value(f, shifted, metric, nullptr);
    return out;
}

BaselineResult rs_baseline(const Dataset& test, const Predictor& f, const ShiftTarget& target,
                           std::size_t n_s, const MetricKind& metric, std::uint64_t seed) {
    const Dataset resampled = rejection_sample(test, target, n_s, seed);
    BaselineResult out;
    out.name = "RS";
    out.inputs_used = "none";
    out.estimate = metric_value(f, resampled, metric, nullptr);
    return out;
}

}  // namespace synteval
