#include "core/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "core/error.hpp"
#include "core/generate.hpp"
#include "core/rng.hpp"
#include "core/stats.hpp"

namespace synteval {

MetricKind MetricKind::from_json(const nlohmann::json& doc) {
    std::string kind;
    std::string sensitive;
    if (doc.is_string()) {
        kind = doc.get<std::string>();
    } else {
        kind = doc.at("kind").get<std::string>();
        sensitive = doc.value("sensitive", "");
    }
    if (kind == "accuracy") return accuracy();
    if (kind == "f1") return f1();
    if (kind == "di_ratio") {
        if (sensitive.empty()) throw_config("BadMetric", "di_ratio needs 'sensitive'");
        return di_ratio(sensitive);
    }
    if (kind == "eo_ratio") {
        if (sensitive.empty()) throw_config("BadMetric", "eo_ratio needs 'sensitive'");
        return eo_ratio(sensitive);
    }
    throw_config("BadMetric", "unknown metric '" + kind + "'");
}

std::string MetricKind::name() const {
    switch (kind) {
        case Kind::Accuracy: return "accuracy";
        case Kind::F1: return "f1";
        case Kind::DIRatio: return "di_ratio";
        case Kind::EORatio: return "eo_ratio";
    }
    return "accuracy";
}

namespace {

void require_binary_label(const Dataset& data, const char* what) {
    if (data.schema().label().cardinality() != 2)
        throw_data("BadMetric", std::string(what) + " requires a binary label");
}

double weighted_accuracy(const Predictor& f, const Dataset& data) {
    double correct = 0.0, total = 0.0;
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
        const double w = data.weight(r);
        if (f.predict(data, r) == data.label(r)) correct += w;
        total += w;
    }
    return correct / total;
}

double weighted_f1(const Predictor& f, const Dataset& data, bool* flagged) {
    require_binary_label(data, "F1");
    const std::int32_t pos = data.schema().positive_class();
    double tp = 0.0, fp = 0.0, fn = 0.0;
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
        const double w = data.weight(r);
        const bool pred_pos = f.predict(data, r) == pos;
        const bool is_pos = data.label(r) == pos;
        if (pred_pos && is_pos) tp += w;
        else if (pred_pos) fp += w;
        else if (is_pos) fn += w;
    }
    if (tp + fp == 0.0 || tp + fn == 0.0) {
        // ill-defined F1 reported as 0 with a flag so sweeps stay total
        if (flagged) *flagged = true;
        return 0.0;
    }
    const double precision = tp / (tp + fp);
    const double recall = tp / (tp + fn);
    if (precision + recall == 0.0) {
        if (flagged) *flagged = true;
        return 0.0;
    }
    return 2.0 * precision * recall / (precision + recall);
}

double fairness_value(const Predictor& f, const Dataset& data, FairnessKind kind,
                      const std::string& sensitive) {
    require_binary_label(data, "fairness ratio");
    const Schema& schema = data.schema();
    const std::size_t sf = schema.index_of(sensitive);
    if (!schema.feature(sf).is_discrete())
        throw_data("BadMetric", "sensitive feature must be categorical");
    const std::int32_t pos = schema.positive_class();
    const std::size_t m = schema.feature(sf).cardinality();

    struct GroupCounts {
        double n = 0.0, selected = 0.0;
        double pos_n = 0.0, tp = 0.0;
        double neg_n = 0.0, fp = 0.0;
    };
    std::vector<GroupCounts> groups(m);
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
        const double w = data.weight(r);
        GroupCounts& g = groups[static_cast<std::size_t>(data.category(sf, r))];
        const bool pred_pos = f.predict(data, r) == pos;
        g.n += w;
        if (pred_pos) g.selected += w;
        if (data.label(r) == pos) {
            g.pos_n += w;
            if (pred_pos) g.tp += w;
        } else {
            g.neg_n += w;
            if (pred_pos) g.fp += w;
        }
    }

    std::size_t present = 0;
    for (const auto& g : groups)
        if (g.n > 0.0) ++present;
    if (present < 2)
        throw_data("UndefinedRate", "fairness ratio needs >= 2 sensitive groups present");

    if (kind == FairnessKind::DI) {
        double lo = 1.0, hi = 0.0;
        for (const auto& g : groups) {
            if (g.n == 0.0) continue;
            const double rate = g.selected / g.n;
            lo = std::min(lo, rate);
            hi = std::max(hi, rate);
        }
        if (hi == 0.0) throw_data("UndefinedRate", "no group selects the positive class");
        return lo / hi;
    }

    double tpr_lo = 1.0, tpr_hi = 0.0, fpr_lo = 1.0, fpr_hi = 0.0;
    for (const auto& g : groups) {
        if (g.n == 0.0) continue;
        if (g.pos_n == 0.0 || g.neg_n == 0.0)
            throw_data("UndefinedRate", "a sensitive group lacks positives or negatives");
        const double tpr = g.tp / g.pos_n;
        const double fpr = g.fp / g.neg_n;
        tpr_lo = std::min(tpr_lo, tpr);
        tpr_hi = std::max(tpr_hi, tpr);
        fpr_lo = std::min(fpr_lo, fpr);
        fpr_hi = std::max(fpr_hi, fpr);
    }
    const double tpr_ratio = tpr_hi > 0.0 ? tpr_lo / tpr_hi : 1.0;
    const double fpr_ratio = fpr_hi > 0.0 ? fpr_lo / fpr_hi : 1.0;
    return std::min(tpr_ratio, fpr_ratio);
}

}  // namespace

double metric_value(const Predictor& f, const Dataset& data, const MetricKind& metric,
                    bool* flagged) {
    if (data.empty()) throw_data("EmptySubgroup", "metric over an empty dataset");
    switch (metric.kind) {
        case MetricKind::Kind::Accuracy: return weighted_accuracy(f, data);
        case MetricKind::Kind::F1: return weighted_f1(f, data, flagged);
        case MetricKind::Kind::DIRatio:
            return fairness_value(f, data, FairnessKind::DI, metric.sensitive);
        case MetricKind::Kind::EORatio:
            return fairness_value(f, data, FairnessKind::EO, metric.sensitive);
    }
    throw_config("BadMetric", "unhandled metric kind");
}

double fairness_ratio(const Predictor& f, const Dataset& data, FairnessKind kind,
                      const std::string& sensitive) {
    return fairness_value(f, data, kind, sensitive);
}

PerfEstimate estimate(const Predictor& f, const Dataset& data, const SubgroupSpec& spec,
                      const MetricKind& metric) {
    const Dataset restricted = subgroup_filter(data, spec);
    if (restricted.empty())
        throw_data("EmptySubgroup",
                   "no rows in subgroup '" + spec.label(data.schema()) + "'");
    PerfEstimate out;
    out.flagged = false;
    out.value = metric_value(f, restricted, metric, &out.flagged);
    if (out.flagged) out.flag = "ill_defined_metric_reported_as_zero";
    out.source = "real_test";
    out.n_eval = restricted.n_rows();
    out.subgroup = spec.label(data.schema());
    return out;
}

std::size_t balanced_sample_size(const Dataset& reference,
                                 const std::vector<SubgroupSpec>& subgroups) {
    std::size_t best = 0;
    for (const auto& spec : subgroups)
        best = std::max(best, subgroup_indices(reference, spec).size());
    if (best == 0) throw_data("EmptySubgroup", "no subgroup has rows in the reference set");
    return best;
}

EnsembleEstimate ensemble_estimate(const GeneratorEnsemble& ens, const Predictor& f,
                                   const SubgroupSpec& spec, const MetricKind& metric,
                                   std::size_t n_per_member, std::uint64_t seed) {
    if (n_per_member < 1) throw_config("BadSampleSize", "n_per_member must be >= 1");
    std::vector<double> member_values;
    member_values.reserve(ens.size());
    // common random numbers across members: the spread then measures model
    // disagreement alone, and identical members give exactly sd = 0
    const std::uint64_t gen_seed = Rng::derive(seed, 100);
    for (std::size_t k = 0; k < ens.size(); ++k) {
        const GeneratedSample sample =
            generate_for_spec(ens.member(k), spec, n_per_member, gen_seed);
        member_values.push_back(metric_value(f, sample.data, metric, nullptr));
    }
    return summarize_members(std::move(member_values));
}

EnsembleEstimate summarize_members(std::vector<double> member_values) {
    if (member_values.empty()) throw_data("Empty", "no member estimates");
    EnsembleEstimate out;
    out.member_values = std::move(member_values);
    out.mean = mean(out.member_values);
    out.sd = sample_sd(out.member_values);
    out.degenerate = out.member_values.size() < 2;
    out.interval = {std::clamp(out.mean - 2.0 * out.sd, 0.0, 1.0),
                    std::clamp(out.mean + 2.0 * out.sd, 0.0, 1.0)};
    return out;
}

MatrixAxes intersectional_axes(const Dataset& reference, const std::string& feature_a,
                               const std::string& feature_b) {
    const Schema& schema = reference.schema();

    struct Axis {
        std::vector<std::string> labels;
        std::vector<SubgroupSpec> atoms;
    };
    auto build_axis = [&](const std::string& name) {
        Axis axis;
        const std::size_t f = schema.index_of(name);
        if (schema.feature(f).is_discrete()) {
            for (const std::string& cat : schema.feature(f).categories) {
                axis.labels.push_back(cat);
                axis.atoms.push_back(SubgroupSpec::category_equals(schema, name, cat));
            }
        } else {
            // quartile bins over the reference distribution
            const double q1 = reference.empirical_quantile(name, 0.25);
            const double q2 = reference.empirical_quantile(name, 0.50);
            const double q3 = reference.empirical_quantile(name, 0.75);
            const double inf = std::numeric_limits<double>::infinity();
            const double edges[5] = {-inf, q1, q2, q3, inf};
            const char* tags[4] = {"Q1", "Q2", "Q3", "Q4"};
            for (int b = 0; b < 4; ++b) {
                axis.labels.push_back(std::string(name) + ":" + tags[b]);
                SubgroupSpec s;
                s.add_interval(schema, name, edges[b], edges[b + 1], /*low_closed=*/b > 0,
                               /*high_closed=*/b == 3);
                axis.atoms.push_back(std::move(s));
            }
        }
        return axis;
    };

    const Axis a = build_axis(feature_a);
    const Axis b = build_axis(feature_b);
    MatrixAxes axes;
    axes.labels_a = a.labels;
    axes.labels_b = b.labels;
    axes.specs.resize(a.atoms.size());
    for (std::size_t i = 0; i < a.atoms.size(); ++i) {
        for (std::size_t j = 0; j < b.atoms.size(); ++j) {
            SubgroupSpec cell = a.atoms[i];
            cell.append(b.atoms[j]);
            axes.specs[i].push_back(std::move(cell));
        }
    }
    return axes;
}

IntersectionalMatrix intersectional_matrix(const Predictor& f, const Dataset& data,
                                           const std::string& feature_a,
                                           const std::string& feature_b,
                                           const MetricKind& metric, std::size_t min_n,
                                           const Dataset& reference) {
    const MatrixAxes axes = intersectional_axes(reference, feature_a, feature_b);
    IntersectionalMatrix out;
    out.feature_a = feature_a;
    out.feature_b = feature_b;
    out.labels_a = axes.labels_a;
    out.labels_b = axes.labels_b;
    out.min_n = min_n;
    out.cells.resize(axes.labels_a.size());
    for (std::size_t i = 0; i < axes.labels_a.size(); ++i) {
        out.cells[i].resize(axes.labels_b.size());
        for (std::size_t j = 0; j < axes.labels_b.size(); ++j) {
            const std::vector<std::size_t> idx = subgroup_indices(data, axes.specs[i][j]);
            MatrixCell& cell = out.cells[i][j];
            cell.n = idx.size();
            if (idx.size() < min_n) continue;
            cell.null = false;
            cell.value = metric_value(f, data.take(idx), metric, nullptr);
        }
    }
    return out;
}

IntersectionalMatrix intersectional_matrix_synthetic(const GeneratorEnsemble& ens,
                                                     const Predictor& f,
                                                     const std::string& feature_a,
                                                     const std::string& feature_b,
                                                     const MetricKind& metric,
                                                     std::size_t n_per_cell, std::uint64_t seed,
                                                     const Dataset& reference) {
    const MatrixAxes axes = intersectional_axes(reference, feature_a, feature_b);
    IntersectionalMatrix out;
    out.feature_a = feature_a;
    out.feature_b = feature_b;
    out.labels_a = axes.labels_a;
    out.labels_b = axes.labels_b;
    out.min_n = n_per_cell;
    out.cells.resize(axes.labels_a.size());
    std::size_t cell_id = 0;
    for (std::size_t i = 0; i < axes.labels_a.size(); ++i) {
        out.cells[i].resize(axes.labels_b.size());
        for (std::size_t j = 0; j < axes.labels_b.size(); ++j, ++cell_id) {
            const EnsembleEstimate e = ensemble_estimate(
                ens, f, axes.specs[i][j], metric, n_per_cell, Rng::derive(seed, 500 + cell_id));
            MatrixCell& cell = out.cells[i][j];
            cell.null = false;
            cell.value = e.mean;
            cell.n = n_per_cell * ens.size();
        }
    }
    return out;
}

std::optional<double> matrix_mae(const IntersectionalMatrix& a, const IntersectionalMatrix& b) {
    if (a.cells.size() != b.cells.size()) throw_data("LengthMismatch", "matrix shapes differ");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        if (a.cells[i].size() != b.cells[i].size())
            throw_data("LengthMismatch", "matrix shapes differ");
        for (std::size_t j = 0; j < a.cells[i].size(); ++j) {
            if (a.cells[i][j].null || b.cells[i][j].null) continue;
            sum += std::fabs(a.cells[i][j].value - b.cells[i][j].value);
            ++count;
        }
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
}

std::pair<double, double> coverage_width(const std::vector<Interval>& intervals,
                                         const std::vector<double>& truths) {
    if (intervals.size() != truths.size() || intervals.empty())
        throw_data("LengthMismatch", "coverage_width needs equal non-empty lists");
    double covered = 0.0, width = 0.0;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        if (intervals[i].contains(truths[i])) covered += 1.0;
        width += std::fabs(intervals[i].width());
    }
    const double n = static_cast<double>(intervals.size());
    return {covered / n, width / n};
}

std::vector<DensityBand> density_band_report(const CopulaGenerator& gen, const Predictor& f,
                                             const std::vector<double>& quantiles,
                                             std::size_t n_total, const MetricKind& metric,
                                             std::uint64_t seed) {
    if (quantiles.size() < 2 || quantiles.front() != 0.0 || quantiles.back() != 1.0)
        throw_config("BadGrid", "quantile grid must start at 0 and end at 1");
    for (std::size_t i = 1; i < quantiles.size(); ++i)
        if (!(quantiles[i] > quantiles[i - 1]))
            throw_config("BadGrid", "quantile grid must be strictly increasing");
    const std::size_t bands = quantiles.size() - 1;
    if (n_total < bands * 50)
        throw_config("BadSampleSize", "n_total must be >= 50 rows per band");

    const GeneratedSample sample = gen.sample(n_total, seed);
    std::vector<double> radii(n_total);
    for (std::size_t r = 0; r < n_total; ++r)
        radii[r] = gen.latent_radius(sample.latents.row(static_cast<Eigen::Index>(r)).transpose());

    std::vector<std::size_t> order(n_total);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return radii[x] != radii[y] ? radii[x] < radii[y] : x < y;
    });

    std::vector<DensityBand> out;
    for (std::size_t b = 0; b < bands; ++b) {
        const std::size_t begin =
            static_cast<std::size_t>(quantiles[b] * static_cast<double>(n_total));
        const std::size_t end =
            b + 1 == bands ? n_total
                           : static_cast<std::size_t>(quantiles[b + 1] * static_cast<double>(n_total));
        std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                      order.begin() + static_cast<std::ptrdiff_t>(end));
        DensityBand band;
        band.q_lo = quantiles[b];
        band.q_hi = quantiles[b + 1];
        band.radius_lo = radii[rows.front()];
        band.radius_hi = radii[rows.back()];
        const Dataset band_data = sample.data.take(rows);
        band.estimate.value = metric_value(f, band_data, metric, &band.estimate.flagged);
        band.estimate.source = "synthetic";
        band.estimate.n_eval = band_data.n_rows();
        band.estimate.subgroup = "density_band";
        out.push_back(std::move(band));
    }
    return out;
}

PerfEstimate neighborhood_report(const Dataset& test, const Predictor& f, const Row& center,
                                 const NeighborhoodOptions& opts, const MetricKind& metric,
                                 const Dataset& reference) {
    if (!opts.k && !opts.epsilon) throw_config("BadNeighborhood", "need k or epsilon");
    const std::vector<double> scale = neighborhood_scales(reference);
    const Schema& schema = test.schema();
    std::vector<std::pair<double, std::size_t>> dists(test.n_rows());
    for (std::size_t r = 0; r < test.n_rows(); ++r)
        dists[r] = {standardized_distance(schema, test.row(r), center, scale), r};

    std::vector<std::size_t> rows;
    if (opts.k) {
        const std::size_t k = std::min(*opts.k, test.n_rows());
        if (k < 1) throw_config("BadNeighborhood", "k must be >= 1");
        std::partial_sort(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(k),
                          dists.end());
        for (std::size_t i = 0; i < k; ++i) rows.push_back(dists[i].second);
        std::sort(rows.begin(), rows.end());
    } else {
        for (const auto& [d, r] : dists)
            if (d <= *opts.epsilon) rows.push_back(r);
        if (rows.empty()) throw_data("EmptySubgroup", "no test rows within epsilon");
    }
    const Dataset near = test.take(rows);
    PerfEstimate out;
    out.value = metric_value(f, near, metric, &out.flagged);
    out.source = "real_test";
    out.n_eval = near.n_rows();
    out.subgroup = "neighborhood";
    return out;
}

PerfEstimate neighborhood_report(const CopulaGenerator& gen, const Predictor& f, const Row& center,
                                 const NeighborhoodOptions& opts, const MetricKind& metric,
                                 const Dataset& reference, std::uint64_t seed) {
    if (!opts.epsilon || !(*opts.epsilon > 0.0))
        throw_config("BadNeighborhood", "generator source needs epsilon > 0");
    const std::size_t target = std::max<std::size_t>(opts.generator_target, 1);

    SubgroupSpec spec;
    spec.add_neighborhood(center, *opts.epsilon, neighborhood_scales(reference));
    const GeneratedSample sample = generate_for_spec(gen, spec, target, seed);
    PerfEstimate out;
    out.value = metric_value(f, sample.data, metric, &out.flagged);
    out.source = "synthetic";
    out.n_eval = sample.data.n_rows();
    out.subgroup = "neighborhood";
    return out;
}

}  // namespace synteval
