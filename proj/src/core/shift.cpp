#include "core/shift.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/stats.hpp"

namespace synteval {

MarginalShiftSpec MarginalShiftSpec::from_json(const nlohmann::json& doc) {
    const std::string kind = doc.at("kind").get<std::string>();
    const std::string feature = doc.at("feature").get<std::string>();
    if (kind == "mean_shift") return mean_shift(feature, doc.at("s").get<double>());
    if (kind == "logit_shift") return logit_shift(feature, doc.at("s").get<double>());
    if (kind == "reweight")
        return reweight(feature, doc.at("target").get<std::string>(), doc.at("q").get<double>());
    throw_config("BadShift", "unknown shift kind '" + kind + "'");
}

std::vector<double> reweighted_probabilities(const std::vector<double>& base,
                                             std::size_t target_index, double q) {
    if (!(q > 0.0 && q < 1.0)) throw_config("BadShift", "reweight probability must be in (0,1)");
    if (target_index >= base.size()) throw_config("BadShift", "target category out of range");
    const double p_target = base[target_index];
    if (!(p_target < 1.0)) throw_data("DegenerateBase", "base probability mass is degenerate");
    const double scale = (1.0 - q) / (1.0 - p_target);
    std::vector<double> out(base.size());
    for (std::size_t j = 0; j < base.size(); ++j)
        out[j] = j == target_index ? q : base[j] * scale;
    return out;
}

namespace {

const CategoricalMarginal& discrete_marginal(const CopulaGenerator& gen, std::size_t f) {
    return std::get<CategoricalMarginal>(gen.marginal(f));
}

double binary_prevalence(const CategoricalMarginal& m) { return m.probability(1); }

std::size_t checked_feature(const Schema& schema, const MarginalShiftSpec& shift) {
    const std::size_t f = schema.index_of(shift.feature);
    const Feature& feat = schema.feature(f);
    std::visit(
        [&](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, MeanShift>) {
                if (feat.type != FeatureType::Continuous)
                    throw_data("KindMismatch", "mean shift needs a continuous feature");
            } else if constexpr (std::is_same_v<T, LogitShift>) {
                if (feat.type != FeatureType::Binary)
                    throw_data("KindMismatch", "logit shift needs a binary feature");
            } else {
                if (!feat.is_discrete())
                    throw_data("KindMismatch", "reweight needs a categorical feature");
            }
        },
        shift.kind);
    return f;
}

// Smoothed category frequencies of a column.
std::vector<double> smoothed_frequencies(std::span<const std::int32_t> col, std::size_t m,
                                         double pseudo = 1.0) {
    std::vector<double> p(m, pseudo);
    for (std::int32_t c : col) p[static_cast<std::size_t>(c)] += 1.0;
    const double total = static_cast<double>(col.size()) + pseudo * static_cast<double>(m);
    for (double& v : p) v /= total;
    return p;
}

}  // namespace

std::vector<Value> shift_marginal(const CopulaGenerator& gen, const MarginalShiftSpec& shift,
                                  std::size_t n, std::uint64_t seed) {
    const std::size_t f = checked_feature(gen.schema(), shift);
    Rng rng(Rng::derive(seed, /*stream=*/10));
    std::vector<Value> out(n);
    std::visit(
        [&](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, MeanShift>) {
                const auto& m = std::get<ContinuousMarginal>(gen.marginal(f));
                for (auto& v : out) v = m.inv_cdf(rng.uniform()) + k.s;
            } else if constexpr (std::is_same_v<T, LogitShift>) {
                const double p0 = binary_prevalence(discrete_marginal(gen, f));
                if (!(p0 > 0.0 && p0 < 1.0))
                    throw_data("DegenerateBase", "base prevalence is 0 or 1");
                const double p1 = sigmoid(logit(p0) + k.s);
                for (auto& v : out) v = static_cast<std::int32_t>(rng.bernoulli(p1) ? 1 : 0);
            } else {
                const auto& m = discrete_marginal(gen, f);
                const std::size_t target =
                    static_cast<std::size_t>(gen.schema().category_index(f, k.target));
                const CategoricalMarginal shifted = CategoricalMarginal::from_probabilities(
                    reweighted_probabilities(m.probabilities(), target, k.q));
                for (auto& v : out) v = shifted.inv(rng.uniform());
            }
        },
        shift.kind);
    return out;
}

GeneratedSample generate_shifted(const CopulaGenerator& gen, const MarginalShiftSpec& shift,
                                 std::size_t n, std::uint64_t seed) {
    if (n < 1) throw_config("BadSampleSize", "n must be >= 1");
    const std::size_t f = checked_feature(gen.schema(), shift);
    std::vector<Value> values = shift_marginal(gen, shift, n, seed);
    // mean-shifted draws may leave the fitted support; clamp into the tail
    // extension so conditioning stays defined
    if (gen.schema().feature(f).type == FeatureType::Continuous) {
        const auto& m = std::get<ContinuousMarginal>(gen.marginal(f));
        for (auto& v : values)
            v = std::clamp(std::get<double>(v), m.support_low(), m.support_high());
    }
    return gen.sample_given_columns({f}, {std::move(values)}, seed);
}

PriorMarginalSpec PriorMarginalSpec::from_json(const nlohmann::json& doc, const Schema& schema) {
    PriorMarginalSpec spec;
    for (const auto& e : doc) {
        PriorEntry entry;
        entry.feature = e.at("feature").get<std::string>();
        const std::size_t f = schema.index_of(entry.feature);
        const std::string kind = e.at("kind").get<std::string>();
        if (kind == "normal") {
            const double sigma = e.at("sigma").get<double>();
            if (!(sigma > 0.0)) throw_config("BadPrior", "normal prior needs sigma > 0");
            entry.dist = NormalPrior{e.at("mu").get<double>(), sigma};
        } else if (kind == "bernoulli") {
            const double p = e.at("p").get<double>();
            if (!(p > 0.0 && p < 1.0)) throw_config("BadPrior", "bernoulli p must be in (0,1)");
            if (schema.feature(f).type != FeatureType::Binary)
                throw_data("KindMismatch", "bernoulli prior needs a binary feature");
            entry.dist = BernoulliPrior{p};
        } else if (kind == "empirical") {
            EmpiricalPrior prior;
            prior.joint_source = e.value("joint_source", -1);
            for (const auto& v : e.at("values")) {
                if (schema.feature(f).type == FeatureType::Continuous)
                    prior.values.emplace_back(v.get<double>());
                else
                    prior.values.emplace_back(schema.category_index(f, v.get<std::string>()));
            }
            if (prior.values.empty()) throw_config("BadPrior", "empirical prior is empty");
            entry.dist = std::move(prior);
        } else {
            throw_config("BadPrior", "unknown prior kind '" + kind + "'");
        }
        spec.entries.push_back(std::move(entry));
    }
    return spec;
}

PriorMarginalSpec PriorMarginalSpec::from_observed(const Dataset& target,
                                                   const std::vector<std::string>& features) {
    if (target.empty()) throw_data("Empty", "observed target sample is empty");
    PriorMarginalSpec spec;
    for (const std::string& name : features) {
        const std::size_t f = target.schema().index_of(name);
        EmpiricalPrior prior;
        prior.joint_source = 0;  // same row index across all observed columns
        prior.values.reserve(target.n_rows());
        for (std::size_t r = 0; r < target.n_rows(); ++r)
            prior.values.push_back(target.value(f, r));
        spec.entries.push_back(PriorEntry{name, std::move(prior)});
    }
    return spec;
}

GeneratedSample generate_with_prior(const CopulaGenerator& gen, const PriorMarginalSpec& priors,
                                    std::size_t n, std::uint64_t seed) {
    if (priors.entries.empty()) throw_config("BadPrior", "prior spec names no features");
    if (n < 1) throw_config("BadSampleSize", "n must be >= 1");
    const Schema& schema = gen.schema();

    std::vector<std::size_t> features;
    for (const auto& e : priors.entries) features.push_back(schema.index_of(e.feature));

    // shared row draws for joint empirical groups
    std::map<int, std::size_t> joint_len;
    for (const auto& e : priors.entries) {
        if (const auto* emp = std::get_if<EmpiricalPrior>(&e.dist); emp && emp->joint_source >= 0) {
            auto [it, inserted] = joint_len.emplace(emp->joint_source, emp->values.size());
            if (!inserted && it->second != emp->values.size())
                throw_config("BadPrior", "joint empirical priors differ in length");
        }
    }

    Rng rng(Rng::derive(seed, /*stream=*/11));
    std::vector<std::vector<Value>> columns(priors.entries.size());
    for (auto& col : columns) col.resize(n);
    std::map<int, std::size_t> joint_index;
    for (std::size_t r = 0; r < n; ++r) {
        joint_index.clear();
        for (auto& [src, len] : joint_len) joint_index[src] = rng.uniform_index(len);
        for (std::size_t j = 0; j < priors.entries.size(); ++j) {
            const std::size_t f = features[j];
            std::visit(
                [&](const auto& d) {
                    using T = std::decay_t<decltype(d)>;
                    if constexpr (std::is_same_v<T, NormalPrior>) {
                        const double v = d.mu + d.sigma * rng.normal();
                        const auto& m = std::get<ContinuousMarginal>(gen.marginal(f));
                        if (!m.in_support(v))
                            throw_numeric("OutOfSupport",
                                          "prior draw beyond the generator tail extension");
                        columns[j][r] = v;
                    } else if constexpr (std::is_same_v<T, BernoulliPrior>) {
                        columns[j][r] = static_cast<std::int32_t>(rng.bernoulli(d.p) ? 1 : 0);
                    } else {
                        const std::size_t idx = d.joint_source >= 0
                                                    ? joint_index.at(d.joint_source)
                                                    : rng.uniform_index(d.values.size());
                        Value v = d.values[idx];
                        if (schema.feature(f).type == FeatureType::Continuous) {
                            const auto& m = std::get<ContinuousMarginal>(gen.marginal(f));
                            v = std::clamp(std::get<double>(v), m.support_low(), m.support_high());
                        }
                        columns[j][r] = v;
                    }
                },
                priors.entries[j].dist);
        }
    }
    return gen.sample_given_columns(features, columns, seed);
}

ShiftTarget ShiftTarget::from_marginal_shift(const Dataset& source, const MarginalShiftSpec& shift,
                                             double bandwidth) {
    const std::size_t f = checked_feature(source.schema(), shift);
    ShiftTarget target;
    std::visit(
        [&](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, MeanShift>) {
                ContinuousFactor factor{f, Kde1d::fit(source.numeric_column(f), bandwidth), k.s,
                                        std::nullopt, std::nullopt};
                target.continuous_.push_back(std::move(factor));
            } else if constexpr (std::is_same_v<T, LogitShift>) {
                const std::vector<double> p0 =
                    smoothed_frequencies(source.category_column(f), 2);
                const double p1 = sigmoid(logit(p0[1]) + k.s);
                target.discrete_.push_back(DiscreteFactor{f, p0, {1.0 - p1, p1}});
            } else {
                const Feature& feat = source.schema().feature(f);
                const std::vector<double> p0 =
                    smoothed_frequencies(source.category_column(f), feat.cardinality());
                const std::size_t target_idx =
                    static_cast<std::size_t>(source.schema().category_index(f, k.target));
                target.discrete_.push_back(
                    DiscreteFactor{f, p0, reweighted_probabilities(p0, target_idx, k.q)});
            }
        },
        shift.kind);
    return target;
}

ShiftTarget ShiftTarget::from_priors(const Dataset& source, const PriorMarginalSpec& priors,
                                     double bandwidth) {
    ShiftTarget target;
    const Schema& schema = source.schema();
    for (const auto& e : priors.entries) {
        const std::size_t f = schema.index_of(e.feature);
        const Feature& feat = schema.feature(f);
        std::visit(
            [&](const auto& d) {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, NormalPrior>) {
                    if (feat.type != FeatureType::Continuous)
                        throw_data("KindMismatch", "normal prior needs a continuous feature");
                    ContinuousFactor factor{f, Kde1d::fit(source.numeric_column(f), bandwidth),
                                            0.0, d, std::nullopt};
                    target.continuous_.push_back(std::move(factor));
                } else if constexpr (std::is_same_v<T, BernoulliPrior>) {
                    const std::vector<double> p0 = smoothed_frequencies(source.category_column(f), 2);
                    target.discrete_.push_back(DiscreteFactor{f, p0, {1.0 - d.p, d.p}});
                } else {
                    if (feat.type == FeatureType::Continuous) {
                        std::vector<double> vals;
                        vals.reserve(d.values.size());
                        for (const Value& v : d.values) vals.push_back(std::get<double>(v));
                        ContinuousFactor factor{f, Kde1d::fit(source.numeric_column(f), bandwidth),
                                                0.0, std::nullopt,
                                                Kde1d::fit(vals, bandwidth)};
                        target.continuous_.push_back(std::move(factor));
                    } else {
                        std::vector<std::int32_t> vals;
                        vals.reserve(d.values.size());
                        for (const Value& v : d.values) vals.push_back(std::get<std::int32_t>(v));
                        const std::vector<double> p0 =
                            smoothed_frequencies(source.category_column(f), feat.cardinality());
                        const std::vector<double> ps =
                            smoothed_frequencies(vals, feat.cardinality());
                        target.discrete_.push_back(DiscreteFactor{f, p0, ps});
                    }
                }
            },
            e.dist);
    }
    if (target.continuous_.empty() && target.discrete_.empty())
        throw_config("BadPrior", "shift target has no factors");
    return target;
}

double ShiftTarget::ratio(const Dataset& data, std::size_t row) const {
    double r = 1.0;
    for (const auto& factor : continuous_) {
        const double x = data.numeric(factor.feature, row);
        const double p0 = factor.source_kde.pdf(x);
        double ps;
        if (factor.normal_target) {
            const double t = (x - factor.normal_target->mu) / factor.normal_target->sigma;
            ps = std::exp(-0.5 * t * t) /
                 (factor.normal_target->sigma * std::sqrt(2.0 * M_PI));
        } else if (factor.target_kde) {
            ps = factor.target_kde->pdf(x);
        } else {
            ps = factor.source_kde.pdf(x - factor.mean_shift);
        }
        if (p0 <= 0.0) return 0.0;
        r *= ps / p0;
    }
    for (const auto& factor : discrete_) {
        const auto c = static_cast<std::size_t>(data.category(factor.feature, row));
        r *= factor.ps[c] / factor.p0[c];
    }
    return r;
}

Dataset rejection_sample(const Dataset& source, const ShiftTarget& target, std::size_t n_s,
                         std::uint64_t seed) {
    if (source.empty()) throw_data("Empty", "rejection sampling from an empty source");
    if (n_s < 1) throw_config("BadSampleSize", "n_s must be >= 1");

    const std::size_t n = source.n_rows();
    std::vector<double> ratios(n);
    double m_bound = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        ratios[r] = target.ratio(source, r);
        m_bound = std::max(m_bound, ratios[r]);
    }
    if (!(m_bound > 0.0))
        throw_numeric("AcceptanceStall", "shift target has no mass on the source support");

    Rng rng(Rng::derive(seed, /*stream=*/13));
    std::vector<std::size_t> accepted;
    accepted.reserve(n_s);
    std::size_t draws = 0;
    const std::size_t rate_budget = 1'000'000;
    const std::size_t hard_cap = std::max<std::size_t>(rate_budget, 5000 * n_s);
    while (accepted.size() < n_s) {
        if (draws >= rate_budget &&
            static_cast<double>(accepted.size()) < 1e-4 * static_cast<double>(draws))
            throw_numeric("AcceptanceStall", "acceptance rate below 1e-4 over the draw budget");
        if (draws >= hard_cap)
            throw_numeric("AcceptanceStall", "rejection sampler exhausted its draw budget");
        const std::size_t i = rng.uniform_index(n);
        const double u = rng.uniform();
        ++draws;
        if (ratios[i] > m_bound * u) accepted.push_back(i);
    }
    return source.take(accepted);
}

const char* bucket_name(ShiftBucket b) {
    switch (b) {
        case ShiftBucket::Minus: return "minus";
        case ShiftBucket::PlusMinus: return "plus_minus";
        case ShiftBucket::Plus: return "plus";
    }
    return "plus_minus";
}

ShiftBucket bucket_of(const Dataset& source, const std::string& feature, double shifted_mean) {
    const double q1 = source.empirical_quantile(feature, 0.25);
    const double q3 = source.empirical_quantile(feature, 0.75);
    if (shifted_mean < q1) return ShiftBucket::Minus;
    if (shifted_mean > q3) return ShiftBucket::Plus;
    return ShiftBucket::PlusMinus;
}

namespace {

ShiftBucket bucket_of_indicator(std::vector<double> indicator, double shifted_mean) {
    const double q1 = quantile_type7(indicator, 0.25);
    const double q3 = quantile_type7(indicator, 0.75);
    if (shifted_mean < q1) return ShiftBucket::Minus;
    if (shifted_mean > q3) return ShiftBucket::Plus;
    return ShiftBucket::PlusMinus;
}

}  // namespace

std::vector<double> default_shift_grid(const Dataset& reference, const std::string& feature,
                                       std::size_t points) {
    if (points < 2) throw_config("BadGrid", "grid needs >= 2 points");
    const std::size_t f = reference.schema().index_of(feature);
    if (reference.schema().feature(f).type != FeatureType::Continuous)
        throw_data("NotContinuous", "default grid needs a continuous feature");
    const auto col = reference.numeric_column(f);
    const double mean_v = mean(col);
    const double lo = *std::min_element(col.begin(), col.end()) - mean_v;
    const double hi = *std::max_element(col.begin(), col.end()) - mean_v;
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i)
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    return grid;
}

std::vector<SweepPoint> sensitivity_sweep(const GeneratorEnsemble& ens, const Predictor& f,
                                          const std::string& feature,
                                          const std::vector<double>& s_grid, std::size_t n,
                                          const MetricKind& metric, const Dataset& reference,
                                          std::uint64_t seed,
                                          const std::optional<std::string>& category) {
    if (s_grid.empty()) throw_config("BadGrid", "sweep grid is empty");
    const Schema& schema = ens.schema();
    const std::size_t fi = schema.index_of(feature);
    const Feature& feat = schema.feature(fi);

    std::vector<double> grid = s_grid;
    std::sort(grid.begin(), grid.end());

    std::vector<SweepPoint> out;
    out.reserve(grid.size());
    for (std::size_t p = 0; p < grid.size(); ++p) {
        const double s = grid[p];
        MarginalShiftSpec shift = [&] {
            if (feat.type == FeatureType::Continuous) return MarginalShiftSpec::mean_shift(feature, s);
            if (feat.type == FeatureType::Binary && !category)
                return MarginalShiftSpec::logit_shift(feature, s);
            if (!category)
                throw_data("KindMismatch", "categorical sweep needs a target category");
            return MarginalShiftSpec::reweight(feature, *category, s);
        }();

        std::vector<double> member_values;
        member_values.reserve(ens.size());
        for (std::size_t k = 0; k < ens.size(); ++k) {
            const GeneratedSample sample = generate_shifted(
                ens.member(k), shift, n, Rng::derive(seed, 1000 + p * ens.size() + k));
            member_values.push_back(metric_value(f, sample.data, metric, nullptr));
        }

        SweepPoint point;
        point.s = s;
        point.estimate = mean(member_values);
        point.sd = sample_sd(member_values);
        point.members = ens.size();
        if (feat.type == FeatureType::Continuous) {
            point.bucket = bucket_of(reference, feature, reference.column_mean(fi) + s);
        } else {
            // shifted prevalence of the tracked category against the
            // quartiles of its indicator column
            const auto col = reference.category_column(fi);
            const std::int32_t tracked =
                category ? schema.category_index(fi, *category) : std::int32_t{1};
            std::vector<double> indicator(col.size());
            double base = 1.0;
            for (std::size_t r = 0; r < col.size(); ++r) indicator[r] = col[r] == tracked ? 1.0 : 0.0;
            base = mean(indicator);
            double shifted_mean;
            if (feat.type == FeatureType::Binary && !category)
                shifted_mean = sigmoid(logit(std::clamp(base, 1e-9, 1.0 - 1e-9)) + s);
            else
                shifted_mean = s;  // reweight: q itself
            point.bucket = bucket_of_indicator(std::move(indicator), shifted_mean);
        }
        out.push_back(point);
    }
    return out;
}

}  // namespace synteval
