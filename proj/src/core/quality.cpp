#include "core/quality.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/stats.hpp"

namespace synteval {

namespace {

// Encode all features (label included): standardized continuous + one-hot
// categoricals, with standardization statistics from the pooled sets.
struct JointEncoder {
    std::vector<double> mean, inv_sd;
    std::vector<std::size_t> offset;
    std::size_t dim = 0;

    JointEncoder(const Dataset& a, const Dataset& b) {
        const Schema& schema = a.schema();
        mean.assign(schema.size(), 0.0);
        inv_sd.assign(schema.size(), 1.0);
        offset.assign(schema.size(), 0);
        for (std::size_t f = 0; f < schema.size(); ++f) {
            offset[f] = dim;
            if (schema.feature(f).type == FeatureType::Continuous) {
                std::vector<double> pooled;
                pooled.reserve(a.n_rows() + b.n_rows());
                const auto ca = a.numeric_column(f);
                const auto cb = b.numeric_column(f);
                pooled.insert(pooled.end(), ca.begin(), ca.end());
                pooled.insert(pooled.end(), cb.begin(), cb.end());
                mean[f] = synteval::mean(pooled);
                const double sd = sample_sd(pooled);
                inv_sd[f] = sd > 0.0 ? 1.0 / sd : 1.0;
                dim += 1;
            } else {
                dim += schema.feature(f).cardinality();
            }
        }
    }

    void encode(const Dataset& d, std::size_t row, double* out) const {
        std::fill(out, out + dim, 0.0);
        const Schema& schema = d.schema();
        for (std::size_t f = 0; f < schema.size(); ++f) {
            if (schema.feature(f).type == FeatureType::Continuous)
                out[offset[f]] = (d.numeric(f, row) - mean[f]) * inv_sd[f];
            else
                out[offset[f] + static_cast<std::size_t>(d.category(f, row))] = 1.0;
        }
    }
};

std::vector<std::vector<double>> encode_all(const JointEncoder& enc, const Dataset& d) {
    std::vector<std::vector<double>> rows(d.n_rows(), std::vector<double>(enc.dim));
    for (std::size_t r = 0; r < d.n_rows(); ++r) enc.encode(d, r, rows[r].data());
    return rows;
}

double sq_dist(const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double diff = x[j] - y[j];
        s += diff * diff;
    }
    return s;
}

}  // namespace

double mmd_rbf(const Dataset& a_in, const Dataset& b_in, double bandwidth) {
    if (a_in.n_rows() < 2 || b_in.n_rows() < 2)
        throw_data("TooFewRows", "MMD needs >= 2 rows per side");
    if (!(a_in.schema() == b_in.schema()))
        throw_data("SchemaMismatch", "MMD inputs differ in schema");

    // the statistic is symmetric; canonical argument order makes the
    // floating-point result exactly symmetric as well
    const bool swap = std::make_pair(a_in.n_rows(), a_in.content_hash()) >
                      std::make_pair(b_in.n_rows(), b_in.content_hash());
    const Dataset& a = swap ? b_in : a_in;
    const Dataset& b = swap ? a_in : b_in;

    const JointEncoder enc(a, b);
    const auto xa = encode_all(enc, a);
    const auto xb = encode_all(enc, b);
    const std::size_t m = xa.size(), n = xb.size();

    double h = bandwidth;
    if (!(h > 0.0)) {
        // median pairwise distance over the pooled rows; capped for O(n^2)
        std::vector<const std::vector<double>*> pooled;
        pooled.reserve(m + n);
        for (const auto& r : xa) pooled.push_back(&r);
        for (const auto& r : xb) pooled.push_back(&r);
        const std::size_t cap = 2048;
        if (pooled.size() > cap) {
            std::vector<const std::vector<double>*> sub;
            sub.reserve(cap);
            const double stride = static_cast<double>(pooled.size()) / static_cast<double>(cap);
            for (std::size_t i = 0; i < cap; ++i)
                sub.push_back(pooled[static_cast<std::size_t>(static_cast<double>(i) * stride)]);
            pooled.swap(sub);
        }
        std::vector<double> dists;
        dists.reserve(pooled.size() * (pooled.size() - 1) / 2);
        for (std::size_t i = 0; i < pooled.size(); ++i)
            for (std::size_t j = i + 1; j < pooled.size(); ++j)
                dists.push_back(std::sqrt(sq_dist(*pooled[i], *pooled[j])));
        h = quantile_type7(dists, 0.5);
        if (!(h > 0.0)) h = 1.0;  // all points identical: any h gives k(0)=1
    }
    const double gamma = 1.0 / (2.0 * h * h);

    double kaa = 0.0, kbb = 0.0, kab = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) kaa += std::exp(-gamma * sq_dist(xa[i], xa[j]));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) kbb += std::exp(-gamma * sq_dist(xb[i], xb[j]));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) kab += std::exp(-gamma * sq_dist(xa[i], xb[j]));

    const double md = static_cast<double>(m), nd = static_cast<double>(n);
    return 2.0 * kaa / (md * (md - 1.0)) + 2.0 * kbb / (nd * (nd - 1.0)) -
           2.0 * kab / (md * nd);
}

Divergences marginal_divergences(const Dataset& a, const Dataset& b, std::size_t bins,
                                 double pseudo_count) {
    if (bins < 2) throw_config("BadBins", "bins must be >= 2");
    if (!(a.schema() == b.schema()))
        throw_data("SchemaMismatch", "divergence inputs differ in schema");
    if (a.empty() || b.empty()) throw_data("Empty", "divergence of empty dataset");

    const Schema& schema = a.schema();
    double jsd_sum = 0.0, inv_kld_sum = 0.0;
    for (std::size_t f = 0; f < schema.size(); ++f) {
        std::vector<double> ha, hb;
        if (schema.feature(f).is_discrete()) {
            const std::size_t m = schema.feature(f).cardinality();
            ha.assign(m, pseudo_count);
            hb.assign(m, pseudo_count);
            for (std::int32_t c : a.category_column(f)) ha[static_cast<std::size_t>(c)] += 1.0;
            for (std::int32_t c : b.category_column(f)) hb[static_cast<std::size_t>(c)] += 1.0;
        } else {
            const auto ca = a.numeric_column(f);
            const auto cb = b.numeric_column(f);
            double lo = *std::min_element(ca.begin(), ca.end());
            double hi = *std::max_element(ca.begin(), ca.end());
            lo = std::min(lo, *std::min_element(cb.begin(), cb.end()));
            hi = std::max(hi, *std::max_element(cb.begin(), cb.end()));
            if (hi <= lo) hi = lo + 1.0;
            const double width = (hi - lo) / static_cast<double>(bins);
            ha.assign(bins, pseudo_count);
            hb.assign(bins, pseudo_count);
            auto bin_of = [&](double v) {
                auto k = static_cast<std::size_t>((v - lo) / width);
                return std::min(k, bins - 1);
            };
            for (double v : ca) ha[bin_of(v)] += 1.0;
            for (double v : cb) hb[bin_of(v)] += 1.0;
        }
        double za = 0.0, zb = 0.0;
        for (double v : ha) za += v;
        for (double v : hb) zb += v;
        for (double& v : ha) v /= za;
        for (double& v : hb) v /= zb;

        double jsd = 0.0, kl_ab = 0.0;
        for (std::size_t k = 0; k < ha.size(); ++k) {
            const double p = ha[k], q = hb[k];
            const double mid = 0.5 * (p + q);
            if (p > 0.0) {
                jsd += 0.5 * p * std::log(p / mid);
                if (q > 0.0)
                    kl_ab += p * std::log(p / q);
                else
                    kl_ab = std::numeric_limits<double>::infinity();
            }
            if (q > 0.0) jsd += 0.5 * q * std::log(q / mid);
        }
        jsd_sum += jsd;
        inv_kld_sum += std::isinf(kl_ab) ? 0.0 : 1.0 / (1.0 + kl_ab);
    }
    const double d = static_cast<double>(schema.size());
    return Divergences{jsd_sum / d, inv_kld_sum / d};
}

nlohmann::json QualityScore::to_json() const {
    return nlohmann::json{{"mmd", mmd},
                          {"jsd", jsd},
                          {"inv_kld", inv_kld},
                          {"config",
                           {{"shrinkage", config.shrinkage}, {"seed_offset", config.seed_offset}}}};
}

std::vector<GeneratorConfig> default_generator_grid() {
    std::vector<GeneratorConfig> grid;
    for (double lambda : {0.01, 0.05, 0.2})
        for (std::uint64_t offset : {0ull, 1ull}) grid.push_back({lambda, offset});
    return grid;
}

SelectionResult select_generator(const std::vector<GeneratorConfig>& candidates,
                                 const Dataset& fit_data, const Dataset& holdout,
                                 std::size_t n_score, std::uint64_t seed) {
    if (candidates.empty()) throw_config("BadConfig", "no generator candidates");
    if (holdout.empty()) throw_data("Empty", "holdout is empty");
    SelectionResult out;
    double best_mmd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const GeneratorConfig& cfg = candidates[i];
        const CopulaGenerator gen =
            CopulaGenerator::fit(fit_data, cfg.shrinkage, seed + cfg.seed_offset);
        // seed the scoring sample from the config so equal configs tie exactly
        const GeneratedSample sample =
            gen.sample(n_score, Rng::derive(seed + cfg.seed_offset, 20));
        QualityScore score;
        score.config = cfg;
        score.mmd = mmd_rbf(sample.data, holdout, /*bandwidth=*/0.0);
        const Divergences div = marginal_divergences(sample.data, holdout, 10);
        score.jsd = div.jsd;
        score.inv_kld = div.inv_kld;
        if (score.mmd < best_mmd) {
            best_mmd = score.mmd;
            out.best_index = i;
            out.best = cfg;
        }
        out.scores.push_back(std::move(score));
    }
    return out;
}

}  // namespace synteval
