#include "core/copula.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/stats.hpp"

namespace synteval {

namespace {
constexpr double kUnitEps = 1e-16;

char hex_digit(std::uint64_t v) { return "0123456789abcdef"[v & 0xf]; }

std::string hex64(std::uint64_t v) {
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = hex_digit(v);
        v >>= 4;
    }
    return s;
}
}  // namespace

ConditionSpec& ConditionSpec::set(const Schema& schema, const std::string& feature, double value) {
    const std::size_t f = schema.index_of(feature);
    if (schema.feature(f).type != FeatureType::Continuous)
        throw_data("KindMismatch", "numeric condition on non-continuous '" + feature + "'");
    return set_index(f, value);
}

ConditionSpec& ConditionSpec::set(const Schema& schema, const std::string& feature,
                                  const std::string& category) {
    const std::size_t f = schema.index_of(feature);
    if (!schema.feature(f).is_discrete())
        throw_data("KindMismatch", "category condition on continuous '" + feature + "'");
    return set_index(f, schema.category_index(f, category));
}

ConditionSpec& ConditionSpec::set_index(std::size_t feature, Value value) {
    for (const auto& [f, v] : entries_)
        if (f == feature) throw_config("BadCondition", "feature conditioned twice");
    entries_.emplace_back(feature, value);
    return *this;
}

ConditionSpec ConditionSpec::from_json(const nlohmann::json& doc, const Schema& schema) {
    ConditionSpec cond;
    if (doc.is_null()) return cond;
    for (const auto& e : doc) {
        const std::string feature = e.at("feature").get<std::string>();
        const std::size_t f = schema.index_of(feature);
        if (schema.feature(f).type == FeatureType::Continuous)
            cond.set(schema, feature, e.at("value").get<double>());
        else
            cond.set(schema, feature, e.at("value").get<std::string>());
    }
    return cond;
}

CopulaGenerator CopulaGenerator::fit(const Dataset& data, double shrinkage, std::uint64_t seed) {
    if (data.empty()) throw_data("Empty", "cannot fit generator on empty dataset");
    if (!(shrinkage >= 0.0 && shrinkage < 1.0))
        throw_config("BadShrinkage", "shrinkage must be in [0,1)");

    CopulaGenerator gen;
    gen.schema_ = data.schema_ptr();
    gen.shrinkage_ = shrinkage;
    gen.seed_ = seed;

    const std::size_t d = gen.schema_->size();
    const std::size_t n = data.n_rows();
    gen.marginals_.reserve(d);
    for (std::size_t f = 0; f < d; ++f) {
        const Feature& feat = gen.schema_->feature(f);
        if (feat.type == FeatureType::Continuous)
            gen.marginals_.emplace_back(ContinuousMarginal::fit(data.numeric_column(f)));
        else
            gen.marginals_.emplace_back(
                CategoricalMarginal::fit(data.category_column(f), feat.cardinality()));
    }

    // Latent scores. Continuous columns use Phi^-1 of the mid-rank CDF.
    // Discrete columns use the conditional mean of the dequantized score,
    // i.e. the truncated-normal mean of the category's latent interval: the
    // uniform dequantization draw is independent of everything else given
    // the category, so only that mean carries cross-feature dependence
    // (Pearson on raw dequantized scores would attenuate discrete
    // correlations by the factor v below, 2/pi for a balanced binary).
    Eigen::MatrixXd scores(n, d);
    std::vector<bool> is_discrete(d, false);
    std::vector<bool> degenerate(d, false);
    std::vector<double> mean_var(d, 1.0);  // v_f = sum_c p_c m_c^2 for discrete
    std::vector<std::vector<double>> cat_mean(d);   // m_c per category
    std::vector<std::vector<double>> cat_alpha(d);  // latent interval bounds

    for (std::size_t f = 0; f < d; ++f) {
        if (gen.schema_->feature(f).type == FeatureType::Continuous) {
            const auto& m = std::get<ContinuousMarginal>(gen.marginals_[f]);
            degenerate[f] = m.values().size() < 2;
            const auto col = data.numeric_column(f);
            for (std::size_t r = 0; r < n; ++r)
                scores(r, f) =
                    normal_quantile(std::clamp(m.midrank(col[r]), kUnitEps, 1.0 - kUnitEps));
            continue;
        }
        is_discrete[f] = true;
        const auto& m = std::get<CategoricalMarginal>(gen.marginals_[f]);
        const auto col = data.category_column(f);
        degenerate[f] =
            std::all_of(col.begin(), col.end(), [&](std::int32_t c) { return c == col[0]; });

        const std::size_t cats = m.size();
        auto& alpha = cat_alpha[f];
        alpha.resize(cats + 1);
        alpha[0] = -std::numeric_limits<double>::infinity();
        alpha[cats] = std::numeric_limits<double>::infinity();
        for (std::size_t c = 1; c < cats; ++c)
            alpha[c] = normal_quantile(std::clamp(m.interval(static_cast<std::int32_t>(c)).first,
                                                  kUnitEps, 1.0 - kUnitEps));
        auto phi = [](double x) { return std::isinf(x) ? 0.0 : normal_pdf(x); };
        auto& means = cat_mean[f];
        means.resize(cats);
        double v = 0.0;
        for (std::size_t c = 0; c < cats; ++c) {
            const double p = m.probability(static_cast<std::int32_t>(c));
            means[c] = (phi(alpha[c]) - phi(alpha[c + 1])) / p;
            v += p * means[c] * means[c];
        }
        mean_var[f] = std::max(v, 1e-12);
        for (std::size_t r = 0; r < n; ++r) scores(r, f) = means[static_cast<std::size_t>(col[r])];
    }

    // Pairwise latent correlations:
    //  - continuous x continuous: Pearson of the normal scores
    //  - discrete x continuous:   E[m(C) z] = rho v  (exact), so divide
    //  - discrete x discrete:     invert the polychoric moment
    //    M(rho) = sum_ab P_rho(cell) m_a m_b by bisection
    auto observed_moment = [&](std::size_t a, std::size_t b) {
        double s = 0.0;
        for (std::size_t r = 0; r < n; ++r) s += scores(r, a) * scores(r, b);
        return s / static_cast<double>(n);
    };
    auto polychoric = [&](std::size_t a, std::size_t b, double observed) {
        const auto& al_a = cat_alpha[a];
        const auto& al_b = cat_alpha[b];
        const auto& m_a = cat_mean[a];
        const auto& m_b = cat_mean[b];
        auto model_moment = [&](double rho) {
            double s = 0.0;
            for (std::size_t i = 0; i < m_a.size(); ++i) {
                for (std::size_t j = 0; j < m_b.size(); ++j) {
                    const double cell = bivariate_normal_cdf(al_a[i + 1], al_b[j + 1], rho) -
                                        bivariate_normal_cdf(al_a[i], al_b[j + 1], rho) -
                                        bivariate_normal_cdf(al_a[i + 1], al_b[j], rho) +
                                        bivariate_normal_cdf(al_a[i], al_b[j], rho);
                    s += cell * m_a[i] * m_b[j];
                }
            }
            return s;
        };
        double lo = -0.99, hi = 0.99;
        if (observed <= model_moment(lo)) return lo;
        if (observed >= model_moment(hi)) return hi;
        for (int it = 0; it < 40; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (model_moment(mid) < observed)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    };

    Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(d, d);
    if (n >= 2) {
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = a + 1; b < d; ++b) {
                if (degenerate[a] || degenerate[b]) continue;
                double rho;
                if (!is_discrete[a] && !is_discrete[b]) {
                    std::vector<double> xa(n), xb(n);
                    for (std::size_t r = 0; r < n; ++r) {
                        xa[r] = scores(r, a);
                        xb[r] = scores(r, b);
                    }
                    rho = pearson(xa, xb);
                } else if (is_discrete[a] && is_discrete[b]) {
                    rho = polychoric(a, b, observed_moment(a, b));
                } else {
                    const std::size_t disc = is_discrete[a] ? a : b;
                    rho = observed_moment(a, b) / mean_var[disc];
                }
                corr(a, b) = corr(b, a) = std::clamp(rho, -0.99, 0.99);
            }
        }
    }

    // estimation noise can leave the matrix slightly off the PSD cone;
    // repair by eigenvalue clipping and unit-diagonal rescaling
    {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(corr);
        if (es.eigenvalues().minCoeff() < 1e-8) {
            if (shrinkage <= 0.0)
                throw_numeric("SingularCorrelation",
                              "latent correlation is singular and shrinkage is zero");
            Eigen::VectorXd ev = es.eigenvalues().cwiseMax(1e-8);
            corr = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
            const Eigen::VectorXd scale = corr.diagonal().cwiseSqrt().cwiseInverse();
            corr = scale.asDiagonal() * corr * scale.asDiagonal();
        }
    }

    gen.sigma_ = (1.0 - shrinkage) * corr + shrinkage * Eigen::MatrixXd::Identity(d, d);
    gen.finalize();
    return gen;
}

void CopulaGenerator::finalize() {
    Eigen::LLT<Eigen::MatrixXd> llt(sigma_);
    if (llt.info() != Eigen::Success)
        throw_numeric("SingularCorrelation",
                      "latent correlation matrix is not positive definite (collinear scores)");
    chol_lower_ = llt.matrixL();
}

double CopulaGenerator::latent_of_value(std::size_t feature, const Value& v) const {
    if (schema_->feature(feature).type == FeatureType::Continuous) {
        const auto& m = std::get<ContinuousMarginal>(marginals_[feature]);
        const double x = std::get<double>(v);
        if (!m.in_support(x))
            throw_numeric("ConditionOutOfSupport",
                          "value " + std::to_string(x) + " for '" +
                              schema_->feature(feature).name + "' is beyond the tail extension");
        return normal_quantile(std::clamp(m.cdf(x), kUnitEps, 1.0 - kUnitEps));
    }
    const auto& m = std::get<CategoricalMarginal>(marginals_[feature]);
    return normal_quantile(m.interval_midpoint(std::get<std::int32_t>(v)));
}

GeneratedSample CopulaGenerator::sample_given_columns(const std::vector<std::size_t>& features,
                                                      const std::vector<std::vector<Value>>& columns,
                                                      std::uint64_t seed) const {
    const std::size_t d = dim();
    const std::size_t nc = features.size();
    if (columns.size() != nc) throw_config("BadCondition", "one value column per feature required");
    if (nc == 0) throw_config("BadCondition", "sample_given_columns needs >= 1 column");
    const std::size_t n = columns.front().size();
    for (const auto& col : columns)
        if (col.size() != n) throw_config("BadCondition", "value columns differ in length");

    std::vector<bool> is_cond(d, false);
    for (std::size_t f : features) {
        if (f >= d) throw_config("BadCondition", "condition feature index out of range");
        if (is_cond[f]) throw_config("BadCondition", "feature conditioned twice");
        is_cond[f] = true;
    }
    std::vector<std::size_t> free_idx;
    for (std::size_t f = 0; f < d; ++f)
        if (!is_cond[f]) free_idx.push_back(f);
    const std::size_t nf = free_idx.size();

    // conditional normal: z_free | z_cond ~ N(A z_cond, S)
    Eigen::MatrixXd a;  // nf x nc
    Eigen::MatrixXd schur = sigma_;
    if (nc > 0) {
        Eigen::MatrixXd s_cc(nc, nc), s_fc(nf, nc), s_ff(nf, nf);
        for (std::size_t i = 0; i < nc; ++i)
            for (std::size_t j = 0; j < nc; ++j) s_cc(i, j) = sigma_(features[i], features[j]);
        for (std::size_t i = 0; i < nf; ++i)
            for (std::size_t j = 0; j < nc; ++j) s_fc(i, j) = sigma_(free_idx[i], features[j]);
        for (std::size_t i = 0; i < nf; ++i)
            for (std::size_t j = 0; j < nf; ++j) s_ff(i, j) = sigma_(free_idx[i], free_idx[j]);
        Eigen::LLT<Eigen::MatrixXd> llt_cc(s_cc);
        if (llt_cc.info() != Eigen::Success)
            throw_numeric("SingularCorrelation", "conditioning block is singular");
        a = llt_cc.solve(s_fc.transpose()).transpose();
        schur = s_ff - a * s_fc.transpose();
    }
    Eigen::MatrixXd chol_s;
    if (nf > 0) {
        Eigen::LLT<Eigen::MatrixXd> llt_s(schur);
        if (llt_s.info() != Eigen::Success) {
            // shrinkage keeps this matrix positive definite up to roundoff
            Eigen::LLT<Eigen::MatrixXd> retry(schur +
                                              1e-12 * Eigen::MatrixXd::Identity(nf, nf));
            if (retry.info() != Eigen::Success)
                throw_numeric("SingularCorrelation", "conditional covariance is singular");
            chol_s = retry.matrixL();
        } else {
            chol_s = llt_s.matrixL();
        }
    }

    GeneratedSample out(schema_);
    out.data.reserve(n);
    out.latents.resize(n, d);
    Rng rng(Rng::derive(seed, /*stream=*/3));

    Eigen::VectorXd z_cond(nc), eps(nf), z_free(nf);
    Row row(d);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < nc; ++j)
            z_cond(static_cast<Eigen::Index>(j)) = latent_of_value(features[j], columns[j][r]);
        for (std::size_t j = 0; j < nf; ++j) eps(static_cast<Eigen::Index>(j)) = rng.normal();
        if (nf > 0) {
            z_free = chol_s * eps;
            if (nc > 0) z_free += a * z_cond;
        }
        for (std::size_t j = 0; j < nc; ++j) {
            row[features[j]] = columns[j][r];
            out.latents(r, features[j]) = z_cond(static_cast<Eigen::Index>(j));
        }
        for (std::size_t j = 0; j < nf; ++j) {
            const std::size_t f = free_idx[j];
            const double z = z_free(static_cast<Eigen::Index>(j));
            out.latents(r, f) = z;
            const double u = normal_cdf(z);
            if (schema_->feature(f).type == FeatureType::Continuous)
                row[f] = std::get<ContinuousMarginal>(marginals_[f]).inv_cdf(u);
            else
                row[f] = std::get<CategoricalMarginal>(marginals_[f]).inv(u);
        }
        out.data.append(row);
    }
    return out;
}

GeneratedSample CopulaGenerator::sample_conditional(const ConditionSpec& cond, std::size_t n,
                                                    std::uint64_t seed) const {
    if (n < 1) throw_config("BadSampleSize", "n must be >= 1");
    if (cond.empty()) {
        // identical latent path to the fully conditional case with c = {}
        const std::size_t d = dim();
        GeneratedSample out(schema_);
        out.data.reserve(n);
        out.latents.resize(n, d);
        Rng rng(Rng::derive(seed, /*stream=*/3));
        Eigen::VectorXd eps(d), z(d);
        Row row(d);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t j = 0; j < d; ++j) eps(static_cast<Eigen::Index>(j)) = rng.normal();
            z = chol_lower_ * eps;
            for (std::size_t f = 0; f < d; ++f) {
                out.latents(r, f) = z(static_cast<Eigen::Index>(f));
                const double u = normal_cdf(z(static_cast<Eigen::Index>(f)));
                if (schema_->feature(f).type == FeatureType::Continuous)
                    row[f] = std::get<ContinuousMarginal>(marginals_[f]).inv_cdf(u);
                else
                    row[f] = std::get<CategoricalMarginal>(marginals_[f]).inv(u);
            }
            out.data.append(row);
        }
        return out;
    }
    std::vector<std::size_t> features;
    std::vector<std::vector<Value>> columns;
    for (const auto& [f, v] : cond.entries()) {
        features.push_back(f);
        columns.emplace_back(n, v);
    }
    return sample_given_columns(features, columns, seed);
}

GeneratedSample CopulaGenerator::sample(std::size_t n, std::uint64_t seed) const {
    return sample_conditional(ConditionSpec{}, n, seed);
}

double CopulaGenerator::latent_radius(const Eigen::VectorXd& z) const {
    if (static_cast<std::size_t>(z.size()) != dim())
        throw_data("DimensionMismatch", "latent length does not match generator dimension");
    const Eigen::VectorXd y = chol_lower_.triangularView<Eigen::Lower>().solve(z);
    return y.norm();
}

nlohmann::json CopulaGenerator::to_json() const {
    nlohmann::json marginals = nlohmann::json::array();
    for (const auto& m : marginals_)
        std::visit([&](const auto& model) { marginals.push_back(model.to_json()); }, m);
    const std::size_t d = dim();
    std::vector<double> sigma_flat(d * d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) sigma_flat[i * d + j] = sigma_(i, j);
    return nlohmann::json{{"format", "synteval-generator-v1"},
                          {"schema", schema_->to_json()},
                          {"schema_hash", hex64(schema_->hash())},
                          {"shrinkage", shrinkage_},
                          {"seed", seed_},
                          {"marginals", marginals},
                          {"sigma", sigma_flat}};
}

CopulaGenerator CopulaGenerator::from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || doc.value("format", "") != "synteval-generator-v1")
        throw_config("BadGeneratorFile", "not a synteval generator document");
    CopulaGenerator gen;
    gen.schema_ = Schema::from_json(doc.at("schema"));
    if (doc.value("schema_hash", "") != hex64(gen.schema_->hash()))
        throw_data("BadGeneratorFile", "schema hash mismatch");
    gen.shrinkage_ = doc.at("shrinkage").get<double>();
    gen.seed_ = doc.at("seed").get<std::uint64_t>();
    const std::size_t d = gen.schema_->size();
    const auto& marginals = doc.at("marginals");
    if (marginals.size() != d) throw_data("BadGeneratorFile", "marginal count mismatch");
    for (std::size_t f = 0; f < d; ++f) {
        const auto& mj = marginals[f];
        if (mj.at("kind") == "continuous")
            gen.marginals_.emplace_back(ContinuousMarginal::from_json(mj));
        else
            gen.marginals_.emplace_back(CategoricalMarginal::from_json(mj));
    }
    const auto sigma_flat = doc.at("sigma").get<std::vector<double>>();
    if (sigma_flat.size() != d * d) throw_data("BadGeneratorFile", "sigma size mismatch");
    gen.sigma_.resize(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) gen.sigma_(i, j) = sigma_flat[i * d + j];
    gen.finalize();
    return gen;
}

void CopulaGenerator::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw_config("BadPath", "cannot write '" + path + "'");
    out << to_json().dump(2) << '\n';
}

CopulaGenerator CopulaGenerator::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_config("MissingFile", "cannot open '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw_config("BadGeneratorFile", std::string("parse error: ") + e.what());
    }
    return from_json(doc);
}

GeneratorEnsemble GeneratorEnsemble::fit(const Dataset& data, std::size_t k, double shrinkage,
                                         std::uint64_t seed) {
    if (k < 1) throw_config("BadEnsembleSize", "K must be >= 1");
    std::vector<CopulaGenerator> members;
    members.reserve(k);
    for (std::size_t m = 0; m < k; ++m) {
        const std::uint64_t member_seed = seed + m;
        Rng boot(Rng::derive(member_seed, /*stream=*/4));
        std::vector<std::size_t> rows(data.n_rows());
        for (auto& r : rows) r = boot.uniform_index(data.n_rows());
        members.push_back(CopulaGenerator::fit(data.take(rows), shrinkage, member_seed));
    }
    return from_members(std::move(members));
}

GeneratorEnsemble GeneratorEnsemble::from_members(std::vector<CopulaGenerator> members) {
    if (members.empty()) throw_config("BadEnsembleSize", "ensemble needs >= 1 member");
    for (const auto& m : members)
        if (!(m.schema() == members.front().schema()))
            throw_data("SchemaMismatch", "ensemble members disagree on schema");
    GeneratorEnsemble e;
    e.members_ = std::move(members);
    return e;
}

}  // namespace synteval
