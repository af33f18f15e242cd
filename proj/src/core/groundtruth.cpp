#include "core/groundtruth.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/stats.hpp"

namespace synteval {

GroundTruthSpec GroundTruthSpec::from_json(const nlohmann::json& doc) {
    GroundTruthSpec spec;
    spec.seed_ = doc.value("seed", 0ull);
    spec.subgroup_feature_ = doc.at("subgroup_feature").get<std::string>();
    spec.subgroup_probs_ = doc.at("subgroup_probs").get<std::vector<double>>();
    double prob_sum = 0.0;
    for (double p : spec.subgroup_probs_) {
        if (!(p > 0.0)) throw_config("BadSpec", "subgroup probabilities must be positive");
        prob_sum += p;
    }
    if (std::fabs(prob_sum - 1.0) > 1e-9)
        throw_config("BadSpec", "subgroup probabilities must sum to 1");

    const std::size_t n_groups = spec.subgroup_probs_.size();
    std::vector<Feature> features;
    std::string label_name;
    for (const auto& fj : doc.at("features")) {
        Feature f;
        f.name = fj.at("name").get<std::string>();
        const std::string kind = fj.at("kind").get<std::string>();
        if (kind == "continuous") f.type = FeatureType::Continuous;
        else if (kind == "binary") f.type = FeatureType::Binary;
        else if (kind == "categorical") {
            f.type = FeatureType::Categorical;
            f.categories = fj.at("categories").get<std::vector<std::string>>();
        } else {
            throw_config("BadSpec", "unknown feature kind '" + kind + "'");
        }
        if (fj.value("label", false)) label_name = f.name;
        features.push_back(f);
    }
    if (label_name.empty()) throw_config("BadSpec", "no feature marked as the label");
    spec.schema_ = std::make_shared<Schema>(features, label_name);
    spec.subgroup_index_ = spec.schema_->index_of(spec.subgroup_feature_);
    if (!spec.schema_->feature(spec.subgroup_index_).is_discrete() ||
        spec.schema_->feature(spec.subgroup_index_).cardinality() != n_groups)
        throw_config("BadSpec", "subgroup feature must be categorical with one level per prob");

    auto per_group = [&](const nlohmann::json& v, const char* what) {
        const auto out = v.get<std::vector<double>>();
        if (out.size() != n_groups)
            throw_config("BadSpec", std::string(what) + " needs one entry per subgroup");
        return out;
    };

    for (const auto& fj : doc.at("features")) {
        const std::string name = fj.at("name").get<std::string>();
        if (name == spec.subgroup_feature_ || name == label_name) continue;
        FeatureGen gen;
        gen.feature = spec.schema_->index_of(name);
        const Feature& feat = spec.schema_->feature(gen.feature);
        if (feat.type == FeatureType::Continuous) {
            gen.kind = FeatureGen::Kind::Continuous;
            gen.continuous.mean = per_group(fj.at("mean"), "mean");
            gen.continuous.sd = per_group(fj.at("sd"), "sd");
            for (double sd : gen.continuous.sd)
                if (!(sd > 0.0)) throw_config("BadSpec", "sd must be positive");
        } else if (feat.type == FeatureType::Binary) {
            gen.kind = FeatureGen::Kind::Binary;
            gen.binary.prevalence = per_group(fj.at("prevalence"), "prevalence");
            for (double p : gen.binary.prevalence)
                if (!(p > 0.0 && p < 1.0)) throw_config("BadSpec", "prevalence must be in (0,1)");
        } else {
            gen.kind = FeatureGen::Kind::Categorical;
            gen.categorical.probs = fj.at("probs").get<std::vector<double>>();
            if (gen.categorical.probs.size() != feat.cardinality())
                throw_config("BadSpec", "category probs size mismatch for '" + name + "'");
        }
        spec.generated_.push_back(std::move(gen));
    }

    const std::size_t d = spec.generated_.size();
    spec.latent_corr_ = Eigen::MatrixXd::Identity(d, d);
    if (doc.contains("latent_corr")) {
        const auto rows = doc.at("latent_corr").get<std::vector<std::vector<double>>>();
        if (rows.size() != d) throw_config("BadSpec", "latent_corr dimension mismatch");
        for (std::size_t i = 0; i < d; ++i) {
            if (rows[i].size() != d) throw_config("BadSpec", "latent_corr dimension mismatch");
            for (std::size_t j = 0; j < d; ++j) spec.latent_corr_(i, j) = rows[i][j];
        }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(spec.latent_corr_);
    if (llt.info() != Eigen::Success)
        throw_config("BadSpec", "latent correlation is not positive definite");
    spec.latent_chol_ = llt.matrixL();

    const auto& label = doc.at("label");
    for (const auto& [name, w] : label.at("weights").items()) {
        const std::size_t fi = spec.schema_->index_of(name);
        if (spec.schema_->feature(fi).type == FeatureType::Categorical)
            throw_config("BadSpec", "label weights apply to continuous or binary features");
        spec.label_weights_[name] = w.get<double>();
    }
    spec.label_bias_ = label.value("bias", 0.0);
    spec.label_bias_per_group_ = label.contains("bias_per_group")
                                     ? per_group(label.at("bias_per_group"), "bias_per_group")
                                     : std::vector<double>(n_groups, 0.0);
    spec.noise_per_group_ = per_group(label.at("noise_per_group"), "noise_per_group");
    for (double noise : spec.noise_per_group_)
        if (!(noise >= 0.0 && noise < 0.5))
            throw_config("BadSpec", "noise rates must be in [0, 0.5)");
    if (label.contains("noise_gradient")) {
        const auto& grad = label.at("noise_gradient");
        spec.noise_feature_ = grad.at("feature").get<std::string>();
        if (spec.schema_->feature(spec.schema_->index_of(spec.noise_feature_)).type !=
            FeatureType::Continuous)
            throw_config("BadSpec", "noise gradient needs a continuous feature");
        spec.noise_slope_ = grad.at("slope").get<double>();
        spec.noise_ref_ = grad.at("ref").get<double>();
    }
    if (spec.schema_->label().cardinality() != 2)
        throw_config("BadSpec", "the label must be binary");
    return spec;
}

GroundTruthSpec GroundTruthSpec::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_config("MissingFile", "cannot open spec '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw_config("BadSpec", std::string("spec parse error: ") + e.what());
    }
    return from_json(doc);
}

nlohmann::json GroundTruthSpec::to_json() const {
    nlohmann::json features = nlohmann::json::array();
    for (std::size_t f = 0; f < schema_->size(); ++f) {
        const Feature& feat = schema_->feature(f);
        nlohmann::json fj{{"name", feat.name}};
        switch (feat.type) {
            case FeatureType::Continuous: fj["kind"] = "continuous"; break;
            case FeatureType::Binary: fj["kind"] = "binary"; break;
            case FeatureType::Categorical:
                fj["kind"] = "categorical";
                fj["categories"] = feat.categories;
                break;
        }
        if (f == schema_->label_index()) fj["label"] = true;
        for (const auto& gen : generated_) {
            if (gen.feature != f) continue;
            if (gen.kind == FeatureGen::Kind::Continuous) {
                fj["mean"] = gen.continuous.mean;
                fj["sd"] = gen.continuous.sd;
            } else if (gen.kind == FeatureGen::Kind::Binary) {
                fj["prevalence"] = gen.binary.prevalence;
            } else {
                fj["probs"] = gen.categorical.probs;
            }
        }
        features.push_back(std::move(fj));
    }
    std::vector<std::vector<double>> corr(generated_.size(),
                                          std::vector<double>(generated_.size()));
    for (std::size_t i = 0; i < generated_.size(); ++i)
        for (std::size_t j = 0; j < generated_.size(); ++j) corr[i][j] = latent_corr_(i, j);
    nlohmann::json weights;
    for (const auto& [name, w] : label_weights_) weights[name] = w;
    nlohmann::json label{{"weights", weights},
                         {"bias", label_bias_},
                         {"bias_per_group", label_bias_per_group_},
                         {"noise_per_group", noise_per_group_}};
    if (!noise_feature_.empty())
        label["noise_gradient"] = {{"feature", noise_feature_},
                                   {"slope", noise_slope_},
                                   {"ref", noise_ref_}};
    return nlohmann::json{{"seed", seed_},
                          {"subgroup_feature", subgroup_feature_},
                          {"subgroup_probs", subgroup_probs_},
                          {"features", features},
                          {"latent_corr", corr},
                          {"label", label}};
}

Dataset GroundTruthSpec::simulate(std::size_t n, std::uint64_t seed) const {
    Rng rng(Rng::derive(seed, seed_ ^ 0x67A6'1D5Dull));
    Dataset out(schema_);
    out.reserve(n);

    std::vector<double> group_bounds(subgroup_probs_.size());
    double acc = 0.0;
    for (std::size_t g = 0; g < subgroup_probs_.size(); ++g) {
        acc += subgroup_probs_[g];
        group_bounds[g] = acc;
    }
    group_bounds.back() = 1.0;

    const std::size_t d = generated_.size();
    Eigen::VectorXd eps(static_cast<Eigen::Index>(d)), z(static_cast<Eigen::Index>(d));
    Row row(schema_->size());
    for (std::size_t r = 0; r < n; ++r) {
        const double ug = rng.uniform();
        std::size_t g = 0;
        while (g + 1 < group_bounds.size() && ug >= group_bounds[g]) ++g;
        row[subgroup_index_] = static_cast<std::int32_t>(g);

        for (std::size_t j = 0; j < d; ++j) eps(static_cast<Eigen::Index>(j)) = rng.normal();
        z = latent_chol_ * eps;
        for (std::size_t j = 0; j < d; ++j) {
            const FeatureGen& gen = generated_[j];
            const double zj = z(static_cast<Eigen::Index>(j));
            if (gen.kind == FeatureGen::Kind::Continuous) {
                row[gen.feature] = gen.continuous.mean[g] + gen.continuous.sd[g] * zj;
            } else if (gen.kind == FeatureGen::Kind::Binary) {
                row[gen.feature] =
                    static_cast<std::int32_t>(normal_cdf(zj) < gen.binary.prevalence[g] ? 1 : 0);
            } else {
                const double u = normal_cdf(zj);
                double cum = 0.0;
                std::int32_t cat = 0;
                for (std::size_t c = 0; c < gen.categorical.probs.size(); ++c) {
                    cum += gen.categorical.probs[c];
                    if (u < cum || c + 1 == gen.categorical.probs.size()) {
                        cat = static_cast<std::int32_t>(c);
                        break;
                    }
                }
                row[gen.feature] = cat;
            }
        }

        double score = label_bias_ + label_bias_per_group_[g];
        for (const auto& [name, w] : label_weights_) {
            const std::size_t fi = schema_->index_of(name);
            const double x = schema_->feature(fi).type == FeatureType::Continuous
                                 ? std::get<double>(row[fi])
                                 : static_cast<double>(std::get<std::int32_t>(row[fi]));
            score += w * x;
        }
        double noise = noise_per_group_[g];
        if (!noise_feature_.empty()) {
            const std::size_t fi = schema_->index_of(noise_feature_);
            noise += noise_slope_ * (std::get<double>(row[fi]) - noise_ref_);
            noise = std::clamp(noise, 0.0, 0.49);
        }
        bool y = score > 0.0;
        if (rng.uniform() < noise) y = !y;
        row[schema_->label_index()] = static_cast<std::int32_t>(y ? 1 : 0);
        out.append(row);
    }
    return out;
}

double GroundTruthSpec::label_score(const Dataset& data, std::size_t row) const {
    const std::size_t g = static_cast<std::size_t>(data.category(subgroup_index_, row));
    double score = label_bias_ + label_bias_per_group_[g];
    for (const auto& [name, w] : label_weights_) {
        const std::size_t fi = schema_->index_of(name);
        const double x = schema_->feature(fi).type == FeatureType::Continuous
                             ? data.numeric(fi, row)
                             : static_cast<double>(data.category(fi, row));
        score += w * x;
    }
    return score;
}

double GroundTruthSpec::noise_of_row(const Dataset& data, std::size_t row) const {
    const std::size_t g = static_cast<std::size_t>(data.category(subgroup_index_, row));
    double noise = noise_per_group_[g];
    if (!noise_feature_.empty()) {
        noise += noise_slope_ * (data.numeric(schema_->index_of(noise_feature_), row) - noise_ref_);
        noise = std::clamp(noise, 0.0, 0.49);
    }
    return noise;
}

class BayesRulePredictor final : public Predictor {
public:
    explicit BayesRulePredictor(GroundTruthSpec spec) : spec_(std::move(spec)) {}

    std::int32_t predict(const Dataset& data, std::size_t row) const override {
        return spec_.label_score(data, row) > 0.0 ? 1 : 0;
    }
    double confidence(const Dataset& data, std::size_t row) const override {
        return 1.0 - spec_.noise_of_row(data, row);
    }

private:
    GroundTruthSpec spec_;
};

PredictorPtr GroundTruthSpec::bayes_predictor() const {
    return std::make_shared<BayesRulePredictor>(*this);
}

GroundTruthSpec GroundTruthSpec::builtin() {
    static const char* kBuiltin = R"json({
      "seed": 17,
      "subgroup_feature": "group",
      "subgroup_probs": [0.86, 0.09, 0.03, 0.02],
      "features": [
        {"name": "group", "kind": "categorical", "categories": ["g0", "g1", "g2", "g3"]},
        {"name": "region", "kind": "categorical", "categories": ["r0", "r1", "r2", "r3"],
         "probs": [0.4, 0.3, 0.2, 0.1]},
        {"name": "age", "kind": "continuous",
         "mean": [47.0, 52.0, 57.0, 62.0], "sd": [12.0, 12.0, 12.0, 12.0]},
        {"name": "score", "kind": "continuous",
         "mean": [0.0, 0.3, 0.6, 0.9], "sd": [1.0, 1.0, 1.0, 1.0]},
        {"name": "flag", "kind": "binary", "prevalence": [0.3, 0.4, 0.5, 0.6]},
        {"name": "y", "kind": "binary", "label": true}
      ],
      "latent_corr": [
        [1.0,  0.25, 0.10, 0.10],
        [0.25, 1.00, 0.35, 0.20],
        [0.10, 0.35, 1.00, 0.15],
        [0.10, 0.20, 0.15, 1.00]
      ],
      "label": {
        "weights": {"age": 0.05, "score": 0.75, "flag": 0.45},
        "bias": -2.65,
        "noise_per_group": [0.09, 0.095, 0.10, 0.105],
        "noise_gradient": {"feature": "age", "slope": 0.002, "ref": 47.0}
      }
    })json";
    return from_json(nlohmann::json::parse(kBuiltin));
}

}  // namespace synteval
