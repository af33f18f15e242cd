#include "core/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "core/error.hpp"
#include "core/stats.hpp"

namespace synteval {

namespace {

void check_trainable(const Dataset& train) {
    if (train.empty()) throw_data("Empty", "training data is empty");
    std::set<std::int32_t> classes;
    for (std::size_t r = 0; r < train.n_rows(); ++r) classes.insert(train.label(r));
    if (classes.size() < 2)
        throw_data("DegenerateLabel", "training data holds a single label class");
}

double hyper_num(const nlohmann::json& hyper, const char* key, double fallback) {
    if (!hyper.is_object() || !hyper.contains(key)) return fallback;
    if (!hyper.at(key).is_number()) throw_config("BadHyper", std::string("'") + key + "' must be numeric");
    return hyper.at(key).get<double>();
}

}  // namespace

FeatureEncoder::FeatureEncoder(const Dataset& fit_data) : schema_(fit_data.schema_ptr()) {
    const std::size_t label = schema_->label_index();
    mean_.assign(schema_->size(), 0.0);
    inv_sd_.assign(schema_->size(), 1.0);
    offset_.assign(schema_->size(), 0);
    for (std::size_t f = 0; f < schema_->size(); ++f) {
        if (f == label) continue;
        offset_[f] = dim_;
        const Feature& feat = schema_->feature(f);
        if (feat.type == FeatureType::Continuous) {
            mean_[f] = fit_data.column_mean(f);
            const double sd = fit_data.column_sd(f);
            inv_sd_[f] = sd > 0.0 ? 1.0 / sd : 1.0;
            dim_ += 1;
        } else {
            dim_ += feat.cardinality();
        }
    }
}

void FeatureEncoder::encode(const Dataset& data, std::size_t row, double* out) const {
    std::fill(out, out + dim_, 0.0);
    const std::size_t label = schema_->label_index();
    for (std::size_t f = 0; f < schema_->size(); ++f) {
        if (f == label) continue;
        if (schema_->feature(f).type == FeatureType::Continuous) {
            out[offset_[f]] = (data.numeric(f, row) - mean_[f]) * inv_sd_[f];
        } else {
            out[offset_[f] + static_cast<std::size_t>(data.category(f, row))] = 1.0;
        }
    }
}

std::vector<double> FeatureEncoder::encode(const Dataset& data, std::size_t row) const {
    std::vector<double> v(dim_);
    encode(data, row, v.data());
    return v;
}

namespace {

// ---------------------------------------------------------------------------
// softmax regression, full-batch gradient descent
// ---------------------------------------------------------------------------

class LogisticPredictor final : public Predictor {
public:
    LogisticPredictor(const Dataset& train, const nlohmann::json& hyper)
        : encoder_(train), n_classes_(train.schema().label().cardinality()) {
        const double l2 = hyper_num(hyper, "l2", 1e-4);
        const double lr = hyper_num(hyper, "learning_rate", 0.1);
        const int iters = static_cast<int>(hyper_num(hyper, "iterations", 500));
        if (l2 < 0 || lr <= 0 || iters < 1) throw_config("BadHyper", "bad logistic hyperparameters");

        const std::size_t n = train.n_rows();
        const std::size_t d = encoder_.dim();
        Eigen::MatrixXd x(n, d + 1);
        std::vector<double> buf(d);
        for (std::size_t r = 0; r < n; ++r) {
            encoder_.encode(train, r, buf.data());
            for (std::size_t j = 0; j < d; ++j) x(r, j) = buf[j];
            x(r, d) = 1.0;  // bias
        }
        Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, n_classes_);
        for (std::size_t r = 0; r < n; ++r) y(r, train.label(r)) = 1.0;

        weights_ = Eigen::MatrixXd::Zero(d + 1, n_classes_);
        const double inv_n = 1.0 / static_cast<double>(n);
        for (int it = 0; it < iters; ++it) {
            Eigen::MatrixXd logits = x * weights_;
            Eigen::VectorXd rowmax = logits.rowwise().maxCoeff();
            Eigen::MatrixXd p = (logits.colwise() - rowmax).array().exp();
            p.array().colwise() /= p.rowwise().sum().array();
            Eigen::MatrixXd grad = x.transpose() * (p - y) * inv_n + l2 * weights_;
            grad.row(d) -= l2 * weights_.row(d);  // bias stays unpenalized
            weights_ -= lr * grad;
        }
    }

    std::int32_t predict(const Dataset& data, std::size_t row) const override {
        return decide(data, row).first;
    }
    double confidence(const Dataset& data, std::size_t row) const override {
        return decide(data, row).second;
    }

private:
    std::pair<std::int32_t, double> decide(const Dataset& data, std::size_t row) const {
        std::vector<double> v(encoder_.dim());
        encoder_.encode(data, row, v.data());
        Eigen::VectorXd z = Eigen::VectorXd::Zero(n_classes_);
        for (std::size_t k = 0; k < n_classes_; ++k) {
            double s = weights_(encoder_.dim(), k);
            for (std::size_t j = 0; j < encoder_.dim(); ++j) s += v[j] * weights_(j, k);
            z(k) = s;
        }
        const double zmax = z.maxCoeff();
        Eigen::VectorXd p = (z.array() - zmax).exp();
        p /= p.sum();
        Eigen::Index best = 0;
        p.maxCoeff(&best);
        return {static_cast<std::int32_t>(best), p(best)};
    }

    FeatureEncoder encoder_;
    std::size_t n_classes_;
    Eigen::MatrixXd weights_;
};

// ---------------------------------------------------------------------------
// depth-limited CART (gini)
// ---------------------------------------------------------------------------

class TreePredictor final : public Predictor {
public:
    TreePredictor(const Dataset& train, const nlohmann::json& hyper)
        : n_classes_(train.schema().label().cardinality()) {
        max_depth_ = static_cast<int>(hyper_num(hyper, "max_depth", 6));
        min_leaf_ = static_cast<int>(hyper_num(hyper, "min_leaf", 5));
        if (max_depth_ < 1 || min_leaf_ < 1) throw_config("BadHyper", "bad tree hyperparameters");
        std::vector<std::size_t> rows(train.n_rows());
        std::iota(rows.begin(), rows.end(), 0);
        root_ = build(train, rows, 0);
    }

    std::int32_t predict(const Dataset& data, std::size_t row) const override {
        return leaf_for(data, row).best;
    }
    double confidence(const Dataset& data, std::size_t row) const override {
        return leaf_for(data, row).prob;
    }

private:
    struct Node {
        bool leaf = true;
        std::int32_t best = 0;
        double prob = 0.0;
        std::size_t feature = 0;
        bool numeric_split = true;
        double threshold = 0.0;       // numeric: go left iff value <= threshold
        std::int32_t category = 0;    // categorical: go left iff value == category
        int left = -1, right = -1;
    };

    const Node& leaf_for(const Dataset& data, std::size_t row) const {
        int at = root_;
        while (!nodes_[at].leaf) {
            const Node& n = nodes_[at];
            bool left;
            if (n.numeric_split)
                left = data.numeric(n.feature, row) <= n.threshold;
            else
                left = data.category(n.feature, row) == n.category;
            at = left ? n.left : n.right;
        }
        return nodes_[at];
    }

    static double gini(const std::vector<double>& counts, double total) {
        if (total <= 0.0) return 0.0;
        double g = 1.0;
        for (double c : counts) {
            const double p = c / total;
            g -= p * p;
        }
        return g;
    }

    int make_leaf(const Dataset& train, const std::vector<std::size_t>& rows) {
        std::vector<double> counts(n_classes_, 0.0);
        for (std::size_t r : rows) counts[train.label(r)] += 1.0;
        Node node;
        // Laplace-smoothed class probabilities keep the confidence >= 1/K.
        double best = -1.0;
        const double denom = static_cast<double>(rows.size() + n_classes_);
        for (std::size_t k = 0; k < n_classes_; ++k) {
            const double p = (counts[k] + 1.0) / denom;
            if (p > best) {
                best = p;
                node.best = static_cast<std::int32_t>(k);
            }
        }
        node.prob = best;
        nodes_.push_back(node);
        return static_cast<int>(nodes_.size()) - 1;
    }

    int build(const Dataset& train, const std::vector<std::size_t>& rows, int depth) {
        std::vector<double> counts(n_classes_, 0.0);
        for (std::size_t r : rows) counts[train.label(r)] += 1.0;
        const double total = static_cast<double>(rows.size());
        const bool pure = std::count_if(counts.begin(), counts.end(),
                                        [](double c) { return c > 0.0; }) <= 1;
        if (depth >= max_depth_ || rows.size() < 2 * static_cast<std::size_t>(min_leaf_) || pure)
            return make_leaf(train, rows);

        const Schema& schema = train.schema();
        double best_impurity = gini(counts, total);
        bool found = false;
        std::size_t best_f = 0;
        bool best_numeric = true;
        double best_thr = 0.0;
        std::int32_t best_cat = 0;

        for (std::size_t f = 0; f < schema.size(); ++f) {
            if (f == schema.label_index()) continue;
            if (schema.feature(f).type == FeatureType::Continuous) {
                std::vector<std::pair<double, std::int32_t>> vals;
                vals.reserve(rows.size());
                for (std::size_t r : rows) vals.emplace_back(train.numeric(f, r), train.label(r));
                std::sort(vals.begin(), vals.end());
                std::vector<double> left(n_classes_, 0.0);
                std::vector<double> right = counts;
                for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                    left[vals[i].second] += 1.0;
                    right[vals[i].second] -= 1.0;
                    if (vals[i].first == vals[i + 1].first) continue;
                    const double nl = static_cast<double>(i + 1);
                    const double nr = total - nl;
                    if (nl < min_leaf_ || nr < min_leaf_) continue;
                    const double imp = (nl * gini(left, nl) + nr * gini(right, nr)) / total;
                    if (imp + 1e-12 < best_impurity) {
                        best_impurity = imp;
                        found = true;
                        best_f = f;
                        best_numeric = true;
                        best_thr = 0.5 * (vals[i].first + vals[i + 1].first);
                    }
                }
            } else {
                const std::size_t m = schema.feature(f).cardinality();
                std::vector<std::vector<double>> per_cat(m, std::vector<double>(n_classes_, 0.0));
                std::vector<double> cat_n(m, 0.0);
                for (std::size_t r : rows) {
                    per_cat[train.category(f, r)][train.label(r)] += 1.0;
                    cat_n[train.category(f, r)] += 1.0;
                }
                for (std::size_t c = 0; c < m; ++c) {
                    const double nl = cat_n[c];
                    const double nr = total - nl;
                    if (nl < min_leaf_ || nr < min_leaf_) continue;
                    std::vector<double> rest(n_classes_);
                    for (std::size_t k = 0; k < n_classes_; ++k) rest[k] = counts[k] - per_cat[c][k];
                    const double imp = (nl * gini(per_cat[c], nl) + nr * gini(rest, nr)) / total;
                    if (imp + 1e-12 < best_impurity) {
                        best_impurity = imp;
                        found = true;
                        best_f = f;
                        best_numeric = false;
                        best_cat = static_cast<std::int32_t>(c);
                    }
                }
            }
        }
        if (!found) return make_leaf(train, rows);

        std::vector<std::size_t> lrows, rrows;
        for (std::size_t r : rows) {
            bool left;
            if (best_numeric)
                left = train.numeric(best_f, r) <= best_thr;
            else
                left = train.category(best_f, r) == best_cat;
            (left ? lrows : rrows).push_back(r);
        }
        Node node;
        node.leaf = false;
        node.feature = best_f;
        node.numeric_split = best_numeric;
        node.threshold = best_thr;
        node.category = best_cat;
        nodes_.push_back(node);
        const int self = static_cast<int>(nodes_.size()) - 1;
        const int left = build(train, lrows, depth + 1);
        const int right = build(train, rrows, depth + 1);
        nodes_[self].left = left;
        nodes_[self].right = right;
        return self;
    }

    std::size_t n_classes_;
    int max_depth_ = 6;
    int min_leaf_ = 5;
    std::vector<Node> nodes_;
    int root_ = 0;
};

// ---------------------------------------------------------------------------
// k nearest neighbors
// ---------------------------------------------------------------------------

class KnnPredictor final : public Predictor {
public:
    KnnPredictor(const Dataset& train, const nlohmann::json& hyper)
        : encoder_(train), n_classes_(train.schema().label().cardinality()) {
        k_ = static_cast<std::size_t>(hyper_num(hyper, "k", 5));
        if (k_ < 1 || k_ > train.n_rows()) throw_config("BadHyper", "knn k out of range");
        const std::size_t n = train.n_rows();
        points_.resize(n);
        labels_.resize(n);
        for (std::size_t r = 0; r < n; ++r) {
            points_[r] = encoder_.encode(train, r);
            labels_[r] = train.label(r);
        }
    }

    std::int32_t predict(const Dataset& data, std::size_t row) const override {
        return vote(data, row).first;
    }
    double confidence(const Dataset& data, std::size_t row) const override {
        return vote(data, row).second;
    }

private:
    std::pair<std::int32_t, double> vote(const Dataset& data, std::size_t row) const {
        std::vector<double> q(encoder_.dim());
        encoder_.encode(data, row, q.data());
        // (distance, train index); index tiebreak keeps results deterministic
        std::vector<std::pair<double, std::size_t>> d(points_.size());
        for (std::size_t i = 0; i < points_.size(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < q.size(); ++j) {
                const double diff = points_[i][j] - q[j];
                s += diff * diff;
            }
            d[i] = {s, i};
        }
        std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k_), d.end());
        std::vector<double> votes(n_classes_, 0.0);
        for (std::size_t i = 0; i < k_; ++i) votes[labels_[d[i].second]] += 1.0;
        std::size_t best = 0;
        for (std::size_t k = 1; k < n_classes_; ++k)
            if (votes[k] > votes[best]) best = k;
        return {static_cast<std::int32_t>(best), votes[best] / static_cast<double>(k_)};
    }

    FeatureEncoder encoder_;
    std::size_t n_classes_;
    std::size_t k_ = 5;
    std::vector<std::vector<double>> points_;
    std::vector<std::int32_t> labels_;
};

// ---------------------------------------------------------------------------
// naive Bayes: Gaussian continuous, Laplace-smoothed categorical
// ---------------------------------------------------------------------------

class NaiveBayesPredictor final : public Predictor {
public:
    explicit NaiveBayesPredictor(const Dataset& train)
        : schema_(train.schema_ptr()), n_classes_(train.schema().label().cardinality()) {
        const std::size_t n = train.n_rows();
        const std::size_t label = schema_->label_index();
        class_count_.assign(n_classes_, 0.0);
        for (std::size_t r = 0; r < n; ++r) class_count_[train.label(r)] += 1.0;
        log_prior_.resize(n_classes_);
        for (std::size_t k = 0; k < n_classes_; ++k)
            log_prior_[k] = std::log((class_count_[k] + 1.0) / (static_cast<double>(n) + n_classes_));

        gauss_.assign(schema_->size(), {});
        cat_logp_.assign(schema_->size(), {});
        for (std::size_t f = 0; f < schema_->size(); ++f) {
            if (f == label) continue;
            const Feature& feat = schema_->feature(f);
            if (feat.type == FeatureType::Continuous) {
                gauss_[f].assign(n_classes_, {0.0, 1.0});
                std::vector<double> sum(n_classes_, 0.0), sum2(n_classes_, 0.0);
                for (std::size_t r = 0; r < n; ++r) {
                    const double v = train.numeric(f, r);
                    sum[train.label(r)] += v;
                    sum2[train.label(r)] += v * v;
                }
                for (std::size_t k = 0; k < n_classes_; ++k) {
                    const double c = std::max(class_count_[k], 1.0);
                    const double mu = sum[k] / c;
                    double var = sum2[k] / c - mu * mu;
                    var = std::max(var, 1e-9);
                    gauss_[f][k] = {mu, var};
                }
            } else {
                const std::size_t m = feat.cardinality();
                cat_logp_[f].assign(n_classes_, std::vector<double>(m, 0.0));
                std::vector<std::vector<double>> counts(n_classes_, std::vector<double>(m, 0.0));
                for (std::size_t r = 0; r < n; ++r)
                    counts[train.label(r)][train.category(f, r)] += 1.0;
                for (std::size_t k = 0; k < n_classes_; ++k)
                    for (std::size_t c = 0; c < m; ++c)
                        cat_logp_[f][k][c] = std::log((counts[k][c] + 1.0) /
                                                      (class_count_[k] + static_cast<double>(m)));
            }
        }
    }

    std::int32_t predict(const Dataset& data, std::size_t row) const override {
        return posterior(data, row).first;
    }
    double confidence(const Dataset& data, std::size_t row) const override {
        return posterior(data, row).second;
    }

private:
    std::pair<std::int32_t, double> posterior(const Dataset& data, std::size_t row) const {
        std::vector<double> logp = log_prior_;
        const std::size_t label = schema_->label_index();
        for (std::size_t f = 0; f < schema_->size(); ++f) {
            if (f == label) continue;
            if (schema_->feature(f).type == FeatureType::Continuous) {
                const double v = data.numeric(f, row);
                for (std::size_t k = 0; k < n_classes_; ++k) {
                    const auto [mu, var] = gauss_[f][k];
                    logp[k] += -0.5 * std::log(2.0 * M_PI * var) - (v - mu) * (v - mu) / (2.0 * var);
                }
            } else {
                const std::int32_t c = data.category(f, row);
                for (std::size_t k = 0; k < n_classes_; ++k) logp[k] += cat_logp_[f][k][c];
            }
        }
        const double mx = *std::max_element(logp.begin(), logp.end());
        double z = 0.0;
        for (double& v : logp) {
            v = std::exp(v - mx);
            z += v;
        }
        std::size_t best = 0;
        for (std::size_t k = 1; k < n_classes_; ++k)
            if (logp[k] > logp[best]) best = k;
        return {static_cast<std::int32_t>(best), logp[best] / z};
    }

    SchemaPtr schema_;
    std::size_t n_classes_;
    std::vector<double> class_count_;
    std::vector<double> log_prior_;
    std::vector<std::vector<std::pair<double, double>>> gauss_;
    std::vector<std::vector<std::vector<double>>> cat_logp_;
};

// ---------------------------------------------------------------------------
// external predictions
// ---------------------------------------------------------------------------

class ExternalPredictor final : public Predictor {
public:
    explicit ExternalPredictor(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw_config("MissingFile", "cannot open '" + path + "'");
        std::string line;
        if (!std::getline(in, line)) throw_data("EmptyFile", "'" + path + "' is empty");
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            std::size_t c1 = line.find(',');
            std::size_t c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
            if (c1 == std::string::npos || c2 == std::string::npos)
                throw_data("BadRow", path + ":" + std::to_string(line_no) + ": expected 3 fields");
            std::size_t idx = 0;
            double conf = 0.0;
            try {
                idx = std::stoull(line.substr(0, c1));
                conf = std::stod(line.substr(c2 + 1));
            } catch (const std::exception&) {
                throw_data("BadRow", path + ":" + std::to_string(line_no) + ": parse error");
            }
            if (!(conf >= 0.0 && conf <= 1.0))
                throw_data("BadConfidence",
                           path + ":" + std::to_string(line_no) + ": confidence outside [0,1]");
            entries_[idx] = {line.substr(c1 + 1, c2 - c1 - 1), conf};
        }
    }

    std::int32_t predict(const Dataset& data, std::size_t row) const override {
        const auto& e = lookup(row);
        return data.schema().category_index(data.schema().label_index(), e.first);
    }
    double confidence(const Dataset&, std::size_t row) const override {
        return lookup(row).second;
    }

private:
    const std::pair<std::string, double>& lookup(std::size_t row) const {
        auto it = entries_.find(row);
        if (it == entries_.end())
            throw_data("MissingPrediction", "no prediction for row " + std::to_string(row));
        return it->second;
    }

    std::map<std::size_t, std::pair<std::string, double>> entries_;
};

}  // namespace

PredictorPtr fit_predictor(const std::string& kind, const Dataset& train,
                           const nlohmann::json& hyper, std::uint64_t seed) {
    (void)seed;  // built-ins are deterministic; the seed is part of the contract
    check_trainable(train);
    if (kind == "logistic") return std::make_shared<LogisticPredictor>(train, hyper);
    if (kind == "tree") return std::make_shared<TreePredictor>(train, hyper);
    if (kind == "knn") return std::make_shared<KnnPredictor>(train, hyper);
    if (kind == "naive_bayes") return std::make_shared<NaiveBayesPredictor>(train);
    throw_config("BadHyper", "unknown predictor kind '" + kind + "'");
}

PredictorPtr load_external(const std::string& path) {
    return std::make_shared<ExternalPredictor>(path);
}

std::vector<std::int32_t> predict_all(const Predictor& f, const Dataset& data) {
    std::vector<std::int32_t> out(data.n_rows());
    for (std::size_t r = 0; r < data.n_rows(); ++r) out[r] = f.predict(data, r);
    return out;
}

}  // namespace synteval
