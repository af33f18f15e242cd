#include <doctest.h>

#include <nlohmann/json.hpp>

#include "core/error.hpp"
#include "core/evaluate.hpp"
#include "core/predictor.hpp"
#include "core/rng.hpp"
#include "support.hpp"

using namespace synteval;
using namespace testsupport;

namespace {

// two clusters, linearly separable by age
Dataset separable(std::size_t n_per_class, std::uint64_t seed) {
    Dataset d(mixed_schema());
    Rng rng(seed);
    for (std::size_t i = 0; i < n_per_class; ++i) {
        d.append(make_row(20.0 + rng.uniform(), 0, 0, 0));
        d.append(make_row(80.0 + rng.uniform(), 1, 1, 1));
    }
    return d;
}

double train_accuracy(const Predictor& f, const Dataset& d) {
    double correct = 0;
    for (std::size_t r = 0; r < d.n_rows(); ++r)
        if (f.predict(d, r) == d.label(r)) correct += 1.0;
    return correct / static_cast<double>(d.n_rows());
}

}  // namespace

TEST_CASE("logistic separates a separable toy set") {
    const Dataset train = separable(50, 2);
    const PredictorPtr f = fit_predictor("logistic", train, {}, 0);
    CHECK(train_accuracy(*f, train) == 1.0);
}

TEST_CASE("degenerate label is rejected") {
    Dataset d(mixed_schema());
    d.append(make_row(1, 0, 0, 1));
    d.append(make_row(2, 1, 0, 1));
    CHECK_THROWS_WITH_AS(fit_predictor("logistic", d, {}, 0), doctest::Contains("DegenerateLabel"),
                         Error);
}

TEST_CASE("knn with k=1 memorizes distinct rows") {
    const Dataset train = separable(20, 3);
    const PredictorPtr f = fit_predictor("knn", train, nlohmann::json{{"k", 1}}, 0);
    CHECK(train_accuracy(*f, train) == 1.0);
}

TEST_CASE("tree and naive bayes learn the separable split") {
    const Dataset train = separable(50, 4);
    for (const char* kind : {"tree", "naive_bayes"}) {
        const PredictorPtr f = fit_predictor(kind, train, {}, 0);
        CHECK(train_accuracy(*f, train) == 1.0);
    }
}

TEST_CASE("confidence of the predicted label is at least 1/classes") {
    const Dataset train = separable(30, 5);
    Dataset probe(mixed_schema());
    Rng rng(6);
    for (int i = 0; i < 100; ++i)
        probe.append(make_row(rng.uniform(0.0, 100.0),
                              static_cast<std::int32_t>(rng.uniform_index(3)),
                              static_cast<std::int32_t>(rng.uniform_index(2)),
                              static_cast<std::int32_t>(rng.uniform_index(2))));
    for (const char* kind : {"logistic", "tree", "knn", "naive_bayes"}) {
        const PredictorPtr f = fit_predictor(kind, train, {}, 0);
        for (std::size_t r = 0; r < probe.n_rows(); ++r) {
            const double c = f->confidence(probe, r);
            CHECK(c >= 0.5);  // binary label: 1/K = 0.5
            CHECK(c <= 1.0);
        }
    }
}

TEST_CASE("refit with identical inputs gives identical predictions") {
    const Dataset train = separable(40, 8);
    const Dataset probe = separable(25, 9);
    for (const char* kind : {"logistic", "tree", "knn", "naive_bayes"}) {
        const PredictorPtr a = fit_predictor(kind, train, {}, 42);
        const PredictorPtr b = fit_predictor(kind, train, {}, 42);
        for (std::size_t r = 0; r < probe.n_rows(); ++r) {
            CHECK(a->predict(probe, r) == b->predict(probe, r));
            CHECK(a->confidence(probe, r) == b->confidence(probe, r));
        }
    }
}

TEST_CASE("external predictions answer by lookup") {
    const auto path = write_file("preds.csv",
                                 "row_index,label,confidence\n"
                                 "0,1,0.9\n"
                                 "1,0,0.6\n"
                                 "2,1,0.55\n");
    const PredictorPtr f = load_external(path);
    Dataset d(mixed_schema());
    for (int i = 0; i < 4; ++i) d.append(make_row(10.0 * i, 0, 0, i % 2));
    CHECK(f->predict(d, 0) == 1);
    CHECK(f->confidence(d, 1) == doctest::Approx(0.6));
    CHECK_THROWS_WITH_AS(f->predict(d, 3), doctest::Contains("MissingPrediction"), Error);
}

TEST_CASE("external predictions validate confidence range") {
    const auto path = write_file("badconf.csv",
                                 "row_index,label,confidence\n"
                                 "0,1,1.3\n");
    CHECK_THROWS_WITH_AS(load_external(path), doctest::Contains("BadConfidence"), Error);
}

TEST_CASE("unknown predictor kind and bad hyper are config errors") {
    const Dataset train = separable(10, 1);
    CHECK_THROWS_WITH_AS(fit_predictor("forest", train, {}, 0), doctest::Contains("BadHyper"),
                         Error);
    CHECK_THROWS_WITH_AS(fit_predictor("knn", train, nlohmann::json{{"k", 0}}, 0),
                         doctest::Contains("BadHyper"), Error);
}
