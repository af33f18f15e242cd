#include <doctest.h>

#include <cmath>
#include <functional>

#include "core/baselines.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/stats.hpp"
#include "support.hpp"

using namespace synteval;
using namespace testsupport;

namespace {

class TablePredictor final : public Predictor {
public:
    using PredFn = std::function<std::int32_t(const Dataset&, std::size_t)>;
    using ConfFn = std::function<double(const Dataset&, std::size_t)>;
    TablePredictor(PredFn p, ConfFn c) : pred_(std::move(p)), conf_(std::move(c)) {}
    std::int32_t predict(const Dataset& d, std::size_t r) const override { return pred_(d, r); }
    double confidence(const Dataset& d, std::size_t r) const override { return conf_(d, r); }

private:
    PredFn pred_;
    ConfFn conf_;
};

Dataset rows_with_labels(std::initializer_list<std::int32_t> ys) {
    Dataset d(mixed_schema());
    double age = 0.0;
    for (std::int32_t y : ys) d.append(make_row(age += 1.0, 0, 0, y));
    return d;
}

}  // namespace

TEST_CASE("atc threshold matching") {
    SUBCASE("hand-computed threshold and target estimate") {
        // source correctness (1,1,1,0), confidences (0.9,0.8,0.6,0.4): acc 0.75,
        // t = 0.25-quantile of confidences = 0.55; target confs (0.9,0.5) -> 0.5
        const Dataset source = rows_with_labels({1, 1, 1, 0});
        const Dataset target = rows_with_labels({0, 0});
        const std::vector<double> src_conf{0.9, 0.8, 0.6, 0.4};
        const std::vector<double> tgt_conf{0.9, 0.5};
        const TablePredictor f(
            [&](const Dataset& d, std::size_t r) {
                if (&d == &source) return r == 3 ? 1 - d.label(r) : d.label(r);
                return d.label(r);
            },
            [&](const Dataset& d, std::size_t r) {
                return &d == &source ? src_conf[r] : tgt_conf[r];
            });
        const BaselineResult r = atc_predict(f, source, target);
        CHECK(r.estimate == doctest::Approx(0.5));
        CHECK(r.inputs_used == "unlabeled_target");
    }

    SUBCASE("self-consistency on target = source") {
        Dataset source(mixed_schema());
        Rng rng(1);
        for (int i = 0; i < 200; ++i)
            source.append(make_row(rng.uniform(0.0, 1.0), 0, 0,
                                   static_cast<std::int32_t>(rng.uniform_index(2))));
        const TablePredictor f(
            [](const Dataset& d, std::size_t r) {
                return static_cast<std::int32_t>(d.numeric(0, r) > 0.3 ? 1 : 0);
            },
            [](const Dataset& d, std::size_t r) {
                return 0.5 + 0.5 * std::fabs(d.numeric(0, r) - 0.3);
            });
        double acc = 0.0;
        for (std::size_t r = 0; r < source.n_rows(); ++r)
            if (f.predict(source, r) == source.label(r)) acc += 1.0;
        acc /= static_cast<double>(source.n_rows());
        const BaselineResult r = atc_predict(f, source, source);
        CHECK(std::fabs(r.estimate - acc) <= 1.0 / static_cast<double>(source.n_rows()) + 1e-12);
    }
}

TEST_CASE("doc difference of confidences") {
    const Dataset source = rows_with_labels({1, 1, 1, 1, 1, 1, 1, 1, 1, 0});
    const Dataset target = rows_with_labels({0, 0});

    SUBCASE("hand arithmetic: 0.9 + (0.75 - 0.85) = 0.80") {
        const TablePredictor f(
            [&](const Dataset& d, std::size_t r) {
                if (&d == &source) return r == 9 ? 1 - d.label(r) : d.label(r);  // acc 0.9
                return d.label(r);
            },
            [&](const Dataset& d, std::size_t) { return &d == &source ? 0.85 : 0.75; });
        const BaselineResult r = doc_predict(f, source, target);
        CHECK(r.estimate == doctest::Approx(0.80));
        CHECK_FALSE(r.flagged);
    }

    SUBCASE("equal mean confidences return source accuracy") {
        const TablePredictor f(
            [&](const Dataset& d, std::size_t r) {
                if (&d == &source) return r == 9 ? 1 - d.label(r) : d.label(r);
                return d.label(r);
            },
            [](const Dataset&, std::size_t) { return 0.7; });
        CHECK(doc_predict(f, source, target).estimate == doctest::Approx(0.9));
    }

    SUBCASE("an extreme drop clips to zero with a flag") {
        const TablePredictor f(
            [&](const Dataset& d, std::size_t r) {
                if (&d == &source) return 1 - d.label(r);  // acc 0
                return d.label(r);
            },
            [&](const Dataset& d, std::size_t) { return &d == &source ? 0.99 : 0.01; });
        const BaselineResult r = doc_predict(f, source, target);
        CHECK(r.estimate == 0.0);
        CHECK(r.flagged);
    }
}

TEST_CASE("importance reweighting") {
    SUBCASE("identical feature distributions reduce to the plain estimate") {
        Dataset source(mixed_schema());
        Rng rng(2);
        for (int i = 0; i < 300; ++i)
            source.append(make_row(rng.uniform(0.0, 1.0), 0, 0,
                                   static_cast<std::int32_t>(rng.uniform_index(2))));
        const TablePredictor f(
            [](const Dataset& d, std::size_t r) {
                return static_cast<std::int32_t>(d.numeric(0, r) > 0.6 ? 1 : 0);
            },
            [](const Dataset&, std::size_t) { return 1.0; });
        double acc = 0.0;
        for (std::size_t r = 0; r < source.n_rows(); ++r)
            if (f.predict(source, r) == source.label(r)) acc += 1.0;
        acc /= static_cast<double>(source.n_rows());
        const BaselineResult r = im_predict(f, source, source, {"age"}, 10);
        CHECK(r.estimate == doctest::Approx(acc).epsilon(1e-12));
    }

    SUBCASE("two-stratum enumeration oracle") {
        // stratum A (age < 0.5): f always right; stratum B: always wrong.
        // source: 50/50; target: 90% stratum B.
        Dataset source(mixed_schema());
        for (int i = 0; i < 50; ++i) source.append(make_row(0.25, 0, 0, 1));
        for (int i = 0; i < 50; ++i) source.append(make_row(0.75, 0, 0, 1));
        Dataset target(mixed_schema());
        for (int i = 0; i < 10; ++i) target.append(make_row(0.25, 0, 0, 0));
        for (int i = 0; i < 90; ++i) target.append(make_row(0.75, 0, 0, 0));
        const TablePredictor f(
            [](const Dataset& d, std::size_t r) {
                return static_cast<std::int32_t>(d.numeric(0, r) < 0.5 ? 1 : 0);
            },
            [](const Dataset&, std::size_t) { return 1.0; });

        // enumeration oracle over the 2 occupied bins with Laplace smoothing 1
        // src bin mass: (51/60, ...) with 10 bins: counts 50,50 -> (51, 1*8, 51)
        const double src_a = 51.0 / 110.0, src_b = 51.0 / 110.0;
        const double tgt_a = 11.0 / 110.0, tgt_b = 91.0 / 110.0;
        const double wa = tgt_a / src_a, wb = tgt_b / src_b;
        const double expected = (50.0 * wa * 1.0 + 50.0 * wb * 0.0) / (50.0 * wa + 50.0 * wb);
        const BaselineResult r = im_predict(f, source, target, {"age"}, 10);
        CHECK(r.estimate == doctest::Approx(expected).epsilon(1e-9));
        CHECK(r.estimate < 0.25);  // weights concentrate on the failing stratum
    }
}

TEST_CASE("real-data shift baselines") {
    SchemaPtr schema = [&] {
        std::vector<Feature> f;
        f.push_back({"age", FeatureType::Continuous, {}});
        f.push_back({"y", FeatureType::Binary, {}});
        return std::make_shared<Schema>(f, "y");
    }();
    Dataset test(schema);
    Rng rng(3);
    for (int i = 0; i < 2000; ++i) {
        const double age = 50 + 10 * rng.normal();
        test.append(Row{age, static_cast<std::int32_t>(age < 55.0 ? 1 : 0)});
    }
    const TablePredictor f(
        [](const Dataset& d, std::size_t r) {
            return static_cast<std::int32_t>(d.numeric(0, r) < 55.0 ? 1 : 0);
        },
        [](const Dataset&, std::size_t) { return 1.0; });

    SUBCASE("MS with s=0 is the plain test accuracy") {
        const BaselineResult r = ms_baseline(test, f, "age", 0.0, MetricKind::accuracy());
        CHECK(r.estimate == doctest::Approx(1.0));
        CHECK(r.inputs_used == "none");
    }

    SUBCASE("MS shifts move a threshold model in the predicted direction") {
        // shifting ages +20 pushes rows past the fixed threshold while the
        // labels stay, so accuracy must drop
        const BaselineResult r = ms_baseline(test, f, "age", 20.0, MetricKind::accuracy());
        CHECK(r.estimate < 0.7);
    }

    SUBCASE("RS with s=0 approximates the plain accuracy") {
        const ShiftTarget target =
            ShiftTarget::from_marginal_shift(test, MarginalShiftSpec::mean_shift("age", 0.0), 0.0);
        const BaselineResult r =
            rs_baseline(test, f, target, 1000, MetricKind::accuracy(), 4);
        CHECK(r.estimate == doctest::Approx(1.0));
    }
}

TEST_CASE("bootstrap intervals") {
    Dataset d(mixed_schema());
    Rng rng(5);
    for (int i = 0; i < 400; ++i)
        d.append(make_row(rng.uniform(0.0, 1.0), static_cast<std::int32_t>(rng.uniform_index(3)),
                          0, static_cast<std::int32_t>(rng.uniform_index(2))));

    SUBCASE("constant-correctness predictor gives a zero-width interval") {
        const TablePredictor f([](const Dataset& d2, std::size_t r) { return d2.label(r); },
                               [](const Dataset&, std::size_t) { return 1.0; });
        const BaselineResult r = bootstrap_interval(
            f, d, SubgroupSpec::category_equals(d.schema(), "race", "Black"),
            MetricKind::accuracy(), 50, 6);
        CHECK(r.estimate == 1.0);
        REQUIRE(r.interval.has_value());
        CHECK(r.interval->lo == 1.0);
        CHECK(r.interval->hi == 1.0);
    }

    SUBCASE("noisy predictor yields positive spread") {
        const TablePredictor f(
            [](const Dataset& d2, std::size_t r) {
                return static_cast<std::int32_t>(d2.numeric(0, r) > 0.5 ? 1 : 0);
            },
            [](const Dataset&, std::size_t) { return 1.0; });
        const BaselineResult r = bootstrap_interval(
            f, d, SubgroupSpec::category_equals(d.schema(), "race", "White"),
            MetricKind::accuracy(), 50, 7);
        REQUIRE(r.interval.has_value());
        CHECK(r.interval->hi > r.interval->lo);
        CHECK(r.inputs_used == "none");
    }

    SUBCASE("empty subgroup is rejected") {
        Dataset small(mixed_schema());
        for (int i = 0; i < 5; ++i) small.append(make_row(1.0, 0, 0, 1));
        const TablePredictor f([](const Dataset& d2, std::size_t r) { return d2.label(r); },
                               [](const Dataset&, std::size_t) { return 1.0; });
        CHECK_THROWS_WITH_AS(
            bootstrap_interval(f, small, SubgroupSpec::category_equals(small.schema(), "race", "Black"),
                               MetricKind::accuracy(), 20, 8),
            doctest::Contains("EmptySubgroup"), Error);
    }
}
