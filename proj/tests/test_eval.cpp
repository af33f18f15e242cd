#include <doctest.h>

#include <functional>

#include "core/error.hpp"
#include "core/evaluate.hpp"
#include "core/generate.hpp"
#include "core/rng.hpp"
#include "core/stats.hpp"
#include "support.hpp"

using namespace synteval;
using namespace testsupport;

namespace {

class LambdaPredictor final : public Predictor {
public:
    using Fn = std::function<std::int32_t(const Dataset&, std::size_t)>;
    using ConfFn = std::function<double(const Dataset&, std::size_t)>;
    LambdaPredictor(Fn fn, ConfFn conf) : fn_(std::move(fn)), conf_(std::move(conf)) {}
    std::int32_t predict(const Dataset& d, std::size_t r) const override { return fn_(d, r); }
    double confidence(const Dataset& d, std::size_t r) const override { return conf_(d, r); }

private:
    Fn fn_;
    ConfFn conf_;
};

LambdaPredictor always_right() {
    return LambdaPredictor([](const Dataset& d, std::size_t r) { return d.label(r); },
                           [](const Dataset&, std::size_t) { return 1.0; });
}

}  // namespace

TEST_CASE("estimate on subgroups") {
    Dataset d(mixed_schema());
    d.append(make_row(10, 1, 0, 1));
    d.append(make_row(20, 1, 0, 0));
    d.append(make_row(30, 1, 1, 1));
    d.append(make_row(40, 1, 1, 1));
    d.append(make_row(50, 0, 0, 0));

    SUBCASE("all correct gives 1.0") {
        const LambdaPredictor f = always_right();
        const PerfEstimate e = estimate(f, d, SubgroupSpec::full_space(), MetricKind::accuracy());
        CHECK(e.value == 1.0);
        CHECK(e.n_eval == 5);
    }

    SUBCASE("three correct of four") {
        // wrong exactly on row 1 within race=Black (rows 0..3)
        const LambdaPredictor f(
            [](const Dataset& d2, std::size_t r) { return r == 1 ? 1 - d2.label(r) : d2.label(r); },
            [](const Dataset&, std::size_t) { return 1.0; });
        const PerfEstimate e = estimate(
            f, d, SubgroupSpec::category_equals(d.schema(), "race", "Black"),
            MetricKind::accuracy());
        CHECK(e.value == doctest::Approx(0.75));
        CHECK(e.n_eval == 4);
    }

    SUBCASE("empty subgroup is surfaced, not NaN") {
        SubgroupSpec far;
        far.add_interval(d.schema(), "age", 1000.0, 2000.0);
        const LambdaPredictor f = always_right();
        CHECK_THROWS_WITH_AS(estimate(f, d, far, MetricKind::accuracy()),
                             doctest::Contains("EmptySubgroup"), Error);
    }
}

TEST_CASE("estimate equals brute-force row averaging on the full space") {
    Dataset d(mixed_schema());
    Rng rng(31);
    for (int i = 0; i < 1000; ++i)
        d.append(make_row(rng.uniform(0.0, 9.0), static_cast<std::int32_t>(rng.uniform_index(3)),
                          static_cast<std::int32_t>(rng.uniform_index(2)),
                          static_cast<std::int32_t>(rng.uniform_index(2))));
    const LambdaPredictor f(
        [](const Dataset& d2, std::size_t r) {
            return static_cast<std::int32_t>(d2.numeric(0, r) > 4.0 ? 1 : 0);
        },
        [](const Dataset&, std::size_t) { return 1.0; });
    double correct = 0.0;
    for (std::size_t r = 0; r < d.n_rows(); ++r)
        if (f.predict(d, r) == d.label(r)) correct += 1.0;
    const PerfEstimate e = estimate(f, d, SubgroupSpec::full_space(), MetricKind::accuracy());
    CHECK(e.value == doctest::Approx(correct / 1000.0).epsilon(1e-12));
}

TEST_CASE("member summary follows the sample mean and variance") {
    const EnsembleEstimate e = summarize_members({0.8, 0.9, 1.0});
    CHECK(e.mean == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(e.sd == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(e.interval.lo == doctest::Approx(0.7).epsilon(1e-9));
    CHECK(e.interval.hi == 1.0);  // clipped at 1
}

TEST_CASE("ensemble estimates") {
    Dataset d(mixed_schema());
    Rng rng(32);
    for (int i = 0; i < 600; ++i) {
        const auto race = static_cast<std::int32_t>(rng.uniform_index(3));
        const auto y = static_cast<std::int32_t>(rng.bernoulli(race == 1 ? 0.8 : 0.4) ? 1 : 0);
        d.append(make_row(rng.uniform(0.0, 80.0), race,
                          static_cast<std::int32_t>(rng.uniform_index(2)), y));
    }
    const LambdaPredictor f = always_right();
    const SubgroupSpec spec = SubgroupSpec::category_equals(d.schema(), "race", "Black");

    SUBCASE("K=1 equals the single-member estimate and is flagged degenerate") {
        const GeneratorEnsemble ens = GeneratorEnsemble::fit(d, 1, 0.05, 5);
        const EnsembleEstimate e =
            ensemble_estimate(ens, f, spec, MetricKind::accuracy(), 500, 9);
        CHECK(e.degenerate);
        CHECK(e.sd == 0.0);
        CHECK(e.interval.lo == e.interval.hi);
        const GeneratedSample direct =
            generate_for_spec(ens.member(0), spec, 500, Rng::derive(9, 100));
        CHECK(e.mean ==
              doctest::Approx(metric_value(f, direct.data, MetricKind::accuracy(), nullptr)));
    }

    SUBCASE("mean is exactly the arithmetic mean of member values") {
        const GeneratorEnsemble ens = GeneratorEnsemble::fit(d, 5, 0.05, 6);
        const EnsembleEstimate e =
            ensemble_estimate(ens, f, spec, MetricKind::accuracy(), 400, 10);
        CHECK(e.member_values.size() == 5);
        CHECK(e.mean == doctest::Approx(mean(e.member_values)).epsilon(1e-15));
    }

    SUBCASE("unsatisfiable spec raises EmptyConditional") {
        const GeneratorEnsemble ens = GeneratorEnsemble::fit(d, 2, 0.05, 7);
        SubgroupSpec conflict = SubgroupSpec::category_equals(d.schema(), "race", "Black");
        conflict.add_category(d.schema(), "race", "White");
        CHECK_THROWS_WITH_AS(ensemble_estimate(ens, f, conflict, MetricKind::accuracy(), 100, 1),
                             doctest::Contains("EmptyConditional"), Error);
    }
}

TEST_CASE("balanced sample size is the largest subgroup count") {
    Dataset d(mixed_schema());
    for (int i = 0; i < 86; ++i) d.append(make_row(1, 0, 0, 0));
    for (int i = 0; i < 9; ++i) d.append(make_row(1, 1, 0, 0));
    for (int i = 0; i < 5; ++i) d.append(make_row(1, 2, 0, 0));
    std::vector<SubgroupSpec> groups;
    for (const char* cat : {"White", "Black", "Other"})
        groups.push_back(SubgroupSpec::category_equals(d.schema(), "race", cat));
    CHECK(balanced_sample_size(d, groups) == 86);
}

TEST_CASE("coverage and width") {
    SUBCASE("full intervals cover everything with width one") {
        const std::vector<Interval> iv(4, Interval{0.0, 1.0});
        const std::vector<double> truths{0.1, 0.5, 0.9, 1.0};
        const auto [cov, width] = coverage_width(iv, truths);
        CHECK(cov == 1.0);
        CHECK(width == 1.0);
    }
    SUBCASE("point intervals at the truths") {
        const std::vector<double> truths{0.3, 0.6};
        const std::vector<Interval> iv{{0.3, 0.3}, {0.6, 0.6}};
        const auto [cov, width] = coverage_width(iv, truths);
        CHECK(cov == 1.0);
        CHECK(width == 0.0);
    }
    SUBCASE("hand-computed mixed case") {
        const std::vector<double> truths{0.5, 0.9};
        const std::vector<Interval> iv{{0.4, 0.6}, {0.0, 0.1}};
        const auto [cov, width] = coverage_width(iv, truths);
        CHECK(cov == doctest::Approx(0.5));
        CHECK(width == doctest::Approx(0.15));
    }
    SUBCASE("permutation invariance") {
        const std::vector<double> truths{0.5, 0.9, 0.2};
        const std::vector<Interval> iv{{0.4, 0.6}, {0.0, 0.1}, {0.1, 0.9}};
        const auto [cov1, width1] = coverage_width(iv, truths);
        const std::vector<double> truths2{0.2, 0.5, 0.9};
        const std::vector<Interval> iv2{{0.1, 0.9}, {0.4, 0.6}, {0.0, 0.1}};
        const auto [cov2, width2] = coverage_width(iv2, truths2);
        CHECK(cov1 == cov2);
        CHECK(width1 == doctest::Approx(width2).epsilon(1e-12));
    }
    SUBCASE("length mismatch") {
        CHECK_THROWS_WITH_AS(coverage_width({{0, 1}}, {0.5, 0.6}),
                             doctest::Contains("LengthMismatch"), Error);
    }
}

namespace {

// two sensitive groups with prescribed prediction tables
Dataset fairness_data(std::size_t per_group) {
    Dataset d(mixed_schema());
    for (std::size_t g = 0; g < 2; ++g)
        for (std::size_t i = 0; i < per_group; ++i)
            d.append(make_row(static_cast<double>(i), 0, static_cast<std::int32_t>(g),
                              static_cast<std::int32_t>(i % 2)));
    return d;
}

}  // namespace

TEST_CASE("fairness ratios") {
    SUBCASE("group-symmetric predictions give DI = EO = 1") {
        const Dataset d = fairness_data(20);
        const LambdaPredictor f(
            [](const Dataset& d2, std::size_t r) {
                return static_cast<std::int32_t>(d2.numeric(0, r) < 10 ? 1 : 0);
            },
            [](const Dataset&, std::size_t) { return 1.0; });
        CHECK(fairness_ratio(f, d, FairnessKind::DI, "sex") == doctest::Approx(1.0));
        CHECK(fairness_ratio(f, d, FairnessKind::EO, "sex") == doctest::Approx(1.0));
    }

    SUBCASE("selection rates 0.2 vs 0.4 give DI = 0.5") {
        const Dataset d = fairness_data(10);
        // group F selects rows 0,1 (rate .2); group M selects 0..3 (rate .4)
        const LambdaPredictor f(
            [](const Dataset& d2, std::size_t r) {
                const bool male = d2.category(2, r) == 1;
                const double idx = d2.numeric(0, r);
                return static_cast<std::int32_t>((male ? idx < 4 : idx < 2) ? 1 : 0);
            },
            [](const Dataset&, std::size_t) { return 1.0; });
        CHECK(fairness_ratio(f, d, FairnessKind::DI, "sex") == doctest::Approx(0.5));
    }

    SUBCASE("EO is the smaller of the TPR and FPR ratios") {
        // per group: 10 positives, 10 negatives.
        // group F: TPR 0.9, FPR 0.1; group M: TPR 0.6, FPR 0.2
        // EO = min(0.6/0.9, 0.1/0.2) = min(2/3, 1/2) = 0.5
        Dataset d(mixed_schema());
        auto add = [&](std::int32_t sex, std::int32_t y, std::int32_t pred, int count) {
            for (int i = 0; i < count; ++i)
                d.append(make_row(static_cast<double>(pred), 0, sex, y));
        };
        add(0, 1, 1, 9);
        add(0, 1, 0, 1);
        add(0, 0, 1, 1);
        add(0, 0, 0, 9);
        add(1, 1, 1, 6);
        add(1, 1, 0, 4);
        add(1, 0, 1, 2);
        add(1, 0, 0, 8);
        const LambdaPredictor f(
            [](const Dataset& d2, std::size_t r) {
                return static_cast<std::int32_t>(d2.numeric(0, r) > 0.5 ? 1 : 0);
            },
            [](const Dataset&, std::size_t) { return 1.0; });
        CHECK(fairness_ratio(f, d, FairnessKind::EO, "sex") == doctest::Approx(0.5));
    }

    SUBCASE("a group without positives is undefined for EO") {
        Dataset d(mixed_schema());
        for (int i = 0; i < 10; ++i) d.append(make_row(1, 0, 0, i % 2));
        for (int i = 0; i < 10; ++i) d.append(make_row(1, 0, 1, 0));  // group M: no positives
        const LambdaPredictor f = always_right();
        CHECK_THROWS_WITH_AS(fairness_ratio(f, d, FairnessKind::EO, "sex"),
                             doctest::Contains("UndefinedRate"), Error);
    }
}

TEST_CASE("intersectional matrices") {
    Dataset d(mixed_schema());
    Rng rng(40);
    for (int i = 0; i < 1200; ++i) {
        const auto race = static_cast<std::int32_t>(rng.uniform_index(3));
        const auto sex = static_cast<std::int32_t>(i < 1150 ? rng.uniform_index(2) : 0);
        d.append(make_row(rng.uniform(0.0, 100.0), race, sex,
                          static_cast<std::int32_t>(rng.uniform_index(2))));
    }
    const LambdaPredictor f = always_right();

    SUBCASE("cells below min_n are Null with their counts recorded") {
        const IntersectionalMatrix m = intersectional_matrix(
            f, d, "race", "sex", MetricKind::accuracy(), IntersectionalMatrix::kDefaultMinN, d);
        CHECK(m.min_n == 100);
        std::size_t total = 0;
        for (std::size_t i = 0; i < m.cells.size(); ++i)
            for (std::size_t j = 0; j < m.cells[i].size(); ++j) {
                total += m.cells[i][j].n;
                if (m.cells[i][j].n < 100) CHECK(m.cells[i][j].null);
                if (!m.cells[i][j].null) CHECK(m.cells[i][j].value == 1.0);
            }
        CHECK(total == d.n_rows());  // axes partition the eval set
    }

    SUBCASE("a feature crossed with itself populates only the diagonal") {
        const IntersectionalMatrix m =
            intersectional_matrix(f, d, "race", "race", MetricKind::accuracy(), 100, d);
        for (std::size_t i = 0; i < m.cells.size(); ++i)
            for (std::size_t j = 0; j < m.cells[i].size(); ++j) {
                if (i == j) continue;
                CHECK(m.cells[i][j].null);
                CHECK(m.cells[i][j].n == 0);
            }
    }

    SUBCASE("matrix MAE skips Null cells") {
        IntersectionalMatrix a, b;
        a.cells = {{{false, 0.8, 200}, {true, 0.0, 3}}};
        b.cells = {{{false, 0.6, 200}, {false, 0.9, 200}}};
        const auto mae = matrix_mae(a, b);
        REQUIRE(mae.has_value());
        CHECK(*mae == doctest::Approx(0.2));
    }

    SUBCASE("continuous axes are binned by reference quartiles") {
        const IntersectionalMatrix m =
            intersectional_matrix(f, d, "age", "sex", MetricKind::accuracy(), 50, d);
        CHECK(m.labels_a.size() == 4);
        std::size_t total = 0;
        for (const auto& row : m.cells)
            for (const auto& cell : row) total += cell.n;
        CHECK(total == d.n_rows());
    }
}

TEST_CASE("density bands") {
    Dataset d(mixed_schema());
    Rng rng(41);
    for (int i = 0; i < 1500; ++i)
        d.append(make_row(50 + 12 * rng.normal(), static_cast<std::int32_t>(rng.uniform_index(3)),
                          static_cast<std::int32_t>(rng.uniform_index(2)),
                          static_cast<std::int32_t>(rng.uniform_index(2))));
    const CopulaGenerator gen = CopulaGenerator::fit(d, 0.05, 0);
    const LambdaPredictor f = always_right();

    SUBCASE("trivial grid equals the whole-sample estimate") {
        const auto bands =
            density_band_report(gen, f, {0.0, 1.0}, 400, MetricKind::accuracy(), 3);
        REQUIRE(bands.size() == 1);
        CHECK(bands[0].estimate.n_eval == 400);
        CHECK(bands[0].estimate.value == 1.0);
    }

    SUBCASE("halving grid splits the sample exactly") {
        const auto bands =
            density_band_report(gen, f, {0.0, 0.5, 1.0}, 401, MetricKind::accuracy(), 4);
        REQUIRE(bands.size() == 2);
        CHECK(bands[0].estimate.n_eval == 200);
        CHECK(bands[1].estimate.n_eval == 201);
        CHECK(bands[0].radius_hi <= bands[1].radius_lo);
    }

    SUBCASE("band fractions match the grid and bands partition the sample") {
        const std::vector<double> grid{0.0, 0.2, 0.5, 0.9, 1.0};
        const auto bands = density_band_report(gen, f, grid, 1000, MetricKind::accuracy(), 5);
        REQUIRE(bands.size() == 4);
        std::size_t total = 0;
        for (std::size_t b = 0; b < 4; ++b) {
            const auto expect = static_cast<std::size_t>(grid[b + 1] * 1000) -
                                static_cast<std::size_t>(grid[b] * 1000);
            CHECK(bands[b].estimate.n_eval == expect);
            total += bands[b].estimate.n_eval;
        }
        CHECK(total == 1000);
    }
}

TEST_CASE("neighborhood reports") {
    Dataset d(mixed_schema());
    Rng rng(42);
    for (int i = 0; i < 500; ++i)
        d.append(make_row(rng.uniform(0.0, 100.0), static_cast<std::int32_t>(rng.uniform_index(3)),
                          static_cast<std::int32_t>(rng.uniform_index(2)),
                          static_cast<std::int32_t>(rng.uniform_index(2))));
    const LambdaPredictor f = always_right();

    SUBCASE("infinite radius covers the whole dataset") {
        NeighborhoodOptions opts;
        opts.epsilon = std::numeric_limits<double>::infinity();
        const PerfEstimate e =
            neighborhood_report(d, f, d.row(0), opts, MetricKind::accuracy(), d);
        CHECK(e.n_eval == d.n_rows());
    }

    SUBCASE("k nearest rows, k=1 on an exact test row") {
        NeighborhoodOptions opts;
        opts.k = 1;
        const PerfEstimate e =
            neighborhood_report(d, f, d.row(7), opts, MetricKind::accuracy(), d);
        CHECK(e.n_eval == 1);
        CHECK(e.value == 1.0);  // the row itself, predicted correctly
    }

    SUBCASE("generator source populates the ball") {
        const CopulaGenerator gen = CopulaGenerator::fit(d, 0.05, 0);
        NeighborhoodOptions opts;
        opts.epsilon = 2.5;
        opts.generator_target = 25;
        const PerfEstimate e =
            neighborhood_report(gen, f, d.row(3), opts, MetricKind::accuracy(), d, 11);
        CHECK(e.n_eval == 25);
        CHECK(e.source == "synthetic");
    }
}
