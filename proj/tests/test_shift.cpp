#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/shift.hpp"
#include "core/stats.hpp"
#include "support.hpp"

using namespace synteval;
using namespace testsupport;

namespace {

SchemaPtr age_flag_schema() {
    std::vector<Feature> f;
    f.push_back({"age", FeatureType::Continuous, {}});
    f.push_back({"flag", FeatureType::Binary, {}});
    f.push_back({"y", FeatureType::Binary, {}});
    return std::make_shared<Schema>(f, "y");
}

Dataset age_flag_data(std::size_t n, double flag_p, std::uint64_t seed) {
    Dataset d(age_flag_schema());
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const double age = 50.0 + 12.0 * rng.normal();
        const std::int32_t flag = rng.bernoulli(flag_p) ? 1 : 0;
        const std::int32_t y = rng.bernoulli(sigmoid((age - 50.0) / 12.0)) ? 1 : 0;
        d.append(Row{age, flag, y});
    }
    return d;
}

}  // namespace

TEST_CASE("categorical reweight scales the remaining probabilities") {
    // rescale factor (1-0.7)/(1-0.5) = 0.6
    const std::vector<double> shifted = reweighted_probabilities({0.5, 0.3, 0.2}, 0, 0.7);
    CHECK(shifted[0] == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(shifted[1] == doctest::Approx(0.18).epsilon(1e-12));
    CHECK(shifted[2] == doctest::Approx(0.12).epsilon(1e-12));
}

TEST_CASE("reweight output stays on the simplex with the target pinned") {
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = 2 + rng.uniform_index(6);
        std::vector<double> base(m);
        double total = 0.0;
        for (auto& p : base) {
            p = 0.05 + rng.uniform();
            total += p;
        }
        for (auto& p : base) p /= total;
        const std::size_t target = rng.uniform_index(m);
        const double q = 0.01 + 0.98 * rng.uniform();
        const std::vector<double> shifted = reweighted_probabilities(base, target, q);
        double sum = 0.0;
        for (double p : shifted) {
            CHECK(p >= 0.0);
            sum += p;
        }
        CHECK(std::fabs(sum - 1.0) <= 1e-12);
        CHECK(shifted[target] == q);
    }
}

TEST_CASE("logit shift additivity") {
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        const double p0 = 0.02 + 0.96 * rng.uniform();
        const double s1 = rng.uniform(-3.0, 3.0);
        const double s2 = rng.uniform(-3.0, 3.0);
        const double once = sigmoid(logit(p0) + s1 + s2);
        const double twice = sigmoid(logit(sigmoid(logit(p0) + s1)) + s2);
        CHECK(once == doctest::Approx(twice).epsilon(1e-9));
    }
}

TEST_CASE("shift_marginal families") {
    const Dataset d = age_flag_data(4000, 0.5, 3);
    const CopulaGenerator gen = CopulaGenerator::fit(d, 0.05, 0);

    SUBCASE("mean shift with s=0 keeps the mean") {
        const std::vector<Value> values =
            shift_marginal(gen, MarginalShiftSpec::mean_shift("age", 0.0), 4000, 1);
        std::vector<double> v;
        for (const Value& x : values) v.push_back(std::get<double>(x));
        const double sd = d.column_sd(0);
        CHECK(std::fabs(mean(v) - d.column_mean(0)) <= 2.0 * sd / std::sqrt(4000.0));
    }

    SUBCASE("logit shift moves a balanced prevalence to 3/4") {
        // sigmoid(logit(~0.5) + ln 3) = ~0.75
        const double p0 =
            std::get<CategoricalMarginal>(gen.marginal(1)).probability(1);
        const double expect = sigmoid(logit(p0) + std::log(3.0));
        const std::vector<Value> values =
            shift_marginal(gen, MarginalShiftSpec::logit_shift("flag", std::log(3.0)), 20000, 2);
        double ones = 0.0;
        for (const Value& x : values) ones += std::get<std::int32_t>(x);
        CHECK(std::fabs(ones / 20000.0 - expect) <= 0.01);
        CHECK(expect == doctest::Approx(0.75).epsilon(0.01));
    }

    SUBCASE("kind mismatches are rejected") {
        CHECK_THROWS_WITH_AS(shift_marginal(gen, MarginalShiftSpec::mean_shift("flag", 1.0), 10, 0),
                             doctest::Contains("KindMismatch"), Error);
        CHECK_THROWS_WITH_AS(
            shift_marginal(gen, MarginalShiftSpec::logit_shift("age", 1.0), 10, 0),
            doctest::Contains("KindMismatch"), Error);
    }
}

TEST_CASE("generate_shifted") {
    const Dataset d = age_flag_data(4000, 0.4, 4);
    const CopulaGenerator gen = CopulaGenerator::fit(d, 0.05, 0);

    SUBCASE("identity shift matches unconditional sampling distribution") {
        const GeneratedSample shifted =
            generate_shifted(gen, MarginalShiftSpec::mean_shift("age", 0.0), 5000, 5);
        const GeneratedSample plain = gen.sample(5000, 6);
        for (std::size_t f = 0; f < 1; ++f) {
            const auto ca = shifted.data.numeric_column(f);
            const auto cb = plain.data.numeric_column(f);
            CHECK(ks_statistic(std::vector<double>(ca.begin(), ca.end()),
                               std::vector<double>(cb.begin(), cb.end())) <= 0.03);
        }
    }

    SUBCASE("mean shift moves the output mean by s") {
        const GeneratedSample shifted =
            generate_shifted(gen, MarginalShiftSpec::mean_shift("age", 10.0), 5000, 7);
        const double sd = d.column_sd(0);
        CHECK(std::fabs(shifted.data.column_mean(0) - (d.column_mean(0) + 10.0)) <=
              2.0 * sd / std::sqrt(5000.0) + 0.05 * sd);
    }

    SUBCASE("saturating logit shift pins the feature at 1") {
        const GeneratedSample shifted =
            generate_shifted(gen, MarginalShiftSpec::logit_shift("flag", 20.0), 4000, 8);
        double ones = 0.0;
        for (std::int32_t c : shifted.data.category_column(1)) ones += c;
        CHECK(ones / 4000.0 >= 0.999);
    }

    SUBCASE("conditional path equals sample_given_columns on the same draws") {
        const MarginalShiftSpec shift = MarginalShiftSpec::mean_shift("age", 5.0);
        std::vector<Value> values = shift_marginal(gen, shift, 300, 9);
        const auto& m = std::get<ContinuousMarginal>(gen.marginal(0));
        for (auto& v : values)
            v = std::clamp(std::get<double>(v), m.support_low(), m.support_high());
        const GeneratedSample a = generate_shifted(gen, shift, 300, 9);
        const GeneratedSample b = gen.sample_given_columns({0}, {values}, 9);
        CHECK((a.latents - b.latents).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("generate_with_prior") {
    const Dataset d = age_flag_data(4000, 0.4, 10);
    const CopulaGenerator gen = CopulaGenerator::fit(d, 0.05, 0);

    SUBCASE("near-saturated bernoulli prior dominates the feature") {
        PriorMarginalSpec priors;
        priors.entries.push_back({"flag", BernoulliPrior{0.999}});
        const GeneratedSample s = generate_with_prior(gen, priors, 3000, 11);
        double ones = 0.0;
        for (std::int32_t c : s.data.category_column(1)) ones += c;
        CHECK(ones / 3000.0 >= 0.99);
    }

    SUBCASE("normal prior sets the output mean") {
        PriorMarginalSpec priors;
        priors.entries.push_back({"age", NormalPrior{50.0, 10.0}});
        const GeneratedSample s = generate_with_prior(gen, priors, 2500, 12);
        CHECK(std::fabs(s.data.column_mean(0) - 50.0) <= 0.6);  // 2*sigma/sqrt(n) = 0.4 plus slack
    }

    SUBCASE("empirical prior reproduces the target column") {
        Dataset target = age_flag_data(2000, 0.4, 13);
        PriorMarginalSpec priors = PriorMarginalSpec::from_observed(target, {"age"});
        const GeneratedSample s = generate_with_prior(gen, priors, 4000, 14);
        const auto ca = s.data.numeric_column(0);
        const auto cb = target.numeric_column(0);
        CHECK(ks_statistic(std::vector<double>(ca.begin(), ca.end()),
                           std::vector<double>(cb.begin(), cb.end())) <= 0.03);
    }
}

TEST_CASE("rejection sampling") {
    const Dataset source = age_flag_data(20000, 0.4, 15);

    SUBCASE("identity shift accepts every draw and matches the source") {
        const ShiftTarget target =
            ShiftTarget::from_marginal_shift(source, MarginalShiftSpec::mean_shift("age", 0.0), 0.0);
        const Dataset out = rejection_sample(source, target, 2000, 16);
        CHECK(out.n_rows() == 2000);
        const auto ca = out.numeric_column(0);
        const auto cb = source.numeric_column(0);
        CHECK(ks_statistic(std::vector<double>(ca.begin(), ca.end()),
                           std::vector<double>(cb.begin(), cb.end())) <= 0.03);
    }

    SUBCASE("one-sd mean shift lands on the shifted mean") {
        const double sd = source.column_sd(0);
        const ShiftTarget target = ShiftTarget::from_marginal_shift(
            source, MarginalShiftSpec::mean_shift("age", sd), 0.0);
        const Dataset out = rejection_sample(source, target, 2000, 17);
        CHECK(std::fabs(out.column_mean(0) - (source.column_mean(0) + sd)) <=
              3.0 * sd / std::sqrt(2000.0) + 0.05 * sd);
    }

    SUBCASE("impossible shift stalls") {
        const ShiftTarget target = ShiftTarget::from_marginal_shift(
            source, MarginalShiftSpec::mean_shift("age", 1e7), 0.0);
        CHECK_THROWS_WITH_AS(rejection_sample(source, target, 100, 18),
                             doctest::Contains("AcceptanceStall"), Error);
    }
}

TEST_CASE("shift buckets by quartile") {
    Dataset d(age_flag_schema());
    for (int i = 0; i <= 100; ++i) d.append(Row{static_cast<double>(i), 0, 0});
    // Q1 = 25, Q3 = 75 by the quantile oracle
    CHECK(quantile_oracle({0, 25, 50, 75, 100}, 0.25) == 25.0);
    CHECK(bucket_of(d, "age", 80.0) == ShiftBucket::Plus);
    CHECK(bucket_of(d, "age", 50.0) == ShiftBucket::PlusMinus);
    CHECK(bucket_of(d, "age", 10.0) == ShiftBucket::Minus);
    CHECK(bucket_of(d, "age", 25.0) == ShiftBucket::PlusMinus);  // boundary convention
    CHECK(bucket_of(d, "age", 75.0) == ShiftBucket::PlusMinus);
    CHECK_THROWS_WITH_AS(bucket_of(d, "flag", 0.5), doctest::Contains("NotContinuous"), Error);
}

namespace {

// label = 1{age < 50}; generator data flips labels with probability rising
// in age, so accuracy of the clean-rule model decreases under + shifts
Dataset drifting_labels(std::size_t n, std::uint64_t seed) {
    Dataset d(age_flag_schema());
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const double age = rng.uniform(0.0, 100.0);
        bool y = age < 50.0;
        if (rng.uniform() < std::clamp(age / 200.0, 0.0, 0.5)) y = !y;
        d.append(Row{age, static_cast<std::int32_t>(rng.bernoulli(0.5) ? 1 : 0),
                     static_cast<std::int32_t>(y ? 1 : 0)});
    }
    return d;
}

Dataset clean_labels(std::size_t n, std::uint64_t seed) {
    Dataset d(age_flag_schema());
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const double age = rng.uniform(0.0, 100.0);
        d.append(Row{age, static_cast<std::int32_t>(rng.bernoulli(0.5) ? 1 : 0),
                     static_cast<std::int32_t>(age < 50.0 ? 1 : 0)});
    }
    return d;
}

}  // namespace

TEST_CASE("sensitivity sweep") {
    const Dataset noisy = drifting_labels(6000, 19);
    const PredictorPtr f = fit_predictor("logistic", clean_labels(4000, 20), {}, 0);
    const GeneratorEnsemble ens = GeneratorEnsemble::fit(noisy, 1, 0.05, 21);

    SUBCASE("single zero-shift grid point equals the unshifted estimate") {
        const auto curve = sensitivity_sweep(ens, *f, "age", {0.0}, 4000, MetricKind::accuracy(),
                                             noisy, 22);
        REQUIRE(curve.size() == 1);
        const GeneratedSample plain =
            generate_shifted(ens.member(0), MarginalShiftSpec::mean_shift("age", 0.0), 4000,
                             Rng::derive(22, 1000));
        const double direct = metric_value(*f, plain.data, MetricKind::accuracy(), nullptr);
        CHECK(curve[0].estimate == doctest::Approx(direct));
    }

    SUBCASE("full-range grid covers all three buckets and decreases") {
        const std::vector<double> grid = default_shift_grid(noisy, "age", 9);
        const auto curve =
            sensitivity_sweep(ens, *f, "age", grid, 4000, MetricKind::accuracy(), noisy, 23);
        REQUIRE(curve.size() == 9);
        bool minus = false, mid = false, plus = false;
        for (const auto& p : curve) {
            minus |= p.bucket == ShiftBucket::Minus;
            mid |= p.bucket == ShiftBucket::PlusMinus;
            plus |= p.bucket == ShiftBucket::Plus;
        }
        CHECK(minus);
        CHECK(mid);
        CHECK(plus);
        for (std::size_t i = 1; i < curve.size(); ++i)
            CHECK(curve[i].estimate <= curve[i - 1].estimate + 0.03);
    }
}
