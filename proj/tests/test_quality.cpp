#include <doctest.h>

#include <cmath>

#include "core/error.hpp"
#include "core/quality.hpp"
#include "core/rng.hpp"
#include "core/stats.hpp"
#include "support.hpp"

using namespace synteval;
using namespace testsupport;

namespace {

SchemaPtr one_feature_schema() {
    std::vector<Feature> f;
    f.push_back({"x", FeatureType::Continuous, {}});
    f.push_back({"y", FeatureType::Binary, {}});
    return std::make_shared<Schema>(f, "y");
}

Dataset points(std::initializer_list<double> xs, std::int32_t y = 0) {
    Dataset d(one_feature_schema());
    for (double x : xs) d.append(Row{x, y});
    return d;
}

SchemaPtr label_only_schema() {
    std::vector<Feature> f;
    f.push_back({"y", FeatureType::Binary, {}});
    return std::make_shared<Schema>(f, "y");
}

Dataset labels(std::initializer_list<std::int32_t> ys) {
    Dataset d(label_only_schema());
    for (std::int32_t y : ys) d.append(Row{y});
    return d;
}

Dataset gaussian_sample(std::size_t n, std::uint64_t seed) {
    Dataset d(one_feature_schema());
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i)
        d.append(Row{rng.normal(), static_cast<std::int32_t>(rng.bernoulli(0.5) ? 1 : 0)});
    return d;
}

}  // namespace

TEST_CASE("mmd hand values") {
    SUBCASE("identical singleton clusters give zero") {
        // all kernel values are 1: 1 + 1 - 2 = 0
        const Dataset a = points({0.0, 0.0});
        const Dataset b = points({0.0, 0.0});
        CHECK(mmd_rbf(a, b, 0.0) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(mmd_rbf(a, b, 1.0) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("far clusters saturate at two") {
        // cross terms vanish for separation much larger than the bandwidth;
        // fix the bandwidth so the encoded distance stays >> h
        const Dataset a = points({0.0, 0.0});
        const Dataset b = points({1000.0, 1000.0});
        CHECK(mmd_rbf(a, b, 0.01) == doctest::Approx(2.0).epsilon(1e-9));
    }
    SUBCASE("too few rows") {
        CHECK_THROWS_WITH_AS(mmd_rbf(points({0.0}), points({1.0, 2.0}), 1.0),
                             doctest::Contains("TooFewRows"), Error);
    }
}

TEST_CASE("mmd symmetry is exact") {
    const Dataset a = gaussian_sample(153, 1);
    const Dataset b = gaussian_sample(211, 2);
    CHECK(mmd_rbf(a, b, 0.0) == mmd_rbf(b, a, 0.0));
    CHECK(mmd_rbf(a, b, 0.7) == mmd_rbf(b, a, 0.7));
}

TEST_CASE("mmd under the null stays near zero") {
    const Dataset a = gaussian_sample(2000, 3);
    const Dataset b = gaussian_sample(2000, 4);
    CHECK(std::fabs(mmd_rbf(a, b, 0.0)) <= 0.01);
}

TEST_CASE("marginal divergences") {
    SUBCASE("identical datasets give jsd 0 and inv_kld 1") {
        const Dataset a = gaussian_sample(500, 5);
        const Divergences d = marginal_divergences(a, a, 10);
        CHECK(d.jsd == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(d.inv_kld == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("disjoint support without smoothing reaches ln 2") {
        const Dataset a = labels({0, 0, 0, 0});
        const Dataset b = labels({1, 1, 1, 1});
        const Divergences d = marginal_divergences(a, b, 10, /*pseudo_count=*/0.0);
        CHECK(d.jsd == doctest::Approx(std::log(2.0)).epsilon(1e-12));
        CHECK(d.inv_kld == doctest::Approx(0.0).epsilon(1e-12));
    }

    SUBCASE("bernoulli 0.5 vs 0.75 matches the closed form") {
        const Dataset a = labels({0, 1});
        const Dataset b = labels({0, 1, 1, 1});
        // in-test oracle: JSD = 0.5 KL(P||M) + 0.5 KL(Q||M), M = (P+Q)/2
        auto kl = [](double p, double q) {
            auto term = [](double x, double y) { return x > 0 ? x * std::log(x / y) : 0.0; };
            return term(p, q) + term(1 - p, 1 - q);
        };
        const double p = 0.5, q = 0.75, m = 0.625;
        const double expected = 0.5 * kl(p, m) + 0.5 * kl(q, m);
        CHECK(expected == doctest::Approx(0.033822).epsilon(1e-4));
        const Divergences d = marginal_divergences(a, b, 10, /*pseudo_count=*/0.0);
        CHECK(d.jsd == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("corrupting synthetic rows strictly degrades both metrics") {
    Dataset real(mixed_schema());
    Rng rng(6);
    for (int i = 0; i < 1500; ++i) {
        const double age = 40 + 10 * rng.normal();
        const auto race = static_cast<std::int32_t>(rng.uniform_index(3));
        real.append(make_row(age, race, static_cast<std::int32_t>(rng.uniform_index(2)),
                             static_cast<std::int32_t>(rng.bernoulli(sigmoid(age - 40)) ? 1 : 0)));
    }
    const CopulaGenerator gen = CopulaGenerator::fit(real, 0.05, 0);
    const Dataset synthetic = gen.sample(1500, 7).data;

    auto corrupted = [&](double rho, std::uint64_t seed) {
        Dataset out(real.schema_ptr());
        Rng noise(seed);
        const auto n_corrupt = static_cast<std::size_t>(rho * 1500);
        for (std::size_t r = 0; r < synthetic.n_rows(); ++r) {
            if (r < n_corrupt) {
                out.append(make_row(noise.uniform(-100.0, 200.0),
                                    static_cast<std::int32_t>(noise.uniform_index(3)),
                                    static_cast<std::int32_t>(noise.uniform_index(2)),
                                    static_cast<std::int32_t>(noise.uniform_index(2))));
            } else {
                out.append(synthetic.row(r));
            }
        }
        return out;
    };

    double prev_jsd = -1.0, prev_mmd = -1.0;
    for (double rho : {0.0, 0.25, 0.5}) {
        const Dataset corrupt = corrupted(rho, 8);
        const double jsd = marginal_divergences(real, corrupt, 10).jsd;
        const double mmd = mmd_rbf(real, corrupt, 0.0);
        CHECK(jsd > prev_jsd);
        CHECK(mmd > prev_mmd);
        prev_jsd = jsd;
        prev_mmd = mmd;
    }
}

TEST_CASE("generator selection by lowest mmd") {
    // strongly correlated pair: heavy shrinkage destroys the dependence
    SchemaPtr schema = [&] {
        std::vector<Feature> f;
        f.push_back({"x1", FeatureType::Continuous, {}});
        f.push_back({"x2", FeatureType::Continuous, {}});
        f.push_back({"y", FeatureType::Binary, {}});
        return std::make_shared<Schema>(f, "y");
    }();
    Dataset data(schema);
    Rng rng(9);
    for (int i = 0; i < 2200; ++i) {
        const double z = rng.normal();
        const double x2 = 0.9 * z + std::sqrt(1 - 0.81) * rng.normal();
        data.append(Row{z, x2, static_cast<std::int32_t>(rng.bernoulli(0.5) ? 1 : 0)});
    }
    const SplitResult parts = split(data, 0.9, 0.05, 0.05, 1);
    const Dataset& fit_data = parts.train;
    const Dataset& holdout = parts.test;  // ~10% of the training size

    SUBCASE("single candidate wins by default") {
        const SelectionResult r = select_generator({{0.05, 0}}, fit_data, holdout, 500, 2);
        CHECK(r.best_index == 0);
        CHECK(r.scores.size() == 1);
    }

    SUBCASE("low shrinkage beats correlation-destroying shrinkage") {
        const SelectionResult r =
            select_generator({{0.05, 0}, {0.9, 0}}, fit_data, holdout, 1500, 3);
        CHECK(r.best_index == 0);
        CHECK(r.scores[0].mmd < r.scores[1].mmd);
    }

    SUBCASE("ties keep candidate order") {
        const SelectionResult r =
            select_generator({{0.05, 0}, {0.05, 0}}, fit_data, holdout, 400, 4);
        CHECK(r.best_index == 0);
    }
}
