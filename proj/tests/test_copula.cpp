#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "core/copula.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/stats.hpp"
#include "support.hpp"

using namespace synteval;
using namespace testsupport;

namespace {

SchemaPtr two_cont_schema() {
    std::vector<Feature> f;
    f.push_back({"x1", FeatureType::Continuous, {}});
    f.push_back({"x2", FeatureType::Continuous, {}});
    f.push_back({"y", FeatureType::Binary, {}});
    return std::make_shared<Schema>(f, "y");
}

Dataset gaussian_pair(std::size_t n, double rho, std::uint64_t seed) {
    Dataset d(two_cont_schema());
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const double z1 = rng.normal();
        const double z2 = rho * z1 + std::sqrt(1.0 - rho * rho) * rng.normal();
        d.append(Row{z1, z2, static_cast<std::int32_t>(rng.bernoulli(0.5) ? 1 : 0)});
    }
    return d;
}

// rewrite the latent correlation of a fitted generator
CopulaGenerator with_sigma(const CopulaGenerator& gen, const std::vector<double>& sigma_flat) {
    nlohmann::json doc = gen.to_json();
    doc["sigma"] = sigma_flat;
    return CopulaGenerator::from_json(doc);
}

}  // namespace

TEST_CASE("identical columns give a shrunk unit correlation") {
    Dataset d(two_cont_schema());
    Rng rng(1);
    for (int i = 0; i < 500; ++i) {
        const double v = rng.uniform(0.0, 10.0);
        d.append(Row{v, v, static_cast<std::int32_t>(i % 2)});
    }
    const CopulaGenerator gen = CopulaGenerator::fit(d, 0.05, 0);
    // rank scores of identical columns correlate exactly 1, shrunk by 0.05
    CHECK(gen.sigma()(0, 1) >= 0.94);
    CHECK(gen.sigma()(0, 1) == doctest::Approx(0.95).epsilon(1e-9));
}

TEST_CASE("independent features stay near zero correlation") {
    const Dataset d = gaussian_pair(10000, 0.0, 2);
    const CopulaGenerator gen = CopulaGenerator::fit(d, 0.0, 0);
    CHECK(std::fabs(gen.sigma()(0, 1)) <= 0.05);  // ~3/sqrt(n) sampling noise
}

TEST_CASE("duplicated column with zero shrinkage is singular") {
    Dataset d(two_cont_schema());
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const double v = rng.normal();
        d.append(Row{v, v, static_cast<std::int32_t>(i % 2)});
    }
    CHECK_THROWS_WITH_AS(CopulaGenerator::fit(d, 0.0, 0),
                         doctest::Contains("SingularCorrelation"), Error);
}

TEST_CASE("unconditional sampling reproduces the marginals") {
    Dataset fitdata(mixed_schema());
    Rng rng(4);
    std::vector<double> ages;
    for (int i = 0; i < 4000; ++i) {
        const double age = rng.uniform(0.0, 100.0);
        ages.push_back(age);
        fitdata.append(make_row(age, static_cast<std::int32_t>(rng.uniform_index(3)),
                                static_cast<std::int32_t>(rng.uniform_index(2)),
                                static_cast<std::int32_t>(rng.bernoulli(0.3) ? 1 : 0)));
    }
    const CopulaGenerator gen = CopulaGenerator::fit(fitdata, 0.05, 0);

    SUBCASE("sample mean tracks the fit mean within a CLT bound") {
        const GeneratedSample s = gen.sample(5000, 9);
        const double fit_mean = mean(ages);
        CHECK(std::fabs(s.data.column_mean(0) - fit_mean) <= 2.0);  // 2 >> 2*29/sqrt(5000)
    }

    SUBCASE("category frequencies track fitted probabilities") {
        const GeneratedSample s = gen.sample(10000, 10);
        const auto& marg = std::get<CategoricalMarginal>(gen.marginal(1));
        std::vector<double> freq(3, 0.0);
        for (std::int32_t c : s.data.category_column(1)) freq[static_cast<std::size_t>(c)] += 1.0;
        for (auto& v : freq) v /= 10000.0;
        for (std::size_t c = 0; c < 3; ++c)
            CHECK(std::fabs(freq[c] - marg.probability(static_cast<std::int32_t>(c))) <= 0.02);
    }

    SUBCASE("same seed gives identical datasets") {
        const GeneratedSample a = gen.sample(100, 42);
        const GeneratedSample b = gen.sample(100, 42);
        for (std::size_t r = 0; r < 100; ++r) CHECK(a.data.row(r) == b.data.row(r));
    }

    SUBCASE("marginal fidelity: continuous KS and category error") {
        const GeneratedSample s = gen.sample(10000, 11);
        const auto col = s.data.numeric_column(0);
        const double ks =
            ks_statistic(std::vector<double>(col.begin(), col.end()), ages);
        CHECK(ks <= 0.03);
    }

    SUBCASE("latents decode back to the sampled rows") {
        const GeneratedSample s = gen.sample(500, 12);
        for (std::size_t r = 0; r < 500; ++r) {
            const double z_age = s.latents(r, 0);
            const auto& m = std::get<ContinuousMarginal>(gen.marginal(0));
            CHECK(m.inv_cdf(normal_cdf(z_age)) ==
                  doctest::Approx(s.data.numeric(0, r)).epsilon(1e-9));
            const auto& mc = std::get<CategoricalMarginal>(gen.marginal(1));
            CHECK(mc.inv(normal_cdf(s.latents(r, 1))) == s.data.category(1, r));
        }
    }
}

TEST_CASE("positive definiteness holds under shrinkage") {
    const Dataset d = gaussian_pair(300, 0.97, 5);
    for (double lambda : {0.01, 0.05, 0.2}) {
        const CopulaGenerator gen = CopulaGenerator::fit(d, lambda, 0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gen.sigma());
        CHECK(es.eigenvalues().minCoeff() >= lambda * (1.0 - 1e-9));
    }
}

TEST_CASE("conditional sampling") {
    SUBCASE("exact-condition postcondition on a category") {
        Dataset fitdata(mixed_schema());
        Rng rng(6);
        for (int i = 0; i < 2000; ++i)
            fitdata.append(make_row(rng.uniform(0.0, 100.0),
                                    static_cast<std::int32_t>(rng.uniform_index(3)),
                                    static_cast<std::int32_t>(rng.uniform_index(2)),
                                    static_cast<std::int32_t>(rng.bernoulli(0.4) ? 1 : 0)));
        const CopulaGenerator gen = CopulaGenerator::fit(fitdata, 0.05, 0);
        ConditionSpec cond;
        cond.set(fitdata.schema(), "race", std::string("Black"));
        const GeneratedSample s = gen.sample_conditional(cond, 500, 7);
        for (std::size_t r = 0; r < 500; ++r) CHECK(s.data.category(1, r) == 1);
    }

    SUBCASE("independent Sigma: conditioning does not move the other feature") {
        const Dataset d = gaussian_pair(4000, 0.3, 7);
        const CopulaGenerator fitted = CopulaGenerator::fit(d, 0.0, 0);
        const CopulaGenerator gen =
            with_sigma(fitted, {1, 0, 0, 0, 1, 0, 0, 0, 1});
        ConditionSpec cond;
        cond.set(d.schema(), "x1", 0.7);
        const GeneratedSample conditional = gen.sample_conditional(cond, 5000, 8);
        const GeneratedSample unconditional = gen.sample(5000, 9);
        const auto ca = conditional.data.numeric_column(1);
        const auto cb = unconditional.data.numeric_column(1);
        const double ks = ks_statistic(std::vector<double>(ca.begin(), ca.end()),
                                       std::vector<double>(cb.begin(), cb.end()));
        CHECK(ks_pvalue(ks, 5000, 5000) > 0.01);
    }

    SUBCASE("conditioning on the median pins the correlated feature near its median") {
        const Dataset d = gaussian_pair(4000, 0.8, 8);
        const CopulaGenerator gen = CopulaGenerator::fit(d, 0.01, 0);
        const double median_x1 = d.empirical_quantile("x1", 0.5);
        const double median_x2 = d.empirical_quantile("x2", 0.5);
        ConditionSpec cond;
        cond.set(d.schema(), "x1", median_x1);
        const GeneratedSample s = gen.sample_conditional(cond, 4000, 10);
        // z1 ~ 0, so E[z2|z1] ~ 0 and the decoded mean sits near the median
        CHECK(std::fabs(s.data.column_mean(1) - median_x2) < 0.1);
    }

    SUBCASE("empty condition matches unconditional sampling at the latent level") {
        const Dataset d = gaussian_pair(500, 0.5, 9);
        const CopulaGenerator gen = CopulaGenerator::fit(d, 0.05, 0);
        const GeneratedSample a = gen.sample(200, 21);
        const GeneratedSample b = gen.sample_conditional(ConditionSpec{}, 200, 21);
        CHECK((a.latents - b.latents).cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("out-of-support condition is rejected") {
        const Dataset d = gaussian_pair(500, 0.5, 10);
        const CopulaGenerator gen = CopulaGenerator::fit(d, 0.05, 0);
        ConditionSpec cond;
        cond.set(d.schema(), "x1", 1e6);
        CHECK_THROWS_WITH_AS(gen.sample_conditional(cond, 10, 1),
                             doctest::Contains("ConditionOutOfSupport"), Error);
    }
}

TEST_CASE("latent radius") {
    SchemaPtr schema = [&] {
        std::vector<Feature> f;
        f.push_back({"x1", FeatureType::Continuous, {}});
        f.push_back({"y", FeatureType::Binary, {}});
        return std::make_shared<Schema>(f, "y");
    }();
    Dataset d(schema);
    Rng rng(11);
    for (int i = 0; i < 400; ++i)
        d.append(Row{rng.normal(), static_cast<std::int32_t>(rng.bernoulli(0.5) ? 1 : 0)});
    const CopulaGenerator gen = with_sigma(CopulaGenerator::fit(d, 0.05, 0), {1, 0, 0, 1});

    CHECK(gen.latent_radius(Eigen::VectorXd::Zero(2)) == 0.0);
    Eigen::VectorXd z(2);
    z << 1.0, 1.0;
    CHECK(gen.latent_radius(z) == doctest::Approx(std::sqrt(2.0)));
    CHECK_THROWS_WITH_AS(gen.latent_radius(Eigen::VectorXd::Zero(3)),
                         doctest::Contains("DimensionMismatch"), Error);

    // chi^2_2: the 1 - e^-1 quantile of the squared radius is 2
    const GeneratedSample s = gen.sample(20000, 12);
    std::vector<double> r2(20000);
    for (std::size_t r = 0; r < 20000; ++r) {
        const double radius = gen.latent_radius(s.latents.row(static_cast<Eigen::Index>(r)).transpose());
        r2[r] = radius * radius;
    }
    const double alpha = 1.0 - std::exp(-1.0);
    CHECK(quantile_type7(r2, alpha) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("serialization round trips bit-exactly") {
    Dataset d(mixed_schema());
    Rng rng(13);
    for (int i = 0; i < 300; ++i)
        d.append(make_row(rng.uniform(0.0, 50.0), static_cast<std::int32_t>(rng.uniform_index(3)),
                          static_cast<std::int32_t>(rng.uniform_index(2)),
                          static_cast<std::int32_t>(rng.bernoulli(0.5) ? 1 : 0)));
    const CopulaGenerator gen = CopulaGenerator::fit(d, 0.05, 99);
    const std::string dumped = gen.to_json().dump();
    const CopulaGenerator back = CopulaGenerator::from_json(nlohmann::json::parse(dumped));
    CHECK(back.to_json().dump() == dumped);

    const GeneratedSample a = gen.sample(50, 1);
    const GeneratedSample b = back.sample(50, 1);
    for (std::size_t r = 0; r < 50; ++r) CHECK(a.data.row(r) == b.data.row(r));

    const auto path = (tmp_dir() / "gen.json").string();
    gen.save(path);
    const CopulaGenerator loaded = CopulaGenerator::load(path);
    CHECK(loaded.to_json().dump() == dumped);
}

TEST_CASE("ensembles") {
    Dataset d(mixed_schema());
    Rng rng(14);
    for (int i = 0; i < 400; ++i)
        d.append(make_row(rng.uniform(0.0, 10.0), static_cast<std::int32_t>(rng.uniform_index(3)),
                          static_cast<std::int32_t>(rng.uniform_index(2)),
                          static_cast<std::int32_t>(rng.bernoulli(0.5) ? 1 : 0)));

    SUBCASE("accepted sizes") {
        for (std::size_t k : {1u, 5u, 10u}) {
            const GeneratorEnsemble ens = GeneratorEnsemble::fit(d, k, 0.05, 3);
            CHECK(ens.size() == k);
        }
        CHECK_THROWS_WITH_AS(GeneratorEnsemble::fit(d, 0, 0.05, 3),
                             doctest::Contains("BadEnsembleSize"), Error);
    }

    SUBCASE("constant dataset gives behaviorally identical members") {
        Dataset constant(mixed_schema());
        for (int i = 0; i < 50; ++i) constant.append(make_row(5.0, 1, 0, 1));
        const GeneratorEnsemble ens = GeneratorEnsemble::fit(constant, 5, 0.05, 1);
        const auto first_marginals = ens.member(0).to_json().at("marginals").dump();
        for (std::size_t k = 1; k < 5; ++k) {
            CHECK((ens.member(k).sigma() - ens.member(0).sigma()).cwiseAbs().maxCoeff() == 0.0);
            CHECK(ens.member(k).to_json().at("marginals").dump() == first_marginals);
        }
    }
}
