#include "core/experiments.hpp"

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "core/baselines.hpp"
#include "core/error.hpp"
#include "core/generate.hpp"
#include "core/result_io.hpp"
#include "core/rng.hpp"
#include "core/shift.hpp"
#include "core/stats.hpp"

namespace synteval {

namespace fs = std::filesystem;

namespace {

nlohmann::json estimate_record(const std::string& subgroup, const std::string& metric,
                               const std::string& source, double value, std::size_t n_eval) {
    return nlohmann::json{{"subgroup", subgroup},
                          {"metric", metric},
                          {"source", source},
                          {"value", value},
                          {"n_eval", n_eval}};
}

struct Welford {
    double sum = 0.0, worst = 0.0;
    std::size_t n = 0;
    void add(double abs_err) {
        sum += abs_err;
        worst = std::max(worst, abs_err);
        ++n;
    }
    double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
};

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& doc) {
    ExperimentConfig cfg;
    cfg.mode = doc.value("mode", cfg.mode);
    if (cfg.mode != "subgroup" && cfg.mode != "shift" && cfg.mode != "prior")
        throw_config("BadConfig", "mode must be subgroup, shift or prior");
    cfg.ground_truth = doc.value("ground_truth", nlohmann::json("builtin"));
    cfg.n_total = doc.value("n_total", cfg.n_total);
    if (doc.contains("fractions")) {
        const auto fr = doc.at("fractions").get<std::vector<double>>();
        if (fr.size() != 3) throw_config("BadConfig", "fractions must have 3 entries");
        cfg.f_train = fr[0];
        cfg.f_test = fr[1];
        cfg.f_oracle = fr[2];
    }
    cfg.predictor_kind = doc.value("predictor", cfg.predictor_kind);
    cfg.predictor_hyper = doc.value("predictor_hyper", cfg.predictor_hyper);
    cfg.metric = doc.value("metric", cfg.metric);
    cfg.k_ensemble = doc.value("k_ensemble", cfg.mode == "subgroup" ? 5u : 1u);
    cfg.shrinkage = doc.value("shrinkage", cfg.shrinkage);
    if (doc.contains("seeds")) {
        cfg.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
    } else {
        const auto n_seeds = doc.value("n_seeds", 20u);
        for (std::uint64_t s = 0; s < n_seeds; ++s) cfg.seeds.push_back(s);
    }
    if (cfg.seeds.empty()) throw_config("BadConfig", "seeds must be non-empty");

    cfg.matrix_feature_a = doc.value("matrix_feature_a", cfg.matrix_feature_a);
    cfg.matrix_feature_b = doc.value("matrix_feature_b", cfg.matrix_feature_b);
    cfg.bootstrap_b = doc.value("bootstrap_b", cfg.bootstrap_b);
    cfg.min_cell_n = doc.value("min_cell_n", cfg.min_cell_n);
    cfg.fairness_sensitive = doc.value("fairness_sensitive", cfg.fairness_sensitive);

    cfg.sweep_feature = doc.value("sweep_feature", cfg.sweep_feature);
    cfg.grid_points = doc.value("grid_points", cfg.grid_points);
    cfg.n_synth = doc.value("n_synth", cfg.n_synth);
    cfg.n_oracle_rs = doc.value("n_oracle_rs", cfg.n_oracle_rs);
    cfg.n_rs_baseline = doc.value("n_rs_baseline", cfg.n_rs_baseline);

    cfg.target_ground_truth = doc.value("target_ground_truth", nlohmann::json("builtin_target"));
    if (doc.contains("observed_features"))
        cfg.observed_features = doc.at("observed_features").get<std::vector<std::string>>();
    cfg.n_target_truth = doc.value("n_target_truth", cfg.n_target_truth);
    cfg.n_target_obs = doc.value("n_target_obs", cfg.n_target_obs);
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_config("MissingFile", "cannot open config '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw_config("BadConfig", std::string("config parse error: ") + e.what());
    }
    return from_json(doc);
}

nlohmann::json ExperimentConfig::to_json() const {
    return nlohmann::json{{"mode", mode},
                          {"ground_truth", ground_truth},
                          {"n_total", n_total},
                          {"fractions", {f_train, f_test, f_oracle}},
                          {"predictor", predictor_kind},
                          {"predictor_hyper", predictor_hyper},
                          {"metric", metric},
                          {"k_ensemble", k_ensemble},
                          {"shrinkage", shrinkage},
                          {"seeds", seeds},
                          {"matrix_feature_a", matrix_feature_a},
                          {"matrix_feature_b", matrix_feature_b},
                          {"bootstrap_b", bootstrap_b},
                          {"min_cell_n", min_cell_n},
                          {"fairness_sensitive", fairness_sensitive},
                          {"sweep_feature", sweep_feature},
                          {"grid_points", grid_points},
                          {"n_synth", n_synth},
                          {"n_oracle_rs", n_oracle_rs},
                          {"n_rs_baseline", n_rs_baseline},
                          {"target_ground_truth", target_ground_truth},
                          {"observed_features", observed_features},
                          {"n_target_truth", n_target_truth},
                          {"n_target_obs", n_target_obs}};
}

GroundTruthSpec ExperimentConfig::resolve_ground_truth() const {
    if (ground_truth.is_string()) {
        const std::string name = ground_truth.get<std::string>();
        if (name == "builtin") return GroundTruthSpec::builtin();
        return GroundTruthSpec::load(name);
    }
    return GroundTruthSpec::from_json(ground_truth);
}

GroundTruthSpec builtin_target_spec() {
    nlohmann::json doc = GroundTruthSpec::builtin().to_json();
    // same process, different population mix: conditionals given the
    // subgroup stay exact, so observing all four features recovers the shift
    doc["subgroup_probs"] = {0.35, 0.30, 0.20, 0.15};
    doc["seed"] = 18;
    return GroundTruthSpec::from_json(doc);
}

GroundTruthSpec ExperimentConfig::resolve_target_ground_truth() const {
    if (target_ground_truth.is_string()) {
        const std::string name = target_ground_truth.get<std::string>();
        if (name == "builtin_target") return builtin_target_spec();
        return GroundTruthSpec::load(name);
    }
    return GroundTruthSpec::from_json(target_ground_truth);
}

namespace {

// ---------------------------------------------------------------------------
// subgroup experiment
// ---------------------------------------------------------------------------

void run_subgroup_experiment(const ExperimentConfig& cfg, const fs::path& out) {
    const GroundTruthSpec spec = cfg.resolve_ground_truth();
    const MetricKind metric = cfg.metric_kind();
    const std::string metric_name = metric.name();
    const Schema& schema = *spec.schema();
    const std::size_t group_f = schema.index_of(spec.subgroup_feature());
    const std::vector<std::string>& group_labels = schema.feature(group_f).categories;

    std::vector<SubgroupSpec> subgroups;
    for (const std::string& cat : group_labels)
        subgroups.push_back(SubgroupSpec::category_equals(schema, spec.subgroup_feature(), cat));

    // per subgroup x source accumulated |estimate - oracle|
    std::map<std::string, std::map<std::string, Welford>> errors;
    std::map<std::string, double> n_test_sum;
    std::map<std::string, std::size_t> small_wins, small_total;
    std::vector<Interval> dge_intervals, boot_intervals;
    std::vector<double> dge_truths, boot_truths;
    Welford mae_matrix_real, mae_matrix_synth;

    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
        const std::uint64_t seed = cfg.seeds[si];
        const Dataset data = spec.simulate(cfg.n_total, seed);
        SplitResult parts = split(data, cfg.f_train, cfg.f_test, cfg.f_oracle, seed);
        const PredictorPtr f =
            fit_predictor(cfg.predictor_kind, parts.train, cfg.predictor_hyper, seed);
        const GeneratorEnsemble ens =
            GeneratorEnsemble::fit(parts.test, cfg.k_ensemble, cfg.shrinkage, Rng::derive(seed, 40));
        const std::size_t balanced_n = balanced_sample_size(parts.test, subgroups);

        nlohmann::json estimates = nlohmann::json::array();
        for (std::size_t g = 0; g < subgroups.size(); ++g) {
            const SubgroupSpec& sg = subgroups[g];
            const std::string label = sg.label(schema);
            const std::size_t n_test = subgroup_indices(parts.test, sg).size();
            const PerfEstimate oracle = estimate(*f, parts.oracle, sg, metric);

            nlohmann::json oracle_j = estimate_record(label, metric_name, "oracle",
                                                      oracle.value, oracle.n_eval);
            estimates.push_back(oracle_j);

            // real test (may be empty for tiny groups on unlucky seeds)
            bool have_real = n_test > 0;
            double real_value = 0.0;
            if (have_real) {
                const PerfEstimate real = estimate(*f, parts.test, sg, metric);
                real_value = real.value;
                estimates.push_back(
                    estimate_record(label, metric_name, "real_test", real.value, real.n_eval));
                errors[label]["real_test"].add(std::fabs(real.value - oracle.value));
            }

            // 3S: balanced conditional generation per member
            const EnsembleEstimate dge =
                ensemble_estimate(ens, *f, sg, metric, balanced_n, Rng::derive(seed, 41 + g));
            nlohmann::json synth = estimate_record(label, metric_name, "synthetic", dge.mean,
                                                   balanced_n * ens.size());
            synth["sd"] = dge.sd;
            synth["interval"] = {dge.interval.lo, dge.interval.hi};
            synth["degenerate"] = dge.degenerate;
            estimates.push_back(synth);
            errors[label]["synthetic"].add(std::fabs(dge.mean - oracle.value));
            dge_intervals.push_back(dge.interval);
            dge_truths.push_back(oracle.value);

            // 3S+: per member, union of the real subgroup rows and the
            // member's generated rows
            std::vector<double> plus_members;
            {
                const Dataset real_rows = subgroup_filter(parts.test, sg);
                const std::uint64_t gen_seed = Rng::derive(Rng::derive(seed, 41 + g), 100);
                for (std::size_t k = 0; k < ens.size(); ++k) {
                    const GeneratedSample member_sample =
                        generate_for_spec(ens.member(k), sg, balanced_n, gen_seed);
                    const Dataset joined = Dataset::concat(real_rows, member_sample.data);
                    plus_members.push_back(metric_value(*f, joined, metric, nullptr));
                }
            }
            const EnsembleEstimate plus = summarize_members(std::move(plus_members));
            estimates.push_back(estimate_record(label, metric_name, "synthetic_plus", plus.mean,
                                                n_test + balanced_n * ens.size()));
            errors[label]["synthetic_plus"].add(std::fabs(plus.mean - oracle.value));

            // bootstrap baseline on the real test set
            if (have_real) {
                const BaselineResult boot =
                    bootstrap_interval(*f, parts.test, sg, metric, cfg.bootstrap_b,
                                       Rng::derive(seed, 45 + g));
                nlohmann::json bj = estimate_record(label, metric_name, "Bootstrap",
                                                    boot.estimate, n_test);
                bj["interval"] = {boot.interval->lo, boot.interval->hi};
                bj["inputs_used"] = boot.inputs_used;
                estimates.push_back(bj);
                errors[label]["bootstrap"].add(std::fabs(boot.estimate - oracle.value));
                boot_intervals.push_back(*boot.interval);
                boot_truths.push_back(oracle.value);

                n_test_sum[label] += static_cast<double>(n_test);
                if (n_test < 100) {
                    small_total[label] += 1;
                    const double synth_err = std::fabs(dge.mean - oracle.value);
                    const double real_err = std::fabs(real_value - oracle.value);
                    if (synth_err < real_err) small_wins[label] += 1;
                }
            }
        }

        // intersectional matrices vs the oracle
        const IntersectionalMatrix m_real =
            intersectional_matrix(*f, parts.test, cfg.matrix_feature_a, cfg.matrix_feature_b,
                                  metric, cfg.min_cell_n, parts.test);
        const IntersectionalMatrix m_oracle =
            intersectional_matrix(*f, parts.oracle, cfg.matrix_feature_a, cfg.matrix_feature_b,
                                  metric, cfg.min_cell_n, parts.test);
        std::size_t largest_cell = 0;
        for (const auto& row : m_real.cells)
            for (const auto& cell : row) largest_cell = std::max(largest_cell, cell.n);
        const IntersectionalMatrix m_synth = intersectional_matrix_synthetic(
            ens, *f, cfg.matrix_feature_a, cfg.matrix_feature_b, metric,
            std::max<std::size_t>(largest_cell, cfg.min_cell_n), Rng::derive(seed, 50),
            parts.test);
        // both MAEs over the same cells: intersections the real test set can
        // evaluate at the cutoff (the full synthetic matrix is still stored)
        IntersectionalMatrix m_synth_common = m_synth;
        for (std::size_t i = 0; i < m_real.cells.size(); ++i)
            for (std::size_t j = 0; j < m_real.cells[i].size(); ++j)
                if (m_real.cells[i][j].null) m_synth_common.cells[i][j].null = true;
        if (const auto mae = matrix_mae(m_real, m_oracle)) mae_matrix_real.add(*mae);
        if (const auto mae = matrix_mae(m_synth_common, m_oracle)) mae_matrix_synth.add(*mae);

        // fairness ratios on real and synthetic data (whole space)
        nlohmann::json fairness;
        {
            const GeneratedSample synth_sample =
                generate_for_spec(ens.member(0), SubgroupSpec::full_space(),
                                  parts.test.n_rows(), Rng::derive(seed, 51));
            for (const auto kind : {FairnessKind::DI, FairnessKind::EO}) {
                const char* name = kind == FairnessKind::DI ? "di_ratio" : "eo_ratio";
                try {
                    fairness[std::string(name) + "_real"] =
                        fairness_ratio(*f, parts.test, kind, cfg.fairness_sensitive);
                    fairness[std::string(name) + "_synthetic"] =
                        fairness_ratio(*f, synth_sample.data, kind, cfg.fairness_sensitive);
                    fairness[std::string(name) + "_oracle"] =
                        fairness_ratio(*f, parts.oracle, kind, cfg.fairness_sensitive);
                } catch (const Error& e) {
                    fairness[std::string(name) + "_error"] = e.code();
                }
            }
        }

        nlohmann::json seed_doc{{"seed", seed},
                                {"estimates", estimates},
                                {"fairness", fairness},
                                {"matrix_real_test", matrix_json(m_real)},
                                {"matrix_synthetic", matrix_json(m_synth)},
                                {"matrix_oracle", matrix_json(m_oracle)}};
        write_json_file(out / ("seed_" + std::to_string(seed) + ".json"), seed_doc);
        if (si == 0) {
            write_text_file(out / "matrix_real_test.csv", matrix_csv(m_real));
            write_text_file(out / "matrix_synthetic.csv", matrix_csv(m_synth));
            write_text_file(out / "matrix_oracle.csv", matrix_csv(m_oracle));
        }
    }

    // aggregate
    const auto [dge_cov, dge_width] = coverage_width(dge_intervals, dge_truths);
    const auto [boot_cov, boot_width] = coverage_width(boot_intervals, boot_truths);

    nlohmann::json per_subgroup = nlohmann::json::array();
    std::ostringstream mae_csv;
    mae_csv << "subgroup,n_test_mean,source,mae,worst_case\n";
    for (std::size_t g = 0; g < subgroups.size(); ++g) {
        const std::string label = subgroups[g].label(schema);
        nlohmann::json sources;
        for (const auto& [source, w] : errors[label]) {
            sources[source] = {{"mae", w.mean()}, {"worst_case", w.worst}, {"n", w.n}};
            mae_csv << label << ',' << n_test_sum[label] / static_cast<double>(cfg.seeds.size())
                    << ',' << source << ',' << format_number(w.mean()) << ','
                    << format_number(w.worst) << '\n';
        }
        per_subgroup.push_back(
            {{"subgroup", label},
             {"n_test_mean", n_test_sum[label] / static_cast<double>(cfg.seeds.size())},
             {"sources", sources}});
    }

    nlohmann::json wins = nlohmann::json::array();
    std::size_t wins_total = 0, cases_total = 0;
    for (const auto& [label, total] : small_total) {
        wins.push_back({{"subgroup", label},
                        {"wins", small_wins[label]},
                        {"total", total}});
        wins_total += small_wins[label];
        cases_total += total;
    }

    nlohmann::json aggregate{
        {"mode", "subgroup"},
        {"metric", metric_name},
        {"seeds", cfg.seeds.size()},
        {"per_subgroup", per_subgroup},
        {"small_subgroup_wins", wins},
        {"small_subgroup_wins_total", {{"wins", wins_total}, {"total", cases_total}}},
        {"coverage",
         {{"dge", {{"coverage", dge_cov}, {"width", dge_width}}},
          {"bootstrap", {{"coverage", boot_cov}, {"width", boot_width}}}}},
        {"matrix_mae",
         {{"real_test", mae_matrix_real.mean()}, {"synthetic", mae_matrix_synth.mean()}}}};
    write_json_file(out / "aggregate.json", aggregate);
    write_text_file(out / "subgroup_mae.csv", mae_csv.str());

    std::ostringstream cov_csv;
    cov_csv << "method,coverage,width,cases\n";
    cov_csv << "dge," << format_number(dge_cov) << ',' << format_number(dge_width) << ','
            << dge_intervals.size() << '\n';
    cov_csv << "bootstrap," << format_number(boot_cov) << ',' << format_number(boot_width) << ','
            << boot_intervals.size() << '\n';
    write_text_file(out / "coverage.csv", cov_csv.str());
}

// ---------------------------------------------------------------------------
// shift experiment
// ---------------------------------------------------------------------------

void run_shift_experiment(const ExperimentConfig& cfg, const fs::path& out) {
    const GroundTruthSpec spec = cfg.resolve_ground_truth();
    const MetricKind metric = cfg.metric_kind();
    const std::string metric_name = metric.name();

    struct BucketStats {
        Welford ts, ms, rs;
    };
    std::map<std::string, BucketStats> buckets;  // by bucket name
    BucketStats overall;

    // mean curve across seeds per grid index
    std::vector<double> grid_ref;
    std::map<std::size_t, Welford> curve_ts, curve_oracle;
    std::size_t stalled_points = 0;

    for (const std::uint64_t seed : cfg.seeds) {
        const Dataset data = spec.simulate(cfg.n_total, seed);
        SplitResult parts = split(data, cfg.f_train, cfg.f_test, cfg.f_oracle, seed);
        const PredictorPtr f =
            fit_predictor(cfg.predictor_kind, parts.train, cfg.predictor_hyper, seed);
        const GeneratorEnsemble ens =
            GeneratorEnsemble::fit(parts.test, cfg.k_ensemble, cfg.shrinkage, Rng::derive(seed, 60));

        const std::vector<double> grid =
            default_shift_grid(parts.test, cfg.sweep_feature, cfg.grid_points);
        if (grid_ref.empty()) grid_ref = grid;

        const std::vector<SweepPoint> curve = sensitivity_sweep(
            ens, *f, cfg.sweep_feature, grid, cfg.n_synth, metric, parts.test,
            Rng::derive(seed, 61));

        std::ostringstream csv;
        csv << "feature,s,bucket,metric," << metric_name << "_oracle,ts,ms,rs,ts_std,available\n";
        nlohmann::json points = nlohmann::json::array();
        for (std::size_t p = 0; p < curve.size(); ++p) {
            const SweepPoint& point = curve[p];
            const MarginalShiftSpec shift =
                MarginalShiftSpec::mean_shift(cfg.sweep_feature, point.s);

            // oracle target by rejection sampling the oracle split
            bool available = true;
            double oracle_value = 0.0;
            try {
                const ShiftTarget target =
                    ShiftTarget::from_marginal_shift(parts.oracle, shift, 0.0);
                const Dataset oracle_set =
                    rejection_sample(parts.oracle, target, cfg.n_oracle_rs,
                                     Rng::derive(seed, 62 + p));
                oracle_value = metric_value(*f, oracle_set, metric, nullptr);
            } catch (const Error& e) {
                if (e.code() != "AcceptanceStall") throw;
                available = false;
                ++stalled_points;
            }

            const BaselineResult ms =
                ms_baseline(parts.test, *f, cfg.sweep_feature, point.s, metric);

            bool rs_ok = true;
            double rs_value = 0.0;
            try {
                const ShiftTarget rs_target =
                    ShiftTarget::from_marginal_shift(parts.test, shift, 0.0);
                rs_value = rs_baseline(parts.test, *f, rs_target, cfg.n_rs_baseline, metric,
                                       Rng::derive(seed, 90 + p))
                               .estimate;
            } catch (const Error& e) {
                if (e.code() != "AcceptanceStall") throw;
                rs_ok = false;
            }

            nlohmann::json pj{{"s", point.s},
                              {"bucket", bucket_name(point.bucket)},
                              {"ts", point.estimate},
                              {"ts_std", point.sd},
                              {"ms", ms.estimate},
                              {"available", available}};
            if (available) pj["oracle"] = oracle_value;
            if (rs_ok) pj["rs"] = rs_value;
            points.push_back(pj);

            csv << cfg.sweep_feature << ',' << format_number(point.s) << ','
                << bucket_name(point.bucket) << ',' << metric_name << ',';
            if (available) csv << format_number(oracle_value);
            csv << ',' << format_number(point.estimate) << ',' << format_number(ms.estimate)
                << ',';
            if (rs_ok) csv << format_number(rs_value);
            csv << ',' << format_number(point.sd) << ',' << (available ? 1 : 0) << '\n';

            if (available) {
                const std::string bucket = bucket_name(point.bucket);
                const double ts_err = std::fabs(point.estimate - oracle_value);
                const double ms_err = std::fabs(ms.estimate - oracle_value);
                buckets[bucket].ts.add(ts_err);
                buckets[bucket].ms.add(ms_err);
                overall.ts.add(ts_err);
                overall.ms.add(ms_err);
                if (rs_ok) {
                    const double rs_err = std::fabs(rs_value - oracle_value);
                    buckets[bucket].rs.add(rs_err);
                    overall.rs.add(rs_err);
                }
                curve_ts[p].add(point.estimate);
                curve_oracle[p].add(oracle_value);
            }
        }

        write_text_file(out / ("shift_seed_" + std::to_string(seed) + ".csv"), csv.str());
        write_json_file(out / ("seed_" + std::to_string(seed) + ".json"),
                        nlohmann::json{{"seed", seed}, {"points", points}});
    }

    // Table-1-style bucket table: rows per method, columns Mean, -, +-, +
    auto bucket_mean = [&](const char* name, auto member) {
        auto it = buckets.find(name);
        if (it == buckets.end()) return 0.0;
        return (it->second.*member).mean();
    };
    std::ostringstream table;
    table << "method,Mean,-,±,+\n";
    const std::array<std::pair<const char*, Welford BucketStats::*>, 3> methods{
        std::make_pair("3S", &BucketStats::ts), std::make_pair("MS", &BucketStats::ms),
        std::make_pair("RS", &BucketStats::rs)};
    nlohmann::json bucket_json;
    for (const auto& [name, member] : methods) {
        const double mean_err = (overall.*member).mean();
        const double minus = bucket_mean("minus", member);
        const double mid = bucket_mean("plus_minus", member);
        const double plus = bucket_mean("plus", member);
        table << name << ',' << format_number(mean_err) << ',' << format_number(minus) << ','
              << format_number(mid) << ',' << format_number(plus) << '\n';
        bucket_json[name] = {{"mean", mean_err},
                             {"minus", minus},
                             {"plus_minus", mid},
                             {"plus", plus},
                             {"points", (overall.*member).n}};
    }
    write_text_file(out / "bucket_table.csv", table.str());

    std::ostringstream curve_csv;
    curve_csv << "feature,s,ts_mean,oracle_mean,seeds\n";
    for (std::size_t p = 0; p < grid_ref.size(); ++p) {
        if (!curve_ts.count(p)) continue;
        curve_csv << cfg.sweep_feature << ',' << format_number(grid_ref[p]) << ','
                  << format_number(curve_ts[p].mean()) << ','
                  << format_number(curve_oracle[p].mean()) << ',' << curve_ts[p].n << '\n';
    }
    write_text_file(out / "curve_mean.csv", curve_csv.str());

    write_json_file(out / "aggregate.json",
                    nlohmann::json{{"mode", "shift"},
                                   {"metric", metric_name},
                                   {"sweep_feature", cfg.sweep_feature},
                                   {"seeds", cfg.seeds.size()},
                                   {"buckets", bucket_json},
                                   {"stalled_oracle_points", stalled_points}});
}

// ---------------------------------------------------------------------------
// prior-knowledge experiment
// ---------------------------------------------------------------------------

void run_prior_experiment(const ExperimentConfig& cfg, const fs::path& out) {
    const GroundTruthSpec source_spec = cfg.resolve_ground_truth();
    const GroundTruthSpec target_spec = cfg.resolve_target_ground_truth();
    const MetricKind metric = cfg.metric_kind();
    if (cfg.observed_features.empty())
        throw_config("BadConfig", "prior mode needs observed_features");

    std::vector<Welford> ts_err(cfg.observed_features.size());
    std::vector<Welford> rs_err(cfg.observed_features.size());
    Welford all_err, atc_err, doc_err, im_err;

    for (const std::uint64_t seed : cfg.seeds) {
        const Dataset data = source_spec.simulate(cfg.n_total, seed);
        SplitResult parts = split(data, cfg.f_train, cfg.f_test, cfg.f_oracle, seed);
        const PredictorPtr f =
            fit_predictor(cfg.predictor_kind, parts.train, cfg.predictor_hyper, seed);
        const GeneratorEnsemble ens =
            GeneratorEnsemble::fit(parts.test, cfg.k_ensemble, cfg.shrinkage, Rng::derive(seed, 70));

        const Dataset target_truth = target_spec.simulate(cfg.n_target_truth, Rng::derive(seed, 71));
        const Dataset target_obs = target_spec.simulate(cfg.n_target_obs, Rng::derive(seed, 72));
        const double truth = metric_value(*f, target_truth, metric, nullptr);

        nlohmann::json by_count = nlohmann::json::array();
        for (std::size_t c = 1; c <= cfg.observed_features.size(); ++c) {
            const std::vector<std::string> observed(cfg.observed_features.begin(),
                                                    cfg.observed_features.begin() +
                                                        static_cast<std::ptrdiff_t>(c));
            const PriorMarginalSpec priors = PriorMarginalSpec::from_observed(target_obs, observed);

            std::vector<double> members;
            const std::uint64_t gen_seed = Rng::derive(seed, 73 + c);
            for (std::size_t k = 0; k < ens.size(); ++k) {
                const GeneratedSample s =
                    generate_with_prior(ens.member(k), priors, cfg.n_synth, gen_seed);
                members.push_back(metric_value(*f, s.data, metric, nullptr));
            }
            const EnsembleEstimate ts = summarize_members(std::move(members));
            ts_err[c - 1].add(std::fabs(ts.mean - truth));

            nlohmann::json cj{{"n_observed", c},
                              {"observed", observed},
                              {"ts", ts.mean},
                              {"truth", truth}};

            try {
                const ShiftTarget rs_target = ShiftTarget::from_priors(parts.test, priors, 0.0);
                const double rs = rs_baseline(parts.test, *f, rs_target, cfg.n_rs_baseline,
                                              metric, Rng::derive(seed, 80 + c))
                                      .estimate;
                rs_err[c - 1].add(std::fabs(rs - truth));
                cj["source_rs"] = rs;
            } catch (const Error& e) {
                if (e.code() != "AcceptanceStall") throw;
                cj["source_rs_stalled"] = true;
            }
            by_count.push_back(cj);
        }

        const double source_all = metric_value(*f, parts.test, metric, nullptr);
        all_err.add(std::fabs(source_all - truth));
        const BaselineResult atc = atc_predict(*f, parts.test, target_obs);
        atc_err.add(std::fabs(atc.estimate - truth));
        const BaselineResult doc = doc_predict(*f, parts.test, target_obs);
        doc_err.add(std::fabs(doc.estimate - truth));
        std::vector<std::string> all_features;
        for (const Feature& feat : parts.test.schema().features())
            if (feat.name != parts.test.schema().label().name) all_features.push_back(feat.name);
        const BaselineResult im = im_predict(*f, parts.test, target_obs, all_features, 10);
        im_err.add(std::fabs(im.estimate - truth));

        write_json_file(out / ("seed_" + std::to_string(seed) + ".json"),
                        nlohmann::json{{"seed", seed},
                                       {"truth", truth},
                                       {"by_observed_count", by_count},
                                       {"baselines",
                                        {{"source_all", source_all},
                                         {"atc", atc.estimate},
                                         {"doc", doc.estimate},
                                         {"im", im.estimate}}}});
    }

    std::ostringstream curve;
    curve << "n_observed,ts_mean_abs_err,source_rs_mean_abs_err\n";
    nlohmann::json curve_json = nlohmann::json::array();
    for (std::size_t c = 1; c <= cfg.observed_features.size(); ++c) {
        curve << c << ',' << format_number(ts_err[c - 1].mean()) << ','
              << format_number(rs_err[c - 1].mean()) << '\n';
        curve_json.push_back({{"n_observed", c},
                              {"ts", ts_err[c - 1].mean()},
                              {"source_rs", rs_err[c - 1].mean()},
                              {"source_rs_points", rs_err[c - 1].n}});
    }
    write_text_file(out / "prior_curve.csv", curve.str());

    write_json_file(out / "aggregate.json",
                    nlohmann::json{{"mode", "prior"},
                                   {"metric", metric.name()},
                                   {"seeds", cfg.seeds.size()},
                                   {"curve", curve_json},
                                   {"baselines",
                                    {{"source_all", all_err.mean()},
                                     {"atc", atc_err.mean()},
                                     {"doc", doc_err.mean()},
                                     {"im", im_err.mean()}}}});
}

}  // namespace

void run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
    const fs::path out(out_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw_config("BadPath", "cannot create '" + out_dir + "'");

    // single-owner guard for the run directory
    const fs::path lock = out / ".lock";
    if (fs::exists(lock))
        throw_config("Locked", "run directory '" + out_dir + "' is owned by another run");
    write_text_file(lock, "running\n");

    try {
        write_json_file(out / "config.json", cfg.to_json());
        if (cfg.mode == "subgroup") {
            run_subgroup_experiment(cfg, out);
        } else if (cfg.mode == "shift") {
            run_shift_experiment(cfg, out);
        } else {
            run_prior_experiment(cfg, out);
        }
    } catch (...) {
        fs::remove(lock, ec);
        throw;
    }
    fs::remove(lock, ec);
}

}  // namespace synteval
