#include "core/commands.hpp"

#include <filesystem>
#include <sstream>

#include <nlohmann/json.hpp>

#include "core/baselines.hpp"
#include "core/error.hpp"
#include "core/experiments.hpp"
#include "core/generate.hpp"
#include "core/quality.hpp"
#include "core/report.hpp"
#include "core/result_io.hpp"
#include "core/rng.hpp"
#include "core/shift.hpp"

namespace synteval {

namespace fs = std::filesystem;

namespace {

std::string require_string(const nlohmann::json& opts, const char* key) {
    if (!opts.contains(key) || !opts.at(key).is_string())
        throw_config("BadConfig", std::string("option '") + key + "' is required");
    return opts.at(key).get<std::string>();
}

Dataset load_data(const nlohmann::json& opts, const char* key, const SchemaPtr& schema) {
    return load_csv(require_string(opts, key), schema);
}

PredictorPtr resolve_predictor(const nlohmann::json& opts, const SchemaPtr& schema,
                               bool* external) {
    if (opts.contains("predictions")) {
        if (external) *external = true;
        return load_external(opts.at("predictions").get<std::string>());
    }
    if (external) *external = false;
    if (!opts.contains("train"))
        throw_config("BadConfig", "need either 'train' (fit a model) or 'predictions'");
    const Dataset train = load_csv(opts.at("train").get<std::string>(), schema);
    return fit_predictor(opts.value("predictor", "logistic"), train,
                         opts.value("predictor_hyper", nlohmann::json::object()),
                         opts.value("seed", 0ull));
}

std::vector<SubgroupSpec> resolve_subgroups(const nlohmann::json& opts, const Schema& schema) {
    std::vector<SubgroupSpec> out;
    if (opts.contains("subgroups")) {
        for (const auto& sj : opts.at("subgroups")) out.push_back(SubgroupSpec::from_json(sj, schema));
    } else if (opts.contains("by")) {
        const std::string feature = opts.at("by").get<std::string>();
        const std::size_t f = schema.index_of(feature);
        if (!schema.feature(f).is_discrete())
            throw_data("KindMismatch", "--by needs a categorical feature");
        for (const auto& cat : schema.feature(f).categories)
            out.push_back(SubgroupSpec::category_equals(schema, feature, cat));
    } else {
        throw_config("BadConfig", "need 'subgroups' or 'by'");
    }
    if (out.empty()) throw_config("BadConfig", "no subgroups given");
    return out;
}

void cmd_simulate(const nlohmann::json& opts) {
    const nlohmann::json spec_ref = opts.value("spec", nlohmann::json("builtin"));
    GroundTruthSpec spec = [&] {
        if (spec_ref.is_string()) {
            const std::string name = spec_ref.get<std::string>();
            if (name == "builtin") return GroundTruthSpec::builtin();
            if (name == "builtin_target") return builtin_target_spec();
            return GroundTruthSpec::load(name);
        }
        return GroundTruthSpec::from_json(spec_ref);
    }();
    const auto n = opts.value("n", 30100ull);
    const auto seed = opts.value("seed", 0ull);
    const fs::path out(require_string(opts, "out"));
    fs::create_directories(out);
    const Dataset data = spec.simulate(n, seed);
    data.save_csv((out / "data.csv").string());
    write_json_file(out / "schema.json", spec.schema()->to_json());
    write_json_file(out / "ground_truth.json", spec.to_json());
}

void cmd_fit_gen(const nlohmann::json& opts) {
    const SchemaPtr schema = Schema::load(require_string(opts, "schema"));
    const Dataset data = load_data(opts, "data", schema);
    const auto seed = opts.value("seed", 0ull);
    const std::string out = require_string(opts, "out");

    if (opts.value("select", false)) {
        // grid search scored by MMD against a 10% holdout
        const double holdout_fraction = opts.value("holdout_fraction", 0.1);
        const SplitResult parts =
            split(data, 1.0 - 2.0 * holdout_fraction, holdout_fraction, holdout_fraction, seed);
        const Dataset& fit_part = parts.train;
        const Dataset& holdout = parts.test;
        const SelectionResult sel =
            select_generator(default_generator_grid(), fit_part, holdout,
                             opts.value("n_score", 2000ull), seed);
        const CopulaGenerator gen =
            CopulaGenerator::fit(data, sel.best.shrinkage, seed + sel.best.seed_offset);
        nlohmann::json doc = gen.to_json();
        doc["selection"] = {{"best_index", sel.best_index},
                            {"scores", nlohmann::json::array()}};
        for (const auto& score : sel.scores) doc["selection"]["scores"].push_back(score.to_json());
        write_json_file(out, doc);
        return;
    }
    const CopulaGenerator gen = CopulaGenerator::fit(data, opts.value("shrinkage", 0.05), seed);
    gen.save(out);
}

void cmd_eval_subgroups(const nlohmann::json& opts) {
    const SchemaPtr schema = Schema::load(require_string(opts, "schema"));
    const Dataset test = load_data(opts, "data", schema);
    bool external = false;
    const PredictorPtr f = resolve_predictor(opts, schema, &external);
    const std::vector<SubgroupSpec> subgroups = resolve_subgroups(opts, *schema);
    const MetricKind metric = MetricKind::from_json(opts.value("metric", nlohmann::json("accuracy")));
    const auto seed = opts.value("seed", 0ull);

    nlohmann::json estimates = nlohmann::json::array();
    auto push = [&](const std::string& subgroup, const std::string& source, double value,
                    std::size_t n_eval, const Interval* interval, double sd = -1.0) {
        nlohmann::json e{{"subgroup", subgroup},
                         {"metric", metric.name()},
                         {"source", source},
                         {"value", value},
                         {"n_eval", n_eval}};
        if (interval) e["interval"] = {interval->lo, interval->hi};
        if (sd >= 0.0) e["sd"] = sd;
        estimates.push_back(std::move(e));
    };

    std::optional<GeneratorEnsemble> ens;
    std::size_t balanced_n = opts.value("n_synth", 0ull);
    if (!external) {
        ens = GeneratorEnsemble::fit(test, opts.value("k_ensemble", 5ull),
                                     opts.value("shrinkage", 0.05), Rng::derive(seed, 40));
        if (balanced_n == 0) balanced_n = balanced_sample_size(test, subgroups);
    }

    for (std::size_t g = 0; g < subgroups.size(); ++g) {
        const SubgroupSpec& sg = subgroups[g];
        const std::string label = sg.label(*schema);
        const PerfEstimate real = estimate(*f, test, sg, metric);
        push(label, "real_test", real.value, real.n_eval, nullptr);

        const BaselineResult boot = bootstrap_interval(*f, test, sg, metric,
                                                       opts.value("bootstrap_b", 100ull),
                                                       Rng::derive(seed, 45 + g));
        push(label, "Bootstrap", boot.estimate, real.n_eval, &*boot.interval);

        if (ens) {
            const EnsembleEstimate dge =
                ensemble_estimate(*ens, *f, sg, metric, balanced_n, Rng::derive(seed, 41 + g));
            push(label, "synthetic", dge.mean, balanced_n * ens->size(), &dge.interval, dge.sd);

            const Dataset real_rows = subgroup_filter(test, sg);
            std::vector<double> plus_members;
            const std::uint64_t gen_seed = Rng::derive(Rng::derive(seed, 41 + g), 100);
            for (std::size_t k = 0; k < ens->size(); ++k) {
                const GeneratedSample member_sample =
                    generate_for_spec(ens->member(k), sg, balanced_n, gen_seed);
                plus_members.push_back(metric_value(
                    *f, Dataset::concat(real_rows, member_sample.data), metric, nullptr));
            }
            const EnsembleEstimate plus = summarize_members(std::move(plus_members));
            push(label, "synthetic_plus", plus.mean, real.n_eval + balanced_n * ens->size(),
                 nullptr);
        }
    }

    write_json_file(require_string(opts, "out"),
                    nlohmann::json{{"metric", metric.name()}, {"estimates", estimates}});
}

void cmd_shift_sweep(const nlohmann::json& opts) {
    const SchemaPtr schema = Schema::load(require_string(opts, "schema"));
    const Dataset test = load_data(opts, "data", schema);
    const PredictorPtr f = resolve_predictor(opts, schema, nullptr);
    const std::string feature = require_string(opts, "feature");
    const MetricKind metric = MetricKind::from_json(opts.value("metric", nlohmann::json("accuracy")));
    const auto seed = opts.value("seed", 0ull);

    const GeneratorEnsemble ens =
        GeneratorEnsemble::fit(test, opts.value("k_ensemble", 1ull), opts.value("shrinkage", 0.05),
                               Rng::derive(seed, 60));
    std::vector<double> grid;
    if (opts.contains("grid"))
        grid = opts.at("grid").get<std::vector<double>>();
    else
        grid = default_shift_grid(test, feature, opts.value("grid_points", 21ull));

    std::optional<std::string> category;
    if (opts.contains("category")) category = opts.at("category").get<std::string>();

    const std::vector<SweepPoint> curve =
        sensitivity_sweep(ens, *f, feature, grid, opts.value("n_synth", 5000ull), metric, test,
                          Rng::derive(seed, 61), category);

    std::ostringstream csv;
    csv << "feature,s,bucket,metric,estimate,std\n";
    for (const SweepPoint& p : curve) {
        csv << feature << ',' << format_number(p.s) << ',' << bucket_name(p.bucket) << ','
            << metric.name() << ',' << format_number(p.estimate) << ',';
        if (p.members > 1) csv << format_number(p.sd);
        csv << '\n';
    }
    write_text_file(require_string(opts, "out"), csv.str());
}

void cmd_shift_prior(const nlohmann::json& opts) {
    const SchemaPtr schema = Schema::load(require_string(opts, "schema"));
    const Dataset test = load_data(opts, "data", schema);
    const PredictorPtr f = resolve_predictor(opts, schema, nullptr);
    const MetricKind metric = MetricKind::from_json(opts.value("metric", nlohmann::json("accuracy")));
    const auto seed = opts.value("seed", 0ull);

    PriorMarginalSpec priors;
    if (opts.contains("priors")) {
        priors = PriorMarginalSpec::from_json(opts.at("priors"), *schema);
    } else if (opts.contains("target_data") && opts.contains("observed")) {
        const Dataset target = load_csv(opts.at("target_data").get<std::string>(), schema);
        priors = PriorMarginalSpec::from_observed(
            target, opts.at("observed").get<std::vector<std::string>>());
    } else {
        throw_config("BadConfig", "need 'priors' or 'target_data' + 'observed'");
    }

    const GeneratorEnsemble ens =
        GeneratorEnsemble::fit(test, opts.value("k_ensemble", 1ull), opts.value("shrinkage", 0.05),
                               Rng::derive(seed, 70));
    std::vector<double> members;
    const std::uint64_t gen_seed = Rng::derive(seed, 73);
    for (std::size_t k = 0; k < ens.size(); ++k) {
        const GeneratedSample s =
            generate_with_prior(ens.member(k), priors, opts.value("n_synth", 5000ull), gen_seed);
        members.push_back(metric_value(*f, s.data, metric, nullptr));
    }
    const EnsembleEstimate ts = summarize_members(std::move(members));

    nlohmann::json estimates = nlohmann::json::array();
    nlohmann::json e{{"subgroup", "target_domain"},
                     {"metric", metric.name()},
                     {"source", "synthetic"},
                     {"value", ts.mean},
                     {"n_eval", opts.value("n_synth", 5000ull) * ens.size()},
                     {"sd", ts.sd},
                     {"interval", {ts.interval.lo, ts.interval.hi}}};
    estimates.push_back(e);
    estimates.push_back(nlohmann::json{{"subgroup", "source"},
                                       {"metric", metric.name()},
                                       {"source", "real_test"},
                                       {"value", metric_value(*f, test, metric, nullptr)},
                                       {"n_eval", test.n_rows()}});
    write_json_file(require_string(opts, "out"),
                    nlohmann::json{{"metric", metric.name()}, {"estimates", estimates}});
}

void cmd_oracle_compare(const nlohmann::json& opts) {
    ExperimentConfig cfg = [&] {
        if (opts.contains("config")) {
            const auto& c = opts.at("config");
            if (c.is_string()) return ExperimentConfig::load(c.get<std::string>());
            return ExperimentConfig::from_json(c);
        }
        return ExperimentConfig::from_json(opts);
    }();
    run_experiment(cfg, require_string(opts, "out"));
}

void cmd_report(const nlohmann::json& opts) {
    emit_model_report(require_string(opts, "results"), require_string(opts, "out"));
}

}  // namespace

void run_command(const std::string& name, const nlohmann::json& options) {
    if (!options.is_object()) throw_config("BadConfig", "options must be a JSON object");
    if (name == "simulate") return cmd_simulate(options);
    if (name == "fit-gen") return cmd_fit_gen(options);
    if (name == "eval-subgroups") return cmd_eval_subgroups(options);
    if (name == "shift-sweep") return cmd_shift_sweep(options);
    if (name == "shift-prior") return cmd_shift_prior(options);
    if (name == "oracle-compare") return cmd_oracle_compare(options);
    if (name == "report") return cmd_report(options);
    throw_config("BadConfig", "unknown command '" + name + "'");
}

}  // namespace synteval
