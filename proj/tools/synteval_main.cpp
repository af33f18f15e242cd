// synteval command-line front end. All functionality lives behind the C API
// of libsynteval; this binary only parses flags into option documents.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "synteval/synteval.h"

namespace {

using nlohmann::json;

int run(const char* command, const json& options) {
    const sv_status status = sv_command(command, options.dump().c_str());
    if (status != SV_OK) std::fprintf(stderr, "synteval: %s\n", sv_last_error());
    return static_cast<int>(status);
}

struct SharedFlags {
    std::string schema, data, predictions, train, out;
    std::string predictor = "logistic";
    std::string metric = "accuracy";
    std::uint64_t seed = 0;
    std::uint64_t k_ensemble = 0;  // 0: command default
    std::uint64_t n_synth = 0;     // 0: command default
    double shrinkage = 0.05;

    void add_model_flags(CLI::App* cmd) {
        cmd->add_option("--train", train, "Training CSV for fitting the audited model");
        cmd->add_option("--predictions", predictions,
                        "External predictions CSV (row_index,label,confidence)");
        cmd->add_option("--predictor", predictor,
                        "Built-in model kind: logistic|tree|knn|naive_bayes");
        cmd->add_option("--metric", metric, "accuracy|f1 (fairness kinds via JSON configs)");
    }
    void add_common(CLI::App* cmd, bool need_schema = true) {
        if (need_schema)
            cmd->add_option("--schema", schema, "Schema JSON path")->required();
        cmd->add_option("--seed", seed, "Random seed");
        cmd->add_option("--out", out, "Output path")->required();
    }

    void fill(json& opts) const {
        if (!schema.empty()) opts["schema"] = schema;
        if (!data.empty()) opts["data"] = data;
        if (!train.empty()) opts["train"] = train;
        if (!predictions.empty()) opts["predictions"] = predictions;
        if (!out.empty()) opts["out"] = out;
        opts["predictor"] = predictor;
        opts["metric"] = metric;
        opts["seed"] = seed;
        if (k_ensemble > 0) opts["k_ensemble"] = k_ensemble;
        if (n_synth > 0) opts["n_synth"] = n_synth;
        opts["shrinkage"] = shrinkage;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Model evaluation with synthetic test data: subgroup estimates with "
                 "uncertainty intervals, distribution-shift sensitivity, and "
                 "oracle-validated experiments"};
    app.require_subcommand(1);

    // simulate -------------------------------------------------------------
    auto* simulate = app.add_subcommand("simulate", "Draw a dataset from a ground-truth spec");
    std::string sim_spec = "builtin";
    std::uint64_t sim_n = 30100, sim_seed = 0;
    std::string sim_out;
    simulate->add_option("--spec", sim_spec, "Spec path, 'builtin' or 'builtin_target'");
    simulate->add_option("--n", sim_n, "Rows to draw");
    simulate->add_option("--seed", sim_seed, "Random seed");
    simulate->add_option("--out", sim_out, "Output directory")->required();

    // fit-gen ----------------------------------------------------------------
    auto* fit_gen = app.add_subcommand("fit-gen", "Fit (and serialize) a generator");
    SharedFlags fg;
    fg.add_common(fit_gen);
    fit_gen->add_option("--data", fg.data, "Fitting data CSV")->required();
    fit_gen->add_option("--shrinkage", fg.shrinkage, "Correlation shrinkage in [0,1)");
    bool fg_select = false;
    std::uint64_t fg_n_score = 2000;
    fit_gen->add_flag("--select", fg_select, "Grid-search configs, keep the lowest MMD");
    fit_gen->add_option("--n-score", fg_n_score, "Rows sampled per candidate when selecting");

    // eval-subgroups ---------------------------------------------------------
    auto* eval_sub = app.add_subcommand(
        "eval-subgroups", "Real, synthetic (3S), 3S+ and bootstrap subgroup estimates");
    SharedFlags es;
    es.add_common(eval_sub);
    eval_sub->add_option("--data", es.data, "Test data CSV")->required();
    es.add_model_flags(eval_sub);
    std::string es_by, es_subgroups;
    std::uint64_t es_bootstrap = 100;
    eval_sub->add_option("--by", es_by, "Audit one subgroup per category of this feature");
    eval_sub->add_option("--subgroups", es_subgroups, "JSON file with a list of subgroup specs");
    eval_sub->add_option("--k-ensemble", es.k_ensemble, "Generator ensemble size (default 5)");
    eval_sub->add_option("--n-synth", es.n_synth,
                         "Rows per member per subgroup (default: balanced rule)");
    eval_sub->add_option("--bootstrap-b", es_bootstrap, "Bootstrap resamples");

    // shift-sweep --------------------------------------------------------------
    auto* sweep = app.add_subcommand("shift-sweep",
                                     "Sensitivity curve over marginal shift magnitudes");
    SharedFlags sw;
    sw.add_common(sweep);
    sweep->add_option("--data", sw.data, "Test data CSV")->required();
    sw.add_model_flags(sweep);
    std::string sw_feature, sw_category;
    std::uint64_t sw_grid_points = 21;
    std::vector<double> sw_grid;
    sweep->add_option("--feature", sw_feature, "Feature to shift")->required();
    sweep->add_option("--category", sw_category,
                      "Target category (categorical sweeps; grid becomes probabilities)");
    sweep->add_option("--grid-points", sw_grid_points, "Grid size over the feature range");
    sweep->add_option("--grid", sw_grid, "Explicit grid of shift magnitudes");
    sweep->add_option("--k-ensemble", sw.k_ensemble, "Generator ensemble size (default 1)");
    sweep->add_option("--n-synth", sw.n_synth, "Rows per grid point (default 5000)");

    // shift-prior ---------------------------------------------------------------
    auto* prior = app.add_subcommand("shift-prior",
                                     "Target-domain estimate from observed marginals");
    SharedFlags pr;
    pr.add_common(prior);
    prior->add_option("--data", pr.data, "Test data CSV")->required();
    pr.add_model_flags(prior);
    std::string pr_priors, pr_target;
    std::vector<std::string> pr_observed;
    prior->add_option("--priors", pr_priors, "JSON file with parametric priors");
    prior->add_option("--target-data", pr_target, "Target-domain CSV with observed columns");
    prior->add_option("--observed", pr_observed, "Observed feature names");
    prior->add_option("--k-ensemble", pr.k_ensemble, "Generator ensemble size (default 1)");
    prior->add_option("--n-synth", pr.n_synth, "Rows to generate (default 5000)");

    // oracle-compare -------------------------------------------------------------
    auto* compare = app.add_subcommand(
        "oracle-compare", "Run a full estimator-vs-oracle experiment from a config file");
    std::string oc_config, oc_out;
    compare->add_option("--config", oc_config, "Experiment config JSON")->required();
    compare->add_option("--out", oc_out, "Run directory")->required();

    // report -------------------------------------------------------------------
    auto* report = app.add_subcommand("report", "Assemble a model report from a run directory");
    std::string rp_results, rp_out;
    report->add_option("--results", rp_results, "Run directory with aggregate.json")->required();
    report->add_option("--out", rp_out, "Report output directory")->required();

    CLI11_PARSE(app, argc, argv);

    if (simulate->parsed()) {
        json opts{{"spec", sim_spec}, {"n", sim_n}, {"seed", sim_seed}, {"out", sim_out}};
        return run("simulate", opts);
    }
    if (fit_gen->parsed()) {
        json opts;
        fg.fill(opts);
        opts["select"] = fg_select;
        opts["n_score"] = fg_n_score;
        return run("fit-gen", opts);
    }
    if (eval_sub->parsed()) {
        json opts;
        es.fill(opts);
        if (!es_by.empty()) opts["by"] = es_by;
        if (!es_subgroups.empty()) {
            std::ifstream in(es_subgroups);
            if (!in) {
                std::fprintf(stderr, "synteval: cannot open '%s'\n", es_subgroups.c_str());
                return SV_ERROR_CONFIG;
            }
            json doc;
            try {
                in >> doc;
            } catch (const json::exception& e) {
                std::fprintf(stderr, "synteval: %s\n", e.what());
                return SV_ERROR_CONFIG;
            }
            opts["subgroups"] = doc;
        }
        opts["bootstrap_b"] = es_bootstrap;
        return run("eval-subgroups", opts);
    }
    if (sweep->parsed()) {
        json opts;
        sw.fill(opts);
        opts["feature"] = sw_feature;
        if (!sw_category.empty()) opts["category"] = sw_category;
        if (!sw_grid.empty())
            opts["grid"] = sw_grid;
        else
            opts["grid_points"] = sw_grid_points;
        return run("shift-sweep", opts);
    }
    if (prior->parsed()) {
        json opts;
        pr.fill(opts);
        if (!pr_priors.empty()) {
            std::ifstream in(pr_priors);
            if (!in) {
                std::fprintf(stderr, "synteval: cannot open '%s'\n", pr_priors.c_str());
                return SV_ERROR_CONFIG;
            }
            json doc;
            try {
                in >> doc;
            } catch (const json::exception& e) {
                std::fprintf(stderr, "synteval: %s\n", e.what());
                return SV_ERROR_CONFIG;
            }
            opts["priors"] = doc;
        }
        if (!pr_target.empty()) opts["target_data"] = pr_target;
        if (!pr_observed.empty()) opts["observed"] = pr_observed;
        return run("shift-prior", opts);
    }
    if (compare->parsed()) {
        return run("oracle-compare", json{{"config", oc_config}, {"out", oc_out}});
    }
    if (report->parsed()) {
        return run("report", json{{"results", rp_results}, {"out", rp_out}});
    }
    return SV_ERROR_CONFIG;
}
