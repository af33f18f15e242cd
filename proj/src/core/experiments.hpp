#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/evaluate.hpp"
#include "core/groundtruth.hpp"

namespace synteval {

/// Configuration for the oracle-compare experiment runner. Defaults follow
/// the built-in process: 8.4k/2.1k/19.6k splits of 30.1k simulated rows,
/// 20 seeds, K=5 for interval-bearing subgroup reports and K=1 for sweeps.
struct ExperimentConfig {
    std::string mode = "subgroup";  // subgroup | shift | prior
    nlohmann::json ground_truth;    // spec document, or the string "builtin"

    std::size_t n_total = 30100;
    double f_train = 8400.0 / 30100.0;
    double f_test = 2100.0 / 30100.0;
    double f_oracle = 19600.0 / 30100.0;

    std::string predictor_kind = "logistic";
    nlohmann::json predictor_hyper = nlohmann::json::object();
    nlohmann::json metric = "accuracy";

    std::size_t k_ensemble = 5;
    double shrinkage = 0.05;
    std::vector<std::uint64_t> seeds;  // default 0..19

    // subgroup mode
    std::string matrix_feature_a = "group";
    std::string matrix_feature_b = "region";
    std::size_t bootstrap_b = 100;
    std::size_t min_cell_n = 100;
    std::string fairness_sensitive = "flag";

    // shift mode
    std::string sweep_feature = "age";
    std::size_t grid_points = 21;
    std::size_t n_synth = 5000;
    std::size_t n_oracle_rs = 4000;
    std::size_t n_rs_baseline = 200;

    // prior mode
    nlohmann::json target_ground_truth;  // spec document or "builtin_target"
    std::vector<std::string> observed_features = {"age", "score", "flag", "group"};
    std::size_t n_target_truth = 20000;
    std::size_t n_target_obs = 2000;

    static ExperimentConfig from_json(const nlohmann::json& doc);
    static ExperimentConfig load(const std::string& path);
    nlohmann::json to_json() const;

    GroundTruthSpec resolve_ground_truth() const;
    GroundTruthSpec resolve_target_ground_truth() const;
    MetricKind metric_kind() const { return MetricKind::from_json(metric); }
};

/// The built-in target domain for prior-knowledge experiments: the built-in
/// process with a re-mixed subgroup distribution, so conditionals given the
/// subgroup are exactly preserved.
GroundTruthSpec builtin_target_spec();

/// Run the configured experiment, writing config.json, one results file per
/// seed, CSV tables and aggregate.json under out_dir.
void run_experiment(const ExperimentConfig& cfg, const std::string& out_dir);

}  // namespace synteval
