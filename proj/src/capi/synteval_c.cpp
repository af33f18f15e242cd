#define SYNTEVAL_API __attribute__((visibility("default")))

#include "synteval/synteval.h"

#include <exception>
#include <string>

#include <nlohmann/json.hpp>

#include "core/commands.hpp"
#include "core/copula.hpp"
#include "core/error.hpp"
#include "core/evaluate.hpp"
#include "core/generate.hpp"
#include "core/quality.hpp"
#include "core/shift.hpp"

using namespace synteval;

struct sv_schema {
    SchemaPtr value;
};
struct sv_dataset {
    Dataset value;
};
struct sv_predictor {
    PredictorPtr value;
};
struct sv_generator {
    CopulaGenerator value;
};
struct sv_ensemble {
    GeneratorEnsemble value;
};

namespace {

thread_local std::string g_last_error;

sv_status record_error(const std::exception& e, sv_status cls) {
    g_last_error = e.what();
    return cls;
}

template <typename Fn>
sv_status guarded(Fn&& fn) {
    try {
        fn();
        return SV_OK;
    } catch (const Error& e) {
        return record_error(e, static_cast<sv_status>(static_cast<int>(e.error_class())));
    } catch (const nlohmann::json::exception& e) {
        return record_error(e, SV_ERROR_CONFIG);
    } catch (const std::exception& e) {
        return record_error(e, SV_ERROR_CONFIG);
    }
}

nlohmann::json parse_json_arg(const char* text, const char* what) {
    if (text == nullptr) return nlohmann::json();
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw_config("BadJson", std::string(what) + ": " + e.what());
    }
}

const char* required(const char* arg, const char* what) {
    if (arg == nullptr) throw_config("NullArgument", std::string(what) + " must not be NULL");
    return arg;
}

template <typename T>
T* required_handle(T* handle, const char* what) {
    if (handle == nullptr) throw_config("NullArgument", std::string(what) + " must not be NULL");
    return handle;
}
template <typename T>
const T* required_handle(const T* handle, const char* what) {
    if (handle == nullptr) throw_config("NullArgument", std::string(what) + " must not be NULL");
    return handle;
}

SubgroupSpec subgroup_arg(const char* json, const Schema& schema) {
    if (json == nullptr) return SubgroupSpec::full_space();
    return SubgroupSpec::from_json(parse_json_arg(json, "subgroup"), schema);
}

MetricKind metric_arg(const char* json) {
    if (json == nullptr) return MetricKind::accuracy();
    return MetricKind::from_json(parse_json_arg(json, "metric"));
}

}  // namespace

extern "C" {

const char* sv_last_error(void) { return g_last_error.c_str(); }

sv_status sv_schema_load(const char* path, sv_schema** out) {
    return guarded([&] {
        *required_handle(out, "out") = new sv_schema{Schema::load(required(path, "path"))};
    });
}

sv_status sv_schema_parse(const char* json, sv_schema** out) {
    return guarded([&] {
        *required_handle(out, "out") =
            new sv_schema{Schema::from_json(parse_json_arg(required(json, "json"), "schema"))};
    });
}

void sv_schema_free(sv_schema* schema) { delete schema; }

sv_status sv_dataset_load_csv(const char* path, const sv_schema* schema, sv_dataset** out) {
    return guarded([&] {
        *required_handle(out, "out") = new sv_dataset{
            load_csv(required(path, "path"), required_handle(schema, "schema")->value)};
    });
}

sv_status sv_dataset_save_csv(const sv_dataset* data, const char* path) {
    return guarded([&] {
        required_handle(data, "data")->value.save_csv(required(path, "path"));
    });
}

void sv_dataset_free(sv_dataset* data) { delete data; }

int64_t sv_dataset_rows(const sv_dataset* data) {
    return data == nullptr ? -1 : static_cast<int64_t>(data->value.n_rows());
}

sv_status sv_dataset_split(const sv_dataset* data, double f_train, double f_test, double f_oracle,
                           uint64_t seed, sv_dataset** train, sv_dataset** test,
                           sv_dataset** oracle) {
    return guarded([&] {
        SplitResult parts =
            split(required_handle(data, "data")->value, f_train, f_test, f_oracle, seed);
        *required_handle(train, "train") = new sv_dataset{std::move(parts.train)};
        *required_handle(test, "test") = new sv_dataset{std::move(parts.test)};
        *required_handle(oracle, "oracle") = new sv_dataset{std::move(parts.oracle)};
    });
}

sv_status sv_dataset_filter(const sv_dataset* data, const char* subgroup_json, sv_dataset** out) {
    return guarded([&] {
        const Dataset& d = required_handle(data, "data")->value;
        *required_handle(out, "out") =
            new sv_dataset{subgroup_filter(d, subgroup_arg(subgroup_json, d.schema()))};
    });
}

sv_status sv_dataset_quantile(const sv_dataset* data, const char* feature, double q, double* out) {
    return guarded([&] {
        *required_handle(out, "out") = required_handle(data, "data")
                                           ->value.empirical_quantile(required(feature, "feature"), q);
    });
}

sv_status sv_predictor_fit(const char* kind, const sv_dataset* train, const char* hyper_json,
                           uint64_t seed, sv_predictor** out) {
    return guarded([&] {
        nlohmann::json hyper = parse_json_arg(hyper_json, "hyper");
        if (hyper.is_null()) hyper = nlohmann::json::object();
        *required_handle(out, "out") = new sv_predictor{fit_predictor(
            required(kind, "kind"), required_handle(train, "train")->value, hyper, seed)};
    });
}

sv_status sv_predictor_load_external(const char* path, sv_predictor** out) {
    return guarded([&] {
        *required_handle(out, "out") = new sv_predictor{load_external(required(path, "path"))};
    });
}

void sv_predictor_free(sv_predictor* predictor) { delete predictor; }

sv_status sv_predictor_estimate(const sv_predictor* predictor, const sv_dataset* data,
                                const char* subgroup_json, const char* metric_json, double* value,
                                int64_t* n_eval) {
    return guarded([&] {
        const Dataset& d = required_handle(data, "data")->value;
        const PerfEstimate e =
            estimate(*required_handle(predictor, "predictor")->value, d,
                     subgroup_arg(subgroup_json, d.schema()), metric_arg(metric_json));
        *required_handle(value, "value") = e.value;
        if (n_eval) *n_eval = static_cast<int64_t>(e.n_eval);
    });
}

sv_status sv_generator_fit(const sv_dataset* data, double shrinkage, uint64_t seed,
                           sv_generator** out) {
    return guarded([&] {
        *required_handle(out, "out") = new sv_generator{
            CopulaGenerator::fit(required_handle(data, "data")->value, shrinkage, seed)};
    });
}

sv_status sv_generator_save(const sv_generator* gen, const char* path) {
    return guarded([&] { required_handle(gen, "gen")->value.save(required(path, "path")); });
}

sv_status sv_generator_load(const char* path, sv_generator** out) {
    return guarded([&] {
        *required_handle(out, "out") =
            new sv_generator{CopulaGenerator::load(required(path, "path"))};
    });
}

void sv_generator_free(sv_generator* gen) { delete gen; }

sv_status sv_generator_sample(const sv_generator* gen, int64_t n, uint64_t seed,
                              sv_dataset** out) {
    return guarded([&] {
        if (n < 1) throw_config("BadSampleSize", "n must be >= 1");
        *required_handle(out, "out") = new sv_dataset{
            required_handle(gen, "gen")->value.sample(static_cast<std::size_t>(n), seed).data};
    });
}

sv_status sv_generator_sample_conditional(const sv_generator* gen, const char* condition_json,
                                          int64_t n, uint64_t seed, sv_dataset** out) {
    return guarded([&] {
        if (n < 1) throw_config("BadSampleSize", "n must be >= 1");
        const CopulaGenerator& g = required_handle(gen, "gen")->value;
        const ConditionSpec cond =
            ConditionSpec::from_json(parse_json_arg(condition_json, "condition"), g.schema());
        *required_handle(out, "out") =
            new sv_dataset{g.sample_conditional(cond, static_cast<std::size_t>(n), seed).data};
    });
}

sv_status sv_generator_sample_shifted(const sv_generator* gen, const char* shift_json, int64_t n,
                                      uint64_t seed, sv_dataset** out) {
    return guarded([&] {
        if (n < 1) throw_config("BadSampleSize", "n must be >= 1");
        const CopulaGenerator& g = required_handle(gen, "gen")->value;
        const MarginalShiftSpec shift =
            MarginalShiftSpec::from_json(parse_json_arg(required(shift_json, "shift"), "shift"));
        *required_handle(out, "out") =
            new sv_dataset{generate_shifted(g, shift, static_cast<std::size_t>(n), seed).data};
    });
}

sv_status sv_ensemble_fit(const sv_dataset* data, uint64_t k, double shrinkage, uint64_t seed,
                          sv_ensemble** out) {
    return guarded([&] {
        *required_handle(out, "out") = new sv_ensemble{GeneratorEnsemble::fit(
            required_handle(data, "data")->value, static_cast<std::size_t>(k), shrinkage, seed)};
    });
}

void sv_ensemble_free(sv_ensemble* ensemble) { delete ensemble; }

sv_status sv_ensemble_estimate(const sv_ensemble* ensemble, const sv_predictor* predictor,
                               const char* subgroup_json, const char* metric_json,
                               int64_t n_per_member, uint64_t seed, double* mean, double* sd,
                               double* lo, double* hi) {
    return guarded([&] {
        if (n_per_member < 1) throw_config("BadSampleSize", "n_per_member must be >= 1");
        const GeneratorEnsemble& ens = required_handle(ensemble, "ensemble")->value;
        const EnsembleEstimate e = ensemble_estimate(
            ens, *required_handle(predictor, "predictor")->value,
            subgroup_arg(subgroup_json, ens.schema()), metric_arg(metric_json),
            static_cast<std::size_t>(n_per_member), seed);
        if (mean) *mean = e.mean;
        if (sd) *sd = e.sd;
        if (lo) *lo = e.interval.lo;
        if (hi) *hi = e.interval.hi;
    });
}

sv_status sv_mmd(const sv_dataset* a, const sv_dataset* b, double bandwidth, double* out) {
    return guarded([&] {
        *required_handle(out, "out") = mmd_rbf(required_handle(a, "a")->value,
                                               required_handle(b, "b")->value, bandwidth);
    });
}

sv_status sv_command(const char* name, const char* options_json) {
    return guarded([&] {
        run_command(required(name, "name"),
                    parse_json_arg(required(options_json, "options"), "options"));
    });
}

}  // extern "C"
