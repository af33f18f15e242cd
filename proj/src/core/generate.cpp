#include "core/generate.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace synteval {

namespace {

struct SpecPlan {
    std::vector<std::pair<std::size_t, std::int32_t>> categories;
    // feature -> intersected [low, high] with openness
    struct IntervalBound {
        std::size_t feature;
        double low, high;
        bool low_closed, high_closed;
    };
    std::vector<IntervalBound> intervals;
    std::vector<const NeighborhoodAtom*> neighborhoods;
};

SpecPlan plan_spec(const SubgroupSpec& spec) {
    SpecPlan plan;
    for (const SubgroupAtom& atom : spec.atoms()) {
        std::visit(
            [&](const auto& a) {
                using T = std::decay_t<decltype(a)>;
                if constexpr (std::is_same_v<T, CategoryEqualsAtom>) {
                    for (const auto& [f, c] : plan.categories) {
                        if (f == a.feature && c != a.category)
                            throw_data("EmptyConditional",
                                       "conflicting category atoms on one feature");
                    }
                    if (std::none_of(plan.categories.begin(), plan.categories.end(),
                                     [&](const auto& e) { return e.first == a.feature; }))
                        plan.categories.emplace_back(a.feature, a.category);
                } else if constexpr (std::is_same_v<T, IntervalAtom>) {
                    auto it = std::find_if(plan.intervals.begin(), plan.intervals.end(),
                                           [&](const auto& b) { return b.feature == a.feature; });
                    if (it == plan.intervals.end()) {
                        plan.intervals.push_back(
                            {a.feature, a.low, a.high, a.low_closed, a.high_closed});
                    } else {
                        if (a.low > it->low || (a.low == it->low && !a.low_closed)) {
                            it->low = a.low;
                            it->low_closed = a.low_closed;
                        }
                        if (a.high < it->high || (a.high == it->high && !a.high_closed)) {
                            it->high = a.high;
                            it->high_closed = a.high_closed;
                        }
                    }
                } else {
                    plan.neighborhoods.push_back(&a);
                }
            },
            atom);
    }
    return plan;
}

}  // namespace

GeneratedSample generate_for_spec(const CopulaGenerator& gen, const SubgroupSpec& spec,
                                  std::size_t n, std::uint64_t seed) {
    if (n < 1) throw_config("BadSampleSize", "n must be >= 1");
    if (spec.is_full_space()) return gen.sample(n, seed);

    const SpecPlan plan = plan_spec(spec);
    const Schema& schema = gen.schema();

    // condition the neighborhood centers' categorical coordinates as well
    std::vector<std::pair<std::size_t, std::int32_t>> categories = plan.categories;
    for (const NeighborhoodAtom* nb : plan.neighborhoods) {
        for (std::size_t f = 0; f < schema.size(); ++f) {
            if (!schema.feature(f).is_discrete()) continue;
            const std::int32_t c = std::get<std::int32_t>(nb->center[f]);
            bool conflict = false;
            bool present = false;
            for (const auto& [pf, pc] : categories) {
                if (pf != f) continue;
                present = true;
                conflict = pc != c;
            }
            if (conflict)
                throw_data("EmptyConditional", "neighborhood center contradicts category atoms");
            if (!present) categories.emplace_back(f, c);
        }
    }

    // truncated-uniform bounds for interval features
    struct Trunc {
        std::size_t feature;
        double u_lo, u_hi;
    };
    std::vector<Trunc> truncs;
    for (const auto& b : plan.intervals) {
        const auto& m = std::get<ContinuousMarginal>(gen.marginal(b.feature));
        const double lo = std::max(b.low, m.support_low());
        const double hi = std::min(b.high, m.support_high());
        if (!(lo <= hi))
            throw_data("EmptyConditional", "interval atom outside generator support");
        const double u_lo = m.cdf(lo), u_hi = m.cdf(hi);
        if (!(u_hi > u_lo))
            throw_data("EmptyConditional", "interval atom carries no probability mass");
        truncs.push_back({b.feature, u_lo, u_hi});
    }

    std::vector<std::size_t> features;
    for (const auto& [f, c] : categories) features.push_back(f);
    for (const auto& t : truncs) features.push_back(t.feature);

    Rng trunc_rng(Rng::derive(seed, /*stream=*/6));
    auto draw_columns = [&](std::size_t count) {
        std::vector<std::vector<Value>> columns;
        for (const auto& [f, c] : categories) columns.emplace_back(count, Value{c});
        for (const auto& t : truncs) {
            const auto& m = std::get<ContinuousMarginal>(gen.marginal(t.feature));
            std::vector<Value> col(count);
            for (std::size_t r = 0; r < count; ++r)
                col[r] = m.inv_cdf(t.u_lo + (t.u_hi - t.u_lo) * trunc_rng.uniform());
            columns.push_back(std::move(col));
        }
        return columns;
    };

    if (plan.neighborhoods.empty()) {
        if (features.empty()) return gen.sample(n, seed);
        return gen.sample_given_columns(features, draw_columns(n), seed);
    }

    // neighborhoods: generate in batches, keep rows inside every ball
    GeneratedSample out(gen.schema_ptr());
    out.data.reserve(n);
    out.latents.resize(n, static_cast<Eigen::Index>(gen.dim()));
    std::size_t kept = 0;
    std::size_t drawn = 0;
    const std::size_t budget = std::max<std::size_t>(100'000, 500 * n);
    std::uint64_t batch_seed = Rng::derive(seed, /*stream=*/7);
    const std::size_t batch = std::max<std::size_t>(n, 256);
    while (kept < n) {
        if (drawn >= budget)
            throw_numeric("NeighborhoodStall",
                          "could not populate the neighborhood within the draw budget");
        GeneratedSample cand = features.empty()
                                   ? gen.sample(batch, batch_seed)
                                   : gen.sample_given_columns(features, draw_columns(batch),
                                                              batch_seed);
        batch_seed = Rng::derive(batch_seed, /*stream=*/8);
        drawn += batch;
        for (std::size_t r = 0; r < batch && kept < n; ++r) {
            if (!spec.matches(cand.data, r)) continue;
            out.data.append(cand.data.row(r));
            out.latents.row(static_cast<Eigen::Index>(kept)) = cand.latents.row(static_cast<Eigen::Index>(r));
            ++kept;
        }
    }
    return out;
}

}  // namespace synteval
