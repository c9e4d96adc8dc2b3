#include "apsim/tune.hpp"

#include <algorithm>
#include <stdexcept>

#include "apsim/metrics.hpp"
#include "apsim/rng.hpp"

namespace apsim {

namespace {

EnvConfig static_env_config(const EnvConfig& base, const TsParams& params) {
    EnvConfig cfg = base;
    cfg.mode = ControlMode::StaticFuzzy;
    cfg.static_params = params;
    return cfg;
}

}  // namespace

TsParams midpoint_params(const EnvConfig& env_cfg) {
    TsParams p;
    const ParamRange ranges[3] = {env_cfg.a_range, env_cfg.b_range, env_cfg.c_range};
    for (int i = 0; i < 27; ++i) {
        const ParamRange& r = ranges[i % 3];
        p.v[i] = 0.5 * (r.lo + r.hi);
    }
    return p;
}

namespace {

double score_with(GlucoseEnv& env, const TsParams& params,
                  const std::vector<ScenarioSpec>& scenarios) {
    env.set_static_params(params);
    double total = 0.0;
    for (const ScenarioSpec& scenario : scenarios) {
        const std::vector<TrajectoryRow> rows =
            run_episode(env, scenario, scenario.seed, static_fuzzy_policy());
        for (const TrajectoryRow& r : rows) {
            total += r.reward;
        }
    }
    return total / static_cast<double>(scenarios.size());
}

}  // namespace

double evaluate_params(const EnvConfig& env_cfg, const TsParams& params,
                       const std::vector<ScenarioSpec>& scenarios) {
    GlucoseEnv env(static_env_config(env_cfg, params));
    return score_with(env, params, scenarios);
}

TuneResult tune_static(const EnvConfig& env_cfg, const TuneOptions& options) {
    if (options.scenarios.empty()) {
        throw std::invalid_argument("tune_static: need at least one evaluation scenario");
    }
    const ParamRange ranges[3] = {env_cfg.a_range, env_cfg.b_range, env_cfg.c_range};
    std::mt19937_64 rng(options.seed);

    TuneResult result;
    result.best = midpoint_params(env_cfg);
    GlucoseEnv env(static_env_config(env_cfg, result.best));
    result.best_score = score_with(env, result.best, options.scenarios);
    result.evaluations = 1;

    // Random search over the full box.
    for (int it = 0; it < options.random_iters; ++it) {
        TsParams candidate;
        for (int i = 0; i < 27; ++i) {
            const ParamRange& r = ranges[i % 3];
            candidate.v[i] = uniform_in(rng, r.lo, r.hi);
        }
        const double score = score_with(env, candidate, options.scenarios);
        ++result.evaluations;
        if (score > result.best_score) {
            result.best = candidate;
            result.best_score = score;
        }
    }

    // Coordinate refinement around the incumbent with a shrinking step.
    double step = options.refine_step;
    for (int pass = 0; pass < options.refine_passes; ++pass) {
        for (int i = 0; i < 27; ++i) {
            const ParamRange& r = ranges[i % 3];
            const double delta = step * (r.hi - r.lo);
            for (const double sign : {+1.0, -1.0}) {
                TsParams candidate = result.best;
                candidate.v[i] = std::clamp(candidate.v[i] + sign * delta, r.lo, r.hi);
                if (candidate.v[i] == result.best.v[i]) {
                    continue;
                }
                const double score = score_with(env, candidate, options.scenarios);
                ++result.evaluations;
                if (score > result.best_score) {
                    result.best = candidate;
                    result.best_score = score;
                }
            }
        }
        step *= options.refine_shrink;
    }
    return result;
}

}  // namespace apsim
