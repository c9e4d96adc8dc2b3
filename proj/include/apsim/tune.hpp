#pragma once

#include <cstdint>
#include <vector>

#include "apsim/env.hpp"

namespace apsim {

struct TuneOptions {
    int random_iters = 400;
    int refine_passes = 3;
    double refine_step = 0.25;    // initial coordinate step, fraction of range
    double refine_shrink = 0.5;   // step multiplier per pass
    std::uint64_t seed = 0;
    std::vector<ScenarioSpec> scenarios;  // evaluation set (>= 1)
};

struct TuneResult {
    TsParams best{};
    double best_score = 0.0;  // mean episode return over the evaluation set
    int evaluations = 0;
};

// Derivative-free search for static consequent parameters: seeded random
// search over the configured ranges followed by coordinate refinement around
// the incumbent. Deterministic under (options.seed, scenarios).
TuneResult tune_static(const EnvConfig& env_cfg, const TuneOptions& options);

// Mean episode return of the given consequents over the evaluation set.
double evaluate_params(const EnvConfig& env_cfg, const TsParams& params,
                       const std::vector<ScenarioSpec>& scenarios);

// Midpoints of the configured scaling ranges, the search's initial candidate.
TsParams midpoint_params(const EnvConfig& env_cfg);

}  // namespace apsim
