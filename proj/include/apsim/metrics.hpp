#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "apsim/env.hpp"
#include "apsim/nn.hpp"

namespace apsim {

// One control-period record of a closed-loop episode.
struct TrajectoryRow {
    double time_min = 0.0;
    double G_mgdl = 0.0;
    double e = 0.0;
    double de = 0.0;
    double u_mU_per_min = 0.0;
    double reward = 0.0;
    double reward_base = 0.0;
    double penalty_i = 0.0;
    double penalty_c = 0.0;
    double meal_g = 0.0;
    bool terminated = false;
    bool truncated = false;
};

struct MetricsReport {
    double time_in_range = 0.0;        // fraction of samples with G in (safe_lo, safe_hi)
    double min_G = 0.0;
    double max_G = 0.0;
    double undershoot_below_ref = 0.0;  // mg/dL below the reference
    double overshoot_above_hi = 0.0;    // mg/dL above the safe band top
    double total_insulin_U = 0.0;
    double mean_u_mU_min = 0.0;
    double mean_u_U_h = 0.0;
    double episode_return = 0.0;
    std::string termination = "truncated";
};

MetricsReport compute_metrics(const std::vector<TrajectoryRow>& rows, const EnvConfig& cfg);

std::string trajectory_csv_header();
void write_trajectory_csv(const std::filesystem::path& file,
                          const std::vector<TrajectoryRow>& rows);
std::vector<TrajectoryRow> read_trajectory_csv(const std::filesystem::path& file);

std::string metrics_to_text(const MetricsReport& m);

// A policy maps the current observation to an action vector sized for the
// environment mode (empty for StaticFuzzy).
using Policy = std::function<std::vector<double>(const Observation&)>;

Policy static_fuzzy_policy();
Policy actor_policy(const Mlp& actor);

// Rolls one full episode and returns its control-period rows.
std::vector<TrajectoryRow> run_episode(GlucoseEnv& env, const ScenarioSpec& scenario,
                                       std::uint64_t seed, const Policy& policy);

}  // namespace apsim
