#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apsim/fuzzy.hpp"
#include "apsim/patient.hpp"

namespace apsim {

enum class ControlMode { Direct, AdaptiveFuzzy, StaticFuzzy };

std::string to_string(ControlMode mode);
ControlMode control_mode_from_string(const std::string& name);

// Randomization window for one meal: ingestion time drawn uniformly from
// [time_lo, time_hi] minutes, carbs from [carbs_lo, carbs_hi] grams. The meal
// is included with the given probability (1 = always).
struct MealWindow {
    double time_lo = 0.0, time_hi = 0.0;
    double carbs_lo = 0.0, carbs_hi = 0.0;
    double probability = 1.0;
};

// Either a fixed meal list or a set of randomization windows.
struct ScenarioSpec {
    std::string name;
    std::vector<MealEvent> fixed_meals;
    std::vector<MealWindow> windows;
    std::uint64_t seed = 0;

    void validate() const;
};

ScenarioSpec scenario_nominal();
ScenarioSpec scenario_random(std::vector<MealWindow> windows, std::uint64_t seed);
ScenarioSpec scenario_extreme();
std::vector<MealWindow> default_meal_windows();

// Materializes the meal list; deterministic in (spec, seed).
std::vector<MealEvent> generate_meals(const ScenarioSpec& spec, std::uint64_t seed);

struct ParamRange {
    double lo = 0.0, hi = 1.0;
};

struct EnvConfig {
    ControlMode mode = ControlMode::Direct;
    double g_ref_mgdl = 90.0;
    double safe_lo_mgdl = 70.0, safe_hi_mgdl = 180.0;    // reporting band
    double term_lo_mgdl = 50.0, term_hi_mgdl = 300.0;    // safety termination
    double episode_minutes = 1440.0;
    double control_period_min = 5.0;
    double integrator_dt_min = 1.0;
    double u_max_mu_min = 100.0;
    double e_scale_mgdl = 300.0;
    double de_scale_mgdl_min = 10.0;
    // Scaling ranges of the 27 consequent parameters, applied per (a, b, c)
    // column. Sized so that mid-range gains regulate the nominal day; the
    // insulin absorption lag makes anything hotter overshoot into
    // hypoglycemia overnight.
    ParamRange a_range{0.0, 0.2};
    ParamRange b_range{0.0, 12.0};
    ParamRange c_range{0.0, 15.0};
    // Use the literally printed close-branch reward expression instead of the
    // reconstruction that meets the stated endpoints (comparison aid).
    bool printed_close_branch = false;
    double basal_tol_mgdl = 0.01;
    PatientParams patient{};
    FisInputConfig fis = FisInputConfig::defaults();
    TsParams static_params{};  // consequents used in StaticFuzzy mode

    int action_dim() const;
    void validate() const;
};

// Normalized observation; both components clipped to [-1, 1].
struct Observation {
    double e_norm = 0.0;
    double de_norm = 0.0;
};

struct RewardAccumulators {
    double i_acc = 0.0;  // integral of |normalized error| [min]
    double c_acc = 0.0;  // integral of actuated insulin [mU]
};

struct RewardTerms {
    double total = 0.0;
    double base = 0.0;
    double penalty_i = 0.0;
    double penalty_c = 0.0;
};

struct StepInfo {
    double time_min = 0.0;       // simulation time at end of step
    double G_mgdl = 0.0;
    double e_mgdl = 0.0;
    double de_mgdl_min = 0.0;
    double u_mu_min = 0.0;
    double reward_base = 0.0;
    double penalty_i = 0.0;
    double penalty_c = 0.0;
    double meal_g = 0.0;         // carbs ingested during this control period
    double minutes_elapsed = 0.0;  // < control period only on early termination
    bool coverage_gap = false;
    std::optional<TsParams> active_params;  // set in AdaptiveFuzzy mode
};

struct StepResult {
    Observation obs;
    double reward = 0.0;
    bool terminated = false;  // safety bound violated (absorbing)
    bool truncated = false;   // 24 h elapsed (non-absorbing)
    StepInfo info;
};

Observation observe(double G_mgdl, double G_prev_mgdl, double dt_ctrl_min,
                    const EnvConfig& cfg);

// Reward at error e [mg/dL] with the episode accumulators. The base term is
// branch-selected on proximity to the reference first (|e| <= 10), then on
// the sign of e; penalties are linear in the accumulators.
RewardTerms glucose_reward(double e_mgdl, double i_acc, double c_acc,
                           bool printed_close_branch = false);

// [-1, 1] -> [0, u_max] infusion.
double scale_action_direct(double a, double u_max);

// [-1, 1]^27 -> TsParams, componentwise affine onto the configured ranges.
TsParams scale_action_params(std::span<const double> a, const EnvConfig& cfg);

class GlucoseEnv {
public:
    explicit GlucoseEnv(EnvConfig cfg);

    // Initializes the patient at the basal steady state for g_ref and
    // generates the episode's meals. Returns the initial observation (0, 0).
    Observation reset(const ScenarioSpec& scenario, std::uint64_t seed);

    // Advances one control period. Action size must be 1 (Direct),
    // 27 (AdaptiveFuzzy) or 0 (StaticFuzzy). Throws std::logic_error when the
    // episode already finished.
    StepResult step(std::span<const double> action);

    const EnvConfig& config() const { return cfg_; }
    double time_min() const { return time_min_; }
    bool done() const { return finished_; }
    const RewardAccumulators& accumulators() const { return acc_; }
    const std::vector<MealEvent>& meals() const { return meals_; }
    double basal_mu_min() const;

    const PatientState& patient_state() const { return state_; }
    // State injection for fault testing.
    void set_patient_state(const PatientState& s) { state_ = s; }
    // Swaps the StaticFuzzy consequents without rebuilding the environment
    // (keeps the cached basal solution); used by the static tuner.
    void set_static_params(const TsParams& p) { cfg_.static_params = p; }

private:
    double resolve_actuation(std::span<const double> action, StepInfo& info) const;

    EnvConfig cfg_;
    mutable std::optional<double> basal_cache_;
    PatientState state_{};
    std::vector<MealEvent> meals_;
    RewardAccumulators acc_{};
    double time_min_ = 0.0;
    double g_prev_ctrl_ = 0.0;
    double last_e_raw_ = 0.0;
    double last_de_raw_ = 0.0;
    bool finished_ = true;  // step() before reset() is a contract violation
};

}  // namespace apsim
