#include "apsim/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "apsim/rng.hpp"

namespace apsim {

std::string to_string(ControlMode mode) {
    switch (mode) {
        case ControlMode::Direct: return "direct";
        case ControlMode::AdaptiveFuzzy: return "adaptive-fuzzy";
        case ControlMode::StaticFuzzy: return "static-fuzzy";
    }
    return "unknown";
}

ControlMode control_mode_from_string(const std::string& name) {
    if (name == "direct") return ControlMode::Direct;
    if (name == "adaptive-fuzzy") return ControlMode::AdaptiveFuzzy;
    if (name == "static-fuzzy") return ControlMode::StaticFuzzy;
    throw std::invalid_argument("unknown control mode: " + name);
}

void ScenarioSpec::validate() const {
    for (const MealEvent& m : fixed_meals) {
        if (!(m.time_min >= 0.0 && m.time_min < 1440.0)) {
            throw std::invalid_argument("ScenarioSpec: meal time outside [0, 1440)");
        }
        if (!(m.carbs_g > 0.0)) {
            throw std::invalid_argument("ScenarioSpec: meal carbs must be positive");
        }
    }
    for (const MealWindow& w : windows) {
        if (!(w.time_lo >= 0.0 && w.time_lo <= w.time_hi && w.time_hi < 1440.0)) {
            throw std::invalid_argument("ScenarioSpec: malformed meal time window");
        }
        if (!(w.carbs_lo > 0.0 && w.carbs_lo <= w.carbs_hi)) {
            throw std::invalid_argument("ScenarioSpec: malformed carb range");
        }
        if (!(w.probability > 0.0 && w.probability <= 1.0)) {
            throw std::invalid_argument("ScenarioSpec: probability must be in (0, 1]");
        }
    }
}

ScenarioSpec scenario_nominal() {
    ScenarioSpec s;
    s.name = "nominal";
    s.fixed_meals = {{480.0, 45.0}, {780.0, 70.0}, {1140.0, 60.0}};
    return s;
}

std::vector<MealWindow> default_meal_windows() {
    return {
        {360.0, 540.0, 30.0, 60.0, 1.0},    // breakfast 06:00-09:00
        {720.0, 840.0, 50.0, 90.0, 1.0},    // lunch 12:00-14:00
        {1080.0, 1260.0, 40.0, 80.0, 1.0},  // dinner 18:00-21:00
        {900.0, 1020.0, 10.0, 30.0, 0.5},   // optional afternoon snack
    };
}

ScenarioSpec scenario_random(std::vector<MealWindow> windows, std::uint64_t seed) {
    ScenarioSpec s;
    s.name = "random";
    s.windows = std::move(windows);
    s.seed = seed;
    return s;
}

ScenarioSpec scenario_extreme() {
    ScenarioSpec s;
    s.name = "extreme";
    s.fixed_meals = {{480.0, 45.0}, {720.0, 150.0}};
    return s;
}

std::vector<MealEvent> generate_meals(const ScenarioSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::vector<MealEvent> meals = spec.fixed_meals;
    if (!spec.windows.empty()) {
        std::mt19937_64 rng(mix_seed(spec.seed, seed));
        for (const MealWindow& w : spec.windows) {
            if (w.probability < 1.0 && uniform01(rng) >= w.probability) {
                continue;
            }
            MealEvent m;
            m.time_min = uniform_in(rng, w.time_lo, w.time_hi);
            m.carbs_g = uniform_in(rng, w.carbs_lo, w.carbs_hi);
            meals.push_back(m);
        }
    }
    std::sort(meals.begin(), meals.end(),
              [](const MealEvent& a, const MealEvent& b) { return a.time_min < b.time_min; });
    return meals;
}

int EnvConfig::action_dim() const {
    switch (mode) {
        case ControlMode::Direct: return 1;
        case ControlMode::AdaptiveFuzzy: return 27;
        case ControlMode::StaticFuzzy: return 0;
    }
    return 0;
}

void EnvConfig::validate() const {
    if (!(term_lo_mgdl < safe_lo_mgdl && safe_lo_mgdl < g_ref_mgdl &&
          g_ref_mgdl < safe_hi_mgdl && safe_hi_mgdl < term_hi_mgdl)) {
        throw std::invalid_argument(
            "EnvConfig: bounds must be ordered term_lo < safe_lo < g_ref < safe_hi < term_hi");
    }
    if (!(control_period_min > 0.0 && integrator_dt_min > 0.0)) {
        throw std::invalid_argument("EnvConfig: periods must be positive");
    }
    const double n_sub = control_period_min / integrator_dt_min;
    if (std::abs(n_sub - std::round(n_sub)) > 1e-9) {
        throw std::invalid_argument("EnvConfig: integrator dt must divide the control period");
    }
    const double n_ctrl = episode_minutes / control_period_min;
    if (std::abs(n_ctrl - std::round(n_ctrl)) > 1e-9) {
        throw std::invalid_argument("EnvConfig: control period must divide the episode length");
    }
    if (!(u_max_mu_min > 0.0)) {
        throw std::invalid_argument("EnvConfig: u_max must be positive");
    }
    if (!(e_scale_mgdl > 0.0 && de_scale_mgdl_min > 0.0)) {
        throw std::invalid_argument("EnvConfig: normalization scales must be positive");
    }
    for (const ParamRange& r : {a_range, b_range, c_range}) {
        if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
            throw std::invalid_argument("EnvConfig: malformed parameter scaling range");
        }
    }
    patient.validate();
}

Observation observe(double G_mgdl, double G_prev_mgdl, double dt_ctrl_min,
                    const EnvConfig& cfg) {
    if (!std::isfinite(G_mgdl) || !std::isfinite(G_prev_mgdl) || !(dt_ctrl_min > 0.0)) {
        throw std::invalid_argument("observe: non-finite input");
    }
    const double e = G_mgdl - cfg.g_ref_mgdl;
    const double de = (G_mgdl - G_prev_mgdl) / dt_ctrl_min;
    return Observation{std::clamp(e / cfg.e_scale_mgdl, -1.0, 1.0),
                       std::clamp(de / cfg.de_scale_mgdl_min, -1.0, 1.0)};
}

RewardTerms glucose_reward(double e_mgdl, double i_acc, double c_acc,
                           bool printed_close_branch) {
    if (i_acc < 0.0 || c_acc < 0.0) {
        throw std::invalid_argument("glucose_reward: accumulators must be non-negative");
    }
    const double abs_e = std::abs(e_mgdl);
    RewardTerms r;
    if (abs_e <= 10.0) {
        r.base = printed_close_branch ? 1.262 * std::pow(abs_e, 0.2) + 2.0
                                      : 20.0 - 12.62 * std::pow(abs_e, 0.2);
    } else if (e_mgdl < 0.0) {
        r.base = (1.0 - abs_e) / 20.0;  // glucose below reference
    } else {
        r.base = (1.0 - abs_e) / 70.0;  // glucose above reference
    }
    r.penalty_i = 2e-6 * i_acc;
    r.penalty_c = 1e-6 * c_acc;
    r.total = r.base - r.penalty_i - r.penalty_c;
    return r;
}

double scale_action_direct(double a, double u_max) {
    if (!(a >= -1.0 && a <= 1.0)) {
        throw std::invalid_argument("scale_action_direct: action outside [-1, 1]");
    }
    return 0.5 * (a + 1.0) * u_max;
}

TsParams scale_action_params(std::span<const double> a, const EnvConfig& cfg) {
    if (a.size() != 27) {
        throw std::invalid_argument("scale_action_params: expected 27 components");
    }
    TsParams p;
    const ParamRange ranges[3] = {cfg.a_range, cfg.b_range, cfg.c_range};
    for (int i = 0; i < 27; ++i) {
        if (!(a[i] >= -1.0 && a[i] <= 1.0)) {
            throw std::invalid_argument("scale_action_params: action outside [-1, 1]");
        }
        const ParamRange& r = ranges[i % 3];
        p.v[i] = r.lo + 0.5 * (a[i] + 1.0) * (r.hi - r.lo);
    }
    return p;
}

GlucoseEnv::GlucoseEnv(EnvConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    cfg_.fis.validate_coverage();
}

double GlucoseEnv::basal_mu_min() const {
    if (!basal_cache_) {
        basal_cache_ = find_basal(cfg_.patient, cfg_.g_ref_mgdl, cfg_.basal_tol_mgdl);
    }
    return *basal_cache_;
}

Observation GlucoseEnv::reset(const ScenarioSpec& scenario, std::uint64_t seed) {
    meals_ = generate_meals(scenario, seed);
    state_ = basal_steady_state(cfg_.patient, basal_mu_min(), cfg_.g_ref_mgdl);
    acc_ = RewardAccumulators{};
    time_min_ = 0.0;
    g_prev_ctrl_ = glucose_mgdl(state_, cfg_.patient);
    last_e_raw_ = 0.0;
    last_de_raw_ = 0.0;
    finished_ = false;
    return Observation{0.0, 0.0};
}

double GlucoseEnv::resolve_actuation(std::span<const double> action, StepInfo& info) const {
    switch (cfg_.mode) {
        case ControlMode::Direct: {
            if (action.size() != 1) {
                throw std::invalid_argument("GlucoseEnv::step: Direct mode expects 1 action");
            }
            return scale_action_direct(action[0], cfg_.u_max_mu_min);
        }
        case ControlMode::AdaptiveFuzzy: {
            if (action.size() != 27) {
                throw std::invalid_argument(
                    "GlucoseEnv::step: AdaptiveFuzzy mode expects 27 actions");
            }
            const TsParams params = scale_action_params(action, cfg_);
            info.active_params = params;
            const double e = std::clamp(last_e_raw_, cfg_.fis.e_min, cfg_.fis.e_max);
            const double de = std::clamp(last_de_raw_, cfg_.fis.de_min, cfg_.fis.de_max);
            const TsEval eval = ts_output(e, de, params, cfg_.fis);
            info.coverage_gap = eval.coverage_gap;
            return clamp_actuation(eval.u, cfg_.u_max_mu_min);
        }
        case ControlMode::StaticFuzzy: {
            if (!action.empty()) {
                throw std::invalid_argument(
                    "GlucoseEnv::step: StaticFuzzy mode takes no action");
            }
            const double e = std::clamp(last_e_raw_, cfg_.fis.e_min, cfg_.fis.e_max);
            const double de = std::clamp(last_de_raw_, cfg_.fis.de_min, cfg_.fis.de_max);
            const TsEval eval = ts_output(e, de, cfg_.static_params, cfg_.fis);
            info.coverage_gap = eval.coverage_gap;
            return clamp_actuation(eval.u, cfg_.u_max_mu_min);
        }
    }
    throw std::logic_error("GlucoseEnv::step: unknown mode");
}

StepResult GlucoseEnv::step(std::span<const double> action) {
    if (finished_) {
        throw std::logic_error("GlucoseEnv::step: episode already finished (reset first)");
    }

    StepResult res;
    const double u = resolve_actuation(action, res.info);

    const double t_start = time_min_;
    const int n_sub =
        static_cast<int>(std::round(cfg_.control_period_min / cfg_.integrator_dt_min));
    const double dt = cfg_.integrator_dt_min;

    for (int k = 0; k < n_sub; ++k) {
        state_ = step_rk4(state_, time_min_, dt, u, meals_, cfg_.patient);
        time_min_ += dt;
        const double g_sub = glucose_mgdl(state_, cfg_.patient);
        acc_.i_acc +=
            std::min(std::abs(g_sub - cfg_.g_ref_mgdl) / cfg_.e_scale_mgdl, 1.0) * dt;
        acc_.c_acc += u * dt;
        if (g_sub > cfg_.term_hi_mgdl || g_sub < cfg_.term_lo_mgdl) {
            res.terminated = true;
            break;
        }
    }
    if (!res.terminated && time_min_ >= cfg_.episode_minutes - 1e-9) {
        res.truncated = true;
    }

    const double g_now = glucose_mgdl(state_, cfg_.patient);
    const double elapsed = time_min_ - t_start;
    const double e = g_now - cfg_.g_ref_mgdl;
    const double de = (g_now - g_prev_ctrl_) / elapsed;

    const RewardTerms terms =
        glucose_reward(e, acc_.i_acc, acc_.c_acc, cfg_.printed_close_branch);

    res.obs = observe(g_now, g_prev_ctrl_, elapsed, cfg_);
    res.reward = terms.total;
    res.info.time_min = time_min_;
    res.info.G_mgdl = g_now;
    res.info.e_mgdl = e;
    res.info.de_mgdl_min = de;
    res.info.u_mu_min = u;
    res.info.reward_base = terms.base;
    res.info.penalty_i = terms.penalty_i;
    res.info.penalty_c = terms.penalty_c;
    res.info.minutes_elapsed = elapsed;
    for (const MealEvent& m : meals_) {
        if (m.time_min >= t_start && m.time_min < time_min_) {
            res.info.meal_g += m.carbs_g;
        }
    }

    g_prev_ctrl_ = g_now;
    last_e_raw_ = e;
    last_de_raw_ = de;
    finished_ = res.terminated || res.truncated;
    return res;
}

}  // namespace apsim
