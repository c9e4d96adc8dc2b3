#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "apsim/env.hpp"
#include "apsim/metrics.hpp"
#include "apsim/rng.hpp"

using namespace apsim;

namespace {

EnvConfig make_config(ControlMode mode) {
    EnvConfig cfg;
    cfg.mode = mode;
    return cfg;
}

ScenarioSpec no_meals_scenario() {
    ScenarioSpec s;
    s.name = "fasting";
    return s;
}

}  // namespace

TEST_CASE("scenario generation") {
    SUBCASE("nominal has exactly the three documented meals") {
        const ScenarioSpec s = scenario_nominal();
        const auto meals = generate_meals(s, 1);
        REQUIRE(meals.size() == 3);
        CHECK(meals[0].time_min == 480.0);
        CHECK(meals[0].carbs_g == 45.0);
        CHECK(meals[1].time_min == 780.0);
        CHECK(meals[1].carbs_g == 70.0);
        CHECK(meals[2].time_min == 1140.0);
        CHECK(meals[2].carbs_g == 60.0);
    }
    SUBCASE("extreme includes the oversized lunch") {
        const auto meals = generate_meals(scenario_extreme(), 1);
        REQUIRE(meals.size() == 2);
        CHECK(meals[1].carbs_g == 150.0);
    }
    SUBCASE("random draws are deterministic in the seed") {
        const ScenarioSpec s = scenario_random(default_meal_windows(), 33);
        const auto a = generate_meals(s, 5);
        const auto b = generate_meals(s, 5);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].time_min == b[i].time_min);
            CHECK(a[i].carbs_g == b[i].carbs_g);
        }
        const auto c = generate_meals(s, 6);
        CHECK(a.size() + c.size() > 0);  // different seed draws differently
    }
    SUBCASE("1000 draws stay inside their windows") {
        const std::vector<MealWindow> windows = default_meal_windows();
        const ScenarioSpec s = scenario_random(windows, 12);
        int optional_included = 0;
        for (std::uint64_t seed = 0; seed < 1000; ++seed) {
            const auto meals = generate_meals(s, seed);
            CHECK(meals.size() >= 3);
            CHECK(meals.size() <= 4);
            optional_included += meals.size() == 4 ? 1 : 0;
            for (const MealEvent& m : meals) {
                bool inside_some = false;
                for (const MealWindow& w : windows) {
                    if (m.time_min >= w.time_lo && m.time_min <= w.time_hi &&
                        m.carbs_g >= w.carbs_lo && m.carbs_g <= w.carbs_hi) {
                        inside_some = true;
                    }
                }
                CHECK(inside_some);
            }
        }
        // the 0.5-probability snack shows up roughly half the time
        CHECK(optional_included > 300);
        CHECK(optional_included < 700);
    }
    SUBCASE("malformed scenarios rejected") {
        ScenarioSpec s;
        s.fixed_meals = {{1500.0, 40.0}};
        CHECK_THROWS_AS(s.validate(), std::invalid_argument);
        s.fixed_meals = {{100.0, 0.0}};
        CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    }
}

TEST_CASE("observation construction") {
    const EnvConfig cfg = make_config(ControlMode::Direct);
    SUBCASE("at the reference with no motion") {
        const Observation o = observe(90.0, 90.0, 5.0, cfg);
        CHECK(o.e_norm == 0.0);
        CHECK(o.de_norm == 0.0);
    }
    SUBCASE("clipping at the normalization boundary") {
        const Observation o = observe(390.0, 390.0, 5.0, cfg);
        CHECK(o.e_norm == 1.0);
        const Observation o2 = observe(500.0, 500.0, 5.0, cfg);
        CHECK(o2.e_norm == 1.0);
    }
    SUBCASE("rate normalization arithmetic") {
        const Observation o = observe(100.0, 90.0, 5.0, cfg);
        CHECK(o.de_norm == doctest::Approx(0.2).epsilon(1e-15));
        CHECK(o.e_norm == doctest::Approx(10.0 / 300.0).epsilon(1e-15));
    }
}

TEST_CASE("reward function") {
    SUBCASE("value 20 at the reference") {
        CHECK(glucose_reward(0.0, 0.0, 0.0).total == 20.0);
    }
    SUBCASE("close-branch endpoints") {
        CHECK(std::abs(glucose_reward(10.0, 0.0, 0.0).base) < 1e-2);
        CHECK(std::abs(glucose_reward(-10.0, 0.0, 0.0).base) < 1e-2);
    }
    SUBCASE("linear branch values") {
        CHECK(glucose_reward(-50.0, 0.0, 0.0).base ==
              doctest::Approx(-2.45).epsilon(1e-12));
        CHECK(glucose_reward(100.0, 0.0, 0.0).base ==
              doctest::Approx((1.0 - 100.0) / 70.0).epsilon(1e-12));
    }
    SUBCASE("penalty arithmetic") {
        const RewardTerms r = glucose_reward(0.0, 1000.0, 500.0);
        CHECK(r.penalty_i == doctest::Approx(0.002).epsilon(1e-15));
        CHECK(r.penalty_c == doctest::Approx(0.0005).epsilon(1e-15));
        CHECK(r.total == doctest::Approx(19.9975).epsilon(1e-12));
    }
    SUBCASE("maximal at zero and decreasing within each branch") {
        double prev_close = 21.0;
        for (double e = 0.0; e <= 10.0; e += 0.25) {
            const double base = glucose_reward(e, 0.0, 0.0).base;
            CHECK(base < prev_close);
            CHECK(glucose_reward(-e, 0.0, 0.0).base == base);
            prev_close = base;
        }
        double prev_hypo = 1.0;
        for (double e = -11.0; e >= -290.0; e -= 1.0) {
            const double base = glucose_reward(e, 0.0, 0.0).base;
            CHECK(base < prev_hypo);
            prev_hypo = base;
        }
        double prev_hyper = 1.0;
        for (double e = 11.0; e <= 300.0; e += 1.0) {
            const double base = glucose_reward(e, 0.0, 0.0).base;
            CHECK(base < prev_hyper);
            prev_hyper = base;
        }
    }
    SUBCASE("hypoglycemia side penalized harder") {
        for (double e = 10.5; e <= 290.0; e += 0.7) {
            CHECK(glucose_reward(-e, 0.0, 0.0).base < glucose_reward(e, 0.0, 0.0).base);
        }
    }
    SUBCASE("penalties strictly monotone in the accumulators") {
        const double base = glucose_reward(5.0, 100.0, 100.0).total;
        CHECK(glucose_reward(5.0, 200.0, 100.0).total < base);
        CHECK(glucose_reward(5.0, 100.0, 200.0).total < base);
    }
    SUBCASE("printed close-branch form available for comparison") {
        const RewardTerms r = glucose_reward(0.0, 0.0, 0.0, true);
        CHECK(r.base == 2.0);  // 1.262 * 0^(1/5) + 2
        CHECK(glucose_reward(10.0, 0.0, 0.0, true).base ==
              doctest::Approx(1.262 * std::pow(10.0, 0.2) + 2.0).epsilon(1e-12));
    }
    SUBCASE("negative accumulators rejected") {
        CHECK_THROWS_AS(glucose_reward(0.0, -1.0, 0.0), std::invalid_argument);
    }
}

TEST_CASE("action scaling") {
    SUBCASE("direct mode maps the box onto the pump range") {
        CHECK(scale_action_direct(-1.0, 100.0) == 0.0);
        CHECK(scale_action_direct(1.0, 100.0) == 100.0);
        CHECK(scale_action_direct(0.0, 100.0) == 50.0);
        CHECK_THROWS_AS(scale_action_direct(1.5, 100.0), std::invalid_argument);
    }
    SUBCASE("parameter mode maps onto per-column ranges") {
        const EnvConfig cfg = make_config(ControlMode::AdaptiveFuzzy);
        std::vector<double> lo(27, -1.0), hi(27, 1.0), mid(27, 0.0);
        const TsParams p_lo = scale_action_params(lo, cfg);
        const TsParams p_hi = scale_action_params(hi, cfg);
        const TsParams p_mid = scale_action_params(mid, cfg);
        for (int r = 0; r < 9; ++r) {
            CHECK(p_lo.a(r) == cfg.a_range.lo);
            CHECK(p_lo.b(r) == cfg.b_range.lo);
            CHECK(p_lo.c(r) == cfg.c_range.lo);
            CHECK(p_hi.a(r) == cfg.a_range.hi);
            CHECK(p_hi.b(r) == cfg.b_range.hi);
            CHECK(p_hi.c(r) == cfg.c_range.hi);
            CHECK(p_mid.a(r) == doctest::Approx(0.1).epsilon(1e-15));
            CHECK(p_mid.b(r) == doctest::Approx(6.0).epsilon(1e-15));
            CHECK(p_mid.c(r) == doctest::Approx(7.5).epsilon(1e-15));
        }
        CHECK_THROWS_AS(scale_action_params(std::vector<double>(26, 0.0), cfg),
                        std::invalid_argument);
    }
}

TEST_CASE("environment reset") {
    GlucoseEnv env(make_config(ControlMode::StaticFuzzy));
    const Observation obs = env.reset(scenario_nominal(), 3);
    CHECK(obs.e_norm == 0.0);
    CHECK(obs.de_norm == 0.0);
    CHECK(glucose_mgdl(env.patient_state(), env.config().patient) ==
          doctest::Approx(90.0).epsilon(1e-12));

    SUBCASE("same seed reproduces the meal list") {
        GlucoseEnv env2(make_config(ControlMode::StaticFuzzy));
        const ScenarioSpec rnd = scenario_random(default_meal_windows(), 9);
        env.reset(rnd, 42);
        env2.reset(rnd, 42);
        REQUIRE(env.meals().size() == env2.meals().size());
        for (std::size_t i = 0; i < env.meals().size(); ++i) {
            CHECK(env.meals()[i].time_min == env2.meals()[i].time_min);
        }
    }
}

TEST_CASE("environment stepping") {
    SUBCASE("constant basal with no meals truncates at exactly 24 h") {
        GlucoseEnv env(make_config(ControlMode::Direct));
        env.reset(no_meals_scenario(), 1);
        const double basal = env.basal_mu_min();
        const double a = 2.0 * basal / env.config().u_max_mu_min - 1.0;
        int steps = 0;
        StepResult last;
        while (!env.done()) {
            last = env.step(std::vector<double>{a});
            ++steps;
            CHECK(std::abs(last.info.G_mgdl - 90.0) < 1.0);
        }
        CHECK(steps == 288);
        CHECK(last.truncated);
        CHECK(!last.terminated);
        CHECK(last.info.time_min == doctest::Approx(1440.0));

        // c_acc equals the rectangle-rule integral of the logged u
        CHECK(env.accumulators().c_acc ==
              doctest::Approx(basal * 1440.0).epsilon(1e-12));
    }

    SUBCASE("all-zero static consequents inject nothing and glucose climbs") {
        EnvConfig cfg = make_config(ControlMode::StaticFuzzy);
        GlucoseEnv env(cfg);
        env.reset(scenario_nominal(), 1);
        double prev_g = 90.0;
        bool terminated = false;
        int steps = 0;
        while (!env.done()) {
            const StepResult res = env.step(std::span<const double>{});
            CHECK(res.info.u_mu_min == 0.0);
            CHECK(res.info.G_mgdl >= prev_g - 1e-3);  // monotone rise, no insulin
            prev_g = res.info.G_mgdl;
            terminated = res.terminated;
            ++steps;
        }
        CHECK(terminated);  // open-loop equilibrium sits above the 300 bound
        CHECK(steps < 288);
    }

    SUBCASE("hyperglycemia forcing terminates at that control step") {
        GlucoseEnv env(make_config(ControlMode::StaticFuzzy));
        env.reset(no_meals_scenario(), 1);
        PatientState s = env.patient_state();
        s.Q1 = (301.0 / kMgdlPerMmolL) * env.config().patient.glucose_volume_l();
        s.S1 = s.S2 = s.I = s.x1 = s.x2 = s.x3 = 0.0;
        env.set_patient_state(s);
        const StepResult res = env.step(std::span<const double>{});
        CHECK(res.terminated);
        CHECK(!res.truncated);
        CHECK(res.info.G_mgdl > 300.0);
        CHECK_THROWS_AS(env.step(std::span<const double>{}), std::logic_error);
    }

    SUBCASE("hypoglycemia forcing terminates at that control step") {
        GlucoseEnv env(make_config(ControlMode::StaticFuzzy));
        env.reset(no_meals_scenario(), 1);
        // insulin-loaded state so glucose keeps falling through the bound
        PatientState s = basal_steady_state(env.config().patient, 30.0, 49.0);
        env.set_patient_state(s);
        const StepResult res = env.step(std::span<const double>{});
        CHECK(res.terminated);
        CHECK(res.info.G_mgdl < 50.0);
    }

    SUBCASE("action shape mismatches rejected") {
        GlucoseEnv direct(make_config(ControlMode::Direct));
        direct.reset(no_meals_scenario(), 1);
        CHECK_THROWS_AS(direct.step(std::vector<double>(27, 0.0)), std::invalid_argument);
        CHECK_THROWS_AS(direct.step(std::span<const double>{}), std::invalid_argument);

        GlucoseEnv adaptive(make_config(ControlMode::AdaptiveFuzzy));
        adaptive.reset(no_meals_scenario(), 1);
        CHECK_THROWS_AS(adaptive.step(std::vector<double>(1, 0.0)), std::invalid_argument);

        GlucoseEnv fixed(make_config(ControlMode::StaticFuzzy));
        fixed.reset(no_meals_scenario(), 1);
        CHECK_THROWS_AS(fixed.step(std::vector<double>(1, 0.0)), std::invalid_argument);
    }

    SUBCASE("stepping before reset is a contract violation") {
        GlucoseEnv env(make_config(ControlMode::Direct));
        CHECK_THROWS_AS(env.step(std::vector<double>{0.0}), std::logic_error);
    }

    SUBCASE("adaptive mode consumes 27 actions and records the parameters") {
        GlucoseEnv env(make_config(ControlMode::AdaptiveFuzzy));
        env.reset(scenario_nominal(), 1);
        const StepResult res = env.step(std::vector<double>(27, 0.0));
        REQUIRE(res.info.active_params.has_value());
        CHECK(res.info.active_params->c(4) == doctest::Approx(7.5).epsilon(1e-12));
        // at e = 0, de = 0 only rule 4 fires: u = c_4 = 7.5
        CHECK(res.info.u_mu_min == doctest::Approx(7.5).epsilon(1e-12));
    }

    SUBCASE("accumulators grow monotonically and reset on reset") {
        GlucoseEnv env(make_config(ControlMode::Direct));
        env.reset(scenario_nominal(), 1);
        double prev_i = -1.0, prev_c = -1.0;
        for (int k = 0; k < 20; ++k) {
            env.step(std::vector<double>{0.0});
            CHECK(env.accumulators().i_acc >= prev_i);
            CHECK(env.accumulators().c_acc > prev_c);
            prev_i = env.accumulators().i_acc;
            prev_c = env.accumulators().c_acc;
        }
        env.reset(scenario_nominal(), 1);
        CHECK(env.accumulators().i_acc == 0.0);
        CHECK(env.accumulators().c_acc == 0.0);
    }
}

TEST_CASE("config validation") {
    EnvConfig cfg;
    cfg.control_period_min = 7.0;  // 7 does not divide 1440
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = EnvConfig{};
    cfg.integrator_dt_min = 3.0;  // does not divide the 5 min control period
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = EnvConfig{};
    cfg.g_ref_mgdl = 200.0;  // violates ordering against safe_hi = 180
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = EnvConfig{};
    cfg.u_max_mu_min = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
