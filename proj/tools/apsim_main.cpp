// apsim - closed-loop glucose regulation toolkit
//
// Subcommands:
//   simulate     run one deterministic closed-loop episode
//   train        train a TD3 policy (direct insulin or adaptive fuzzy)
//   tune-static  derivative-free search for static fuzzy consequents
//   evaluate     metrics over a randomized scenario suite
//   compare      side-by-side metrics for several controllers

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "apsim/config.hpp"
#include "apsim/env.hpp"
#include "apsim/metrics.hpp"
#include "apsim/rng.hpp"
#include "apsim/td3.hpp"
#include "apsim/train.hpp"
#include "apsim/tune.hpp"

namespace fs = std::filesystem;
using namespace apsim;

namespace {

struct CommonOpts {
    std::string config_file;
    std::string mode = "static-fuzzy";
    std::string scenario = "nominal";
    std::uint64_t seed = 0;
    int episodes = -1;  // -1: per-mode default
    std::string checkpoint;
    std::string fuzzy_params;
    std::string out_dir;

    bool mode_set = false;
    bool scenario_set = false;
    bool seed_set = false;
    bool episodes_set = false;
    bool checkpoint_set = false;
    bool fuzzy_params_set = false;

    KvConfig file;  // parsed --config contents (empty when absent)
};

void add_common_flags(CLI::App* cmd, CommonOpts& o, bool with_episodes) {
    cmd->add_option("--config", o.config_file, "key-value config file with overrides")
        ->envname("APSIM_CONFIG");
    cmd->add_option("--mode", o.mode, "direct | adaptive-fuzzy | static-fuzzy")
        ->envname("APSIM_MODE");
    cmd->add_option("--scenario", o.scenario, "scenario name (nominal|random|extreme) or file path")
        ->envname("APSIM_SCENARIO");
    cmd->add_option("--seed", o.seed, "master seed (all randomness derives from it)")
        ->envname("APSIM_SEED");
    if (with_episodes) {
        cmd->add_option("--episodes", o.episodes, "number of training episodes")
            ->envname("APSIM_EPISODES");
    }
    cmd->add_option("--checkpoint", o.checkpoint, "agent checkpoint path")
        ->envname("APSIM_CHECKPOINT");
    cmd->add_option("--fuzzy-params", o.fuzzy_params, "TS consequent parameter file")
        ->envname("APSIM_FUZZY_PARAMS");
    cmd->add_option("--out", o.out_dir, "output directory")
        ->envname("APSIM_OUT")
        ->required();
}

// flag > config file > built-in default
void resolve_common(CLI::App* cmd, CommonOpts& o) {
    if (!o.config_file.empty()) {
        o.file = KvConfig::parse_file(o.config_file);
    }
    o.mode_set = cmd->count("--mode") > 0;
    o.scenario_set = cmd->count("--scenario") > 0;
    o.seed_set = cmd->count("--seed") > 0;
    o.episodes_set = cmd->get_option_no_throw("--episodes") != nullptr &&
                     cmd->count("--episodes") > 0;
    o.checkpoint_set = cmd->count("--checkpoint") > 0;
    o.fuzzy_params_set = cmd->count("--fuzzy-params") > 0;

    if (!o.mode_set) o.mode = o.file.get_string("mode", o.mode);
    if (!o.scenario_set) o.scenario = o.file.get_string("scenario", o.scenario);
    if (!o.seed_set) o.seed = o.file.get_u64("seed", o.seed);
    if (!o.episodes_set) o.episodes = o.file.get_int("episodes", o.episodes);
    if (!o.checkpoint_set) o.checkpoint = o.file.get_string("checkpoint", o.checkpoint);
    if (!o.fuzzy_params_set) o.fuzzy_params = o.file.get_string("fuzzy_params", o.fuzzy_params);
}

ScenarioSpec resolve_scenario(const std::string& ref, std::uint64_t seed) {
    if (ref == "nominal") return scenario_nominal();
    if (ref == "extreme") return scenario_extreme();
    if (ref == "random") return scenario_random(default_meal_windows(), seed);
    return load_scenario(ref);
}

EnvConfig build_env_config(const CommonOpts& o) {
    EnvConfig env;
    env.mode = control_mode_from_string(o.mode);
    if (const auto pf = o.file.get("patient_file")) {
        env.patient = patient_params_from_config(KvConfig::parse_file(*pf));
    }
    apply_env_overrides(o.file, env);
    if (env.mode == ControlMode::StaticFuzzy) {
        if (o.fuzzy_params.empty()) {
            throw std::runtime_error("static-fuzzy mode requires --fuzzy-params");
        }
        env.static_params = TsParams::load(o.fuzzy_params);
    }
    env.validate();
    return env;
}

Td3Config build_td3_config(const CommonOpts& o, const EnvConfig& env) {
    Td3Config td3;
    td3.obs_dim = 2;
    td3.action_dim = env.action_dim();
    td3.gamma = o.file.get_double("td3.gamma", td3.gamma);
    td3.tau = o.file.get_double("td3.tau", td3.tau);
    td3.policy_delay = o.file.get_int("td3.policy_delay", td3.policy_delay);
    td3.sigma_explore = o.file.get_double("td3.sigma_explore", td3.sigma_explore);
    td3.sigma_target = o.file.get_double("td3.sigma_target", td3.sigma_target);
    td3.noise_clip = o.file.get_double("td3.noise_clip", td3.noise_clip);
    td3.batch_size = o.file.get_int("td3.batch_size", td3.batch_size);
    td3.lr_actor = o.file.get_double("td3.lr_actor", td3.lr_actor);
    td3.lr_critic = o.file.get_double("td3.lr_critic", td3.lr_critic);
    td3.warmup_steps = o.file.get_int("td3.warmup_steps", td3.warmup_steps);
    td3.buffer_capacity = o.file.get_u64("td3.buffer_capacity", td3.buffer_capacity);
    const int hidden = o.file.get_int("td3.hidden", 64);
    const int depth = o.file.get_int("td3.depth", 2);
    td3.hidden.assign(depth, hidden);
    td3.validate();
    return td3;
}

KvConfig effective_config(const CommonOpts& o, const EnvConfig& env,
                          const Td3Config* td3 = nullptr) {
    KvConfig cfg;
    cfg.set("mode", to_string(env.mode));
    cfg.set("scenario", o.scenario);
    cfg.set("seed", std::to_string(o.seed));
    if (o.episodes >= 0) {
        cfg.set("episodes", std::to_string(o.episodes));
    }
    if (!o.checkpoint.empty()) cfg.set("checkpoint", o.checkpoint);
    if (!o.fuzzy_params.empty()) cfg.set("fuzzy_params", o.fuzzy_params);
    cfg.set_double("env.g_ref", env.g_ref_mgdl);
    cfg.set_double("env.safe_lo", env.safe_lo_mgdl);
    cfg.set_double("env.safe_hi", env.safe_hi_mgdl);
    cfg.set_double("env.term_lo", env.term_lo_mgdl);
    cfg.set_double("env.term_hi", env.term_hi_mgdl);
    cfg.set_double("env.episode_minutes", env.episode_minutes);
    cfg.set_double("env.control_period", env.control_period_min);
    cfg.set_double("env.integrator_dt", env.integrator_dt_min);
    cfg.set_double("env.u_max", env.u_max_mu_min);
    cfg.set_double("env.e_scale", env.e_scale_mgdl);
    cfg.set_double("env.de_scale", env.de_scale_mgdl_min);
    cfg.set_double("env.a_lo", env.a_range.lo);
    cfg.set_double("env.a_hi", env.a_range.hi);
    cfg.set_double("env.b_lo", env.b_range.lo);
    cfg.set_double("env.b_hi", env.b_range.hi);
    cfg.set_double("env.c_lo", env.c_range.lo);
    cfg.set_double("env.c_hi", env.c_range.hi);
    cfg.set("env.printed_close_branch", env.printed_close_branch ? "true" : "false");
    cfg.set_double("env.basal_tol", env.basal_tol_mgdl);
    cfg.set("env.tnorm", env.fis.tnorm == TNorm::Product ? "product" : "min");
    cfg.set_double("env.e_min", env.fis.e_min);
    cfg.set_double("env.e_max", env.fis.e_max);
    cfg.set_double("env.de_min", env.fis.de_min);
    cfg.set_double("env.de_max", env.fis.de_max);
    for (int i = 0; i < 3; ++i) {
        cfg.set("env.e_mf" + std::to_string(i), mf_to_string(env.fis.e_mfs[i]));
        cfg.set("env.de_mf" + std::to_string(i), mf_to_string(env.fis.de_mfs[i]));
    }
    const KvConfig patient_cfg = patient_params_to_config(env.patient);
    for (const auto& [key, value] : patient_cfg.entries()) {
        cfg.set("patient." + key, value);
    }
    if (td3 != nullptr) {
        cfg.set_double("td3.gamma", td3->gamma);
        cfg.set_double("td3.tau", td3->tau);
        cfg.set("td3.policy_delay", std::to_string(td3->policy_delay));
        cfg.set_double("td3.sigma_explore", td3->sigma_explore);
        cfg.set_double("td3.sigma_target", td3->sigma_target);
        cfg.set_double("td3.noise_clip", td3->noise_clip);
        cfg.set("td3.batch_size", std::to_string(td3->batch_size));
        cfg.set_double("td3.lr_actor", td3->lr_actor);
        cfg.set_double("td3.lr_critic", td3->lr_critic);
        cfg.set("td3.warmup_steps", std::to_string(td3->warmup_steps));
        cfg.set("td3.buffer_capacity", std::to_string(td3->buffer_capacity));
        cfg.set("td3.hidden", std::to_string(td3->hidden.empty() ? 0 : td3->hidden[0]));
        cfg.set("td3.depth", std::to_string(td3->hidden.size()));
    }
    return cfg;
}

fs::path prepare_out_dir(const std::string& dir) {
    const fs::path out(dir);
    fs::create_directories(out);
    return out;
}

nlohmann::json load_json(const std::string& file) {
    std::ifstream in(file);
    if (!in) {
        throw std::runtime_error("cannot open checkpoint: " + file);
    }
    nlohmann::json j;
    in >> j;
    return j;
}

void save_json(const fs::path& file, const nlohmann::json& j) {
    std::ofstream out(file);
    if (!out) {
        throw std::runtime_error("cannot write: " + file.string());
    }
    out << j.dump() << "\n";
}

// Loads the actor from an agent checkpoint for deterministic rollout.
Mlp load_actor(const std::string& checkpoint_file, int expected_action_dim) {
    const nlohmann::json j = load_json(checkpoint_file);
    const nlohmann::json& agent = j.contains("agent") ? j.at("agent") : j;
    Mlp actor = mlp_from_json(agent.at("actor"));
    if (actor.output_size() != expected_action_dim) {
        throw std::runtime_error("checkpoint action dimension (" +
                                 std::to_string(actor.output_size()) +
                                 ") does not match the requested mode");
    }
    return actor;
}

struct Controller {
    std::string label;
    EnvConfig env;
    std::optional<Mlp> actor;  // empty for static fuzzy

    Policy policy() const {
        if (env.mode == ControlMode::StaticFuzzy) {
            return static_fuzzy_policy();
        }
        return actor_policy(*actor);
    }
};

Controller build_controller(const CommonOpts& o, const std::string& label) {
    Controller c;
    c.label = label;
    c.env = build_env_config(o);
    if (c.env.mode != ControlMode::StaticFuzzy) {
        if (o.checkpoint.empty()) {
            throw std::runtime_error("mode " + to_string(c.env.mode) +
                                     " requires --checkpoint");
        }
        c.actor = load_actor(o.checkpoint, c.env.action_dim());
    }
    return c;
}

std::vector<ScenarioSpec> evaluation_suite(std::uint64_t seed, int random_cases) {
    std::vector<ScenarioSpec> suite;
    suite.push_back(scenario_nominal());
    for (int i = 0; i < random_cases; ++i) {
        ScenarioSpec s = scenario_random(default_meal_windows(), mix_seed(seed, 100 + i));
        s.name = "case" + std::to_string(i + 1);
        suite.push_back(s);
    }
    suite.push_back(scenario_extreme());
    return suite;
}

std::string metrics_csv_header() {
    return "scenario,seed,time_in_range,min_G,max_G,undershoot_below_ref,"
           "overshoot_above_180,total_insulin_U,mean_u_mU_min,mean_u_U_h,"
           "episode_return,termination";
}

std::string metrics_csv_row(const std::string& scenario, std::uint64_t seed,
                            const MetricsReport& m) {
    char buf[320];
    std::snprintf(buf, sizeof(buf), "%s,%llu,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%s",
                  scenario.c_str(), static_cast<unsigned long long>(seed), m.time_in_range,
                  m.min_G, m.max_G, m.undershoot_below_ref, m.overshoot_above_hi,
                  m.total_insulin_U, m.mean_u_mU_min, m.mean_u_U_h, m.episode_return,
                  m.termination.c_str());
    return buf;
}

int cmd_simulate(CLI::App* cmd, CommonOpts& o) {
    resolve_common(cmd, o);
    const Controller ctl = build_controller(o, "controller");
    const ScenarioSpec scenario = resolve_scenario(o.scenario, o.seed);
    const fs::path out = prepare_out_dir(o.out_dir);

    GlucoseEnv env(ctl.env);
    const std::vector<TrajectoryRow> rows = run_episode(env, scenario, o.seed, ctl.policy());
    const MetricsReport metrics = compute_metrics(rows, ctl.env);

    write_trajectory_csv(out / "trajectory.csv", rows);
    std::ofstream(out / "metrics.txt") << metrics_to_text(metrics);
    effective_config(o, ctl.env).save(out / "effective_config.txt", "apsim simulate");
    std::cout << metrics_to_text(metrics);
    return 0;
}

int cmd_train(CLI::App* cmd, CommonOpts& o) {
    resolve_common(cmd, o);
    if (!o.mode_set && !o.file.has("mode")) {
        o.mode = "direct";
    }
    EnvConfig env_cfg;
    env_cfg.mode = control_mode_from_string(o.mode);
    if (env_cfg.mode == ControlMode::StaticFuzzy) {
        throw std::runtime_error("train requires --mode direct or adaptive-fuzzy");
    }
    if (const auto pf = o.file.get("patient_file")) {
        env_cfg.patient = patient_params_from_config(KvConfig::parse_file(*pf));
    }
    apply_env_overrides(o.file, env_cfg);
    env_cfg.validate();
    const Td3Config td3 = build_td3_config(o, env_cfg);
    if (o.episodes < 0) {
        o.episodes = env_cfg.mode == ControlMode::Direct ? 150 : 300;
    }
    const int checkpoint_every = o.file.get_int("train.checkpoint_every", 50);
    const fs::path out = prepare_out_dir(o.out_dir);

    TrainOptions opts;
    opts.episodes = o.episodes;
    opts.seed = o.seed;
    opts.scenario = resolve_scenario(o.scenario, o.seed);

    std::optional<Td3Agent> agent;
    if (!o.checkpoint.empty()) {
        const nlohmann::json j = load_json(o.checkpoint);
        agent.emplace(Td3Agent::restore(j.at("agent")));
        opts.start_episode = j.at("next_episode").get<int>();
        std::cout << "resuming from episode " << opts.start_episode << "\n";
    } else {
        agent.emplace(td3, o.seed);
    }

    GlucoseEnv env(env_cfg);
    effective_config(o, env_cfg, &td3).save(out / "effective_config.txt", "apsim train");

    auto snapshot = [&](int next_episode) {
        return nlohmann::json{{"version", 1},
                              {"agent", agent->checkpoint(true)},
                              {"next_episode", next_episode}};
    };

    nlohmann::json last_good = snapshot(opts.start_episode);
    std::vector<EpisodeStat> stats;
    try {
        stats = train_agent(env, *agent, opts,
                            [&](const EpisodeStat& stat, const Td3Agent&) {
                                if ((stat.episode + 1) % checkpoint_every == 0) {
                                    last_good = snapshot(stat.episode + 1);
                                    save_json(out / ("checkpoint_ep" +
                                                     std::to_string(stat.episode + 1) +
                                                     ".json"),
                                              last_good);
                                }
                            });
    } catch (const std::exception& e) {
        save_json(out / "checkpoint_lastgood.json", last_good);
        throw std::runtime_error(std::string("training aborted (") + e.what() +
                                 "); last good checkpoint retained");
    }

    save_json(out / "checkpoint.json", snapshot(opts.episodes));
    write_learning_curve_csv((out / "learning_curve.csv").string(), stats);

    double first = 0.0, last = 0.0;
    const std::size_t tail = std::max<std::size_t>(1, stats.size() / 10);
    for (std::size_t i = 0; i < tail; ++i) {
        first += stats[i].episode_return / static_cast<double>(tail);
        last += stats[stats.size() - 1 - i].episode_return / static_cast<double>(tail);
    }
    std::cout << "episodes " << stats.size() << "\nmean_return_first_decile " << first
              << "\nmean_return_last_decile " << last << "\n";
    return 0;
}

int cmd_tune_static(CLI::App* cmd, CommonOpts& o, int iters_flag, int cases_flag) {
    resolve_common(cmd, o);
    EnvConfig env_cfg;
    env_cfg.mode = ControlMode::StaticFuzzy;
    if (const auto pf = o.file.get("patient_file")) {
        env_cfg.patient = patient_params_from_config(KvConfig::parse_file(*pf));
    }
    apply_env_overrides(o.file, env_cfg);
    env_cfg.validate();
    const fs::path out = prepare_out_dir(o.out_dir);

    TuneOptions tune;
    tune.seed = o.seed;
    tune.random_iters = iters_flag > 0 ? iters_flag : o.file.get_int("tune.iters", 400);
    tune.refine_passes = o.file.get_int("tune.passes", 3);
    const int random_cases =
        cases_flag > 0 ? cases_flag : o.file.get_int("tune.random_cases", 2);
    tune.scenarios.push_back(scenario_nominal());
    tune.scenarios.push_back(scenario_extreme());
    for (int i = 0; i < random_cases; ++i) {
        ScenarioSpec s = scenario_random(default_meal_windows(), mix_seed(o.seed, 200 + i));
        s.name = "tune_case" + std::to_string(i + 1);
        s.seed = mix_seed(o.seed, 300 + i);
        tune.scenarios.push_back(s);
    }

    const TuneResult result = tune_static(env_cfg, tune);
    result.best.save(out / "ts_params.txt");
    effective_config(o, env_cfg).save(out / "effective_config.txt", "apsim tune-static");

    std::ofstream report(out / "tune_report.txt");
    report << "version 1\nbest_score " << result.best_score << "\nevaluations "
           << result.evaluations << "\nscenarios " << tune.scenarios.size() << "\n";
    std::cout << "best_score " << result.best_score << "\nevaluations "
              << result.evaluations << "\nparams " << (out / "ts_params.txt").string()
              << "\n";
    return 0;
}

int cmd_evaluate(CLI::App* cmd, CommonOpts& o, int cases_flag) {
    resolve_common(cmd, o);
    const Controller ctl = build_controller(o, "controller");
    const int random_cases = cases_flag > 0 ? cases_flag : o.file.get_int("eval.random_cases", 4);
    const std::vector<ScenarioSpec> suite = evaluation_suite(o.seed, random_cases);
    const fs::path out = prepare_out_dir(o.out_dir);

    std::ofstream csv(out / "report.csv");
    csv << metrics_csv_header() << "\n";
    std::ofstream text(out / "report.txt");
    GlucoseEnv env(ctl.env);
    for (std::size_t idx = 0; idx < suite.size(); ++idx) {
        const ScenarioSpec& scenario = suite[idx];
        const std::uint64_t ep_seed = mix_seed(o.seed, 1000 + idx);
        const std::vector<TrajectoryRow> rows =
            run_episode(env, scenario, ep_seed, ctl.policy());
        const MetricsReport m = compute_metrics(rows, ctl.env);
        write_trajectory_csv(out / ("traj_" + scenario.name + ".csv"), rows);
        csv << metrics_csv_row(scenario.name, ep_seed, m) << "\n";
        text << "[" << scenario.name << "]\n" << metrics_to_text(m) << "\n";
        std::cout << scenario.name << ": tir=" << m.time_in_range
                  << " return=" << m.episode_return << " end=" << m.termination << "\n";
    }
    effective_config(o, ctl.env).save(out / "effective_config.txt", "apsim evaluate");
    return 0;
}

int cmd_compare(CLI::App*, const std::vector<std::string>& controller_files,
                const std::string& out_dir, std::uint64_t seed, int random_cases) {
    if (controller_files.size() < 2) {
        throw std::runtime_error("compare needs at least two --config controller files");
    }
    std::vector<Controller> controllers;
    for (const std::string& file : controller_files) {
        KvConfig kv = KvConfig::parse_file(file);
        if (kv.has("scenario") || kv.has("seed")) {
            throw std::runtime_error(
                "controller config " + file +
                " must not set scenario/seed; the compare grid is shared");
        }
        CommonOpts o;
        o.file = kv;
        o.mode = kv.get_string("mode", "static-fuzzy");
        o.checkpoint = kv.get_string("checkpoint", "");
        o.fuzzy_params = kv.get_string("fuzzy_params", "");
        controllers.push_back(
            build_controller(o, kv.get_string("label", fs::path(file).stem().string())));
    }

    const std::vector<ScenarioSpec> suite = evaluation_suite(seed, random_cases);
    const fs::path out = prepare_out_dir(out_dir);

    std::ofstream csv(out / "compare.csv");
    csv << "controller," << metrics_csv_header() << ",delta_time_in_range,delta_return\n";
    std::ofstream combined(out / "trajectories.csv");
    combined << "controller,scenario,time_min,G_mgdl,u_mU_per_min,reward\n";
    std::ofstream text(out / "compare.txt");

    for (std::size_t idx = 0; idx < suite.size(); ++idx) {
        const ScenarioSpec& scenario = suite[idx];
        const std::uint64_t ep_seed = mix_seed(seed, 1000 + idx);
        std::optional<MetricsReport> reference;
        for (const Controller& ctl : controllers) {
            GlucoseEnv env(ctl.env);
            const std::vector<TrajectoryRow> rows =
                run_episode(env, scenario, ep_seed, ctl.policy());
            const MetricsReport m = compute_metrics(rows, ctl.env);
            if (!reference) {
                reference = m;
            }
            char deltas[80];
            std::snprintf(deltas, sizeof(deltas), "%.10g,%.10g",
                          m.time_in_range - reference->time_in_range,
                          m.episode_return - reference->episode_return);
            csv << ctl.label << ',' << metrics_csv_row(scenario.name, ep_seed, m) << ','
                << deltas << "\n";
            text << "[" << scenario.name << " / " << ctl.label << "]\n"
                 << metrics_to_text(m) << "\n";
            for (const TrajectoryRow& r : rows) {
                char buf[256];
                std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g,%.10g", r.time_min,
                              r.G_mgdl, r.u_mU_per_min, r.reward);
                combined << ctl.label << ',' << scenario.name << ',' << buf << "\n";
            }
            std::cout << scenario.name << " / " << ctl.label << ": tir=" << m.time_in_range
                      << " undershoot=" << m.undershoot_below_ref
                      << " overshoot=" << m.overshoot_above_hi << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"closed-loop glucose regulation toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "apsim 1.0.0");

    CommonOpts sim_o, train_o, tune_o, eval_o;
    int tune_iters = 0, tune_cases = 0, eval_cases = 0;

    CLI::App* sim = app.add_subcommand("simulate", "run one deterministic episode");
    add_common_flags(sim, sim_o, false);

    CLI::App* train = app.add_subcommand("train", "train a TD3 policy");
    add_common_flags(train, train_o, true);

    CLI::App* tune = app.add_subcommand("tune-static", "search static fuzzy consequents");
    add_common_flags(tune, tune_o, false);
    tune->add_option("--iters", tune_iters, "random-search iterations");
    tune->add_option("--cases", tune_cases, "random scenarios in the tuning set");

    CLI::App* eval = app.add_subcommand("evaluate", "metrics over the scenario suite");
    add_common_flags(eval, eval_o, false);
    eval->add_option("--cases", eval_cases, "number of randomized cases");

    CLI::App* cmp = app.add_subcommand("compare", "side-by-side controller comparison");
    std::vector<std::string> cmp_configs;
    std::string cmp_out;
    std::uint64_t cmp_seed = 0;
    int cmp_cases = 4;
    cmp->add_option("--config", cmp_configs, "controller config file (repeat >= 2)")
        ->required();
    cmp->add_option("--out", cmp_out, "output directory")->required()->envname("APSIM_OUT");
    cmp->add_option("--seed", cmp_seed, "master seed")->envname("APSIM_SEED");
    cmp->add_option("--cases", cmp_cases, "number of randomized cases");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(sim, sim_o);
        if (train->parsed()) return cmd_train(train, train_o);
        if (tune->parsed()) return cmd_tune_static(tune, tune_o, tune_iters, tune_cases);
        if (eval->parsed()) return cmd_evaluate(eval, eval_o, eval_cases);
        if (cmp->parsed()) return cmd_compare(cmp, cmp_configs, cmp_out, cmp_seed, cmp_cases);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
