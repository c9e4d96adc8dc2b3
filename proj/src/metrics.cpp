#include "apsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace apsim {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace

MetricsReport compute_metrics(const std::vector<TrajectoryRow>& rows,
                              const EnvConfig& cfg) {
    MetricsReport m;
    if (rows.empty()) {
        return m;
    }
    std::size_t in_range = 0;
    double min_g = rows.front().G_mgdl;
    double max_g = rows.front().G_mgdl;
    double insulin_mu = 0.0;
    double minutes = 0.0;
    double prev_time = 0.0;
    for (const TrajectoryRow& r : rows) {
        if (r.G_mgdl > cfg.safe_lo_mgdl && r.G_mgdl < cfg.safe_hi_mgdl) {
            ++in_range;
        }
        min_g = std::min(min_g, r.G_mgdl);
        max_g = std::max(max_g, r.G_mgdl);
        const double dt = r.time_min - prev_time;
        insulin_mu += r.u_mU_per_min * dt;
        minutes += dt;
        prev_time = r.time_min;
        m.episode_return += r.reward;
        if (r.terminated) {
            m.termination = "terminated";
        } else if (r.truncated) {
            m.termination = "truncated";
        }
    }
    m.time_in_range = static_cast<double>(in_range) / static_cast<double>(rows.size());
    m.min_G = min_g;
    m.max_G = max_g;
    m.undershoot_below_ref = std::max(0.0, cfg.g_ref_mgdl - min_g);
    m.overshoot_above_hi = std::max(0.0, max_g - cfg.safe_hi_mgdl);
    m.total_insulin_U = insulin_mu / 1000.0;
    m.mean_u_mU_min = minutes > 0.0 ? insulin_mu / minutes : 0.0;
    m.mean_u_U_h = m.mean_u_mU_min * 60.0 / 1000.0;
    return m;
}

std::string trajectory_csv_header() {
    return "time_min,G_mgdl,e,de,u_mU_per_min,reward,reward_base,penalty_i,penalty_c,"
           "meal_g,terminated,truncated";
}

void write_trajectory_csv(const std::filesystem::path& file,
                          const std::vector<TrajectoryRow>& rows) {
    std::ofstream out(file);
    if (!out) {
        throw std::runtime_error("cannot write trajectory: " + file.string());
    }
    out << trajectory_csv_header() << "\n";
    for (const TrajectoryRow& r : rows) {
        out << fmt(r.time_min) << ',' << fmt(r.G_mgdl) << ',' << fmt(r.e) << ','
            << fmt(r.de) << ',' << fmt(r.u_mU_per_min) << ',' << fmt(r.reward) << ','
            << fmt(r.reward_base) << ',' << fmt(r.penalty_i) << ',' << fmt(r.penalty_c)
            << ',' << fmt(r.meal_g) << ',' << (r.terminated ? 1 : 0) << ','
            << (r.truncated ? 1 : 0) << "\n";
    }
}

std::vector<TrajectoryRow> read_trajectory_csv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw std::runtime_error("cannot read trajectory: " + file.string());
    }
    std::string line;
    if (!std::getline(in, line) || line != trajectory_csv_header()) {
        throw std::runtime_error("unexpected trajectory header in " + file.string());
    }
    std::vector<TrajectoryRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream ss(line);
        TrajectoryRow r;
        char comma;
        int term = 0, trunc = 0;
        ss >> r.time_min >> comma >> r.G_mgdl >> comma >> r.e >> comma >> r.de >>
            comma >> r.u_mU_per_min >> comma >> r.reward >> comma >> r.reward_base >>
            comma >> r.penalty_i >> comma >> r.penalty_c >> comma >> r.meal_g >>
            comma >> term >> comma >> trunc;
        if (!ss) {
            throw std::runtime_error("malformed trajectory row in " + file.string());
        }
        r.terminated = term != 0;
        r.truncated = trunc != 0;
        rows.push_back(r);
    }
    return rows;
}

std::string metrics_to_text(const MetricsReport& m) {
    std::ostringstream out;
    out << "version 1\n";
    out << "time_in_range " << fmt(m.time_in_range) << "\n";
    out << "min_G_mgdl " << fmt(m.min_G) << "\n";
    out << "max_G_mgdl " << fmt(m.max_G) << "\n";
    out << "undershoot_below_ref_mgdl " << fmt(m.undershoot_below_ref) << "\n";
    out << "overshoot_above_180_mgdl " << fmt(m.overshoot_above_hi) << "\n";
    out << "total_insulin_U " << fmt(m.total_insulin_U) << "\n";
    out << "mean_u_mU_per_min " << fmt(m.mean_u_mU_min) << "\n";
    out << "mean_u_U_per_h " << fmt(m.mean_u_U_h) << "\n";
    out << "episode_return " << fmt(m.episode_return) << "\n";
    out << "termination " << m.termination << "\n";
    return out.str();
}

Policy static_fuzzy_policy() {
    return [](const Observation&) { return std::vector<double>{}; };
}

Policy actor_policy(const Mlp& actor) {
    return [&actor](const Observation& obs) {
        const std::array<double, 2> x{obs.e_norm, obs.de_norm};
        std::vector<double> a = forward(actor, x);
        for (double& v : a) {
            v = std::clamp(v, -1.0, 1.0);
        }
        return a;
    };
}

std::vector<TrajectoryRow> run_episode(GlucoseEnv& env, const ScenarioSpec& scenario,
                                       std::uint64_t seed, const Policy& policy) {
    std::vector<TrajectoryRow> rows;
    Observation obs = env.reset(scenario, seed);
    while (!env.done()) {
        const std::vector<double> action = policy(obs);
        const StepResult res = env.step(action);
        TrajectoryRow row;
        row.time_min = res.info.time_min;
        row.G_mgdl = res.info.G_mgdl;
        row.e = res.info.e_mgdl;
        row.de = res.info.de_mgdl_min;
        row.u_mU_per_min = res.info.u_mu_min;
        row.reward = res.reward;
        row.reward_base = res.info.reward_base;
        row.penalty_i = res.info.penalty_i;
        row.penalty_c = res.info.penalty_c;
        row.meal_g = res.info.meal_g;
        row.terminated = res.terminated;
        row.truncated = res.truncated;
        rows.push_back(row);
        obs = res.obs;
    }
    return rows;
}

}  // namespace apsim
