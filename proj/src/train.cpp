#include "apsim/train.hpp"

#include <fstream>
#include <stdexcept>

#include "apsim/rng.hpp"

namespace apsim {

std::vector<EpisodeStat> train_agent(
    GlucoseEnv& env, Td3Agent& agent, const TrainOptions& options,
    const std::function<void(const EpisodeStat&, const Td3Agent&)>& on_episode) {
    if (env.config().action_dim() != agent.config().action_dim) {
        throw std::invalid_argument("train_agent: env/agent action dimension mismatch");
    }

    std::vector<EpisodeStat> stats;
    const std::size_t warmup = std::max<std::size_t>(agent.config().warmup_steps,
                                                     agent.config().batch_size);
    for (int ep = options.start_episode; ep < options.episodes; ++ep) {
        Observation obs = env.reset(options.scenario, mix_seed(options.seed, ep));
        EpisodeStat stat;
        stat.episode = ep;
        while (!env.done()) {
            const std::array<double, 2> obs_vec{obs.e_norm, obs.de_norm};
            const std::vector<double> action = agent.buffer().size() < warmup
                                                   ? agent.act_random()
                                                   : agent.act(obs_vec);
            const StepResult res = env.step(action);

            Transition t;
            t.obs.assign(obs_vec.begin(), obs_vec.end());
            t.action = action;
            t.reward = res.reward;
            t.next_obs = {res.obs.e_norm, res.obs.de_norm};
            // Time truncation is not absorbing, so only safety terminations
            // mask the bootstrap.
            t.done = res.terminated;
            agent.record(std::move(t));
            agent.train_step();

            stat.episode_return += res.reward;
            stat.steps += 1;
            stat.end_cause = res.terminated ? "terminated" : (res.truncated ? "truncated" : "");
            obs = res.obs;
        }
        stats.push_back(stat);
        if (on_episode) {
            on_episode(stat, agent);
        }
    }
    return stats;
}

void write_learning_curve_csv(const std::string& file,
                              const std::vector<EpisodeStat>& stats) {
    std::ofstream out(file);
    if (!out) {
        throw std::runtime_error("cannot write learning curve: " + file);
    }
    out << "episode,return,steps,end_cause\n";
    char buf[40];
    for (const EpisodeStat& s : stats) {
        std::snprintf(buf, sizeof(buf), "%.10g", s.episode_return);
        out << s.episode << ',' << buf << ',' << s.steps << ',' << s.end_cause << "\n";
    }
}

}  // namespace apsim
