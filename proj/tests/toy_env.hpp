#pragma once

// 1-D integrator-to-target toy problem shared by the TD3 tests and the
// acceptance suite: state = position error, action = velocity command,
// reward = -|error| after the move. Episodes are time-truncated only.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "apsim/rng.hpp"
#include "apsim/td3.hpp"

namespace apsim_test {

class ToyIntegratorEnv {
public:
    std::vector<double> reset(std::uint64_t seed) {
        rng_.seed(seed);
        x_ = apsim::uniform_in(rng_, -1.0, 1.0);
        t_ = 0;
        return {x_};
    }

    struct Out {
        std::vector<double> obs;
        double reward = 0.0;
        bool truncated = false;
    };

    Out step(double action) {
        x_ += 0.2 * std::clamp(action, -1.0, 1.0);
        t_ += 1;
        return {{x_}, -std::abs(x_), t_ >= horizon_};
    }

private:
    std::mt19937_64 rng_;
    double x_ = 0.0;
    int t_ = 0;
    int horizon_ = 50;
};

inline apsim::Td3Config toy_td3_config() {
    apsim::Td3Config cfg;
    cfg.obs_dim = 1;
    cfg.action_dim = 1;
    cfg.hidden = {32, 32};
    cfg.batch_size = 128;
    cfg.warmup_steps = 500;
    return cfg;
}

// Runs TD3 on the toy problem and returns per-episode returns.
inline std::vector<double> run_toy_training(std::uint64_t seed, int episodes,
                                            apsim::Td3Agent* agent_out = nullptr) {
    apsim::Td3Agent agent(toy_td3_config(), seed);
    ToyIntegratorEnv env;
    const std::size_t warmup = std::max<std::size_t>(agent.config().warmup_steps,
                                                     agent.config().batch_size);
    std::vector<double> returns;
    for (int ep = 0; ep < episodes; ++ep) {
        std::vector<double> obs = env.reset(apsim::mix_seed(seed, ep));
        double ep_return = 0.0;
        bool done = false;
        while (!done) {
            const std::vector<double> action = agent.buffer().size() < warmup
                                                   ? agent.act_random()
                                                   : agent.act(obs);
            const ToyIntegratorEnv::Out out = env.step(action[0]);
            agent.record({obs, action, out.reward, out.obs, /*done=*/false});
            agent.train_step();
            ep_return += out.reward;
            obs = out.obs;
            done = out.truncated;
        }
        returns.push_back(ep_return);
    }
    if (agent_out != nullptr) {
        *agent_out = std::move(agent);
    }
    return returns;
}

}  // namespace apsim_test
