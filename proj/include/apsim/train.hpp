#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "apsim/env.hpp"
#include "apsim/td3.hpp"

namespace apsim {

struct TrainOptions {
    int episodes = 150;
    std::uint64_t seed = 0;
    ScenarioSpec scenario;
    int start_episode = 0;  // > 0 when resuming
};

struct EpisodeStat {
    int episode = 0;
    double episode_return = 0.0;
    int steps = 0;
    std::string end_cause;  // "terminated" | "truncated"
};

// Closed-loop TD3 training: one environment step per train_step after warmup
// (warmup actions drawn uniformly from the action box). Single-threaded and
// reproducible under (seed, scenario). The callback, when set, fires after
// every episode with the running agent.
std::vector<EpisodeStat> train_agent(
    GlucoseEnv& env, Td3Agent& agent, const TrainOptions& options,
    const std::function<void(const EpisodeStat&, const Td3Agent&)>& on_episode = {});

void write_learning_curve_csv(const std::string& file,
                              const std::vector<EpisodeStat>& stats);

}  // namespace apsim
