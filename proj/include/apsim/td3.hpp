#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "apsim/nn.hpp"

namespace apsim {

// One experience tuple. done is true only for safety terminations; time
// truncation is stored with done = false so the target still bootstraps.
struct Transition {
    std::vector<double> obs;
    std::vector<double> action;   // components in [-1, 1]
    double reward = 0.0;
    std::vector<double> next_obs;
    bool done = false;
};

// Fixed-capacity ring with uniform sampling (with replacement).
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);
    std::size_t size() const { return full_ ? capacity_ : next_; }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t i) const { return storage_[i]; }

    std::vector<Transition> sample(std::size_t n, std::mt19937_64& rng) const;

    nlohmann::json to_json() const;
    static ReplayBuffer from_json(const nlohmann::json& j);

private:
    std::vector<Transition> storage_;
    std::size_t capacity_;
    std::size_t next_ = 0;
    bool full_ = false;
};

struct Td3Config {
    double gamma = 0.99;          // discount
    double tau = 0.005;           // soft-update rate
    int policy_delay = 2;         // critic updates per actor update
    double sigma_explore = 0.1;   // exploration noise std (action units)
    double sigma_target = 0.2;    // target smoothing noise std
    double noise_clip = 0.5;      // clip bound c for target noise
    int batch_size = 256;
    double lr_actor = 1e-3;
    double lr_critic = 1e-3;
    int warmup_steps = 1000;      // environment steps before updates begin
    int obs_dim = 2;
    int action_dim = 1;
    std::vector<int> hidden = {64, 64};
    std::size_t buffer_capacity = 1'000'000;

    void validate() const;
};

// Deterministic policy plus clipped Gaussian exploration noise; sigma = 0
// returns the raw policy output.
std::vector<double> td3_select_action(const Mlp& actor, std::span<const double> obs,
                                      double sigma, std::mt19937_64& rng);

// Clipped double-Q targets: y = r + gamma * (1 - done) * min_i Q'_i(s', a'),
// where a' is the smoothed target action.
std::vector<double> td3_compute_target(const std::vector<Transition>& batch,
                                       const Mlp& critic1_target,
                                       const Mlp& critic2_target,
                                       const Mlp& actor_target, const Td3Config& cfg,
                                       std::mt19937_64& rng);

// One Adam step per critic on the MSE against y; returns both loss values.
std::pair<double, double> td3_update_critics(const std::vector<Transition>& batch,
                                             const std::vector<double>& y, Mlp& critic1,
                                             Mlp& critic2, AdamState& opt1,
                                             AdamState& opt2, const Td3Config& cfg);

// Deterministic policy gradient step on -mean Q1(s, pi(s)); the critic is
// read-only, gradients flow through its action input. Returns the loss.
double td3_update_actor(const std::vector<Transition>& batch, Mlp& actor,
                        const Mlp& critic1, AdamState& opt, const Td3Config& cfg);

struct TrainStepDiag {
    bool updated = false;    // false while warming up
    double critic1_loss = 0.0;
    double critic2_loss = 0.0;
    bool actor_updated = false;
    double actor_loss = 0.0;
};

class Td3Agent {
public:
    Td3Agent(Td3Config cfg, std::uint64_t seed);

    // Policy + exploration noise drawn from the agent RNG.
    std::vector<double> act(std::span<const double> obs);
    // Deterministic policy, no noise.
    std::vector<double> act_greedy(std::span<const double> obs) const;
    // Uniform random action, used during warmup.
    std::vector<double> act_random();

    void record(Transition t) { buffer_.push(std::move(t)); }

    // Samples a batch, regresses both critics, and on every policy_delay-th
    // update also steps the actor and soft-updates the three targets.
    // No-op while the buffer is below max(batch_size, warmup_steps).
    TrainStepDiag train_step();

    const Td3Config& config() const { return cfg_; }
    const ReplayBuffer& buffer() const { return buffer_; }
    const Mlp& actor() const { return actor_; }
    const Mlp& actor_target() const { return actor_target_; }
    const Mlp& critic1() const { return critic1_; }
    const Mlp& critic2() const { return critic2_; }
    const Mlp& critic1_target() const { return critic1_target_; }
    const Mlp& critic2_target() const { return critic2_target_; }
    long critic_updates() const { return critic_updates_; }
    long actor_updates() const { return actor_updates_; }

    // Full state for resumable training: networks, optimizers, config, RNG
    // and replay buffer.
    nlohmann::json checkpoint(bool include_buffer = true) const;
    static Td3Agent restore(const nlohmann::json& j);

private:
    Td3Agent(Td3Config cfg);  // uninitialized networks; used by restore

    Td3Config cfg_;
    Mlp actor_, actor_target_;
    Mlp critic1_, critic2_, critic1_target_, critic2_target_;
    AdamState opt_actor_, opt_critic1_, opt_critic2_;
    ReplayBuffer buffer_;
    std::mt19937_64 rng_;
    long critic_updates_ = 0;
    long actor_updates_ = 0;
};

}  // namespace apsim
