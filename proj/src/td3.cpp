#include "apsim/td3.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "apsim/rng.hpp"

namespace apsim {

namespace {

std::vector<double> concat_state_action(std::span<const double> s,
                                        std::span<const double> a) {
    std::vector<double> x;
    x.reserve(s.size() + a.size());
    x.insert(x.end(), s.begin(), s.end());
    x.insert(x.end(), a.begin(), a.end());
    return x;
}

std::string rng_to_string(const std::mt19937_64& rng) {
    std::ostringstream oss;
    oss << rng;
    return oss.str();
}

std::mt19937_64 rng_from_string(const std::string& s) {
    std::mt19937_64 rng;
    std::istringstream iss(s);
    iss >> rng;
    if (!iss) {
        throw std::runtime_error("Td3Agent: malformed RNG state in checkpoint");
    }
    return rng;
}

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) {
        throw std::invalid_argument("ReplayBuffer: capacity must be positive");
    }
}

void ReplayBuffer::push(Transition t) {
    for (double a : t.action) {
        if (a < -1.0 || a > 1.0) {
            throw std::invalid_argument("ReplayBuffer: action outside [-1, 1]");
        }
    }
    if (!std::isfinite(t.reward)) {
        throw std::invalid_argument("ReplayBuffer: non-finite reward");
    }
    if (storage_.size() < capacity_) {
        storage_.push_back(std::move(t));
        next_ = storage_.size() % capacity_;
        full_ = storage_.size() == capacity_;
    } else {
        storage_[next_] = std::move(t);
        next_ = (next_ + 1) % capacity_;
        full_ = true;
    }
}

std::vector<Transition> ReplayBuffer::sample(std::size_t n, std::mt19937_64& rng) const {
    if (size() == 0) {
        throw std::logic_error("ReplayBuffer::sample: buffer is empty");
    }
    std::vector<Transition> batch;
    batch.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        batch.push_back(storage_[uniform_index(rng, size())]);
    }
    return batch;
}

nlohmann::json ReplayBuffer::to_json() const {
    nlohmann::json items = nlohmann::json::array();
    for (std::size_t i = 0; i < size(); ++i) {
        const Transition& t = storage_[i];
        items.push_back({{"o", t.obs},
                         {"a", t.action},
                         {"r", t.reward},
                         {"n", t.next_obs},
                         {"d", t.done}});
    }
    return nlohmann::json{{"capacity", capacity_},
                          {"next", next_},
                          {"full", full_},
                          {"items", std::move(items)}};
}

ReplayBuffer ReplayBuffer::from_json(const nlohmann::json& j) {
    ReplayBuffer buf(j.at("capacity").get<std::size_t>());
    for (const auto& item : j.at("items")) {
        Transition t;
        t.obs = item.at("o").get<std::vector<double>>();
        t.action = item.at("a").get<std::vector<double>>();
        t.reward = item.at("r").get<double>();
        t.next_obs = item.at("n").get<std::vector<double>>();
        t.done = item.at("d").get<bool>();
        buf.storage_.push_back(std::move(t));
    }
    buf.next_ = j.at("next").get<std::size_t>();
    buf.full_ = j.at("full").get<bool>();
    return buf;
}

void Td3Config::validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw std::invalid_argument("Td3Config: gamma must be in [0, 1]");
    }
    if (policy_delay < 1) {
        throw std::invalid_argument("Td3Config: policy_delay must be >= 1");
    }
    if (!(noise_clip > 0.0)) {
        throw std::invalid_argument("Td3Config: noise_clip must be positive");
    }
    if (sigma_explore < 0.0 || sigma_target < 0.0) {
        throw std::invalid_argument("Td3Config: noise stds must be non-negative");
    }
    if (batch_size < 1 || warmup_steps < 0 || obs_dim < 1 || action_dim < 1) {
        throw std::invalid_argument("Td3Config: invalid dimensions");
    }
    if (!(tau >= 0.0 && tau <= 1.0)) {
        throw std::invalid_argument("Td3Config: tau must be in [0, 1]");
    }
}

std::vector<double> td3_select_action(const Mlp& actor, std::span<const double> obs,
                                      double sigma, std::mt19937_64& rng) {
    std::vector<double> a = forward(actor, obs);
    for (double& v : a) {
        if (sigma > 0.0) {
            v += sigma * normal01(rng);
        }
        v = std::clamp(v, -1.0, 1.0);
    }
    return a;
}

std::vector<double> td3_compute_target(const std::vector<Transition>& batch,
                                       const Mlp& critic1_target,
                                       const Mlp& critic2_target,
                                       const Mlp& actor_target, const Td3Config& cfg,
                                       std::mt19937_64& rng) {
    std::vector<double> y;
    y.reserve(batch.size());
    for (const Transition& t : batch) {
        double boot = 0.0;
        if (!t.done) {
            std::vector<double> a_next = forward(actor_target, t.next_obs);
            for (double& v : a_next) {
                const double eps = std::clamp(cfg.sigma_target * normal01(rng),
                                              -cfg.noise_clip, cfg.noise_clip);
                v = std::clamp(v + eps, -1.0, 1.0);
            }
            const std::vector<double> sa = concat_state_action(t.next_obs, a_next);
            const double q1 = forward(critic1_target, sa)[0];
            const double q2 = forward(critic2_target, sa)[0];
            boot = cfg.gamma * std::min(q1, q2);
        }
        y.push_back(t.reward + boot);
    }
    return y;
}

std::pair<double, double> td3_update_critics(const std::vector<Transition>& batch,
                                             const std::vector<double>& y, Mlp& critic1,
                                             Mlp& critic2, AdamState& opt1,
                                             AdamState& opt2, const Td3Config& cfg) {
    if (batch.size() != y.size() || batch.empty()) {
        throw std::invalid_argument("td3_update_critics: batch/target size mismatch");
    }
    const double n = static_cast<double>(batch.size());

    auto regress = [&](Mlp& critic, AdamState& opt) {
        Gradients total = Gradients::zeros_like(critic);
        double loss = 0.0;
        for (std::size_t k = 0; k < batch.size(); ++k) {
            const std::vector<double> sa =
                concat_state_action(batch[k].obs, batch[k].action);
            const double q = forward(critic, sa)[0];
            const double resid = q - y[k];
            loss += resid * resid;
            // d(mean squared error)/dq = 2 * resid / N
            const std::array<double, 1> upstream{2.0 * resid / n};
            total.accumulate(backward(critic, sa, upstream));
        }
        loss /= n;
        if (!std::isfinite(loss)) {
            throw std::runtime_error("td3_update_critics: non-finite critic loss");
        }
        adam_step(critic, total, opt, cfg.lr_critic);
        return loss;
    };

    const double loss1 = regress(critic1, opt1);
    const double loss2 = regress(critic2, opt2);
    return {loss1, loss2};
}

double td3_update_actor(const std::vector<Transition>& batch, Mlp& actor,
                        const Mlp& critic1, AdamState& opt, const Td3Config& cfg) {
    if (batch.empty()) {
        throw std::invalid_argument("td3_update_actor: empty batch");
    }
    const double n = static_cast<double>(batch.size());
    const int obs_dim = actor.input_size();
    const int act_dim = actor.output_size();

    Gradients total = Gradients::zeros_like(actor);
    double loss = 0.0;
    for (const Transition& t : batch) {
        const std::vector<double> a = forward(actor, t.obs);
        const std::vector<double> sa = concat_state_action(t.obs, a);
        const double q = forward(critic1, sa)[0];
        loss -= q / n;

        // dQ/da, read from the critic's input gradient (action slice).
        const std::array<double, 1> one{1.0};
        std::vector<double> dq_dsa;
        backward(critic1, sa, one, &dq_dsa);

        std::vector<double> upstream(act_dim);
        for (int i = 0; i < act_dim; ++i) {
            // descent on -mean Q
            upstream[i] = -dq_dsa[obs_dim + i] / n;
        }
        total.accumulate(backward(actor, t.obs, upstream));
    }
    if (!std::isfinite(loss)) {
        throw std::runtime_error("td3_update_actor: non-finite actor loss");
    }
    adam_step(actor, total, opt, cfg.lr_actor);
    return loss;
}

Td3Agent::Td3Agent(Td3Config cfg) : cfg_(std::move(cfg)), buffer_(cfg_.buffer_capacity) {
    cfg_.validate();
}

Td3Agent::Td3Agent(Td3Config cfg, std::uint64_t seed) : Td3Agent(std::move(cfg)) {
    rng_.seed(seed);

    std::vector<int> actor_sizes{cfg_.obs_dim};
    actor_sizes.insert(actor_sizes.end(), cfg_.hidden.begin(), cfg_.hidden.end());
    actor_sizes.push_back(cfg_.action_dim);

    std::vector<int> critic_sizes{cfg_.obs_dim + cfg_.action_dim};
    critic_sizes.insert(critic_sizes.end(), cfg_.hidden.begin(), cfg_.hidden.end());
    critic_sizes.push_back(1);

    actor_ = Mlp::init(actor_sizes, OutputActivation::Tanh, rng_);
    critic1_ = Mlp::init(critic_sizes, OutputActivation::Linear, rng_);
    critic2_ = Mlp::init(critic_sizes, OutputActivation::Linear, rng_);
    actor_target_ = actor_;
    critic1_target_ = critic1_;
    critic2_target_ = critic2_;

    opt_actor_ = AdamState::for_net(actor_);
    opt_critic1_ = AdamState::for_net(critic1_);
    opt_critic2_ = AdamState::for_net(critic2_);
}

std::vector<double> Td3Agent::act(std::span<const double> obs) {
    return td3_select_action(actor_, obs, cfg_.sigma_explore, rng_);
}

std::vector<double> Td3Agent::act_greedy(std::span<const double> obs) const {
    return forward(actor_, obs);
}

std::vector<double> Td3Agent::act_random() {
    std::vector<double> a(cfg_.action_dim);
    for (double& v : a) {
        v = uniform_in(rng_, -1.0, 1.0);
    }
    return a;
}

TrainStepDiag Td3Agent::train_step() {
    TrainStepDiag diag;
    const std::size_t need = std::max<std::size_t>(cfg_.batch_size, cfg_.warmup_steps);
    if (buffer_.size() < need) {
        return diag;  // warming up
    }

    const std::vector<Transition> batch = buffer_.sample(cfg_.batch_size, rng_);
    const std::vector<double> y =
        td3_compute_target(batch, critic1_target_, critic2_target_, actor_target_, cfg_, rng_);
    std::tie(diag.critic1_loss, diag.critic2_loss) =
        td3_update_critics(batch, y, critic1_, critic2_, opt_critic1_, opt_critic2_, cfg_);
    diag.updated = true;
    critic_updates_ += 1;

    if (critic_updates_ % cfg_.policy_delay == 0) {
        diag.actor_loss = td3_update_actor(batch, actor_, critic1_, opt_actor_, cfg_);
        diag.actor_updated = true;
        actor_updates_ += 1;
        soft_update(actor_target_, actor_, cfg_.tau);
        soft_update(critic1_target_, critic1_, cfg_.tau);
        soft_update(critic2_target_, critic2_, cfg_.tau);
    }
    return diag;
}

nlohmann::json Td3Agent::checkpoint(bool include_buffer) const {
    nlohmann::json j{
        {"version", 1},
        {"config",
         {{"gamma", cfg_.gamma},
          {"tau", cfg_.tau},
          {"policy_delay", cfg_.policy_delay},
          {"sigma_explore", cfg_.sigma_explore},
          {"sigma_target", cfg_.sigma_target},
          {"noise_clip", cfg_.noise_clip},
          {"batch_size", cfg_.batch_size},
          {"lr_actor", cfg_.lr_actor},
          {"lr_critic", cfg_.lr_critic},
          {"warmup_steps", cfg_.warmup_steps},
          {"obs_dim", cfg_.obs_dim},
          {"action_dim", cfg_.action_dim},
          {"hidden", cfg_.hidden},
          {"buffer_capacity", cfg_.buffer_capacity}}},
        {"actor", mlp_to_json(actor_)},
        {"actor_target", mlp_to_json(actor_target_)},
        {"critic1", mlp_to_json(critic1_)},
        {"critic2", mlp_to_json(critic2_)},
        {"critic1_target", mlp_to_json(critic1_target_)},
        {"critic2_target", mlp_to_json(critic2_target_)},
        {"opt_actor", adam_to_json(opt_actor_)},
        {"opt_critic1", adam_to_json(opt_critic1_)},
        {"opt_critic2", adam_to_json(opt_critic2_)},
        {"rng", rng_to_string(rng_)},
        {"critic_updates", critic_updates_},
        {"actor_updates", actor_updates_},
    };
    if (include_buffer) {
        j["buffer"] = buffer_.to_json();
    }
    return j;
}

Td3Agent Td3Agent::restore(const nlohmann::json& j) {
    if (j.at("version").get<int>() != 1) {
        throw std::runtime_error("Td3Agent::restore: unsupported version");
    }
    const nlohmann::json& c = j.at("config");
    Td3Config cfg;
    cfg.gamma = c.at("gamma").get<double>();
    cfg.tau = c.at("tau").get<double>();
    cfg.policy_delay = c.at("policy_delay").get<int>();
    cfg.sigma_explore = c.at("sigma_explore").get<double>();
    cfg.sigma_target = c.at("sigma_target").get<double>();
    cfg.noise_clip = c.at("noise_clip").get<double>();
    cfg.batch_size = c.at("batch_size").get<int>();
    cfg.lr_actor = c.at("lr_actor").get<double>();
    cfg.lr_critic = c.at("lr_critic").get<double>();
    cfg.warmup_steps = c.at("warmup_steps").get<int>();
    cfg.obs_dim = c.at("obs_dim").get<int>();
    cfg.action_dim = c.at("action_dim").get<int>();
    cfg.hidden = c.at("hidden").get<std::vector<int>>();
    cfg.buffer_capacity = c.at("buffer_capacity").get<std::size_t>();

    Td3Agent agent(cfg);
    agent.actor_ = mlp_from_json(j.at("actor"));
    agent.actor_target_ = mlp_from_json(j.at("actor_target"));
    agent.critic1_ = mlp_from_json(j.at("critic1"));
    agent.critic2_ = mlp_from_json(j.at("critic2"));
    agent.critic1_target_ = mlp_from_json(j.at("critic1_target"));
    agent.critic2_target_ = mlp_from_json(j.at("critic2_target"));
    agent.opt_actor_ = adam_from_json(j.at("opt_actor"));
    agent.opt_critic1_ = adam_from_json(j.at("opt_critic1"));
    agent.opt_critic2_ = adam_from_json(j.at("opt_critic2"));
    agent.rng_ = rng_from_string(j.at("rng").get<std::string>());
    agent.critic_updates_ = j.at("critic_updates").get<long>();
    agent.actor_updates_ = j.at("actor_updates").get<long>();
    if (j.contains("buffer")) {
        agent.buffer_ = ReplayBuffer::from_json(j.at("buffer"));
    }
    return agent;
}

}  // namespace apsim
