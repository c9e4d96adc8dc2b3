#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numeric>

#include "apsim/rng.hpp"
#include "apsim/td3.hpp"
#include "toy_env.hpp"

using namespace apsim;

namespace {

Mlp make_net(const std::vector<int>& sizes, OutputActivation act, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return Mlp::init(sizes, act, rng);
}

// Critic with constant output, independent of state and action.
Mlp constant_critic(int in_dim, double value) {
    std::mt19937_64 rng(0);
    Mlp net = Mlp::init({in_dim, 1}, OutputActivation::Linear, rng);
    std::fill(net.weights[0].begin(), net.weights[0].end(), 0.0);
    net.biases[0] = {value};
    return net;
}

// Exact piecewise-linear bowl Q(s, a) = -|a - peak| built from two ReLUs;
// its ascent direction points at `peak` everywhere.
Mlp bowl_critic(int obs_dim, double peak) {
    Mlp net;
    net.layer_sizes = {obs_dim + 1, 2, 1};
    net.output_activation = OutputActivation::Linear;
    std::vector<double> w0(static_cast<std::size_t>(obs_dim + 1) * 2, 0.0);
    w0[obs_dim] = 1.0;                  // h0 = relu(a - peak)
    w0[(obs_dim + 1) + obs_dim] = -1.0; // h1 = relu(peak - a)
    net.weights = {w0, {-1.0, -1.0}};
    net.biases = {{-peak, peak}, {0.0}};
    return net;
}

bool same_params(const Mlp& a, const Mlp& b) {
    return a.weights == b.weights && a.biases == b.biases;
}

Transition make_transition(std::mt19937_64& rng, int obs_dim, int act_dim) {
    Transition t;
    for (int i = 0; i < obs_dim; ++i) {
        t.obs.push_back(uniform_in(rng, -1.0, 1.0));
        t.next_obs.push_back(uniform_in(rng, -1.0, 1.0));
    }
    for (int i = 0; i < act_dim; ++i) {
        t.action.push_back(uniform_in(rng, -1.0, 1.0));
    }
    t.reward = uniform_in(rng, -1.0, 1.0);
    return t;
}

}  // namespace

TEST_CASE("replay buffer") {
    ReplayBuffer buf(4);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 6; ++i) {
        Transition t;
        t.obs = {static_cast<double>(i)};
        t.action = {0.0};
        t.next_obs = {0.0};
        buf.push(std::move(t));
    }
    CHECK(buf.size() == 4);
    // oldest two were overwritten
    bool found_old = false;
    for (std::size_t i = 0; i < buf.size(); ++i) {
        if (buf.at(i).obs[0] < 2.0) {
            found_old = true;
        }
    }
    CHECK(!found_old);

    const auto batch = buf.sample(10, rng);
    CHECK(batch.size() == 10);

    SUBCASE("invalid transitions rejected") {
        Transition bad;
        bad.obs = {0.0};
        bad.action = {1.5};
        bad.next_obs = {0.0};
        CHECK_THROWS_AS(buf.push(std::move(bad)), std::invalid_argument);
        Transition nan_reward;
        nan_reward.obs = {0.0};
        nan_reward.action = {0.0};
        nan_reward.next_obs = {0.0};
        nan_reward.reward = std::nan("");
        CHECK_THROWS_AS(buf.push(std::move(nan_reward)), std::invalid_argument);
    }
}

TEST_CASE("action selection") {
    const Mlp actor = make_net({2, 8, 1}, OutputActivation::Tanh, 50);
    const std::vector<double> obs{0.2, -0.4};

    SUBCASE("zero noise returns the deterministic policy") {
        std::mt19937_64 rng(1);
        const auto a = td3_select_action(actor, obs, 0.0, rng);
        CHECK(a == forward(actor, obs));
    }
    SUBCASE("all draws stay inside the action box") {
        std::mt19937_64 rng(2);
        for (int i = 0; i < 500; ++i) {
            for (double v : td3_select_action(actor, obs, 2.0, rng)) {
                CHECK(v >= -1.0);
                CHECK(v <= 1.0);
            }
        }
    }
    SUBCASE("fixed seed reproduces the sequence") {
        std::mt19937_64 r1(7), r2(7);
        for (int i = 0; i < 20; ++i) {
            CHECK(td3_select_action(actor, obs, 0.3, r1) ==
                  td3_select_action(actor, obs, 0.3, r2));
        }
    }
}

TEST_CASE("target computation") {
    Td3Config cfg;
    cfg.obs_dim = 2;
    cfg.action_dim = 1;
    cfg.sigma_target = 0.0;
    const Mlp actor_t = constant_critic(2, 0.0);  // any policy; zero action

    SUBCASE("hand-computed clipped double-Q value") {
        const Mlp c1 = constant_critic(3, 2.0);
        const Mlp c2 = constant_critic(3, 1.5);
        Transition t;
        t.obs = {0.0, 0.0};
        t.action = {0.0};
        t.next_obs = {0.1, 0.1};
        t.reward = 1.0;
        std::mt19937_64 rng(1);
        const auto y = td3_compute_target({t}, c1, c2, actor_t, cfg, rng);
        CHECK(y[0] == doctest::Approx(1.0 + 0.99 * 1.5).epsilon(1e-15));
    }
    SUBCASE("terminal transitions do not bootstrap") {
        const Mlp c1 = constant_critic(3, 100.0);
        const Mlp c2 = constant_critic(3, 100.0);
        Transition t;
        t.obs = {0.0, 0.0};
        t.action = {0.0};
        t.next_obs = {0.1, 0.1};
        t.reward = -3.0;
        t.done = true;
        std::mt19937_64 rng(1);
        const auto y = td3_compute_target({t}, c1, c2, actor_t, cfg, rng);
        CHECK(y[0] == -3.0);
    }
    SUBCASE("smoothing noise is clipped to c") {
        // Critic that reads back the perturbed action: Q = a'.
        Mlp readout = constant_critic(3, 0.0);
        readout.weights[0] = {0.0, 0.0, 1.0};
        Td3Config noisy = cfg;
        noisy.sigma_target = 10.0;  // essentially every draw clips
        noisy.noise_clip = 0.5;
        noisy.gamma = 1.0;
        Transition t;
        t.obs = {0.0, 0.0};
        t.action = {0.0};
        t.next_obs = {0.0, 0.0};
        t.reward = 0.0;
        std::mt19937_64 rng(5);
        bool hit_upper = false, hit_lower = false;
        for (int i = 0; i < 200; ++i) {
            const auto y = td3_compute_target({t}, readout, readout, actor_t, noisy, rng);
            CHECK(std::abs(y[0]) <= 0.5 + 1e-12);
            if (y[0] > 0.49) hit_upper = true;
            if (y[0] < -0.49) hit_lower = true;
        }
        CHECK(hit_upper);
        CHECK(hit_lower);
    }
    SUBCASE("conservative against each critic individually") {
        const Mlp c1 = make_net({3, 8, 1}, OutputActivation::Linear, 60);
        const Mlp c2 = make_net({3, 8, 1}, OutputActivation::Linear, 61);
        const Mlp pi = make_net({2, 8, 1}, OutputActivation::Tanh, 62);
        std::mt19937_64 data_rng(63);
        std::vector<Transition> batch;
        for (int i = 0; i < 64; ++i) {
            batch.push_back(make_transition(data_rng, 2, 1));
        }
        std::mt19937_64 rng(64);
        const auto y = td3_compute_target(batch, c1, c2, pi, cfg, rng);
        for (std::size_t k = 0; k < batch.size(); ++k) {
            std::vector<double> a_next = forward(pi, batch[k].next_obs);
            for (double& v : a_next) {
                v = std::clamp(v, -1.0, 1.0);
            }
            std::vector<double> sa = batch[k].next_obs;
            sa.insert(sa.end(), a_next.begin(), a_next.end());
            const double q1 = forward(c1, sa)[0];
            const double q2 = forward(c2, sa)[0];
            CHECK(y[k] <= batch[k].reward + cfg.gamma * q1 + 1e-12);
            CHECK(y[k] <= batch[k].reward + cfg.gamma * q2 + 1e-12);
        }
    }
}

TEST_CASE("critic regression") {
    Td3Config cfg;
    cfg.obs_dim = 2;
    cfg.action_dim = 1;

    SUBCASE("already-fitted critics take a zero step") {
        Mlp c1 = constant_critic(3, 2.5);
        Mlp c2 = constant_critic(3, 2.5);
        const Mlp before = c1;
        AdamState o1 = AdamState::for_net(c1), o2 = AdamState::for_net(c2);
        Transition t;
        t.obs = {0.3, 0.3};
        t.action = {0.1};
        t.next_obs = {0.0, 0.0};
        const auto [l1, l2] = td3_update_critics({t}, {2.5}, c1, c2, o1, o2, cfg);
        CHECK(l1 == 0.0);
        CHECK(l2 == 0.0);
        CHECK(same_params(c1, before));
    }
    SUBCASE("loss is the mean of squared residuals") {
        Mlp c1 = constant_critic(3, 1.0);
        Mlp c2 = constant_critic(3, 1.0);
        AdamState o1 = AdamState::for_net(c1), o2 = AdamState::for_net(c2);
        Transition t;
        t.obs = {0.0, 0.0};
        t.action = {0.0};
        t.next_obs = {0.0, 0.0};
        // residuals (1, -1) -> loss 1.0
        const auto [l1, l2] = td3_update_critics({t, t}, {0.0, 2.0}, c1, c2, o1, o2, cfg);
        CHECK(l1 == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(l2 == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("repeated updates fit a frozen batch") {
        Td3Config small = cfg;
        small.lr_critic = 3e-3;
        std::mt19937_64 rng(70);
        std::vector<Transition> batch;
        std::vector<double> y;
        for (int i = 0; i < 8; ++i) {
            batch.push_back(make_transition(rng, 2, 1));
            y.push_back(uniform_in(rng, -1.0, 1.0));
        }
        Mlp c1 = make_net({3, 32, 32, 1}, OutputActivation::Linear, 71);
        Mlp c2 = make_net({3, 32, 32, 1}, OutputActivation::Linear, 72);
        AdamState o1 = AdamState::for_net(c1), o2 = AdamState::for_net(c2);
        double l1 = 0.0, l2 = 0.0;
        for (int step = 0; step < 2000; ++step) {
            std::tie(l1, l2) = td3_update_critics(batch, y, c1, c2, o1, o2, small);
        }
        CHECK(l1 < 1e-3);
        CHECK(l2 < 1e-3);
    }
}

TEST_CASE("actor update") {
    Td3Config cfg;
    cfg.obs_dim = 1;
    cfg.action_dim = 1;
    cfg.lr_actor = 1e-2;

    SUBCASE("constant critic leaves the actor unchanged") {
        Mlp actor = make_net({1, 8, 1}, OutputActivation::Tanh, 80);
        const Mlp before = actor;
        AdamState opt = AdamState::for_net(actor);
        const Mlp critic = constant_critic(2, 3.0);
        Transition t;
        t.obs = {0.4};
        t.action = {0.0};
        t.next_obs = {0.0};
        td3_update_actor({t}, actor, critic, opt, cfg);
        CHECK(same_params(actor, before));
    }
    SUBCASE("ascends a bowl critic to its peak") {
        Mlp actor = make_net({1, 16, 1}, OutputActivation::Tanh, 81);
        AdamState opt = AdamState::for_net(actor);
        const Mlp critic = bowl_critic(1, 0.5);
        const Mlp critic_before = critic;
        std::mt19937_64 rng(82);
        std::vector<Transition> batch;
        for (int i = 0; i < 16; ++i) {
            batch.push_back(make_transition(rng, 1, 1));
        }
        for (int step = 0; step < 500; ++step) {
            td3_update_actor(batch, actor, critic, opt, cfg);
        }
        for (const Transition& t : batch) {
            CHECK(forward(actor, t.obs)[0] == doctest::Approx(0.5).epsilon(0.1));
        }
        CHECK(same_params(critic, critic_before));
    }
}

TEST_CASE("train step orchestration") {
    Td3Config cfg;
    cfg.obs_dim = 1;
    cfg.action_dim = 1;
    cfg.hidden = {4};
    cfg.batch_size = 4;
    cfg.warmup_steps = 4;
    cfg.policy_delay = 2;

    auto fill = [](Td3Agent& agent, int n) {
        std::mt19937_64 rng(90);
        for (int i = 0; i < n; ++i) {
            agent.record(make_transition(rng, 1, 1));
        }
    };

    SUBCASE("no updates below the warmup threshold") {
        Td3Agent agent(cfg, 1);
        fill(agent, 3);
        const TrainStepDiag diag = agent.train_step();
        CHECK(!diag.updated);
        CHECK(agent.critic_updates() == 0);
    }
    SUBCASE("actor cadence follows the policy delay") {
        Td3Agent agent(cfg, 1);
        fill(agent, 8);
        std::vector<bool> actor_steps;
        for (int k = 0; k < 101; ++k) {
            actor_steps.push_back(agent.train_step().actor_updated);
        }
        CHECK(agent.critic_updates() == 101);
        CHECK(agent.actor_updates() == 50);  // floor(101 / 2)
        CHECK(!actor_steps[0]);
        CHECK(actor_steps[1]);
        CHECK(!actor_steps[2]);
        CHECK(actor_steps[3]);
    }
    SUBCASE("tau = 1 makes targets equal the online networks") {
        Td3Config eager = cfg;
        eager.tau = 1.0;
        Td3Agent agent(eager, 1);
        fill(agent, 8);
        agent.train_step();
        agent.train_step();  // delayed step: actor + soft updates fire
        CHECK(same_params(agent.actor(), agent.actor_target()));
        CHECK(same_params(agent.critic1(), agent.critic1_target()));
        CHECK(same_params(agent.critic2(), agent.critic2_target()));
    }
}

TEST_CASE("agent checkpoint round trip") {
    Td3Config cfg;
    cfg.obs_dim = 1;
    cfg.action_dim = 1;
    cfg.hidden = {8};
    cfg.batch_size = 4;
    cfg.warmup_steps = 4;

    Td3Agent agent(cfg, 11);
    std::mt19937_64 rng(12);
    for (int i = 0; i < 16; ++i) {
        agent.record(make_transition(rng, 1, 1));
    }
    for (int i = 0; i < 10; ++i) {
        agent.train_step();
    }

    const nlohmann::json snap = agent.checkpoint();
    Td3Agent restored = Td3Agent::restore(snap);

    // identical continuation from the snapshot
    for (int i = 0; i < 10; ++i) {
        agent.train_step();
        restored.train_step();
    }
    CHECK(same_params(agent.actor(), restored.actor()));
    CHECK(same_params(agent.critic1(), restored.critic1()));
    CHECK(same_params(agent.critic2_target(), restored.critic2_target()));
    const std::vector<double> obs{0.2};
    CHECK(agent.act(obs) == restored.act(obs));
}

TEST_CASE("training is deterministic under a fixed seed") {
    const std::vector<double> r1 = apsim_test::run_toy_training(404, 12);
    const std::vector<double> r2 = apsim_test::run_toy_training(404, 12);
    CHECK(r1 == r2);
}

TEST_CASE("learning on the toy integrator improves returns") {
    const std::vector<double> returns = apsim_test::run_toy_training(7, 200);
    const double first = std::accumulate(returns.begin(), returns.begin() + 20, 0.0) / 20.0;
    const double last = std::accumulate(returns.end() - 20, returns.end(), 0.0) / 20.0;
    CHECK(last > first);
}
