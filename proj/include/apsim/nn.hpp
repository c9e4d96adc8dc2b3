#pragma once

#include <random>
#include <span>
#include <vector>

#include <json.hpp>

namespace apsim {

enum class OutputActivation { Linear, Tanh };

// Dense feed-forward network with ReLU hidden layers. Weights of layer l are
// stored row-major as W[out][in] flattened to out*in doubles, so parameter
// index (o, i) lives at o * in + i.
struct Mlp {
    std::vector<int> layer_sizes;               // e.g. {2, 64, 64, 1}
    std::vector<std::vector<double>> weights;   // one flat block per layer
    std::vector<std::vector<double>> biases;
    OutputActivation output_activation = OutputActivation::Linear;

    // Uniform fan-in initialization: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    static Mlp init(std::vector<int> sizes, OutputActivation act, std::mt19937_64& rng);

    int input_size() const { return layer_sizes.front(); }
    int output_size() const { return layer_sizes.back(); }
    std::size_t num_layers() const { return weights.size(); }
    bool same_shape(const Mlp& other) const;
};

std::vector<double> forward(const Mlp& net, std::span<const double> x);

// Per-layer parameter gradients, shaped like the network.
struct Gradients {
    std::vector<std::vector<double>> dw;
    std::vector<std::vector<double>> db;

    static Gradients zeros_like(const Mlp& net);
    void accumulate(const Gradients& other);
    void scale(double factor);
    bool finite() const;
};

// Reverse-mode gradients of the scalar loss whose gradient at the network
// output is upstream_grad. When input_grad is non-null it receives dLoss/dx.
Gradients backward(const Mlp& net, std::span<const double> x,
                   std::span<const double> upstream_grad,
                   std::vector<double>* input_grad = nullptr);

struct AdamState {
    std::vector<std::vector<double>> m_w, v_w;
    std::vector<std::vector<double>> m_b, v_b;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_net(const Mlp& net);
};

// Bias-corrected Adam update in place. Rejects non-finite gradients.
void adam_step(Mlp& net, const Gradients& grads, AdamState& opt, double lr);

// target <- tau * online + (1 - tau) * target, elementwise.
void soft_update(Mlp& target, const Mlp& online, double tau);

// Versioned JSON checkpoint; round-trips parameters losslessly.
nlohmann::json mlp_to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);
nlohmann::json adam_to_json(const AdamState& opt);
AdamState adam_from_json(const nlohmann::json& j);

}  // namespace apsim
