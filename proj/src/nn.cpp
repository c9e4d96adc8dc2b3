#include "apsim/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "apsim/rng.hpp"

namespace apsim {

namespace {

void check_input(const Mlp& net, std::span<const double> x, const char* who) {
    if (static_cast<int>(x.size()) != net.input_size()) {
        throw std::invalid_argument(std::string(who) + ": input size mismatch");
    }
}

// Forward pass keeping post-activation values of every layer (index 0 is the
// input itself); needed by backward.
std::vector<std::vector<double>> forward_trace(const Mlp& net, std::span<const double> x) {
    std::vector<std::vector<double>> acts;
    acts.reserve(net.num_layers() + 1);
    acts.emplace_back(x.begin(), x.end());

    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        const int in = net.layer_sizes[l];
        const int out = net.layer_sizes[l + 1];
        const std::vector<double>& w = net.weights[l];
        const std::vector<double>& b = net.biases[l];
        const std::vector<double>& prev = acts.back();

        std::vector<double> z(out);
        for (int o = 0; o < out; ++o) {
            double acc = b[o];
            const double* row = w.data() + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) {
                acc += row[i] * prev[i];
            }
            z[o] = acc;
        }
        const bool last = l + 1 == net.num_layers();
        if (!last) {
            for (double& v : z) {
                v = std::max(0.0, v);  // ReLU
            }
        } else if (net.output_activation == OutputActivation::Tanh) {
            for (double& v : z) {
                v = std::tanh(v);
            }
        }
        acts.push_back(std::move(z));
    }
    return acts;
}

}  // namespace

Mlp Mlp::init(std::vector<int> sizes, OutputActivation act, std::mt19937_64& rng) {
    if (sizes.size() < 2) {
        throw std::invalid_argument("Mlp::init: need at least input and output layers");
    }
    Mlp net;
    net.layer_sizes = std::move(sizes);
    net.output_activation = act;
    for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
        const int in = net.layer_sizes[l];
        const int out = net.layer_sizes[l + 1];
        if (in <= 0 || out <= 0) {
            throw std::invalid_argument("Mlp::init: layer sizes must be positive");
        }
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        std::vector<double> w(static_cast<std::size_t>(in) * out);
        std::vector<double> b(out);
        for (double& v : w) {
            v = uniform_in(rng, -bound, bound);
        }
        for (double& v : b) {
            v = uniform_in(rng, -bound, bound);
        }
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    return net;
}

bool Mlp::same_shape(const Mlp& other) const {
    return layer_sizes == other.layer_sizes &&
           output_activation == other.output_activation;
}

std::vector<double> forward(const Mlp& net, std::span<const double> x) {
    check_input(net, x, "forward");
    return forward_trace(net, x).back();
}

Gradients Gradients::zeros_like(const Mlp& net) {
    Gradients g;
    g.dw.reserve(net.num_layers());
    g.db.reserve(net.num_layers());
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        g.dw.emplace_back(net.weights[l].size(), 0.0);
        g.db.emplace_back(net.biases[l].size(), 0.0);
    }
    return g;
}

void Gradients::accumulate(const Gradients& other) {
    for (std::size_t l = 0; l < dw.size(); ++l) {
        for (std::size_t i = 0; i < dw[l].size(); ++i) {
            dw[l][i] += other.dw[l][i];
        }
        for (std::size_t i = 0; i < db[l].size(); ++i) {
            db[l][i] += other.db[l][i];
        }
    }
}

void Gradients::scale(double factor) {
    for (auto& layer : dw) {
        for (double& v : layer) {
            v *= factor;
        }
    }
    for (auto& layer : db) {
        for (double& v : layer) {
            v *= factor;
        }
    }
}

bool Gradients::finite() const {
    auto ok = [](const std::vector<std::vector<double>>& blocks) {
        for (const auto& block : blocks) {
            for (double v : block) {
                if (!std::isfinite(v)) {
                    return false;
                }
            }
        }
        return true;
    };
    return ok(dw) && ok(db);
}

Gradients backward(const Mlp& net, std::span<const double> x,
                   std::span<const double> upstream_grad,
                   std::vector<double>* input_grad) {
    check_input(net, x, "backward");
    if (static_cast<int>(upstream_grad.size()) != net.output_size()) {
        throw std::invalid_argument("backward: upstream gradient size mismatch");
    }

    const auto acts = forward_trace(net, x);
    Gradients grads = Gradients::zeros_like(net);

    // delta = dLoss/d(pre-activation) of the current layer, built backwards.
    std::vector<double> delta(upstream_grad.begin(), upstream_grad.end());
    if (net.output_activation == OutputActivation::Tanh) {
        const std::vector<double>& y = acts.back();
        for (std::size_t o = 0; o < delta.size(); ++o) {
            delta[o] *= 1.0 - y[o] * y[o];
        }
    }

    for (std::size_t l = net.num_layers(); l-- > 0;) {
        const int in = net.layer_sizes[l];
        const int out = net.layer_sizes[l + 1];
        const std::vector<double>& prev = acts[l];
        std::vector<double>& dw = grads.dw[l];
        std::vector<double>& db = grads.db[l];

        for (int o = 0; o < out; ++o) {
            db[o] = delta[o];
            double* row = dw.data() + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) {
                row[i] = delta[o] * prev[i];
            }
        }

        std::vector<double> prev_delta(in, 0.0);
        const std::vector<double>& w = net.weights[l];
        for (int o = 0; o < out; ++o) {
            const double* row = w.data() + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) {
                prev_delta[i] += row[i] * delta[o];
            }
        }
        if (l > 0) {
            // ReLU gate of the layer below: derivative 0 where the
            // post-activation was clipped.
            for (int i = 0; i < in; ++i) {
                if (acts[l][i] <= 0.0) {
                    prev_delta[i] = 0.0;
                }
            }
        }
        delta = std::move(prev_delta);
    }

    if (input_grad != nullptr) {
        *input_grad = std::move(delta);
    }
    return grads;
}

AdamState AdamState::for_net(const Mlp& net) {
    AdamState s;
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        s.m_w.emplace_back(net.weights[l].size(), 0.0);
        s.v_w.emplace_back(net.weights[l].size(), 0.0);
        s.m_b.emplace_back(net.biases[l].size(), 0.0);
        s.v_b.emplace_back(net.biases[l].size(), 0.0);
    }
    return s;
}

void adam_step(Mlp& net, const Gradients& grads, AdamState& opt, double lr) {
    if (!(lr > 0.0)) {
        throw std::invalid_argument("adam_step: learning rate must be positive");
    }
    if (!grads.finite()) {
        throw std::invalid_argument("adam_step: non-finite gradient");
    }

    opt.step += 1;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));

    auto update_block = [&](std::vector<double>& params, const std::vector<double>& g,
                            std::vector<double>& m, std::vector<double>& v) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i];
            v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            params[i] -= lr * m_hat / (std::sqrt(v_hat) + opt.eps);
        }
    };

    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        update_block(net.weights[l], grads.dw[l], opt.m_w[l], opt.v_w[l]);
        update_block(net.biases[l], grads.db[l], opt.m_b[l], opt.v_b[l]);
    }
}

void soft_update(Mlp& target, const Mlp& online, double tau) {
    if (!target.same_shape(online)) {
        throw std::invalid_argument("soft_update: shape mismatch");
    }
    if (!(tau >= 0.0 && tau <= 1.0)) {
        throw std::invalid_argument("soft_update: tau must be in [0, 1]");
    }
    for (std::size_t l = 0; l < target.num_layers(); ++l) {
        for (std::size_t i = 0; i < target.weights[l].size(); ++i) {
            target.weights[l][i] =
                tau * online.weights[l][i] + (1.0 - tau) * target.weights[l][i];
        }
        for (std::size_t i = 0; i < target.biases[l].size(); ++i) {
            target.biases[l][i] =
                tau * online.biases[l][i] + (1.0 - tau) * target.biases[l][i];
        }
    }
}

nlohmann::json mlp_to_json(const Mlp& net) {
    return nlohmann::json{
        {"version", 1},
        {"layer_sizes", net.layer_sizes},
        {"output_activation",
         net.output_activation == OutputActivation::Tanh ? "tanh" : "linear"},
        {"weights", net.weights},
        {"biases", net.biases},
    };
}

Mlp mlp_from_json(const nlohmann::json& j) {
    if (j.at("version").get<int>() != 1) {
        throw std::runtime_error("mlp_from_json: unsupported version");
    }
    Mlp net;
    net.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    const std::string act = j.at("output_activation").get<std::string>();
    if (act == "tanh") {
        net.output_activation = OutputActivation::Tanh;
    } else if (act == "linear") {
        net.output_activation = OutputActivation::Linear;
    } else {
        throw std::runtime_error("mlp_from_json: unknown activation " + act);
    }
    net.weights = j.at("weights").get<std::vector<std::vector<double>>>();
    net.biases = j.at("biases").get<std::vector<std::vector<double>>>();

    if (net.layer_sizes.size() < 2 ||
        net.weights.size() != net.layer_sizes.size() - 1 ||
        net.biases.size() != net.weights.size()) {
        throw std::runtime_error("mlp_from_json: inconsistent layer shapes");
    }
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        const std::size_t in = static_cast<std::size_t>(net.layer_sizes[l]);
        const std::size_t out = static_cast<std::size_t>(net.layer_sizes[l + 1]);
        if (net.weights[l].size() != in * out || net.biases[l].size() != out) {
            throw std::runtime_error("mlp_from_json: parameter block size mismatch");
        }
    }
    return net;
}

nlohmann::json adam_to_json(const AdamState& opt) {
    return nlohmann::json{
        {"version", 1}, {"m_w", opt.m_w}, {"v_w", opt.v_w}, {"m_b", opt.m_b},
        {"v_b", opt.v_b}, {"step", opt.step}, {"beta1", opt.beta1},
        {"beta2", opt.beta2}, {"eps", opt.eps},
    };
}

AdamState adam_from_json(const nlohmann::json& j) {
    AdamState s;
    s.m_w = j.at("m_w").get<std::vector<std::vector<double>>>();
    s.v_w = j.at("v_w").get<std::vector<std::vector<double>>>();
    s.m_b = j.at("m_b").get<std::vector<std::vector<double>>>();
    s.v_b = j.at("v_b").get<std::vector<std::vector<double>>>();
    s.step = j.at("step").get<long>();
    s.beta1 = j.at("beta1").get<double>();
    s.beta2 = j.at("beta2").get<double>();
    s.eps = j.at("eps").get<double>();
    return s;
}

}  // namespace apsim
