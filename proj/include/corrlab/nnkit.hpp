#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "corrlab/matrix.hpp"
#include "corrlab/rng.hpp"

namespace corrlab::nn {

using Vector = std::vector<double>;

enum class Activation { Identity, Tanh, Relu, Sigmoid };

const char* activation_name(Activation act);
Activation activation_from_name(const std::string& name);

struct Layer {
    Matrix weight;  // out x in
    Vector bias;    // out
    Activation activation = Activation::Identity;

    std::size_t in_dim() const { return weight.cols; }
    std::size_t out_dim() const { return weight.rows; }
};

// Feed-forward stack of dense layers. Immutable during evaluation; training
// mutates a locally owned copy through adam_step.
class Network {
public:
    Network() = default;
    explicit Network(std::vector<Layer> layers);

    std::size_t input_dim() const;
    std::size_t output_dim() const;
    std::size_t layer_count() const { return layers_.size(); }
    const Layer& layer(std::size_t i) const { return layers_[i]; }
    Layer& layer(std::size_t i) { return layers_[i]; }
    std::size_t parameter_count() const;

private:
    std::vector<Layer> layers_;
};

// Glorot-uniform MLP; dims = {in, hidden..., out}, one activation per layer.
Network make_mlp(const std::vector<std::size_t>& dims, const std::vector<Activation>& acts,
                 rng::Stream& init);

// Activations of every layer for one batch; post[0] is the input batch and
// post[i+1] the output of layer i. Holding onto post-activations is enough to
// run the backward pass for all four activation kinds.
struct ForwardTrace {
    std::vector<Matrix> post;
};

// Batched evaluation; rows are samples.
Matrix forward(const Network& net, const Matrix& input);
Matrix forward(const Network& net, const Matrix& input, ForwardTrace& trace);

// Single-sample convenience.
Vector forward(const Network& net, std::span<const double> input);

// Parameter gradients, shaped like the network.
struct Gradients {
    std::vector<Matrix> weight;
    std::vector<Vector> bias;

    static Gradients zeros_like(const Network& net);
    void zero();
    void accumulate(const Gradients& other);
    void scale(double factor);
};

// Reverse pass. `upstream` holds d(scalar)/d(output) per sample; parameter
// gradients are accumulated into `grads` and the gradient with respect to the
// input batch is returned.
Matrix backward(const Network& net, const ForwardTrace& trace, const Matrix& upstream,
                Gradients& grads);

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    Gradients first_moment;
    Gradients second_moment;
    std::int64_t step = 0;
    AdamConfig config;

    static AdamState init(const Network& net, const AdamConfig& config);
};

// One bias-corrected Adam update. Throws std::runtime_error on non-finite
// gradients.
void adam_step(Network& net, const Gradients& grads, AdamState& state);

// Checkpoint serialization: layer shapes plus flat parameter arrays.
nlohmann::json to_json(const Network& net);
Network network_from_json(const nlohmann::json& j);

}  // namespace corrlab::nn
