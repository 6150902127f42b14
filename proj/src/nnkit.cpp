#include "corrlab/nnkit.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "corrlab/simd.hpp"

namespace corrlab::nn {

const char* activation_name(Activation act) {
    switch (act) {
        case Activation::Identity: return "identity";
        case Activation::Tanh: return "tanh";
        case Activation::Relu: return "relu";
        case Activation::Sigmoid: return "sigmoid";
    }
    return "unknown";
}

Activation activation_from_name(const std::string& name) {
    if (name == "identity") return Activation::Identity;
    if (name == "tanh") return Activation::Tanh;
    if (name == "relu") return Activation::Relu;
    if (name == "sigmoid") return Activation::Sigmoid;
    throw std::domain_error("unknown activation '" + name + "'");
}

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw std::domain_error("Network: no layers");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Layer& l = layers_[i];
        if (l.weight.rows == 0 || l.weight.cols == 0 || l.bias.size() != l.weight.rows) {
            throw std::domain_error("Network: inconsistent layer shapes");
        }
        if (i > 0 && layers_[i - 1].out_dim() != l.in_dim()) {
            throw std::domain_error("Network: adjacent layer dimensions do not chain");
        }
    }
}

std::size_t Network::input_dim() const { return layers_.front().in_dim(); }
std::size_t Network::output_dim() const { return layers_.back().out_dim(); }

std::size_t Network::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weight.data.size() + l.bias.size();
    return n;
}

Network make_mlp(const std::vector<std::size_t>& dims, const std::vector<Activation>& acts,
                 rng::Stream& init) {
    if (dims.size() < 2 || acts.size() != dims.size() - 1) {
        throw std::domain_error("make_mlp: need n+1 dims for n activations");
    }
    std::vector<Layer> layers;
    layers.reserve(acts.size());
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        Layer layer;
        layer.weight = Matrix(dims[i + 1], dims[i]);
        layer.bias.assign(dims[i + 1], 0.0);
        layer.activation = acts[i];
        const double bound = std::sqrt(6.0 / static_cast<double>(dims[i] + dims[i + 1]));
        for (double& w : layer.weight.data) w = (2.0 * init.uniform01() - 1.0) * bound;
        layers.push_back(std::move(layer));
    }
    return Network(std::move(layers));
}

namespace {

void apply_activation(Matrix& m, Activation act) {
    switch (act) {
        case Activation::Identity:
            return;
        case Activation::Tanh:
            for (double& v : m.data) v = std::tanh(v);
            return;
        case Activation::Relu:
            for (double& v : m.data) v = v > 0.0 ? v : 0.0;
            return;
        case Activation::Sigmoid:
            for (double& v : m.data) v = 1.0 / (1.0 + std::exp(-v));
            return;
    }
}

// d(post)/d(pre) expressed through the post-activation value.
void apply_activation_grad(const Matrix& post, Matrix& grad, Activation act) {
    switch (act) {
        case Activation::Identity:
            return;
        case Activation::Tanh:
            for (std::size_t i = 0; i < grad.data.size(); ++i) {
                grad.data[i] *= 1.0 - post.data[i] * post.data[i];
            }
            return;
        case Activation::Relu:
            for (std::size_t i = 0; i < grad.data.size(); ++i) {
                if (post.data[i] <= 0.0) grad.data[i] = 0.0;
            }
            return;
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < grad.data.size(); ++i) {
                grad.data[i] *= post.data[i] * (1.0 - post.data[i]);
            }
            return;
    }
}

}  // namespace

Matrix forward(const Network& net, const Matrix& input, ForwardTrace& trace) {
    if (input.cols != net.input_dim()) throw std::domain_error("forward: input dimension mismatch");
    trace.post.clear();
    trace.post.reserve(net.layer_count() + 1);
    trace.post.push_back(input);
    for (std::size_t i = 0; i < net.layer_count(); ++i) {
        const Layer& layer = net.layer(i);
        const Matrix& x = trace.post.back();
        Matrix y(x.rows, layer.out_dim());
        simd::gemm_nt(x.data.data(), x.rows, layer.weight.data.data(), layer.weight.rows,
                      layer.weight.cols, layer.bias.data(), y.data.data());
        apply_activation(y, layer.activation);
        trace.post.push_back(std::move(y));
    }
    return trace.post.back();
}

Matrix forward(const Network& net, const Matrix& input) {
    ForwardTrace trace;
    return forward(net, input, trace);
}

Vector forward(const Network& net, std::span<const double> input) {
    Matrix batch(1, input.size());
    std::copy(input.begin(), input.end(), batch.data.begin());
    Matrix out = forward(net, batch);
    return out.data;
}

Gradients Gradients::zeros_like(const Network& net) {
    Gradients g;
    g.weight.reserve(net.layer_count());
    g.bias.reserve(net.layer_count());
    for (std::size_t i = 0; i < net.layer_count(); ++i) {
        const Layer& l = net.layer(i);
        g.weight.emplace_back(l.weight.rows, l.weight.cols);
        g.bias.emplace_back(l.bias.size(), 0.0);
    }
    return g;
}

void Gradients::zero() {
    for (auto& w : weight) std::fill(w.data.begin(), w.data.end(), 0.0);
    for (auto& b : bias) std::fill(b.begin(), b.end(), 0.0);
}

void Gradients::accumulate(const Gradients& other) {
    for (std::size_t i = 0; i < weight.size(); ++i) {
        simd::axpy(1.0, other.weight[i].data.data(), weight[i].data.data(),
                   weight[i].data.size());
        simd::axpy(1.0, other.bias[i].data(), bias[i].data(), bias[i].size());
    }
}

void Gradients::scale(double factor) {
    for (auto& w : weight)
        for (double& v : w.data) v *= factor;
    for (auto& b : bias)
        for (double& v : b) v *= factor;
}

Matrix backward(const Network& net, const ForwardTrace& trace, const Matrix& upstream,
                Gradients& grads) {
    if (trace.post.size() != net.layer_count() + 1) {
        throw std::domain_error("backward: trace does not match network");
    }
    if (!upstream.same_shape(trace.post.back())) {
        throw std::domain_error("backward: upstream gradient shape mismatch");
    }
    Matrix grad = upstream;
    for (std::size_t i = net.layer_count(); i-- > 0;) {
        const Layer& layer = net.layer(i);
        const Matrix& post = trace.post[i + 1];
        const Matrix& input = trace.post[i];
        apply_activation_grad(post, grad, layer.activation);
        // dW += grad^T * input, db += column sums of grad
        simd::gemm_tn_acc(grad.data.data(), grad.rows, grad.cols, input.data.data(), input.cols,
                          grads.weight[i].data.data());
        for (std::size_t r = 0; r < grad.rows; ++r) {
            simd::axpy(1.0, grad.row_ptr(r), grads.bias[i].data(), grad.cols);
        }
        // dX = grad * W
        Matrix next(grad.rows, layer.in_dim());
        simd::gemm_nn_acc(grad.data.data(), grad.rows, grad.cols, layer.weight.data.data(),
                          layer.weight.cols, next.data.data());
        grad = std::move(next);
    }
    return grad;
}

AdamState AdamState::init(const Network& net, const AdamConfig& config) {
    AdamState state;
    state.first_moment = Gradients::zeros_like(net);
    state.second_moment = Gradients::zeros_like(net);
    state.step = 0;
    state.config = config;
    return state;
}

namespace {

bool array_finite(const double* data, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += data[i];
    return std::isfinite(acc);
}

}  // namespace

void adam_step(Network& net, const Gradients& grads, AdamState& state) {
    for (std::size_t i = 0; i < net.layer_count(); ++i) {
        if (!array_finite(grads.weight[i].data.data(), grads.weight[i].data.size()) ||
            !array_finite(grads.bias[i].data(), grads.bias[i].size())) {
            throw std::runtime_error("adam_step: non-finite gradient in layer " +
                                     std::to_string(i));
        }
    }
    state.step += 1;
    const AdamConfig& c = state.config;
    const double bias1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < net.layer_count(); ++i) {
        Layer& layer = net.layer(i);
        simd::adam_update(layer.weight.data.data(), state.first_moment.weight[i].data.data(),
                          state.second_moment.weight[i].data.data(), grads.weight[i].data.data(),
                          layer.weight.data.size(), c.learning_rate, c.beta1, c.beta2, c.eps,
                          bias1, bias2);
        simd::adam_update(layer.bias.data(), state.first_moment.bias[i].data(),
                          state.second_moment.bias[i].data(), grads.bias[i].data(),
                          layer.bias.size(), c.learning_rate, c.beta1, c.beta2, c.eps, bias1,
                          bias2);
    }
}

nlohmann::json to_json(const Network& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t i = 0; i < net.layer_count(); ++i) {
        const Layer& l = net.layer(i);
        layers.push_back({{"rows", l.weight.rows},
                          {"cols", l.weight.cols},
                          {"activation", activation_name(l.activation)},
                          {"weight", l.weight.data},
                          {"bias", l.bias}});
    }
    return {{"layers", layers}};
}

Network network_from_json(const nlohmann::json& j) {
    std::vector<Layer> layers;
    for (const auto& lj : j.at("layers")) {
        Layer l;
        l.weight.rows = lj.at("rows").get<std::size_t>();
        l.weight.cols = lj.at("cols").get<std::size_t>();
        l.weight.data = lj.at("weight").get<std::vector<double>>();
        l.bias = lj.at("bias").get<std::vector<double>>();
        l.activation = activation_from_name(lj.at("activation").get<std::string>());
        if (l.weight.data.size() != l.weight.rows * l.weight.cols) {
            throw std::domain_error("network_from_json: weight size mismatch");
        }
        layers.push_back(std::move(l));
    }
    return Network(std::move(layers));
}

}  // namespace corrlab::nn
