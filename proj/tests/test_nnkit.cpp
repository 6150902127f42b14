#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include <nlohmann/json.hpp>

#include "corrlab/nnkit.hpp"
#include "corrlab/rng.hpp"

using namespace corrlab;
using nn::Activation;
using nn::Network;

namespace {

// Naive single-sample forward pass, the reference the engine is checked
// against.
std::vector<double> naive_forward(const Network& net, std::vector<double> x) {
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const nn::Layer& layer = net.layer(l);
        std::vector<double> y(layer.out_dim(), 0.0);
        for (std::size_t r = 0; r < layer.out_dim(); ++r) {
            double acc = layer.bias[r];
            for (std::size_t c = 0; c < layer.in_dim(); ++c) {
                acc += layer.weight.at(r, c) * x[c];
            }
            switch (layer.activation) {
                case Activation::Identity: y[r] = acc; break;
                case Activation::Tanh: y[r] = std::tanh(acc); break;
                case Activation::Relu: y[r] = acc > 0.0 ? acc : 0.0; break;
                case Activation::Sigmoid: y[r] = 1.0 / (1.0 + std::exp(-acc)); break;
            }
        }
        x = std::move(y);
    }
    return x;
}

// Mutable access to the k-th parameter of a network (weights then biases,
// layer by layer).
double* parameter_at(Network& net, std::size_t index) {
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        nn::Layer& layer = net.layer(l);
        if (index < layer.weight.data.size()) return &layer.weight.data[index];
        index -= layer.weight.data.size();
        if (index < layer.bias.size()) return &layer.bias[index];
        index -= layer.bias.size();
    }
    return nullptr;
}

double gradient_at(const nn::Gradients& grads, std::size_t index) {
    for (std::size_t l = 0; l < grads.weight.size(); ++l) {
        if (index < grads.weight[l].data.size()) return grads.weight[l].data[index];
        index -= grads.weight[l].data.size();
        if (index < grads.bias[l].size()) return grads.bias[l][index];
        index -= grads.bias[l].size();
    }
    return 0.0;
}

}  // namespace

TEST_CASE("forward trivial cases") {
    SUBCASE("identity layer with identity weights") {
        nn::Layer layer;
        layer.weight = Matrix(3, 3);
        for (int i = 0; i < 3; ++i) layer.weight.at(i, i) = 1.0;
        layer.bias = {0.0, 0.0, 0.0};
        layer.activation = Activation::Identity;
        Network net({layer});
        const std::vector<double> x = {0.5, -1.0, 2.0};
        CHECK(nn::forward(net, std::span<const double>(x)) == x);
    }
    SUBCASE("affine arithmetic") {
        nn::Layer layer;
        layer.weight = Matrix(1, 1);
        layer.weight.at(0, 0) = 2.0;
        layer.bias = {1.0};
        layer.activation = Activation::Identity;
        Network net({layer});
        const std::vector<double> x = {3.0};
        CHECK(nn::forward(net, std::span<const double>(x))[0] == doctest::Approx(7.0));
    }
    SUBCASE("dimension mismatch throws") {
        rng::Stream init(1);
        Network net = nn::make_mlp({4, 3}, {Activation::Tanh}, init);
        Matrix bad(1, 5);
        CHECK_THROWS_AS(nn::forward(net, bad), std::domain_error);
    }
}

TEST_CASE("forward matches a naive reference on a frozen network") {
    rng::Stream init(0xF00D);
    Network net = nn::make_mlp({7, 6, 5, 4},
                               {Activation::Tanh, Activation::Sigmoid, Activation::Identity},
                               init);
    rng::Stream input_stream(0xBEEF);
    std::vector<double> x(7);
    for (double& v : x) v = 2.0 * input_stream.uniform01() - 1.0;

    const auto expected = naive_forward(net, x);
    const auto got = nn::forward(net, std::span<const double>(x));
    REQUIRE(got.size() == expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-12));
    }

    // Determinism: bitwise identical on repeat.
    CHECK(nn::forward(net, std::span<const double>(x)) == got);

    // Batched evaluation matches the per-sample path row by row.
    Matrix batch(3, 7);
    rng::Stream batch_stream(0xCAFE);
    for (double& v : batch.data) v = batch_stream.uniform01();
    const Matrix out = nn::forward(net, batch);
    for (std::size_t r = 0; r < 3; ++r) {
        std::vector<double> row(batch.row(r).begin(), batch.row(r).end());
        const auto single = naive_forward(net, row);
        for (std::size_t c = 0; c < out.cols; ++c) {
            CHECK(out.at(r, c) == doctest::Approx(single[c]).epsilon(1e-12));
        }
    }
}

TEST_CASE("backward closed form for a linear layer with squared error") {
    // loss = |Wx + b - y|^2, so dW = 2 (Wx + b - y) x^T.
    nn::Layer layer;
    layer.weight = Matrix(2, 3);
    layer.weight.data = {0.3, -0.2, 0.5, 1.0, 0.1, -0.4};
    layer.bias = {0.1, -0.2};
    layer.activation = Activation::Identity;
    Network net({layer});

    const std::vector<double> x = {1.0, -2.0, 0.5};
    const std::vector<double> y = {0.7, 0.2};

    nn::ForwardTrace trace;
    Matrix input(1, 3);
    input.data = x;
    const Matrix out = nn::forward(net, input, trace);

    Matrix upstream(1, 2);
    for (int i = 0; i < 2; ++i) upstream.at(0, i) = 2.0 * (out.at(0, i) - y[i]);

    nn::Gradients grads = nn::Gradients::zeros_like(net);
    const Matrix dx = nn::backward(net, trace, upstream, grads);

    for (int r = 0; r < 2; ++r) {
        const double residual = 2.0 * (out.at(0, r) - y[r]);
        for (int c = 0; c < 3; ++c) {
            CHECK(grads.weight[0].at(r, c) == doctest::Approx(residual * x[c]).epsilon(1e-12));
        }
        CHECK(grads.bias[0][r] == doctest::Approx(residual).epsilon(1e-12));
    }
    // Input gradient: W^T * upstream.
    for (int c = 0; c < 3; ++c) {
        double expect = 0.0;
        for (int r = 0; r < 2; ++r) expect += net.layer(0).weight.at(r, c) * upstream.at(0, r);
        CHECK(dx.at(0, c) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("zero upstream gradient produces zero gradients") {
    rng::Stream init(3);
    Network net = nn::make_mlp({5, 4, 3}, {Activation::Tanh, Activation::Identity}, init);
    Matrix input(2, 5);
    rng::Stream s(4);
    for (double& v : input.data) v = s.uniform01();
    nn::ForwardTrace trace;
    nn::forward(net, input, trace);
    Matrix upstream(2, 3, 0.0);
    nn::Gradients grads = nn::Gradients::zeros_like(net);
    nn::backward(net, trace, upstream, grads);
    for (const auto& w : grads.weight) {
        for (double v : w.data) CHECK(v == 0.0);
    }
    for (const auto& b : grads.bias) {
        for (double v : b) CHECK(v == 0.0);
    }
}

TEST_CASE("backward matches central finite differences") {
    rng::Stream init(0x5EED);
    Network net = nn::make_mlp(
        {6, 5, 4, 3, 2},
        {Activation::Tanh, Activation::Sigmoid, Activation::Relu, Activation::Identity}, init);

    Matrix input(2, 6);
    rng::Stream s(0x1234);
    for (double& v : input.data) v = 2.0 * s.uniform01() - 1.0;

    // Scalar objective: fixed random weighting of all outputs.
    Matrix weights(2, 2);
    for (double& v : weights.data) v = 2.0 * s.uniform01() - 1.0;

    auto objective = [&](const Network& candidate) {
        const Matrix out = nn::forward(candidate, input);
        double total = 0.0;
        for (std::size_t i = 0; i < out.data.size(); ++i) total += out.data[i] * weights.data[i];
        return total;
    };

    nn::ForwardTrace trace;
    nn::forward(net, input, trace);
    nn::Gradients grads = nn::Gradients::zeros_like(net);
    nn::backward(net, trace, weights, grads);

    const std::size_t n_params = net.parameter_count();
    rng::Stream pick(0x777);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t index = pick.uniform_int(n_params);
        Network probe = net;
        double* p = parameter_at(probe, index);
        REQUIRE(p != nullptr);
        const double h = 1e-4;
        const double original = *p;
        *p = original + h;
        const double up = objective(probe);
        *p = original - h;
        const double down = objective(probe);
        const double fd = (up - down) / (2.0 * h);
        const double analytic = gradient_at(grads, index);
        const double rel =
            std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-8});
        worst = std::max(worst, rel);
    }
    CHECK(worst <= 1e-4);
}

TEST_CASE("adam update") {
    SUBCASE("hand-evaluated single step") {
        nn::Layer layer;
        layer.weight = Matrix(1, 1, 0.0);
        layer.bias = {0.0};
        layer.activation = Activation::Identity;
        Network net({layer});
        nn::AdamConfig cfg;
        cfg.learning_rate = 0.1;
        nn::AdamState state = nn::AdamState::init(net, cfg);
        nn::Gradients grads = nn::Gradients::zeros_like(net);
        grads.weight[0].at(0, 0) = 1.0;
        nn::adam_step(net, grads, state);
        // m-hat = v-hat = 1 after bias correction, so the step is lr/(1+eps).
        CHECK(net.layer(0).weight.at(0, 0) == doctest::Approx(-0.1).epsilon(1e-7));
        CHECK(state.step == 1);
    }
    SUBCASE("zero gradients leave parameters fixed and decay moments") {
        rng::Stream init(9);
        Network net = nn::make_mlp({3, 2}, {Activation::Identity}, init);
        nn::AdamState state = nn::AdamState::init(net, nn::AdamConfig{});
        // Seed the moments with one nonzero step, then feed zeros.
        nn::Gradients grads = nn::Gradients::zeros_like(net);
        grads.weight[0].at(0, 0) = 0.5;
        nn::adam_step(net, grads, state);
        const double m_after_first = state.first_moment.weight[0].at(0, 0);
        grads.zero();
        const Network snapshot = net;
        nn::adam_step(net, grads, state);
        CHECK(state.first_moment.weight[0].at(0, 0) == doctest::Approx(0.9 * m_after_first));
        // A parameter with zero gradient and zero moments stays put.
        CHECK(net.layer(0).weight.at(1, 1) == snapshot.layer(0).weight.at(1, 1));
    }
    SUBCASE("lr = 0 is the identity on parameters") {
        rng::Stream init(10);
        Network net = nn::make_mlp({4, 3}, {Activation::Tanh}, init);
        const Network before = net;
        nn::AdamConfig cfg;
        cfg.learning_rate = 0.0;
        nn::AdamState state = nn::AdamState::init(net, cfg);
        nn::Gradients grads = nn::Gradients::zeros_like(net);
        for (double& v : grads.weight[0].data) v = 1.23;
        nn::adam_step(net, grads, state);
        CHECK(net.layer(0).weight.data == before.layer(0).weight.data);
        CHECK(net.layer(0).bias == before.layer(0).bias);
    }
    SUBCASE("two identical steps match a naive reference trace") {
        nn::Layer layer;
        layer.weight = Matrix(1, 2);
        layer.weight.data = {0.4, -0.3};
        layer.bias = {0.2};
        layer.activation = Activation::Identity;
        Network net({layer});
        nn::AdamState state = nn::AdamState::init(net, nn::AdamConfig{});
        nn::Gradients grads = nn::Gradients::zeros_like(net);
        grads.weight[0].data = {0.25, -1.5};
        grads.bias[0] = {0.75};

        // Naive reference.
        std::vector<double> p = {0.4, -0.3, 0.2};
        const std::vector<double> g = {0.25, -1.5, 0.75};
        std::vector<double> m(3, 0.0), v(3, 0.0);
        for (int t = 1; t <= 2; ++t) {
            for (int i = 0; i < 3; ++i) {
                m[i] = 0.9 * m[i] + 0.1 * g[i];
                v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
                const double mh = m[i] / (1.0 - std::pow(0.9, t));
                const double vh = v[i] / (1.0 - std::pow(0.999, t));
                p[i] -= 1e-3 * mh / (std::sqrt(vh) + 1e-8);
            }
        }
        nn::adam_step(net, grads, state);
        nn::adam_step(net, grads, state);
        CHECK(net.layer(0).weight.at(0, 0) == doctest::Approx(p[0]).epsilon(1e-14));
        CHECK(net.layer(0).weight.at(0, 1) == doctest::Approx(p[1]).epsilon(1e-14));
        CHECK(net.layer(0).bias[0] == doctest::Approx(p[2]).epsilon(1e-14));
    }
    SUBCASE("non-finite gradients are rejected") {
        rng::Stream init(11);
        Network net = nn::make_mlp({2, 2}, {Activation::Identity}, init);
        nn::AdamState state = nn::AdamState::init(net, nn::AdamConfig{});
        nn::Gradients grads = nn::Gradients::zeros_like(net);
        grads.weight[0].at(0, 0) = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(nn::adam_step(net, grads, state), std::runtime_error);
    }
}

TEST_CASE("network json round trip") {
    rng::Stream init(21);
    Network net = nn::make_mlp({5, 4, 2}, {Activation::Relu, Activation::Sigmoid}, init);
    const nlohmann::json j = nn::to_json(net);
    const Network back = nn::network_from_json(j);
    REQUIRE(back.layer_count() == net.layer_count());
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        CHECK(back.layer(l).weight.data == net.layer(l).weight.data);
        CHECK(back.layer(l).bias == net.layer(l).bias);
        CHECK(back.layer(l).activation == net.layer(l).activation);
    }
}

TEST_CASE("glorot initialization stays within its bound") {
    rng::Stream init(30);
    Network net = nn::make_mlp({100, 50}, {Activation::Tanh}, init);
    const double bound = std::sqrt(6.0 / 150.0);
    for (double w : net.layer(0).weight.data) CHECK(std::abs(w) <= bound);
    for (double b : net.layer(0).bias) CHECK(b == 0.0);
}
