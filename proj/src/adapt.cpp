#include "corrlab/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "corrlab/metrics.hpp"

namespace corrlab::adapt {

const char* substitution_kind_name(SubstitutionKind kind) {
    switch (kind) {
        case SubstitutionKind::Linear: return "linear";
        case SubstitutionKind::Mlp: return "mlp";
    }
    return "unknown";
}

namespace {

constexpr double kRidgeLambda = 1e-3;

int clamp_to_grid(double value, int cardinality) {
    const int rounded = static_cast<int>(std::lround(value));
    return std::clamp(rounded, 0, cardinality - 1);
}

// Ridge regression of y on (z0, z1, 1); the intercept is not penalized.
std::array<double, 3> ridge_fit(const Matrix& latents2, const std::vector<int>& y) {
    const std::size_t n = latents2.rows;
    double a[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    double rhs[3] = {0, 0, 0};
    for (std::size_t r = 0; r < n; ++r) {
        const double x[3] = {latents2.at(r, 0), latents2.at(r, 1), 1.0};
        const double target = static_cast<double>(y[r]);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) a[i][j] += x[i] * x[j];
            rhs[i] += x[i] * target;
        }
    }
    a[0][0] += kRidgeLambda;
    a[1][1] += kRidgeLambda;

    // Gaussian elimination with partial pivoting on the 3x3 system.
    int perm[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r) {
            if (std::abs(a[perm[r]][col]) > std::abs(a[perm[pivot]][col])) pivot = r;
        }
        std::swap(perm[col], perm[pivot]);
        const double diag = a[perm[col]][col];
        if (std::abs(diag) < 1e-30) throw std::runtime_error("ridge_fit: singular system");
        for (int r = col + 1; r < 3; ++r) {
            const double factor = a[perm[r]][col] / diag;
            for (int c = col; c < 3; ++c) a[perm[r]][c] -= factor * a[perm[col]][c];
            rhs[perm[r]] -= factor * rhs[perm[col]];
        }
    }
    std::array<double, 3> w{};
    for (int col = 2; col >= 0; --col) {
        double acc = rhs[perm[col]];
        for (int c = col + 1; c < 3; ++c) acc -= a[perm[col]][c] * w[static_cast<std::size_t>(c)];
        w[static_cast<std::size_t>(col)] = acc / a[perm[col]][col];
    }
    return w;
}

nn::Network fit_mlp_classifier(const Matrix& latents2, const std::vector<int>& y, int n_classes,
                               rng::Stream& init) {
    const std::size_t n = latents2.rows;
    nn::Network net = nn::make_mlp({2, 100, static_cast<std::size_t>(n_classes)},
                                   {nn::Activation::Tanh, nn::Activation::Identity}, init);
    nn::AdamState state = nn::AdamState::init(net, nn::AdamConfig{});
    const double inv_n = 1.0 / static_cast<double>(n);
    for (int step = 0; step < 1000; ++step) {
        nn::ForwardTrace trace;
        const Matrix logits = nn::forward(net, latents2, trace);
        Matrix upstream(n, static_cast<std::size_t>(n_classes));
        for (std::size_t r = 0; r < n; ++r) {
            double max_logit = logits.at(r, 0);
            for (std::size_t c = 1; c < logits.cols; ++c) {
                max_logit = std::max(max_logit, logits.at(r, c));
            }
            double denom = 0.0;
            for (std::size_t c = 0; c < logits.cols; ++c) {
                denom += std::exp(logits.at(r, c) - max_logit);
            }
            for (std::size_t c = 0; c < logits.cols; ++c) {
                const double p = std::exp(logits.at(r, c) - max_logit) / denom;
                const double onehot = static_cast<std::size_t>(y[r]) == c ? 1.0 : 0.0;
                upstream.at(r, c) = (p - onehot) * inv_n;
            }
        }
        nn::Gradients grads = nn::Gradients::zeros_like(net);
        nn::backward(net, trace, upstream, grads);
        nn::adam_step(net, grads, state);
    }
    return net;
}

int argmax_class(const nn::Vector& logits) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i) {
        if (logits[i] > logits[best]) best = i;
    }
    return static_cast<int>(best);
}

}  // namespace

std::pair<int, int> SubstitutionFn::predict(double zi, double zj) const {
    if (kind == SubstitutionKind::Linear) {
        const double pa = linear_a[0] * zi + linear_a[1] * zj + linear_a[2];
        const double pb = linear_b[0] * zi + linear_b[1] * zj + linear_b[2];
        return {clamp_to_grid(pa, card_a), clamp_to_grid(pb, card_b)};
    }
    const nn::Vector in = {zi, zj};
    const int pa = argmax_class(nn::forward(*mlp_a, in));
    const int pb = argmax_class(nn::forward(*mlp_b, in));
    return {std::clamp(pa, 0, card_a - 1), std::clamp(pb, 0, card_b - 1)};
}

std::pair<int, int> identify_entangled_dims(const Matrix& labeled_latents,
                                            const LabelMatrix& labeled_pair_values,
                                            const gbt::Params& params) {
    if (labeled_pair_values.cols != 2) {
        throw std::domain_error("identify_entangled_dims: expected labels for exactly two factors");
    }
    if (labeled_latents.cols < 2) {
        throw std::domain_error("identify_entangled_dims: need at least two latent dims");
    }
    const metrics::ImportanceMatrix imp =
        metrics::tree_importance(labeled_latents, labeled_pair_values, params);

    struct RowPick {
        int best = 0;
        int second = 1;
        double gap = 0.0;
    };
    std::array<RowPick, 2> picks;
    for (std::size_t f = 0; f < 2; ++f) {
        double top = -1.0, second = -1.0;
        int top_idx = 0, second_idx = 0;
        for (std::size_t j = 0; j < imp.n_latents; ++j) {
            const double w = imp.at(f, j);
            if (w > top) {
                second = top;
                second_idx = top_idx;
                top = w;
                top_idx = static_cast<int>(j);
            } else if (w > second) {
                second = w;
                second_idx = static_cast<int>(j);
            }
        }
        picks[f] = {top_idx, second_idx, top - second};
    }
    if (picks[0].best != picks[1].best) return {picks[0].best, picks[1].best};
    // Collision: the factor that is less committed to the shared latent
    // (smaller top gap) takes its second-best dimension.
    if (picks[0].gap < picks[1].gap) return {picks[0].second, picks[1].best};
    return {picks[0].best, picks[1].second};
}

SubstitutionFn fit_substitution(const Matrix& latents2, const LabelMatrix& labels_pair,
                                std::pair<int, int> dims, std::pair<int, int> cardinalities,
                                SubstitutionKind kind, std::uint64_t seed) {
    if (latents2.cols != 2 || labels_pair.cols != 2) {
        throw std::domain_error("fit_substitution: expected two latent columns and two factors");
    }
    if (latents2.rows != labels_pair.rows || latents2.rows < 10) {
        throw std::domain_error("fit_substitution: need at least 10 labeled samples");
    }
    SubstitutionFn fn;
    fn.kind = kind;
    fn.dim_i = dims.first;
    fn.dim_j = dims.second;
    fn.card_a = cardinalities.first;
    fn.card_b = cardinalities.second;

    const std::vector<int> ya = labels_pair.column(0);
    const std::vector<int> yb = labels_pair.column(1);
    for (std::size_t r = 0; r < labels_pair.rows; ++r) {
        if (ya[r] < 0 || ya[r] >= fn.card_a || yb[r] < 0 || yb[r] >= fn.card_b) {
            throw std::domain_error("fit_substitution: label outside the factor grid");
        }
    }

    if (kind == SubstitutionKind::Linear) {
        fn.linear_a = ridge_fit(latents2, ya);
        fn.linear_b = ridge_fit(latents2, yb);
    } else {
        rng::Stream init_a = rng::Stream::derive(seed, rng::kPurposeSubstFit, 0);
        rng::Stream init_b = rng::Stream::derive(seed, rng::kPurposeSubstFit, 1);
        fn.mlp_a = fit_mlp_classifier(latents2, ya, fn.card_a, init_a);
        fn.mlp_b = fit_mlp_classifier(latents2, yb, fn.card_b, init_b);
    }
    return fn;
}

namespace {

// True when `value` is (up to fp noise) an on-grid normalized factor value.
bool on_grid(double value, int cardinality) {
    const double scaled = value * static_cast<double>(cardinality - 1);
    const double rounded = std::lround(scaled);
    return std::abs(scaled - rounded) < 1e-6 && rounded >= 0.0 &&
           rounded <= static_cast<double>(cardinality - 1);
}

}  // namespace

Matrix apply_substitution(const Matrix& latents, const SubstitutionFn& fn) {
    const std::size_t di = static_cast<std::size_t>(fn.dim_i);
    const std::size_t dj = static_cast<std::size_t>(fn.dim_j);
    if (di >= latents.cols || dj >= latents.cols) {
        throw std::domain_error("apply_substitution: selected dims exceed latent width");
    }
    Matrix out = latents;
    const double max_a = static_cast<double>(fn.card_a - 1);
    const double max_b = static_cast<double>(fn.card_b - 1);
    for (std::size_t r = 0; r < latents.rows; ++r) {
        const double zi = latents.at(r, di);
        const double zj = latents.at(r, dj);
        if (on_grid(zi, fn.card_a) && on_grid(zj, fn.card_b)) {
            // Already substituted; reapplying is a no-op.
            out.at(r, di) = std::lround(zi * max_a) / max_a;
            out.at(r, dj) = std::lround(zj * max_b) / max_b;
            continue;
        }
        const auto [pa, pb] = fn.predict(zi, zj);
        out.at(r, di) = static_cast<double>(pa) / max_a;
        out.at(r, dj) = static_cast<double>(pb) / max_b;
    }
    return out;
}

nlohmann::json substitution_to_json(const SubstitutionFn& fn) {
    nlohmann::json j;
    j["kind"] = substitution_kind_name(fn.kind);
    j["dim_i"] = fn.dim_i;
    j["dim_j"] = fn.dim_j;
    j["card_a"] = fn.card_a;
    j["card_b"] = fn.card_b;
    j["ridge_lambda"] = kRidgeLambda;
    if (fn.kind == SubstitutionKind::Linear) {
        j["linear_a"] = fn.linear_a;
        j["linear_b"] = fn.linear_b;
    } else {
        j["mlp_a"] = nn::to_json(*fn.mlp_a);
        j["mlp_b"] = nn::to_json(*fn.mlp_b);
    }
    return j;
}

SubstitutionFn substitution_from_json(const nlohmann::json& j) {
    SubstitutionFn fn;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "linear") fn.kind = SubstitutionKind::Linear;
    else if (kind == "mlp") fn.kind = SubstitutionKind::Mlp;
    else throw std::domain_error("unknown substitution kind '" + kind + "'");
    fn.dim_i = j.at("dim_i").get<int>();
    fn.dim_j = j.at("dim_j").get<int>();
    fn.card_a = j.at("card_a").get<int>();
    fn.card_b = j.at("card_b").get<int>();
    if (fn.kind == SubstitutionKind::Linear) {
        fn.linear_a = j.at("linear_a").get<std::array<double, 3>>();
        fn.linear_b = j.at("linear_b").get<std::array<double, 3>>();
    } else {
        fn.mlp_a = nn::network_from_json(j.at("mlp_a"));
        fn.mlp_b = nn::network_from_json(j.at("mlp_b"));
    }
    return fn;
}

}  // namespace corrlab::adapt
