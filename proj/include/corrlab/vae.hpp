#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "corrlab/factors.hpp"
#include "corrlab/matrix.hpp"
#include "corrlab/nnkit.hpp"

namespace corrlab::vae {

// Diagonal Gaussian q(z|x); log-variances clamped to [-10, 10] at encode time
// to keep KL terms finite on degenerate batches.
struct GaussianPosterior {
    nn::Vector mean;
    nn::Vector log_var;
};

inline constexpr double kLogVarClamp = 10.0;

enum class Objective { BetaVae, AdaGvae };

const char* objective_name(Objective objective);
Objective objective_from_name(const std::string& name);

struct TrainConfig {
    Objective objective = Objective::BetaVae;
    double beta = 4.0;
    int steps = 10000;
    int batch_size = 64;
    double learning_rate = 1e-3;
    int k_changed = 1;  // number of changing dims assumed by the weak objective
    factors::WeakRegime regime = factors::WeakRegime::Observational;
    int latent_dim = 10;
    std::vector<std::size_t> hidden = {256, 128};
    int log_every = 100;
};

struct TracePoint {
    int step = 0;
    double loss = 0.0;
    double recon = 0.0;
    double kl = 0.0;
};

struct TrainedModel {
    nn::Network encoder;
    nn::Network decoder;
    TrainConfig config;
    std::uint64_t seed = 0;
    std::vector<TracePoint> trace;
};

// Split the encoder output into (mean, clamped log-variance).
GaussianPosterior encode(const nn::Network& encoder, std::span<const double> observation);

// z = mean + exp(log_var / 2) * noise
nn::Vector reparameterize(const GaussianPosterior& posterior, std::span<const double> noise);

// Per-dimension KL(q || N(0, I)) and its sum.
nn::Vector kl_to_prior_per_dim(const GaussianPosterior& posterior);
double kl_to_prior_sum(const GaussianPosterior& posterior);

// Per-dimension KL(q1 || q2) between diagonal Gaussians.
nn::Vector per_dim_kl_between(const GaussianPosterior& q1, const GaussianPosterior& q2);

// Stable Bernoulli cross-entropy of logits against targets in [0,1], summed.
double bernoulli_ce_logits(std::span<const double> logits, std::span<const double> targets);

// Decoder output mapped to pixel space (sigmoid of the logits).
nn::Vector decode_observation(const nn::Network& decoder, std::span<const double> latent);

struct LossResult {
    double loss = 0.0;
    double recon = 0.0;
    double kl = 0.0;
    nn::Gradients encoder_grads;
    nn::Gradients decoder_grads;
    // AdaGvae only: inferred changing dims, one entry per pair (k = 1).
    std::vector<int> changed_dims;
};

// Mean over the batch of [reconstruction cross-entropy + beta * KL]. `noise`
// is one standard-normal row per observation; passing it explicitly keeps the
// loss a deterministic function for gradient checks.
LossResult beta_vae_loss(const Matrix& batch, const nn::Network& encoder,
                         const nn::Network& decoder, double beta, const Matrix& noise);

// Weakly-supervised pair objective: infers the k changing dims from the
// largest coordinate-wise KLs, substitutes the averaged posterior into the
// shared dims of both observations, then sums the two per-observation losses.
// Rows of x1/x2 are pairs; the returned loss is the mean over pairs.
LossResult adagvae_loss(const Matrix& x1, const Matrix& x2, const nn::Network& encoder,
                        const nn::Network& decoder, double beta, int k_changed,
                        const Matrix& noise1, const Matrix& noise2);

// Full training loop; deterministic given (config, seed).
TrainedModel train(const factors::FactorSpace& space, const factors::CorrelationSpec& corr,
                   const factors::RenderConfig& render_cfg, const TrainConfig& config,
                   std::uint64_t seed);

// Posterior means for a list of configurations (rows = samples).
Matrix encode_dataset(const nn::Network& encoder, const factors::FactorSpace& space,
                      const factors::RenderConfig& render_cfg,
                      const std::vector<factors::FactorConfig>& configs);

// Encode a base configuration, sweep one latent coordinate through `values`,
// decode each point.
std::vector<factors::Observation> latent_traversal(const TrainedModel& model,
                                                   const factors::FactorSpace& space,
                                                   const factors::RenderConfig& render_cfg,
                                                   const factors::FactorConfig& base, int dim,
                                                   std::span<const double> values);

nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);

}  // namespace corrlab::vae
