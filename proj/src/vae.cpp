#include "corrlab/vae.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace corrlab::vae {

const char* objective_name(Objective objective) {
    switch (objective) {
        case Objective::BetaVae: return "beta_vae";
        case Objective::AdaGvae: return "ada_gvae";
    }
    return "unknown";
}

Objective objective_from_name(const std::string& name) {
    if (name == "beta_vae") return Objective::BetaVae;
    if (name == "ada_gvae") return Objective::AdaGvae;
    throw std::domain_error("unknown objective '" + name + "'");
}

namespace {

inline double clamp_log_var(double raw) {
    return std::clamp(raw, -kLogVarClamp, kLogVarClamp);
}

inline bool log_var_active(double raw) {
    return raw > -kLogVarClamp && raw < kLogVarClamp;
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double ce_logit(double logit, double target) {
    // max(l,0) - l*t + log(1 + exp(-|l|))
    return std::max(logit, 0.0) - logit * target + std::log1p(std::exp(-std::abs(logit)));
}

}  // namespace

GaussianPosterior encode(const nn::Network& encoder, std::span<const double> observation) {
    nn::Vector out = nn::forward(encoder, observation);
    if (out.size() % 2 != 0) throw std::domain_error("encode: encoder output must be 2*latent");
    const std::size_t latent = out.size() / 2;
    GaussianPosterior q;
    q.mean.assign(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(latent));
    q.log_var.resize(latent);
    for (std::size_t i = 0; i < latent; ++i) q.log_var[i] = clamp_log_var(out[latent + i]);
    return q;
}

nn::Vector reparameterize(const GaussianPosterior& posterior, std::span<const double> noise) {
    if (noise.size() != posterior.mean.size()) {
        throw std::domain_error("reparameterize: noise length mismatch");
    }
    nn::Vector z(posterior.mean.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = posterior.mean[i] + std::exp(0.5 * posterior.log_var[i]) * noise[i];
    }
    return z;
}

nn::Vector kl_to_prior_per_dim(const GaussianPosterior& posterior) {
    nn::Vector kl(posterior.mean.size());
    for (std::size_t i = 0; i < kl.size(); ++i) {
        const double mu = posterior.mean[i];
        const double lv = posterior.log_var[i];
        kl[i] = 0.5 * (mu * mu + std::exp(lv) - 1.0 - lv);
    }
    return kl;
}

double kl_to_prior_sum(const GaussianPosterior& posterior) {
    double total = 0.0;
    for (double v : kl_to_prior_per_dim(posterior)) total += v;
    return total;
}

nn::Vector per_dim_kl_between(const GaussianPosterior& q1, const GaussianPosterior& q2) {
    if (q1.mean.size() != q2.mean.size()) {
        throw std::domain_error("per_dim_kl_between: dimension mismatch");
    }
    nn::Vector kl(q1.mean.size());
    for (std::size_t i = 0; i < kl.size(); ++i) {
        const double v1 = std::exp(q1.log_var[i]);
        const double v2 = std::exp(q2.log_var[i]);
        const double dmu = q1.mean[i] - q2.mean[i];
        kl[i] = 0.5 * (q2.log_var[i] - q1.log_var[i]) + (v1 + dmu * dmu) / (2.0 * v2) - 0.5;
    }
    return kl;
}

double bernoulli_ce_logits(std::span<const double> logits, std::span<const double> targets) {
    if (logits.size() != targets.size()) {
        throw std::domain_error("bernoulli_ce_logits: length mismatch");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) total += ce_logit(logits[i], targets[i]);
    return total;
}

nn::Vector decode_observation(const nn::Network& decoder, std::span<const double> latent) {
    nn::Vector logits = nn::forward(decoder, latent);
    for (double& v : logits) v = logistic(v);
    return logits;
}

namespace {

// Batched posterior view of an encoder output matrix (rows x 2L).
struct BatchPosterior {
    Matrix mean;     // rows x L
    Matrix log_var;  // rows x L, clamped
    Matrix raw_lv;   // rows x L, pre-clamp (for the clamp mask)
};

BatchPosterior split_posterior(const Matrix& enc_out) {
    if (enc_out.cols % 2 != 0) throw std::domain_error("encoder output must be 2*latent wide");
    const std::size_t latent = enc_out.cols / 2;
    BatchPosterior p;
    p.mean = Matrix(enc_out.rows, latent);
    p.log_var = Matrix(enc_out.rows, latent);
    p.raw_lv = Matrix(enc_out.rows, latent);
    for (std::size_t r = 0; r < enc_out.rows; ++r) {
        for (std::size_t d = 0; d < latent; ++d) {
            p.mean.at(r, d) = enc_out.at(r, d);
            const double raw = enc_out.at(r, latent + d);
            p.raw_lv.at(r, d) = raw;
            p.log_var.at(r, d) = clamp_log_var(raw);
        }
    }
    return p;
}

// Assemble d(loss)/d(encoder output) from gradients on mean and log-var,
// applying the clamp mask.
Matrix assemble_encoder_upstream(const BatchPosterior& p, const Matrix& d_mean,
                                 const Matrix& d_log_var) {
    const std::size_t latent = p.mean.cols;
    Matrix up(p.mean.rows, 2 * latent);
    for (std::size_t r = 0; r < up.rows; ++r) {
        for (std::size_t d = 0; d < latent; ++d) {
            up.at(r, d) = d_mean.at(r, d);
            up.at(r, latent + d) = log_var_active(p.raw_lv.at(r, d)) ? d_log_var.at(r, d) : 0.0;
        }
    }
    return up;
}

}  // namespace

LossResult beta_vae_loss(const Matrix& batch, const nn::Network& encoder,
                         const nn::Network& decoder, double beta, const Matrix& noise) {
    const std::size_t rows = batch.rows;
    if (rows == 0) throw std::domain_error("beta_vae_loss: empty batch");
    if (noise.rows != rows) throw std::domain_error("beta_vae_loss: noise batch mismatch");

    LossResult result;
    result.encoder_grads = nn::Gradients::zeros_like(encoder);
    result.decoder_grads = nn::Gradients::zeros_like(decoder);

    nn::ForwardTrace enc_trace;
    const Matrix enc_out = nn::forward(encoder, batch, enc_trace);
    BatchPosterior post = split_posterior(enc_out);
    const std::size_t latent = post.mean.cols;
    if (noise.cols != latent) throw std::domain_error("beta_vae_loss: noise width mismatch");

    Matrix z(rows, latent);
    Matrix sigma(rows, latent);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t d = 0; d < latent; ++d) {
            const double s = std::exp(0.5 * post.log_var.at(r, d));
            sigma.at(r, d) = s;
            z.at(r, d) = post.mean.at(r, d) + s * noise.at(r, d);
        }
    }

    nn::ForwardTrace dec_trace;
    const Matrix logits = nn::forward(decoder, z, dec_trace);
    if (logits.cols != batch.cols) throw std::domain_error("beta_vae_loss: decoder output mismatch");

    const double inv_rows = 1.0 / static_cast<double>(rows);
    double recon_total = 0.0;
    double kl_total = 0.0;
    Matrix dec_upstream(rows, logits.cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < logits.cols; ++c) {
            const double l = logits.at(r, c);
            const double t = batch.at(r, c);
            recon_total += ce_logit(l, t);
            dec_upstream.at(r, c) = (logistic(l) - t) * inv_rows;
        }
        for (std::size_t d = 0; d < latent; ++d) {
            const double mu = post.mean.at(r, d);
            const double lv = post.log_var.at(r, d);
            kl_total += 0.5 * (mu * mu + std::exp(lv) - 1.0 - lv);
        }
    }
    result.recon = recon_total * inv_rows;
    result.kl = kl_total * inv_rows;
    result.loss = result.recon + beta * result.kl;
    if (!std::isfinite(result.loss)) {
        throw std::runtime_error("beta_vae_loss: non-finite loss");
    }

    const Matrix dz = nn::backward(decoder, dec_trace, dec_upstream, result.decoder_grads);

    Matrix d_mean(rows, latent);
    Matrix d_log_var(rows, latent);
    const double beta_scale = beta * inv_rows;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t d = 0; d < latent; ++d) {
            const double var = sigma.at(r, d) * sigma.at(r, d);
            d_mean.at(r, d) = dz.at(r, d) + beta_scale * post.mean.at(r, d);
            d_log_var.at(r, d) = dz.at(r, d) * 0.5 * sigma.at(r, d) * noise.at(r, d) +
                                 beta_scale * 0.5 * (var - 1.0);
        }
    }
    const Matrix enc_upstream = assemble_encoder_upstream(post, d_mean, d_log_var);
    nn::backward(encoder, enc_trace, enc_upstream, result.encoder_grads);
    return result;
}

LossResult adagvae_loss(const Matrix& x1, const Matrix& x2, const nn::Network& encoder,
                        const nn::Network& decoder, double beta, int k_changed,
                        const Matrix& noise1, const Matrix& noise2) {
    if (!x1.same_shape(x2)) throw std::domain_error("adagvae_loss: pair shape mismatch");
    const std::size_t pairs = x1.rows;
    if (pairs == 0) throw std::domain_error("adagvae_loss: empty batch");
    if (k_changed < 0) throw std::domain_error("adagvae_loss: k_changed must be >= 0");

    LossResult result;
    result.encoder_grads = nn::Gradients::zeros_like(encoder);
    result.decoder_grads = nn::Gradients::zeros_like(decoder);

    nn::ForwardTrace enc_trace1, enc_trace2;
    BatchPosterior p1 = split_posterior(nn::forward(encoder, x1, enc_trace1));
    BatchPosterior p2 = split_posterior(nn::forward(encoder, x2, enc_trace2));
    const std::size_t latent = p1.mean.cols;
    if (noise1.rows != pairs || noise2.rows != pairs || noise1.cols != latent ||
        noise2.cols != latent) {
        throw std::domain_error("adagvae_loss: noise shape mismatch");
    }

    // Per pair: coordinate-wise KL(q1 || q2), mark the k largest as changing.
    std::vector<std::vector<char>> is_changed(pairs, std::vector<char>(latent, 0));
    result.changed_dims.reserve(pairs * static_cast<std::size_t>(k_changed));
    for (std::size_t r = 0; r < pairs; ++r) {
        std::vector<double> kl(latent);
        for (std::size_t d = 0; d < latent; ++d) {
            const double v1 = std::exp(p1.log_var.at(r, d));
            const double v2 = std::exp(p2.log_var.at(r, d));
            const double dmu = p1.mean.at(r, d) - p2.mean.at(r, d);
            kl[d] = 0.5 * (p2.log_var.at(r, d) - p1.log_var.at(r, d)) +
                    (v1 + dmu * dmu) / (2.0 * v2) - 0.5;
        }
        std::vector<std::size_t> order(latent);
        for (std::size_t d = 0; d < latent; ++d) order[d] = d;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return kl[a] > kl[b]; });
        const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k_changed), latent);
        for (std::size_t i = 0; i < take; ++i) {
            is_changed[r][order[i]] = 1;
            result.changed_dims.push_back(static_cast<int>(order[i]));
        }
    }

    // Substituted posteriors per branch (changed dims keep their own, shared
    // dims use the mean of means and of variances).
    Matrix mu_t1(pairs, latent), mu_t2(pairs, latent);
    Matrix lv_t1(pairs, latent), lv_t2(pairs, latent);
    for (std::size_t r = 0; r < pairs; ++r) {
        for (std::size_t d = 0; d < latent; ++d) {
            if (is_changed[r][d]) {
                mu_t1.at(r, d) = p1.mean.at(r, d);
                mu_t2.at(r, d) = p2.mean.at(r, d);
                lv_t1.at(r, d) = p1.log_var.at(r, d);
                lv_t2.at(r, d) = p2.log_var.at(r, d);
            } else {
                const double mu_avg = 0.5 * (p1.mean.at(r, d) + p2.mean.at(r, d));
                const double var_avg =
                    0.5 * (std::exp(p1.log_var.at(r, d)) + std::exp(p2.log_var.at(r, d)));
                const double lv_avg = std::log(var_avg);
                mu_t1.at(r, d) = mu_avg;
                mu_t2.at(r, d) = mu_avg;
                lv_t1.at(r, d) = lv_avg;
                lv_t2.at(r, d) = lv_avg;
            }
        }
    }

    const double inv_pairs = 1.0 / static_cast<double>(pairs);
    double recon_total = 0.0;
    double kl_total = 0.0;

    // d(loss)/d(mu~, lv~) accumulated per branch, then mapped back to the two
    // encoder outputs through the averaging function.
    Matrix d_mu_t1(pairs, latent), d_mu_t2(pairs, latent);
    Matrix d_lv_t1(pairs, latent), d_lv_t2(pairs, latent);

    auto run_branch = [&](const Matrix& target, const Matrix& mu_t, const Matrix& lv_t,
                          const Matrix& noise, Matrix& d_mu_t, Matrix& d_lv_t) {
        Matrix z(pairs, latent);
        Matrix sigma(pairs, latent);
        for (std::size_t r = 0; r < pairs; ++r) {
            for (std::size_t d = 0; d < latent; ++d) {
                const double s = std::exp(0.5 * lv_t.at(r, d));
                sigma.at(r, d) = s;
                z.at(r, d) = mu_t.at(r, d) + s * noise.at(r, d);
            }
        }
        nn::ForwardTrace dec_trace;
        const Matrix logits = nn::forward(decoder, z, dec_trace);
        Matrix dec_upstream(pairs, logits.cols);
        for (std::size_t r = 0; r < pairs; ++r) {
            for (std::size_t c = 0; c < logits.cols; ++c) {
                const double l = logits.at(r, c);
                const double t = target.at(r, c);
                recon_total += ce_logit(l, t);
                dec_upstream.at(r, c) = (logistic(l) - t) * inv_pairs;
            }
            for (std::size_t d = 0; d < latent; ++d) {
                const double mu = mu_t.at(r, d);
                const double lv = lv_t.at(r, d);
                kl_total += 0.5 * (mu * mu + std::exp(lv) - 1.0 - lv);
            }
        }
        const Matrix dz = nn::backward(decoder, dec_trace, dec_upstream, result.decoder_grads);
        const double beta_scale = beta * inv_pairs;
        for (std::size_t r = 0; r < pairs; ++r) {
            for (std::size_t d = 0; d < latent; ++d) {
                const double var = sigma.at(r, d) * sigma.at(r, d);
                d_mu_t.at(r, d) = dz.at(r, d) + beta_scale * mu_t.at(r, d);
                d_lv_t.at(r, d) = dz.at(r, d) * 0.5 * sigma.at(r, d) * noise.at(r, d) +
                                  beta_scale * 0.5 * (var - 1.0);
            }
        }
    };

    run_branch(x1, mu_t1, lv_t1, noise1, d_mu_t1, d_lv_t1);
    run_branch(x2, mu_t2, lv_t2, noise2, d_mu_t2, d_lv_t2);

    result.recon = recon_total * inv_pairs;
    result.kl = kl_total * inv_pairs;
    result.loss = result.recon + beta * result.kl;
    if (!std::isfinite(result.loss)) {
        throw std::runtime_error("adagvae_loss: non-finite loss");
    }

    // Map substituted-posterior gradients back to the raw encoder outputs.
    Matrix d_mu1(pairs, latent), d_mu2(pairs, latent);
    Matrix d_lv1(pairs, latent), d_lv2(pairs, latent);
    for (std::size_t r = 0; r < pairs; ++r) {
        for (std::size_t d = 0; d < latent; ++d) {
            if (is_changed[r][d]) {
                d_mu1.at(r, d) = d_mu_t1.at(r, d);
                d_mu2.at(r, d) = d_mu_t2.at(r, d);
                d_lv1.at(r, d) = d_lv_t1.at(r, d);
                d_lv2.at(r, d) = d_lv_t2.at(r, d);
            } else {
                const double dmu_sum = d_mu_t1.at(r, d) + d_mu_t2.at(r, d);
                d_mu1.at(r, d) = 0.5 * dmu_sum;
                d_mu2.at(r, d) = 0.5 * dmu_sum;
                // lv_avg = log((v1 + v2)/2): d lv_avg / d lv_i = v_i / (v1+v2)
                const double v1 = std::exp(p1.log_var.at(r, d));
                const double v2 = std::exp(p2.log_var.at(r, d));
                const double dlv_sum = d_lv_t1.at(r, d) + d_lv_t2.at(r, d);
                d_lv1.at(r, d) = dlv_sum * (v1 / (v1 + v2));
                d_lv2.at(r, d) = dlv_sum * (v2 / (v1 + v2));
            }
        }
    }
    nn::backward(encoder, enc_trace1, assemble_encoder_upstream(p1, d_mu1, d_lv1),
                 result.encoder_grads);
    nn::backward(encoder, enc_trace2, assemble_encoder_upstream(p2, d_mu2, d_lv2),
                 result.encoder_grads);
    return result;
}

namespace {

Matrix render_batch(const factors::FactorSpace& space, const factors::RenderConfig& render_cfg,
                    const std::vector<factors::FactorConfig>& configs) {
    const std::size_t pixels =
        static_cast<std::size_t>(render_cfg.width) * static_cast<std::size_t>(render_cfg.height);
    Matrix batch(configs.size(), pixels);
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const factors::Observation obs = factors::render(space, configs[i], render_cfg);
        std::copy(obs.pixels.begin(), obs.pixels.end(), batch.row_ptr(i));
    }
    return batch;
}

Matrix normal_matrix(std::size_t rows, std::size_t cols, rng::Stream& stream) {
    Matrix m(rows, cols);
    for (double& v : m.data) v = stream.normal();
    return m;
}

}  // namespace

TrainedModel train(const factors::FactorSpace& space, const factors::CorrelationSpec& corr,
                   const factors::RenderConfig& render_cfg, const TrainConfig& config,
                   std::uint64_t seed) {
    if (config.steps < 1 || config.batch_size < 1) {
        throw std::domain_error("train: steps and batch_size must be >= 1");
    }
    if (config.objective == Objective::AdaGvae && config.k_changed != 1) {
        throw std::domain_error("train: only k_changed = 1 is supported");
    }
    const std::size_t pixels =
        static_cast<std::size_t>(render_cfg.width) * static_cast<std::size_t>(render_cfg.height);
    const std::size_t latent = static_cast<std::size_t>(config.latent_dim);

    rng::Stream enc_init = rng::Stream::derive(seed, rng::kPurposeInit, 0);
    rng::Stream dec_init = rng::Stream::derive(seed, rng::kPurposeInit, 1);
    rng::Stream data = rng::Stream::derive(seed, rng::kPurposeData);
    rng::Stream noise = rng::Stream::derive(seed, rng::kPurposeNoise);

    std::vector<std::size_t> enc_dims = {pixels};
    enc_dims.insert(enc_dims.end(), config.hidden.begin(), config.hidden.end());
    enc_dims.push_back(2 * latent);
    std::vector<nn::Activation> enc_acts(config.hidden.size(), nn::Activation::Tanh);
    enc_acts.push_back(nn::Activation::Identity);

    std::vector<std::size_t> dec_dims = {latent};
    dec_dims.insert(dec_dims.end(), config.hidden.rbegin(), config.hidden.rend());
    dec_dims.push_back(pixels);
    std::vector<nn::Activation> dec_acts(config.hidden.size(), nn::Activation::Tanh);
    dec_acts.push_back(nn::Activation::Identity);

    TrainedModel model;
    model.encoder = nn::make_mlp(enc_dims, enc_acts, enc_init);
    model.decoder = nn::make_mlp(dec_dims, dec_acts, dec_init);
    model.config = config;
    model.seed = seed;

    nn::AdamConfig adam_cfg;
    adam_cfg.learning_rate = config.learning_rate;
    nn::AdamState enc_state = nn::AdamState::init(model.encoder, adam_cfg);
    nn::AdamState dec_state = nn::AdamState::init(model.decoder, adam_cfg);

    const int pairs = std::max(1, config.batch_size / 2);

    for (int step = 1; step <= config.steps; ++step) {
        LossResult loss;
        if (config.objective == Objective::BetaVae) {
            std::vector<factors::FactorConfig> configs(static_cast<std::size_t>(config.batch_size));
            for (auto& c : configs) c = factors::sample_config(space, corr, data);
            const Matrix batch = render_batch(space, render_cfg, configs);
            const Matrix eps = normal_matrix(batch.rows, latent, noise);
            loss = beta_vae_loss(batch, model.encoder, model.decoder, config.beta, eps);
        } else {
            std::vector<factors::FactorConfig> firsts(static_cast<std::size_t>(pairs));
            std::vector<factors::FactorConfig> seconds(static_cast<std::size_t>(pairs));
            for (int p = 0; p < pairs; ++p) {
                const factors::WeakPair pair =
                    factors::sample_weak_pair(space, corr, config.regime, data);
                firsts[static_cast<std::size_t>(p)] = pair.first;
                seconds[static_cast<std::size_t>(p)] = pair.second;
            }
            const Matrix x1 = render_batch(space, render_cfg, firsts);
            const Matrix x2 = render_batch(space, render_cfg, seconds);
            const Matrix eps1 = normal_matrix(x1.rows, latent, noise);
            const Matrix eps2 = normal_matrix(x2.rows, latent, noise);
            loss = adagvae_loss(x1, x2, model.encoder, model.decoder, config.beta,
                                config.k_changed, eps1, eps2);
        }
        try {
            nn::adam_step(model.encoder, loss.encoder_grads, enc_state);
            nn::adam_step(model.decoder, loss.decoder_grads, dec_state);
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("train: diverged at step " + std::to_string(step) + ": " +
                                     e.what());
        }
        if (step % config.log_every == 0 || step == config.steps) {
            model.trace.push_back({step, loss.loss, loss.recon, loss.kl});
        }
    }
    return model;
}

Matrix encode_dataset(const nn::Network& encoder, const factors::FactorSpace& space,
                      const factors::RenderConfig& render_cfg,
                      const std::vector<factors::FactorConfig>& configs) {
    const std::size_t latent = encoder.output_dim() / 2;
    Matrix means(configs.size(), latent);
    // Chunked so huge datasets do not materialize one giant pixel matrix.
    const std::size_t chunk = 1024;
    for (std::size_t start = 0; start < configs.size(); start += chunk) {
        const std::size_t stop = std::min(configs.size(), start + chunk);
        std::vector<factors::FactorConfig> slice(configs.begin() + static_cast<std::ptrdiff_t>(start),
                                                 configs.begin() + static_cast<std::ptrdiff_t>(stop));
        const Matrix batch = render_batch(space, render_cfg, slice);
        const Matrix out = nn::forward(encoder, batch);
        for (std::size_t r = 0; r < out.rows; ++r) {
            for (std::size_t d = 0; d < latent; ++d) means.at(start + r, d) = out.at(r, d);
        }
    }
    return means;
}

std::vector<factors::Observation> latent_traversal(const TrainedModel& model,
                                                   const factors::FactorSpace& space,
                                                   const factors::RenderConfig& render_cfg,
                                                   const factors::FactorConfig& base, int dim,
                                                   std::span<const double> values) {
    const std::size_t latent = model.encoder.output_dim() / 2;
    if (dim < 0 || static_cast<std::size_t>(dim) >= latent) {
        throw std::domain_error("latent_traversal: dim out of range");
    }
    const factors::Observation obs = factors::render(space, base, render_cfg);
    const GaussianPosterior q = encode(model.encoder, obs.pixels);
    std::vector<factors::Observation> frames;
    frames.reserve(values.size());
    for (double value : values) {
        nn::Vector z = q.mean;
        z[static_cast<std::size_t>(dim)] = value;
        factors::Observation frame;
        frame.pixels = decode_observation(model.decoder, z);
        frames.push_back(std::move(frame));
    }
    return frames;
}

nlohmann::json model_to_json(const TrainedModel& model) {
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& point : model.trace) {
        trace.push_back({{"step", point.step},
                         {"loss", point.loss},
                         {"recon", point.recon},
                         {"kl", point.kl}});
    }
    return {{"encoder", nn::to_json(model.encoder)},
            {"decoder", nn::to_json(model.decoder)},
            {"seed", model.seed},
            {"config",
             {{"objective", objective_name(model.config.objective)},
              {"beta", model.config.beta},
              {"steps", model.config.steps},
              {"batch_size", model.config.batch_size},
              {"learning_rate", model.config.learning_rate},
              {"k_changed", model.config.k_changed},
              {"regime", factors::regime_name(model.config.regime)},
              {"latent_dim", model.config.latent_dim},
              {"hidden", model.config.hidden},
              {"log_every", model.config.log_every}}},
            {"trace", trace}};
}

TrainedModel model_from_json(const nlohmann::json& j) {
    TrainedModel model;
    model.encoder = nn::network_from_json(j.at("encoder"));
    model.decoder = nn::network_from_json(j.at("decoder"));
    model.seed = j.at("seed").get<std::uint64_t>();
    const auto& cfg = j.at("config");
    model.config.objective = objective_from_name(cfg.at("objective").get<std::string>());
    model.config.beta = cfg.at("beta").get<double>();
    model.config.steps = cfg.at("steps").get<int>();
    model.config.batch_size = cfg.at("batch_size").get<int>();
    model.config.learning_rate = cfg.at("learning_rate").get<double>();
    model.config.k_changed = cfg.at("k_changed").get<int>();
    const std::string regime = cfg.at("regime").get<std::string>();
    if (regime == "observational") model.config.regime = factors::WeakRegime::Observational;
    else if (regime == "interventional_i1") model.config.regime = factors::WeakRegime::InterventionalI1;
    else if (regime == "interventional_i2") model.config.regime = factors::WeakRegime::InterventionalI2;
    else throw std::domain_error("unknown weak-supervision regime '" + regime + "'");
    model.config.latent_dim = cfg.at("latent_dim").get<int>();
    model.config.hidden = cfg.at("hidden").get<std::vector<std::size_t>>();
    model.config.log_every = cfg.at("log_every").get<int>();
    for (const auto& tj : j.at("trace")) {
        model.trace.push_back({tj.at("step").get<int>(), tj.at("loss").get<double>(),
                               tj.at("recon").get<double>(), tj.at("kl").get<double>()});
    }
    return model;
}

}  // namespace corrlab::vae
