#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "corrlab/adapt.hpp"
#include "corrlab/factors.hpp"
#include "corrlab/metrics.hpp"
#include "corrlab/vae.hpp"

namespace corrlab::runner {

// Full description of a sweep: the world, the correlated pair with its sigma
// grid, and the training/evaluation/adaptation settings. Parsed from JSON
// with a strict schema: a version field is required and unknown keys are
// rejected. sigma = infinity is spelled "inf" in JSON.
struct ExperimentConfig {
    factors::FactorSpace space = factors::default_space();
    factors::RenderConfig render;
    int pair_first = 0;
    int pair_second = 1;
    std::vector<double> sigmas = {0.2, 0.4, 0.7,
                                  std::numeric_limits<double>::infinity()};
    std::vector<vae::Objective> objectives = {vae::Objective::BetaVae};
    std::vector<double> betas = {4.0};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    vae::TrainConfig train;
    int eval_samples = 10000;
    metrics::EvalParams eval_params;
    std::vector<int> adapt_label_counts = {0, 100, 1000};
    adapt::SubstitutionKind adapt_kind = adapt::SubstitutionKind::Linear;

    factors::CorrelationSpec correlation(double sigma) const {
        return {pair_first, pair_second, sigma};
    }

    // Canonical JSON (defaults applied, keys sorted) and its FNV fingerprint;
    // key-order permutations of the input file hash identically.
    nlohmann::json to_json() const;
    std::string canonical_hash() const;

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::filesystem::path& path);
};

std::string sigma_to_string(double sigma);
double sigma_from_json_value(const nlohmann::json& value);

}  // namespace corrlab::runner
