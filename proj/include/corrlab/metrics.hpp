#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "corrlab/gbt.hpp"
#include "corrlab/matrix.hpp"

namespace corrlab::metrics {

enum class ImportanceSource { MutualInformation, TreeClassifier };

// factors x latents relevance weights, non-negative.
struct ImportanceMatrix {
    std::size_t n_factors = 0;
    std::size_t n_latents = 0;
    std::vector<double> weights;
    ImportanceSource source = ImportanceSource::MutualInformation;

    ImportanceMatrix() = default;
    ImportanceMatrix(std::size_t f, std::size_t l, ImportanceSource s)
        : n_factors(f), n_latents(l), weights(f * l, 0.0), source(s) {}

    double& at(std::size_t factor, std::size_t latent) {
        return weights[factor * n_latents + latent];
    }
    double at(std::size_t factor, std::size_t latent) const {
        return weights[factor * n_latents + latent];
    }
};

// Entropy-normalized mutual information between each factor and each latent
// discretized into equal-frequency bins. Samples with equal latent values
// share a bin, so any strictly increasing transform of a latent leaves the
// matrix unchanged.
ImportanceMatrix mi_importance(const Matrix& latents, const LabelMatrix& labels, int bins = 20);

// Split-gain importances from a boosted-tree classifier per factor, rows
// normalized to sum 1.
ImportanceMatrix tree_importance(const Matrix& latents, const LabelMatrix& labels,
                                 const gbt::Params& params = {});

// Mean over factors of the gap between the two largest entries per row.
double mig(const ImportanceMatrix& mi_matrix);

// Importance-weighted (one minus) entropy of each latent's distribution over
// factors; zero-mass latent columns are excluded.
double dci_disentanglement(const ImportanceMatrix& importance);

// Mean over factors of the gap between the two best single-latent
// threshold classifiers (balanced accuracy on a median-split factor).
double sap(const Matrix& latents, const LabelMatrix& labels);

// Widest-path bottleneck between every pair of factors in the bipartite
// factor-latent graph: entry (a,b) is the largest threshold at which a and b
// are still connected keeping only edges of weight >= threshold.
Matrix pairwise_entanglement(const ImportanceMatrix& importance);

struct PairwiseSummary {
    double correlated = 0.0;
    std::optional<double> median_uncorrelated;
};

PairwiseSummary pairwise_summary(const Matrix& pair_matrix, std::pair<int, int> correlated_pair);

// Demographic-parity unfairness of predicting `target_factor` from the
// latents with respect to `sensitive_factor`: mean over sensitive values of
// the total-variation distance between p(yhat | s) and p(yhat).
double unfairness(const Matrix& latents, const LabelMatrix& labels, int target_factor,
                  int sensitive_factor, const gbt::Params& params = {});

struct EvalParams {
    int mi_bins = 20;
    gbt::Params gbt;
};

// One model's full metric outcome.
struct ScoreReport {
    double mig = 0.0;
    double dci = 0.0;
    double sap = 0.0;
    Matrix pairwise;                       // from tree importance
    PairwiseSummary summary;               // w.r.t. the correlated pair
    double unfairness_first_given_second = 0.0;  // target = first, sensitive = second
    double unfairness_second_given_first = 0.0;
    EvalParams params;

    double unfairness_mean() const {
        return 0.5 * (unfairness_first_given_second + unfairness_second_given_first);
    }
};

ScoreReport evaluate(const Matrix& latents, const LabelMatrix& labels,
                     std::pair<int, int> correlated_pair, const EvalParams& params = {});

nlohmann::json report_to_json(const ScoreReport& report);
ScoreReport report_from_json(const nlohmann::json& j);

}  // namespace corrlab::metrics
