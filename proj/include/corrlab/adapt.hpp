#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>

#include <nlohmann/json_fwd.hpp>

#include "corrlab/gbt.hpp"
#include "corrlab/matrix.hpp"
#include "corrlab/nnkit.hpp"

namespace corrlab::adapt {

enum class SubstitutionKind { Linear, Mlp };

const char* substitution_kind_name(SubstitutionKind kind);

// f: (z_i, z_j) -> (c_a, c_b), predicting the two correlated factor values
// from the two selected latent dimensions. Predictions are integers on the
// factor grid; when written back into the latent matrix they are normalized
// to value / max so the latent scale stays comparable.
struct SubstitutionFn {
    SubstitutionKind kind = SubstitutionKind::Linear;
    int dim_i = 0;
    int dim_j = 1;
    int card_a = 2;
    int card_b = 2;
    // Linear: per factor, prediction = w[0]*z_i + w[1]*z_j + w[2].
    std::array<double, 3> linear_a{};
    std::array<double, 3> linear_b{};
    // Mlp: per factor, a one-hidden-layer classifier over the factor's values.
    std::optional<nn::Network> mlp_a;
    std::optional<nn::Network> mlp_b;

    std::pair<int, int> predict(double zi, double zj) const;
};

// Pick the latent dimension most responsible for each of the two correlated
// factors, from a boosted-tree importance fit on the labeled subset only.
// If both factors select the same latent, the factor whose importance gap
// (top minus second) is smaller falls back to its second-best dimension.
std::pair<int, int> identify_entangled_dims(const Matrix& labeled_latents,
                                            const LabelMatrix& labeled_pair_values,
                                            const gbt::Params& params = {});

// Fit the substitution function on M labeled samples. `latents2` holds the
// two selected dims (M x 2); `dims` records which latent columns they were.
SubstitutionFn fit_substitution(const Matrix& latents2, const LabelMatrix& labels_pair,
                                std::pair<int, int> dims, std::pair<int, int> cardinalities,
                                SubstitutionKind kind, std::uint64_t seed = 0);

// Replace columns dim_i/dim_j with normalized predictions; all other columns
// pass through untouched. Rows already holding on-grid normalized values are
// treated as previously substituted and left alone, which makes the operation
// idempotent.
Matrix apply_substitution(const Matrix& latents, const SubstitutionFn& fn);

nlohmann::json substitution_to_json(const SubstitutionFn& fn);
SubstitutionFn substitution_from_json(const nlohmann::json& j);

}  // namespace corrlab::adapt
