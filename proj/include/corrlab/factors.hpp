#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "corrlab/rng.hpp"

namespace corrlab::factors {

struct Factor {
    std::string name;
    int cardinality = 0;
};

// Ordered list of discrete ground-truth factors. Validated on construction:
// unique names, every cardinality >= 2, non-empty.
class FactorSpace {
public:
    explicit FactorSpace(std::vector<Factor> factors);

    int count() const { return static_cast<int>(factors_.size()); }
    const Factor& at(int i) const { return factors_.at(static_cast<std::size_t>(i)); }
    int cardinality(int i) const { return at(i).cardinality; }
    int max_value(int i) const { return at(i).cardinality - 1; }
    std::uint64_t total_configs() const { return total_; }
    const std::vector<Factor>& factors() const { return factors_; }

private:
    std::vector<Factor> factors_;
    std::uint64_t total_ = 1;
};

// One point in the factor grid.
struct FactorConfig {
    std::vector<int> values;
};

void validate_config(const FactorSpace& space, const FactorConfig& config);

// Enumeration helpers over the full grid (row-major in factor order).
std::uint64_t flat_index(const FactorSpace& space, const FactorConfig& config);
FactorConfig config_from_flat(const FactorSpace& space, std::uint64_t index);

// Which pair of factors is correlated and how strongly. sigma is expressed in
// normalized units (factor values mapped to [0,1]); +infinity means
// uncorrelated.
struct CorrelationSpec {
    int first = 0;
    int second = 1;
    double sigma = 0.0;

    bool uncorrelated() const;
};

void validate_correlation(const FactorSpace& space, const CorrelationSpec& corr);

// Unnormalized weight of the pair value (va, vb) under the correlated joint:
// exp(-(norm(va) - norm(vb))^2 / (2 sigma^2)); 1 everywhere when sigma = inf.
double joint_weight(const FactorSpace& space, const CorrelationSpec& corr, int va, int vb);

// Normalized probability table over the correlated pair, row-major
// [va * cardinality_b + vb]. All other factors are implicitly uniform.
std::vector<double> joint_table(const FactorSpace& space, const CorrelationSpec& corr);

// Draw a full configuration: correlated pair from joint_table, the rest
// independent uniform.
FactorConfig sample_config(const FactorSpace& space, const CorrelationSpec& corr,
                           rng::Stream& stream);

// ---------------------------------------------------------------------------
// Procedural renderer
// ---------------------------------------------------------------------------

struct RenderConfig {
    int width = 16;
    int height = 16;
};

// Grayscale image, pixel values in [0,1], row-major, length width*height.
struct Observation {
    std::vector<double> pixels;
};

// The default world: a filled square whose geometry and shading are driven by
// five factors (size, pos-x, pos-y, fill intensity, background shade). The
// full 8*8*8*4*4 grid renders to pairwise-distinct images.
FactorSpace default_space();
RenderConfig default_render();

Observation render(const FactorSpace& space, const FactorConfig& config,
                   const RenderConfig& render_cfg);

// ---------------------------------------------------------------------------
// Weak-supervision pair samplers
// ---------------------------------------------------------------------------

enum class WeakRegime {
    // Pairs drawn from the observational distribution; a changed correlated
    // factor is redrawn from its conditional given the other one, so the
    // correlation is never broken.
    Observational,
    // Confounded scenario: a changed correlated factor is resampled uniformly.
    InterventionalI1,
    // Causal scenario (first -> second): the cause may be resampled uniformly,
    // the effect only from its conditional given the cause.
    InterventionalI2,
};

const char* regime_name(WeakRegime regime);

struct WeakPair {
    FactorConfig first;
    FactorConfig second;
    int changed_index = -1;
};

// Emits a pair of configurations differing in exactly one factor, chosen
// uniformly at random, with the replacement value drawn per the regime.
WeakPair sample_weak_pair(const FactorSpace& space, const CorrelationSpec& corr,
                          WeakRegime regime, rng::Stream& stream);

}  // namespace corrlab::factors
