#include "corrlab/factors.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace corrlab::factors {

namespace {

double normalized(const FactorSpace& space, int factor, int value) {
    const int maxv = space.max_value(factor);
    return static_cast<double>(value) / static_cast<double>(maxv);
}

// Draw an index from an unnormalized weight vector.
std::size_t sample_discrete(const std::vector<double>& weights, rng::Stream& stream) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw std::domain_error("sample_discrete: zero total weight");
    const double u = stream.uniform01() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    return weights.size() - 1;
}

}  // namespace

FactorSpace::FactorSpace(std::vector<Factor> factors) : factors_(std::move(factors)) {
    if (factors_.empty()) throw std::domain_error("FactorSpace: no factors");
    std::set<std::string> names;
    for (const auto& f : factors_) {
        if (f.cardinality < 2) {
            throw std::domain_error("FactorSpace: cardinality of '" + f.name + "' must be >= 2");
        }
        if (!names.insert(f.name).second) {
            throw std::domain_error("FactorSpace: duplicate factor name '" + f.name + "'");
        }
        const std::uint64_t card = static_cast<std::uint64_t>(f.cardinality);
        if (total_ > std::numeric_limits<std::uint64_t>::max() / card) {
            throw std::domain_error("FactorSpace: configuration count overflows 64 bits");
        }
        total_ *= card;
    }
}

void validate_config(const FactorSpace& space, const FactorConfig& config) {
    if (static_cast<int>(config.values.size()) != space.count()) {
        throw std::domain_error("FactorConfig: wrong number of values");
    }
    for (int i = 0; i < space.count(); ++i) {
        const int v = config.values[static_cast<std::size_t>(i)];
        if (v < 0 || v > space.max_value(i)) {
            throw std::domain_error("FactorConfig: value out of range for factor '" +
                                    space.at(i).name + "'");
        }
    }
}

std::uint64_t flat_index(const FactorSpace& space, const FactorConfig& config) {
    validate_config(space, config);
    std::uint64_t index = 0;
    for (int i = 0; i < space.count(); ++i) {
        index = index * static_cast<std::uint64_t>(space.cardinality(i)) +
                static_cast<std::uint64_t>(config.values[static_cast<std::size_t>(i)]);
    }
    return index;
}

FactorConfig config_from_flat(const FactorSpace& space, std::uint64_t index) {
    if (index >= space.total_configs()) throw std::domain_error("config_from_flat: out of range");
    FactorConfig config;
    config.values.assign(static_cast<std::size_t>(space.count()), 0);
    for (int i = space.count() - 1; i >= 0; --i) {
        const std::uint64_t card = static_cast<std::uint64_t>(space.cardinality(i));
        config.values[static_cast<std::size_t>(i)] = static_cast<int>(index % card);
        index /= card;
    }
    return config;
}

bool CorrelationSpec::uncorrelated() const { return std::isinf(sigma); }

void validate_correlation(const FactorSpace& space, const CorrelationSpec& corr) {
    if (corr.first == corr.second) {
        throw std::domain_error("CorrelationSpec: pair indices must differ");
    }
    if (corr.first < 0 || corr.first >= space.count() || corr.second < 0 ||
        corr.second >= space.count()) {
        throw std::domain_error("CorrelationSpec: pair index out of range");
    }
    if (!(corr.sigma > 0.0)) throw std::domain_error("CorrelationSpec: sigma must be positive");
}

double joint_weight(const FactorSpace& space, const CorrelationSpec& corr, int va, int vb) {
    validate_correlation(space, corr);
    if (va < 0 || va > space.max_value(corr.first) || vb < 0 || vb > space.max_value(corr.second)) {
        throw std::domain_error("joint_weight: value out of range for correlated pair");
    }
    if (corr.uncorrelated()) return 1.0;
    const double da = normalized(space, corr.first, va);
    const double db = normalized(space, corr.second, vb);
    const double diff = da - db;
    return std::exp(-(diff * diff) / (2.0 * corr.sigma * corr.sigma));
}

std::vector<double> joint_table(const FactorSpace& space, const CorrelationSpec& corr) {
    validate_correlation(space, corr);
    const int ca = space.cardinality(corr.first);
    const int cb = space.cardinality(corr.second);
    std::vector<double> table(static_cast<std::size_t>(ca) * static_cast<std::size_t>(cb));
    double total = 0.0;
    for (int va = 0; va < ca; ++va) {
        for (int vb = 0; vb < cb; ++vb) {
            const double w = joint_weight(space, corr, va, vb);
            table[static_cast<std::size_t>(va) * cb + vb] = w;
            total += w;
        }
    }
    for (double& w : table) w /= total;
    return table;
}

FactorConfig sample_config(const FactorSpace& space, const CorrelationSpec& corr,
                           rng::Stream& stream) {
    const std::vector<double> table = joint_table(space, corr);
    const std::size_t cell = sample_discrete(table, stream);
    const int cb = space.cardinality(corr.second);
    FactorConfig config;
    config.values.assign(static_cast<std::size_t>(space.count()), 0);
    for (int i = 0; i < space.count(); ++i) {
        config.values[static_cast<std::size_t>(i)] =
            static_cast<int>(stream.uniform_int(static_cast<std::uint64_t>(space.cardinality(i))));
    }
    config.values[static_cast<std::size_t>(corr.first)] = static_cast<int>(cell) / cb;
    config.values[static_cast<std::size_t>(corr.second)] = static_cast<int>(cell) % cb;
    return config;
}

FactorSpace default_space() {
    return FactorSpace({{"size", 8}, {"pos_x", 8}, {"pos_y", 8}, {"fill", 4}, {"background", 4}});
}

RenderConfig default_render() { return RenderConfig{}; }

Observation render(const FactorSpace& space, const FactorConfig& config,
                   const RenderConfig& render_cfg) {
    if (space.count() != 5) {
        throw std::domain_error("render: expected a 5-factor space (size, pos-x, pos-y, fill, bg)");
    }
    if (render_cfg.width < 12 || render_cfg.height < 12) {
        throw std::domain_error("render: image too small for the sprite world");
    }
    validate_config(space, config);

    const double c_size = normalized(space, 0, config.values[0]);
    const double c_px = normalized(space, 1, config.values[1]);
    const double c_py = normalized(space, 2, config.values[2]);
    const double c_fill = normalized(space, 3, config.values[3]);
    const double c_bg = normalized(space, 4, config.values[4]);

    const int side = 2 + static_cast<int>(std::lround(7.0 * c_size));
    const int x0 = static_cast<int>(std::lround(c_px * (render_cfg.width - side)));
    const int y0 = static_cast<int>(std::lround(c_py * (render_cfg.height - side)));
    // Fill values stay strictly above every background shade, so the sprite
    // never blends into the backdrop and the config -> image map is injective.
    const double fill = 0.55 + 0.45 * c_fill;
    const double background = 0.30 * c_bg;

    Observation obs;
    obs.pixels.assign(static_cast<std::size_t>(render_cfg.width) * render_cfg.height, background);
    for (int y = y0; y < y0 + side; ++y) {
        for (int x = x0; x < x0 + side; ++x) {
            obs.pixels[static_cast<std::size_t>(y) * render_cfg.width + x] = fill;
        }
    }
    return obs;
}

const char* regime_name(WeakRegime regime) {
    switch (regime) {
        case WeakRegime::Observational: return "observational";
        case WeakRegime::InterventionalI1: return "interventional_i1";
        case WeakRegime::InterventionalI2: return "interventional_i2";
    }
    return "unknown";
}

namespace {

// Weights for the replacement value of a changed correlated factor, given the
// fixed value of the other one. The current value is excluded so the emitted
// pair always differs in exactly one coordinate.
std::vector<double> conditional_weights(const FactorSpace& space, const CorrelationSpec& corr,
                                        int changed, int other_value, int current_value) {
    const int card = space.cardinality(changed);
    std::vector<double> weights(static_cast<std::size_t>(card), 0.0);
    for (int v = 0; v < card; ++v) {
        if (v == current_value) continue;
        weights[static_cast<std::size_t>(v)] =
            changed == corr.first ? joint_weight(space, corr, v, other_value)
                                  : joint_weight(space, corr, other_value, v);
    }
    return weights;
}

int uniform_excluding(int cardinality, int current, rng::Stream& stream) {
    const int v = static_cast<int>(stream.uniform_int(static_cast<std::uint64_t>(cardinality - 1)));
    return v >= current ? v + 1 : v;
}

}  // namespace

WeakPair sample_weak_pair(const FactorSpace& space, const CorrelationSpec& corr,
                          WeakRegime regime, rng::Stream& stream) {
    validate_correlation(space, corr);
    WeakPair pair;
    pair.first = sample_config(space, corr, stream);
    pair.second = pair.first;
    const int changed = static_cast<int>(stream.uniform_int(static_cast<std::uint64_t>(space.count())));
    pair.changed_index = changed;

    const int current = pair.first.values[static_cast<std::size_t>(changed)];
    const bool is_first = changed == corr.first;
    const bool is_second = changed == corr.second;

    bool conditional = false;
    if ((is_first || is_second) && !corr.uncorrelated()) {
        switch (regime) {
            case WeakRegime::Observational:
                conditional = true;
                break;
            case WeakRegime::InterventionalI1:
                conditional = false;
                break;
            case WeakRegime::InterventionalI2:
                // The pair is read causally as first -> second; the effect is
                // never resampled uniformly, the cause always is.
                conditional = is_second;
                break;
        }
    }

    int replacement;
    if (conditional) {
        const int other = is_first ? corr.second : corr.first;
        const int other_value = pair.first.values[static_cast<std::size_t>(other)];
        const auto weights = conditional_weights(space, corr, changed, other_value, current);
        replacement = static_cast<int>(sample_discrete(weights, stream));
    } else {
        replacement = uniform_excluding(space.cardinality(changed), current, stream);
    }
    pair.second.values[static_cast<std::size_t>(changed)] = replacement;
    return pair;
}

}  // namespace corrlab::factors
