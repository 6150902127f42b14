#pragma once

// Test-only statistics helpers: chi-square goodness-of-fit against a known
// distribution and the two-sample homogeneity variant. Critical values come
// from the Wilson-Hilferty approximation, accurate to a few per mille for the
// degrees of freedom used here.

#include <cmath>
#include <cstddef>
#include <vector>

namespace teststats {

// Upper critical value of chi-square with df degrees of freedom at the given
// upper-tail probability (z is the standard-normal quantile for that tail).
inline double chi2_critical(double df, double z_upper) {
    const double t = 2.0 / (9.0 * df);
    const double base = 1.0 - t + z_upper * std::sqrt(t);
    return df * base * base * base;
}

inline double z_for_alpha(double alpha) {
    // Tails used by the suite.
    if (alpha == 0.01) return 2.3263478740408408;
    if (alpha == 0.001) return 3.090232306167813;
    return 1.6448536269514722;  // 0.05
}

// Goodness of fit of observed counts against expected probabilities.
// Returns the chi-square statistic; cells with tiny expectation are pooled
// into their neighbor to keep the approximation sound.
inline double chi2_statistic(const std::vector<double>& observed,
                             const std::vector<double>& expected_probs, double total,
                             std::size_t* df_out) {
    double stat = 0.0;
    std::size_t used = 0;
    double pooled_obs = 0.0;
    double pooled_exp = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double expected = expected_probs[i] * total;
        if (expected < 5.0) {
            pooled_obs += observed[i];
            pooled_exp += expected;
            if (pooled_exp >= 5.0) {
                const double d = pooled_obs - pooled_exp;
                stat += d * d / pooled_exp;
                used += 1;
                pooled_obs = 0.0;
                pooled_exp = 0.0;
            }
            continue;
        }
        const double d = observed[i] - expected;
        stat += d * d / expected;
        used += 1;
    }
    if (pooled_exp > 0.0) {
        const double d = pooled_obs - pooled_exp;
        stat += d * d / pooled_exp;
        used += 1;
    }
    if (df_out) *df_out = used > 1 ? used - 1 : 1;
    return stat;
}

// True when the observed counts are consistent with the expected probabilities
// at significance alpha (i.e. the p-value exceeds alpha).
inline bool chi2_fits(const std::vector<double>& observed,
                      const std::vector<double>& expected_probs, double total,
                      double alpha = 0.01) {
    std::size_t df = 1;
    const double stat = chi2_statistic(observed, expected_probs, total, &df);
    return stat < chi2_critical(static_cast<double>(df), z_for_alpha(alpha));
}

// Two-sample chi-square homogeneity test on count vectors a and b.
inline bool chi2_same_distribution(const std::vector<double>& a, const std::vector<double>& b,
                                   double alpha = 0.01) {
    double na = 0.0, nb = 0.0;
    for (double v : a) na += v;
    for (double v : b) nb += v;
    const double ka = std::sqrt(nb / na);
    const double kb = std::sqrt(na / nb);
    double stat = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double sum = a[i] + b[i];
        if (sum < 5.0) continue;  // sparse cells contribute noise, skip
        const double d = ka * a[i] - kb * b[i];
        stat += d * d / sum;
        used += 1;
    }
    const double df = used > 1 ? static_cast<double>(used - 1) : 1.0;
    return stat < chi2_critical(df, z_for_alpha(alpha));
}

}  // namespace teststats
