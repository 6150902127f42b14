#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "corrlab/factors.hpp"
#include "corrlab/io.hpp"
#include "support/stats.hpp"

using namespace corrlab;
using factors::CorrelationSpec;
using factors::FactorConfig;
using factors::FactorSpace;
using factors::WeakRegime;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

FactorSpace binary_pair_space() {
    return FactorSpace({{"a", 2}, {"b", 2}, {"c", 3}});
}

}  // namespace

TEST_CASE("factor space validation") {
    CHECK_THROWS_AS(FactorSpace({}), std::domain_error);
    CHECK_THROWS_AS(FactorSpace({{"a", 1}}), std::domain_error);
    CHECK_THROWS_AS(FactorSpace({{"a", 2}, {"a", 3}}), std::domain_error);
    const FactorSpace space = factors::default_space();
    CHECK(space.total_configs() == 8ULL * 8 * 8 * 4 * 4);
}

TEST_CASE("flat index round trip") {
    const FactorSpace space = factors::default_space();
    for (std::uint64_t i : {0ULL, 1ULL, 517ULL, 8191ULL}) {
        const FactorConfig config = factors::config_from_flat(space, i);
        CHECK(factors::flat_index(space, config) == i);
    }
    CHECK_THROWS_AS(factors::config_from_flat(space, space.total_configs()), std::domain_error);
}

TEST_CASE("joint_weight closed form") {
    const FactorSpace space = binary_pair_space();
    const CorrelationSpec uncorrelated{0, 1, kInf};
    CHECK(factors::joint_weight(space, uncorrelated, 0, 1) == 1.0);
    CHECK(factors::joint_weight(space, uncorrelated, 1, 1) == 1.0);

    const CorrelationSpec strong{0, 1, 0.2};
    CHECK(factors::joint_weight(space, strong, 0, 0) == 1.0);
    CHECK(factors::joint_weight(space, strong, 1, 1) == 1.0);
    // Direct evaluation of exp(-(1-0)^2 / (2 * 0.04))
    const double expected = std::exp(-1.0 / (2.0 * 0.2 * 0.2));
    CHECK(factors::joint_weight(space, strong, 0, 1) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(3.7267e-6).epsilon(1e-4));

    CHECK_THROWS_AS(factors::joint_weight(space, strong, 2, 0), std::domain_error);
    CHECK_THROWS_AS(factors::joint_weight(space, CorrelationSpec{0, 0, 0.2}, 0, 0),
                    std::domain_error);
    CHECK_THROWS_AS(factors::joint_weight(space, CorrelationSpec{0, 1, -1.0}, 0, 0),
                    std::domain_error);
}

TEST_CASE("joint_weight reflection symmetry") {
    const FactorSpace space = factors::default_space();
    for (double sigma : {0.2, 0.4, 0.7}) {
        const CorrelationSpec corr{0, 1, sigma};
        for (int va = 0; va < 8; ++va) {
            for (int vb = 0; vb < 8; ++vb) {
                CHECK(factors::joint_weight(space, corr, va, vb) ==
                      doctest::Approx(factors::joint_weight(space, corr, 7 - va, 7 - vb))
                          .epsilon(1e-14));
            }
        }
    }
}

TEST_CASE("joint_table normalization and hand values") {
    const FactorSpace space = binary_pair_space();

    const auto uniform = factors::joint_table(space, {0, 1, kInf});
    for (double p : uniform) CHECK(p == doctest::Approx(0.25).epsilon(1e-14));

    const auto strong = factors::joint_table(space, {0, 1, 0.2});
    const double off = std::exp(-12.5);
    const double total = 2.0 + 2.0 * off;
    CHECK(strong[0] == doctest::Approx(1.0 / total).epsilon(1e-12));  // (0,0)
    CHECK(strong[1] == doctest::Approx(off / total).epsilon(1e-12));  // (0,1)
    // Frozen from the normalization oracle; the four entries sum to one.
    CHECK(strong[0] == doctest::Approx(0.4999981367).epsilon(1e-9));
    CHECK(strong[1] == doctest::Approx(1.8633196e-6).epsilon(1e-6));

    // Sums to one, entries non-negative (several worlds).
    const FactorSpace big = factors::default_space();
    for (double sigma : {0.2, 0.4, 0.7, kInf}) {
        const auto table = factors::joint_table(big, {0, 1, sigma});
        double sum = 0.0;
        for (double p : table) {
            CHECK(p >= 0.0);
            sum += p;
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("off-diagonal mass is monotone in sigma") {
    const FactorSpace space = binary_pair_space();
    auto off_diagonal_mass = [&](double sigma) {
        const auto table = factors::joint_table(space, {0, 1, sigma});
        return table[1] + table[2];
    };
    const double m02 = off_diagonal_mass(0.2);
    const double m04 = off_diagonal_mass(0.4);
    const double m07 = off_diagonal_mass(0.7);
    const double minf = off_diagonal_mass(kInf);
    CHECK(m02 <= m04);
    CHECK(m04 <= m07);
    CHECK(m07 <= minf);
}

TEST_CASE("sample_config marginals and determinism") {
    const FactorSpace space = factors::default_space();

    SUBCASE("uncorrelated marginals are uniform") {
        rng::Stream stream(101);
        const CorrelationSpec corr{0, 1, kInf};
        std::vector<std::vector<double>> counts(5);
        for (int f = 0; f < 5; ++f) counts[f].assign(space.cardinality(f), 0.0);
        const int n = 50000;
        for (int i = 0; i < n; ++i) {
            const FactorConfig c = factors::sample_config(space, corr, stream);
            for (int f = 0; f < 5; ++f) counts[f][c.values[f]] += 1.0;
        }
        for (int f = 0; f < 5; ++f) {
            std::vector<double> probs(space.cardinality(f),
                                      1.0 / static_cast<double>(space.cardinality(f)));
            CHECK(teststats::chi2_fits(counts[f], probs, n));
        }
    }

    SUBCASE("strong correlation concentrates the pair") {
        rng::Stream stream(102);
        const FactorSpace binary = binary_pair_space();
        const CorrelationSpec corr{0, 1, 0.2};
        int off = 0;
        const int n = 50000;
        for (int i = 0; i < n; ++i) {
            const FactorConfig c = factors::sample_config(binary, corr, stream);
            if (c.values[0] != c.values[1]) off += 1;
        }
        CHECK(static_cast<double>(off) / n < 0.001);
    }

    SUBCASE("fixed seed reproduces the sequence") {
        const CorrelationSpec corr{0, 1, 0.4};
        rng::Stream s1(7), s2(7);
        for (int i = 0; i < 200; ++i) {
            CHECK(factors::sample_config(space, corr, s1).values ==
                  factors::sample_config(space, corr, s2).values);
        }
    }
}

TEST_CASE("render determinism and structure") {
    const FactorSpace space = factors::default_space();
    const factors::RenderConfig rc = factors::default_render();

    const FactorConfig config{{3, 2, 5, 1, 2}};
    const auto a = factors::render(space, config, rc);
    const auto b = factors::render(space, config, rc);
    CHECK(a.pixels == b.pixels);
    for (double p : a.pixels) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }

    SUBCASE("background-only change touches only outside pixels") {
        const FactorConfig c1{{3, 2, 5, 1, 0}};
        const FactorConfig c2{{3, 2, 5, 1, 3}};
        const auto r1 = factors::render(space, c1, rc);
        const auto r2 = factors::render(space, c2, rc);
        bool outside_changed = false;
        for (std::size_t i = 0; i < r1.pixels.size(); ++i) {
            const bool inside = r1.pixels[i] > 0.5;  // fill values start at 0.55
            if (inside) {
                CHECK(r1.pixels[i] == r2.pixels[i]);
            } else if (r1.pixels[i] != r2.pixels[i]) {
                outside_changed = true;
            }
        }
        CHECK(outside_changed);
    }

    SUBCASE("mismatched space is rejected") {
        const FactorSpace wrong({{"a", 2}, {"b", 2}});
        CHECK_THROWS_AS(factors::render(wrong, FactorConfig{{0, 0}}, rc), std::domain_error);
        CHECK_THROWS_AS(factors::render(space, FactorConfig{{0, 0}}, rc), std::domain_error);
        CHECK_THROWS_AS(factors::render(space, FactorConfig{{9, 0, 0, 0, 0}}, rc),
                        std::domain_error);
    }
}

TEST_CASE("render is injective over the full default grid") {
    const FactorSpace space = factors::default_space();
    const factors::RenderConfig rc = factors::default_render();
    std::set<std::uint64_t> hashes;
    for (std::uint64_t i = 0; i < space.total_configs(); ++i) {
        const auto obs = factors::render(space, factors::config_from_flat(space, i), rc);
        hashes.insert(io::hash_doubles(obs.pixels));
    }
    CHECK(hashes.size() == space.total_configs());
}

namespace {

// Exact pooled law of the correlated pair over both members of an
// observational weak pair, derived from joint_table by enumeration.
std::vector<double> pooled_pair_law_observational(const FactorSpace& space,
                                                  const CorrelationSpec& corr) {
    const int ca = space.cardinality(corr.first);
    const int cb = space.cardinality(corr.second);
    const auto table = factors::joint_table(space, corr);
    const int n_factors = space.count();

    auto t = [&](int a, int b) { return table[static_cast<std::size_t>(a) * cb + b]; };
    std::vector<double> p_b(cb, 0.0), p_a(ca, 0.0);
    for (int a = 0; a < ca; ++a) {
        for (int b = 0; b < cb; ++b) {
            p_a[a] += t(a, b);
            p_b[b] += t(a, b);
        }
    }

    // Member 2 law when the changed factor is `first`: partner b keeps its
    // marginal, the old value a0 follows t(a0|b), the new value x follows the
    // conditional restricted to x != a0.
    std::vector<double> member2_first(static_cast<std::size_t>(ca) * cb, 0.0);
    for (int b = 0; b < cb; ++b) {
        if (p_b[b] <= 0.0) continue;
        for (int a0 = 0; a0 < ca; ++a0) {
            const double p_a0 = t(a0, b) / p_b[b];
            if (p_a0 <= 0.0) continue;
            double z = 0.0;
            for (int x = 0; x < ca; ++x) {
                if (x != a0) z += t(x, b) / p_b[b];
            }
            for (int x = 0; x < ca; ++x) {
                if (x == a0 || z <= 0.0) continue;
                member2_first[static_cast<std::size_t>(x) * cb + b] +=
                    p_b[b] * p_a0 * (t(x, b) / p_b[b]) / z;
            }
        }
    }
    std::vector<double> member2_second(static_cast<std::size_t>(ca) * cb, 0.0);
    for (int a = 0; a < ca; ++a) {
        if (p_a[a] <= 0.0) continue;
        for (int b0 = 0; b0 < cb; ++b0) {
            const double p_b0 = t(a, b0) / p_a[a];
            if (p_b0 <= 0.0) continue;
            double z = 0.0;
            for (int x = 0; x < cb; ++x) {
                if (x != b0) z += t(a, x) / p_a[a];
            }
            for (int x = 0; x < cb; ++x) {
                if (x == b0 || z <= 0.0) continue;
                member2_second[static_cast<std::size_t>(a) * cb + x] +=
                    p_a[a] * p_b0 * (t(a, x) / p_a[a]) / z;
            }
        }
    }

    const double q = 1.0 / static_cast<double>(n_factors);
    std::vector<double> law(static_cast<std::size_t>(ca) * cb, 0.0);
    for (int a = 0; a < ca; ++a) {
        for (int b = 0; b < cb; ++b) {
            const std::size_t idx = static_cast<std::size_t>(a) * cb + b;
            const double member1 = t(a, b);
            const double member2 = (1.0 - 2.0 * q) * t(a, b) + q * member2_first[idx] +
                                   q * member2_second[idx];
            law[idx] = 0.5 * (member1 + member2);
        }
    }
    return law;
}

}  // namespace

TEST_CASE("weak pairs differ in exactly one named coordinate") {
    const FactorSpace space = factors::default_space();
    for (double sigma : {0.2, kInf}) {
        const CorrelationSpec corr{0, 1, sigma};
        for (WeakRegime regime : {WeakRegime::Observational, WeakRegime::InterventionalI1,
                                  WeakRegime::InterventionalI2}) {
            rng::Stream stream(0xABCDULL + static_cast<std::uint64_t>(sigma == kInf));
            for (int i = 0; i < 10000 / 3; ++i) {
                const auto pair = factors::sample_weak_pair(space, corr, regime, stream);
                factors::validate_config(space, pair.first);
                factors::validate_config(space, pair.second);
                int diffs = 0;
                for (int f = 0; f < space.count(); ++f) {
                    if (pair.first.values[f] != pair.second.values[f]) {
                        diffs += 1;
                        REQUIRE(f == pair.changed_index);
                    }
                }
                REQUIRE(diffs == 1);
            }
        }
    }
}

TEST_CASE("all regimes coincide in the uncorrelated limit") {
    const FactorSpace space = factors::default_space();
    const CorrelationSpec corr{0, 1, kInf};
    const int n = 50000;

    auto histogram = [&](WeakRegime regime, std::uint64_t seed) {
        rng::Stream stream(seed);
        // (changed factor, old value, new value) pooled histogram
        std::vector<double> h(static_cast<std::size_t>(space.count()) * 8 * 8, 0.0);
        for (int i = 0; i < n; ++i) {
            const auto pair = factors::sample_weak_pair(space, corr, regime, stream);
            const int f = pair.changed_index;
            const int oldv = pair.first.values[f];
            const int newv = pair.second.values[f];
            h[(static_cast<std::size_t>(f) * 8 + oldv) * 8 + newv] += 1.0;
        }
        return h;
    };

    const auto obs = histogram(WeakRegime::Observational, 900);
    const auto i1 = histogram(WeakRegime::InterventionalI1, 901);
    const auto i2 = histogram(WeakRegime::InterventionalI2, 902);
    CHECK(teststats::chi2_same_distribution(obs, i1));
    CHECK(teststats::chi2_same_distribution(obs, i2));
    CHECK(teststats::chi2_same_distribution(i1, i2));
}

TEST_CASE("observational pooled pair law matches the derived oracle") {
    const FactorSpace space = factors::default_space();

    // Counting both members of one pair would double-count dependent samples
    // and inflate the chi-square statistic, so each draw contributes one
    // member, alternating: an iid sample of the pooled (equal-mixture) law.
    SUBCASE("uncorrelated: pooled law equals joint_table") {
        const CorrelationSpec corr{0, 1, kInf};
        const auto table = factors::joint_table(space, corr);
        rng::Stream stream(321);
        std::vector<double> counts(64, 0.0);
        const int n = 50000;
        for (int i = 0; i < n; ++i) {
            const auto pair = factors::sample_weak_pair(space, corr, WeakRegime::Observational,
                                                        stream);
            const FactorConfig& member = i % 2 == 0 ? pair.first : pair.second;
            counts[static_cast<std::size_t>(member.values[0]) * 8 + member.values[1]] += 1.0;
        }
        CHECK(teststats::chi2_fits(counts, table, n));
    }

    SUBCASE("sigma 0.2: pooled law matches enumeration of the sampler kernel") {
        const CorrelationSpec corr{0, 1, 0.2};
        const auto law = pooled_pair_law_observational(space, corr);
        rng::Stream stream(322);
        std::vector<double> counts(64, 0.0);
        const int n = 50000;
        for (int i = 0; i < n; ++i) {
            const auto pair = factors::sample_weak_pair(space, corr, WeakRegime::Observational,
                                                        stream);
            const FactorConfig& member = i % 2 == 0 ? pair.first : pair.second;
            counts[static_cast<std::size_t>(member.values[0]) * 8 + member.values[1]] += 1.0;
        }
        CHECK(teststats::chi2_fits(counts, law, n));
    }
}

TEST_CASE("observational regime respects the conditional when changing a correlated factor") {
    // Binary correlated pair at sigma 0.2: the first member's pair follows
    // joint_table (diagonal mass ~1) and the changed value is the forced
    // alternative drawn from the conditional restricted to differ.
    const FactorSpace space = binary_pair_space();
    const CorrelationSpec corr{0, 1, 0.2};
    const auto table = factors::joint_table(space, corr);
    rng::Stream stream(555);
    std::vector<double> first_counts(4, 0.0);
    int flips = 0, changed_correlated = 0;
    for (int i = 0; i < 50000; ++i) {
        const auto pair = factors::sample_weak_pair(space, corr, WeakRegime::Observational,
                                                    stream);
        if (pair.changed_index != 0) continue;
        changed_correlated += 1;
        first_counts[static_cast<std::size_t>(pair.first.values[0]) * 2 + pair.first.values[1]] +=
            1.0;
        if (pair.second.values[0] == 1 - pair.first.values[0]) flips += 1;
    }
    REQUIRE(changed_correlated > 5000);
    CHECK(flips == changed_correlated);  // binary conditional-minus-current is the flip
    CHECK(teststats::chi2_fits(first_counts, table, changed_correlated));
}

TEST_CASE("interventional regimes: uniform cause, conditional effect") {
    const FactorSpace space = factors::default_space();
    const CorrelationSpec corr{0, 1, 0.2};
    const auto table = factors::joint_table(space, corr);
    auto conditional_excluding = [&](int fixed_a, int old_b) {
        std::vector<double> probs(8, 0.0);
        double z = 0.0;
        for (int x = 0; x < 8; ++x) {
            if (x == old_b) continue;
            probs[x] = table[static_cast<std::size_t>(fixed_a) * 8 + x];
            z += probs[x];
        }
        for (double& p : probs) p /= z;
        return probs;
    };

    SUBCASE("I-1 resamples a changed correlated factor uniformly") {
        rng::Stream stream(606);
        std::vector<double> counts(8, 0.0);
        int total = 0;
        for (int i = 0; i < 60000; ++i) {
            const auto pair = factors::sample_weak_pair(space, corr,
                                                        WeakRegime::InterventionalI1, stream);
            if (pair.changed_index != 0) continue;
            // New value should be uniform over the 7 values != old.
            const int oldv = pair.first.values[0];
            const int newv = pair.second.values[0];
            REQUIRE(newv != oldv);
            counts[newv] += 1.0;
            total += 1;
        }
        // Marginalized over the old value (itself conditional-distributed),
        // uniformity over the remaining values implies each new value shows
        // up with probability sum_old p(old) * [new != old] / 7.
        std::vector<double> marginal_old(8, 0.0);
        {
            rng::Stream probe(606);
            // empirical old-value distribution from the same stream replay
            for (int i = 0; i < 60000; ++i) {
                const auto pair = factors::sample_weak_pair(space, corr,
                                                            WeakRegime::InterventionalI1, probe);
                if (pair.changed_index != 0) continue;
                marginal_old[pair.first.values[0]] += 1.0;
            }
            double z = 0.0;
            for (double v : marginal_old) z += v;
            for (double& v : marginal_old) v /= z;
        }
        std::vector<double> expected(8, 0.0);
        for (int oldv = 0; oldv < 8; ++oldv) {
            for (int newv = 0; newv < 8; ++newv) {
                if (newv != oldv) expected[newv] += marginal_old[oldv] / 7.0;
            }
        }
        CHECK(teststats::chi2_fits(counts, expected, total));
    }

    SUBCASE("I-2 draws the effect from its conditional given the cause") {
        rng::Stream stream(707);
        // Conditioned on (changed == effect, cause value, old effect value),
        // the new effect value follows the exclusion conditional.
        std::vector<double> counts(8, 0.0);
        std::vector<double> expected(8, 0.0);
        int total = 0;
        for (int i = 0; i < 60000; ++i) {
            const auto pair = factors::sample_weak_pair(space, corr,
                                                        WeakRegime::InterventionalI2, stream);
            if (pair.changed_index != 1) continue;
            const int cause = pair.first.values[0];
            const int old_effect = pair.first.values[1];
            const int new_effect = pair.second.values[1];
            REQUIRE(new_effect != old_effect);
            counts[new_effect] += 1.0;
            const auto cond = conditional_excluding(cause, old_effect);
            for (int x = 0; x < 8; ++x) expected[x] += cond[x];
            total += 1;
        }
        for (double& e : expected) e /= static_cast<double>(total);
        CHECK(teststats::chi2_fits(counts, expected, total));
    }

    SUBCASE("I-2 resamples the cause uniformly") {
        rng::Stream stream(808);
        int seen = 0;
        std::vector<double> counts(8, 0.0);
        std::vector<double> old_dist(8, 0.0);
        for (int i = 0; i < 60000; ++i) {
            const auto pair = factors::sample_weak_pair(space, corr,
                                                        WeakRegime::InterventionalI2, stream);
            if (pair.changed_index != 0) continue;
            counts[pair.second.values[0]] += 1.0;
            old_dist[pair.first.values[0]] += 1.0;
            seen += 1;
        }
        double z = 0.0;
        for (double v : old_dist) z += v;
        for (double& v : old_dist) v /= z;
        std::vector<double> expected(8, 0.0);
        for (int oldv = 0; oldv < 8; ++oldv) {
            for (int newv = 0; newv < 8; ++newv) {
                if (newv != oldv) expected[newv] += old_dist[oldv] / 7.0;
            }
        }
        CHECK(teststats::chi2_fits(counts, expected, seen));
    }
}
