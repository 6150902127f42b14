#include "corrlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace corrlab::metrics {

namespace {

void check_sample_counts(const Matrix& latents, const LabelMatrix& labels) {
    if (latents.rows != labels.rows || latents.rows == 0) {
        throw std::domain_error("metrics: latent/label sample counts do not match");
    }
}

// Dense remap of one label column to 0..K-1 over the values present.
std::pair<std::vector<int>, int> dense_labels(const LabelMatrix& labels, std::size_t column) {
    std::map<int, int> remap;
    for (std::size_t r = 0; r < labels.rows; ++r) remap.emplace(labels.at(r, column), 0);
    int next = 0;
    for (auto& [value, id] : remap) id = next++;
    std::vector<int> out(labels.rows);
    for (std::size_t r = 0; r < labels.rows; ++r) out[r] = remap[labels.at(r, column)];
    return {std::move(out), next};
}

// Equal-frequency binning by rank; ties share the bin of their first rank so
// the assignment depends only on the ordering of the values.
std::pair<std::vector<int>, int> quantile_bins(std::span<const double> values, int bins) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) return values[a] < values[b];
        return a < b;
    });
    std::vector<int> bin(n, 0);
    int max_bin = -1;
    std::size_t block_start = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && values[order[i]] != values[order[i - 1]]) block_start = i;
        const int b = static_cast<int>(block_start * static_cast<std::size_t>(bins) / n);
        bin[order[i]] = b;
        max_bin = std::max(max_bin, b);
    }
    return {std::move(bin), max_bin + 1};
}

double entropy(std::span<const double> probs) {
    double h = 0.0;
    for (double p : probs) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

}  // namespace

ImportanceMatrix mi_importance(const Matrix& latents, const LabelMatrix& labels, int bins) {
    check_sample_counts(latents, labels);
    if (bins < 2) throw std::domain_error("mi_importance: bins must be >= 2");
    const std::size_t n = latents.rows;
    ImportanceMatrix result(labels.cols, latents.cols, ImportanceSource::MutualInformation);

    for (std::size_t j = 0; j < latents.cols; ++j) {
        std::vector<double> column(n);
        for (std::size_t r = 0; r < n; ++r) column[r] = latents.at(r, j);
        auto [bin, n_bins] = quantile_bins(column, bins);

        for (std::size_t i = 0; i < labels.cols; ++i) {
            auto [y, n_classes] = dense_labels(labels, i);
            std::vector<double> joint(static_cast<std::size_t>(n_classes) * n_bins, 0.0);
            std::vector<double> p_label(static_cast<std::size_t>(n_classes), 0.0);
            std::vector<double> p_bin(static_cast<std::size_t>(n_bins), 0.0);
            const double weight = 1.0 / static_cast<double>(n);
            for (std::size_t r = 0; r < n; ++r) {
                joint[static_cast<std::size_t>(y[r]) * n_bins + bin[r]] += weight;
                p_label[static_cast<std::size_t>(y[r])] += weight;
                p_bin[static_cast<std::size_t>(bin[r])] += weight;
            }
            double mi = 0.0;
            for (int c = 0; c < n_classes; ++c) {
                for (int b = 0; b < n_bins; ++b) {
                    const double pj = joint[static_cast<std::size_t>(c) * n_bins + b];
                    if (pj > 0.0) {
                        mi += pj * std::log(pj / (p_label[static_cast<std::size_t>(c)] *
                                                  p_bin[static_cast<std::size_t>(b)]));
                    }
                }
            }
            const double h = entropy(p_label);
            result.at(i, j) = h > 0.0 ? std::clamp(mi / h, 0.0, 1.0) : 0.0;
        }
    }
    return result;
}

ImportanceMatrix tree_importance(const Matrix& latents, const LabelMatrix& labels,
                                 const gbt::Params& params) {
    check_sample_counts(latents, labels);
    ImportanceMatrix result(labels.cols, latents.cols, ImportanceSource::TreeClassifier);
    for (std::size_t i = 0; i < labels.cols; ++i) {
        auto [y, n_classes] = dense_labels(labels, i);
        if (n_classes < 2) {
            throw std::domain_error("tree_importance: factor " + std::to_string(i) +
                                    " has fewer than two classes in the sample");
        }
        const gbt::Classifier clf = gbt::Classifier::fit(latents, y, n_classes, params);
        const std::vector<double>& gain = clf.feature_gain();
        double total = 0.0;
        for (double g : gain) total += g;
        if (total > 0.0) {
            for (std::size_t j = 0; j < latents.cols; ++j) result.at(i, j) = gain[j] / total;
        }
    }
    return result;
}

double mig(const ImportanceMatrix& mi_matrix) {
    if (mi_matrix.source != ImportanceSource::MutualInformation) {
        throw std::domain_error("mig: expects an entropy-normalized MI matrix");
    }
    if (mi_matrix.n_latents < 2) throw std::domain_error("mig: need at least two latents");
    double total = 0.0;
    for (std::size_t i = 0; i < mi_matrix.n_factors; ++i) {
        double top = 0.0, second = 0.0;
        for (std::size_t j = 0; j < mi_matrix.n_latents; ++j) {
            const double w = mi_matrix.at(i, j);
            if (w > top) {
                second = top;
                top = w;
            } else if (w > second) {
                second = w;
            }
        }
        total += top - second;
    }
    return total / static_cast<double>(mi_matrix.n_factors);
}

double dci_disentanglement(const ImportanceMatrix& importance) {
    if (importance.n_factors < 2) {
        throw std::domain_error("dci: need at least two factors");
    }
    double total_mass = 0.0;
    for (double w : importance.weights) {
        if (w < 0.0 || !std::isfinite(w)) throw std::domain_error("dci: invalid weight");
        total_mass += w;
    }
    if (total_mass <= 0.0) throw std::domain_error("dci: all-zero importance matrix");

    const double log_factors = std::log(static_cast<double>(importance.n_factors));
    double score = 0.0;
    for (std::size_t j = 0; j < importance.n_latents; ++j) {
        double column_mass = 0.0;
        for (std::size_t i = 0; i < importance.n_factors; ++i) column_mass += importance.at(i, j);
        if (column_mass <= 0.0) continue;
        double h = 0.0;
        for (std::size_t i = 0; i < importance.n_factors; ++i) {
            const double p = importance.at(i, j) / column_mass;
            if (p > 0.0) h -= p * std::log(p);
        }
        const double d = 1.0 - h / log_factors;
        score += (column_mass / total_mass) * d;
    }
    return std::clamp(score, 0.0, 1.0);
}

namespace {

// Best balanced accuracy of a single-threshold classifier for binary targets,
// maximized over thresholds and both orientations.
double best_threshold_balanced_accuracy(std::span<const double> z, std::span<const char> y) {
    const std::size_t n = z.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (z[a] != z[b]) return z[a] < z[b];
        return a < b;
    });
    double positives = 0.0;
    for (char v : y) positives += v ? 1.0 : 0.0;
    const double negatives = static_cast<double>(n) - positives;
    if (positives == 0.0 || negatives == 0.0) return 0.5;

    double best = 0.5;
    double pos_below = 0.0, neg_below = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (y[order[i]]) pos_below += 1.0;
        else neg_below += 1.0;
        if (z[order[i]] == z[order[i + 1]]) continue;
        // predict positive when z > threshold
        const double bacc =
            0.5 * ((positives - pos_below) / positives + neg_below / negatives);
        best = std::max(best, std::max(bacc, 1.0 - bacc));
    }
    return best;
}

}  // namespace

double sap(const Matrix& latents, const LabelMatrix& labels) {
    check_sample_counts(latents, labels);
    if (latents.cols < 2) throw std::domain_error("sap: need at least two latents");
    const std::size_t n = latents.rows;

    double total = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < labels.cols; ++i) {
        // Median split: class 1 when value exceeds the lower median.
        std::vector<int> values = labels.column(i);
        std::vector<int> sorted(values);
        std::sort(sorted.begin(), sorted.end());
        const int median = sorted[(n - 1) / 2];
        std::vector<char> binary(n);
        std::size_t ones = 0;
        for (std::size_t r = 0; r < n; ++r) {
            binary[r] = values[r] > median ? 1 : 0;
            ones += binary[r];
        }
        if (ones == 0 || ones == n) {
            std::cerr << "sap: factor " << i << " is single-class after median split; skipped\n";
            continue;
        }
        double top = 0.0, second = 0.0;
        for (std::size_t j = 0; j < latents.cols; ++j) {
            std::vector<double> column(n);
            for (std::size_t r = 0; r < n; ++r) column[r] = latents.at(r, j);
            const double score = best_threshold_balanced_accuracy(column, binary);
            if (score > top) {
                second = top;
                top = score;
            } else if (score > second) {
                second = score;
            }
        }
        total += top - second;
        used += 1;
    }
    if (used == 0) throw std::domain_error("sap: every factor degenerate after median split");
    return total / static_cast<double>(used);
}

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    }
};

}  // namespace

Matrix pairwise_entanglement(const ImportanceMatrix& importance) {
    const std::size_t f = importance.n_factors;
    const std::size_t l = importance.n_latents;
    Matrix scores(f, f, 0.0);

    struct Edge {
        double weight;
        std::size_t factor;
        std::size_t latent;
    };
    std::vector<Edge> edges;
    edges.reserve(f * l);
    for (std::size_t i = 0; i < f; ++i) {
        for (std::size_t j = 0; j < l; ++j) {
            const double w = importance.at(i, j);
            if (w > 0.0) edges.push_back({w, i, j});
        }
    }
    // Descending weight; ties in deterministic (factor, latent) order. The
    // recorded score is the edge weight itself, so tie order cannot change it.
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        if (a.factor != b.factor) return a.factor < b.factor;
        return a.latent < b.latent;
    });

    UnionFind uf(f + l);
    std::vector<std::vector<int>> members(f + l);
    for (std::size_t i = 0; i < f; ++i) members[i] = {static_cast<int>(i)};

    for (const Edge& edge : edges) {
        const int ra = uf.find(static_cast<int>(edge.factor));
        const int rb = uf.find(static_cast<int>(edge.latent + f));
        if (ra == rb) continue;
        for (int a : members[static_cast<std::size_t>(ra)]) {
            for (int b : members[static_cast<std::size_t>(rb)]) {
                scores.at(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) = edge.weight;
                scores.at(static_cast<std::size_t>(b), static_cast<std::size_t>(a)) = edge.weight;
            }
        }
        // Merge the smaller member list into the larger.
        int keep = ra, drop = rb;
        if (members[static_cast<std::size_t>(keep)].size() <
            members[static_cast<std::size_t>(drop)].size()) {
            std::swap(keep, drop);
        }
        auto& keep_list = members[static_cast<std::size_t>(keep)];
        auto& drop_list = members[static_cast<std::size_t>(drop)];
        keep_list.insert(keep_list.end(), drop_list.begin(), drop_list.end());
        drop_list.clear();
        uf.parent[static_cast<std::size_t>(drop)] = keep;
    }
    return scores;
}

PairwiseSummary pairwise_summary(const Matrix& pair_matrix, std::pair<int, int> correlated_pair) {
    if (pair_matrix.rows != pair_matrix.cols || pair_matrix.rows < 2) {
        throw std::domain_error("pairwise_summary: need a square matrix over >= 2 factors");
    }
    const std::size_t f = pair_matrix.rows;
    const std::size_t a = static_cast<std::size_t>(correlated_pair.first);
    const std::size_t b = static_cast<std::size_t>(correlated_pair.second);
    if (a >= f || b >= f || a == b) throw std::domain_error("pairwise_summary: bad pair");

    PairwiseSummary out;
    out.correlated = pair_matrix.at(a, b);
    std::vector<double> others;
    for (std::size_t i = 0; i < f; ++i) {
        for (std::size_t j = i + 1; j < f; ++j) {
            if ((i == a && j == b) || (i == b && j == a)) continue;
            others.push_back(pair_matrix.at(i, j));
        }
    }
    if (!others.empty()) {
        std::sort(others.begin(), others.end());
        const std::size_t m = others.size();
        out.median_uncorrelated = m % 2 == 1 ? others[m / 2]
                                             : 0.5 * (others[m / 2 - 1] + others[m / 2]);
    }
    return out;
}

double unfairness(const Matrix& latents, const LabelMatrix& labels, int target_factor,
                  int sensitive_factor, const gbt::Params& params) {
    check_sample_counts(latents, labels);
    if (target_factor == sensitive_factor) {
        throw std::domain_error("unfairness: target and sensitive factors must differ");
    }
    auto [y, n_classes] = dense_labels(labels, static_cast<std::size_t>(target_factor));
    if (n_classes < 2) throw std::domain_error("unfairness: degenerate target factor");
    auto [s, n_sensitive] = dense_labels(labels, static_cast<std::size_t>(sensitive_factor));
    if (n_sensitive < 2) throw std::domain_error("unfairness: degenerate sensitive factor");

    const gbt::Classifier clf = gbt::Classifier::fit(latents, y, n_classes, params);
    const std::vector<int> predicted = clf.predict(latents);

    const std::size_t n = latents.rows;
    std::vector<double> marginal(static_cast<std::size_t>(n_classes), 0.0);
    Matrix conditional(static_cast<std::size_t>(n_sensitive), static_cast<std::size_t>(n_classes),
                       0.0);
    std::vector<double> sensitive_count(static_cast<std::size_t>(n_sensitive), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        marginal[static_cast<std::size_t>(predicted[r])] += 1.0;
        conditional.at(static_cast<std::size_t>(s[r]), static_cast<std::size_t>(predicted[r])) +=
            1.0;
        sensitive_count[static_cast<std::size_t>(s[r])] += 1.0;
    }
    for (double& m : marginal) m /= static_cast<double>(n);

    double total_tv = 0.0;
    for (int sv = 0; sv < n_sensitive; ++sv) {
        double tv = 0.0;
        for (int c = 0; c < n_classes; ++c) {
            const double cond = conditional.at(static_cast<std::size_t>(sv),
                                               static_cast<std::size_t>(c)) /
                                sensitive_count[static_cast<std::size_t>(sv)];
            tv += std::abs(cond - marginal[static_cast<std::size_t>(c)]);
        }
        total_tv += 0.5 * tv;
    }
    return total_tv / static_cast<double>(n_sensitive);
}

ScoreReport evaluate(const Matrix& latents, const LabelMatrix& labels,
                     std::pair<int, int> correlated_pair, const EvalParams& params) {
    ScoreReport report;
    report.params = params;
    const ImportanceMatrix mi = mi_importance(latents, labels, params.mi_bins);
    const ImportanceMatrix tree = tree_importance(latents, labels, params.gbt);
    report.mig = mig(mi);
    report.dci = dci_disentanglement(tree);
    report.sap = sap(latents, labels);
    report.pairwise = pairwise_entanglement(tree);
    report.summary = pairwise_summary(report.pairwise, correlated_pair);
    report.unfairness_first_given_second =
        unfairness(latents, labels, correlated_pair.first, correlated_pair.second, params.gbt);
    report.unfairness_second_given_first =
        unfairness(latents, labels, correlated_pair.second, correlated_pair.first, params.gbt);
    return report;
}

nlohmann::json report_to_json(const ScoreReport& report) {
    nlohmann::json j;
    j["mig"] = report.mig;
    j["dci"] = report.dci;
    j["sap"] = report.sap;
    j["pairwise"] = {{"rows", report.pairwise.rows},
                     {"cols", report.pairwise.cols},
                     {"data", report.pairwise.data}};
    j["pairwise_source"] = "tree_classifier";
    j["correlated_score"] = report.summary.correlated;
    if (report.summary.median_uncorrelated) {
        j["median_uncorrelated"] = *report.summary.median_uncorrelated;
    } else {
        j["median_uncorrelated"] = nullptr;
    }
    j["unfairness_first_given_second"] = report.unfairness_first_given_second;
    j["unfairness_second_given_first"] = report.unfairness_second_given_first;
    j["eval_params"] = {{"mi_bins", report.params.mi_bins},
                        {"gbt_rounds", report.params.gbt.rounds},
                        {"gbt_depth", report.params.gbt.max_depth},
                        {"gbt_shrinkage", report.params.gbt.shrinkage}};
    return j;
}

ScoreReport report_from_json(const nlohmann::json& j) {
    ScoreReport report;
    report.mig = j.at("mig").get<double>();
    report.dci = j.at("dci").get<double>();
    report.sap = j.at("sap").get<double>();
    report.pairwise.rows = j.at("pairwise").at("rows").get<std::size_t>();
    report.pairwise.cols = j.at("pairwise").at("cols").get<std::size_t>();
    report.pairwise.data = j.at("pairwise").at("data").get<std::vector<double>>();
    report.summary.correlated = j.at("correlated_score").get<double>();
    if (!j.at("median_uncorrelated").is_null()) {
        report.summary.median_uncorrelated = j.at("median_uncorrelated").get<double>();
    }
    report.unfairness_first_given_second = j.at("unfairness_first_given_second").get<double>();
    report.unfairness_second_given_first = j.at("unfairness_second_given_first").get<double>();
    const auto& p = j.at("eval_params");
    report.params.mi_bins = p.at("mi_bins").get<int>();
    report.params.gbt.rounds = p.at("gbt_rounds").get<int>();
    report.params.gbt.max_depth = p.at("gbt_depth").get<int>();
    report.params.gbt.shrinkage = p.at("gbt_shrinkage").get<double>();
    return report;
}

}  // namespace corrlab::metrics
