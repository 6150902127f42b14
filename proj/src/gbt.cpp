#include "corrlab/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace corrlab::gbt {

namespace {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

constexpr double kMinGain = 1e-12;
constexpr double kMinHessian = 1e-12;

struct BestSplit {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
    std::vector<std::size_t> left;   // sample indices
    std::vector<std::size_t> right;
};

// Exact greedy least-squares split of `residual` over the node's samples.
// Features are scanned in an order rotated by the boosting round; strict
// improvement keeps the first feature met in that order, which alternates the
// winner among exactly tied (e.g. duplicated) columns.
BestSplit find_split(const Matrix& x, const std::vector<double>& residual,
                     const std::vector<std::size_t>& samples, int rotation) {
    BestSplit best;
    const std::size_t n = samples.size();
    if (n < 2) return best;
    const int n_features = static_cast<int>(x.cols);

    double total = 0.0;
    for (std::size_t s : samples) total += residual[s];
    const double parent_term = total * total / static_cast<double>(n);

    std::vector<std::size_t> order(samples);
    for (int step = 0; step < n_features; ++step) {
        const int f = (rotation + step) % n_features;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double va = x.at(a, static_cast<std::size_t>(f));
            const double vb = x.at(b, static_cast<std::size_t>(f));
            if (va != vb) return va < vb;
            return a < b;
        });
        double left_sum = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            left_sum += residual[order[i]];
            const double v = x.at(order[i], static_cast<std::size_t>(f));
            const double v_next = x.at(order[i + 1], static_cast<std::size_t>(f));
            if (v == v_next) continue;
            const double nl = static_cast<double>(i + 1);
            const double nr = static_cast<double>(n - i - 1);
            const double right_sum = total - left_sum;
            const double gain =
                left_sum * left_sum / nl + right_sum * right_sum / nr - parent_term;
            if (gain > best.gain + kMinGain) {
                best.found = true;
                best.feature = f;
                best.threshold = 0.5 * (v + v_next);
                best.gain = gain;
                best.left.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(i + 1));
                best.right.assign(order.begin() + static_cast<std::ptrdiff_t>(i + 1), order.end());
            }
        }
    }
    return best;
}

}  // namespace

double Classifier::Tree::predict(const double* row) const {
    int idx = 0;
    while (!nodes[static_cast<std::size_t>(idx)].leaf) {
        const Node& node = nodes[static_cast<std::size_t>(idx)];
        idx = row[node.feature] <= node.threshold ? node.left : node.right;
    }
    return nodes[static_cast<std::size_t>(idx)].value;
}

Classifier Classifier::fit(const Matrix& x, const std::vector<int>& y, int n_classes,
                           const Params& params) {
    if (x.rows == 0 || x.cols == 0) throw std::domain_error("gbt: empty design matrix");
    if (y.size() != x.rows) throw std::domain_error("gbt: label count mismatch");
    if (n_classes < 2) throw std::domain_error("gbt: need at least two classes");
    for (int label : y) {
        if (label < 0 || label >= n_classes) throw std::domain_error("gbt: label out of range");
    }

    Classifier clf;
    clf.shrinkage_ = params.shrinkage;
    clf.feature_gain_.assign(x.cols, 0.0);
    clf.per_class_.resize(static_cast<std::size_t>(n_classes));

    const std::size_t n = x.rows;
    std::vector<double> score(n);
    std::vector<double> residual(n);

    for (int cls = 0; cls < n_classes; ++cls) {
        ClassModel& model = clf.per_class_[static_cast<std::size_t>(cls)];
        std::size_t positives = 0;
        for (std::size_t i = 0; i < n; ++i) positives += y[i] == cls ? 1 : 0;
        // Log-odds prior, clamped away from the degenerate all/none cases.
        const double p = std::clamp(static_cast<double>(positives) / static_cast<double>(n),
                                    1e-6, 1.0 - 1e-6);
        model.base = std::log(p / (1.0 - p));
        std::fill(score.begin(), score.end(), model.base);

        for (int round = 0; round < params.rounds; ++round) {
            for (std::size_t i = 0; i < n; ++i) {
                const double target = y[i] == cls ? 1.0 : 0.0;
                residual[i] = target - logistic(score[i]);
            }

            Tree tree;
            tree.nodes.push_back(Node{});
            std::vector<std::size_t> all(n);
            std::iota(all.begin(), all.end(), 0);

            struct Work {
                int node;
                int depth;
                std::vector<std::size_t> samples;
            };
            std::vector<Work> stack;
            stack.push_back({0, 0, std::move(all)});

            while (!stack.empty()) {
                Work work = std::move(stack.back());
                stack.pop_back();
                BestSplit split;
                if (work.depth < params.max_depth) {
                    split = find_split(x, residual, work.samples, round);
                }
                Node& node = tree.nodes[static_cast<std::size_t>(work.node)];
                if (!split.found) {
                    // Newton leaf value for the logistic loss.
                    double grad_sum = 0.0;
                    double hess_sum = 0.0;
                    for (std::size_t s : work.samples) {
                        const double prob = logistic(score[s]);
                        grad_sum += residual[s];
                        hess_sum += prob * (1.0 - prob);
                    }
                    node.leaf = true;
                    node.value = hess_sum > kMinHessian ? grad_sum / hess_sum : 0.0;
                    continue;
                }
                clf.feature_gain_[static_cast<std::size_t>(split.feature)] += split.gain;
                const int left = static_cast<int>(tree.nodes.size());
                const int right = left + 1;
                node.leaf = false;
                node.feature = split.feature;
                node.threshold = split.threshold;
                node.left = left;
                node.right = right;
                // `node` dangles once the vector grows; no touching it below.
                tree.nodes.push_back(Node{});
                tree.nodes.push_back(Node{});
                stack.push_back({right, work.depth + 1, std::move(split.right)});
                stack.push_back({left, work.depth + 1, std::move(split.left)});
            }

            for (std::size_t i = 0; i < n; ++i) {
                score[i] += params.shrinkage * tree.predict(x.row_ptr(i));
            }
            model.trees.push_back(std::move(tree));
        }
    }
    return clf;
}

std::vector<double> Classifier::scores(const double* row) const {
    std::vector<double> out;
    out.reserve(per_class_.size());
    for (const ClassModel& model : per_class_) {
        double s = model.base;
        for (const Tree& tree : model.trees) s += shrinkage_ * tree.predict(row);
        out.push_back(s);
    }
    return out;
}

int Classifier::predict_one(const double* row) const {
    const std::vector<double> s = scores(row);
    std::size_t best = 0;
    for (std::size_t i = 1; i < s.size(); ++i) {
        if (s[i] > s[best]) best = i;
    }
    return static_cast<int>(best);
}

std::vector<int> Classifier::predict(const Matrix& x) const {
    std::vector<int> out(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) out[r] = predict_one(x.row_ptr(r));
    return out;
}

}  // namespace corrlab::gbt
