#pragma once

#include <cstddef>
#include <vector>

#include "corrlab/matrix.hpp"

namespace corrlab::gbt {

struct Params {
    int rounds = 20;
    int max_depth = 2;
    double shrinkage = 0.1;
};

// Gradient-boosted depth-limited regression trees with one-vs-rest logistic
// loss. Small and fully deterministic: splits are exact greedy over sorted
// feature values; equal-gain ties are resolved by a feature order rotated per
// boosting round, so exactly duplicated columns share their importance.
class Classifier {
public:
    static Classifier fit(const Matrix& x, const std::vector<int>& y, int n_classes,
                          const Params& params = {});

    int n_classes() const { return static_cast<int>(per_class_.size()); }

    // Raw one-vs-rest scores, one per class.
    std::vector<double> scores(const double* row) const;

    // Hard prediction (argmax score, lowest class index on ties).
    int predict_one(const double* row) const;
    std::vector<int> predict(const Matrix& x) const;

    // Total split gain per feature, summed over all trees and classes.
    const std::vector<double>& feature_gain() const { return feature_gain_; }

private:
    struct Node {
        bool leaf = true;
        double value = 0.0;
        int feature = -1;
        double threshold = 0.0;
        int left = -1;
        int right = -1;
    };
    struct Tree {
        std::vector<Node> nodes;
        double predict(const double* row) const;
    };
    struct ClassModel {
        double base = 0.0;
        std::vector<Tree> trees;
    };

    std::vector<ClassModel> per_class_;
    std::vector<double> feature_gain_;
    double shrinkage_ = 0.1;
};

}  // namespace corrlab::gbt
