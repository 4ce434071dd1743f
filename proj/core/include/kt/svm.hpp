// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "kt/corpus.hpp"
#include "kt/text.hpp"

namespace kt {

struct SvmTrainOptions {
    double C = 1.0;
    int max_epochs = 30;
    std::uint64_t seed = 0;
};

/// Linear SVM over the n-gram feature space.
struct SvmModel {
    Eigen::VectorXd weights;
    double bias = 0.0;
    double C = 1.0;
    /// Platt parameters (A, B): probability = sigmoid(A * score + B).
    std::optional<std::pair<double, double>> platt;
    /// Full hinge objective 0.5*|w|^2 + C * sum hinge, recorded before
    /// training and after every epoch.
    std::vector<double> epoch_objective;
};

/// Minimizes 0.5*|w|^2 + C * sum_i hinge(y_i (w.x_i + b)) by seeded stochastic
/// subgradient descent (uniform sampling, step 1/(lambda*t + 1) with
/// lambda = 1/(C*m); bias unregularized). Labels must be +1/-1 with both
/// classes present.
SvmModel svm_train(const std::vector<SparseVec>& x, const std::vector<signed char>& y,
                   std::int32_t dim, const SvmTrainOptions& options);

/// Decision value w.x + b, used for ranking metrics.
double svm_score(const SvmModel& model, const SparseVec& x);

/// Calibrated probability sigmoid(A*score + B); requires a Platt fit.
double svm_probability(const SvmModel& model, const SparseVec& x);

/// Fits Platt's sigmoid on (score, label) pairs; returns (A, B) such that
/// probability = sigmoid(A*score + B).
std::pair<double, double> platt_fit(const std::vector<double>& scores,
                                    const std::vector<signed char>& y);

/// svm_train plus Platt calibration: the sigmoid is fitted on a held-out 20%
/// of the training split (stratified, seeded), then the final weights are
/// refitted on the full split.
SvmModel train_binary_svm_calibrated(const std::vector<SparseVec>& x,
                                     const std::vector<signed char>& y, std::int32_t dim,
                                     const SvmTrainOptions& options);

struct GridCell {
    double C = 0.0;
    std::optional<double> mean_auprc;  // absent when every inner fold degenerated
};

struct GridSearchResult {
    SvmModel best;
    double best_C = 0.0;
    std::vector<GridCell> cells;
    std::vector<std::string> warnings;
};

inline const std::vector<double>& default_svm_grid() {
    static const std::vector<double> grid = {0.01, 0.1, 1.0, 10.0, 100.0};
    return grid;
}

/// Selects the C maximizing mean inner-fold AUPRC of the decision scores
/// (ties toward smaller C), then refits on the full split with calibration.
/// Degenerate folds are skipped with a warning; if every cell degenerates the
/// search fails.
GridSearchResult grid_search_svm(const std::vector<SparseVec>& x,
                                 const std::vector<signed char>& y, std::int32_t dim,
                                 const std::vector<double>& grid, int inner_folds,
                                 int max_epochs, std::uint64_t seed);

/// One-vs-rest: one independent binary SVM per knowledge type (binary
/// relevance). Types absent from training yield a constant-0 predictor with
/// a warning. Model t trains under derive_seed(seed, t), so it is
/// bit-identical to training that single binary SVM alone.
struct OvrSvmModel {
    std::array<SvmModel, kNumTypes> models;
    std::array<bool, kNumTypes> constant_zero{};
    std::vector<std::string> warnings;
};

OvrSvmModel ovr_svm_train(const std::vector<SparseVec>& x, const std::vector<LabelSet>& labels,
                          std::int32_t dim, const SvmTrainOptions& options);

std::array<double, kNumTypes> ovr_scores(const OvrSvmModel& model, const SparseVec& x);
std::array<double, kNumTypes> ovr_probabilities(const OvrSvmModel& model, const SparseVec& x);

}  // namespace kt
