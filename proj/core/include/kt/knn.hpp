// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "kt/corpus.hpp"
#include "kt/text.hpp"

namespace kt {

/// k-nearest-neighbor classifier over raw n-gram counts. Euclidean distance;
/// distance ties break by training order.
class KnnModel {
public:
    static KnnModel fit(std::vector<SparseVec> features, std::vector<LabelSet> labels, int k);

    int k() const { return k_; }
    std::size_t training_size() const { return features_.size(); }
    const std::vector<SparseVec>& features() const { return features_; }
    const std::vector<LabelSet>& labels() const { return labels_; }

    /// Indices of the k nearest training documents.
    std::vector<std::size_t> neighbors(const SparseVec& x) const;

    /// Fraction of the k nearest neighbors whose labelset contains target;
    /// thresholded at 0.5 for the hard decision.
    double predict_score(const SparseVec& x, KnowledgeType target) const;

    /// All 12 per-type neighbor fractions from a single neighbor search.
    std::array<double, kNumTypes> predict(const SparseVec& x) const;

private:
    std::vector<SparseVec> features_;
    std::vector<LabelSet> labels_;
    std::vector<double> squared_norms_;
    int k_ = 1;
};

/// Multi-label k-nearest-neighbor (Bayesian posterior over neighbor counts,
/// Laplace smoothing s). Priors and posteriors are estimated on the training
/// set with leave-one-out neighborhoods.
class MlknnModel {
public:
    static MlknnModel fit(std::vector<SparseVec> features, std::vector<LabelSet> labels,
                          int k = 10, double smoothing = 1.0);

    /// Posterior P(H_l | E_c) per type for the query's neighbor counts.
    std::array<double, kNumTypes> predict(const SparseVec& x) const;

    int k() const { return k_; }
    double smoothing() const { return smoothing_; }
    const std::array<double, kNumTypes>& priors() const { return priors_; }
    /// P(E_c | H_l) for c in 0..k; each row sums to 1.
    const std::vector<double>& posterior_pos(KnowledgeType t) const {
        return posterior_pos_[static_cast<std::size_t>(t)];
    }
    const std::vector<double>& posterior_neg(KnowledgeType t) const {
        return posterior_neg_[static_cast<std::size_t>(t)];
    }

    static MlknnModel from_parts(std::vector<SparseVec> features, std::vector<LabelSet> labels,
                                 int k, double smoothing, std::array<double, kNumTypes> priors,
                                 std::array<std::vector<double>, kNumTypes> posterior_pos,
                                 std::array<std::vector<double>, kNumTypes> posterior_neg);

private:
    std::vector<SparseVec> features_;
    std::vector<LabelSet> labels_;
    std::vector<double> squared_norms_;
    int k_ = 10;
    double smoothing_ = 1.0;
    std::array<double, kNumTypes> priors_{};
    std::array<std::vector<double>, kNumTypes> posterior_pos_;
    std::array<std::vector<double>, kNumTypes> posterior_neg_;
};

}  // namespace kt
