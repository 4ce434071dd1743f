// SPDX-License-Identifier: Apache-2.0
#include "kt/knn.hpp"

#include <algorithm>
#include <cmath>

namespace kt {

namespace {

std::vector<double> cache_norms(const std::vector<SparseVec>& features) {
    std::vector<double> norms(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) norms[i] = features[i].squared_norm();
    return norms;
}

// k nearest by squared Euclidean distance, ties by training order.
// exclude lets the ML-kNN trainer drop the query's own row.
std::vector<std::size_t> k_nearest(const std::vector<SparseVec>& features,
                                   const std::vector<double>& squared_norms, const SparseVec& x,
                                   int k, std::ptrdiff_t exclude = -1) {
    const double x_norm = x.squared_norm();
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (static_cast<std::ptrdiff_t>(i) == exclude) continue;
        const double d2 = std::max(squared_norms[i] + x_norm - 2.0 * features[i].dot(x), 0.0);
        dist.emplace_back(d2, i);
    }
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(take), dist.end());
    std::vector<std::size_t> out(take);
    for (std::size_t i = 0; i < take; ++i) out[i] = dist[i].second;
    return out;
}

}  // namespace

KnnModel KnnModel::fit(std::vector<SparseVec> features, std::vector<LabelSet> labels, int k) {
    if (features.empty()) throw TrainError("knn: empty training set");
    if (features.size() != labels.size()) throw TrainError("knn: features/labels misaligned");
    if (k < 1 || static_cast<std::size_t>(k) > features.size()) {
        throw TrainError("knn: k must be in [1, training size]");
    }
    KnnModel model;
    model.features_ = std::move(features);
    model.labels_ = std::move(labels);
    model.squared_norms_ = cache_norms(model.features_);
    model.k_ = k;
    return model;
}

std::vector<std::size_t> KnnModel::neighbors(const SparseVec& x) const {
    return k_nearest(features_, squared_norms_, x, k_);
}

double KnnModel::predict_score(const SparseVec& x, KnowledgeType target) const {
    const auto nn = neighbors(x);
    int hits = 0;
    for (std::size_t i : nn) hits += labels_[i].contains(target);
    return static_cast<double>(hits) / static_cast<double>(nn.size());
}

std::array<double, kNumTypes> KnnModel::predict(const SparseVec& x) const {
    const auto nn = neighbors(x);
    std::array<double, kNumTypes> scores{};
    for (std::size_t i : nn) {
        for (KnowledgeType t : labels_[i].types()) scores[static_cast<std::size_t>(t)] += 1.0;
    }
    for (auto& s : scores) s /= static_cast<double>(nn.size());
    return scores;
}

MlknnModel MlknnModel::fit(std::vector<SparseVec> features, std::vector<LabelSet> labels, int k,
                           double smoothing) {
    if (features.size() != labels.size()) throw TrainError("mlknn: features/labels misaligned");
    if (k < 1 || static_cast<std::size_t>(k) >= features.size()) {
        throw TrainError("mlknn: requires training size > k >= 1");
    }

    MlknnModel model;
    model.features_ = std::move(features);
    model.labels_ = std::move(labels);
    model.squared_norms_ = cache_norms(model.features_);
    model.k_ = k;
    model.smoothing_ = smoothing;

    const auto m = model.features_.size();
    const double s = smoothing;

    for (int t = 0; t < kNumTypes; ++t) {
        long count = 0;
        for (const auto& l : model.labels_) count += l.contains(static_cast<KnowledgeType>(t));
        model.priors_[static_cast<std::size_t>(t)] =
            (s + static_cast<double>(count)) / (2.0 * s + static_cast<double>(m));
    }

    // kappa[c]: how many training documents with (without) the label see
    // exactly c label-positive neighbors in their leave-one-out neighborhood.
    std::array<std::vector<long>, kNumTypes> kappa_pos;
    std::array<std::vector<long>, kNumTypes> kappa_neg;
    for (int t = 0; t < kNumTypes; ++t) {
        kappa_pos[static_cast<std::size_t>(t)].assign(static_cast<std::size_t>(k) + 1, 0);
        kappa_neg[static_cast<std::size_t>(t)].assign(static_cast<std::size_t>(k) + 1, 0);
    }
    for (std::size_t i = 0; i < m; ++i) {
        const auto nn = k_nearest(model.features_, model.squared_norms_, model.features_[i], k,
                                  static_cast<std::ptrdiff_t>(i));
        std::array<int, kNumTypes> c{};
        for (std::size_t j : nn) {
            for (KnowledgeType t : model.labels_[j].types()) ++c[static_cast<std::size_t>(t)];
        }
        for (int t = 0; t < kNumTypes; ++t) {
            auto& table = model.labels_[i].contains(static_cast<KnowledgeType>(t))
                              ? kappa_pos[static_cast<std::size_t>(t)]
                              : kappa_neg[static_cast<std::size_t>(t)];
            ++table[static_cast<std::size_t>(c[static_cast<std::size_t>(t)])];
        }
    }

    for (int t = 0; t < kNumTypes; ++t) {
        auto fill = [&](const std::vector<long>& kappa, std::vector<double>& out) {
            long total = 0;
            for (long v : kappa) total += v;
            out.resize(static_cast<std::size_t>(k) + 1);
            for (int c = 0; c <= k; ++c) {
                out[static_cast<std::size_t>(c)] =
                    (s + static_cast<double>(kappa[static_cast<std::size_t>(c)])) /
                    (s * static_cast<double>(k + 1) + static_cast<double>(total));
            }
        };
        fill(kappa_pos[static_cast<std::size_t>(t)], model.posterior_pos_[static_cast<std::size_t>(t)]);
        fill(kappa_neg[static_cast<std::size_t>(t)], model.posterior_neg_[static_cast<std::size_t>(t)]);
    }
    return model;
}

std::array<double, kNumTypes> MlknnModel::predict(const SparseVec& x) const {
    const auto nn = k_nearest(features_, squared_norms_, x, k_);
    std::array<int, kNumTypes> c{};
    for (std::size_t j : nn) {
        for (KnowledgeType t : labels_[j].types()) ++c[static_cast<std::size_t>(t)];
    }
    std::array<double, kNumTypes> out{};
    for (int t = 0; t < kNumTypes; ++t) {
        const auto ti = static_cast<std::size_t>(t);
        const auto ci = static_cast<std::size_t>(c[ti]);
        const double pos = priors_[ti] * posterior_pos_[ti][ci];
        const double neg = (1.0 - priors_[ti]) * posterior_neg_[ti][ci];
        out[ti] = pos / (pos + neg);
    }
    return out;
}

MlknnModel MlknnModel::from_parts(std::vector<SparseVec> features, std::vector<LabelSet> labels,
                                  int k, double smoothing, std::array<double, kNumTypes> priors,
                                  std::array<std::vector<double>, kNumTypes> posterior_pos,
                                  std::array<std::vector<double>, kNumTypes> posterior_neg) {
    MlknnModel model;
    model.features_ = std::move(features);
    model.labels_ = std::move(labels);
    model.squared_norms_ = cache_norms(model.features_);
    model.k_ = k;
    model.smoothing_ = smoothing;
    model.priors_ = priors;
    model.posterior_pos_ = std::move(posterior_pos);
    model.posterior_neg_ = std::move(posterior_neg);
    return model;
}

}  // namespace kt
