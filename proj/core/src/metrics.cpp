// SPDX-License-Identifier: Apache-2.0
#include "kt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace kt {

void PredictionMatrix::validate() const {
    if (static_cast<std::size_t>(scores.rows()) != truth.size()) {
        throw DataError("prediction matrix: scores and truth are misaligned");
    }
    if (scores.cols() != kNumTypes) {
        throw DataError("prediction matrix: expected 12 score columns");
    }
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        for (Eigen::Index j = 0; j < scores.cols(); ++j) {
            const double s = scores(i, j);
            if (!std::isfinite(s) || s < 0.0 || s > 1.0) {
                throw DataError("prediction matrix: score out of [0,1] at row " +
                                std::to_string(i));
            }
        }
    }
}

namespace {

// Indices sorted by descending score; equal scores form one tie group.
std::vector<std::size_t> descending_order(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

long count_positives(std::span<const char> truth) {
    long p = 0;
    for (char t : truth) p += (t != 0);
    return p;
}

}  // namespace

std::vector<PrPoint> pr_curve(std::span<const double> scores, std::span<const char> truth) {
    if (scores.size() != truth.size()) throw DataError("pr_curve: misaligned inputs");
    const long total_pos = count_positives(truth);
    if (total_pos == 0) throw DataError("pr_curve: truth contains no positives");

    const auto order = descending_order(scores);
    std::vector<PrPoint> points;
    long tp = 0;
    long fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double threshold = scores[order[i]];
        for (; i < order.size() && scores[order[i]] == threshold; ++i) {
            (truth[order[i]] ? tp : fp) += 1;
        }
        points.push_back({static_cast<double>(tp) / static_cast<double>(total_pos),
                          static_cast<double>(tp) / static_cast<double>(tp + fp)});
    }
    return points;
}

std::optional<double> auprc(std::span<const double> scores, std::span<const char> truth) {
    if (count_positives(truth) == 0) return std::nullopt;
    const auto points = pr_curve(scores, truth);
    double area = 0.0;
    double prev_recall = 0.0;
    for (const auto& p : points) {
        area += (p.recall - prev_recall) * p.precision;
        prev_recall = p.recall;
    }
    return area;
}

double roc_auc(std::span<const double> scores, std::span<const char> truth) {
    if (scores.size() != truth.size()) throw DataError("roc_auc: misaligned inputs");
    const long total_pos = count_positives(truth);
    const long total_neg = static_cast<long>(truth.size()) - total_pos;
    if (total_pos == 0 || total_neg == 0) {
        throw DataError("roc_auc: truth is single-class");
    }

    const auto order = descending_order(scores);
    double area = 0.0;
    long tp = 0;
    long fp = 0;
    double prev_tpr = 0.0;
    double prev_fpr = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double threshold = scores[order[i]];
        for (; i < order.size() && scores[order[i]] == threshold; ++i) {
            (truth[order[i]] ? tp : fp) += 1;
        }
        const double tpr = static_cast<double>(tp) / static_cast<double>(total_pos);
        const double fpr_now = static_cast<double>(fp) / static_cast<double>(total_neg);
        area += (fpr_now - prev_fpr) * 0.5 * (tpr + prev_tpr);
        prev_tpr = tpr;
        prev_fpr = fpr_now;
    }
    return area;
}

MetricCounts counts_at_threshold(const PredictionMatrix& pred, KnowledgeType type,
                                 double threshold) {
    MetricCounts c;
    const auto col = static_cast<Eigen::Index>(type);
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
        const bool decided = pred.scores(i, col) >= threshold;
        const bool actual = pred.truth_bit(i, type);
        if (decided && actual) ++c.tp;
        else if (decided && !actual) ++c.fp;
        else if (!decided && actual) ++c.fn;
        else ++c.tn;
    }
    return c;
}

double precision(const MetricCounts& c) {
    const long denom = c.tp + c.fp;
    return denom == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(denom);
}

double recall(const MetricCounts& c) {
    const long denom = c.tp + c.fn;
    return denom == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(denom);
}

double f1(const MetricCounts& c) {
    const long denom = 2 * c.tp + c.fp + c.fn;
    return denom == 0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

double fpr(const MetricCounts& c) {
    const long denom = c.tn + c.fp;
    return denom == 0 ? 0.0
                      : 1.0 - static_cast<double>(c.tn) / static_cast<double>(denom);
}

double hamming_loss(const PredictionMatrix& pred, double threshold) {
    if (pred.rows() == 0) return 0.0;
    long wrong = 0;
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
        for (int t = 0; t < kNumTypes; ++t) {
            const bool decided = pred.scores(i, t) >= threshold;
            if (decided != pred.truth_bit(i, static_cast<KnowledgeType>(t))) ++wrong;
        }
    }
    return static_cast<double>(wrong) / (static_cast<double>(pred.rows()) * kNumTypes);
}

double subset_accuracy(const PredictionMatrix& pred, double threshold) {
    if (pred.rows() == 0) return 0.0;
    long exact = 0;
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
        bool all_match = true;
        for (int t = 0; t < kNumTypes && all_match; ++t) {
            const bool decided = pred.scores(i, t) >= threshold;
            all_match = decided == pred.truth_bit(i, static_cast<KnowledgeType>(t));
        }
        exact += all_match;
    }
    return static_cast<double>(exact) / static_cast<double>(pred.rows());
}

MacroMetrics macro_metrics(const PredictionMatrix& pred, double threshold) {
    MacroMetrics m;
    double auc_sum = 0.0;
    int auc_n = 0;
    for (int t = 0; t < kNumTypes; ++t) {
        const auto type = static_cast<KnowledgeType>(t);
        const auto counts = counts_at_threshold(pred, type, threshold);
        m.precision += precision(counts);
        m.recall += recall(counts);
        m.f1 += f1(counts);

        const bool has_pos = counts.tp + counts.fn > 0;
        const bool has_neg = counts.fp + counts.tn > 0;
        if (has_pos && has_neg) {
            std::vector<double> col(static_cast<std::size_t>(pred.rows()));
            std::vector<char> truth(static_cast<std::size_t>(pred.rows()));
            for (Eigen::Index i = 0; i < pred.rows(); ++i) {
                col[static_cast<std::size_t>(i)] = pred.scores(i, t);
                truth[static_cast<std::size_t>(i)] = pred.truth_bit(i, type);
            }
            auc_sum += roc_auc(col, truth);
            ++auc_n;
        } else {
            m.notes.push_back(std::string(to_string(type)) +
                              " excluded from MacroAUC (single-class truth)");
        }
    }
    m.precision /= kNumTypes;
    m.recall /= kNumTypes;
    m.f1 /= kNumTypes;
    if (auc_n > 0) m.auc = auc_sum / auc_n;
    return m;
}

EvalReport evaluate_predictions(const PredictionMatrix& pred, double threshold, int fold) {
    pred.validate();
    EvalReport report;
    report.fold = fold;
    report.threshold = threshold;

    std::vector<double> col(static_cast<std::size_t>(pred.rows()));
    std::vector<char> truth(static_cast<std::size_t>(pred.rows()));
    for (int t = 0; t < kNumTypes; ++t) {
        const auto type = static_cast<KnowledgeType>(t);
        for (Eigen::Index i = 0; i < pred.rows(); ++i) {
            col[static_cast<std::size_t>(i)] = pred.scores(i, t);
            truth[static_cast<std::size_t>(i)] = pred.truth_bit(i, type);
        }
        report.auprc_per_type[static_cast<std::size_t>(t)] = auprc(col, truth);
        if (!report.auprc_per_type[static_cast<std::size_t>(t)]) {
            report.notes.push_back(std::string(to_string(type)) +
                                   " AUPRC undefined (no positives)");
        }
    }

    report.hamming = hamming_loss(pred, threshold);
    report.subset_acc = subset_accuracy(pred, threshold);
    auto macro = macro_metrics(pred, threshold);
    report.macro_precision = macro.precision;
    report.macro_recall = macro.recall;
    report.macro_f1 = macro.f1;
    report.macro_auc = macro.auc;
    for (auto& note : macro.notes) report.notes.push_back(std::move(note));
    return report;
}

}  // namespace kt
