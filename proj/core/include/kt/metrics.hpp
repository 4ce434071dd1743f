// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kt/corpus.hpp"

namespace kt {

/// Confusion tally for one thresholded binary decision set.
struct MetricCounts {
    long tp = 0;
    long fp = 0;
    long tn = 0;
    long fn = 0;

    long total() const { return tp + fp + tn + fn; }
};

/// Per-document, per-type scores in [0,1] row-aligned with ground truth.
struct PredictionMatrix {
    Eigen::MatrixXd scores;        // n_docs x 12
    std::vector<LabelSet> truth;   // n_docs

    Eigen::Index rows() const { return scores.rows(); }
    bool truth_bit(Eigen::Index doc, KnowledgeType t) const {
        return truth[static_cast<std::size_t>(doc)].contains(t);
    }

    /// Throws DataError unless scores and truth are aligned, finite, in [0,1].
    void validate() const;
};

struct PrPoint {
    double recall;
    double precision;
};

/// One operating point per distinct score threshold, in descending threshold
/// order. Requires at least one positive.
std::vector<PrPoint> pr_curve(std::span<const double> scores, std::span<const char> truth);

/// Area under the precision-recall curve in the average-precision (step)
/// formulation: sum over thresholds of (R_k - R_{k-1}) * P_k, no linear
/// interpolation. Absent (nullopt) when truth has no positives.
std::optional<double> auprc(std::span<const double> scores, std::span<const char> truth);

/// Area under the ROC curve by trapezoidal integration over distinct
/// thresholds; equals the Mann-Whitney rank statistic with half credit for
/// ties. Throws DataError when truth is single-class.
double roc_auc(std::span<const double> scores, std::span<const char> truth);

/// Tally with decision = (score >= threshold); the boundary counts positive.
MetricCounts counts_at_threshold(const PredictionMatrix& pred, KnowledgeType type,
                                 double threshold = 0.5);

// Thresholded metrics. Zero-denominator convention: the metric is 0 when its
// denominator is 0 (affects sparse labels; documented in reports).
double precision(const MetricCounts& c);
double recall(const MetricCounts& c);
double f1(const MetricCounts& c);
double fpr(const MetricCounts& c);

/// Fraction of wrong (document, label) decisions over n_docs * 12 cells.
double hamming_loss(const PredictionMatrix& pred, double threshold = 0.5);

/// Fraction of documents whose entire 12-bit decision vector matches truth.
double subset_accuracy(const PredictionMatrix& pred, double threshold = 0.5);

struct MacroMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::optional<double> auc;       // absent when no label has both classes
    std::vector<std::string> notes;  // e.g. types excluded from MacroAUC
};

/// Unweighted mean of the per-type metrics. Types absent from truth are
/// excluded from MacroAUC with a note.
MacroMetrics macro_metrics(const PredictionMatrix& pred, double threshold = 0.5);

/// Full evaluation of one prediction matrix (one fold or one holdout split).
struct EvalReport {
    int fold = 0;
    std::array<std::optional<double>, kNumTypes> auprc_per_type{};
    double hamming = 0.0;
    double subset_acc = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    std::optional<double> macro_auc;
    double threshold = 0.5;
    std::vector<std::string> notes;
};

EvalReport evaluate_predictions(const PredictionMatrix& pred, double threshold = 0.5,
                                int fold = 0);

/// Classifier plug-in for cross_validate: fit on train, score test. The fold
/// seed is derived deterministically from the harness seed.
using FitScoreFn =
    std::function<PredictionMatrix(const Corpus& train, const Corpus& test, std::uint64_t seed)>;

struct CvOptions {
    int folds = 10;
    bool resample = false;
    std::uint64_t seed = 0;
    double threshold = 0.5;
    /// When set, folds whose train or test split is single-class for this
    /// target are skipped with a warning.
    std::optional<KnowledgeType> binary_target;
};

struct CvResult {
    std::vector<EvalReport> fold_reports;
    std::vector<std::string> warnings;
};

/// k-fold protocol: per fold, optionally resample the training split (never
/// the test split), fit, score, evaluate. Fitting — including any vocabulary
/// or feature-space construction inside the callback — sees only the
/// (resampled) training split.
CvResult cross_validate(const FitScoreFn& fit_score, const Corpus& corpus,
                        const CvOptions& options);

/// Mean and sample standard deviation over fold reports. Per-type AUPRC
/// aggregates over the folds where it is defined.
struct CvAggregate {
    EvalReport mean;
    EvalReport stddev;
    int folds_evaluated = 0;
};

CvAggregate aggregate(const CvResult& result);

}  // namespace kt
