// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "kt/metrics.hpp"

namespace kt {

namespace {

bool single_class(const Corpus& corpus, KnowledgeType target) {
    const int positives = corpus.label_counts()[static_cast<int>(target)];
    return positives == 0 || static_cast<std::size_t>(positives) == corpus.size();
}

}  // namespace

CvResult cross_validate(const FitScoreFn& fit_score, const Corpus& corpus,
                        const CvOptions& options) {
    CvResult result;
    const auto folds = make_folds(corpus, options.folds, options.seed);
    for (std::size_t f = 0; f < folds.size(); ++f) {
        const auto& [train, test] = folds[f];
        const std::uint64_t fold_seed = derive_seed(options.seed, f);

        if (options.binary_target) {
            if (single_class(train, *options.binary_target) ||
                single_class(test, *options.binary_target)) {
                result.warnings.push_back(
                    "fold " + std::to_string(f) + " skipped: single-class split for target " +
                    std::string(to_string(*options.binary_target)));
                continue;
            }
        }

        const Corpus fit_train = options.resample
                                     ? resample_training_set(train, derive_seed(fold_seed, 1))
                                     : train;
        auto pred = fit_score(fit_train, test, derive_seed(fold_seed, 2));
        result.fold_reports.push_back(
            evaluate_predictions(pred, options.threshold, static_cast<int>(f)));
    }
    if (result.fold_reports.empty()) {
        throw DataError("cross_validate: all folds were skipped");
    }
    return result;
}

namespace {

struct Welford {
    double sum = 0.0;
    double sum_sq = 0.0;
    int n = 0;

    void add(double x) {
        sum += x;
        sum_sq += x * x;
        ++n;
    }
    double mean() const { return n > 0 ? sum / n : 0.0; }
    double stddev() const {
        if (n < 2) return 0.0;
        const double m = mean();
        const double var = (sum_sq - static_cast<double>(n) * m * m) / (n - 1);
        return std::sqrt(std::max(var, 0.0));
    }
};

}  // namespace

CvAggregate aggregate(const CvResult& result) {
    CvAggregate agg;
    agg.folds_evaluated = static_cast<int>(result.fold_reports.size());
    if (result.fold_reports.empty()) return agg;

    std::array<Welford, kNumTypes> per_type;
    Welford hamming, subset, mp, mr, mf1;
    Welford macro_auc;
    for (const auto& rep : result.fold_reports) {
        for (int t = 0; t < kNumTypes; ++t) {
            if (rep.auprc_per_type[static_cast<std::size_t>(t)]) {
                per_type[static_cast<std::size_t>(t)].add(
                    *rep.auprc_per_type[static_cast<std::size_t>(t)]);
            }
        }
        hamming.add(rep.hamming);
        subset.add(rep.subset_acc);
        mp.add(rep.macro_precision);
        mr.add(rep.macro_recall);
        mf1.add(rep.macro_f1);
        if (rep.macro_auc) macro_auc.add(*rep.macro_auc);
    }

    agg.mean.threshold = agg.stddev.threshold = result.fold_reports.front().threshold;
    for (int t = 0; t < kNumTypes; ++t) {
        const auto& w = per_type[static_cast<std::size_t>(t)];
        if (w.n > 0) {
            agg.mean.auprc_per_type[static_cast<std::size_t>(t)] = w.mean();
            agg.stddev.auprc_per_type[static_cast<std::size_t>(t)] = w.stddev();
        }
    }
    agg.mean.hamming = hamming.mean();
    agg.stddev.hamming = hamming.stddev();
    agg.mean.subset_acc = subset.mean();
    agg.stddev.subset_acc = subset.stddev();
    agg.mean.macro_precision = mp.mean();
    agg.stddev.macro_precision = mp.stddev();
    agg.mean.macro_recall = mr.mean();
    agg.stddev.macro_recall = mr.stddev();
    agg.mean.macro_f1 = mf1.mean();
    agg.stddev.macro_f1 = mf1.stddev();
    if (macro_auc.n > 0) {
        agg.mean.macro_auc = macro_auc.mean();
        agg.stddev.macro_auc = macro_auc.stddev();
    }
    return agg;
}

}  // namespace kt
