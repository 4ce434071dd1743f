// SPDX-License-Identifier: Apache-2.0
#include "kt/svm.hpp"

#include <algorithm>
#include <cmath>

#include "kt/metrics.hpp"

namespace kt {

namespace {

double sparse_dot(const Eigen::VectorXd& dense, const SparseVec& sparse) {
    double sum = 0.0;
    for (const auto& [idx, value] : sparse.items) sum += dense(idx) * value;
    return sum;
}

void sparse_axpy(Eigen::VectorXd& dense, double coeff, const SparseVec& sparse) {
    for (const auto& [idx, value] : sparse.items) dense(idx) += coeff * value;
}

double full_objective(const Eigen::VectorXd& v, double scale, double bias, double c,
                      const std::vector<SparseVec>& x, const std::vector<signed char>& y) {
    double hinge_sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double margin = y[i] * (scale * sparse_dot(v, x[i]) + bias);
        hinge_sum += std::max(0.0, 1.0 - margin);
    }
    return 0.5 * scale * scale * v.squaredNorm() + c * hinge_sum;
}

void check_classes(const std::vector<signed char>& y) {
    bool pos = false;
    bool neg = false;
    for (signed char v : y) {
        if (v > 0) pos = true;
        else neg = true;
    }
    if (!pos || !neg) throw TrainError("svm: training data is single-class");
}

}  // namespace

SvmModel svm_train(const std::vector<SparseVec>& x, const std::vector<signed char>& y,
                   std::int32_t dim, const SvmTrainOptions& options) {
    if (x.empty() || x.size() != y.size()) throw TrainError("svm: bad training data");
    if (options.C <= 0.0) throw TrainError("svm: C must be positive");
    check_classes(y);

    const auto m = x.size();
    const double lambda = 1.0 / (options.C * static_cast<double>(m));

    // w is kept as scale * v so the per-step shrink stays O(1).
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
    double scale = 1.0;
    double bias = 0.0;

    SvmModel model;
    model.C = options.C;
    model.epoch_objective.push_back(full_objective(v, scale, bias, options.C, x, y));

    Rng rng(options.seed);
    long t = 0;
    for (int epoch = 0; epoch < options.max_epochs; ++epoch) {
        for (std::size_t step = 0; step < m; ++step) {
            ++t;
            const std::size_t idx = rng.index(m);
            const double eta = 1.0 / (lambda * static_cast<double>(t) + 1.0);
            const double margin = y[idx] * (scale * sparse_dot(v, x[idx]) + bias);
            scale *= 1.0 - eta * lambda;
            if (margin < 1.0) {
                sparse_axpy(v, eta * y[idx] / scale, x[idx]);
                bias += eta * y[idx];
            }
            if (scale < 1e-9) {
                v *= scale;
                scale = 1.0;
            }
        }
        model.epoch_objective.push_back(full_objective(v, scale, bias, options.C, x, y));
    }

    model.weights = scale * v;
    model.bias = bias;
    if (!model.weights.allFinite() || !std::isfinite(model.bias)) {
        throw TrainError("svm: non-finite weights after training");
    }
    return model;
}

double svm_score(const SvmModel& model, const SparseVec& x) {
    return sparse_dot(model.weights, x) + model.bias;
}

double svm_probability(const SvmModel& model, const SparseVec& x) {
    if (!model.platt) throw TrainError("svm: probability requested without a Platt fit");
    const double z = model.platt->first * svm_score(model, x) + model.platt->second;
    return 1.0 / (1.0 + std::exp(-z));
}

std::pair<double, double> platt_fit(const std::vector<double>& scores,
                                    const std::vector<signed char>& y) {
    if (scores.size() != y.size() || scores.empty()) throw TrainError("platt: bad inputs");

    // Newton fit of P(y=1|f) = 1/(1+exp(a*f+b)) with out-of-sample-style
    // targets; returns (-a, -b) so callers evaluate sigmoid(A*f + B).
    long prior1 = 0;
    long prior0 = 0;
    for (signed char v : y) (v > 0 ? prior1 : prior0) += 1;

    const double hi = (static_cast<double>(prior1) + 1.0) / (static_cast<double>(prior1) + 2.0);
    const double lo = 1.0 / (static_cast<double>(prior0) + 2.0);
    const std::size_t n = scores.size();
    std::vector<double> target(n);
    for (std::size_t i = 0; i < n; ++i) target[i] = y[i] > 0 ? hi : lo;

    double a = 0.0;
    double b = std::log((static_cast<double>(prior0) + 1.0) / (static_cast<double>(prior1) + 1.0));

    auto objective = [&](double pa, double pb) {
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double f = pa * scores[i] + pb;
            if (f >= 0.0) err += target[i] * f + std::log1p(std::exp(-f));
            else err += (target[i] - 1.0) * f + std::log1p(std::exp(f));
        }
        return err;
    };

    constexpr double kSigma = 1e-12;
    constexpr int kMaxIter = 100;
    double fval = objective(a, b);
    for (int it = 0; it < kMaxIter; ++it) {
        double h11 = kSigma, h22 = kSigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double f = a * scores[i] + b;
            double p, q;
            if (f >= 0.0) {
                p = std::exp(-f) / (1.0 + std::exp(-f));
                q = 1.0 / (1.0 + std::exp(-f));
            } else {
                p = 1.0 / (1.0 + std::exp(f));
                q = std::exp(f) / (1.0 + std::exp(f));
            }
            const double d2 = p * q;
            h11 += scores[i] * scores[i] * d2;
            h22 += d2;
            h21 += scores[i] * d2;
            const double d1 = target[i] - p;
            g1 += scores[i] * d1;
            g2 += d1;
        }
        if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;

        const double det = h11 * h22 - h21 * h21;
        const double da = -(h22 * g1 - h21 * g2) / det;
        const double db = -(-h21 * g1 + h11 * g2) / det;
        const double gd = g1 * da + g2 * db;

        double step = 1.0;
        bool moved = false;
        while (step >= 1e-10) {
            const double na = a + step * da;
            const double nb = b + step * db;
            const double nval = objective(na, nb);
            if (nval < fval + 1e-4 * step * gd) {
                a = na;
                b = nb;
                fval = nval;
                moved = true;
                break;
            }
            step /= 2.0;
        }
        if (!moved) break;
    }
    return {-a, -b};
}

SvmModel train_binary_svm_calibrated(const std::vector<SparseVec>& x,
                                     const std::vector<signed char>& y, std::int32_t dim,
                                     const SvmTrainOptions& options) {
    check_classes(y);

    // Stratified 80/20 split so the calibration side keeps both classes
    // whenever each class has at least two examples.
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < y.size(); ++i) (y[i] > 0 ? pos : neg).push_back(i);
    Rng rng(derive_seed(options.seed, 101));
    rng.shuffle(pos);
    rng.shuffle(neg);
    auto cal_count = [](std::size_t n) { return n >= 2 ? std::max<std::size_t>(1, n / 5) : 0; };
    const std::size_t cal_pos = cal_count(pos.size());
    const std::size_t cal_neg = cal_count(neg.size());

    SvmModel model = svm_train(x, y, dim, options);

    std::vector<double> cal_scores;
    std::vector<signed char> cal_labels;
    if (cal_pos > 0 && cal_neg > 0) {
        std::vector<SparseVec> fit_x;
        std::vector<signed char> fit_y;
        std::vector<std::size_t> cal_idx(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(cal_pos));
        cal_idx.insert(cal_idx.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(cal_neg));
        std::sort(cal_idx.begin(), cal_idx.end());
        std::vector<char> is_cal(y.size(), 0);
        for (std::size_t i : cal_idx) is_cal[i] = 1;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (!is_cal[i]) {
                fit_x.push_back(x[i]);
                fit_y.push_back(y[i]);
            }
        }
        SvmTrainOptions cal_options = options;
        cal_options.seed = derive_seed(options.seed, 102);
        const SvmModel cal_model = svm_train(fit_x, fit_y, dim, cal_options);
        for (std::size_t i : cal_idx) {
            cal_scores.push_back(svm_score(cal_model, x[i]));
            cal_labels.push_back(y[i]);
        }
    } else {
        // Too few examples to spare: calibrate on the training scores.
        for (std::size_t i = 0; i < y.size(); ++i) {
            cal_scores.push_back(svm_score(model, x[i]));
            cal_labels.push_back(y[i]);
        }
    }
    model.platt = platt_fit(cal_scores, cal_labels);
    return model;
}

GridSearchResult grid_search_svm(const std::vector<SparseVec>& x,
                                 const std::vector<signed char>& y, std::int32_t dim,
                                 const std::vector<double>& grid, int inner_folds,
                                 int max_epochs, std::uint64_t seed) {
    if (grid.empty()) throw TrainError("grid search: empty grid");
    if (inner_folds < 2) throw TrainError("grid search: inner_folds must be >= 2");
    check_classes(y);

    // Deal shuffled indices round-robin into the inner folds.
    std::vector<std::size_t> order(x.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(seed, 999));
    rng.shuffle(order);
    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(inner_folds));
    for (std::size_t i = 0; i < order.size(); ++i) {
        folds[i % static_cast<std::size_t>(inner_folds)].push_back(order[i]);
    }

    GridSearchResult result;
    for (double c : grid) {
        GridCell cell;
        cell.C = c;
        double sum = 0.0;
        int evaluated = 0;
        for (std::size_t f = 0; f < folds.size(); ++f) {
            std::vector<SparseVec> train_x, val_x;
            std::vector<signed char> train_y;
            std::vector<char> val_truth;
            for (std::size_t g = 0; g < folds.size(); ++g) {
                for (std::size_t i : folds[g]) {
                    if (g == f) {
                        val_x.push_back(x[i]);
                        val_truth.push_back(y[i] > 0);
                    } else {
                        train_x.push_back(x[i]);
                        train_y.push_back(y[i]);
                    }
                }
            }
            const bool train_ok =
                std::count(train_y.begin(), train_y.end(), static_cast<signed char>(1)) > 0 &&
                std::count(train_y.begin(), train_y.end(), static_cast<signed char>(-1)) > 0;
            const bool val_ok = std::count(val_truth.begin(), val_truth.end(), 1) > 0;
            if (!train_ok || !val_ok) {
                result.warnings.push_back("grid C=" + std::to_string(c) + ": inner fold " +
                                          std::to_string(f) + " degenerate, skipped");
                continue;
            }
            SvmTrainOptions fold_options{c, max_epochs, derive_seed(seed, 1000 + f)};
            const SvmModel fold_model = svm_train(train_x, train_y, dim, fold_options);
            std::vector<double> val_scores;
            val_scores.reserve(val_x.size());
            for (const auto& v : val_x) val_scores.push_back(svm_score(fold_model, v));
            if (auto ap = auprc(val_scores, val_truth)) {
                sum += *ap;
                ++evaluated;
            }
        }
        if (evaluated > 0) cell.mean_auprc = sum / evaluated;
        result.cells.push_back(cell);
    }

    // Pick the best cell: highest mean AUPRC, ties toward smaller C.
    std::optional<std::size_t> best_idx;
    for (std::size_t i = 0; i < result.cells.size(); ++i) {
        const auto& cell = result.cells[i];
        if (!cell.mean_auprc) continue;
        if (!best_idx) {
            best_idx = i;
            continue;
        }
        const auto& best_cell = result.cells[*best_idx];
        if (*cell.mean_auprc > *best_cell.mean_auprc ||
            (*cell.mean_auprc == *best_cell.mean_auprc && cell.C < best_cell.C)) {
            best_idx = i;
        }
    }
    if (!best_idx) throw TrainError("grid search: every inner fold was degenerate");

    result.best_C = result.cells[*best_idx].C;
    result.best = train_binary_svm_calibrated(x, y, dim, {result.best_C, max_epochs, seed});
    return result;
}

OvrSvmModel ovr_svm_train(const std::vector<SparseVec>& x, const std::vector<LabelSet>& labels,
                          std::int32_t dim, const SvmTrainOptions& options) {
    if (x.size() != labels.size() || x.empty()) throw TrainError("ovr: bad training data");
    OvrSvmModel model;
    for (int t = 0; t < kNumTypes; ++t) {
        const auto type = static_cast<KnowledgeType>(t);
        std::vector<signed char> y(x.size());
        long positives = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            y[i] = labels[i].contains(type) ? 1 : -1;
            positives += y[i] > 0;
        }
        if (positives == 0 || static_cast<std::size_t>(positives) == x.size()) {
            model.constant_zero[static_cast<std::size_t>(t)] = true;
            model.warnings.push_back(std::string(to_string(type)) +
                                     ": single-class in training, using constant-0 predictor");
            continue;
        }
        SvmTrainOptions per_type = options;
        per_type.seed = derive_seed(options.seed, static_cast<std::uint64_t>(t));
        model.models[static_cast<std::size_t>(t)] =
            train_binary_svm_calibrated(x, y, dim, per_type);
    }
    return model;
}

std::array<double, kNumTypes> ovr_scores(const OvrSvmModel& model, const SparseVec& x) {
    std::array<double, kNumTypes> out{};
    for (int t = 0; t < kNumTypes; ++t) {
        const auto ti = static_cast<std::size_t>(t);
        out[ti] = model.constant_zero[ti] ? 0.0 : svm_score(model.models[ti], x);
    }
    return out;
}

std::array<double, kNumTypes> ovr_probabilities(const OvrSvmModel& model, const SparseVec& x) {
    std::array<double, kNumTypes> out{};
    for (int t = 0; t < kNumTypes; ++t) {
        const auto ti = static_cast<std::size_t>(t);
        out[ti] = model.constant_zero[ti] ? 0.0 : svm_probability(model.models[ti], x);
    }
    return out;
}

}  // namespace kt
