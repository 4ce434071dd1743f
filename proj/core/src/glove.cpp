// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "kt/embeddings.hpp"

namespace kt {

GloveResult train_glove(const CooccurrenceMatrix& matrix, const GloveConfig& config) {
    if (matrix.nnz() == 0) throw DataError("train_glove: empty co-occurrence matrix");
    if (config.dim < 1) throw DataError("train_glove: dim must be >= 1");

    const auto& vocab = matrix.vocabulary();
    const int v = vocab.size();
    const int dim = config.dim;

    Rng rng(config.seed);
    auto init = [&](Eigen::MatrixXd& m) {
        m.resize(v + 1, dim);  // row 0 unused; vocabulary indices start at 1
        const double half = 0.5 / dim;
        for (Eigen::Index r = 1; r <= v; ++r) {
            for (int d = 0; d < dim; ++d) m(r, d) = rng.uniform(-half, half);
        }
        m.row(0).setZero();
    };
    Eigen::MatrixXd w, wc;
    init(w);
    init(wc);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(v + 1);
    Eigen::VectorXd bc = Eigen::VectorXd::Zero(v + 1);
    const double half = 0.5 / dim;
    for (int r = 1; r <= v; ++r) b(r) = rng.uniform(-half, half);
    for (int r = 1; r <= v; ++r) bc(r) = rng.uniform(-half, half);

    // AdaGrad accumulators, initialized to 1 so the first step uses the base rate.
    Eigen::MatrixXd gw = Eigen::MatrixXd::Ones(v + 1, dim);
    Eigen::MatrixXd gwc = Eigen::MatrixXd::Ones(v + 1, dim);
    Eigen::VectorXd gb = Eigen::VectorXd::Ones(v + 1);
    Eigen::VectorXd gbc = Eigen::VectorXd::Ones(v + 1);

    std::vector<std::size_t> order(matrix.nnz());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    GloveResult result;
    result.epoch_loss.reserve(static_cast<std::size_t>(config.epochs));
    const double eta = config.learning_rate;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double loss = 0.0;
        for (std::size_t pos : order) {
            const auto& e = matrix.entries()[pos];
            const double f = e.x < config.x_max ? std::pow(e.x / config.x_max, config.alpha) : 1.0;
            const double diff = w.row(e.i).dot(wc.row(e.j)) + b(e.i) + bc(e.j) - std::log(e.x);
            const double fdiff = f * diff;
            loss += 0.5 * fdiff * diff;

            for (int d = 0; d < dim; ++d) {
                const double grad_w = fdiff * wc(e.j, d);
                const double grad_wc = fdiff * w(e.i, d);
                w(e.i, d) -= eta * grad_w / std::sqrt(gw(e.i, d));
                wc(e.j, d) -= eta * grad_wc / std::sqrt(gwc(e.j, d));
                gw(e.i, d) += grad_w * grad_w;
                gwc(e.j, d) += grad_wc * grad_wc;
            }
            b(e.i) -= eta * fdiff / std::sqrt(gb(e.i));
            bc(e.j) -= eta * fdiff / std::sqrt(gbc(e.j));
            gb(e.i) += fdiff * fdiff;
            gbc(e.j) += fdiff * fdiff;
        }
        const double mean_loss = loss / static_cast<double>(matrix.nnz());
        if (!std::isfinite(mean_loss)) {
            throw TrainError("train_glove: non-finite loss at epoch " + std::to_string(epoch));
        }
        result.epoch_loss.push_back(mean_loss);
    }

    std::unordered_map<std::string, Eigen::VectorXd> rows;
    rows.reserve(static_cast<std::size_t>(v));
    for (std::int32_t idx = 1; idx <= v; ++idx) {
        rows.emplace(vocab.token_at(idx), 0.5 * (w.row(idx) + wc.row(idx)).transpose());
    }
    result.table = EmbeddingTable::assemble(vocab, dim, OovPolicy::zero(), rows);
    result.w = std::move(w);
    result.wc = std::move(wc);
    result.b = std::move(b);
    result.bc = std::move(bc);
    return result;
}

}  // namespace kt
