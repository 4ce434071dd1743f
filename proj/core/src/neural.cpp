// SPDX-License-Identifier: Apache-2.0
#include "kt/neural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "kt/metrics.hpp"

namespace kt {

namespace {

constexpr double kProbClamp = 1e-7;

double sigmoid_scalar(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

Eigen::VectorXd sigmoid(const Eigen::VectorXd& z) {
    return z.unaryExpr([](double v) { return sigmoid_scalar(v); });
}

void check_finite(const Eigen::VectorXd& v, const char* layer) {
    if (!v.allFinite()) {
        throw TrainError(std::string("forward: non-finite activation in ") + layer);
    }
}

// Uniform fill in a pinned traversal order so initialization is reproducible.
void fill_uniform(Eigen::MatrixXd& m, double bound, Rng& rng) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-bound, bound);
    }
}

void fill_uniform(Eigen::VectorXd& v, double bound, Rng& rng) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.uniform(-bound, bound);
}

Eigen::VectorXd dropout_mask(Eigen::Index size, double rate, RunMode mode, Rng* rng) {
    if (mode != RunMode::Train || rate <= 0.0 || rng == nullptr) {
        return Eigen::VectorXd::Ones(size);
    }
    Eigen::VectorXd mask(size);
    const double keep_scale = 1.0 / (1.0 - rate);
    for (Eigen::Index i = 0; i < size; ++i) {
        mask(i) = rng->uniform01() >= rate ? keep_scale : 0.0;
    }
    return mask;
}

struct StepActivations {
    Eigen::VectorXd f, i, o, g, c, h, tanh_c;
};

// Single source of truth for the recurrence; lstm_step and forward both use it.
StepActivations lstm_step_full(const LstmParams& params, const Eigen::VectorXd& x,
                               const LstmState& prev) {
    if (x.size() != params.input_dim() || prev.h.size() != params.hidden() ||
        prev.c.size() != params.hidden()) {
        throw TrainError("lstm_step: shape mismatch");
    }
    StepActivations act;
    act.f = sigmoid(params.Wf * x + params.Uf * prev.h + params.bf);
    act.i = sigmoid(params.Wi * x + params.Ui * prev.h + params.bi);
    act.o = sigmoid(params.Wo * x + params.Uo * prev.h + params.bo);
    act.g = (params.Wc * x + params.Uc * prev.h + params.bc).array().tanh();
    act.c = act.f.cwiseProduct(prev.c) + act.i.cwiseProduct(act.g);
    act.tanh_c = act.c.array().tanh();
    act.h = act.o.cwiseProduct(act.tanh_c);
    return act;
}

// Adam update over one parameter array (MatrixXd or VectorXd).
void adam_update(auto& param, const auto& grad, auto& m, auto& v, const TrainConfig& cfg,
                 double bc1, double bc2) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    const auto m_hat = (m / bc1).eval();
    const auto v_hat = (v / bc2).eval();
    param -= cfg.learning_rate *
             m_hat.cwiseQuotient((v_hat.cwiseSqrt().array() + cfg.epsilon).matrix());
}

template <typename Fn>
void zip_dense_groups(NetworkParams& net, const NetworkGrads& grads, AdamState& state, Fn&& fn) {
    fn(net.lstm.Wf, grads.lstm.Wf, state.m.lstm.Wf, state.v.lstm.Wf);
    fn(net.lstm.Wi, grads.lstm.Wi, state.m.lstm.Wi, state.v.lstm.Wi);
    fn(net.lstm.Wo, grads.lstm.Wo, state.m.lstm.Wo, state.v.lstm.Wo);
    fn(net.lstm.Wc, grads.lstm.Wc, state.m.lstm.Wc, state.v.lstm.Wc);
    fn(net.lstm.Uf, grads.lstm.Uf, state.m.lstm.Uf, state.v.lstm.Uf);
    fn(net.lstm.Ui, grads.lstm.Ui, state.m.lstm.Ui, state.v.lstm.Ui);
    fn(net.lstm.Uo, grads.lstm.Uo, state.m.lstm.Uo, state.v.lstm.Uo);
    fn(net.lstm.Uc, grads.lstm.Uc, state.m.lstm.Uc, state.v.lstm.Uc);
    fn(net.lstm.bf, grads.lstm.bf, state.m.lstm.bf, state.v.lstm.bf);
    fn(net.lstm.bi, grads.lstm.bi, state.m.lstm.bi, state.v.lstm.bi);
    fn(net.lstm.bo, grads.lstm.bo, state.m.lstm.bo, state.v.lstm.bo);
    fn(net.lstm.bc, grads.lstm.bc, state.m.lstm.bc, state.v.lstm.bc);
    fn(net.dense1.W, grads.dense1.W, state.m.dense1.W, state.v.dense1.W);
    fn(net.dense1.b, grads.dense1.b, state.m.dense1.b, state.v.dense1.b);
    fn(net.dense2.W, grads.dense2.W, state.m.dense2.W, state.v.dense2.W);
    fn(net.dense2.b, grads.dense2.b, state.m.dense2.b, state.v.dense2.b);
    fn(net.output.W, grads.output.W, state.m.output.W, state.v.output.W);
    fn(net.output.b, grads.output.b, state.m.output.b, state.v.output.b);
}

}  // namespace

LstmState lstm_step(const LstmParams& params, const Eigen::VectorXd& x, const LstmState& prev) {
    auto act = lstm_step_full(params, x, prev);
    return {std::move(act.h), std::move(act.c)};
}

NetworkParams NetworkParams::init(EmbeddingTable embedding, int hidden, std::uint64_t seed,
                                  int dense1_units, int dense2_units, int max_len,
                                  double dropout_rate) {
    NetworkParams net;
    net.embedding = std::move(embedding);
    net.dropout_rate = dropout_rate;
    net.max_len = max_len;
    const int dim = net.embedding.dim();

    Rng rng(seed);
    const double lstm_bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    auto lstm_matrix = [&](int rows, int cols) {
        Eigen::MatrixXd m(rows, cols);
        fill_uniform(m, lstm_bound, rng);
        return m;
    };
    auto lstm_vector = [&](int size) {
        Eigen::VectorXd v(size);
        fill_uniform(v, lstm_bound, rng);
        return v;
    };
    net.lstm.Wf = lstm_matrix(hidden, dim);
    net.lstm.Wi = lstm_matrix(hidden, dim);
    net.lstm.Wo = lstm_matrix(hidden, dim);
    net.lstm.Wc = lstm_matrix(hidden, dim);
    net.lstm.Uf = lstm_matrix(hidden, hidden);
    net.lstm.Ui = lstm_matrix(hidden, hidden);
    net.lstm.Uo = lstm_matrix(hidden, hidden);
    net.lstm.Uc = lstm_matrix(hidden, hidden);
    net.lstm.bf = lstm_vector(hidden);
    net.lstm.bi = lstm_vector(hidden);
    net.lstm.bo = lstm_vector(hidden);
    net.lstm.bc = lstm_vector(hidden);

    auto dense = [&](int out, int in) {
        DenseLayer layer;
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        layer.W.resize(out, in);
        fill_uniform(layer.W, bound, rng);
        layer.b.resize(out);
        fill_uniform(layer.b, bound, rng);
        return layer;
    };
    net.dense1 = dense(dense1_units, hidden);
    net.dense2 = dense(dense2_units, dense1_units);
    net.output = dense(kNumTypes, dense2_units);
    return net;
}

std::array<double, kNumTypes> forward(const NetworkParams& net, const IndexSequence& seq,
                                      RunMode mode, ForwardCache* cache, Rng* rng) {
    const int hidden = net.lstm.hidden();
    ForwardCache local;
    ForwardCache& cc = cache != nullptr ? *cache : local;
    cc = ForwardCache{};

    LstmState state = LstmState::zero(hidden);
    const auto effective = seq.effective_length();
    for (std::int32_t t = 0; t < effective; ++t) {
        const auto row = net.embedding.effective_row(seq.ids[static_cast<std::size_t>(t)]);
        const Eigen::VectorXd x = net.embedding.matrix().row(row).transpose();
        auto act = lstm_step_full(net.lstm, x, state);
        check_finite(act.h, "lstm");
        state.h = act.h;
        state.c = act.c;
        cc.rows.push_back(row);
        cc.f.push_back(std::move(act.f));
        cc.i.push_back(std::move(act.i));
        cc.o.push_back(std::move(act.o));
        cc.g.push_back(std::move(act.g));
        cc.c.push_back(std::move(act.c));
        cc.tanh_c.push_back(std::move(act.tanh_c));
        cc.h.push_back(std::move(act.h));
    }
    cc.h_last = effective > 0 ? cc.h.back() : Eigen::VectorXd::Zero(hidden);

    cc.mask_h = dropout_mask(hidden, net.dropout_rate, mode, rng);
    cc.h_dropped = cc.h_last.cwiseProduct(cc.mask_h);

    cc.z1 = net.dense1.W * cc.h_dropped + net.dense1.b;
    cc.a1 = cc.z1.cwiseMax(0.0);
    check_finite(cc.a1, "dense1");
    cc.mask1 = dropout_mask(cc.a1.size(), net.dropout_rate, mode, rng);
    cc.a1_dropped = cc.a1.cwiseProduct(cc.mask1);

    cc.z2 = net.dense2.W * cc.a1_dropped + net.dense2.b;
    cc.a2 = cc.z2.cwiseMax(0.0);
    check_finite(cc.a2, "dense2");
    cc.mask2 = dropout_mask(cc.a2.size(), net.dropout_rate, mode, rng);
    cc.a2_dropped = cc.a2.cwiseProduct(cc.mask2);

    cc.zo = net.output.W * cc.a2_dropped + net.output.b;
    check_finite(cc.zo, "output");
    for (int j = 0; j < kNumTypes; ++j) {
        cc.prob[static_cast<std::size_t>(j)] = sigmoid_scalar(cc.zo(j));
    }
    return cc.prob;
}

double bce_loss(const std::array<double, kNumTypes>& prob, const LabelSet& target) {
    double sum = 0.0;
    for (int j = 0; j < kNumTypes; ++j) {
        const double p =
            std::clamp(prob[static_cast<std::size_t>(j)], kProbClamp, 1.0 - kProbClamp);
        const double y = target.contains(static_cast<KnowledgeType>(j)) ? 1.0 : 0.0;
        sum -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    }
    return sum / kNumTypes;
}

NetworkGrads NetworkGrads::zeros_like(const NetworkParams& net) {
    NetworkGrads g;
    auto zero_m = [](const Eigen::MatrixXd& like) {
        return Eigen::MatrixXd::Zero(like.rows(), like.cols()).eval();
    };
    auto zero_v = [](const Eigen::VectorXd& like) {
        return Eigen::VectorXd::Zero(like.size()).eval();
    };
    g.lstm.Wf = zero_m(net.lstm.Wf);
    g.lstm.Wi = zero_m(net.lstm.Wi);
    g.lstm.Wo = zero_m(net.lstm.Wo);
    g.lstm.Wc = zero_m(net.lstm.Wc);
    g.lstm.Uf = zero_m(net.lstm.Uf);
    g.lstm.Ui = zero_m(net.lstm.Ui);
    g.lstm.Uo = zero_m(net.lstm.Uo);
    g.lstm.Uc = zero_m(net.lstm.Uc);
    g.lstm.bf = zero_v(net.lstm.bf);
    g.lstm.bi = zero_v(net.lstm.bi);
    g.lstm.bo = zero_v(net.lstm.bo);
    g.lstm.bc = zero_v(net.lstm.bc);
    g.dense1.W = zero_m(net.dense1.W);
    g.dense1.b = zero_v(net.dense1.b);
    g.dense2.W = zero_m(net.dense2.W);
    g.dense2.b = zero_v(net.dense2.b);
    g.output.W = zero_m(net.output.W);
    g.output.b = zero_v(net.output.b);
    return g;
}

void NetworkGrads::add(const NetworkGrads& other) {
    lstm.Wf += other.lstm.Wf;
    lstm.Wi += other.lstm.Wi;
    lstm.Wo += other.lstm.Wo;
    lstm.Wc += other.lstm.Wc;
    lstm.Uf += other.lstm.Uf;
    lstm.Ui += other.lstm.Ui;
    lstm.Uo += other.lstm.Uo;
    lstm.Uc += other.lstm.Uc;
    lstm.bf += other.lstm.bf;
    lstm.bi += other.lstm.bi;
    lstm.bo += other.lstm.bo;
    lstm.bc += other.lstm.bc;
    dense1.W += other.dense1.W;
    dense1.b += other.dense1.b;
    dense2.W += other.dense2.W;
    dense2.b += other.dense2.b;
    output.W += other.output.W;
    output.b += other.output.b;
    for (const auto& [row, grad] : other.embedding_rows) {
        auto it = embedding_rows.find(row);
        if (it == embedding_rows.end()) embedding_rows.emplace(row, grad);
        else it->second += grad;
    }
}

void NetworkGrads::scale(double factor) {
    lstm.Wf *= factor;
    lstm.Wi *= factor;
    lstm.Wo *= factor;
    lstm.Wc *= factor;
    lstm.Uf *= factor;
    lstm.Ui *= factor;
    lstm.Uo *= factor;
    lstm.Uc *= factor;
    lstm.bf *= factor;
    lstm.bi *= factor;
    lstm.bo *= factor;
    lstm.bc *= factor;
    dense1.W *= factor;
    dense1.b *= factor;
    dense2.W *= factor;
    dense2.b *= factor;
    output.W *= factor;
    output.b *= factor;
    for (auto& [row, grad] : embedding_rows) grad *= factor;
}

NetworkGrads backward(const NetworkParams& net, const ForwardCache& cache,
                      const LabelSet& target) {
    NetworkGrads grads = NetworkGrads::zeros_like(net);
    const int hidden = net.lstm.hidden();

    // Output layer: chain through the clamp, the sigmoid, and the 1/12 mean.
    Eigen::VectorXd dzo(kNumTypes);
    for (int j = 0; j < kNumTypes; ++j) {
        const double p = cache.prob[static_cast<std::size_t>(j)];
        const double y = target.contains(static_cast<KnowledgeType>(j)) ? 1.0 : 0.0;
        if (p <= kProbClamp || p >= 1.0 - kProbClamp) {
            dzo(j) = 0.0;  // clamped: loss is locally constant in p
        } else {
            const double dldp = (-y / p + (1.0 - y) / (1.0 - p)) / kNumTypes;
            dzo(j) = dldp * p * (1.0 - p);
        }
    }
    grads.output.W = dzo * cache.a2_dropped.transpose();
    grads.output.b = dzo;

    const Eigen::VectorXd da2 =
        (net.output.W.transpose() * dzo).cwiseProduct(cache.mask2);
    const Eigen::VectorXd dz2 =
        da2.cwiseProduct((cache.z2.array() > 0.0).cast<double>().matrix());
    grads.dense2.W = dz2 * cache.a1_dropped.transpose();
    grads.dense2.b = dz2;

    const Eigen::VectorXd da1 =
        (net.dense2.W.transpose() * dz2).cwiseProduct(cache.mask1);
    const Eigen::VectorXd dz1 =
        da1.cwiseProduct((cache.z1.array() > 0.0).cast<double>().matrix());
    grads.dense1.W = dz1 * cache.h_dropped.transpose();
    grads.dense1.b = dz1;

    const auto steps = static_cast<std::ptrdiff_t>(cache.h.size());
    Eigen::VectorXd dh_rec = Eigen::VectorXd::Zero(hidden);
    Eigen::VectorXd dc_rec = Eigen::VectorXd::Zero(hidden);
    const Eigen::VectorXd dh_last = (net.dense1.W.transpose() * dz1).cwiseProduct(cache.mask_h);

    for (std::ptrdiff_t t = steps - 1; t >= 0; --t) {
        const auto ti = static_cast<std::size_t>(t);
        Eigen::VectorXd dh = dh_rec;
        if (t == steps - 1) dh += dh_last;

        const Eigen::VectorXd& f = cache.f[ti];
        const Eigen::VectorXd& i = cache.i[ti];
        const Eigen::VectorXd& o = cache.o[ti];
        const Eigen::VectorXd& g = cache.g[ti];
        const Eigen::VectorXd& tanh_c = cache.tanh_c[ti];
        const Eigen::VectorXd c_prev =
            t > 0 ? cache.c[ti - 1] : Eigen::VectorXd::Zero(hidden);
        const Eigen::VectorXd h_prev =
            t > 0 ? cache.h[ti - 1] : Eigen::VectorXd::Zero(hidden);

        const Eigen::VectorXd dc =
            dc_rec +
            dh.cwiseProduct(o).cwiseProduct(
                (1.0 - tanh_c.array().square()).matrix());
        const Eigen::VectorXd do_gate = dh.cwiseProduct(tanh_c);
        const Eigen::VectorXd df = dc.cwiseProduct(c_prev);
        const Eigen::VectorXd di = dc.cwiseProduct(g);
        const Eigen::VectorXd dg = dc.cwiseProduct(i);

        const Eigen::VectorXd dzf =
            df.cwiseProduct(f).cwiseProduct((1.0 - f.array()).matrix());
        const Eigen::VectorXd dzi =
            di.cwiseProduct(i).cwiseProduct((1.0 - i.array()).matrix());
        const Eigen::VectorXd dzog =
            do_gate.cwiseProduct(o).cwiseProduct((1.0 - o.array()).matrix());
        const Eigen::VectorXd dzg = dg.cwiseProduct((1.0 - g.array().square()).matrix());

        const Eigen::VectorXd x =
            net.embedding.matrix().row(cache.rows[ti]).transpose();
        grads.lstm.Wf += dzf * x.transpose();
        grads.lstm.Wi += dzi * x.transpose();
        grads.lstm.Wo += dzog * x.transpose();
        grads.lstm.Wc += dzg * x.transpose();
        grads.lstm.Uf += dzf * h_prev.transpose();
        grads.lstm.Ui += dzi * h_prev.transpose();
        grads.lstm.Uo += dzog * h_prev.transpose();
        grads.lstm.Uc += dzg * h_prev.transpose();
        grads.lstm.bf += dzf;
        grads.lstm.bi += dzi;
        grads.lstm.bo += dzog;
        grads.lstm.bc += dzg;

        if (net.embedding.is_trainable(cache.rows[ti])) {
            const Eigen::VectorXd dx = net.lstm.Wf.transpose() * dzf +
                                       net.lstm.Wi.transpose() * dzi +
                                       net.lstm.Wo.transpose() * dzog +
                                       net.lstm.Wc.transpose() * dzg;
            auto it = grads.embedding_rows.find(cache.rows[ti]);
            if (it == grads.embedding_rows.end()) {
                grads.embedding_rows.emplace(cache.rows[ti], dx);
            } else {
                it->second += dx;
            }
        }

        dh_rec = net.lstm.Uf.transpose() * dzf + net.lstm.Ui.transpose() * dzi +
                 net.lstm.Uo.transpose() * dzog + net.lstm.Uc.transpose() * dzg;
        dc_rec = dc.cwiseProduct(f);
    }
    return grads;
}

AdamState AdamState::init(const NetworkParams& net) {
    AdamState state;
    state.m = NetworkGrads::zeros_like(net);
    state.v = NetworkGrads::zeros_like(net);
    return state;
}

void adam_step(NetworkParams& net, const NetworkGrads& grads, AdamState& state,
               const TrainConfig& config) {
    ++state.t;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));

    zip_dense_groups(net, grads, state, [&](auto& param, const auto& grad, auto& m, auto& v) {
        adam_update(param, grad, m, v, config, bc1, bc2);
    });

    const int dim = net.embedding.dim();
    for (const auto& [row, grad] : grads.embedding_rows) {
        auto [it, inserted] = state.emb.try_emplace(
            row, Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim));
        auto& [m, v] = it->second;
        m = config.beta1 * m + (1.0 - config.beta1) * grad;
        v = config.beta2 * v + (1.0 - config.beta2) * grad.cwiseProduct(grad);
        const Eigen::VectorXd m_hat = m / bc1;
        const Eigen::VectorXd v_hat = v / bc2;
        net.embedding.matrix().row(row).transpose() -=
            config.learning_rate *
            m_hat.cwiseQuotient((v_hat.cwiseSqrt().array() + config.epsilon).matrix());
    }
}

std::optional<double> dataset_macro_auc(const NetworkParams& net, const SequenceDataset& data) {
    if (data.empty()) return std::nullopt;
    PredictionMatrix pred;
    pred.scores.resize(static_cast<Eigen::Index>(data.size()), kNumTypes);
    pred.truth.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto p = forward(net, data[i].seq, RunMode::Infer);
        for (int j = 0; j < kNumTypes; ++j) {
            pred.scores(static_cast<Eigen::Index>(i), j) = p[static_cast<std::size_t>(j)];
        }
        pred.truth.push_back(data[i].labels);
    }
    return macro_metrics(pred).auc;
}

TrainHistory train_network(NetworkParams& net, const SequenceDataset& train,
                           const SequenceDataset& valid, const TrainConfig& config) {
    if (train.empty()) throw TrainError("train_network: empty training data");
    net.dropout_rate = config.dropout_rate;

    Rng rng(config.seed);
    AdamState adam = AdamState::init(net);
    TrainHistory history;
    history.train_loss.reserve(static_cast<std::size_t>(config.epochs));

    NetworkParams best;
    double best_auc = -1.0;
    int best_epoch = -1;

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const auto end =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            NetworkGrads batch = NetworkGrads::zeros_like(net);
            for (std::size_t k = start; k < end; ++k) {
                const auto& example = train[order[k]];
                ForwardCache cache;
                const auto prob = forward(net, example.seq, RunMode::Train, &cache, &rng);
                loss_sum += bce_loss(prob, example.labels);
                batch.add(backward(net, cache, example.labels));
            }
            batch.scale(1.0 / static_cast<double>(end - start));
            adam_step(net, batch, adam, config);
        }
        const double mean_loss = loss_sum / static_cast<double>(train.size());
        if (!std::isfinite(mean_loss)) {
            throw TrainError("train_network: non-finite loss at epoch " + std::to_string(epoch) +
                             " (lr=" + std::to_string(config.learning_rate) + ")");
        }
        history.train_loss.push_back(mean_loss);

        if (!valid.empty()) {
            const auto auc = dataset_macro_auc(net, valid);
            history.val_macro_auc.push_back(
                auc.value_or(std::numeric_limits<double>::quiet_NaN()));
            if (auc && *auc > best_auc) {
                best_auc = *auc;
                best = net;
                best_epoch = epoch;
            }
        }
    }

    if (best_epoch >= 0) {
        net = std::move(best);
        history.best_epoch = best_epoch;
    } else {
        history.best_epoch = config.epochs - 1;
    }
    return history;
}

std::array<double, kNumTypes> predict(const NetworkParams& net, const IndexSequence& seq) {
    return forward(net, seq, RunMode::Infer);
}

}  // namespace kt
