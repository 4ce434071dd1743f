// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "kt/embeddings.hpp"

namespace kt {

/// Per-gate LSTM parameters: input weights (H x dim), recurrent weights
/// (H x H), biases (H).
struct LstmParams {
    Eigen::MatrixXd Wf, Wi, Wo, Wc;
    Eigen::MatrixXd Uf, Ui, Uo, Uc;
    Eigen::VectorXd bf, bi, bo, bc;

    int hidden() const { return static_cast<int>(Wf.rows()); }
    int input_dim() const { return static_cast<int>(Wf.cols()); }
};

/// Hidden vector and memory cell; zeros at sequence start.
struct LstmState {
    Eigen::VectorXd h;
    Eigen::VectorXd c;

    static LstmState zero(int hidden) {
        return {Eigen::VectorXd::Zero(hidden), Eigen::VectorXd::Zero(hidden)};
    }
};

/// One recurrence step:
///   f = sigmoid(Wf x + Uf h + bf), i = sigmoid(Wi x + Ui h + bi),
///   o = sigmoid(Wo x + Uo h + bo), g = tanh(Wc x + Uc h + bc),
///   C' = f (*) C + i (*) g, h' = o (*) tanh(C').
LstmState lstm_step(const LstmParams& params, const Eigen::VectorXd& x, const LstmState& prev);

struct DenseLayer {
    Eigen::MatrixXd W;
    Eigen::VectorXd b;
};

/// Full network: embedding input, single LSTM layer, dense 128 -> dense 64 ->
/// sigmoid output over the 12 types, with inverted dropout on the LSTM output
/// and on each dense activation.
struct NetworkParams {
    EmbeddingTable embedding;
    LstmParams lstm;
    DenseLayer dense1;
    DenseLayer dense2;
    DenseLayer output;
    double dropout_rate = 0.2;
    int max_len = 300;

    /// Seeded uniform [-1/sqrt(fan_in), +1/sqrt(fan_in)] initialization.
    static NetworkParams init(EmbeddingTable embedding, int hidden, std::uint64_t seed,
                              int dense1_units = 128, int dense2_units = 64, int max_len = 300,
                              double dropout_rate = 0.2);
};

enum class RunMode { Train, Infer };

/// Activations recorded by forward() for backpropagation through time.
struct ForwardCache {
    std::vector<std::int32_t> rows;  // effective embedding row per non-pad step
    std::vector<Eigen::VectorXd> f, i, o, g, c, h, tanh_c;
    Eigen::VectorXd h_last, h_dropped;
    Eigen::VectorXd z1, a1, a1_dropped;
    Eigen::VectorXd z2, a2, a2_dropped;
    Eigen::VectorXd zo;
    std::array<double, kNumTypes> prob{};
    Eigen::VectorXd mask_h, mask1, mask2;  // inverted dropout masks
};

/// Runs the network over the non-pad prefix of the sequence (an all-pad input
/// feeds h = 0 to the dense stack). Train mode draws dropout masks from rng;
/// Infer mode is deterministic. Throws TrainError on non-finite activations,
/// naming the layer.
std::array<double, kNumTypes> forward(const NetworkParams& net, const IndexSequence& seq,
                                      RunMode mode, ForwardCache* cache = nullptr,
                                      Rng* rng = nullptr);

/// Mean sigmoidal cross-entropy over the 12 outputs, probabilities clamped to
/// [1e-7, 1 - 1e-7].
double bce_loss(const std::array<double, kNumTypes>& prob, const LabelSet& target);

/// Gradient container mirroring NetworkParams; embedding gradients are kept
/// per trainable row.
struct NetworkGrads {
    LstmParams lstm;
    DenseLayer dense1;
    DenseLayer dense2;
    DenseLayer output;
    std::map<std::int32_t, Eigen::VectorXd> embedding_rows;

    static NetworkGrads zeros_like(const NetworkParams& net);
    void add(const NetworkGrads& other);
    void scale(double factor);
};

/// Exact gradients of bce_loss(forward(...)) by backpropagation through time
/// over the cached non-pad steps. Pad positions contribute nothing; embedding
/// gradients are emitted only for trainable rows.
NetworkGrads backward(const NetworkParams& net, const ForwardCache& cache,
                      const LabelSet& target);

struct TrainConfig {
    int epochs = 100;
    int batch_size = 32;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double dropout_rate = 0.2;
    std::uint64_t seed = 0;
};

/// Bias-corrected first/second-moment state for every parameter group,
/// including lazily allocated per-row state for trainable embedding rows.
struct AdamState {
    NetworkGrads m;
    NetworkGrads v;
    std::map<std::int32_t, std::pair<Eigen::VectorXd, Eigen::VectorXd>> emb;
    long t = 0;

    static AdamState init(const NetworkParams& net);
};

void adam_step(NetworkParams& net, const NetworkGrads& grads, AdamState& state,
               const TrainConfig& config);

struct LabeledSequence {
    IndexSequence seq;
    LabelSet labels;
};
using SequenceDataset = std::vector<LabeledSequence>;

struct TrainHistory {
    std::vector<double> train_loss;     // mean per-example loss per epoch
    std::vector<double> val_macro_auc;  // NaN when undefined; empty without validation data
    int best_epoch = -1;
};

/// Seeded shuffling, mini-batches of config.batch_size (final partial batch
/// allowed), dropout active. Returns the parameters of the epoch with the
/// best validation MacroAUC (last epoch when no validation data is given).
/// Single-threaded: fixed seed means a bit-identical history.
TrainHistory train_network(NetworkParams& net, const SequenceDataset& train,
                           const SequenceDataset& valid, const TrainConfig& config);

/// Forward in infer mode.
std::array<double, kNumTypes> predict(const NetworkParams& net, const IndexSequence& seq);

/// Validation MacroAUC (types with single-class truth excluded); absent when
/// no type qualifies.
std::optional<double> dataset_macro_auc(const NetworkParams& net, const SequenceDataset& data);

/// "KTN1" container: architecture header, embedding block, then row-major
/// 32-bit float parameter blocks. Loading reproduces predictions to <= 1e-6
/// absolute.
void save_network(const NetworkParams& net, const std::filesystem::path& path);
NetworkParams load_network(const std::filesystem::path& path);

/// Stream forms, used when the network block is nested inside another
/// container.
void write_network(std::ostream& os, const NetworkParams& net);
NetworkParams read_network(std::istream& is);

}  // namespace kt
