// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "kt/text.hpp"

namespace kt {

/// What to do with vocabulary words that are missing from a pre-trained
/// embedding file, and with unknown tokens at inference time.
enum class OovPolicyKind : std::uint8_t {
    /// Missing words and unknown tokens map to the zero vector.
    ZeroVector = 0,
    /// Each missing word gets its own seeded random row, marked trainable so
    /// network training can learn it ("on-the-fly" configuration).
    TrainableRandom = 1,
    /// All missing words and unknown tokens share the single OOV row.
    SharedOovRow = 2,
};

struct OovPolicy {
    OovPolicyKind kind = OovPolicyKind::ZeroVector;
    std::uint64_t seed = 0;
    double scale = 0.1;  // half-width of the uniform init for random rows

    static OovPolicy zero() { return {}; }
    static OovPolicy trainable_random(std::uint64_t seed, double scale = 0.1) {
        return {OovPolicyKind::TrainableRandom, seed, scale};
    }
    static OovPolicy shared(std::uint64_t seed, double scale = 0.1) {
        return {OovPolicyKind::SharedOovRow, seed, scale};
    }
};

/// Vocabulary-indexed word vectors. Storage rows: 0 is the pad vector
/// (identically zero, never trainable), 1..V the vocabulary words, V+1 the
/// shared OOV row for tokens unseen in training text.
class EmbeddingTable {
public:
    EmbeddingTable() = default;

    int dim() const { return static_cast<int>(matrix_.cols()); }
    std::int32_t row_count() const { return static_cast<std::int32_t>(matrix_.rows()); }
    std::int32_t shared_oov_row() const { return vocab_.size() + 1; }
    const Vocabulary& vocabulary() const { return vocab_; }
    const OovPolicy& policy() const { return policy_; }

    const Eigen::MatrixXd& matrix() const { return matrix_; }
    Eigen::MatrixXd& matrix() { return matrix_; }

    /// Storage row for a sequence index after OOV-policy routing.
    std::int32_t effective_row(std::int32_t seq_index) const;

    bool is_trainable(std::int32_t row) const {
        return trainable_mask_[static_cast<std::size_t>(row)] != 0;
    }
    const std::vector<std::int32_t>& trainable_rows() const { return trainable_rows_; }

    /// Vocabulary words absent from the source embedding file.
    std::size_t missing_count() const { return missing_rows_.size(); }
    bool is_missing(std::int32_t row) const;

    /// Rejects NaN/Inf entries and a non-zero pad row.
    void validate() const;

    /// Assembles a table from per-word vectors; words not covered fall under
    /// the policy. Used by the text loader and the GloVe trainer.
    static EmbeddingTable assemble(const Vocabulary& vocab, int dim, OovPolicy policy,
                                   const std::unordered_map<std::string, Eigen::VectorXd>& rows);

    /// Rebuilds a table from serialized parts (cache and model loaders).
    static EmbeddingTable restore(Vocabulary vocab, Eigen::MatrixXd matrix, OovPolicy policy,
                                  std::vector<std::int32_t> missing_rows,
                                  std::vector<std::int32_t> trainable_rows);

private:
    Vocabulary vocab_;
    Eigen::MatrixXd matrix_;  // (V+2) x dim
    OovPolicy policy_;
    std::vector<std::int32_t> missing_rows_;   // ascending
    std::vector<std::int32_t> trainable_rows_; // ascending
    std::vector<std::uint8_t> trainable_mask_;
};

/// Parses a whitespace-separated "word v1 ... vd" file restricted to the
/// given vocabulary. Rejects dimension mismatches and malformed lines by
/// line number; words absent from the file fall under the policy.
EmbeddingTable load_embedding_text(const std::filesystem::path& path, const Vocabulary& vocab,
                                   int expected_dim, OovPolicy policy);

/// Writes the vocabulary rows in the text format accepted by
/// load_embedding_text.
void save_embedding_text(const EmbeddingTable& table, const std::filesystem::path& path);

/// Binary cache: magic "EMB1", little-endian dims, row-major 32-bit floats,
/// then the vocabulary hash and policy metadata needed to rebuild the table.
void save_embedding_cache(const EmbeddingTable& table, const std::filesystem::path& path);
EmbeddingTable load_embedding_cache(const std::filesystem::path& path, const Vocabulary& vocab);

/// Symmetric word co-occurrence counts: each pair of tokens within `window`
/// positions adds weight 1/distance to both X_ij and X_ji.
class CooccurrenceMatrix {
public:
    struct Entry {
        std::int32_t i;
        std::int32_t j;
        double x;
    };

    CooccurrenceMatrix() = default;
    CooccurrenceMatrix(Vocabulary vocab, std::unordered_map<std::uint64_t, double> weights);

    const Vocabulary& vocabulary() const { return vocab_; }
    std::size_t nnz() const { return entries_.size(); }
    const std::vector<Entry>& entries() const { return entries_; }  // sorted by (i, j)

    double at(std::int32_t i, std::int32_t j) const;
    double row_sum(std::int32_t i) const;  // X_i = sum_k X_ik

    /// P(j|i) = X_ij / X_i. Requires X_i > 0.
    double prob(std::int32_t i, std::int32_t j) const;

private:
    Vocabulary vocab_;
    std::vector<Entry> entries_;
    std::unordered_map<std::uint64_t, double> weights_;
    std::vector<double> row_sums_;
};

CooccurrenceMatrix build_cooccurrence(const std::vector<std::vector<std::string>>& docs,
                                      int window = 10);
CooccurrenceMatrix build_cooccurrence(const Corpus& corpus, const StopwordSet& stopwords,
                                      int window = 10);

struct GloveConfig {
    int dim = 50;
    int epochs = 25;
    double learning_rate = 0.05;  // AdaGrad base step
    double x_max = 100.0;
    double alpha = 0.75;
    std::uint64_t seed = 0;
};

struct GloveResult {
    EmbeddingTable table;            // word + context vectors averaged
    std::vector<double> epoch_loss;  // mean weighted squared error per epoch

    // Raw factors (rows 1..V; row 0 unused), kept for diagnostics.
    Eigen::MatrixXd w;
    Eigen::MatrixXd wc;
    Eigen::VectorXd b;
    Eigen::VectorXd bc;
};

/// Fits word/context vectors and biases to log co-occurrence counts by
/// minimizing sum f(X_ij) (w_i . w~_j + b_i + b~_j - log X_ij)^2 with
/// f(x) = min(1, (x/x_max)^alpha), per-parameter adaptive (AdaGrad) steps,
/// and uniform [-0.5/dim, 0.5/dim] initialization. Single-threaded and
/// bit-reproducible for a fixed seed.
GloveResult train_glove(const CooccurrenceMatrix& matrix, const GloveConfig& config);

/// Embeds a fixed-length index sequence: row t is the (policy-routed) vector
/// of token t; pad positions map to the zero row. Never emits NaN.
Eigen::MatrixXd embed_sequence(const IndexSequence& seq, const EmbeddingTable& table);

}  // namespace kt
