// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "kt/corpus.hpp"

namespace kt {

using StopwordSet = std::unordered_set<std::string>;

/// Built-in English stopword list (~150 function words).
const StopwordSet& default_stopwords();

/// Loads a stopword file: one token per line, UTF-8, '#' starts a comment.
StopwordSet load_stopword_file(const std::filesystem::path& path);

/// Lowercases, splits on maximal runs of characters outside [a-z0-9_.],
/// trims leading/trailing '.' from each token, then drops stopwords and
/// empty tokens. Keeps '.' and '_' inside tokens so identifiers like
/// "math.pi" survive.
std::vector<std::string> preprocess(std::string_view text, const StopwordSet& stopwords);

/// Token -> index map with contiguous indices 1..size. Index 0 is reserved
/// for padding. Built from training text only, in first-occurrence order.
class Vocabulary {
public:
    Vocabulary() = default;

    static Vocabulary build(const Corpus& train, const StopwordSet& stopwords);

    /// Rebuilds from an ordered token list (token i maps to index i+1).
    static Vocabulary from_tokens(std::vector<std::string> tokens);

    std::int32_t size() const { return static_cast<std::int32_t>(tokens_.size()); }

    /// Index in [1, size], or 0 when the token is unknown.
    std::int32_t index_of(const std::string& token) const {
        auto it = index_.find(token);
        return it == index_.end() ? 0 : it->second;
    }

    /// Token for an index in [1, size].
    const std::string& token_at(std::int32_t index) const {
        return tokens_[static_cast<std::size_t>(index) - 1];
    }

    const std::vector<std::string>& tokens() const { return tokens_; }

    static constexpr std::int32_t pad_index() { return 0; }

    /// Dedicated slot for tokens unseen in training text.
    std::int32_t oov_index() const { return size() + 1; }

    std::uint64_t content_hash() const;

private:
    std::unordered_map<std::string, std::int32_t> index_;
    std::vector<std::string> tokens_;
};

/// Sparse feature-count vector; entries sorted by feature index, counts >= 1.
struct SparseVec {
    std::vector<std::pair<std::int32_t, double>> items;

    double dot(const SparseVec& other) const;
    double squared_norm() const;
    double total() const;
};

double euclidean_distance(const SparseVec& a, const SparseVec& b);

/// Unigram + adjacent-bigram feature space, fixed from the training corpus.
/// N-grams unseen in training contribute nothing when vectorizing.
class NgramSpace {
public:
    NgramSpace() = default;

    static NgramSpace build(const Corpus& train, const StopwordSet& stopwords);
    static NgramSpace from_features(std::vector<std::string> features);

    std::int32_t dim() const { return static_cast<std::int32_t>(features_.size()); }
    const std::vector<std::string>& features() const { return features_; }

    SparseVec vectorize(const std::vector<std::string>& tokens) const;

    std::uint64_t content_hash() const;

    /// Bigrams are keyed with a ' ' separator, which the tokenizer can never
    /// produce inside a token.
    static std::string bigram_key(const std::string& a, const std::string& b) {
        return a + ' ' + b;
    }

private:
    std::unordered_map<std::string, std::int32_t> columns_;
    std::vector<std::string> features_;
};

/// Fixed-length sequence of vocabulary indices. Pad value 0 forms a
/// contiguous suffix; out-of-vocabulary tokens occupy the dedicated OOV slot.
struct IndexSequence {
    std::vector<std::int32_t> ids;

    std::int32_t length() const { return static_cast<std::int32_t>(ids.size()); }

    /// Number of leading non-pad positions.
    std::int32_t effective_length() const;
};

IndexSequence to_sequence(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                          std::int32_t max_len = 300);

}  // namespace kt
