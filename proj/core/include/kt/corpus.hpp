// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kt/common.hpp"

namespace kt {

/// The 12 knowledge types found in API reference documentation, in taxonomy
/// order. Ordinals 0..11 are stable and used throughout file formats.
enum class KnowledgeType : std::uint8_t {
    Functionality = 0,
    Concept,
    Directive,
    Purpose,
    Quality,
    Control,
    Structure,
    Pattern,
    Example,
    Environment,
    Reference,
    NonInformation,
};

inline constexpr int kNumTypes = 12;

/// Canonical machine name, e.g. "NonInformation". Used in all file formats.
std::string_view to_string(KnowledgeType t);

/// Human-readable name for report tables, e.g. "Non-information".
std::string_view display_name(KnowledgeType t);

/// Parses a canonical name (case-sensitive). Returns nullopt for unknown names.
std::optional<KnowledgeType> parse_knowledge_type(std::string_view name);

const std::array<KnowledgeType, kNumTypes>& all_types();

/// A set of knowledge types packed into a 12-bit mask.
class LabelSet {
public:
    LabelSet() = default;
    LabelSet(std::initializer_list<KnowledgeType> types) {
        for (KnowledgeType t : types) insert(t);
    }
    static LabelSet from_bits(std::uint16_t bits) {
        LabelSet s;
        s.bits_ = static_cast<std::uint16_t>(bits & 0x0fff);
        return s;
    }

    void insert(KnowledgeType t) { bits_ |= mask(t); }
    void erase(KnowledgeType t) { bits_ &= static_cast<std::uint16_t>(~mask(t)); }
    bool contains(KnowledgeType t) const { return (bits_ & mask(t)) != 0; }
    bool empty() const { return bits_ == 0; }
    int size() const { return std::popcount(bits_); }
    std::uint16_t bits() const { return bits_; }
    std::vector<KnowledgeType> types() const;

    bool operator==(const LabelSet&) const = default;

private:
    static std::uint16_t mask(KnowledgeType t) {
        return static_cast<std::uint16_t>(1u << static_cast<unsigned>(t));
    }
    std::uint16_t bits_ = 0;
};

/// One API reference page: identifier, API element name, raw text, labels.
/// Labels may be empty only for unlabeled inference inputs.
struct Document {
    std::string id;
    std::string element;
    std::string text;
    LabelSet labels;
};

/// Ordered, immutable collection of documents with cached per-type counts.
class Corpus {
public:
    Corpus() = default;

    /// Validates id uniqueness and caches label counts.
    Corpus(std::string name, std::vector<Document> docs);

    const std::string& name() const { return name_; }
    const std::vector<Document>& docs() const { return docs_; }
    const Document& doc(std::size_t i) const { return docs_[i]; }
    std::size_t size() const { return docs_.size(); }
    bool empty() const { return docs_.empty(); }

    /// Cached at construction; always equal to recount_labels().
    const std::array<int, kNumTypes>& label_counts() const { return label_counts_; }

    /// Recomputes counts from the documents (used by consistency checks).
    std::array<int, kNumTypes> recount_labels() const;

    std::size_t labeled_count() const { return labeled_; }

private:
    std::string name_;
    std::vector<Document> docs_;
    std::array<int, kNumTypes> label_counts_{};
    std::size_t labeled_ = 0;
};

enum class CorpusFormat { Jsonl, Csv };

/// Loads a corpus file. With require_labels, every document must carry at
/// least one label and non-empty text; inference inputs may omit both.
/// Parse failures report the offending line/row.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   bool require_labels = true);

/// Writes one JSON object per line with keys id, element, text, labels.
void save_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path);

/// Per-document label-concurrence scores plus per-type imbalance ratios.
/// Unlabeled documents score 0.
struct ScumbleReport {
    std::vector<double> per_document;        // one score in [0,1] per document
    double mean = 0.0;                       // arithmetic mean of per_document
    std::array<double, kNumTypes> irlbl{};   // imbalance ratio >= 1; 0 marks types absent from the corpus
};

ScumbleReport scumble(const Corpus& corpus);

/// Under-samples frequent-type documents, then over-samples rare-type ones:
/// removes floor(0.30 * |candidates|) of the documents whose labels contain
/// Functionality or NonInformation, then duplicates floor(0.50 * |candidates|)
/// of the remaining documents containing Environment or Quality. Survivor
/// order is preserved; duplicates are appended with ids "<orig>#dup1".
/// Must only ever be applied to a training split.
Corpus resample_training_set(const Corpus& train, std::uint64_t seed);

/// Disjoint train/test partition. The test side receives round(fraction * n)
/// documents (round half away from zero) chosen uniformly under the seed;
/// both sides keep the original document order.
std::pair<Corpus, Corpus> split_holdout(const Corpus& corpus, double test_fraction,
                                        std::uint64_t seed);

/// k cross-validation folds: each document lands in exactly one test fold and
/// fold sizes differ by at most one. Returns (train, test) pairs.
std::vector<std::pair<Corpus, Corpus>> make_folds(const Corpus& corpus, int k,
                                                  std::uint64_t seed);

/// Proportional sample of size n: per-stratum counts by largest-remainder
/// apportionment (remainder ties go to the stratum appearing first in the
/// corpus), drawn uniformly within each stratum.
Corpus stratified_sample(const Corpus& corpus,
                         const std::function<std::string(const Document&)>& strata_key,
                         std::size_t n, std::uint64_t seed);

}  // namespace kt
