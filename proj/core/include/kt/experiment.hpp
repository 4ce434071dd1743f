// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kt/baselines.hpp"
#include "kt/knn.hpp"
#include "kt/metrics.hpp"
#include "kt/neural.hpp"
#include "kt/svm.hpp"

namespace kt {

inline constexpr const char* kArtifactVersion = "0.1.0";

struct EmbeddingSpec {
    enum class Kind { None, File, Glove, Random };
    Kind kind = Kind::None;
    std::string path;  // File: text embedding file
    int dim = 300;
    OovPolicyKind oov = OovPolicyKind::TrainableRandom;
    double oov_scale = 0.1;
    int window = 10;          // Glove
    int glove_epochs = 25;    // Glove
    double glove_lr = 0.05;   // Glove
};

struct ClassifierSpec {
    std::string kind;   // mf1 | mf2 | rand | knn | mlknn | svm | ovrsvm | rnn
    std::string label;  // report column label; defaulted from kind/embedding

    int knn_k = 5;
    int mlknn_k = 10;
    double mlknn_s = 1.0;

    std::vector<double> svm_grid;  // empty -> default grid
    bool svm_grid_search = true;
    double svm_c = 1.0;
    int svm_epochs = 30;

    int hidden = 0;  // 0 -> embedding dim
    int max_len = 300;
    TrainConfig train;  // paper defaults: 100 epochs, batch 32, lr 0.001
};

/// Declarative experiment description loaded from a JSON config file.
/// Relative paths resolve against the config file's directory.
struct ExperimentConfig {
    std::filesystem::path corpus_path;
    CorpusFormat corpus_format = CorpusFormat::Jsonl;
    std::optional<std::filesystem::path> extra_test_path;  // cross-API test set
    CorpusFormat extra_test_format = CorpusFormat::Jsonl;

    ClassifierSpec classifier;
    EmbeddingSpec embedding;

    bool resample = false;
    int folds = 10;
    bool cross_validation = false;
    double test_fraction = 0.10;
    double threshold = 0.5;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir;
    std::optional<std::filesystem::path> stopword_file;

    /// Key-order-independent fingerprint of the raw config document.
    std::uint64_t config_hash = 0;
};

/// Parses and validates a config file. Validation failures are collected and
/// reported all at once in the exception message.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct CommandOptions {
    bool deterministic = false;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::filesystem::path> out_override;
    std::optional<double> threshold_override;
};

/// Fitted preprocessing state shared by every classifier family. Built from
/// the (possibly resampled) training split only.
struct Pipeline {
    std::vector<std::string> stopword_list;  // sorted
    StopwordSet stopwords;
    Vocabulary vocab;
    NgramSpace ngrams;
    int max_len = 300;

    SparseVec features(const std::string& text) const {
        return ngrams.vectorize(preprocess(text, stopwords));
    }
    IndexSequence sequence(const std::string& text) const {
        return to_sequence(preprocess(text, stopwords), vocab, max_len);
    }
};

Pipeline fit_pipeline(const Corpus& train, const StopwordSet& stopwords, int max_len);

/// A fitted classifier plus everything needed to score raw documents.
struct TrainedModel {
    std::string kind;
    std::string label;
    Pipeline pipeline;

    BaselineModel baseline;
    KnnModel knn;
    MlknnModel mlknn;
    OvrSvmModel ovr;
    NetworkParams net;

    std::vector<std::string> warnings;
    std::vector<std::pair<std::string, std::string>> train_info;  // manifest notes
    std::vector<std::pair<std::string, std::string>> history;     // history.csv rows
};

/// Fits the configured classifier on a training corpus: fits the pipeline,
/// prepares features/sequences, and trains under the given seed.
TrainedModel fit_model(const ExperimentConfig& config, const Corpus& train, std::uint64_t seed);

/// Scores every document of a corpus with a fitted model; row order follows
/// the corpus. Never refits the pipeline.
PredictionMatrix score_corpus(const TrainedModel& model, const Corpus& corpus);

/// "KTM1" container: kind tag, pipeline block, and the model payload.
/// Round-trip loading reproduces predictions bit-exactly (the nested KTN1
/// network block keeps its own 32-bit float contract).
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

/// report.csv: section,name,value rows — 12 per-type AUPRC rows plus the 6
/// multi-label metrics, with a cross-API block appended when present.
void write_report_csv(const EvalReport& report, const std::string& label,
                      const std::optional<EvalReport>& cross_api, const std::string& cross_name,
                      const std::filesystem::path& path);

/// report.md: human-readable tables mirroring the per-type AUPRC and
/// multi-label metric layouts.
void write_report_markdown(const EvalReport& report, const std::string& label,
                           const std::optional<EvalReport>& cross_api,
                           const std::string& cross_name, const std::filesystem::path& path);

/// cv.csv: one row per fold plus mean and stddev summary rows.
void write_cv_csv(const CvResult& result, const CvAggregate& agg,
                  const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Commands. All outputs land under the run directory; input directories are
// never written to. In deterministic mode re-running a command with the same
// config and seed produces byte-identical outputs.
// ---------------------------------------------------------------------------

/// Splits, optional training-set resampling, pipeline artifacts
/// (splits/train.jsonl, splits/test.jsonl, vocab.txt, ngrams.txt), manifest.
void cmd_prepare(const ExperimentConfig& config, const CommandOptions& options);

/// Trains the configured classifier on the prepared split; writes model.bin,
/// history.csv, and manifest updates.
void cmd_train(const ExperimentConfig& config, const CommandOptions& options);

/// Evaluates a model (default: the run's model.bin) on the prepared test
/// split; writes report.csv and report.md, appending a cross-API section for
/// the configured extra test corpus and cv.csv when cross-validation is
/// enabled. Refuses models whose vocabulary hash does not match the prepared
/// artifacts.
void cmd_evaluate(const ExperimentConfig& config, const CommandOptions& options,
                  const std::optional<std::filesystem::path>& model_path = std::nullopt);

/// Tags unseen documentation: per-document scores for all 12 types plus
/// decisions at the threshold, written as corpus-schema JSONL with an added
/// scores object.
void cmd_tag(const std::filesystem::path& model_path, const std::filesystem::path& input_path,
             double threshold, const std::filesystem::path& out_dir,
             const CommandOptions& options);

/// Trains desk-scale GloVe embeddings on a plain-text corpus (one document
/// per line); writes embeddings.txt and glove_history.csv.
void cmd_embed_train(const std::filesystem::path& corpus_path, int dim, int window, int epochs,
                     std::uint64_t seed, const std::filesystem::path& out_dir,
                     const CommandOptions& options);

}  // namespace kt
