// SPDX-License-Identifier: Apache-2.0
#include <fstream>

#include <nlohmann/json.hpp>

#include "kt/experiment.hpp"

namespace kt {

namespace {

using nlohmann::json;

std::optional<CorpusFormat> format_from_name(const std::string& name) {
    if (name == "jsonl") return CorpusFormat::Jsonl;
    if (name == "csv") return CorpusFormat::Csv;
    return std::nullopt;
}

std::optional<CorpusFormat> format_from_extension(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".jsonl") return CorpusFormat::Jsonl;
    if (ext == ".csv") return CorpusFormat::Csv;
    return std::nullopt;
}

class Validator {
public:
    explicit Validator(std::filesystem::path base) : base_(std::move(base)) {}

    void error(const std::string& message) { errors_.push_back(message); }

    std::filesystem::path resolve(const std::string& path) const {
        std::filesystem::path p(path);
        return p.is_absolute() ? p : base_ / p;
    }

    std::filesystem::path require_file(const std::string& key, const std::string& path) {
        auto resolved = resolve(path);
        if (!std::filesystem::exists(resolved)) {
            error(key + ": file does not exist: " + resolved.string());
        }
        return resolved;
    }

    void finish() const {
        if (errors_.empty()) return;
        std::string joined = "config validation failed:";
        for (const auto& e : errors_) joined += "\n  - " + e;
        throw ConfigError(joined);
    }

private:
    std::filesystem::path base_;
    std::vector<std::string> errors_;
};

CorpusFormat resolve_format(Validator& v, const json& section, const char* key,
                            const std::filesystem::path& path) {
    if (section.contains("format")) {
        if (auto f = format_from_name(section["format"].get<std::string>())) return *f;
        v.error(std::string(key) + ".format: must be \"jsonl\" or \"csv\"");
        return CorpusFormat::Jsonl;
    }
    if (auto f = format_from_extension(path)) return *f;
    v.error(std::string(key) + ": cannot infer format from extension; set \"format\"");
    return CorpusFormat::Jsonl;
}

const std::vector<std::string>& known_kinds() {
    static const std::vector<std::string> kinds = {"mf1",   "mf2", "rand",   "knn",
                                                   "mlknn", "svm", "ovrsvm", "rnn"};
    return kinds;
}

std::string default_label(const ClassifierSpec& classifier, const EmbeddingSpec& embedding) {
    if (classifier.kind == "mf1") return "MF1";
    if (classifier.kind == "mf2") return "MF2";
    if (classifier.kind == "rand") return "RAND";
    if (classifier.kind == "knn") return "kNN";
    if (classifier.kind == "mlknn") return "MLkNN";
    if (classifier.kind == "svm") return "SVM";
    if (classifier.kind == "ovrsvm") return "OvRSVM";
    std::string label = "RNN";
    switch (embedding.kind) {
        case EmbeddingSpec::Kind::File:
            label += embedding.oov == OovPolicyKind::TrainableRandom ? "_file_otf" : "_file";
            break;
        case EmbeddingSpec::Kind::Glove:
            label += "_glove";
            break;
        case EmbeddingSpec::Kind::Random:
            label += "_random";
            break;
        case EmbeddingSpec::Kind::None:
            break;
    }
    return label;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());

    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": invalid JSON: " + e.what());
    }
    if (!doc.is_object()) throw ConfigError(path.string() + ": config must be a JSON object");

    ExperimentConfig config;
    // nlohmann objects iterate in key order, so the dump is canonical and the
    // hash is stable under key reordering in the source file.
    config.config_hash = fnv1a64(doc.dump());

    Validator v(path.parent_path());

    try {
        // corpus
        if (!doc.contains("corpus") || !doc["corpus"].is_object() ||
            !doc["corpus"].contains("train")) {
            v.error("corpus.train: required");
        } else {
            const auto& corpus = doc["corpus"];
            config.corpus_path = v.require_file("corpus.train", corpus["train"].get<std::string>());
            config.corpus_format = resolve_format(v, corpus, "corpus", config.corpus_path);
            if (corpus.contains("test_extra")) {
                config.extra_test_path =
                    v.require_file("corpus.test_extra", corpus["test_extra"].get<std::string>());
                json extra_section = json::object();
                if (corpus.contains("test_extra_format")) {
                    extra_section["format"] = corpus["test_extra_format"];
                }
                config.extra_test_format =
                    resolve_format(v, extra_section, "corpus.test_extra", *config.extra_test_path);
            }
        }

        // classifier
        if (!doc.contains("classifier") || !doc["classifier"].is_object() ||
            !doc["classifier"].contains("kind")) {
            v.error("classifier.kind: required");
        } else {
            const auto& cls = doc["classifier"];
            config.classifier.kind = cls["kind"].get<std::string>();
            if (std::find(known_kinds().begin(), known_kinds().end(), config.classifier.kind) ==
                known_kinds().end()) {
                v.error("classifier.kind: unknown kind '" + config.classifier.kind + "'");
            }
            config.classifier.label = cls.value("label", std::string());
            config.classifier.knn_k = cls.value("knn_k", 5);
            config.classifier.mlknn_k = cls.value("mlknn_k", 10);
            config.classifier.mlknn_s = cls.value("mlknn_s", 1.0);
            if (cls.contains("grid")) {
                config.classifier.svm_grid = cls["grid"].get<std::vector<double>>();
                for (double c : config.classifier.svm_grid) {
                    if (c <= 0.0) v.error("classifier.grid: C values must be positive");
                }
            }
            config.classifier.svm_grid_search = cls.value("grid_search", true);
            config.classifier.svm_c = cls.value("C", 1.0);
            config.classifier.svm_epochs = cls.value("epochs", 30);
            config.classifier.hidden = cls.value("hidden", 0);
            config.classifier.max_len = cls.value("max_len", 300);
            if (config.classifier.max_len < 1) v.error("classifier.max_len: must be >= 1");
            if (cls.contains("train")) {
                const auto& t = cls["train"];
                config.classifier.train.epochs = t.value("epochs", 100);
                config.classifier.train.batch_size = t.value("batch_size", 32);
                config.classifier.train.learning_rate = t.value("learning_rate", 1e-3);
                config.classifier.train.dropout_rate = t.value("dropout", 0.2);
                config.classifier.train.beta1 = t.value("beta1", 0.9);
                config.classifier.train.beta2 = t.value("beta2", 0.999);
                config.classifier.train.epsilon = t.value("epsilon", 1e-8);
                if (config.classifier.train.epochs < 1) v.error("classifier.train.epochs: must be >= 1");
                if (config.classifier.train.learning_rate <= 0.0) {
                    v.error("classifier.train.learning_rate: must be positive");
                }
                const double dr = config.classifier.train.dropout_rate;
                if (dr < 0.0 || dr >= 1.0) v.error("classifier.train.dropout: must be in [0, 1)");
            }
        }

        // embedding
        if (doc.contains("embedding")) {
            const auto& emb = doc["embedding"];
            const auto kind = emb.value("kind", std::string("file"));
            if (kind == "file") {
                config.embedding.kind = EmbeddingSpec::Kind::File;
                if (!emb.contains("path")) {
                    v.error("embedding.path: required for kind \"file\"");
                } else {
                    config.embedding.path =
                        v.require_file("embedding.path", emb["path"].get<std::string>()).string();
                }
            } else if (kind == "glove") {
                config.embedding.kind = EmbeddingSpec::Kind::Glove;
            } else if (kind == "random") {
                config.embedding.kind = EmbeddingSpec::Kind::Random;
            } else {
                v.error("embedding.kind: must be \"file\", \"glove\", or \"random\"");
            }
            config.embedding.dim = emb.value("dim", 300);
            if (config.embedding.dim < 1) v.error("embedding.dim: must be >= 1");
            const auto oov = emb.value("oov", std::string("trainable"));
            if (oov == "zero") config.embedding.oov = OovPolicyKind::ZeroVector;
            else if (oov == "trainable") config.embedding.oov = OovPolicyKind::TrainableRandom;
            else if (oov == "shared") config.embedding.oov = OovPolicyKind::SharedOovRow;
            else v.error("embedding.oov: must be \"zero\", \"trainable\", or \"shared\"");
            config.embedding.oov_scale = emb.value("scale", 0.1);
            config.embedding.window = emb.value("window", 10);
            config.embedding.glove_epochs = emb.value("glove_epochs", 25);
            config.embedding.glove_lr = emb.value("glove_learning_rate", 0.05);
            if (config.embedding.window < 1) v.error("embedding.window: must be >= 1");
        } else if (config.classifier.kind == "rnn") {
            v.error("embedding: required for classifier kind \"rnn\"");
        }

        // harness
        config.resample = doc.value("resample", false);
        if (doc.contains("resample_target") &&
            doc["resample_target"].get<std::string>() != "train") {
            // Resampling a test split would bias every threshold metric.
            v.error("resample_target: resampling is only ever applied to the training split");
        }
        config.folds = doc.value("folds", 10);
        config.cross_validation = doc.value("cross_validation", false);
        if (config.cross_validation && config.folds < 2) v.error("folds: must be >= 2");
        config.test_fraction = doc.value("test_fraction", 0.10);
        if (!(config.test_fraction > 0.0 && config.test_fraction < 1.0)) {
            v.error("test_fraction: must be in (0, 1)");
        }
        config.threshold = doc.value("threshold", 0.5);
        if (!(config.threshold > 0.0 && config.threshold <= 1.0)) {
            v.error("threshold: must be in (0, 1]");
        }
        if (!doc.contains("seed") || !doc["seed"].is_number_unsigned()) {
            v.error("seed: required (non-negative integer)");
        } else {
            config.seed = doc["seed"].get<std::uint64_t>();
        }
        if (!doc.contains("out") || doc["out"].get<std::string>().empty()) {
            v.error("out: required output directory");
        } else {
            config.out_dir = v.resolve(doc["out"].get<std::string>());
        }
        if (doc.contains("stopwords")) {
            config.stopword_file =
                v.require_file("stopwords", doc["stopwords"].get<std::string>());
        }
    } catch (const json::exception& e) {
        v.error(std::string("malformed value: ") + e.what());
    }

    v.finish();

    if (config.classifier.svm_grid.empty()) config.classifier.svm_grid = default_svm_grid();
    if (config.classifier.label.empty()) {
        config.classifier.label = default_label(config.classifier, config.embedding);
    }
    return config;
}

}  // namespace kt
