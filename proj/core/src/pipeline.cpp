// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstdio>

#include "kt/experiment.hpp"

namespace kt {

namespace {

// Seed stream tags, one per stochastic sub-step of a fit.
enum SeedTag : std::uint64_t {
    kSeedBaseline = 11,
    kSeedEmbedding = 21,
    kSeedGlove = 22,
    kSeedValidSplit = 24,
    kSeedTrain = 25,
    kSeedInit = 26,
};

std::string format_double(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", value);
    return buf;
}

struct FeatureSet {
    std::vector<SparseVec> x;
    std::vector<LabelSet> y;
};

FeatureSet featurize(const Pipeline& pipeline, const Corpus& corpus) {
    FeatureSet fs;
    fs.x.reserve(corpus.size());
    fs.y.reserve(corpus.size());
    for (const auto& d : corpus.docs()) {
        fs.x.push_back(pipeline.features(d.text));
        fs.y.push_back(d.labels);
    }
    return fs;
}

EmbeddingTable build_embedding(const ExperimentConfig& config, const Pipeline& pipeline,
                               const Corpus& train, std::uint64_t seed, TrainedModel& model) {
    const auto& spec = config.embedding;
    switch (spec.kind) {
        case EmbeddingSpec::Kind::File: {
            OovPolicy policy{spec.oov, derive_seed(seed, kSeedEmbedding), spec.oov_scale};
            auto table =
                load_embedding_text(spec.path, pipeline.vocab, spec.dim, policy);
            model.train_info.emplace_back("embedding", spec.path);
            model.train_info.emplace_back("embedding_missing_words",
                                          std::to_string(table.missing_count()));
            return table;
        }
        case EmbeddingSpec::Kind::Glove: {
            auto cooc = build_cooccurrence(train, pipeline.stopwords, spec.window);
            GloveConfig glove;
            glove.dim = spec.dim;
            glove.epochs = spec.glove_epochs;
            glove.learning_rate = spec.glove_lr;
            glove.seed = derive_seed(seed, kSeedGlove);
            auto result = train_glove(cooc, glove);
            model.train_info.emplace_back("glove_final_loss",
                                          format_double(result.epoch_loss.back()));
            // Re-key the trained vectors onto the pipeline vocabulary and apply
            // the configured OOV policy to anything GloVe did not cover.
            std::unordered_map<std::string, Eigen::VectorXd> rows;
            const auto& gv = result.table.vocabulary();
            for (std::int32_t idx = 1; idx <= gv.size(); ++idx) {
                rows.emplace(gv.token_at(idx),
                             result.table.matrix().row(idx).transpose());
            }
            OovPolicy policy{spec.oov, derive_seed(seed, kSeedEmbedding), spec.oov_scale};
            return EmbeddingTable::assemble(pipeline.vocab, spec.dim, policy, rows);
        }
        case EmbeddingSpec::Kind::Random: {
            // Every row starts random and trainable; a zero/shared policy
            // would freeze the whole input layer at nothing.
            OovPolicy policy =
                OovPolicy::trainable_random(derive_seed(seed, kSeedEmbedding), spec.oov_scale);
            std::unordered_map<std::string, Eigen::VectorXd> no_rows;
            return EmbeddingTable::assemble(pipeline.vocab, spec.dim, policy, no_rows);
        }
        case EmbeddingSpec::Kind::None:
            break;
    }
    throw ConfigError("classifier kind \"rnn\" requires an embedding section");
}

void fit_ovr(const ExperimentConfig& config, const FeatureSet& fs, std::uint64_t seed,
             TrainedModel& model) {
    const auto& spec = config.classifier;
    const auto dim = model.pipeline.ngrams.dim();
    std::string history = "type,epoch,objective\n";

    for (int t = 0; t < kNumTypes; ++t) {
        const auto type = static_cast<KnowledgeType>(t);
        std::vector<signed char> y(fs.x.size());
        long positives = 0;
        for (std::size_t i = 0; i < fs.x.size(); ++i) {
            y[i] = fs.y[i].contains(type) ? 1 : -1;
            positives += y[i] > 0;
        }
        if (positives == 0 || static_cast<std::size_t>(positives) == fs.x.size()) {
            model.ovr.constant_zero[static_cast<std::size_t>(t)] = true;
            model.warnings.push_back(std::string(to_string(type)) +
                                     ": single-class in training, using constant-0 predictor");
            continue;
        }
        const auto type_seed = derive_seed(seed, static_cast<std::uint64_t>(t));
        SvmModel fitted;
        if (spec.svm_grid_search) {
            auto grid = grid_search_svm(fs.x, y, dim, spec.svm_grid, 3, spec.svm_epochs,
                                        type_seed);
            for (auto& w : grid.warnings) model.warnings.push_back(std::move(w));
            model.train_info.emplace_back(std::string(to_string(type)) + "_C",
                                          format_double(grid.best_C));
            for (const auto& cell : grid.cells) {
                model.train_info.emplace_back(
                    std::string(to_string(type)) + "_grid_" + format_double(cell.C),
                    cell.mean_auprc ? format_double(*cell.mean_auprc) : "skipped");
            }
            fitted = std::move(grid.best);
        } else {
            fitted = train_binary_svm_calibrated(fs.x, y, dim,
                                                 {spec.svm_c, spec.svm_epochs, type_seed});
            model.train_info.emplace_back(std::string(to_string(type)) + "_C",
                                          format_double(spec.svm_c));
        }
        for (std::size_t e = 0; e < fitted.epoch_objective.size(); ++e) {
            history += std::string(to_string(type)) + "," + std::to_string(e) + "," +
                       format_double(fitted.epoch_objective[e]) + "\n";
        }
        model.ovr.models[static_cast<std::size_t>(t)] = std::move(fitted);
    }
    model.history = {{"history", history}};
}

void fit_rnn(const ExperimentConfig& config, const Corpus& train, std::uint64_t seed,
             TrainedModel& model) {
    const auto& spec = config.classifier;
    auto table = build_embedding(config, model.pipeline, train, seed, model);
    const int hidden = spec.hidden > 0 ? spec.hidden : table.dim();

    SequenceDataset all;
    all.reserve(train.size());
    for (const auto& d : train.docs()) {
        all.push_back({model.pipeline.sequence(d.text), d.labels});
    }

    // Hold out ~10% of the training split for best-epoch selection.
    SequenceDataset fit_set;
    SequenceDataset valid;
    if (all.size() >= 10) {
        Rng rng(derive_seed(seed, kSeedValidSplit));
        std::vector<std::size_t> order(all.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);
        const std::size_t n_valid = all.size() / 10;
        std::vector<char> is_valid(all.size(), 0);
        for (std::size_t i = 0; i < n_valid; ++i) is_valid[order[i]] = 1;
        for (std::size_t i = 0; i < all.size(); ++i) {
            (is_valid[i] ? valid : fit_set).push_back(all[i]);
        }
    } else {
        fit_set = all;
    }

    TrainConfig train_config = spec.train;
    train_config.seed = derive_seed(seed, kSeedTrain);

    model.net = NetworkParams::init(std::move(table), hidden, derive_seed(seed, kSeedInit), 128,
                                    64, spec.max_len, train_config.dropout_rate);
    const auto history = train_network(model.net, fit_set, valid, train_config);

    std::string csv = "epoch,train_loss,val_macro_auc\n";
    for (std::size_t e = 0; e < history.train_loss.size(); ++e) {
        csv += std::to_string(e) + "," + format_double(history.train_loss[e]) + ",";
        if (e < history.val_macro_auc.size() && !std::isnan(history.val_macro_auc[e])) {
            csv += format_double(history.val_macro_auc[e]);
        }
        csv += "\n";
    }
    model.history = {{"history", csv}};
    model.train_info.emplace_back("best_epoch", std::to_string(history.best_epoch));
    model.train_info.emplace_back("hidden", std::to_string(hidden));
    model.train_info.emplace_back("validation_docs", std::to_string(valid.size()));
}

}  // namespace

Pipeline fit_pipeline(const Corpus& train, const StopwordSet& stopwords, int max_len) {
    if (train.empty()) throw DataError("fit_pipeline: empty training corpus");
    Pipeline pipeline;
    pipeline.stopwords = stopwords;
    pipeline.stopword_list.assign(stopwords.begin(), stopwords.end());
    std::sort(pipeline.stopword_list.begin(), pipeline.stopword_list.end());
    pipeline.vocab = Vocabulary::build(train, stopwords);
    pipeline.ngrams = NgramSpace::build(train, stopwords);
    pipeline.max_len = max_len;
    return pipeline;
}

TrainedModel fit_model(const ExperimentConfig& config, const Corpus& train, std::uint64_t seed) {
    TrainedModel model;
    model.kind = config.classifier.kind;
    model.label = config.classifier.label;

    const StopwordSet stopwords = config.stopword_file
                                      ? load_stopword_file(*config.stopword_file)
                                      : default_stopwords();
    model.pipeline = fit_pipeline(train, stopwords, config.classifier.max_len);

    if (model.kind == "mf1" || model.kind == "mf2" || model.kind == "rand") {
        const auto kind = model.kind == "mf1"   ? BaselineKind::MF1
                          : model.kind == "mf2" ? BaselineKind::MF2
                                                : BaselineKind::Rand;
        model.baseline = baseline_fit(kind, train, derive_seed(seed, kSeedBaseline));
        model.history = {{"history", "epoch,info\n"}};
    } else if (model.kind == "knn") {
        auto fs = featurize(model.pipeline, train);
        model.knn = KnnModel::fit(std::move(fs.x), std::move(fs.y), config.classifier.knn_k);
        model.history = {{"history", "epoch,info\n"}};
    } else if (model.kind == "mlknn") {
        auto fs = featurize(model.pipeline, train);
        model.mlknn = MlknnModel::fit(std::move(fs.x), std::move(fs.y),
                                      config.classifier.mlknn_k, config.classifier.mlknn_s);
        model.history = {{"history", "epoch,info\n"}};
    } else if (model.kind == "svm" || model.kind == "ovrsvm") {
        const auto fs = featurize(model.pipeline, train);
        fit_ovr(config, fs, seed, model);
    } else if (model.kind == "rnn") {
        fit_rnn(config, train, seed, model);
    } else {
        throw ConfigError("unknown classifier kind: " + model.kind);
    }
    return model;
}

PredictionMatrix score_corpus(const TrainedModel& model, const Corpus& corpus) {
    PredictionMatrix pred;
    pred.scores.resize(static_cast<Eigen::Index>(corpus.size()), kNumTypes);
    pred.truth.reserve(corpus.size());

    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& doc = corpus.doc(i);
        std::array<double, kNumTypes> row{};
        if (model.kind == "mf1" || model.kind == "mf2" || model.kind == "rand") {
            row = baseline_predict(model.baseline, i);
        } else if (model.kind == "knn") {
            row = model.knn.predict(model.pipeline.features(doc.text));
        } else if (model.kind == "mlknn") {
            row = model.mlknn.predict(model.pipeline.features(doc.text));
        } else if (model.kind == "svm" || model.kind == "ovrsvm") {
            row = ovr_probabilities(model.ovr, model.pipeline.features(doc.text));
        } else if (model.kind == "rnn") {
            row = predict(model.net, model.pipeline.sequence(doc.text));
        } else {
            throw DataError("score_corpus: unknown model kind " + model.kind);
        }
        for (int t = 0; t < kNumTypes; ++t) {
            pred.scores(static_cast<Eigen::Index>(i), t) = row[static_cast<std::size_t>(t)];
        }
        pred.truth.push_back(doc.labels);
    }
    return pred;
}

}  // namespace kt
