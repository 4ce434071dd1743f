// SPDX-License-Identifier: Apache-2.0
#include <cstring>
#include <fstream>

#include "kt/experiment.hpp"

namespace kt {

namespace {

constexpr char kMagic[4] = {'K', 'T', 'M', '1'};
constexpr std::uint32_t kVersion = 1;

void write_sparse(std::ostream& os, const SparseVec& v) {
    binio::write_u32(os, static_cast<std::uint32_t>(v.items.size()));
    for (const auto& [idx, value] : v.items) {
        binio::write_u32(os, static_cast<std::uint32_t>(idx));
        binio::write_f64(os, value);
    }
}

SparseVec read_sparse(std::istream& is) {
    SparseVec v;
    const auto n = binio::read_u32(is);
    v.items.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        const auto idx = static_cast<std::int32_t>(binio::read_u32(is));
        const double value = binio::read_f64(is);
        v.items.emplace_back(idx, value);
    }
    return v;
}

void write_examples(std::ostream& os, const std::vector<SparseVec>& x,
                    const std::vector<LabelSet>& y) {
    binio::write_u32(os, static_cast<std::uint32_t>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        write_sparse(os, x[i]);
        binio::write_u32(os, y[i].bits());
    }
}

void read_examples(std::istream& is, std::vector<SparseVec>& x, std::vector<LabelSet>& y) {
    const auto n = binio::read_u32(is);
    x.reserve(n);
    y.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        x.push_back(read_sparse(is));
        y.push_back(LabelSet::from_bits(static_cast<std::uint16_t>(binio::read_u32(is))));
    }
}

void write_svm(std::ostream& os, const SvmModel& model) {
    binio::write_u32(os, static_cast<std::uint32_t>(model.weights.size()));
    for (Eigen::Index i = 0; i < model.weights.size(); ++i) {
        binio::write_f64(os, model.weights(i));
    }
    binio::write_f64(os, model.bias);
    binio::write_f64(os, model.C);
    binio::write_u8(os, model.platt ? 1 : 0);
    if (model.platt) {
        binio::write_f64(os, model.platt->first);
        binio::write_f64(os, model.platt->second);
    }
}

SvmModel read_svm(std::istream& is) {
    SvmModel model;
    const auto dim = binio::read_u32(is);
    model.weights.resize(dim);
    for (std::uint32_t i = 0; i < dim; ++i) model.weights(i) = binio::read_f64(is);
    model.bias = binio::read_f64(is);
    model.C = binio::read_f64(is);
    if (binio::read_u8(is) != 0) {
        const double a = binio::read_f64(is);
        const double b = binio::read_f64(is);
        model.platt = {a, b};
    }
    return model;
}

void write_pipeline(std::ostream& os, const Pipeline& pipeline) {
    binio::write_u32(os, static_cast<std::uint32_t>(pipeline.stopword_list.size()));
    for (const auto& w : pipeline.stopword_list) binio::write_string(os, w);
    binio::write_u32(os, static_cast<std::uint32_t>(pipeline.vocab.tokens().size()));
    for (const auto& t : pipeline.vocab.tokens()) binio::write_string(os, t);
    binio::write_u32(os, static_cast<std::uint32_t>(pipeline.ngrams.features().size()));
    for (const auto& f : pipeline.ngrams.features()) binio::write_string(os, f);
    binio::write_u32(os, static_cast<std::uint32_t>(pipeline.max_len));
    binio::write_u64(os, pipeline.vocab.content_hash());
    binio::write_u64(os, pipeline.ngrams.content_hash());
}

Pipeline read_pipeline(std::istream& is) {
    Pipeline pipeline;
    pipeline.stopword_list.resize(binio::read_u32(is));
    for (auto& w : pipeline.stopword_list) w = binio::read_string(is);
    pipeline.stopwords.insert(pipeline.stopword_list.begin(), pipeline.stopword_list.end());
    std::vector<std::string> tokens(binio::read_u32(is));
    for (auto& t : tokens) t = binio::read_string(is);
    pipeline.vocab = Vocabulary::from_tokens(std::move(tokens));
    std::vector<std::string> features(binio::read_u32(is));
    for (auto& f : features) f = binio::read_string(is);
    pipeline.ngrams = NgramSpace::from_features(std::move(features));
    pipeline.max_len = static_cast<int>(binio::read_u32(is));
    const auto vocab_hash = binio::read_u64(is);
    const auto ngram_hash = binio::read_u64(is);
    if (vocab_hash != pipeline.vocab.content_hash() ||
        ngram_hash != pipeline.ngrams.content_hash()) {
        throw DataError("model file: corrupted pipeline block (hash mismatch)");
    }
    return pipeline;
}

}  // namespace

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write model file: " + path.string());

    binio::write_bytes(os, kMagic, 4);
    binio::write_u32(os, kVersion);
    binio::write_string(os, model.kind);
    binio::write_string(os, model.label);
    write_pipeline(os, model.pipeline);

    if (model.kind == "mf1" || model.kind == "mf2" || model.kind == "rand") {
        binio::write_u8(os, static_cast<std::uint8_t>(model.baseline.kind));
        for (int r : model.baseline.ranking) binio::write_u32(os, static_cast<std::uint32_t>(r));
        binio::write_u64(os, model.baseline.seed);
    } else if (model.kind == "knn") {
        binio::write_u32(os, static_cast<std::uint32_t>(model.knn.k()));
        write_examples(os, model.knn.features(), model.knn.labels());
    } else if (model.kind == "mlknn") {
        binio::write_u32(os, static_cast<std::uint32_t>(model.mlknn.k()));
        binio::write_f64(os, model.mlknn.smoothing());
        write_examples(os, model.mlknn.features(), model.mlknn.labels());
        for (double p : model.mlknn.priors()) binio::write_f64(os, p);
        for (int t = 0; t < kNumTypes; ++t) {
            for (double p : model.mlknn.posterior_pos(static_cast<KnowledgeType>(t))) {
                binio::write_f64(os, p);
            }
            for (double p : model.mlknn.posterior_neg(static_cast<KnowledgeType>(t))) {
                binio::write_f64(os, p);
            }
        }
    } else if (model.kind == "svm" || model.kind == "ovrsvm") {
        for (int t = 0; t < kNumTypes; ++t) {
            const auto ti = static_cast<std::size_t>(t);
            binio::write_u8(os, model.ovr.constant_zero[ti] ? 0 : 1);
            if (!model.ovr.constant_zero[ti]) write_svm(os, model.ovr.models[ti]);
        }
    } else if (model.kind == "rnn") {
        write_network(os, model.net);
    } else {
        throw DataError("save_model: unknown kind " + model.kind);
    }
    if (!os) throw DataError("write failed: " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open model file: " + path.string());

    char magic[4];
    binio::read_bytes(is, magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw DataError(path.string() + ": not a KTM1 model file");
    }
    const auto version = binio::read_u32(is);
    if (version != kVersion) {
        throw DataError(path.string() + ": unsupported KTM1 version " + std::to_string(version));
    }

    TrainedModel model;
    model.kind = binio::read_string(is);
    model.label = binio::read_string(is);
    model.pipeline = read_pipeline(is);

    if (model.kind == "mf1" || model.kind == "mf2" || model.kind == "rand") {
        model.baseline.kind = static_cast<BaselineKind>(binio::read_u8(is));
        for (int& r : model.baseline.ranking) r = static_cast<int>(binio::read_u32(is));
        model.baseline.seed = binio::read_u64(is);
    } else if (model.kind == "knn") {
        const auto k = static_cast<int>(binio::read_u32(is));
        std::vector<SparseVec> x;
        std::vector<LabelSet> y;
        read_examples(is, x, y);
        model.knn = KnnModel::fit(std::move(x), std::move(y), k);
    } else if (model.kind == "mlknn") {
        const auto k = static_cast<int>(binio::read_u32(is));
        const double s = binio::read_f64(is);
        std::vector<SparseVec> x;
        std::vector<LabelSet> y;
        read_examples(is, x, y);
        std::array<double, kNumTypes> priors{};
        for (double& p : priors) p = binio::read_f64(is);
        std::array<std::vector<double>, kNumTypes> pos;
        std::array<std::vector<double>, kNumTypes> neg;
        for (int t = 0; t < kNumTypes; ++t) {
            pos[static_cast<std::size_t>(t)].resize(static_cast<std::size_t>(k) + 1);
            for (double& p : pos[static_cast<std::size_t>(t)]) p = binio::read_f64(is);
            neg[static_cast<std::size_t>(t)].resize(static_cast<std::size_t>(k) + 1);
            for (double& p : neg[static_cast<std::size_t>(t)]) p = binio::read_f64(is);
        }
        model.mlknn = MlknnModel::from_parts(std::move(x), std::move(y), k, s, priors,
                                             std::move(pos), std::move(neg));
    } else if (model.kind == "svm" || model.kind == "ovrsvm") {
        for (int t = 0; t < kNumTypes; ++t) {
            const auto ti = static_cast<std::size_t>(t);
            if (binio::read_u8(is) == 0) {
                model.ovr.constant_zero[ti] = true;
            } else {
                model.ovr.models[ti] = read_svm(is);
            }
        }
    } else if (model.kind == "rnn") {
        model.net = read_network(is);
    } else {
        throw DataError(path.string() + ": unknown model kind " + model.kind);
    }
    return model;
}

}  // namespace kt
