// SPDX-License-Identifier: Apache-2.0
#include "kt/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

namespace kt {

namespace {

constexpr char kCacheMagic[4] = {'E', 'M', 'B', '1'};

std::uint64_t pair_key(std::int32_t i, std::int32_t j) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) |
           static_cast<std::uint32_t>(j);
}

}  // namespace

std::int32_t EmbeddingTable::effective_row(std::int32_t seq_index) const {
    if (seq_index < 0 || seq_index >= row_count()) {
        throw DataError("embedding table: sequence index " + std::to_string(seq_index) +
                        " out of range");
    }
    if (policy_.kind == OovPolicyKind::SharedOovRow && is_missing(seq_index)) {
        return shared_oov_row();
    }
    return seq_index;
}

bool EmbeddingTable::is_missing(std::int32_t row) const {
    return std::binary_search(missing_rows_.begin(), missing_rows_.end(), row);
}

void EmbeddingTable::validate() const {
    if (!matrix_.allFinite()) throw DataError("embedding table: non-finite entry");
    if (matrix_.rows() > 0 && matrix_.row(0).cwiseAbs().maxCoeff() != 0.0) {
        throw DataError("embedding table: pad row must be zero");
    }
}

EmbeddingTable EmbeddingTable::assemble(const Vocabulary& vocab, int dim, OovPolicy policy,
                                        const std::unordered_map<std::string, Eigen::VectorXd>& rows) {
    EmbeddingTable table;
    table.vocab_ = vocab;
    table.policy_ = policy;
    table.matrix_ = Eigen::MatrixXd::Zero(vocab.size() + 2, dim);
    table.trainable_mask_.assign(static_cast<std::size_t>(vocab.size()) + 2, 0);

    for (std::int32_t idx = 1; idx <= vocab.size(); ++idx) {
        auto it = rows.find(vocab.token_at(idx));
        if (it == rows.end()) {
            table.missing_rows_.push_back(idx);
        } else {
            table.matrix_.row(idx) = it->second.transpose();
        }
    }

    // The shared OOV row covers tokens outside the vocabulary; under the
    // random policies it is seeded and trainable like the missing rows.
    Rng rng(policy.seed);
    auto randomize = [&](std::int32_t row) {
        for (int d = 0; d < dim; ++d) {
            table.matrix_(row, d) = rng.uniform(-policy.scale, policy.scale);
        }
        table.trainable_rows_.push_back(row);
        table.trainable_mask_[static_cast<std::size_t>(row)] = 1;
    };
    switch (policy.kind) {
        case OovPolicyKind::ZeroVector:
            break;
        case OovPolicyKind::TrainableRandom:
            for (std::int32_t row : table.missing_rows_) randomize(row);
            randomize(table.shared_oov_row());
            break;
        case OovPolicyKind::SharedOovRow:
            randomize(table.shared_oov_row());
            break;
    }
    table.validate();
    return table;
}

EmbeddingTable load_embedding_text(const std::filesystem::path& path, const Vocabulary& vocab,
                                   int expected_dim, OovPolicy policy) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embedding file: " + path.string());

    std::unordered_map<std::string, Eigen::VectorXd> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        const auto where = path.string() + ":" + std::to_string(line_no);
        std::size_t pos = line.find_first_not_of(" \t");
        std::size_t end = line.find_first_of(" \t", pos);
        if (end == std::string::npos) throw DataError(where + ": word without vector values");
        std::string word = line.substr(pos, end - pos);

        Eigen::VectorXd vec(expected_dim);
        int count = 0;
        pos = end;
        while (true) {
            pos = line.find_first_not_of(" \t\r", pos);
            if (pos == std::string::npos) break;
            const char* begin = line.c_str() + pos;
            char* parsed_end = nullptr;
            const double value = std::strtod(begin, &parsed_end);
            if (parsed_end == begin) throw DataError(where + ": malformed vector value");
            if (count >= expected_dim) {
                throw DataError(where + ": expected " + std::to_string(expected_dim) +
                                " values, found more");
            }
            if (!std::isfinite(value)) throw DataError(where + ": non-finite vector value");
            vec(count++) = value;
            pos = static_cast<std::size_t>(parsed_end - line.c_str());
        }
        if (count != expected_dim) {
            throw DataError(where + ": expected " + std::to_string(expected_dim) +
                            " values, found " + std::to_string(count));
        }
        // Only vocabulary words are kept; the table is restricted to the
        // experiment vocabulary.
        if (vocab.index_of(word) != 0) rows.emplace(std::move(word), std::move(vec));
    }
    if (line_no == 0) throw DataError(path.string() + ": empty embedding file");
    return EmbeddingTable::assemble(vocab, expected_dim, policy, rows);
}

void save_embedding_text(const EmbeddingTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write embedding file: " + path.string());
    const auto& vocab = table.vocabulary();
    char buf[32];
    for (std::int32_t idx = 1; idx <= vocab.size(); ++idx) {
        out << vocab.token_at(idx);
        for (int d = 0; d < table.dim(); ++d) {
            std::snprintf(buf, sizeof(buf), "%.6g", table.matrix()(idx, d));
            out << ' ' << buf;
        }
        out << '\n';
    }
    if (!out) throw DataError("write failed: " + path.string());
}

EmbeddingTable EmbeddingTable::restore(Vocabulary vocab, Eigen::MatrixXd matrix, OovPolicy policy,
                                       std::vector<std::int32_t> missing_rows,
                                       std::vector<std::int32_t> trainable_rows) {
    EmbeddingTable table;
    table.vocab_ = std::move(vocab);
    table.matrix_ = std::move(matrix);
    table.policy_ = policy;
    table.missing_rows_ = std::move(missing_rows);
    table.trainable_rows_ = std::move(trainable_rows);
    table.trainable_mask_.assign(static_cast<std::size_t>(table.row_count()), 0);
    for (std::int32_t row : table.trainable_rows_) {
        table.trainable_mask_[static_cast<std::size_t>(row)] = 1;
    }
    table.validate();
    return table;
}

void save_embedding_cache(const EmbeddingTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write embedding cache: " + path.string());
    binio::write_bytes(out, kCacheMagic, 4);
    binio::write_u32(out, static_cast<std::uint32_t>(table.row_count()));
    binio::write_u32(out, static_cast<std::uint32_t>(table.dim()));
    for (std::int32_t r = 0; r < table.row_count(); ++r) {
        for (int d = 0; d < table.dim(); ++d) {
            binio::write_f32(out, static_cast<float>(table.matrix()(r, d)));
        }
    }
    binio::write_u64(out, table.vocabulary().content_hash());
    binio::write_u8(out, static_cast<std::uint8_t>(table.policy().kind));
    binio::write_u64(out, table.policy().seed);
    binio::write_f64(out, table.policy().scale);
    binio::write_u32(out, static_cast<std::uint32_t>(table.missing_count()));
    for (std::int32_t r = 1; r <= table.vocabulary().size(); ++r) {
        if (table.is_missing(r)) binio::write_u32(out, static_cast<std::uint32_t>(r));
    }
    binio::write_u32(out, static_cast<std::uint32_t>(table.trainable_rows().size()));
    for (std::int32_t r : table.trainable_rows()) {
        binio::write_u32(out, static_cast<std::uint32_t>(r));
    }
}

EmbeddingTable load_embedding_cache(const std::filesystem::path& path, const Vocabulary& vocab) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open embedding cache: " + path.string());
    char magic[4];
    binio::read_bytes(in, magic, 4);
    if (std::memcmp(magic, kCacheMagic, 4) != 0) {
        throw DataError(path.string() + ": not an EMB1 embedding cache");
    }
    const auto rows = binio::read_u32(in);
    const auto dim = binio::read_u32(in);
    if (rows != static_cast<std::uint32_t>(vocab.size() + 2)) {
        throw EvalMismatchError(path.string() + ": cache row count does not match vocabulary");
    }
    Eigen::MatrixXd matrix(rows, dim);
    for (std::uint32_t r = 0; r < rows; ++r) {
        for (std::uint32_t d = 0; d < dim; ++d) matrix(r, d) = binio::read_f32(in);
    }
    const auto vocab_hash = binio::read_u64(in);
    if (vocab_hash != vocab.content_hash()) {
        throw EvalMismatchError(path.string() + ": cache was built for a different vocabulary");
    }
    OovPolicy policy;
    policy.kind = static_cast<OovPolicyKind>(binio::read_u8(in));
    policy.seed = binio::read_u64(in);
    policy.scale = binio::read_f64(in);
    std::vector<std::int32_t> missing(binio::read_u32(in));
    for (auto& r : missing) r = static_cast<std::int32_t>(binio::read_u32(in));
    std::vector<std::int32_t> trainable(binio::read_u32(in));
    for (auto& r : trainable) r = static_cast<std::int32_t>(binio::read_u32(in));
    return EmbeddingTable::restore(vocab, std::move(matrix), policy, std::move(missing),
                                   std::move(trainable));
}

Eigen::MatrixXd embed_sequence(const IndexSequence& seq, const EmbeddingTable& table) {
    Eigen::MatrixXd out(seq.length(), table.dim());
    for (std::int32_t t = 0; t < seq.length(); ++t) {
        out.row(t) = table.matrix().row(table.effective_row(seq.ids[static_cast<std::size_t>(t)]));
    }
    return out;
}

CooccurrenceMatrix::CooccurrenceMatrix(Vocabulary vocab,
                                       std::unordered_map<std::uint64_t, double> weights)
    : vocab_(std::move(vocab)), weights_(std::move(weights)) {
    entries_.reserve(weights_.size());
    row_sums_.assign(static_cast<std::size_t>(vocab_.size()) + 1, 0.0);
    for (const auto& [key, x] : weights_) {
        const auto i = static_cast<std::int32_t>(key >> 32);
        const auto j = static_cast<std::int32_t>(key & 0xffffffffu);
        entries_.push_back({i, j, x});
        row_sums_[static_cast<std::size_t>(i)] += x;
    }
    std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
        return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
}

double CooccurrenceMatrix::at(std::int32_t i, std::int32_t j) const {
    auto it = weights_.find(pair_key(i, j));
    return it == weights_.end() ? 0.0 : it->second;
}

double CooccurrenceMatrix::row_sum(std::int32_t i) const {
    return row_sums_[static_cast<std::size_t>(i)];
}

double CooccurrenceMatrix::prob(std::int32_t i, std::int32_t j) const {
    const double xi = row_sum(i);
    if (xi <= 0.0) throw DataError("cooccurrence: P(j|i) undefined for empty row");
    return at(i, j) / xi;
}

CooccurrenceMatrix build_cooccurrence(const std::vector<std::vector<std::string>>& docs,
                                      int window) {
    if (window < 1) throw DataError("build_cooccurrence: window must be >= 1");

    // First-occurrence vocabulary over the token stream.
    std::vector<std::string> token_list;
    {
        std::unordered_map<std::string, std::int32_t> seen;
        for (const auto& doc : docs) {
            for (const auto& tok : doc) {
                if (seen.emplace(tok, 0).second) token_list.push_back(tok);
            }
        }
    }
    if (token_list.empty()) throw DataError("build_cooccurrence: empty corpus");
    auto vocab = Vocabulary::from_tokens(std::move(token_list));

    std::unordered_map<std::uint64_t, double> weights;
    for (const auto& doc : docs) {
        std::vector<std::int32_t> ids(doc.size());
        for (std::size_t p = 0; p < doc.size(); ++p) ids[p] = vocab.index_of(doc[p]);
        for (std::size_t p = 0; p < ids.size(); ++p) {
            const auto limit = std::min(ids.size(), p + static_cast<std::size_t>(window) + 1);
            for (std::size_t q = p + 1; q < limit; ++q) {
                const double w = 1.0 / static_cast<double>(q - p);
                weights[pair_key(ids[p], ids[q])] += w;
                weights[pair_key(ids[q], ids[p])] += w;
            }
        }
    }
    return CooccurrenceMatrix(std::move(vocab), std::move(weights));
}

CooccurrenceMatrix build_cooccurrence(const Corpus& corpus, const StopwordSet& stopwords,
                                      int window) {
    if (corpus.empty()) throw DataError("build_cooccurrence: empty corpus");
    std::vector<std::vector<std::string>> docs;
    docs.reserve(corpus.size());
    for (const auto& d : corpus.docs()) docs.push_back(preprocess(d.text, stopwords));
    return build_cooccurrence(docs, window);
}

}  // namespace kt
