// SPDX-License-Identifier: Apache-2.0
#include <cstring>
#include <fstream>

#include "kt/neural.hpp"

namespace kt {

namespace {

constexpr char kMagic[4] = {'K', 'T', 'N', '1'};
constexpr std::uint32_t kVersion = 1;

void write_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
    binio::write_u32(os, static_cast<std::uint32_t>(m.rows()));
    binio::write_u32(os, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            binio::write_f32(os, static_cast<float>(m(r, c)));
        }
    }
}

Eigen::MatrixXd read_matrix(std::istream& is) {
    const auto rows = binio::read_u32(is);
    const auto cols = binio::read_u32(is);
    Eigen::MatrixXd m(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
        for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = binio::read_f32(is);
    }
    return m;
}

void write_vector(std::ostream& os, const Eigen::VectorXd& v) {
    binio::write_u32(os, static_cast<std::uint32_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) binio::write_f32(os, static_cast<float>(v(i)));
}

Eigen::VectorXd read_vector(std::istream& is) {
    const auto n = binio::read_u32(is);
    Eigen::VectorXd v(n);
    for (std::uint32_t i = 0; i < n; ++i) v(i) = binio::read_f32(is);
    return v;
}

void write_embedding(std::ostream& os, const EmbeddingTable& table) {
    const auto& vocab = table.vocabulary();
    binio::write_u32(os, static_cast<std::uint32_t>(vocab.size()));
    for (const auto& token : vocab.tokens()) binio::write_string(os, token);
    binio::write_u8(os, static_cast<std::uint8_t>(table.policy().kind));
    binio::write_u64(os, table.policy().seed);
    binio::write_f64(os, table.policy().scale);
    write_matrix(os, table.matrix());
    binio::write_u32(os, static_cast<std::uint32_t>(table.missing_count()));
    for (std::int32_t r = 1; r <= vocab.size(); ++r) {
        if (table.is_missing(r)) binio::write_u32(os, static_cast<std::uint32_t>(r));
    }
    binio::write_u32(os, static_cast<std::uint32_t>(table.trainable_rows().size()));
    for (std::int32_t r : table.trainable_rows()) {
        binio::write_u32(os, static_cast<std::uint32_t>(r));
    }
}

EmbeddingTable read_embedding(std::istream& is) {
    const auto vocab_size = binio::read_u32(is);
    std::vector<std::string> tokens(vocab_size);
    for (auto& t : tokens) t = binio::read_string(is);
    auto vocab = Vocabulary::from_tokens(std::move(tokens));
    OovPolicy policy;
    policy.kind = static_cast<OovPolicyKind>(binio::read_u8(is));
    policy.seed = binio::read_u64(is);
    policy.scale = binio::read_f64(is);
    Eigen::MatrixXd matrix = read_matrix(is);
    std::vector<std::int32_t> missing(binio::read_u32(is));
    for (auto& r : missing) r = static_cast<std::int32_t>(binio::read_u32(is));
    std::vector<std::int32_t> trainable(binio::read_u32(is));
    for (auto& r : trainable) r = static_cast<std::int32_t>(binio::read_u32(is));
    return EmbeddingTable::restore(std::move(vocab), std::move(matrix), policy,
                                   std::move(missing), std::move(trainable));
}

}  // namespace

void write_network(std::ostream& os, const NetworkParams& net) {
    binio::write_bytes(os, kMagic, 4);
    binio::write_u32(os, kVersion);
    binio::write_u32(os, static_cast<std::uint32_t>(net.embedding.dim()));
    binio::write_u32(os, static_cast<std::uint32_t>(net.lstm.hidden()));
    binio::write_u32(os, static_cast<std::uint32_t>(net.dense1.W.rows()));
    binio::write_u32(os, static_cast<std::uint32_t>(net.dense2.W.rows()));
    binio::write_u32(os, static_cast<std::uint32_t>(net.output.W.rows()));
    binio::write_f64(os, net.dropout_rate);
    binio::write_u32(os, static_cast<std::uint32_t>(net.max_len));

    write_embedding(os, net.embedding);

    write_matrix(os, net.lstm.Wf);
    write_matrix(os, net.lstm.Wi);
    write_matrix(os, net.lstm.Wo);
    write_matrix(os, net.lstm.Wc);
    write_matrix(os, net.lstm.Uf);
    write_matrix(os, net.lstm.Ui);
    write_matrix(os, net.lstm.Uo);
    write_matrix(os, net.lstm.Uc);
    write_vector(os, net.lstm.bf);
    write_vector(os, net.lstm.bi);
    write_vector(os, net.lstm.bo);
    write_vector(os, net.lstm.bc);
    write_matrix(os, net.dense1.W);
    write_vector(os, net.dense1.b);
    write_matrix(os, net.dense2.W);
    write_vector(os, net.dense2.b);
    write_matrix(os, net.output.W);
    write_vector(os, net.output.b);
    if (!os) throw DataError("write_network: stream failure");
}

NetworkParams read_network(std::istream& is) {
    char magic[4];
    binio::read_bytes(is, magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw DataError("not a KTN1 network block");
    }
    const auto version = binio::read_u32(is);
    if (version != kVersion) {
        throw DataError("unsupported KTN1 version " + std::to_string(version));
    }
    binio::read_u32(is);  // dim (validated via the matrices)
    binio::read_u32(is);  // hidden
    binio::read_u32(is);  // dense1 units
    binio::read_u32(is);  // dense2 units
    const auto output_units = binio::read_u32(is);
    if (output_units != static_cast<std::uint32_t>(kNumTypes)) {
        throw DataError(path.string() + ": unexpected output width");
    }

    NetworkParams net;
    net.dropout_rate = binio::read_f64(is);
    net.max_len = static_cast<int>(binio::read_u32(is));
    net.embedding = read_embedding(is);

    net.lstm.Wf = read_matrix(is);
    net.lstm.Wi = read_matrix(is);
    net.lstm.Wo = read_matrix(is);
    net.lstm.Wc = read_matrix(is);
    net.lstm.Uf = read_matrix(is);
    net.lstm.Ui = read_matrix(is);
    net.lstm.Uo = read_matrix(is);
    net.lstm.Uc = read_matrix(is);
    net.lstm.bf = read_vector(is);
    net.lstm.bi = read_vector(is);
    net.lstm.bo = read_vector(is);
    net.lstm.bc = read_vector(is);
    net.dense1.W = read_matrix(is);
    net.dense1.b = read_vector(is);
    net.dense2.W = read_matrix(is);
    net.dense2.b = read_vector(is);
    net.output.W = read_matrix(is);
    net.output.b = read_vector(is);
    return net;
}

void save_network(const NetworkParams& net, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write network file: " + path.string());
    write_network(os, net);
}

NetworkParams load_network(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open network file: " + path.string());
    try {
        return read_network(is);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

}  // namespace kt
