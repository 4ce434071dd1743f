#include <cmath>

#include <doctest.h>

#include "kt/embeddings.hpp"
#include "testutil.hpp"

using namespace kt;
using ktest::doc;

namespace {

Vocabulary vocab_of(const std::string& text) {
    auto c = ktest::corpus({doc("d", {KnowledgeType::Concept}, text)});
    return Vocabulary::build(c, {});
}

std::uint64_t key(std::int32_t i, std::int32_t j) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) |
           static_cast<std::uint32_t>(j);
}

double cosine(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
    return a.dot(b) / (a.norm() * b.norm());
}

}  // namespace

TEST_CASE("load_embedding_text") {
    ktest::TempDir tmp("emb");
    auto vocab = vocab_of("cat dog");

    SUBCASE("parses rows for vocabulary words") {
        ktest::write_file(tmp.file("v.txt"), "cat 0.1 0.2\nbird 0.5 0.5\n");
        auto table = load_embedding_text(tmp.file("v.txt"), vocab, 2, OovPolicy::zero());
        const auto row = table.matrix().row(vocab.index_of("cat"));
        CHECK(row(0) == doctest::Approx(0.1));
        CHECK(row(1) == doctest::Approx(0.2));
        CHECK(table.missing_count() == 1);  // dog
        CHECK(table.is_missing(vocab.index_of("dog")));
        // "bird" is outside the experiment vocabulary and is dropped.
    }

    SUBCASE("dimension mismatch names the line") {
        ktest::write_file(tmp.file("bad.txt"), "cat 0.1 0.2\ndog 0.5\n");
        CHECK_THROWS_WITH_AS(load_embedding_text(tmp.file("bad.txt"), vocab, 2, OovPolicy::zero()),
                             doctest::Contains(":2"), DataError);
    }

    SUBCASE("malformed value and empty file are rejected") {
        ktest::write_file(tmp.file("mal.txt"), "cat xx yy\n");
        CHECK_THROWS_AS(load_embedding_text(tmp.file("mal.txt"), vocab, 2, OovPolicy::zero()),
                        DataError);
        ktest::write_file(tmp.file("empty.txt"), "");
        CHECK_THROWS_AS(load_embedding_text(tmp.file("empty.txt"), vocab, 2, OovPolicy::zero()),
                        DataError);
    }

    SUBCASE("missing words fall under the policy") {
        ktest::write_file(tmp.file("v.txt"), "cat 0.1 0.2\n");

        auto zero = load_embedding_text(tmp.file("v.txt"), vocab, 2, OovPolicy::zero());
        CHECK(zero.matrix().row(vocab.index_of("dog")).norm() == 0.0);
        CHECK(zero.trainable_rows().empty());

        auto trainable =
            load_embedding_text(tmp.file("v.txt"), vocab, 2, OovPolicy::trainable_random(7));
        CHECK(trainable.matrix().row(vocab.index_of("dog")).norm() > 0.0);
        CHECK(trainable.is_trainable(vocab.index_of("dog")));
        CHECK(trainable.is_trainable(trainable.shared_oov_row()));
        CHECK(!trainable.is_trainable(vocab.index_of("cat")));  // pre-trained rows stay frozen

        auto shared = load_embedding_text(tmp.file("v.txt"), vocab, 2, OovPolicy::shared(7));
        CHECK(shared.effective_row(vocab.index_of("dog")) == shared.shared_oov_row());
        CHECK(shared.effective_row(vocab.index_of("cat")) == vocab.index_of("cat"));
    }
}

TEST_CASE("embedding cache round trip") {
    ktest::TempDir tmp("cache");
    auto vocab = vocab_of("cat dog mouse");
    ktest::write_file(tmp.file("v.txt"), "cat 0.1 0.2\nmouse -1 2\n");
    auto table = load_embedding_text(tmp.file("v.txt"), vocab, 2, OovPolicy::trainable_random(3));

    save_embedding_cache(table, tmp.file("v.emb1"));
    auto back = load_embedding_cache(tmp.file("v.emb1"), vocab);
    CHECK(back.dim() == 2);
    CHECK(back.missing_count() == table.missing_count());
    CHECK(back.trainable_rows() == table.trainable_rows());
    // float32 storage: compare at float precision
    CHECK((back.matrix() - table.matrix()).cwiseAbs().maxCoeff() < 1e-6);

    auto other_vocab = vocab_of("totally different words");
    CHECK_THROWS_AS(load_embedding_cache(tmp.file("v.emb1"), other_vocab), EvalMismatchError);
}

TEST_CASE("build_cooccurrence") {
    SUBCASE("single adjacent pair") {
        auto m = build_cooccurrence({{"a", "b"}}, 1);
        const auto a = m.vocabulary().index_of("a");
        const auto b = m.vocabulary().index_of("b");
        CHECK(m.at(a, b) == doctest::Approx(1.0));
        CHECK(m.at(b, a) == doctest::Approx(1.0));
        CHECK(m.row_sum(a) == doctest::Approx(1.0));
        CHECK(m.row_sum(b) == doctest::Approx(1.0));
    }

    SUBCASE("distance weighting 1/d") {
        auto m = build_cooccurrence({{"a", "b", "c"}}, 2);
        const auto a = m.vocabulary().index_of("a");
        const auto c = m.vocabulary().index_of("c");
        CHECK(m.at(a, c) == doctest::Approx(0.5));
    }

    SUBCASE("probability is a direct ratio") {
        // X_ij = 2, X_i = 8 -> P = 0.25.
        std::unordered_map<std::uint64_t, double> weights;
        weights[key(1, 2)] = 2.0;
        weights[key(1, 3)] = 6.0;
        CooccurrenceMatrix m(Vocabulary::from_tokens({"x", "y", "z"}), std::move(weights));
        CHECK(m.row_sum(1) == doctest::Approx(8.0));
        CHECK(m.prob(1, 2) == doctest::Approx(0.25));
    }

    SUBCASE("symmetry and row normalization on random corpora") {
        Rng rng(13);
        const std::vector<std::string> words = {"w0", "w1", "w2", "w3", "w4", "w5"};
        std::vector<std::vector<std::string>> docs;
        for (int d = 0; d < 10; ++d) {
            std::vector<std::string> doc_tokens;
            const auto len = 2 + rng.index(20);
            for (std::size_t i = 0; i < len; ++i) {
                doc_tokens.push_back(words[rng.index(words.size())]);
            }
            docs.push_back(std::move(doc_tokens));
        }
        auto m = build_cooccurrence(docs, 4);
        for (const auto& e : m.entries()) {
            CHECK(m.at(e.j, e.i) == doctest::Approx(e.x).epsilon(1e-12));
        }
        for (std::int32_t i = 1; i <= m.vocabulary().size(); ++i) {
            if (m.row_sum(i) <= 0.0) continue;
            double total = 0.0;
            for (std::int32_t j = 1; j <= m.vocabulary().size(); ++j) total += m.prob(i, j);
            CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
        }
    }

    SUBCASE("empty corpus is an error") {
        CHECK_THROWS_AS(build_cooccurrence(std::vector<std::vector<std::string>>{}, 2), DataError);
    }
}

TEST_CASE("train_glove") {
    SUBCASE("single constraint converges to log X") {
        std::unordered_map<std::uint64_t, double> weights;
        weights[key(1, 2)] = 5.0;
        CooccurrenceMatrix m(Vocabulary::from_tokens({"p", "q"}), std::move(weights));
        GloveConfig cfg;
        cfg.dim = 4;
        cfg.epochs = 800;
        cfg.seed = 1;
        auto result = train_glove(m, cfg);
        const double fit = result.w.row(1).dot(result.wc.row(2)) + result.b(1) + result.bc(2);
        CHECK(fit == doctest::Approx(std::log(5.0)).epsilon(1e-2));
    }

    SUBCASE("epoch loss is non-increasing within 1% tolerance") {
        auto m = build_cooccurrence(
            {{"alpha", "beta", "alpha", "beta", "gamma", "delta", "gamma", "delta"}}, 3);
        GloveConfig cfg;
        cfg.dim = 8;
        cfg.epochs = 40;
        cfg.seed = 3;
        auto result = train_glove(m, cfg);
        REQUIRE(result.epoch_loss.size() == 40);
        for (std::size_t e = 1; e < result.epoch_loss.size(); ++e) {
            CHECK(result.epoch_loss[e] <= result.epoch_loss[e - 1] * 1.01 + 1e-12);
        }
    }

    SUBCASE("co-occurring pair is closer than a non-co-occurring one") {
        // "alpha beta" always together; "gamma" only ever with "delta".
        std::vector<std::vector<std::string>> docs;
        for (int i = 0; i < 30; ++i) {
            docs.push_back({"alpha", "beta"});
            docs.push_back({"gamma", "delta"});
        }
        auto m = build_cooccurrence(docs, 2);
        GloveConfig cfg;
        cfg.dim = 8;
        cfg.epochs = 60;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            cfg.seed = seed;
            auto result = train_glove(m, cfg);
            const auto& vocab = result.table.vocabulary();
            const auto& mat = result.table.matrix();
            const double close =
                cosine(mat.row(vocab.index_of("alpha")), mat.row(vocab.index_of("beta")));
            const double far =
                cosine(mat.row(vocab.index_of("alpha")), mat.row(vocab.index_of("gamma")));
            CHECK(close > far);
        }
    }

    SUBCASE("bit-reproducible under a fixed seed") {
        auto m = build_cooccurrence({{"a", "b", "c", "a", "c"}}, 2);
        GloveConfig cfg;
        cfg.dim = 4;
        cfg.epochs = 10;
        cfg.seed = 42;
        auto r1 = train_glove(m, cfg);
        auto r2 = train_glove(m, cfg);
        CHECK(r1.epoch_loss == r2.epoch_loss);
        CHECK(r1.table.matrix() == r2.table.matrix());
    }
}

TEST_CASE("embedding text round trip") {
    ktest::TempDir tmp("rt");
    auto m = build_cooccurrence({{"one", "two", "three", "one", "two"}}, 2);
    GloveConfig cfg;
    cfg.dim = 3;
    cfg.epochs = 5;
    cfg.seed = 9;
    auto result = train_glove(m, cfg);

    save_embedding_text(result.table, tmp.file("glove.txt"));
    auto loaded = load_embedding_text(tmp.file("glove.txt"), result.table.vocabulary(), 3,
                                      OovPolicy::zero());
    CHECK(loaded.missing_count() == 0);
    CHECK((loaded.matrix() - result.table.matrix()).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("embed_sequence") {
    auto vocab = vocab_of("cat dog");
    ktest::TempDir tmp("seq");
    ktest::write_file(tmp.file("v.txt"), "cat 1 2\ndog 3 4\n");

    SUBCASE("all-pad sequence embeds to the zero matrix") {
        auto table = load_embedding_text(tmp.file("v.txt"), vocab, 2, OovPolicy::zero());
        IndexSequence seq{{0, 0, 0}};
        auto mat = embed_sequence(seq, table);
        CHECK(mat.rows() == 3);
        CHECK(mat.norm() == 0.0);
    }

    SUBCASE("known tokens are exact row lookups") {
        auto table = load_embedding_text(tmp.file("v.txt"), vocab, 2, OovPolicy::zero());
        auto seq = to_sequence({"dog", "cat"}, vocab, 4);
        auto mat = embed_sequence(seq, table);
        CHECK(mat(0, 0) == 3.0);
        CHECK(mat(0, 1) == 4.0);
        CHECK(mat(1, 0) == 1.0);
        CHECK(mat(2, 0) == 0.0);
        CHECK(!mat.hasNaN());
    }

    SUBCASE("unknown-token policies") {
        auto seq = to_sequence({"wolf", "cat"}, vocab, 2);  // wolf -> OOV slot

        auto zero = load_embedding_text(tmp.file("v.txt"), vocab, 2, OovPolicy::zero());
        CHECK(embed_sequence(seq, zero).row(0).norm() == 0.0);

        auto trainable =
            load_embedding_text(tmp.file("v.txt"), vocab, 2, OovPolicy::trainable_random(5));
        auto m1 = embed_sequence(seq, trainable);
        auto m2 = embed_sequence(seq, trainable);
        CHECK(m1.row(0).norm() > 0.0);
        CHECK(m1 == m2);  // stable assignment on repeated calls
    }

    SUBCASE("out-of-range index is an error") {
        auto table = load_embedding_text(tmp.file("v.txt"), vocab, 2, OovPolicy::zero());
        IndexSequence seq{{99}};
        CHECK_THROWS_AS(embed_sequence(seq, table), DataError);
    }
}
