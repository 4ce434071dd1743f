#include <algorithm>
#include <cmath>
#include <set>

#include <doctest.h>

#include "kt/corpus.hpp"
#include "testutil.hpp"

using namespace kt;
using ktest::doc;

TEST_CASE("knowledge type names round-trip and keep taxonomy order") {
    CHECK(to_string(KnowledgeType::Functionality) == "Functionality");
    CHECK(to_string(KnowledgeType::NonInformation) == "NonInformation");
    CHECK(display_name(KnowledgeType::NonInformation) == "Non-information");
    CHECK(static_cast<int>(KnowledgeType::Functionality) == 0);
    CHECK(static_cast<int>(KnowledgeType::NonInformation) == 11);
    for (KnowledgeType t : all_types()) {
        CHECK(parse_knowledge_type(to_string(t)) == t);
    }
    CHECK(!parse_knowledge_type("Non-information").has_value());
    CHECK(!parse_knowledge_type("functionality").has_value());
}

TEST_CASE("label set basics") {
    LabelSet s{KnowledgeType::Concept, KnowledgeType::Example};
    CHECK(s.size() == 2);
    CHECK(s.contains(KnowledgeType::Concept));
    CHECK(!s.contains(KnowledgeType::Quality));
    s.erase(KnowledgeType::Concept);
    CHECK(s.size() == 1);
    CHECK(LabelSet{}.empty());
    const auto types = LabelSet{KnowledgeType::Quality, KnowledgeType::Purpose}.types();
    CHECK(types == std::vector<KnowledgeType>{KnowledgeType::Purpose, KnowledgeType::Quality});
}

TEST_CASE("corpus caches label counts consistently") {
    auto c = ktest::corpus({doc("a", {KnowledgeType::Functionality}),
                            doc("b", {KnowledgeType::Functionality, KnowledgeType::Example}),
                            doc("c", {KnowledgeType::Example})});
    CHECK(c.label_counts()[0] == 2);
    CHECK(c.label_counts()[8] == 2);
    CHECK(c.label_counts() == c.recount_labels());
    CHECK(c.labeled_count() == 3);
}

TEST_CASE("corpus rejects duplicate ids") {
    CHECK_THROWS_AS(ktest::corpus({doc("a", {KnowledgeType::Concept}),
                                   doc("a", {KnowledgeType::Example})}),
                    DataError);
}

TEST_CASE("load_corpus jsonl") {
    ktest::TempDir tmp("jsonl");

    SUBCASE("single valid line") {
        ktest::write_file(tmp.file("c.jsonl"),
                          R"({"id":"d1","element":"Foo.bar","text":"Returns the index.","labels":["Functionality"]})"
                          "\n");
        auto c = load_corpus(tmp.file("c.jsonl"), CorpusFormat::Jsonl);
        REQUIRE(c.size() == 1);
        CHECK(c.doc(0).id == "d1");
        CHECK(c.doc(0).element == "Foo.bar");
        CHECK(c.doc(0).labels == LabelSet{KnowledgeType::Functionality});
    }

    SUBCASE("unknown label name is rejected with the line number") {
        ktest::write_file(tmp.file("bad.jsonl"),
                          "{\"id\":\"d1\",\"element\":\"e\",\"text\":\"t\",\"labels\":[\"Functionality\"]}\n"
                          "{\"id\":\"d2\",\"element\":\"e\",\"text\":\"t\",\"labels\":[\"Banana\"]}\n");
        CHECK_THROWS_WITH_AS(load_corpus(tmp.file("bad.jsonl"), CorpusFormat::Jsonl),
                             doctest::Contains(":2"), DataError);
    }

    SUBCASE("empty text rejected in labeled corpora, allowed for inference input") {
        ktest::write_file(tmp.file("empty.jsonl"),
                          "{\"id\":\"d1\",\"element\":\"e\",\"text\":\"\",\"labels\":[\"Concept\"]}\n");
        CHECK_THROWS_AS(load_corpus(tmp.file("empty.jsonl"), CorpusFormat::Jsonl), DataError);
        CHECK_NOTHROW(load_corpus(tmp.file("empty.jsonl"), CorpusFormat::Jsonl,
                                  /*require_labels=*/false));
    }

    SUBCASE("missing labels rejected only in labeled mode") {
        ktest::write_file(tmp.file("nolabel.jsonl"),
                          "{\"id\":\"d1\",\"element\":\"e\",\"text\":\"t\",\"labels\":[]}\n");
        CHECK_THROWS_AS(load_corpus(tmp.file("nolabel.jsonl"), CorpusFormat::Jsonl), DataError);
        auto c = load_corpus(tmp.file("nolabel.jsonl"), CorpusFormat::Jsonl, false);
        CHECK(c.doc(0).labels.empty());
    }
}

TEST_CASE("load_corpus csv") {
    ktest::TempDir tmp("csv");
    const std::string header =
        "id,element,text,Functionality,Concept,Directive,Purpose,Quality,Control,Structure,"
        "Pattern,Example,Environment,Reference,NonInformation\n";

    SUBCASE("valid rows with quoted text") {
        ktest::write_file(tmp.file("c.csv"),
                          header +
                              "d1,Foo.bar,\"Returns, if possible, the \"\"index\"\".\","
                              "1,0,0,0,0,0,0,0,0,0,0,0\n"
                              "d2,Foo.baz,plain text,0,0,0,0,0,0,0,0,1,0,0,1\n");
        auto c = load_corpus(tmp.file("c.csv"), CorpusFormat::Csv);
        REQUIRE(c.size() == 2);
        CHECK(c.doc(0).text == "Returns, if possible, the \"index\".");
        CHECK(c.doc(0).labels == LabelSet{KnowledgeType::Functionality});
        CHECK(c.doc(1).labels ==
              LabelSet{KnowledgeType::Example, KnowledgeType::NonInformation});
    }

    SUBCASE("label value outside {0,1} names the row") {
        ktest::write_file(tmp.file("bad.csv"),
                          header + "d1,e,t,1,0,0,0,0,0,0,0,0,0,0,0\n"
                                   "d2,e,t,2,0,0,0,0,0,0,0,0,0,0,0\n");
        CHECK_THROWS_WITH_AS(load_corpus(tmp.file("bad.csv"), CorpusFormat::Csv),
                             doctest::Contains("row 2"), DataError);
    }

    SUBCASE("unknown label column rejected") {
        ktest::write_file(tmp.file("col.csv"),
                          "id,element,text,Func,Concept,Directive,Purpose,Quality,Control,"
                          "Structure,Pattern,Example,Environment,Reference,NonInformation\n");
        CHECK_THROWS_AS(load_corpus(tmp.file("col.csv"), CorpusFormat::Csv), DataError);
    }
}

TEST_CASE("jsonl round trip") {
    ktest::TempDir tmp("rt");
    auto c = ktest::corpus({doc("a", {KnowledgeType::Directive}, "Do not call twice."),
                            doc("b", {KnowledgeType::Example, KnowledgeType::Control},
                                "for (;;) {} \"quoted\"")});
    save_corpus_jsonl(c, tmp.file("c.jsonl"));
    auto back = load_corpus(tmp.file("c.jsonl"), CorpusFormat::Jsonl);
    REQUIRE(back.size() == c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK(back.doc(i).id == c.doc(i).id);
        CHECK(back.doc(i).text == c.doc(i).text);
        CHECK(back.doc(i).labels == c.doc(i).labels);
    }
}

namespace {

// Independent hand computation of the per-document score from per-type counts.
double scumble_oracle(const std::vector<KnowledgeType>& labels,
                      const std::array<int, kNumTypes>& counts) {
    const int max_count = *std::max_element(counts.begin(), counts.end());
    double prod = 1.0;
    double sum = 0.0;
    for (KnowledgeType t : labels) {
        const double irlbl = static_cast<double>(max_count) / counts[static_cast<int>(t)];
        prod *= irlbl;
        sum += irlbl;
    }
    const double n = static_cast<double>(labels.size());
    return 1.0 - std::pow(prod, 1.0 / n) / (sum / n);
}

}  // namespace

TEST_CASE("scumble") {
    SUBCASE("single-label documents score exactly zero") {
        auto c = ktest::corpus({doc("a", {KnowledgeType::Functionality}),
                                doc("b", {KnowledgeType::Quality}),
                                doc("c", {KnowledgeType::Quality})});
        auto rep = scumble(c);
        for (double s : rep.per_document) CHECK(s == 0.0);
        CHECK(rep.mean == 0.0);
    }

    SUBCASE("equal-frequency types score exactly zero") {
        auto c = ktest::corpus({doc("a", {KnowledgeType::Concept, KnowledgeType::Example}),
                                doc("b", {KnowledgeType::Concept, KnowledgeType::Example})});
        auto rep = scumble(c);
        CHECK(rep.mean == 0.0);
    }

    SUBCASE("three-document imbalanced corpus matches the hand formula") {
        // {A}, {A}, {A,B}: counts are A=3, B=1, so IRLbl(A)=1 and IRLbl(B)=3.
        auto c = ktest::corpus({doc("a", {KnowledgeType::Functionality}),
                                doc("b", {KnowledgeType::Functionality}),
                                doc("c", {KnowledgeType::Functionality, KnowledgeType::Quality})});
        auto rep = scumble(c);
        CHECK(rep.irlbl[static_cast<int>(KnowledgeType::Functionality)] == doctest::Approx(1.0));
        CHECK(rep.irlbl[static_cast<int>(KnowledgeType::Quality)] == doctest::Approx(3.0));
        const double expected_d3 = 1.0 - std::sqrt(3.0) / 2.0;  // 0.133975
        CHECK(rep.per_document[2] == doctest::Approx(expected_d3).epsilon(1e-12));
        CHECK(rep.mean == doctest::Approx(expected_d3 / 3.0).epsilon(1e-12));
        CHECK(rep.per_document[2] ==
              doctest::Approx(scumble_oracle({KnowledgeType::Functionality, KnowledgeType::Quality},
                                             c.label_counts()))
                  .epsilon(1e-12));
    }

    SUBCASE("permutation and label-identity invariance") {
        auto c1 = ktest::corpus({doc("a", {KnowledgeType::Functionality}),
                                 doc("b", {KnowledgeType::Functionality}),
                                 doc("c", {KnowledgeType::Functionality, KnowledgeType::Quality}),
                                 doc("d", {KnowledgeType::Quality, KnowledgeType::Example})});
        auto c2 = ktest::corpus({doc("c", {KnowledgeType::Functionality, KnowledgeType::Quality}),
                                 doc("d", {KnowledgeType::Quality, KnowledgeType::Example}),
                                 doc("a", {KnowledgeType::Functionality}),
                                 doc("b", {KnowledgeType::Functionality})});
        // Same count structure under renamed types.
        auto c3 = ktest::corpus({doc("a", {KnowledgeType::Reference}),
                                 doc("b", {KnowledgeType::Reference}),
                                 doc("c", {KnowledgeType::Reference, KnowledgeType::Pattern}),
                                 doc("d", {KnowledgeType::Pattern, KnowledgeType::Directive})});
        CHECK(scumble(c1).mean == doctest::Approx(scumble(c2).mean).epsilon(1e-15));
        CHECK(scumble(c1).mean == doctest::Approx(scumble(c3).mean).epsilon(1e-15));
    }

    SUBCASE("scores stay in [0,1] and error on unlabeled corpus") {
        Rng rng(7);
        std::vector<Document> docs;
        for (int i = 0; i < 60; ++i) {
            Document d = doc("d" + std::to_string(i), {});
            const int n_labels = 1 + static_cast<int>(rng.index(4));
            for (int j = 0; j < n_labels; ++j) {
                d.labels.insert(static_cast<KnowledgeType>(rng.index(kNumTypes)));
            }
            docs.push_back(std::move(d));
        }
        auto rep = scumble(ktest::corpus(std::move(docs)));
        for (double s : rep.per_document) {
            CHECK(s >= 0.0);
            CHECK(s <= 1.0);
        }
        CHECK(rep.mean >= 0.0);
        CHECK(rep.mean <= 1.0);

        CHECK_THROWS_AS(scumble(ktest::corpus({})), DataError);
    }
}

TEST_CASE("resample_training_set") {
    SUBCASE("no targeted types is a no-op") {
        auto c = ktest::corpus({doc("a", {KnowledgeType::Concept}),
                                doc("b", {KnowledgeType::Example})});
        auto r = resample_training_set(c, 5);
        REQUIRE(r.size() == 2);
        CHECK(r.doc(0).id == "a");
        CHECK(r.doc(1).id == "b");
    }

    SUBCASE("removal count follows the floor rule") {
        std::vector<Document> docs;
        for (int i = 0; i < 10; ++i) {
            docs.push_back(doc("d" + std::to_string(i), {KnowledgeType::Functionality}));
        }
        auto r = resample_training_set(ktest::corpus(std::move(docs)), 123);
        CHECK(r.size() == 7);  // floor(0.30 * 10) = 3 removed
    }

    SUBCASE("duplication appends #dup1 copies and preserves survivor order") {
        std::vector<Document> docs;
        for (int i = 0; i < 4; ++i) {
            docs.push_back(doc("q" + std::to_string(i), {KnowledgeType::Quality}));
        }
        auto r = resample_training_set(ktest::corpus(std::move(docs)), 99);
        REQUIRE(r.size() == 6);  // floor(0.50 * 4) = 2 duplicates
        for (int i = 0; i < 4; ++i) CHECK(r.doc(static_cast<std::size_t>(i)).id == "q" + std::to_string(i));
        CHECK(r.doc(4).id.ends_with("#dup1"));
        CHECK(r.doc(5).id.ends_with("#dup1"));
    }

    SUBCASE("document with both removal types is a single candidate") {
        std::vector<Document> docs;
        for (int i = 0; i < 10; ++i) {
            docs.push_back(doc("d" + std::to_string(i),
                               {KnowledgeType::Functionality, KnowledgeType::NonInformation}));
        }
        auto r = resample_training_set(ktest::corpus(std::move(docs)), 1);
        CHECK(r.size() == 7);
    }

    SUBCASE("deterministic under seed") {
        std::vector<Document> docs;
        for (int i = 0; i < 30; ++i) {
            LabelSet labels;
            labels.insert(i % 2 == 0 ? KnowledgeType::Functionality : KnowledgeType::Quality);
            Document d = doc("d" + std::to_string(i), {});
            d.labels = labels;
            docs.push_back(std::move(d));
        }
        auto c = ktest::corpus(std::move(docs));
        auto r1 = resample_training_set(c, 42);
        auto r2 = resample_training_set(c, 42);
        REQUIRE(r1.size() == r2.size());
        for (std::size_t i = 0; i < r1.size(); ++i) CHECK(r1.doc(i).id == r2.doc(i).id);
    }
}

TEST_CASE("split_holdout") {
    std::vector<Document> docs;
    for (int i = 0; i < 100; ++i) {
        docs.push_back(doc("d" + std::to_string(i), {KnowledgeType::Functionality}));
    }
    auto c = ktest::corpus(std::move(docs));

    SUBCASE("90/10 disjoint partition") {
        auto [train, test] = split_holdout(c, 0.10, 7);
        CHECK(train.size() == 90);
        CHECK(test.size() == 10);
        std::set<std::string> ids;
        for (const auto& d : train.docs()) ids.insert(d.id);
        for (const auto& d : test.docs()) CHECK(!ids.contains(d.id));
    }

    SUBCASE("same seed gives identical splits") {
        auto [t1, e1] = split_holdout(c, 0.10, 11);
        auto [t2, e2] = split_holdout(c, 0.10, 11);
        REQUIRE(e1.size() == e2.size());
        for (std::size_t i = 0; i < e1.size(); ++i) CHECK(e1.doc(i).id == e2.doc(i).id);
    }

    SUBCASE("rounding is half away from zero") {
        auto small = ktest::corpus({doc("a", {KnowledgeType::Concept}),
                                    doc("b", {KnowledgeType::Concept}),
                                    doc("c", {KnowledgeType::Concept})});
        auto [train, test] = split_holdout(small, 0.5, 3);
        CHECK(test.size() == 2);  // round(1.5) = 2
        CHECK(train.size() == 1);
    }

    SUBCASE("errors") {
        CHECK_THROWS_AS(split_holdout(ktest::corpus({doc("a", {KnowledgeType::Concept})}), 0.1, 1),
                        DataError);
        CHECK_THROWS_AS(split_holdout(c, 0.0, 1), DataError);
        CHECK_THROWS_AS(split_holdout(c, 1.0, 1), DataError);
    }
}

TEST_CASE("make_folds") {
    auto build = [](int n) {
        std::vector<Document> docs;
        for (int i = 0; i < n; ++i) {
            docs.push_back(doc("d" + std::to_string(i), {KnowledgeType::Example}));
        }
        return ktest::corpus(std::move(docs));
    };

    SUBCASE("10 docs, k=10: singleton test folds forming a partition") {
        auto folds = make_folds(build(10), 10, 3);
        REQUIRE(folds.size() == 10);
        std::set<std::string> seen;
        for (const auto& [train, test] : folds) {
            CHECK(test.size() == 1);
            CHECK(train.size() == 9);
            for (const auto& d : test.docs()) CHECK(seen.insert(d.id).second);
        }
        CHECK(seen.size() == 10);
    }

    SUBCASE("103 docs, k=10: three folds of 11, seven of 10") {
        auto folds = make_folds(build(103), 10, 17);
        std::vector<std::size_t> sizes;
        for (const auto& [train, test] : folds) sizes.push_back(test.size());
        CHECK(std::count(sizes.begin(), sizes.end(), 11u) == 3);
        CHECK(std::count(sizes.begin(), sizes.end(), 10u) == 7);
    }

    SUBCASE("errors") {
        CHECK_THROWS_AS(make_folds(build(5), 6, 1), DataError);
        CHECK_THROWS_AS(make_folds(build(5), 1, 1), DataError);
    }
}

TEST_CASE("stratified_sample") {
    auto strata_by_element_prefix = [](const Document& d) {
        return d.element.substr(0, d.element.find('.'));
    };

    SUBCASE("single stratum reduces to a plain uniform sample") {
        std::vector<Document> docs;
        for (int i = 0; i < 20; ++i) {
            docs.push_back(doc("d" + std::to_string(i), {KnowledgeType::Concept}));
        }
        auto s = stratified_sample(ktest::corpus(std::move(docs)),
                                   [](const Document&) { return std::string("all"); }, 5, 3);
        CHECK(s.size() == 5);
    }

    SUBCASE("80/20 with n=10 gives exact 8/2 apportionment") {
        std::vector<Document> docs;
        for (int i = 0; i < 80; ++i) {
            Document d = doc("a" + std::to_string(i), {KnowledgeType::Concept});
            d.element = "A.x";
            docs.push_back(std::move(d));
        }
        for (int i = 0; i < 20; ++i) {
            Document d = doc("b" + std::to_string(i), {KnowledgeType::Concept});
            d.element = "B.x";
            docs.push_back(std::move(d));
        }
        auto s = stratified_sample(ktest::corpus(std::move(docs)), strata_by_element_prefix, 10, 5);
        int a = 0, b = 0;
        for (const auto& d : s.docs()) (d.element[0] == 'A' ? a : b)++;
        CHECK(a == 8);
        CHECK(b == 2);
    }

    SUBCASE("7/3 with n=5: remainder tie goes to the earlier stratum") {
        std::vector<Document> docs;
        for (int i = 0; i < 7; ++i) {
            Document d = doc("a" + std::to_string(i), {KnowledgeType::Concept});
            d.element = "A.x";
            docs.push_back(std::move(d));
        }
        for (int i = 0; i < 3; ++i) {
            Document d = doc("b" + std::to_string(i), {KnowledgeType::Concept});
            d.element = "B.x";
            docs.push_back(std::move(d));
        }
        auto s = stratified_sample(ktest::corpus(std::move(docs)), strata_by_element_prefix, 5, 5);
        int a = 0, b = 0;
        for (const auto& d : s.docs()) (d.element[0] == 'A' ? a : b)++;
        CHECK(a == 4);
        CHECK(b == 1);
    }

    SUBCASE("errors") {
        CHECK_THROWS_AS(stratified_sample(ktest::corpus({}),
                                          [](const Document&) { return std::string(); }, 1, 1),
                        DataError);
    }
}

TEST_CASE("label count cache matches recomputation on random corpora") {
    Rng rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Document> docs;
        const int n = 1 + static_cast<int>(rng.index(40));
        for (int i = 0; i < n; ++i) {
            Document d = doc("d" + std::to_string(i), {});
            const int k = 1 + static_cast<int>(rng.index(3));
            for (int j = 0; j < k; ++j) {
                d.labels.insert(static_cast<KnowledgeType>(rng.index(kNumTypes)));
            }
            docs.push_back(std::move(d));
        }
        auto c = ktest::corpus(std::move(docs));
        CHECK(c.label_counts() == c.recount_labels());
    }
}
