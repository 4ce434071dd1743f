#include <cmath>

#include <doctest.h>

#include "kt/metrics.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace kt;
using ktest::doc;

namespace {

PredictionMatrix make_pred(const std::vector<std::array<double, kNumTypes>>& scores,
                           const std::vector<LabelSet>& truth) {
    PredictionMatrix pred;
    pred.scores.resize(static_cast<Eigen::Index>(scores.size()), kNumTypes);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        for (int t = 0; t < kNumTypes; ++t) {
            pred.scores(static_cast<Eigen::Index>(i), t) = scores[i][static_cast<std::size_t>(t)];
        }
    }
    pred.truth = truth;
    return pred;
}

}  // namespace

TEST_CASE("auprc") {
    SUBCASE("perfect ranking scores 1") {
        std::vector<double> s{0.9, 0.8, 0.2, 0.1};
        std::vector<char> y{1, 1, 0, 0};
        CHECK(*auprc(s, y) == doctest::Approx(1.0));
    }

    SUBCASE("single positive ranked last scores 1/n") {
        std::vector<double> s{0.9, 0.8, 0.7, 0.1};
        std::vector<char> y{0, 0, 0, 1};
        CHECK(*auprc(s, y) == doctest::Approx(0.25));
    }

    SUBCASE("all-tied scores collapse to prevalence") {
        std::vector<double> s{0.5, 0.5, 0.5, 0.5};
        std::vector<char> y{1, 0, 0, 0};
        CHECK(*auprc(s, y) == doctest::Approx(0.25));
    }

    SUBCASE("no positives reports absent, never 0") {
        std::vector<double> s{0.9, 0.1};
        std::vector<char> y{0, 0};
        CHECK(!auprc(s, y).has_value());
        CHECK_THROWS_AS(pr_curve(s, y), DataError);
    }

    SUBCASE("random scores at prevalence pi stay near pi") {
        Rng rng(31);
        const double pi = 0.3;
        const int n = 4000;
        std::vector<double> s(n);
        std::vector<char> y(n);
        for (int i = 0; i < n; ++i) {
            s[static_cast<std::size_t>(i)] = rng.uniform01();
            y[static_cast<std::size_t>(i)] = rng.uniform01() < pi;
        }
        CHECK(*auprc(s, y) == doctest::Approx(pi).epsilon(0.05 / pi));
    }

    SUBCASE("matches the brute-force threshold-enumeration oracle") {
        Rng rng(101);
        for (int trial = 0; trial < 200; ++trial) {
            const auto n = 2 + rng.index(48);
            std::vector<double> s(n);
            std::vector<char> y(n);
            bool any_pos = false;
            for (std::size_t i = 0; i < n; ++i) {
                // Quantized scores produce plenty of ties.
                s[i] = rng.index(8) / 8.0;
                y[i] = rng.uniform01() < 0.4;
                any_pos |= y[i] != 0;
            }
            if (!any_pos) y[rng.index(n)] = 1;
            CHECK(*auprc(s, y) == doctest::Approx(ktest::ap_oracle(s, y)).epsilon(1e-12));
        }
    }

    SUBCASE("invariant under strictly monotone score transforms") {
        Rng rng(7);
        std::vector<double> s(30);
        std::vector<char> y(30);
        for (std::size_t i = 0; i < 30; ++i) {
            s[i] = rng.index(10) / 10.0;
            y[i] = rng.uniform01() < 0.5;
        }
        y[0] = 1;
        std::vector<double> transformed(30);
        for (std::size_t i = 0; i < 30; ++i) {
            transformed[i] = 1.0 / (1.0 + std::exp(-(3.0 * s[i] - 1.0)));
        }
        CHECK(*auprc(s, y) == doctest::Approx(*auprc(transformed, y)).epsilon(1e-12));
    }
}

TEST_CASE("pr_curve emits one point per distinct threshold") {
    std::vector<double> s{0.9, 0.9, 0.5, 0.1};
    std::vector<char> y{1, 0, 1, 0};
    auto points = pr_curve(s, y);
    REQUIRE(points.size() == 3);
    CHECK(points[0].recall == doctest::Approx(0.5));
    CHECK(points[0].precision == doctest::Approx(0.5));
    CHECK(points[1].recall == doctest::Approx(1.0));
    CHECK(points[1].precision == doctest::Approx(2.0 / 3.0));
    CHECK(points[2].recall == doctest::Approx(1.0));
    CHECK(points[2].precision == doctest::Approx(0.5));
}

TEST_CASE("roc_auc") {
    SUBCASE("perfect ranking scores 1") {
        std::vector<double> s{0.9, 0.8, 0.2};
        std::vector<char> y{1, 1, 0};
        CHECK(roc_auc(s, y) == doctest::Approx(1.0));
    }

    SUBCASE("all-identical scores give 0.5 by the tie convention") {
        std::vector<double> s{0.4, 0.4, 0.4, 0.4};
        std::vector<char> y{1, 0, 1, 0};
        CHECK(roc_auc(s, y) == doctest::Approx(0.5));
    }

    SUBCASE("single-class truth is an error") {
        std::vector<double> s{0.4, 0.6};
        std::vector<char> y{1, 1};
        CHECK_THROWS_AS(roc_auc(s, y), DataError);
    }

    SUBCASE("matches exhaustive pair counting to 1e-12") {
        Rng rng(55);
        for (int trial = 0; trial < 200; ++trial) {
            const auto n = 5 + rng.index(46);
            std::vector<double> s(n);
            std::vector<char> y(n);
            for (std::size_t i = 0; i < n; ++i) {
                s[i] = rng.index(6) / 6.0;
                y[i] = rng.uniform01() < 0.5;
            }
            y[0] = 1;
            y[1] = 0;
            const double expected = ktest::auc_pair_oracle(s, y);
            CHECK(std::abs(roc_auc(s, y) - expected) < 1e-12);
        }
    }
}

TEST_CASE("thresholded counts and ratio metrics") {
    SUBCASE("F1 and FPR match the defining formulas") {
        CHECK(f1({.tp = 2, .fp = 0, .tn = 0, .fn = 0}) == doctest::Approx(1.0));
        CHECK(f1({.tp = 1, .fp = 1, .tn = 0, .fn = 1}) == doctest::Approx(0.5));
        CHECK(fpr({.tp = 0, .fp = 1, .tn = 3, .fn = 0}) == doctest::Approx(0.25));
        CHECK(precision({.tp = 3, .fp = 1, .tn = 0, .fn = 0}) == doctest::Approx(0.75));
        CHECK(recall({.tp = 3, .fp = 0, .tn = 0, .fn = 1}) == doctest::Approx(0.75));
    }

    SUBCASE("zero denominators yield 0") {
        CHECK(precision({.tp = 0, .fp = 0, .tn = 5, .fn = 0}) == 0.0);
        CHECK(recall({.tp = 0, .fp = 2, .tn = 5, .fn = 0}) == 0.0);
        CHECK(f1({.tp = 0, .fp = 0, .tn = 5, .fn = 0}) == 0.0);
        CHECK(fpr({.tp = 1, .fp = 0, .tn = 0, .fn = 1}) == 0.0);
    }

    SUBCASE("hand tally with the >= 0.5 boundary convention") {
        // truth (1,0,1), scores (0.9,0.6,0.4) for one type.
        std::vector<std::array<double, kNumTypes>> scores(3, std::array<double, kNumTypes>{});
        scores[0][0] = 0.9;
        scores[1][0] = 0.6;
        scores[2][0] = 0.4;
        std::vector<LabelSet> truth = {LabelSet{KnowledgeType::Functionality}, LabelSet{},
                                       LabelSet{KnowledgeType::Functionality}};
        auto counts = counts_at_threshold(make_pred(scores, truth), KnowledgeType::Functionality);
        CHECK(counts.tp == 1);
        CHECK(counts.fp == 1);
        CHECK(counts.fn == 1);
        CHECK(counts.tn == 0);

        scores[2][0] = 0.5;  // boundary counts positive
        counts = counts_at_threshold(make_pred(scores, truth), KnowledgeType::Functionality);
        CHECK(counts.tp == 2);
        CHECK(counts.fn == 0);
    }
}

TEST_CASE("hamming loss and subset accuracy") {
    std::vector<std::array<double, kNumTypes>> scores(2, std::array<double, kNumTypes>{});
    std::vector<LabelSet> truth(2);

    SUBCASE("perfect predictions") {
        truth[0].insert(KnowledgeType::Concept);
        scores[0][static_cast<int>(KnowledgeType::Concept)] = 1.0;
        auto pred = make_pred(scores, truth);
        CHECK(hamming_loss(pred) == 0.0);
        CHECK(subset_accuracy(pred) == 1.0);
    }

    SUBCASE("three wrong cells out of 24") {
        truth[0].insert(KnowledgeType::Concept);       // missed -> 1 wrong
        scores[1][static_cast<int>(KnowledgeType::Quality)] = 0.9;   // spurious
        scores[1][static_cast<int>(KnowledgeType::Example)] = 0.8;   // spurious
        auto pred = make_pred(scores, truth);
        CHECK(hamming_loss(pred) == doctest::Approx(3.0 / 24.0));
        CHECK(subset_accuracy(pred) == 0.0);
    }

    SUBCASE("every cell wrong") {
        std::vector<std::array<double, kNumTypes>> all_on(
            2, [] {
                std::array<double, kNumTypes> row{};
                row.fill(1.0);
                return row;
            }());
        auto pred = make_pred(all_on, truth);  // truth all empty
        CHECK(hamming_loss(pred) == 1.0);
    }

    SUBCASE("matches naive oracles on random instances") {
        Rng rng(77);
        for (int trial = 0; trial < 100; ++trial) {
            const auto n = 1 + rng.index(30);
            std::vector<std::array<double, kNumTypes>> s(n);
            std::vector<LabelSet> y(n);
            for (std::size_t i = 0; i < n; ++i) {
                for (int t = 0; t < kNumTypes; ++t) {
                    s[i][static_cast<std::size_t>(t)] = rng.index(4) / 3.0;
                }
                y[i] = LabelSet::from_bits(static_cast<std::uint16_t>(rng.next_u64() & 0xfff));
            }
            auto pred = make_pred(s, y);
            CHECK(hamming_loss(pred) == doctest::Approx(ktest::hamming_oracle(s, y, 0.5)));
            CHECK(subset_accuracy(pred) ==
                  doctest::Approx(ktest::subset_accuracy_oracle(s, y, 0.5)));
        }
    }

    SUBCASE("subset accuracy never exceeds any per-label accuracy") {
        Rng rng(88);
        for (int trial = 0; trial < 50; ++trial) {
            const auto n = 2 + rng.index(20);
            std::vector<std::array<double, kNumTypes>> s(n);
            std::vector<LabelSet> y(n);
            for (std::size_t i = 0; i < n; ++i) {
                for (int t = 0; t < kNumTypes; ++t) {
                    s[i][static_cast<std::size_t>(t)] = rng.uniform01();
                }
                y[i] = LabelSet::from_bits(static_cast<std::uint16_t>(rng.next_u64() & 0xfff));
            }
            auto pred = make_pred(s, y);
            const double subset = subset_accuracy(pred);
            for (int t = 0; t < kNumTypes; ++t) {
                auto c = counts_at_threshold(pred, static_cast<KnowledgeType>(t));
                const double label_acc =
                    static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
                CHECK(subset <= label_acc + 1e-12);
            }
        }
    }
}

TEST_CASE("macro metrics") {
    SUBCASE("unweighted mean over types") {
        // Type 0: perfect (tp only); type 1: complete miss (fn only). All other
        // types have empty truth and no predictions, contributing P=R=F1=0.
        std::vector<std::array<double, kNumTypes>> s(4, std::array<double, kNumTypes>{});
        std::vector<LabelSet> y(4);
        for (int i = 0; i < 4; ++i) {
            y[static_cast<std::size_t>(i)].insert(KnowledgeType::Functionality);
            s[static_cast<std::size_t>(i)][0] = 1.0;
        }
        y[0].insert(KnowledgeType::Concept);
        auto pred = make_pred(s, y);
        auto m = macro_metrics(pred);
        CHECK(m.f1 == doctest::Approx(1.0 / kNumTypes));
        CHECK(m.precision == doctest::Approx(1.0 / kNumTypes));
        CHECK(m.recall == doctest::Approx(1.0 / kNumTypes));
    }

    SUBCASE("macro differs from micro on the skewed hand case") {
        // Label A: 98 correct positives. Label B: 2 missed positives.
        const int n = 100;
        std::vector<std::array<double, kNumTypes>> s(n, std::array<double, kNumTypes>{});
        std::vector<LabelSet> y(n);
        for (int i = 0; i < 98; ++i) {
            y[static_cast<std::size_t>(i)].insert(KnowledgeType::Functionality);
            s[static_cast<std::size_t>(i)][0] = 1.0;
        }
        for (int i = 98; i < 100; ++i) y[static_cast<std::size_t>(i)].insert(KnowledgeType::Concept);
        auto pred = make_pred(s, y);
        auto m = macro_metrics(pred);
        // Per-label F1: A = 1.0, B = 0.0; the other ten types have no truth and
        // no decisions, so macro over the two informative labels is 0.5.
        const double macro_ab =
            (f1(counts_at_threshold(pred, KnowledgeType::Functionality)) +
             f1(counts_at_threshold(pred, KnowledgeType::Concept))) / 2.0;
        CHECK(macro_ab == doctest::Approx(0.5));
        CHECK(m.f1 == doctest::Approx(1.0 / kNumTypes));
    }

    SUBCASE("single-class types are excluded from MacroAUC with a note") {
        std::vector<std::array<double, kNumTypes>> s(4, std::array<double, kNumTypes>{});
        std::vector<LabelSet> y(4);
        y[0].insert(KnowledgeType::Functionality);
        s[0][0] = 0.9;
        s[1][0] = 0.1;
        auto pred = make_pred(s, y);
        auto m = macro_metrics(pred);
        REQUIRE(m.auc.has_value());
        CHECK(*m.auc == doctest::Approx(1.0));  // only Functionality qualifies
        CHECK(m.notes.size() == kNumTypes - 1);
    }
}

TEST_CASE("evaluate_predictions assembles a full report") {
    std::vector<std::array<double, kNumTypes>> s(3, std::array<double, kNumTypes>{});
    std::vector<LabelSet> y(3);
    y[0].insert(KnowledgeType::Functionality);
    y[1].insert(KnowledgeType::Functionality);
    s[0][0] = 0.9;
    s[1][0] = 0.8;
    s[2][0] = 0.1;
    auto report = evaluate_predictions(make_pred(s, y), 0.5, 3);
    CHECK(report.fold == 3);
    CHECK(*report.auprc_per_type[0] == doctest::Approx(1.0));
    CHECK(!report.auprc_per_type[1].has_value());
    CHECK(report.hamming == 0.0);
    CHECK(report.subset_acc == 1.0);
}

TEST_CASE("cross_validate") {
    std::vector<Document> docs;
    for (int i = 0; i < 40; ++i) {
        auto d = doc("d" + std::to_string(i),
                     {i % 2 == 0 ? KnowledgeType::Functionality : KnowledgeType::Concept});
        docs.push_back(std::move(d));
    }
    auto corpus = ktest::corpus(std::move(docs));

    SUBCASE("constant classifier yields the closed-form Hamming loss") {
        // Scores all zero: the per-fold Hamming loss equals the mean label
        // density of the fold's test split.
        auto fit = [](const Corpus& train, const Corpus& test, std::uint64_t) {
            (void)train;
            PredictionMatrix pred;
            pred.scores = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(test.size()), kNumTypes);
            for (const auto& d : test.docs()) pred.truth.push_back(d.labels);
            return pred;
        };
        auto result = cross_validate(fit, corpus, {.folds = 4, .seed = 9});
        REQUIRE(result.fold_reports.size() == 4);
        for (const auto& rep : result.fold_reports) {
            CHECK(rep.hamming == doctest::Approx(1.0 / kNumTypes));
        }
    }

    SUBCASE("training callback sees resampled train but untouched test") {
        std::vector<Document> fdocs;
        for (int i = 0; i < 30; ++i) {
            fdocs.push_back(doc("f" + std::to_string(i), {KnowledgeType::Functionality}));
        }
        auto fcorpus = ktest::corpus(std::move(fdocs));
        auto fit = [&](const Corpus& train, const Corpus& test, std::uint64_t) {
            // Every document is a removal candidate; resampling must have
            // shrunk the train split by exactly floor(0.3 * n) and left test alone.
            CHECK(train.size() < 30 - test.size());
            for (const auto& d : test.docs()) CHECK(d.id.find("#dup") == std::string::npos);
            PredictionMatrix pred;
            pred.scores = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(test.size()), kNumTypes);
            for (const auto& d : test.docs()) pred.truth.push_back(d.labels);
            return pred;
        };
        auto result = cross_validate(fit, fcorpus, {.folds = 3, .resample = true, .seed = 4});
        CHECK(result.fold_reports.size() == 3);
    }

    SUBCASE("binary-target folds missing a class are skipped with a warning") {
        std::vector<Document> rdocs;
        // Two Quality positives among eight documents: any fold without one in
        // its test split is single-class and must be skipped.
        for (int i = 0; i < 8; ++i) {
            rdocs.push_back(doc("r" + std::to_string(i),
                                {i < 2 ? KnowledgeType::Quality : KnowledgeType::Concept}));
        }
        auto rcorpus = ktest::corpus(std::move(rdocs));
        auto fit = [](const Corpus&, const Corpus& test, std::uint64_t) {
            PredictionMatrix pred;
            pred.scores = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(test.size()), kNumTypes);
            for (const auto& d : test.docs()) pred.truth.push_back(d.labels);
            return pred;
        };
        CvOptions opt{.folds = 4, .seed = 2};
        opt.binary_target = KnowledgeType::Quality;
        auto result = cross_validate(fit, rcorpus, opt);
        CHECK(result.fold_reports.size() + result.warnings.size() == 4);
        CHECK(!result.warnings.empty());
        CHECK(!result.fold_reports.empty());

        // A target that never occurs leaves nothing to evaluate.
        opt.binary_target = KnowledgeType::Reference;
        CHECK_THROWS_AS(cross_validate(fit, rcorpus, opt), DataError);
    }

    SUBCASE("aggregate reports mean and sample stddev") {
        auto fit = [](const Corpus&, const Corpus& test, std::uint64_t seed) {
            PredictionMatrix pred;
            Rng rng(seed);
            pred.scores = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(test.size()), kNumTypes);
            for (Eigen::Index i = 0; i < pred.scores.rows(); ++i) {
                for (int t = 0; t < kNumTypes; ++t) pred.scores(i, t) = rng.uniform01();
            }
            for (const auto& d : test.docs()) pred.truth.push_back(d.labels);
            return pred;
        };
        auto result = cross_validate(fit, corpus, {.folds = 5, .seed = 21});
        auto agg = aggregate(result);
        CHECK(agg.folds_evaluated == 5);
        double mean = 0.0;
        for (const auto& rep : result.fold_reports) mean += rep.hamming;
        mean /= 5.0;
        CHECK(agg.mean.hamming == doctest::Approx(mean));
        CHECK(agg.stddev.hamming >= 0.0);
    }
}
