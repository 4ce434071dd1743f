// SPDX-License-Identifier: Apache-2.0
#include "kt/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <unordered_set>

namespace kt {

namespace {

constexpr std::array<std::string_view, kNumTypes> kTypeNames = {
    "Functionality", "Concept",  "Directive", "Purpose",     "Quality",   "Control",
    "Structure",     "Pattern",  "Example",   "Environment", "Reference", "NonInformation",
};

constexpr std::array<std::string_view, kNumTypes> kDisplayNames = {
    "Functionality", "Concept",  "Directive", "Purpose",     "Quality",   "Control",
    "Structure",     "Pattern",  "Example",   "Environment", "Reference", "Non-information",
};

}  // namespace

std::string_view to_string(KnowledgeType t) { return kTypeNames[static_cast<int>(t)]; }

std::string_view display_name(KnowledgeType t) { return kDisplayNames[static_cast<int>(t)]; }

std::optional<KnowledgeType> parse_knowledge_type(std::string_view name) {
    for (int i = 0; i < kNumTypes; ++i) {
        if (kTypeNames[i] == name) return static_cast<KnowledgeType>(i);
    }
    return std::nullopt;
}

const std::array<KnowledgeType, kNumTypes>& all_types() {
    static const std::array<KnowledgeType, kNumTypes> types = [] {
        std::array<KnowledgeType, kNumTypes> a{};
        for (int i = 0; i < kNumTypes; ++i) a[i] = static_cast<KnowledgeType>(i);
        return a;
    }();
    return types;
}

std::vector<KnowledgeType> LabelSet::types() const {
    std::vector<KnowledgeType> out;
    out.reserve(size());
    for (int i = 0; i < kNumTypes; ++i) {
        auto t = static_cast<KnowledgeType>(i);
        if (contains(t)) out.push_back(t);
    }
    return out;
}

Corpus::Corpus(std::string name, std::vector<Document> docs)
    : name_(std::move(name)), docs_(std::move(docs)) {
    std::unordered_set<std::string_view> seen;
    seen.reserve(docs_.size());
    for (const auto& d : docs_) {
        if (!seen.insert(d.id).second) {
            throw DataError("corpus '" + name_ + "': duplicate document id '" + d.id + "'");
        }
        for (KnowledgeType t : d.labels.types()) ++label_counts_[static_cast<int>(t)];
        if (!d.labels.empty()) ++labeled_;
    }
}

std::array<int, kNumTypes> Corpus::recount_labels() const {
    std::array<int, kNumTypes> counts{};
    for (const auto& d : docs_) {
        for (KnowledgeType t : d.labels.types()) ++counts[static_cast<int>(t)];
    }
    return counts;
}

ScumbleReport scumble(const Corpus& corpus) {
    if (corpus.labeled_count() == 0) {
        throw DataError("scumble: corpus '" + corpus.name() + "' has no labeled documents");
    }
    const auto& counts = corpus.label_counts();
    const int max_count = *std::max_element(counts.begin(), counts.end());

    ScumbleReport rep;
    for (int t = 0; t < kNumTypes; ++t) {
        if (counts[t] > 0) rep.irlbl[t] = static_cast<double>(max_count) / counts[t];
    }

    rep.per_document.reserve(corpus.size());
    double sum = 0.0;
    for (const auto& d : corpus.docs()) {
        double score = 0.0;
        const auto types = d.labels.types();
        // Single-label (and unlabeled) documents score exactly 0: the geometric
        // and arithmetic means coincide.
        if (types.size() > 1) {
            double log_sum = 0.0;
            double lin_sum = 0.0;
            for (KnowledgeType t : types) {
                const double r = rep.irlbl[static_cast<int>(t)];
                log_sum += std::log(r);
                lin_sum += r;
            }
            const auto n = static_cast<double>(types.size());
            const double geometric = std::exp(log_sum / n);
            const double arithmetic = lin_sum / n;
            score = std::clamp(1.0 - geometric / arithmetic, 0.0, 1.0);
        }
        rep.per_document.push_back(score);
        sum += score;
    }
    rep.mean = sum / static_cast<double>(rep.per_document.size());
    return rep;
}

Corpus resample_training_set(const Corpus& train, std::uint64_t seed) {
    Rng rng(seed);
    const auto& docs = train.docs();

    std::vector<std::size_t> removal_candidates;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const auto& labels = docs[i].labels;
        if (labels.contains(KnowledgeType::Functionality) ||
            labels.contains(KnowledgeType::NonInformation)) {
            removal_candidates.push_back(i);
        }
    }
    // floor(0.30 * |candidates|) in exact integer arithmetic.
    const std::size_t n_remove = removal_candidates.size() * 3 / 10;
    rng.shuffle(removal_candidates);
    std::vector<char> removed(docs.size(), 0);
    for (std::size_t i = 0; i < n_remove; ++i) removed[removal_candidates[i]] = 1;

    std::vector<Document> out;
    out.reserve(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (!removed[i]) out.push_back(docs[i]);
    }

    std::vector<std::size_t> dup_candidates;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto& labels = out[i].labels;
        if (labels.contains(KnowledgeType::Environment) ||
            labels.contains(KnowledgeType::Quality)) {
            dup_candidates.push_back(i);
        }
    }
    const std::size_t n_dup = dup_candidates.size() / 2;  // floor(0.50 * |candidates|)
    rng.shuffle(dup_candidates);
    dup_candidates.resize(n_dup);
    std::sort(dup_candidates.begin(), dup_candidates.end());
    for (std::size_t i : dup_candidates) {
        Document copy = out[i];
        copy.id += "#dup1";
        out.push_back(std::move(copy));
    }
    return Corpus(train.name(), std::move(out));
}

std::pair<Corpus, Corpus> split_holdout(const Corpus& corpus, double test_fraction,
                                        std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw DataError("split_holdout: test_fraction must be in (0,1)");
    }
    if (corpus.size() < 2) {
        throw DataError("split_holdout: corpus '" + corpus.name() + "' has fewer than 2 documents");
    }
    const auto n = corpus.size();
    const auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(n)));

    Rng rng(seed);
    const auto test_idx = rng.sample_indices(n, std::min(n_test, n));
    std::vector<char> in_test(n, 0);
    for (std::size_t i : test_idx) in_test[i] = 1;

    std::vector<Document> train_docs;
    std::vector<Document> test_docs;
    train_docs.reserve(n - test_idx.size());
    test_docs.reserve(test_idx.size());
    for (std::size_t i = 0; i < n; ++i) {
        (in_test[i] ? test_docs : train_docs).push_back(corpus.doc(i));
    }
    return {Corpus(corpus.name() + "/train", std::move(train_docs)),
            Corpus(corpus.name() + "/test", std::move(test_docs))};
}

std::vector<std::pair<Corpus, Corpus>> make_folds(const Corpus& corpus, int k,
                                                  std::uint64_t seed) {
    if (k < 2) throw DataError("make_folds: k must be >= 2");
    if (static_cast<std::size_t>(k) > corpus.size()) {
        throw DataError("make_folds: k exceeds corpus size");
    }
    const auto n = corpus.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    // First n % k folds receive one extra document.
    std::vector<int> fold_of(n, 0);
    std::size_t pos = 0;
    for (int f = 0; f < k; ++f) {
        std::size_t fold_size = n / static_cast<std::size_t>(k) +
                                (static_cast<std::size_t>(f) < n % static_cast<std::size_t>(k) ? 1 : 0);
        for (std::size_t j = 0; j < fold_size; ++j) fold_of[order[pos++]] = f;
    }

    std::vector<std::pair<Corpus, Corpus>> folds;
    folds.reserve(static_cast<std::size_t>(k));
    for (int f = 0; f < k; ++f) {
        std::vector<Document> train_docs;
        std::vector<Document> test_docs;
        for (std::size_t i = 0; i < n; ++i) {
            (fold_of[i] == f ? test_docs : train_docs).push_back(corpus.doc(i));
        }
        std::string tag = "/fold" + std::to_string(f);
        folds.emplace_back(Corpus(corpus.name() + tag + "/train", std::move(train_docs)),
                           Corpus(corpus.name() + tag + "/test", std::move(test_docs)));
    }
    return folds;
}

Corpus stratified_sample(const Corpus& corpus,
                         const std::function<std::string(const Document&)>& strata_key,
                         std::size_t n, std::uint64_t seed) {
    if (corpus.empty()) throw DataError("stratified_sample: empty corpus");
    if (n > corpus.size()) throw DataError("stratified_sample: n exceeds corpus size");

    // Strata in first-occurrence order.
    std::vector<std::string> keys;
    std::vector<std::vector<std::size_t>> members;
    std::map<std::string, std::size_t> key_pos;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        std::string key = strata_key(corpus.doc(i));
        auto [it, inserted] = key_pos.try_emplace(key, keys.size());
        if (inserted) {
            keys.push_back(key);
            members.emplace_back();
        }
        members[it->second].push_back(i);
    }

    // Largest-remainder apportionment over exact integer quotas n*size_s/N.
    const std::size_t total = corpus.size();
    std::vector<std::size_t> take(keys.size());
    std::vector<std::pair<std::size_t, std::size_t>> remainders;  // (remainder, stratum)
    std::size_t assigned = 0;
    for (std::size_t s = 0; s < keys.size(); ++s) {
        const std::size_t num = n * members[s].size();
        take[s] = num / total;
        assigned += take[s];
        remainders.emplace_back(num % total, s);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++take[remainders[i].second];

    Rng rng(seed);
    std::vector<std::size_t> chosen;
    chosen.reserve(n);
    for (std::size_t s = 0; s < keys.size(); ++s) {
        auto idx = members[s];
        rng.shuffle(idx);
        idx.resize(std::min(take[s], idx.size()));
        chosen.insert(chosen.end(), idx.begin(), idx.end());
    }
    std::sort(chosen.begin(), chosen.end());

    std::vector<Document> docs;
    docs.reserve(chosen.size());
    for (std::size_t i : chosen) docs.push_back(corpus.doc(i));
    return Corpus(corpus.name() + "/sample", std::move(docs));
}

}  // namespace kt
