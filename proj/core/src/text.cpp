// SPDX-License-Identifier: Apache-2.0
#include "kt/text.hpp"

#include <algorithm>
#include <cmath>

namespace kt {

std::vector<std::string> preprocess(std::string_view text, const StopwordSet& stopwords) {
    std::vector<std::string> out;
    std::string cur;

    auto flush = [&] {
        if (cur.empty()) return;
        const auto begin = cur.find_first_not_of('.');
        if (begin == std::string::npos) {
            cur.clear();
            return;
        }
        const auto end = cur.find_last_not_of('.');
        std::string token = cur.substr(begin, end - begin + 1);
        cur.clear();
        if (!stopwords.contains(token)) out.push_back(std::move(token));
    };

    for (const char raw : text) {
        const auto c = static_cast<unsigned char>(raw);
        const char lc = (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a')
                                               : static_cast<char>(c);
        const bool keep = (lc >= 'a' && lc <= 'z') || (lc >= '0' && lc <= '9') || lc == '_' ||
                          lc == '.';
        if (keep) {
            cur.push_back(lc);
        } else {
            flush();
        }
    }
    flush();
    return out;
}

Vocabulary Vocabulary::build(const Corpus& train, const StopwordSet& stopwords) {
    Vocabulary vocab;
    for (const auto& doc : train.docs()) {
        for (auto& token : preprocess(doc.text, stopwords)) {
            auto [it, inserted] =
                vocab.index_.try_emplace(token, static_cast<std::int32_t>(vocab.tokens_.size() + 1));
            if (inserted) vocab.tokens_.push_back(std::move(token));
        }
    }
    return vocab;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
    Vocabulary vocab;
    vocab.tokens_ = std::move(tokens);
    vocab.index_.reserve(vocab.tokens_.size());
    for (std::size_t i = 0; i < vocab.tokens_.size(); ++i) {
        if (!vocab.index_.emplace(vocab.tokens_[i], static_cast<std::int32_t>(i + 1)).second) {
            throw DataError("vocabulary: duplicate token '" + vocab.tokens_[i] + "'");
        }
    }
    return vocab;
}

std::uint64_t Vocabulary::content_hash() const {
    Fnv1a64 h;
    for (const auto& t : tokens_) {
        h.update(t);
        h.update("\n", 1);
    }
    return h.digest();
}

double SparseVec::dot(const SparseVec& other) const {
    double sum = 0.0;
    auto a = items.begin();
    auto b = other.items.begin();
    while (a != items.end() && b != other.items.end()) {
        if (a->first < b->first) {
            ++a;
        } else if (b->first < a->first) {
            ++b;
        } else {
            sum += a->second * b->second;
            ++a;
            ++b;
        }
    }
    return sum;
}

double SparseVec::squared_norm() const {
    double sum = 0.0;
    for (const auto& [idx, v] : items) sum += v * v;
    return sum;
}

double SparseVec::total() const {
    double sum = 0.0;
    for (const auto& [idx, v] : items) sum += v;
    return sum;
}

double euclidean_distance(const SparseVec& a, const SparseVec& b) {
    const double d2 = a.squared_norm() + b.squared_norm() - 2.0 * a.dot(b);
    return std::sqrt(std::max(d2, 0.0));
}

NgramSpace NgramSpace::build(const Corpus& train, const StopwordSet& stopwords) {
    NgramSpace space;
    auto add = [&space](std::string feature) {
        auto [it, inserted] =
            space.columns_.try_emplace(feature, static_cast<std::int32_t>(space.features_.size()));
        if (inserted) space.features_.push_back(std::move(feature));
    };
    for (const auto& doc : train.docs()) {
        const auto tokens = preprocess(doc.text, stopwords);
        for (const auto& t : tokens) add(t);
        for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
            add(bigram_key(tokens[i], tokens[i + 1]));
        }
    }
    return space;
}

NgramSpace NgramSpace::from_features(std::vector<std::string> features) {
    NgramSpace space;
    space.features_ = std::move(features);
    space.columns_.reserve(space.features_.size());
    for (std::size_t i = 0; i < space.features_.size(); ++i) {
        if (!space.columns_.emplace(space.features_[i], static_cast<std::int32_t>(i)).second) {
            throw DataError("ngram space: duplicate feature '" + space.features_[i] + "'");
        }
    }
    return space;
}

SparseVec NgramSpace::vectorize(const std::vector<std::string>& tokens) const {
    std::unordered_map<std::int32_t, double> counts;
    auto bump = [&](const std::string& feature) {
        auto it = columns_.find(feature);
        if (it != columns_.end()) counts[it->second] += 1.0;
    };
    for (const auto& t : tokens) bump(t);
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        bump(bigram_key(tokens[i], tokens[i + 1]));
    }

    SparseVec vec;
    vec.items.assign(counts.begin(), counts.end());
    std::sort(vec.items.begin(), vec.items.end());
    return vec;
}

std::uint64_t NgramSpace::content_hash() const {
    Fnv1a64 h;
    for (const auto& f : features_) {
        h.update(f);
        h.update("\n", 1);
    }
    return h.digest();
}

std::int32_t IndexSequence::effective_length() const {
    std::int32_t n = 0;
    while (n < length() && ids[static_cast<std::size_t>(n)] != 0) ++n;
    return n;
}

IndexSequence to_sequence(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                          std::int32_t max_len) {
    IndexSequence seq;
    seq.ids.assign(static_cast<std::size_t>(max_len), 0);
    const auto n = std::min<std::size_t>(tokens.size(), static_cast<std::size_t>(max_len));
    for (std::size_t i = 0; i < n; ++i) {
        const auto idx = vocab.index_of(tokens[i]);
        seq.ids[i] = idx != 0 ? idx : vocab.oov_index();
    }
    return seq;
}

}  // namespace kt
