// SPDX-License-Identifier: Apache-2.0
#include <fstream>

#include "kt/text.hpp"

namespace kt {

namespace {

// Mirrors core/data/stopwords_en.txt; the two are kept in sync by a unit test.
constexpr const char* kDefaultStopwords[] = {
    "a",          "about",     "above",   "after",   "again",      "against", "all",
    "also",       "am",        "an",      "and",     "any",        "are",     "as",
    "at",         "be",        "because", "been",    "before",     "being",   "below",
    "between",    "both",      "but",     "by",      "can",        "cannot",  "could",
    "d",          "did",       "do",      "does",    "doing",      "down",    "during",
    "each",       "few",       "for",     "from",    "further",    "had",     "has",
    "have",       "having",    "he",      "her",     "here",       "hers",    "herself",
    "him",        "himself",   "his",     "how",     "i",          "if",      "in",
    "into",       "is",        "it",      "its",     "itself",     "just",    "ll",
    "m",          "may",       "me",      "might",   "more",       "most",    "must",
    "my",         "myself",    "no",      "nor",     "not",        "now",     "o",
    "of",         "off",       "on",      "once",    "only",       "or",      "other",
    "our",        "ours",      "ourselves", "out",   "over",       "own",     "re",
    "s",          "same",      "shall",   "she",     "should",     "so",      "some",
    "such",       "t",         "than",    "that",    "the",        "their",   "theirs",
    "them",       "themselves", "then",   "there",   "these",      "they",    "this",
    "those",      "through",   "to",      "too",     "under",      "until",   "up",
    "upon",       "ve",        "very",    "was",     "we",         "were",    "what",
    "when",       "where",     "which",   "while",   "who",        "whom",    "why",
    "will",       "with",      "would",   "y",       "you",        "your",    "yours",
    "yourself",   "yourselves",
};

}  // namespace

const StopwordSet& default_stopwords() {
    static const StopwordSet set = [] {
        StopwordSet s;
        for (const char* w : kDefaultStopwords) s.insert(w);
        return s;
    }();
    return set;
}

StopwordSet load_stopword_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open stopword file: " + path.string());

    StopwordSet set;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto begin = line.find_first_not_of(" \t\r");
        if (begin == std::string::npos) continue;
        const auto end = line.find_last_not_of(" \t\r");
        set.insert(line.substr(begin, end - begin + 1));
    }
    return set;
}

}  // namespace kt
