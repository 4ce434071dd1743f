// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "kt/corpus.hpp"

namespace kt {

namespace {

using nlohmann::json;

std::string loc(const std::filesystem::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line);
}

Document parse_jsonl_line(const std::string& line, const std::filesystem::path& path,
                          std::size_t line_no) {
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::parse_error& e) {
        throw DataError(loc(path, line_no) + ": invalid JSON: " + e.what());
    }
    if (!obj.is_object()) throw DataError(loc(path, line_no) + ": expected a JSON object");

    Document doc;
    for (const char* key : {"id", "element", "text"}) {
        if (!obj.contains(key) || !obj[key].is_string()) {
            throw DataError(loc(path, line_no) + ": missing or non-string field '" + key + "'");
        }
    }
    doc.id = obj["id"].get<std::string>();
    doc.element = obj["element"].get<std::string>();
    doc.text = obj["text"].get<std::string>();

    if (obj.contains("labels")) {
        if (!obj["labels"].is_array()) {
            throw DataError(loc(path, line_no) + ": 'labels' must be an array");
        }
        for (const auto& item : obj["labels"]) {
            if (!item.is_string()) {
                throw DataError(loc(path, line_no) + ": label entries must be strings");
            }
            const auto name = item.get<std::string>();
            const auto type = parse_knowledge_type(name);
            if (!type) {
                throw DataError(loc(path, line_no) + ": unknown knowledge type '" + name + "'");
            }
            doc.labels.insert(*type);
        }
    }
    return doc;
}

Corpus load_jsonl(const std::filesystem::path& path, bool require_labels) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file: " + path.string());

    std::vector<Document> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Document doc = parse_jsonl_line(line, path, line_no);
        if (require_labels) {
            if (doc.text.empty()) {
                throw DataError(loc(path, line_no) + ": empty text in a labeled corpus");
            }
            if (doc.labels.empty()) {
                throw DataError(loc(path, line_no) + ": labeled corpus document '" + doc.id +
                                "' has no labels");
            }
        }
        docs.push_back(std::move(doc));
    }
    return Corpus(path.stem().string(), std::move(docs));
}

// Minimal RFC-4180 reader: quoted fields, "" escapes, fields may span lines.
std::vector<std::vector<std::string>> read_csv_records(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open corpus file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string data = ss.str();

    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        if (record.size() > 1 || !record[0].empty()) records.push_back(std::move(record));
        record.clear();
    };

    for (std::size_t i = 0; i < data.size(); ++i) {
        const char c = data[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < data.size() && data[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            end_record();
        } else {
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) throw DataError(path.string() + ": unterminated quoted field");
    if (field_started || !record.empty()) end_record();
    return records;
}

Corpus load_csv(const std::filesystem::path& path, bool require_labels) {
    const auto records = read_csv_records(path);
    if (records.empty()) throw DataError(path.string() + ": empty CSV file");

    const auto& header = records[0];
    const std::size_t expected_cols = 3 + kNumTypes;
    if (header.size() != expected_cols || header[0] != "id" || header[1] != "element" ||
        header[2] != "text") {
        throw DataError(path.string() + ": header must be id,element,text followed by the 12 type columns");
    }
    for (int t = 0; t < kNumTypes; ++t) {
        const auto expected = to_string(static_cast<KnowledgeType>(t));
        if (header[3 + static_cast<std::size_t>(t)] != expected) {
            throw DataError(path.string() + ": unknown label column '" +
                            header[3 + static_cast<std::size_t>(t)] + "' (expected '" +
                            std::string(expected) + "')");
        }
    }

    std::vector<Document> docs;
    docs.reserve(records.size() - 1);
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        const std::string where = path.string() + ": row " + std::to_string(r);
        if (rec.size() != expected_cols) {
            throw DataError(where + ": expected " + std::to_string(expected_cols) +
                            " fields, found " + std::to_string(rec.size()));
        }
        Document doc;
        doc.id = rec[0];
        doc.element = rec[1];
        doc.text = rec[2];
        for (int t = 0; t < kNumTypes; ++t) {
            const auto& cell = rec[3 + static_cast<std::size_t>(t)];
            if (cell == "1") {
                doc.labels.insert(static_cast<KnowledgeType>(t));
            } else if (cell != "0") {
                throw DataError(where + ": label value for " +
                                std::string(to_string(static_cast<KnowledgeType>(t))) +
                                " must be 0 or 1, found '" + cell + "'");
            }
        }
        if (require_labels) {
            if (doc.text.empty()) throw DataError(where + ": empty text in a labeled corpus");
            if (doc.labels.empty()) {
                throw DataError(where + ": labeled corpus document '" + doc.id + "' has no labels");
            }
        }
        docs.push_back(std::move(doc));
    }
    return Corpus(path.stem().string(), std::move(docs));
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format, bool require_labels) {
    switch (format) {
        case CorpusFormat::Jsonl:
            return load_jsonl(path, require_labels);
        case CorpusFormat::Csv:
            return load_csv(path, require_labels);
    }
    throw DataError("load_corpus: unknown format");
}

void save_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write corpus file: " + path.string());
    for (const auto& doc : corpus.docs()) {
        json labels = json::array();
        for (KnowledgeType t : doc.labels.types()) labels.push_back(std::string(to_string(t)));
        const json obj = {
            {"id", doc.id}, {"element", doc.element}, {"text", doc.text}, {"labels", labels}};
        out << obj.dump() << '\n';
    }
    if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace kt
