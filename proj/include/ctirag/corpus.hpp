#pragma once
// Corpus ingestion and chunking. Documents come from a plain-text directory
// or a JSONL file of {"id", "description", "metadata"?} records and are
// segmented by a recursive character splitter: try each separator in order,
// split oversized fragments with the next one, merge adjacent fragments
// greedily up to chunk_size, then prepend the previous chunk's trailing
// overlap where it fits.
//
// All sizes and offsets are in Unicode scalar values. The chunk bodies tile
// the document exactly, so stripping each chunk's leading overlap and
// concatenating reproduces the original text byte for byte.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "ctirag/errors.hpp"
#include "ctirag/utf8.hpp"

namespace ctirag {

struct SourceDocument {
    std::string doc_id;
    std::string text;
    std::map<std::string, std::string> metadata;
};

enum class CorpusFormat { plain_text_dir, jsonl, pdf_extracted_text };

inline CorpusFormat corpus_format_from_string(std::string_view s) {
    if (s == "plain_text_dir") return CorpusFormat::plain_text_dir;
    if (s == "jsonl") return CorpusFormat::jsonl;
    if (s == "pdf_extracted_text") return CorpusFormat::pdf_extracted_text;
    throw ConfigError("unknown corpus format: " + std::string(s));
}

struct CorpusLoad {
    std::vector<SourceDocument> documents;
    std::size_t skipped_empty = 0;
};

struct Chunk {
    std::string chunk_id; // doc_id + "#" + ordinal
    std::string doc_id;
    std::string text;
    std::size_t char_start = 0; // scalar offsets into the parent document
    std::size_t char_end = 0;
};

struct ChunkerConfig {
    std::size_t chunk_size = 512;
    std::size_t overlap = 20;
    std::vector<std::string> separators = {"\n\n", "\n", ". ", " ", ""};

    void validate() const {
        if (chunk_size < 1) throw ConfigError("chunker.chunk_size must be >= 1");
        if (overlap >= chunk_size)
            throw ConfigError("chunker.overlap must be < chunk_size");
    }
};

namespace detail {

using ScalarRange = std::pair<std::size_t, std::size_t>; // [start, end) in scalars

inline constexpr std::size_t npos = static_cast<std::size_t>(-1);

// Find the first occurrence of `sep` inside scalars [lo, hi) that starts and
// ends on scalar boundaries. Returns the scalar index of the match.
inline std::size_t find_separator(std::string_view bytes,
                                  const std::vector<std::size_t>& starts,
                                  std::size_t lo, std::size_t hi,
                                  const std::string& sep) {
    std::size_t from = starts[lo];
    const std::size_t limit = starts[hi];
    while (from + sep.size() <= limit) {
        std::size_t b = bytes.find(sep, from);
        if (b == std::string_view::npos || b + sep.size() > limit) return npos;
        auto it = std::lower_bound(starts.begin(), starts.end(), b);
        if (*it == b &&
            std::binary_search(starts.begin(), starts.end(), b + sep.size())) {
            return static_cast<std::size_t>(it - starts.begin());
        }
        from = b + 1;
    }
    return npos;
}

inline void split_bodies(std::string_view bytes,
                         const std::vector<std::size_t>& starts,
                         std::size_t lo, std::size_t hi,
                         std::span<const std::string> separators,
                         std::size_t chunk_size,
                         std::vector<ScalarRange>& out) {
    if (hi <= lo) return;
    if (hi - lo <= chunk_size) {
        out.emplace_back(lo, hi);
        return;
    }

    std::size_t chosen = separators.size();
    for (std::size_t i = 0; i < separators.size(); ++i) {
        if (separators[i].empty() ||
            find_separator(bytes, starts, lo, hi, separators[i]) != npos) {
            chosen = i;
            break;
        }
    }
    if (chosen == separators.size() || separators[chosen].empty()) {
        // No usable separator left: hard split by scalar count.
        for (std::size_t p = lo; p < hi; p += chunk_size)
            out.emplace_back(p, std::min(p + chunk_size, hi));
        return;
    }

    const std::string& sep = separators[chosen];
    const std::size_t sep_len = utf8::scalar_count(sep);
    auto rest = separators.subspan(chosen + 1);

    // Split after each separator occurrence so reconstruction stays exact.
    std::vector<ScalarRange> fragments;
    std::size_t cur = lo;
    while (cur < hi) {
        std::size_t m = find_separator(bytes, starts, cur, hi, sep);
        if (m == npos) {
            fragments.emplace_back(cur, hi);
            break;
        }
        fragments.emplace_back(cur, m + sep_len);
        cur = m + sep_len;
    }

    ScalarRange acc{0, 0};
    bool pending = false;
    auto flush = [&] {
        if (pending) out.push_back(acc);
        pending = false;
    };
    for (const auto& frag : fragments) {
        const std::size_t frag_len = frag.second - frag.first;
        if (frag_len > chunk_size) {
            flush();
            split_bodies(bytes, starts, frag.first, frag.second, rest, chunk_size, out);
        } else if (!pending) {
            acc = frag;
            pending = true;
        } else if ((acc.second - acc.first) + frag_len <= chunk_size) {
            acc.second = frag.second;
        } else {
            flush();
            acc = frag;
            pending = true;
        }
    }
    flush();
}

inline std::string make_chunk_id(const std::string& doc_id, std::size_t ordinal) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04zu", ordinal);
    return doc_id + "#" + buf;
}

} // namespace detail

inline std::vector<Chunk> chunk_document(const SourceDocument& doc,
                                         const ChunkerConfig& cfg) {
    cfg.validate();
    if (doc.text.empty()) return {};

    const std::vector<std::size_t> starts = utf8::scalar_starts(doc.text);
    const std::size_t n = starts.size() - 1;

    std::vector<detail::ScalarRange> bodies;
    detail::split_bodies(doc.text, starts, 0, n, cfg.separators, cfg.chunk_size,
                         bodies);

    std::vector<Chunk> chunks;
    chunks.reserve(bodies.size());
    std::size_t prev_chunk_len = 0;
    for (std::size_t i = 0; i < bodies.size(); ++i) {
        const auto [body_start, body_end] = bodies[i];
        std::size_t overlap = 0;
        if (i > 0 && cfg.overlap > 0) {
            overlap = std::min(cfg.overlap, prev_chunk_len);
            if ((body_end - body_start) + overlap > cfg.chunk_size) overlap = 0;
        }
        Chunk c;
        c.doc_id = doc.doc_id;
        c.chunk_id = detail::make_chunk_id(doc.doc_id, i);
        c.char_start = body_start - overlap;
        c.char_end = body_end;
        c.text = doc.text.substr(starts[c.char_start],
                                 starts[c.char_end] - starts[c.char_start]);
        prev_chunk_len = c.char_end - c.char_start;
        chunks.push_back(std::move(c));
    }
    return chunks;
}

// -------------------------------------------------------------------------
// Corpus loading

namespace detail {

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read file: " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline CorpusLoad load_text_dir(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir))
        throw IoError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    CorpusLoad load;
    for (const auto& f : files) {
        std::string text = read_file(f);
        if (text.empty()) {
            ++load.skipped_empty;
            continue;
        }
        SourceDocument doc;
        doc.doc_id = f.filename().string();
        doc.text = std::move(text);
        doc.metadata["source"] = f.string();
        load.documents.push_back(std::move(doc));
    }
    return load;
}

inline CorpusLoad load_jsonl_corpus(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot read file: " + file.string());

    CorpusLoad load;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw RecordError(std::string("malformed JSONL record: ") + e.what(),
                              lineno);
        }
        if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_string() ||
            !rec.contains("description") || !rec["description"].is_string()) {
            throw RecordError("record must have string fields \"id\" and "
                              "\"description\"", lineno);
        }
        SourceDocument doc;
        doc.doc_id = rec["id"].get<std::string>();
        doc.text = rec["description"].get<std::string>();
        if (!seen_ids.insert(doc.doc_id).second)
            throw RecordError("duplicate document id: " + doc.doc_id, lineno);
        if (doc.text.empty()) {
            ++load.skipped_empty;
            continue;
        }
        if (rec.contains("metadata")) {
            if (!rec["metadata"].is_object())
                throw RecordError("\"metadata\" must be an object", lineno);
            for (const auto& [k, v] : rec["metadata"].items())
                doc.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
        }
        load.documents.push_back(std::move(doc));
    }
    return load;
}

} // namespace detail

inline CorpusLoad load_corpus(const std::filesystem::path& path,
                              CorpusFormat format) {
    if (!std::filesystem::exists(path))
        throw IoError("corpus path does not exist: " + path.string());
    switch (format) {
        case CorpusFormat::jsonl:
            return detail::load_jsonl_corpus(path);
        case CorpusFormat::plain_text_dir:
        case CorpusFormat::pdf_extracted_text:
            // pdf_extracted_text expects pre-extracted plain text files.
            return detail::load_text_dir(path);
    }
    throw ConfigError("unhandled corpus format");
}

// -------------------------------------------------------------------------
// Chunk store: the id-addressable output of ingestion, persisted as JSONL.

class ChunkStore {
public:
    ChunkStore() = default;
    explicit ChunkStore(std::vector<Chunk> chunks) : chunks_(std::move(chunks)) {
        for (std::size_t i = 0; i < chunks_.size(); ++i) {
            if (!by_id_.emplace(chunks_[i].chunk_id, i).second)
                throw ContractError("duplicate chunk_id: " + chunks_[i].chunk_id);
        }
    }

    const std::vector<Chunk>& chunks() const { return chunks_; }
    std::size_t size() const { return chunks_.size(); }
    bool empty() const { return chunks_.empty(); }

    const Chunk* find(const std::string& chunk_id) const {
        auto it = by_id_.find(chunk_id);
        return it == by_id_.end() ? nullptr : &chunks_[it->second];
    }

    const Chunk& at(const std::string& chunk_id) const {
        const Chunk* c = find(chunk_id);
        if (!c) throw LookupError("unknown chunk_id: " + chunk_id);
        return *c;
    }

    void save_jsonl(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write file: " + path.string());
        for (const auto& c : chunks_) {
            nlohmann::json rec = {{"chunk_id", c.chunk_id},
                                  {"doc_id", c.doc_id},
                                  {"text", c.text},
                                  {"char_start", c.char_start},
                                  {"char_end", c.char_end}};
            out << rec.dump() << '\n';
        }
        if (!out) throw IoError("write failed: " + path.string());
    }

    static ChunkStore load_jsonl(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot read chunk store: " + path.string());
        std::vector<Chunk> chunks;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            nlohmann::json rec;
            try {
                rec = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw RecordError(std::string("malformed chunk record: ") + e.what(),
                                  lineno);
            }
            try {
                Chunk c;
                c.chunk_id = rec.at("chunk_id").get<std::string>();
                c.doc_id = rec.at("doc_id").get<std::string>();
                c.text = rec.at("text").get<std::string>();
                c.char_start = rec.at("char_start").get<std::size_t>();
                c.char_end = rec.at("char_end").get<std::size_t>();
                chunks.push_back(std::move(c));
            } catch (const nlohmann::json::exception& e) {
                throw RecordError(std::string("bad chunk record: ") + e.what(),
                                  lineno);
            }
        }
        return ChunkStore(std::move(chunks));
    }

private:
    std::vector<Chunk> chunks_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

inline ChunkStore chunk_corpus(const std::vector<SourceDocument>& docs,
                               const ChunkerConfig& cfg) {
    std::vector<Chunk> all;
    for (const auto& doc : docs) {
        auto chunks = chunk_document(doc, cfg);
        std::move(chunks.begin(), chunks.end(), std::back_inserter(all));
    }
    return ChunkStore(std::move(all));
}

} // namespace ctirag
