#pragma once
// BM25 inverted index. Scores a chunk D against a query Q as
//
//   sum over q in Q of IDF(q) * tf(q,D)*(k1+1) / (tf(q,D) + k1*(1 - b + b*|D|/avgdl))
//
// with the smoothed IDF(q) = ln(1 + (N - df(q) + 0.5)/(df(q) + 0.5)), which is
// strictly positive, so every chunk containing at least one query term scores
// above zero and no other chunk is ever returned.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ctirag/corpus.hpp"
#include "ctirag/errors.hpp"
#include "ctirag/tokenize.hpp"

namespace ctirag {

struct BM25Params {
    double k1 = 1.5;
    double b = 0.75;

    void validate() const {
        if (!(k1 > 0)) throw ConfigError("bm25.k1 must be > 0");
        if (!(b >= 0 && b <= 1)) throw ConfigError("bm25.b must be in [0,1]");
    }
};

class SparseIndex {
public:
    struct Posting {
        std::string chunk_id;
        std::size_t tf = 0;
    };

    SparseIndex() = default;

    static SparseIndex build(const std::vector<Chunk>& chunks,
                             BM25Params params = {}) {
        params.validate();
        SparseIndex index;
        index.params_ = params;
        std::size_t total_len = 0;
        for (const auto& chunk : chunks) {
            TokenList tokens = tokenize(chunk.text);
            if (!index.doc_lengths_.emplace(chunk.chunk_id, tokens.size()).second)
                throw ContractError("duplicate chunk_id: " + chunk.chunk_id);
            total_len += tokens.size();
            std::map<std::string, std::size_t> counts;
            for (const auto& t : tokens) ++counts[t];
            for (const auto& [term, tf] : counts)
                index.postings_[term].push_back({chunk.chunk_id, tf});
        }
        index.n_docs_ = chunks.size();
        index.avgdl_ = index.n_docs_ > 0
                           ? static_cast<double>(total_len) / index.n_docs_
                           : 0.0;
        return index;
    }

    std::size_t n_docs() const { return n_docs_; }
    double avgdl() const { return avgdl_; }
    const BM25Params& params() const { return params_; }

    std::size_t doc_length(const std::string& chunk_id) const {
        auto it = doc_lengths_.find(chunk_id);
        if (it == doc_lengths_.end())
            throw LookupError("unknown chunk_id: " + chunk_id);
        return it->second;
    }

    std::size_t doc_frequency(const std::string& term) const {
        auto it = postings_.find(term);
        return it == postings_.end() ? 0 : it->second.size();
    }

    double idf(std::size_t df) const {
        const double n = static_cast<double>(n_docs_);
        const double d = static_cast<double>(df);
        return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
    }

    // BM25 score of one chunk; query terms absent from the corpus or the
    // chunk contribute nothing. Duplicate query terms count once each.
    double score(const TokenList& query, const std::string& chunk_id) const {
        const double dl = static_cast<double>(doc_length(chunk_id));
        double total = 0.0;
        for (const auto& term : query) {
            auto it = postings_.find(term);
            if (it == postings_.end()) continue;
            std::size_t tf = 0;
            for (const auto& p : it->second) {
                if (p.chunk_id == chunk_id) {
                    tf = p.tf;
                    break;
                }
            }
            if (tf == 0) continue;
            total += term_contribution(it->second.size(), tf, dl);
        }
        return total;
    }

    // Top-k chunks by raw BM25 score, descending, ties by ascending chunk_id.
    // Only chunks containing at least one query term appear.
    std::vector<std::pair<std::string, double>> top_k(const TokenList& query,
                                                      std::size_t k) const {
        if (k < 1) throw ContractError("k_sparse must be >= 1");
        std::map<std::string, double> acc;
        for (const auto& term : query) {
            auto it = postings_.find(term);
            if (it == postings_.end()) continue;
            for (const auto& p : it->second) {
                const double dl =
                    static_cast<double>(doc_lengths_.at(p.chunk_id));
                acc[p.chunk_id] += term_contribution(it->second.size(), p.tf, dl);
            }
        }
        std::vector<std::pair<std::string, double>> ranked(acc.begin(), acc.end());
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        if (ranked.size() > k) ranked.resize(k);
        return ranked;
    }

    // ---------------------------------------------------------------------
    // Persistence (versioned JSON)

    static constexpr int kFormatVersion = 1;

    nlohmann::json to_json() const {
        nlohmann::json doc_lengths = nlohmann::json::object();
        for (const auto& [id, len] : doc_lengths_) doc_lengths[id] = len;
        nlohmann::json postings = nlohmann::json::object();
        for (const auto& [term, plist] : postings_) {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& p : plist)
                arr.push_back(nlohmann::json::array({p.chunk_id, p.tf}));
            postings[term] = std::move(arr);
        }
        return {{"version", kFormatVersion},
                {"params", {{"k1", params_.k1}, {"b", params_.b}}},
                {"n_docs", n_docs_},
                {"avgdl", avgdl_},
                {"doc_lengths", std::move(doc_lengths)},
                {"postings", std::move(postings)}};
    }

    static SparseIndex from_json(const nlohmann::json& j) {
        if (!j.is_object() || !j.contains("version") ||
            !j["version"].is_number_integer() ||
            j["version"].get<int>() != kFormatVersion) {
            throw ConfigError("unsupported sparse index version");
        }
        SparseIndex index;
        try {
            index.params_.k1 = j.at("params").at("k1").get<double>();
            index.params_.b = j.at("params").at("b").get<double>();
            index.n_docs_ = j.at("n_docs").get<std::size_t>();
            index.avgdl_ = j.at("avgdl").get<double>();
            for (const auto& [id, len] : j.at("doc_lengths").items())
                index.doc_lengths_[id] = len.get<std::size_t>();
            for (const auto& [term, arr] : j.at("postings").items()) {
                auto& plist = index.postings_[term];
                for (const auto& entry : arr) {
                    Posting p;
                    p.chunk_id = entry.at(0).get<std::string>();
                    p.tf = entry.at(1).get<std::size_t>();
                    if (!index.doc_lengths_.count(p.chunk_id))
                        throw ConfigError("posting references unknown chunk_id: " +
                                          p.chunk_id);
                    plist.push_back(std::move(p));
                }
            }
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("bad sparse index file: ") + e.what());
        }
        index.params_.validate();
        return index;
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write file: " + path.string());
        out << to_json().dump() << '\n';
        if (!out) throw IoError("write failed: " + path.string());
    }

    static SparseIndex load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot read sparse index: " + path.string());
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("bad sparse index file: ") + e.what());
        }
        return from_json(j);
    }

private:
    double term_contribution(std::size_t df, std::size_t tf, double dl) const {
        const double f = static_cast<double>(tf);
        const double norm =
            1.0 - params_.b + params_.b * (avgdl_ > 0 ? dl / avgdl_ : 0.0);
        return idf(df) * f * (params_.k1 + 1.0) / (f + params_.k1 * norm);
    }

    std::map<std::string, std::vector<Posting>> postings_;
    std::map<std::string, std::size_t> doc_lengths_;
    double avgdl_ = 0.0;
    std::size_t n_docs_ = 0;
    BM25Params params_;
};

inline SparseIndex build_sparse_index(const std::vector<Chunk>& chunks,
                                      BM25Params params = {}) {
    return SparseIndex::build(chunks, params);
}

} // namespace ctirag
