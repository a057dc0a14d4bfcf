#pragma once
// Hybrid score fusion. Sparse candidates are min-max normalized over the
// sparse list only (BM25 scores are unbounded; dense scores already lie in
// [0,1]), the candidate union is deduplicated by chunk_id with a missing
// component scoring 0, and each candidate receives
//
//   fused = alpha * sparse_norm + (1 - alpha) * dense + boost
//
// where boost is +boost_value (once per chunk) when the query names a CVE id
// that appears verbatim in the chunk text. Ordering is by descending fused
// score, then ascending chunk_id. Truncation to k_final happens only after
// boosting so a boost can rescue a low-ranked candidate.

#include <algorithm>
#include <functional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ctirag/corpus.hpp"
#include "ctirag/dense.hpp"
#include "ctirag/embed.hpp"
#include "ctirag/errors.hpp"
#include "ctirag/sparse.hpp"

namespace ctirag {

struct FusionConfig {
    double alpha = 0.5;
    std::size_t k_sparse = 10;
    std::size_t k_dense = 10;
    std::size_t k_final = 3;
    bool regex_boost_enabled = true;
    double boost_value = 1.0;

    void validate() const {
        if (!(alpha >= 0.0 && alpha <= 1.0))
            throw ConfigError("fusion.alpha must be in [0,1]");
        if (k_sparse < 1 || k_dense < 1 || k_final < 1)
            throw ConfigError("fusion k values must be >= 1");
        if (!(boost_value >= 0.0))
            throw ConfigError("fusion.boost_value must be >= 0");
    }
};

struct ScoredChunk {
    std::string chunk_id;
    double sparse_score_norm = 0.0; // 0 if absent from sparse candidates
    double dense_score = 0.0;       // 0 if absent from dense candidates
    double boost = 0.0;
    double fused_score = 0.0;
};

// Maps each score to (s - min)/(max - min). A degenerate list (max == min)
// maps every element to 1.0: all candidates are equally the best available.
inline std::vector<double> min_max_normalize(const std::vector<double>& scores) {
    if (scores.empty())
        throw ContractError("min_max_normalize: empty score list");
    const auto [min_it, max_it] = std::minmax_element(scores.begin(), scores.end());
    const double lo = *min_it, hi = *max_it;
    std::vector<double> out(scores.size());
    if (hi == lo) {
        std::fill(out.begin(), out.end(), 1.0);
        return out;
    }
    for (std::size_t i = 0; i < scores.size(); ++i)
        out[i] = (scores[i] - lo) / (hi - lo);
    return out;
}

// All non-overlapping CVE identifiers, case-sensitive, in order of
// appearance, duplicates preserved. The trailing digit guard keeps a 7+
// digit sequence from matching as its 6-digit prefix.
inline std::vector<std::string> extract_cve_ids(std::string_view text) {
    static const std::regex pattern(R"(CVE-[0-9]{4}-[0-9]{4,6}(?![0-9]))");
    std::vector<std::string> ids;
    auto begin = std::cregex_iterator(text.data(), text.data() + text.size(),
                                      pattern);
    for (auto it = begin; it != std::cregex_iterator(); ++it)
        ids.push_back(it->str());
    return ids;
}

namespace detail {

inline void sort_scored(std::vector<ScoredChunk>& chunks) {
    std::sort(chunks.begin(), chunks.end(),
              [](const ScoredChunk& a, const ScoredChunk& b) {
                  if (a.fused_score != b.fused_score)
                      return a.fused_score > b.fused_score;
                  return a.chunk_id < b.chunk_id;
              });
}

} // namespace detail

inline std::vector<ScoredChunk> fuse(
    const std::vector<std::pair<std::string, double>>& sparse_candidates,
    const std::vector<std::pair<std::string, double>>& dense_candidates,
    const FusionConfig& cfg) {
    cfg.validate();

    std::vector<ScoredChunk> out;
    std::unordered_map<std::string, std::size_t> index;

    if (!sparse_candidates.empty()) {
        std::vector<double> raw(sparse_candidates.size());
        for (std::size_t i = 0; i < sparse_candidates.size(); ++i)
            raw[i] = sparse_candidates[i].second;
        const std::vector<double> norm = min_max_normalize(raw);
        for (std::size_t i = 0; i < sparse_candidates.size(); ++i) {
            if (!index.emplace(sparse_candidates[i].first, out.size()).second)
                throw ContractError("duplicate chunk_id in sparse candidates: " +
                                    sparse_candidates[i].first);
            ScoredChunk sc;
            sc.chunk_id = sparse_candidates[i].first;
            sc.sparse_score_norm = norm[i];
            out.push_back(std::move(sc));
        }
    }

    std::set<std::string> dense_seen;
    for (const auto& [id, score] : dense_candidates) {
        if (!dense_seen.insert(id).second)
            throw ContractError("duplicate chunk_id in dense candidates: " + id);
        auto [it, inserted] = index.emplace(id, out.size());
        if (inserted) {
            ScoredChunk sc;
            sc.chunk_id = id;
            out.push_back(std::move(sc));
        }
        out[it->second].dense_score = score;
    }

    for (auto& sc : out) {
        sc.fused_score = cfg.alpha * sc.sparse_score_norm +
                         (1.0 - cfg.alpha) * sc.dense_score;
    }
    detail::sort_scored(out);
    return out;
}

// Resolves a candidate chunk_id to its text; must cover every candidate.
using ChunkTextLookup = std::function<std::string_view(const std::string&)>;

inline std::vector<ScoredChunk> apply_regex_boost(
    const std::string& query, std::vector<ScoredChunk> candidates,
    const ChunkTextLookup& chunk_texts, const FusionConfig& cfg) {
    if (!cfg.regex_boost_enabled) return candidates;
    const std::vector<std::string> query_ids = extract_cve_ids(query);
    if (query_ids.empty()) return candidates;

    for (auto& sc : candidates) {
        const std::string_view text = chunk_texts(sc.chunk_id);
        bool matched = false;
        for (const auto& id : query_ids) {
            if (text.find(id) != std::string_view::npos) {
                matched = true;
                break;
            }
        }
        if (matched) sc.boost = cfg.boost_value; // once per chunk, not per id
        sc.fused_score = cfg.alpha * sc.sparse_score_norm +
                         (1.0 - cfg.alpha) * sc.dense_score + sc.boost;
    }
    detail::sort_scored(candidates);
    return candidates;
}

struct RetrievalHit {
    Chunk chunk;
    ScoredChunk scores;
};

// The full hybrid retrieval pipeline: tokenize -> sparse top-k, embed ->
// dense top-k, fuse, boost, truncate to k_final.
inline std::vector<RetrievalHit> retrieve_hybrid(const std::string& query,
                                                 const SparseIndex& sparse,
                                                 const DenseIndex& dense,
                                                 const Embedder& embedder,
                                                 const ChunkStore& store,
                                                 const FusionConfig& cfg) {
    cfg.validate();
    const TokenList tokens = tokenize(query);
    const auto sparse_candidates = sparse.top_k(tokens, cfg.k_sparse);
    const EmbeddingVector query_vec = embedder.embed(query);
    const auto dense_candidates = dense.top_k(query_vec, cfg.k_dense);

    std::vector<ScoredChunk> fused = fuse(sparse_candidates, dense_candidates, cfg);
    fused = apply_regex_boost(
        query, std::move(fused),
        [&store](const std::string& id) -> std::string_view {
            return store.at(id).text;
        },
        cfg);
    if (fused.size() > cfg.k_final) fused.resize(cfg.k_final);

    std::vector<RetrievalHit> hits;
    hits.reserve(fused.size());
    for (auto& sc : fused) {
        RetrievalHit hit;
        hit.chunk = store.at(sc.chunk_id);
        hit.scores = std::move(sc);
        hits.push_back(std::move(hit));
    }
    return hits;
}

} // namespace ctirag
