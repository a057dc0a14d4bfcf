#pragma once
// Dense vector index with exact brute-force cosine top-k. Scores are mapped
// from cosine similarity into [0,1] via (1 + cos)/2 so the fusion stage can
// rely on bounded dense scores regardless of the embedder.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ctirag/errors.hpp"

namespace ctirag {

using EmbeddingVector = std::vector<double>;

inline double cosine_similarity(const EmbeddingVector& a,
                                const EmbeddingVector& b) {
    if (a.size() != b.size())
        throw ContractError("cosine_similarity: dimension mismatch");
    if (a.empty()) throw ContractError("cosine_similarity: empty vectors");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0)
        throw ContractError("cosine_similarity undefined for the zero vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

class DenseIndex {
public:
    explicit DenseIndex(std::size_t dim) : dim_(dim) {
        if (dim < 1) throw ContractError("dense index dim must be >= 1");
    }

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return ids_.size(); }
    bool empty() const { return ids_.empty(); }

    void add(std::string chunk_id, EmbeddingVector vec) {
        if (vec.size() != dim_)
            throw ContractError("embedding dim " + std::to_string(vec.size()) +
                                " does not match index dim " +
                                std::to_string(dim_));
        for (double v : vec) {
            if (!std::isfinite(v))
                throw ContractError("non-finite embedding value for chunk " +
                                    chunk_id);
        }
        if (by_id_.count(chunk_id))
            throw ContractError("duplicate chunk_id: " + chunk_id);
        by_id_.emplace(chunk_id, ids_.size());
        ids_.push_back(std::move(chunk_id));
        vectors_.push_back(std::move(vec));
    }

    const EmbeddingVector* find(const std::string& chunk_id) const {
        auto it = by_id_.find(chunk_id);
        return it == by_id_.end() ? nullptr : &vectors_[it->second];
    }

    // Exact top-k by dense score (1 + cos)/2, descending, ties by ascending
    // chunk_id. Exhaustive scan: every stored vector is scored.
    std::vector<std::pair<std::string, double>> top_k(
        const EmbeddingVector& query, std::size_t k) const {
        if (k < 1) throw ContractError("k_dense must be >= 1");
        if (empty()) return {};
        if (query.size() != dim_)
            throw ContractError("query dim " + std::to_string(query.size()) +
                                " does not match index dim " +
                                std::to_string(dim_));
        std::vector<std::pair<std::string, double>> scored;
        scored.reserve(ids_.size());
        for (std::size_t i = 0; i < ids_.size(); ++i) {
            const double cos = cosine_similarity(query, vectors_[i]);
            scored.emplace_back(ids_[i], std::clamp((1.0 + cos) / 2.0, 0.0, 1.0));
        }
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        if (scored.size() > k) scored.resize(k);
        return scored;
    }

    // ---------------------------------------------------------------------
    // Persistence (versioned JSON, row-major vector payload)

    static constexpr int kFormatVersion = 1;

    nlohmann::json to_json() const {
        nlohmann::json flat = nlohmann::json::array();
        for (const auto& vec : vectors_)
            for (double v : vec) flat.push_back(v);
        return {{"version", kFormatVersion},
                {"dim", dim_},
                {"chunk_ids", ids_},
                {"vectors", std::move(flat)}};
    }

    static DenseIndex from_json(const nlohmann::json& j) {
        if (!j.is_object() || !j.contains("version") ||
            !j["version"].is_number_integer() ||
            j["version"].get<int>() != kFormatVersion) {
            throw ConfigError("unsupported dense index version");
        }
        try {
            DenseIndex index(j.at("dim").get<std::size_t>());
            const auto& ids = j.at("chunk_ids");
            const auto& flat = j.at("vectors");
            if (flat.size() != ids.size() * index.dim_)
                throw ConfigError("dense index payload size mismatch");
            std::size_t off = 0;
            for (const auto& id : ids) {
                EmbeddingVector vec(index.dim_);
                for (std::size_t d = 0; d < index.dim_; ++d)
                    vec[d] = flat[off + d].get<double>();
                off += index.dim_;
                index.add(id.get<std::string>(), std::move(vec));
            }
            return index;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("bad dense index file: ") + e.what());
        }
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write file: " + path.string());
        out << to_json().dump() << '\n';
        if (!out) throw IoError("write failed: " + path.string());
    }

    static DenseIndex load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot read dense index: " + path.string());
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("bad dense index file: ") + e.what());
        }
        return from_json(j);
    }

private:
    std::size_t dim_;
    std::vector<std::string> ids_;
    std::vector<EmbeddingVector> vectors_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

} // namespace ctirag
