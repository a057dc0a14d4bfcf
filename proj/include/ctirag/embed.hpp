#pragma once
// Embedder contract plus the two implementations: a deterministic hashed
// bag-of-tokens embedder for offline testing, and a client for any service
// speaking the common embeddings wire shape
//   POST endpoint  {"model": ..., "input": [text, ...]}
//   -> {"data": [{"embedding": [...]}, ...]}
// authenticated with a bearer token from EMBEDDINGS_API_KEY.

#include <cstdint>
#include <cstdlib>
#include <memory>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "ctirag/dense.hpp"
#include "ctirag/errors.hpp"
#include "ctirag/tokenize.hpp"

namespace ctirag {

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::size_t dim() const = 0;
    virtual EmbeddingVector embed(const std::string& text) const = 0;
    virtual std::vector<EmbeddingVector> embed_batch(
        const std::vector<std::string>& texts) const {
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(embed(t));
        return out;
    }
};

struct EmbedderSpec {
    enum class Kind { deterministic_test, http_service };
    Kind kind = Kind::deterministic_test;
    std::size_t dim = 256;
    std::string endpoint;   // http_service only
    std::string model_name; // http_service only

    void validate() const {
        if (dim < 1) throw ConfigError("embedder.dim must be >= 1");
        if (kind == Kind::http_service && endpoint.empty())
            throw ConfigError("embedder.endpoint required for http_service");
    }
};

// FNV-1a, fixed constants, so bucket assignment is identical on every
// platform and run.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::size_t token_bucket(std::string_view token, std::size_t dim) {
    return static_cast<std::size_t>(fnv1a64(token) % dim);
}

// Hashed bag-of-tokens embedder: each token occurrence adds 1 to its hash
// bucket and the result is L2-normalized. Texts sharing tokens land in
// shared buckets and score higher; texts with disjoint, collision-free
// bucket sets are exactly orthogonal. A text with no tokens maps to the
// first basis vector so every output has unit norm.
class DeterministicEmbedder final : public Embedder {
public:
    explicit DeterministicEmbedder(std::size_t dim) : dim_(dim) {
        if (dim < 1) throw ContractError("embedder dim must be >= 1");
    }

    std::size_t dim() const override { return dim_; }

    EmbeddingVector embed(const std::string& text) const override {
        EmbeddingVector vec(dim_, 0.0);
        double norm_sq = 0.0;
        for (const auto& token : tokenize(text)) {
            double& slot = vec[token_bucket(token, dim_)];
            norm_sq += 2.0 * slot + 1.0;
            slot += 1.0;
        }
        if (norm_sq == 0.0) {
            vec[0] = 1.0;
            return vec;
        }
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (double& v : vec) v *= inv;
        return vec;
    }

private:
    std::size_t dim_;
};

namespace detail {

struct SplitUrl {
    std::string base; // scheme://host[:port]
    std::string path;
};

inline SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("endpoint must be a full http(s) URL: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

inline std::optional<double> parse_retry_after(const httplib::Response& res) {
    if (!res.has_header("Retry-After")) return std::nullopt;
    try {
        return std::stod(res.get_header_value("Retry-After"));
    } catch (...) {
        return std::nullopt;
    }
}

} // namespace detail

class HttpEmbedder final : public Embedder {
public:
    explicit HttpEmbedder(EmbedderSpec spec, std::ptrdiff_t max_in_flight = 4)
        : spec_(std::move(spec)), in_flight_(max_in_flight) {
        spec_.validate();
        url_ = detail::split_url(spec_.endpoint);
    }

    std::size_t dim() const override { return spec_.dim; }

    EmbeddingVector embed(const std::string& text) const override {
        if (text.empty())
            throw ContractError("http embedder requires non-empty text");
        return embed_batch({text}).front();
    }

    std::vector<EmbeddingVector> embed_batch(
        const std::vector<std::string>& texts) const override {
        if (texts.empty()) return {};
        for (const auto& t : texts) {
            if (t.empty())
                throw ContractError("http embedder requires non-empty text");
        }
        nlohmann::json body = {{"model", spec_.model_name}, {"input", texts}};

        in_flight_.acquire();
        httplib::Client client(url_.base);
        client.set_connection_timeout(10);
        client.set_read_timeout(120);
        httplib::Headers headers;
        if (const char* key = std::getenv("EMBEDDINGS_API_KEY"))
            headers.emplace("Authorization", std::string("Bearer ") + key);
        auto res = client.Post(url_.path, headers, body.dump(), "application/json");
        in_flight_.release();

        if (!res) {
            throw TransportError("embedding request failed: " +
                                 httplib::to_string(res.error()));
        }
        if (res->status != 200) {
            const bool retryable = res->status == 429 || res->status >= 500;
            throw TransportError("embedding service returned HTTP " +
                                     std::to_string(res->status),
                                 detail::parse_retry_after(*res), retryable);
        }

        nlohmann::json parsed;
        try {
            parsed = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw ContractError(std::string("bad embedding response: ") + e.what());
        }
        if (!parsed.contains("data") || !parsed["data"].is_array() ||
            parsed["data"].size() != texts.size()) {
            throw ContractError("embedding response data count mismatch");
        }
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (const auto& item : parsed["data"]) {
            if (!item.contains("embedding") || !item["embedding"].is_array())
                throw ContractError("embedding response missing embedding array");
            EmbeddingVector vec = item["embedding"].get<EmbeddingVector>();
            if (vec.size() != spec_.dim) {
                throw ContractError("embedding dim " + std::to_string(vec.size()) +
                                    " does not match configured dim " +
                                    std::to_string(spec_.dim));
            }
            out.push_back(std::move(vec));
        }
        return out;
    }

private:
    EmbedderSpec spec_;
    detail::SplitUrl url_;
    mutable std::counting_semaphore<> in_flight_;
};

inline std::unique_ptr<Embedder> make_embedder(const EmbedderSpec& spec) {
    spec.validate();
    if (spec.kind == EmbedderSpec::Kind::deterministic_test)
        return std::make_unique<DeterministicEmbedder>(spec.dim);
    return std::make_unique<HttpEmbedder>(spec);
}

} // namespace ctirag
