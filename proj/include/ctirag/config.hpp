#pragma once
// Application configuration: one JSON document with nested sections, parsed
// strictly. Unknown keys are errors, not warnings, so a typo in "alpha" or a
// k value cannot silently fall back to a default and invalidate a run.

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctirag/corpus.hpp"
#include "ctirag/embed.hpp"
#include "ctirag/errors.hpp"
#include "ctirag/eval.hpp"
#include "ctirag/fusion.hpp"
#include "ctirag/generation.hpp"
#include "ctirag/sparse.hpp"

namespace ctirag {

namespace detail {

class StrictSection {
public:
    StrictSection(const nlohmann::json& j, std::string name)
        : obj_(j), name_(std::move(name)) {
        if (!obj_.is_object())
            throw ConfigError("config section \"" + name_ + "\" must be an object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        if (!obj_.contains(key)) return;
        consumed_.insert(key);
        try {
            out = obj_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError("config key \"" + name_ + "." + key +
                              "\" has the wrong type");
        }
    }

    const nlohmann::json* child(const char* key) {
        if (!obj_.contains(key)) return nullptr;
        consumed_.insert(key);
        return &obj_.at(key);
    }

    void finish() const {
        for (const auto& [key, value] : obj_.items()) {
            if (!consumed_.count(key))
                throw ConfigError("unknown config key: " + name_ + "." + key);
        }
    }

private:
    const nlohmann::json& obj_;
    std::string name_;
    std::set<std::string> consumed_;
};

} // namespace detail

struct AppPaths {
    std::string corpus;
    CorpusFormat corpus_format = CorpusFormat::jsonl;
    std::string chunk_store = "chunks.jsonl";
    std::string sparse_index = "sparse_index.json";
    std::string dense_index = "dense_index.json";
    std::string benchmark;
    std::string contexts; // preformatted qid -> context JSONL
    std::string report_dir = ".";
};

struct EvalOptions {
    int iterations = 10;
    std::string mock_rule = "evidence_oracle";
    std::vector<std::string> settings = {"hybrid_regex"};
};

struct AppConfig {
    ChunkerConfig chunker;
    BM25Params bm25;
    EmbedderSpec embedder;
    FusionConfig fusion;
    GenerationParams generation;
    PromptTemplate prompt;
    AppPaths paths;
    EvalOptions eval;

    void validate() const {
        chunker.validate();
        bm25.validate();
        embedder.validate();
        fusion.validate();
        generation.validate();
        if (eval.iterations < 1)
            throw ConfigError("eval.iterations must be >= 1");
        for (const auto& s : eval.settings) setting_from_string(s);
    }

    static AppConfig from_json(const nlohmann::json& root) {
        AppConfig cfg;
        detail::StrictSection top(root, "(root)");

        if (const auto* j = top.child("chunker")) {
            detail::StrictSection s(*j, "chunker");
            s.get("chunk_size", cfg.chunker.chunk_size);
            s.get("overlap", cfg.chunker.overlap);
            s.get("separators", cfg.chunker.separators);
            s.finish();
        }
        if (const auto* j = top.child("bm25")) {
            detail::StrictSection s(*j, "bm25");
            s.get("k1", cfg.bm25.k1);
            s.get("b", cfg.bm25.b);
            s.finish();
        }
        if (const auto* j = top.child("embedder")) {
            detail::StrictSection s(*j, "embedder");
            std::string kind = "deterministic_test";
            s.get("kind", kind);
            if (kind == "deterministic_test") {
                cfg.embedder.kind = EmbedderSpec::Kind::deterministic_test;
            } else if (kind == "http_service") {
                cfg.embedder.kind = EmbedderSpec::Kind::http_service;
            } else {
                throw ConfigError("unknown embedder.kind: " + kind);
            }
            s.get("dim", cfg.embedder.dim);
            s.get("endpoint", cfg.embedder.endpoint);
            s.get("model_name", cfg.embedder.model_name);
            s.finish();
        }
        if (const auto* j = top.child("fusion")) {
            detail::StrictSection s(*j, "fusion");
            s.get("alpha", cfg.fusion.alpha);
            s.get("k_sparse", cfg.fusion.k_sparse);
            s.get("k_dense", cfg.fusion.k_dense);
            s.get("k_final", cfg.fusion.k_final);
            s.get("regex_boost_enabled", cfg.fusion.regex_boost_enabled);
            s.get("boost_value", cfg.fusion.boost_value);
            s.finish();
        }
        if (const auto* j = top.child("generation")) {
            detail::StrictSection s(*j, "generation");
            s.get("temperature", cfg.generation.temperature);
            s.get("max_tokens", cfg.generation.max_tokens);
            s.get("model_name", cfg.generation.model_name);
            s.get("endpoint", cfg.generation.endpoint);
            s.get("mock_mode", cfg.generation.mock_mode);
            s.get("max_retries", cfg.generation.max_retries);
            s.get("initial_backoff_ms", cfg.generation.initial_backoff_ms);
            s.finish();
        }
        if (const auto* j = top.child("prompt")) {
            detail::StrictSection s(*j, "prompt");
            s.get("preamble", cfg.prompt.preamble);
            s.get("context_header", cfg.prompt.context_header);
            s.get("question_header", cfg.prompt.question_header);
            s.get("answer_instruction", cfg.prompt.answer_instruction);
            s.finish();
        }
        if (const auto* j = top.child("paths")) {
            detail::StrictSection s(*j, "paths");
            s.get("corpus", cfg.paths.corpus);
            std::string fmt;
            s.get("corpus_format", fmt);
            if (!fmt.empty()) cfg.paths.corpus_format = corpus_format_from_string(fmt);
            s.get("chunk_store", cfg.paths.chunk_store);
            s.get("sparse_index", cfg.paths.sparse_index);
            s.get("dense_index", cfg.paths.dense_index);
            s.get("benchmark", cfg.paths.benchmark);
            s.get("contexts", cfg.paths.contexts);
            s.get("report_dir", cfg.paths.report_dir);
            s.finish();
        }
        if (const auto* j = top.child("eval")) {
            detail::StrictSection s(*j, "eval");
            s.get("iterations", cfg.eval.iterations);
            s.get("mock_rule", cfg.eval.mock_rule);
            s.get("settings", cfg.eval.settings);
            s.finish();
        }
        top.finish();
        cfg.validate();
        return cfg;
    }

    static AppConfig load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot read config: " + path.string());
        nlohmann::json root;
        try {
            in >> root;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config parse error in " + path.string() + ": " +
                              e.what());
        }
        return from_json(root);
    }

    nlohmann::json to_json() const {
        const char* fmt = paths.corpus_format == CorpusFormat::jsonl
                              ? "jsonl"
                              : (paths.corpus_format == CorpusFormat::plain_text_dir
                                     ? "plain_text_dir"
                                     : "pdf_extracted_text");
        return {
            {"chunker",
             {{"chunk_size", chunker.chunk_size},
              {"overlap", chunker.overlap},
              {"separators", chunker.separators}}},
            {"bm25", {{"k1", bm25.k1}, {"b", bm25.b}}},
            {"embedder",
             {{"kind", embedder.kind == EmbedderSpec::Kind::deterministic_test
                           ? "deterministic_test"
                           : "http_service"},
              {"dim", embedder.dim},
              {"endpoint", embedder.endpoint},
              {"model_name", embedder.model_name}}},
            {"fusion",
             {{"alpha", fusion.alpha},
              {"k_sparse", fusion.k_sparse},
              {"k_dense", fusion.k_dense},
              {"k_final", fusion.k_final},
              {"regex_boost_enabled", fusion.regex_boost_enabled},
              {"boost_value", fusion.boost_value}}},
            {"generation",
             {{"temperature", generation.temperature},
              {"max_tokens", generation.max_tokens},
              {"model_name", generation.model_name},
              {"endpoint", generation.endpoint},
              {"mock_mode", generation.mock_mode},
              {"max_retries", generation.max_retries},
              {"initial_backoff_ms", generation.initial_backoff_ms}}},
            {"prompt",
             {{"preamble", prompt.preamble},
              {"context_header", prompt.context_header},
              {"question_header", prompt.question_header},
              {"answer_instruction", prompt.answer_instruction}}},
            {"paths",
             {{"corpus", paths.corpus},
              {"corpus_format", fmt},
              {"chunk_store", paths.chunk_store},
              {"sparse_index", paths.sparse_index},
              {"dense_index", paths.dense_index},
              {"benchmark", paths.benchmark},
              {"contexts", paths.contexts},
              {"report_dir", paths.report_dir}}},
            {"eval",
             {{"iterations", eval.iterations},
              {"mock_rule", eval.mock_rule},
              {"settings", eval.settings}}}};
    }
};

} // namespace ctirag
