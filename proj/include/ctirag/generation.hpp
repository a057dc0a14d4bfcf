#pragma once
// Prompt assembly and answer generation. The live path posts the de-facto
// chat-completion JSON shape
//   {"model", "messages": [{"role": "user", "content": prompt}],
//    "temperature", "max_tokens"}
// and reads the first choice's message content, with bounded retries and
// exponential backoff on transient failures. LLM_API_KEY is sent as a bearer
// token when set. In mock mode the answer comes from a caller-supplied
// deterministic rule over the prompt, so the whole pipeline stays a pure
// function of its inputs.

#include <cctype>
#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "ctirag/corpus.hpp"
#include "ctirag/embed.hpp" // detail::split_url, detail::parse_retry_after
#include "ctirag/errors.hpp"

namespace ctirag {

struct GenerationParams {
    double temperature = 0.7; // ablation values of interest: 0.01, 1.0
    int max_tokens = 1;       // constrained single-token answer protocol
    std::string model_name;
    std::string endpoint;
    bool mock_mode = false;
    int max_retries = 3;
    int initial_backoff_ms = 500;

    void validate() const {
        if (!(temperature >= 0.0))
            throw ConfigError("generation.temperature must be >= 0");
        if (max_tokens < 1) throw ConfigError("generation.max_tokens must be >= 1");
        if (max_retries < 0) throw ConfigError("generation.max_retries must be >= 0");
        if (initial_backoff_ms < 0)
            throw ConfigError("generation.initial_backoff_ms must be >= 0");
    }
};

struct PromptTemplate {
    std::string preamble;
    std::string context_header = "Context:";
    std::string question_header = "Question: ";
    std::string answer_instruction = "Answer with a single letter.";
};

// Renders preamble, numbered "Document i:" context lines in retrieval order,
// the question, and the answer instruction. With no contexts the context
// section is omitted entirely (the no-retrieval setting).
inline std::string build_prompt(const std::string& question,
                                const std::vector<Chunk>& contexts,
                                const PromptTemplate& tpl) {
    std::string prompt;
    if (!tpl.preamble.empty()) {
        prompt += tpl.preamble;
        prompt += "\n\n";
    }
    if (!contexts.empty()) {
        prompt += tpl.context_header;
        prompt += '\n';
        for (std::size_t i = 0; i < contexts.size(); ++i) {
            prompt += "Document " + std::to_string(i + 1) + ": ";
            prompt += contexts[i].text;
            prompt += '\n';
        }
        prompt += '\n';
    }
    prompt += tpl.question_header;
    prompt += question;
    prompt += '\n';
    prompt += tpl.answer_instruction;
    return prompt;
}

struct AnswerSpace {
    enum class Kind { true_false, multiple_choice };
    Kind kind = Kind::true_false;
    std::vector<char> labels = {'T', 'F'};

    static AnswerSpace true_false() { return {Kind::true_false, {'T', 'F'}}; }

    static AnswerSpace multiple_choice(std::size_t n_options = 4) {
        if (n_options < 2 || n_options > 26)
            throw ContractError("multiple_choice needs 2..26 options");
        AnswerSpace space;
        space.kind = Kind::multiple_choice;
        space.labels.clear();
        for (std::size_t i = 0; i < n_options; ++i)
            space.labels.push_back(static_cast<char>('A' + i));
        return space;
    }

    bool contains(char label) const {
        for (char c : labels)
            if (c == label) return true;
        return false;
    }

    // Cyclic successor; handy for a deterministically wrong mock answer.
    char label_after(char label) const {
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == label) return labels[(i + 1) % labels.size()];
        throw ContractError("label not in answer space");
    }
};

// Trims down to the first alphabetic character, uppercases it, and accepts
// it when it is a label of the space. Failure is a value, scored as an
// incorrect answer by the harness, never an exception.
inline std::optional<char> parse_answer(std::string_view raw,
                                        const AnswerSpace& space) {
    for (char c : raw) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const char label =
                static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            if (space.contains(label)) return label;
            return std::nullopt;
        }
    }
    return std::nullopt;
}

class ChatCompletionClient {
public:
    explicit ChatCompletionClient(GenerationParams params)
        : params_(std::move(params)) {
        params_.validate();
        if (params_.endpoint.empty())
            throw ConfigError("generation.endpoint required for live mode");
        url_ = detail::split_url(params_.endpoint);
    }

    std::string complete(const std::string& prompt) const {
        nlohmann::json body = {
            {"model", params_.model_name},
            {"messages",
             nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
            {"temperature", params_.temperature},
            {"max_tokens", params_.max_tokens}};
        const std::string payload = body.dump();

        int backoff_ms = params_.initial_backoff_ms;
        for (int attempt = 0;; ++attempt) {
            std::optional<double> retry_after;
            std::string failure;
            try {
                return post_once(payload);
            } catch (const TransportError& e) {
                if (!e.retryable()) throw;
                retry_after = e.retry_after_s();
                failure = e.what();
            }
            if (attempt >= params_.max_retries) {
                throw TransportError("chat completion failed after " +
                                         std::to_string(attempt + 1) +
                                         " attempts: " + failure,
                                     std::nullopt, false);
            }
            auto wait = std::chrono::milliseconds(backoff_ms);
            if (retry_after) {
                auto hinted = std::chrono::milliseconds(
                    static_cast<long long>(*retry_after * 1000.0));
                wait = std::max(wait, hinted);
            }
            std::this_thread::sleep_for(wait);
            backoff_ms *= 2;
        }
    }

private:
    std::string post_once(const std::string& payload) const {
        httplib::Client client(url_.base);
        client.set_connection_timeout(10);
        client.set_read_timeout(120);
        httplib::Headers headers;
        if (const char* key = std::getenv("LLM_API_KEY"))
            headers.emplace("Authorization", std::string("Bearer ") + key);
        auto res = client.Post(url_.path, headers, payload, "application/json");
        if (!res) {
            throw TransportError("chat request failed: " +
                                 httplib::to_string(res.error()));
        }
        if (res->status != 200) {
            const bool retryable = res->status == 429 || res->status >= 500;
            throw TransportError("chat endpoint returned HTTP " +
                                     std::to_string(res->status),
                                 detail::parse_retry_after(*res), retryable);
        }
        nlohmann::json parsed;
        try {
            parsed = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw ContractError(std::string("bad chat response: ") + e.what());
        }
        try {
            std::string content =
                parsed.at("choices").at(0).at("message").at("content")
                    .get<std::string>();
            if (content.empty())
                throw ContractError("chat endpoint returned an empty response");
            return content;
        } catch (const nlohmann::json::exception& e) {
            throw ContractError(std::string("bad chat response shape: ") +
                                e.what());
        }
    }

    GenerationParams params_;
    detail::SplitUrl url_;
};

// Deterministic stand-in for the model in mock mode.
using MockRule = std::function<std::string(const std::string& prompt)>;

inline std::string generate_answer(const std::string& prompt,
                                   const GenerationParams& params,
                                   const MockRule& mock_rule = {}) {
    params.validate();
    if (params.mock_mode) {
        if (!mock_rule)
            throw ContractError("mock_mode requires a mock rule");
        return mock_rule(prompt);
    }
    return ChatCompletionClient(params).complete(prompt);
}

} // namespace ctirag
