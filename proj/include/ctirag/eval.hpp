#pragma once
// Benchmark harness. Runs a question file through one of the evaluation
// settings for a number of iterations and reports per-iteration accuracy
// with mean and population standard deviation. In mock mode the answerer is
// a deterministic rule (the evidence oracle answers correctly exactly when
// the question's gold evidence made it into the prompt), which makes
// reported accuracy equal retrieval recall@k_final.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ctirag/corpus.hpp"
#include "ctirag/embed.hpp"
#include "ctirag/errors.hpp"
#include "ctirag/fusion.hpp"
#include "ctirag/generation.hpp"
#include "ctirag/sparse.hpp"

namespace ctirag {

struct BenchmarkQuestion {
    std::string qid;
    std::string question;
    std::vector<std::string> options; // mcq option texts, may be empty
    AnswerSpace answer_space;
    char gold_label = 'T';
    std::optional<std::string> gold_evidence; // synthetic benchmarks only
};

// JSONL records: {"qid", "question", "type": "tf"|"mcq", "options"?,
// "answer", "evidence"?}. An mcq record without options defaults to four
// choices A-D.
inline std::vector<BenchmarkQuestion> load_benchmark(
    const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read benchmark: " + path.string());

    std::vector<BenchmarkQuestion> questions;
    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw RecordError(std::string("malformed benchmark record: ") +
                                  e.what(),
                              lineno);
        }
        BenchmarkQuestion q;
        try {
            q.qid = rec.at("qid").get<std::string>();
            q.question = rec.at("question").get<std::string>();
            const std::string type = rec.at("type").get<std::string>();
            if (type == "tf") {
                q.answer_space = AnswerSpace::true_false();
            } else if (type == "mcq") {
                std::size_t n = 4;
                if (rec.contains("options")) {
                    q.options = rec["options"].get<std::vector<std::string>>();
                    n = q.options.size();
                }
                q.answer_space = AnswerSpace::multiple_choice(n);
            } else {
                throw RecordError("unknown question type: " + type, lineno);
            }
            const std::string answer = rec.at("answer").get<std::string>();
            if (answer.size() != 1)
                throw RecordError("answer must be a single label", lineno);
            q.gold_label = static_cast<char>(
                std::toupper(static_cast<unsigned char>(answer[0])));
            if (!q.answer_space.contains(q.gold_label))
                throw RecordError("answer label outside the answer space: " +
                                      answer,
                                  lineno);
            if (rec.contains("evidence"))
                q.gold_evidence = rec["evidence"].get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw RecordError(std::string("bad benchmark record: ") + e.what(),
                              lineno);
        } catch (const ContractError& e) {
            throw RecordError(std::string("bad benchmark record: ") + e.what(),
                              lineno);
        }
        if (!seen.insert(q.qid).second)
            throw RecordError("duplicate qid: " + q.qid, lineno);
        questions.push_back(std::move(q));
    }
    return questions;
}

// Question text as prompted: the question itself plus labeled options.
inline std::string render_question(const BenchmarkQuestion& q) {
    std::string out = q.question;
    for (std::size_t i = 0; i < q.options.size(); ++i) {
        out += '\n';
        out += q.answer_space.labels[i];
        out += ". ";
        out += q.options[i];
    }
    return out;
}

// -------------------------------------------------------------------------
// Settings

enum class SettingName {
    no_rag,
    baseline_rag,
    hybrid,
    hybrid_regex,
    preformatted_context
};

inline std::string to_string(SettingName name) {
    switch (name) {
        case SettingName::no_rag: return "no_rag";
        case SettingName::baseline_rag: return "baseline_rag";
        case SettingName::hybrid: return "hybrid";
        case SettingName::hybrid_regex: return "hybrid_regex";
        case SettingName::preformatted_context: return "preformatted_context";
    }
    throw ContractError("unhandled setting name");
}

inline SettingName setting_from_string(std::string_view s) {
    if (s == "no_rag") return SettingName::no_rag;
    if (s == "baseline_rag") return SettingName::baseline_rag;
    if (s == "hybrid") return SettingName::hybrid;
    if (s == "hybrid_regex") return SettingName::hybrid_regex;
    if (s == "preformatted_context") return SettingName::preformatted_context;
    throw ConfigError("unknown setting: " + std::string(s));
}

struct EvalSetting {
    SettingName name = SettingName::hybrid_regex;
    std::optional<FusionConfig> fusion; // absent for no_rag / preformatted
    GenerationParams generation;
    PromptTemplate prompt;
    // qid -> context string, preformatted_context only
    std::map<std::string, std::string> preformatted_contexts;

    bool needs_retrieval() const {
        return name == SettingName::baseline_rag || name == SettingName::hybrid ||
               name == SettingName::hybrid_regex;
    }

    // Applies the per-setting constraints to a base fusion config:
    // baseline_rag is dense-only (alpha = 0) without the regex boost, hybrid
    // disables the boost, hybrid_regex enables it.
    static EvalSetting make(SettingName name, FusionConfig base,
                            GenerationParams generation,
                            PromptTemplate prompt = {}) {
        EvalSetting s;
        s.name = name;
        s.generation = std::move(generation);
        s.prompt = std::move(prompt);
        switch (name) {
            case SettingName::no_rag:
            case SettingName::preformatted_context:
                break;
            case SettingName::baseline_rag:
                base.alpha = 0.0;
                base.regex_boost_enabled = false;
                s.fusion = base;
                break;
            case SettingName::hybrid:
                base.regex_boost_enabled = false;
                s.fusion = base;
                break;
            case SettingName::hybrid_regex:
                base.regex_boost_enabled = true;
                s.fusion = base;
                break;
        }
        return s;
    }
};

// qid -> context JSONL: {"qid", "context"} per line.
inline std::map<std::string, std::string> load_preformatted_contexts(
    const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read contexts file: " + path.string());
    std::map<std::string, std::string> contexts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            nlohmann::json rec = nlohmann::json::parse(line);
            contexts[rec.at("qid").get<std::string>()] =
                rec.at("context").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw RecordError(std::string("bad context record: ") + e.what(),
                              lineno);
        }
    }
    return contexts;
}

// -------------------------------------------------------------------------
// Reports

struct QuestionRecord {
    int iteration = 0;
    std::string qid;
    std::string raw_response;
    std::optional<char> predicted;
    char gold = 'T';
    bool correct = false;
    bool parse_failure = false;
    std::vector<std::string> retrieved_chunk_ids;
};

inline std::pair<double, double> accuracy_stats(const std::vector<double>& v) {
    if (v.empty()) throw ContractError("accuracy_stats: empty list");
    double sum = 0.0;
    for (double x : v) sum += x;
    const double mean = sum / static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size()); // population convention
    return {mean, std::sqrt(var)};
}

struct EvalReport {
    std::string setting;
    int iterations = 0;
    std::uint64_t seed = 0;
    std::vector<double> per_iteration_accuracy;
    double mean = 0.0;
    double stddev = 0.0; // population sigma
    std::vector<QuestionRecord> per_question;
    nlohmann::json config_echo; // effective configuration for provenance

    nlohmann::json to_json() const {
        nlohmann::json records = nlohmann::json::array();
        for (const auto& r : per_question) {
            records.push_back(
                {{"iteration", r.iteration},
                 {"qid", r.qid},
                 {"raw_response", r.raw_response},
                 {"predicted",
                  r.predicted ? std::string(1, *r.predicted) : std::string()},
                 {"gold", std::string(1, r.gold)},
                 {"correct", r.correct},
                 {"parse_failure", r.parse_failure},
                 {"retrieved_chunk_ids", r.retrieved_chunk_ids}});
        }
        return {{"setting", setting},
                {"iterations", iterations},
                {"seed", seed},
                {"per_iteration_accuracy", per_iteration_accuracy},
                {"mean", mean},
                {"stddev", stddev},
                {"stddev_convention", "population"},
                {"per_question", std::move(records)},
                {"config", config_echo}};
    }
};

// Progress snapshot written when a live run dies mid-way; holds everything
// needed to resume from the next iteration.
struct EvalCheckpoint {
    std::string setting;
    int completed_iterations = 0;
    std::vector<double> per_iteration_accuracy;
    std::vector<QuestionRecord> per_question;
    std::string failed_qid;
    std::string error;

    nlohmann::json to_json() const {
        nlohmann::json records = nlohmann::json::array();
        for (const auto& r : per_question) {
            records.push_back(
                {{"iteration", r.iteration},
                 {"qid", r.qid},
                 {"raw_response", r.raw_response},
                 {"predicted",
                  r.predicted ? std::string(1, *r.predicted) : std::string()},
                 {"gold", std::string(1, r.gold)},
                 {"correct", r.correct},
                 {"parse_failure", r.parse_failure},
                 {"retrieved_chunk_ids", r.retrieved_chunk_ids}});
        }
        return {{"setting", setting},
                {"completed_iterations", completed_iterations},
                {"per_iteration_accuracy", per_iteration_accuracy},
                {"per_question", std::move(records)},
                {"failed_qid", failed_qid},
                {"error", error}};
    }

    static EvalCheckpoint from_json(const nlohmann::json& j) {
        EvalCheckpoint ck;
        try {
            ck.setting = j.at("setting").get<std::string>();
            ck.completed_iterations = j.at("completed_iterations").get<int>();
            ck.per_iteration_accuracy =
                j.at("per_iteration_accuracy").get<std::vector<double>>();
            for (const auto& r : j.at("per_question")) {
                QuestionRecord rec;
                rec.iteration = r.at("iteration").get<int>();
                rec.qid = r.at("qid").get<std::string>();
                rec.raw_response = r.at("raw_response").get<std::string>();
                const std::string pred = r.at("predicted").get<std::string>();
                if (!pred.empty()) rec.predicted = pred[0];
                rec.gold = r.at("gold").get<std::string>().at(0);
                rec.correct = r.at("correct").get<bool>();
                rec.parse_failure = r.at("parse_failure").get<bool>();
                rec.retrieved_chunk_ids =
                    r.at("retrieved_chunk_ids").get<std::vector<std::string>>();
                ck.per_question.push_back(std::move(rec));
            }
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("bad checkpoint file: ") + e.what());
        }
        return ck;
    }
};

class EvalAborted : public Error {
public:
    EvalAborted(const std::string& msg, EvalCheckpoint checkpoint)
        : Error(msg), checkpoint_(std::move(checkpoint)) {}
    const EvalCheckpoint& checkpoint() const { return checkpoint_; }

private:
    EvalCheckpoint checkpoint_;
};

// -------------------------------------------------------------------------
// Answerers

struct CorpusIndexes {
    const ChunkStore* store = nullptr;
    const SparseIndex* sparse = nullptr;
    const DenseIndex* dense = nullptr;
    const Embedder* embedder = nullptr;

    bool complete() const { return store && sparse && dense && embedder; }
};

// Produces the raw model response for one question; live answerers ignore
// the question and only see the prompt.
using Answerer =
    std::function<std::string(const BenchmarkQuestion&, const std::string&)>;

// Correct answer iff the question's gold evidence appears verbatim in the
// prompt; otherwise the cyclically next (wrong) label. Isolates retrieval
// quality: accuracy becomes recall of gold-evidence chunks.
inline Answerer evidence_oracle_answerer() {
    return [](const BenchmarkQuestion& q, const std::string& prompt) {
        const bool found = q.gold_evidence &&
                           prompt.find(*q.gold_evidence) != std::string::npos;
        const char label =
            found ? q.gold_label : q.answer_space.label_after(q.gold_label);
        return std::string(1, label);
    };
}

inline Answerer first_label_answerer() {
    return [](const BenchmarkQuestion& q, const std::string&) {
        return std::string(1, q.answer_space.labels.front());
    };
}

inline Answerer constant_answerer(std::string response) {
    return [response = std::move(response)](const BenchmarkQuestion&,
                                            const std::string&) {
        return response;
    };
}

inline Answerer live_answerer(const GenerationParams& params) {
    auto client = std::make_shared<ChatCompletionClient>(params);
    return [client](const BenchmarkQuestion&, const std::string& prompt) {
        return client->complete(prompt);
    };
}

inline Answerer make_mock_answerer(std::string_view rule) {
    if (rule == "evidence_oracle") return evidence_oracle_answerer();
    if (rule == "first_label") return first_label_answerer();
    if (rule.rfind("constant:", 0) == 0)
        return constant_answerer(std::string(rule.substr(9)));
    throw ConfigError("unknown mock rule: " + std::string(rule));
}

// -------------------------------------------------------------------------
// Runner

inline EvalReport run_setting(const std::vector<BenchmarkQuestion>& questions,
                              const CorpusIndexes& indexes,
                              const EvalSetting& setting, int iterations,
                              std::uint64_t seed, const Answerer& answerer,
                              const EvalCheckpoint* resume = nullptr) {
    if (questions.empty()) throw ContractError("benchmark has no questions");
    if (iterations < 1) throw ContractError("iterations must be >= 1");
    if (setting.needs_retrieval() && !indexes.complete())
        throw ContractError("setting " + to_string(setting.name) +
                            " requires built indexes");
    if (setting.fusion) setting.fusion->validate();
    setting.generation.validate();

    EvalReport report;
    report.setting = to_string(setting.name);
    report.iterations = iterations;
    report.seed = seed;

    int start_iteration = 0;
    if (resume) {
        if (resume->setting != report.setting)
            throw ConfigError("checkpoint is for setting " + resume->setting);
        start_iteration = resume->completed_iterations;
        report.per_iteration_accuracy = resume->per_iteration_accuracy;
        report.per_question = resume->per_question;
    }

    for (int iter = start_iteration; iter < iterations; ++iter) {
        std::size_t correct = 0;
        std::vector<QuestionRecord> iteration_records;
        iteration_records.reserve(questions.size());
        for (const auto& q : questions) {
            QuestionRecord rec;
            rec.iteration = iter;
            rec.qid = q.qid;
            rec.gold = q.gold_label;

            std::vector<Chunk> contexts;
            try {
                if (setting.needs_retrieval()) {
                    auto hits = retrieve_hybrid(q.question, *indexes.sparse,
                                                *indexes.dense, *indexes.embedder,
                                                *indexes.store, *setting.fusion);
                    for (auto& hit : hits) {
                        rec.retrieved_chunk_ids.push_back(hit.chunk.chunk_id);
                        contexts.push_back(std::move(hit.chunk));
                    }
                } else if (setting.name == SettingName::preformatted_context) {
                    auto it = setting.preformatted_contexts.find(q.qid);
                    if (it != setting.preformatted_contexts.end()) {
                        Chunk c;
                        c.chunk_id = "context:" + q.qid;
                        c.doc_id = c.chunk_id;
                        c.text = it->second;
                        c.char_end = utf8::scalar_count(c.text);
                        rec.retrieved_chunk_ids.push_back(c.chunk_id);
                        contexts.push_back(std::move(c));
                    }
                }
                const std::string prompt =
                    build_prompt(render_question(q), contexts, setting.prompt);
                rec.raw_response = answerer(q, prompt);
            } catch (const TransportError& e) {
                EvalCheckpoint ck;
                ck.setting = report.setting;
                ck.completed_iterations = iter;
                ck.per_iteration_accuracy = report.per_iteration_accuracy;
                ck.per_question = report.per_question;
                ck.failed_qid = q.qid;
                ck.error = e.what();
                throw EvalAborted("evaluation aborted at iteration " +
                                      std::to_string(iter) + ", question " +
                                      q.qid + ": " + e.what(),
                                  std::move(ck));
            }

            rec.predicted = parse_answer(rec.raw_response, q.answer_space);
            rec.parse_failure = !rec.predicted.has_value();
            rec.correct = rec.predicted && *rec.predicted == q.gold_label;
            if (rec.correct) ++correct;
            iteration_records.push_back(std::move(rec));
        }
        report.per_iteration_accuracy.push_back(
            static_cast<double>(correct) / static_cast<double>(questions.size()));
        for (auto& rec : iteration_records)
            report.per_question.push_back(std::move(rec));
    }

    const auto [mean, stddev] = accuracy_stats(report.per_iteration_accuracy);
    report.mean = mean;
    report.stddev = stddev;
    return report;
}

} // namespace ctirag
