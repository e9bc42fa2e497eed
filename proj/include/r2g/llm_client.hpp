#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "r2g/parser.hpp"
#include "r2g/vocab.hpp"

namespace r2g {

struct LlmConfig {
    std::string endpoint;  // e.g. http://host:port/v1/parse
    std::string api_key;
    std::string model;
    int max_attempts = 3;
    int timeout_seconds = 30;
    int backoff_ms = 100;  // doubled per retry

    /// Reads R2G_LLM_ENDPOINT, R2G_LLM_API_KEY, R2G_LLM_MODEL.
    static LlmConfig from_env();
};

struct LlmResponse {
    int status = 0;
    std::string body;
};

/// Injectable transport: request body in, response out. The default
/// transport POSTs JSON to config.endpoint over HTTP.
using LlmTransport = std::function<LlmResponse(const std::string& request_body)>;

/// Parses utterances by prompting an external model for clue JSON.
/// The model must reply with
///   { "target": {"category": ..., "color": ...?, ...}, "relation": ...?, "anchor": {...}? }
/// (optionally wrapped as {"content": "<that JSON as a string>"}).
/// Out-of-vocabulary tokens are mapped via nearest-concept lookup on their
/// word embeddings when resolvable, else dropped with a warning.
class LlmParser {
public:
    explicit LlmParser(LlmConfig config, LlmTransport transport = {});

    ParsedClues parse(const std::string& utterance, const ConceptVocabulary& vocab,
                      std::vector<std::string>* warnings = nullptr) const;

    std::string build_prompt(const std::string& utterance, const ConceptVocabulary& vocab) const;
    void set_prompt_template(std::string tmpl) { prompt_template_ = std::move(tmpl); }
    void load_prompt_template(const std::string& path);

    /// Maps a raw model response (the clue JSON document) into validated
    /// clues. Exposed for testing. Throws LlmMalformedResponse.
    static ParsedClues map_response(const std::string& body, const ConceptVocabulary& vocab,
                                    std::vector<std::string>* warnings);

private:
    LlmConfig config_;
    LlmTransport transport_;
    std::string prompt_template_;
};

}  // namespace r2g
