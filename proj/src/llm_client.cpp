#include "r2g/llm_client.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "r2g/relations.hpp"

namespace r2g {

using nlohmann::json;

namespace {

const char* kDefaultPromptTemplate = R"(You parse referring expressions about objects in a room.
Utterance: "{{utterance}}"
Reply with JSON only, no prose:
{"target": {"category": <token>, <attribute>: <token>...}, "relation": <token or null>, "anchor": {"category": <token>} or null}
Allowed category tokens: {{categories}}
Allowed relation tokens: {{relations}}
Allowed attribute tokens: {{attributes}}
Use only allowed tokens. Omit anything the utterance does not state.)";

std::string env_or(const char* name, const std::string& fallback = "") {
    const char* v = std::getenv(name);
    return v ? v : fallback;
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
    for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
        s.replace(pos, from.size(), to);
    return s;
}

std::string join_family(const ConceptVocabulary& vocab, const std::string& family) {
    if (!vocab.has_family(family)) return "";
    std::string out;
    for (const auto& t : vocab.family_tokens(family)) {
        if (!out.empty()) out += ", ";
        out += t;
    }
    return out;
}

/// Resolves a raw token into the given family: exact hit, then the relation
/// surface table (relations only), then nearest-concept on its embedding.
std::optional<std::string> resolve_token(const std::string& raw, const std::string& family,
                                         const ConceptVocabulary& vocab, std::vector<std::string>* warnings) {
    if (!vocab.has_family(family)) return std::nullopt;
    const Concept* c = vocab.find(raw);
    if (c && c->family == family) return raw;
    if (family == kRelationFamily) {
        for (const auto& [canonical, phrases] : relation_surface_phrases()) {
            if (!vocab.find(canonical)) continue;
            for (const auto& p : phrases)
                if (p == raw) return canonical;
        }
    }
    const EmbeddingTable* table = vocab.word_table();
    if (table && table->resolvable(raw)) {
        Eigen::VectorXd q = table->resolve(raw);
        if (vocab.normalized() && q.norm() > 0.0) q /= q.norm();
        auto [nearest, score] = vocab.nearest(q, family);
        if (nearest) {
            if (warnings)
                warnings->push_back("LlmTokenMapped: '" + raw + "' resolved to nearest concept '" +
                                    nearest->token + "'");
            return nearest->token;
        }
    }
    if (warnings) warnings->push_back("LlmTokenUnmappable: dropped '" + raw + "' (family " + family + ")");
    return std::nullopt;
}

void map_props(const json& side, std::map<std::string, std::string>& props, const ConceptVocabulary& vocab,
               std::vector<std::string>* warnings) {
    if (side.is_null()) return;
    if (!side.is_object()) fail("LlmMalformedResponse", side.dump());
    for (const auto& [key, value] : side.items()) {
        if (!value.is_string()) continue;
        std::string family = key == "category" ? std::string(kCategoryFamily)
                                               : (key.rfind("attr:", 0) == 0 ? key : "attr:" + key);
        if (auto token = resolve_token(value.get<std::string>(), family, vocab, warnings))
            props[key == "category" ? "category" : family] = *token;
    }
}

LlmTransport default_transport(const LlmConfig& config) {
    return [config](const std::string& body) -> LlmResponse {
        auto scheme_end = config.endpoint.find("://");
        if (scheme_end == std::string::npos) fail("LlmUnavailable", "bad endpoint '" + config.endpoint + "'");
        auto path_start = config.endpoint.find('/', scheme_end + 3);
        std::string base = path_start == std::string::npos ? config.endpoint : config.endpoint.substr(0, path_start);
        std::string path = path_start == std::string::npos ? "/" : config.endpoint.substr(path_start);

        httplib::Client client(base);
        client.set_read_timeout(config.timeout_seconds, 0);
        client.set_connection_timeout(config.timeout_seconds, 0);
        httplib::Headers headers;
        if (!config.api_key.empty()) headers.emplace("Authorization", "Bearer " + config.api_key);
        auto res = client.Post(path, headers, body, "application/json");
        if (!res) return {0, ""};
        return {res->status, res->body};
    };
}

}  // namespace

LlmConfig LlmConfig::from_env() {
    LlmConfig config;
    config.endpoint = env_or("R2G_LLM_ENDPOINT");
    config.api_key = env_or("R2G_LLM_API_KEY");
    config.model = env_or("R2G_LLM_MODEL", "gpt-4o-mini");
    return config;
}

LlmParser::LlmParser(LlmConfig config, LlmTransport transport)
    : config_(std::move(config)), prompt_template_(kDefaultPromptTemplate) {
    transport_ = transport ? std::move(transport) : default_transport(config_);
}

void LlmParser::load_prompt_template(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("FileNotFound", path);
    std::ostringstream oss;
    oss << in.rdbuf();
    prompt_template_ = oss.str();
}

std::string LlmParser::build_prompt(const std::string& utterance, const ConceptVocabulary& vocab) const {
    std::string attrs;
    for (const auto& family : vocab.family_names()) {
        if (family.rfind("attr:", 0) != 0) continue;
        std::string joined = join_family(vocab, family);
        if (joined.empty()) continue;
        if (!attrs.empty()) attrs += "; ";
        attrs += family.substr(5) + ": " + joined;
    }
    std::string prompt = prompt_template_;
    prompt = replace_all(prompt, "{{utterance}}", utterance);
    prompt = replace_all(prompt, "{{categories}}", join_family(vocab, kCategoryFamily));
    prompt = replace_all(prompt, "{{relations}}", join_family(vocab, kRelationFamily));
    prompt = replace_all(prompt, "{{attributes}}", attrs);
    return prompt;
}

ParsedClues LlmParser::map_response(const std::string& body, const ConceptVocabulary& vocab,
                                    std::vector<std::string>* warnings) {
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::parse_error&) {
        fail("LlmMalformedResponse", body);
    }
    if (doc.is_object() && doc.contains("content") && doc["content"].is_string()) {
        try {
            doc = json::parse(doc["content"].get<std::string>());
        } catch (const json::parse_error&) {
            fail("LlmMalformedResponse", body);
        }
    }
    if (!doc.is_object() || !doc.contains("target")) fail("LlmMalformedResponse", body);

    ParsedClues clues;
    map_props(doc["target"], clues.target_props, vocab, warnings);
    if (doc.contains("anchor")) map_props(doc["anchor"], clues.anchor_props, vocab, warnings);
    if (doc.contains("relation") && doc["relation"].is_string())
        clues.relation = resolve_token(doc["relation"].get<std::string>(), kRelationFamily, vocab, warnings);
    if (!clues.target_props.count("category")) fail("LlmMalformedResponse", "no target category in: " + body);
    return clues;
}

ParsedClues LlmParser::parse(const std::string& utterance, const ConceptVocabulary& vocab,
                             std::vector<std::string>* warnings) const {
    json request;
    request["model"] = config_.model;
    request["prompt"] = build_prompt(utterance, vocab);
    request["utterance"] = utterance;
    const std::string body = request.dump();

    std::string last_error = "no attempts made";
    for (int attempt = 0; attempt < config_.max_attempts; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(config_.backoff_ms << (attempt - 1)));
        LlmResponse res;
        try {
            res = transport_(body);
        } catch (const Error& e) {
            last_error = e.what();
            continue;
        }
        if (res.status != 200) {
            last_error = "HTTP status " + std::to_string(res.status);
            continue;
        }
        try {
            return map_response(res.body, vocab, warnings);
        } catch (const Error& e) {
            last_error = e.what();
        }
    }
    fail("LlmUnavailable", "giving up after " + std::to_string(config_.max_attempts) +
                               " attempts; last error: " + last_error);
}

}  // namespace r2g
