#include "r2g/parser.hpp"

#include <algorithm>
#include <cctype>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "r2g/relations.hpp"

namespace r2g {

using nlohmann::json;

namespace {

const std::set<std::string>& filler_words() {
    static const std::set<std::string> words = {"the",  "a",     "an",     "that", "this",   "find",
                                                "pick", "select", "choose", "locate", "please", "is"};
    return words;
}

struct Match {
    std::size_t length = 0;   // words consumed
    std::string token;        // canonical vocabulary token
    std::string family;
};

/// Longest match of a vocabulary token from `family_filter` (empty = any
/// attribute family) starting at position i.
Match match_family_token(const std::vector<std::string>& words, std::size_t i, const ConceptVocabulary& vocab,
                         const std::string& family_filter) {
    Match best;
    for (const auto& family : vocab.family_names()) {
        if (!family_filter.empty() && family != family_filter) continue;
        if (family_filter.empty() && family.rfind("attr:", 0) != 0) continue;
        for (const auto& token : vocab.family_tokens(family)) {
            std::vector<std::string> parts = tokenize(token);
            if (parts.empty() || i + parts.size() > words.size()) continue;
            if (!std::equal(parts.begin(), parts.end(), words.begin() + static_cast<long>(i))) continue;
            if (parts.size() > best.length || (parts.size() == best.length && token < best.token))
                best = {parts.size(), token, family};
        }
    }
    return best;
}

/// Longest relation match: vocabulary relation tokens first, then built-in
/// surface phrases mapped to a canonical token present in the vocabulary.
Match match_relation(const std::vector<std::string>& words, std::size_t i, const ConceptVocabulary& vocab) {
    Match best = match_family_token(words, i, vocab, kRelationFamily);
    for (const auto& [canonical, phrases] : relation_surface_phrases()) {
        if (!vocab.find(canonical)) continue;
        for (const auto& phrase : phrases) {
            std::vector<std::string> parts = tokenize(phrase);
            if (parts.empty() || i + parts.size() > words.size()) continue;
            if (!std::equal(parts.begin(), parts.end(), words.begin() + static_cast<long>(i))) continue;
            if (parts.size() > best.length) best = {parts.size(), canonical, kRelationFamily};
        }
    }
    return best;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& utterance) {
    std::string cleaned;
    cleaned.reserve(utterance.size());
    for (char ch : utterance) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || c == '-' || c == '\'')
            cleaned.push_back(static_cast<char>(std::tolower(c)));
        else
            cleaned.push_back(' ');
    }
    std::vector<std::string> words;
    std::istringstream iss(cleaned);
    std::string w;
    while (iss >> w) words.push_back(w);
    return words;
}

ParsedClues parse_template(const std::string& utterance, const ConceptVocabulary& vocab) {
    std::vector<std::string> words = tokenize(utterance);
    if (words.empty()) fail("NoTargetFound", "empty utterance");

    ParsedClues clues;
    enum { Target, Relation, Anchor, Done } state = Target;
    std::map<std::string, std::string> pending_attrs;
    std::size_t i = 0;
    while (i < words.size() && state != Done) {
        if (state == Target || state == Anchor) {
            auto& props = state == Target ? clues.target_props : clues.anchor_props;
            Match cat = match_family_token(words, i, vocab, kCategoryFamily);
            Match attr = match_family_token(words, i, vocab, "");
            if (cat.length > 0 && cat.length >= attr.length) {
                props["category"] = cat.token;
                for (const auto& [family, token] : pending_attrs) props[family] = token;
                pending_attrs.clear();
                state = state == Target ? Relation : Done;
                i += cat.length;
            } else if (attr.length > 0) {
                pending_attrs[attr.family] = attr.token;
                i += attr.length;
            } else {
                ++i;  // determiner or filler
            }
        } else {  // Relation
            Match rel = match_relation(words, i, vocab);
            if (rel.length > 0) {
                clues.relation = rel.token;
                state = Anchor;
                i += rel.length;
            } else if (filler_words().count(words[i])) {
                ++i;
            } else {
                Match cat = match_family_token(words, i, vocab, kCategoryFamily);
                if (cat.length > 0)
                    fail("AmbiguousParse", "two maximal parses: target '" + clues.target_props.at("category") +
                                               "' alone vs followed by '" + cat.token + "' with no relation");
                ++i;
            }
        }
    }
    if (!clues.target_props.count("category")) fail("NoTargetFound", "no category token in '" + utterance + "'");
    return clues;
}

std::vector<AlignedWord> align_words(const std::string& utterance, const ConceptVocabulary& vocab,
                                     const Eigen::MatrixXd& alignment, double beta) {
    if (beta <= 0.0) fail("SchemaViolation", "temperature must be positive");
    const EmbeddingTable* table = vocab.word_table();
    const int d = vocab.dim();
    Eigen::MatrixXd W = alignment.size() == 0 ? Eigen::MatrixXd::Identity(d, d) : alignment;
    if (W.rows() != d || W.cols() != d) fail("DimensionMismatch", "alignment matrix must be d x d");

    // concept matrix C-hat: vocabulary entries plus the null slot
    std::vector<const Eigen::VectorXd*> concepts;
    for (const auto& c : vocab.entries()) concepts.push_back(&c.embedding);
    const bool has_null = vocab.null_concept().has_value();
    if (has_null) concepts.push_back(&*vocab.null_concept());

    Eigen::VectorXd null_vec = has_null ? *vocab.null_concept() : Eigen::VectorXd::Zero(d);
    std::vector<AlignedWord> out;
    for (const auto& word : tokenize(utterance)) {
        Eigen::VectorXd w = (table && table->contains(word)) ? table->word(word) : null_vec;
        Eigen::VectorXd logits(concepts.size());
        for (std::size_t c = 0; c < concepts.size(); ++c)
            logits[static_cast<long>(c)] = beta * w.dot(W * (*concepts[c]));
        Eigen::VectorXd p = (logits.array() - logits.maxCoeff()).exp();
        p /= p.sum();
        Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
        for (std::size_t c = 0; c < concepts.size(); ++c) v += p[static_cast<long>(c)] * (*concepts[c]);
        out.push_back({word, std::move(v), {p.data(), p.data() + p.size()}});
    }
    return out;
}

InstructionProgram clues_to_instructions(const ParsedClues& clues, const ConceptVocabulary& vocab,
                                         ProgramMode mode, const std::vector<std::string>& attribute_families,
                                         std::vector<std::string>* warnings) {
    InstructionProgram program;
    program.mode = mode;
    program.property_count = mode == ProgramMode::Attribute ? attribute_families.size() + 1 : 1;
    const int d = vocab.dim();

    auto slot = [&](const std::map<std::string, std::string>& props, const std::string& family,
                    InstructionRole role, int j) {
        Instruction instr{Eigen::VectorXd::Zero(d), role, j, std::nullopt};
        auto it = props.find(family);
        if (it != props.end()) {
            instr.vector = vocab.embedding_or_zero(it->second);
            instr.clue = it->second;
        }
        program.instructions.push_back(std::move(instr));
    };
    auto emit_side = [&](const std::map<std::string, std::string>& props, InstructionRole role) {
        slot(props, "category", role, 0);
        if (mode == ProgramMode::Attribute) {
            for (std::size_t j = 0; j < attribute_families.size(); ++j)
                slot(props, attribute_families[j], role, static_cast<int>(j) + 1);
        } else if (warnings) {
            for (const auto& [family, token] : props)
                if (family != "category")
                    warnings->push_back("ModeFamilyMismatch: dropped " + family + "=" + token +
                                        " in relation-only mode");
        }
    };

    emit_side(clues.anchor_props, InstructionRole::AnchorProperty);
    Instruction rel{Eigen::VectorXd::Zero(d), InstructionRole::Relation, -1, std::nullopt};
    if (clues.relation) {
        rel.vector = vocab.embedding_or_zero(*clues.relation);
        rel.clue = *clues.relation;
    }
    program.instructions.push_back(std::move(rel));
    emit_side(clues.target_props, InstructionRole::TargetProperty);
    return program;
}

std::string program_to_json(const InstructionProgram& program, bool include_vectors) {
    json doc;
    doc["mode"] = program.mode == ProgramMode::Attribute ? "attribute" : "relation-only";
    doc["instructions"] = json::array();
    for (const auto& instr : program.instructions) {
        json ji;
        switch (instr.role) {
            case InstructionRole::AnchorProperty: ji["role"] = "anchor-property"; break;
            case InstructionRole::Relation: ji["role"] = "relation"; break;
            case InstructionRole::TargetProperty: ji["role"] = "target-property"; break;
        }
        if (instr.family >= 0) ji["family"] = instr.family;
        if (instr.clue) ji["token"] = *instr.clue;
        if (include_vectors)
            ji["vector"] = std::vector<double>(instr.vector.data(), instr.vector.data() + instr.vector.size());
        doc["instructions"].push_back(std::move(ji));
    }
    return doc.dump(2);
}

}  // namespace r2g
