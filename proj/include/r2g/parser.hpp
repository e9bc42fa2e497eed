#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "r2g/vocab.hpp"

namespace r2g {

/// Key clues parsed from a referential utterance. Property maps are keyed
/// by family name; the category clue uses key "category".
struct ParsedClues {
    std::map<std::string, std::string> target_props;
    std::map<std::string, std::string> anchor_props;
    std::optional<std::string> relation;

    bool operator==(const ParsedClues&) const = default;
};

enum class InstructionRole { AnchorProperty, Relation, TargetProperty };

struct Instruction {
    Eigen::VectorXd vector;
    InstructionRole role;
    int family = -1;  // property slot j = 0..L; -1 for the relation
    std::optional<std::string> clue;
};

enum class ProgramMode { RelationOnly, Attribute };

struct InstructionProgram {
    std::vector<Instruction> instructions;
    ProgramMode mode = ProgramMode::RelationOnly;
    std::size_t property_count = 1;  // L + 1

    std::size_t size() const { return instructions.size(); }
};

std::vector<std::string> tokenize(const std::string& utterance);

/// Deterministic grammar parser for template utterances:
/// `<det>? <attr>* <target-class> <relation-phrase> <det>? <attr>* <anchor-class>`.
/// Class and relation phrases longest-match against vocabulary tokens and
/// the built-in relation surface phrases (e.g. "on" -> "supporting" when
/// "on" itself is not a vocabulary relation).
ParsedClues parse_template(const std::string& utterance, const ConceptVocabulary& vocab);

struct AlignedWord {
    std::string word;
    Eigen::VectorXd vector;                // v_i = sum_c P(c) c
    std::vector<double> distribution;      // P over vocab entries (+ null slot last, when present)
};

/// Soft word-to-concept alignment: P_i = softmax(beta * w_i^T W C-hat),
/// v_i = sum P(c) c. Unknown words take the null-concept embedding.
/// W defaults to identity when empty.
std::vector<AlignedWord> align_words(const std::string& utterance, const ConceptVocabulary& vocab,
                                     const Eigen::MatrixXd& alignment = Eigen::MatrixXd(), double beta = 1.0);

/// Clue -> instruction-vector mapping with zero padding. Relation-only
/// order: [anchor-category, relation, target-category] (I = 3); attribute
/// order: [anchor props j=0..L, relation, target props j=0..L] (I = 2L+3).
InstructionProgram clues_to_instructions(const ParsedClues& clues, const ConceptVocabulary& vocab,
                                         ProgramMode mode, const std::vector<std::string>& attribute_families,
                                         std::vector<std::string>* warnings = nullptr);

std::string program_to_json(const InstructionProgram& program, bool include_vectors = false);

}  // namespace r2g
