#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "r2g/errors.hpp"

namespace r2g {

// Family identifiers used throughout: "category", "relation", and
// attribute families of the form "attr:<name>" (attr:color, attr:shape, ...).
inline constexpr const char* kCategoryFamily = "category";
inline constexpr const char* kRelationFamily = "relation";

struct Concept {
    std::string token;
    std::string family;
    Eigen::VectorXd embedding;
};

/// Token -> vector table in GloVe text format (one line per token:
/// `token v1 v2 ... vd`). Multi-word lookups resolve to the mean of the
/// constituent word vectors.
class EmbeddingTable {
public:
    static EmbeddingTable load(const std::string& path);
    static EmbeddingTable from_map(std::unordered_map<std::string, Eigen::VectorXd> vectors, int dim);

    int dim() const { return dim_; }
    bool contains(const std::string& word) const { return vectors_.count(word) > 0; }

    /// Exact word lookup. Throws MissingEmbedding.
    const Eigen::VectorXd& word(const std::string& word) const;

    /// Resolves a (possibly multi-word) token; mean of word vectors.
    Eigen::VectorXd resolve(const std::string& token) const;
    bool resolvable(const std::string& token) const;

    const std::unordered_map<std::string, Eigen::VectorXd>& vectors() const { return vectors_; }

private:
    std::unordered_map<std::string, Eigen::VectorXd> vectors_;
    int dim_ = 0;
};

/// The semantic concept vocabulary: one category family, attribute
/// families, and one relation family, each concept with a d-dim embedding.
/// Immutable after load; safe for shared read access.
class ConceptVocabulary {
public:
    /// Builds from a manifest JSON document (see manifest schema in the
    /// README) plus an embedding table. `normalize` unit-normalizes every
    /// concept embedding.
    static ConceptVocabulary from_manifest_json(const std::string& manifest_json,
                                                const EmbeddingTable& table,
                                                bool normalize = true);

    /// Loads `<dir>/manifest.json` + `<dir>/embeddings.txt`.
    static ConceptVocabulary load_dir(const std::string& dir, bool normalize = true);

    /// Synthetic orthonormal vocabulary: d = total concept count, concept i
    /// gets basis vector e_i. Families given as ordered (family -> tokens).
    static ConceptVocabulary one_hot(const std::vector<std::pair<std::string, std::vector<std::string>>>& families);

    int dim() const { return dim_; }
    bool normalized() const { return normalized_; }
    std::size_t size() const { return entries_.size(); }
    const std::vector<Concept>& entries() const { return entries_; }

    const Concept* find(const std::string& token) const;
    const Concept& at(const std::string& token) const;
    bool has_family(const std::string& family) const { return families_.count(family) > 0; }

    /// Tokens of a family, in manifest order. Throws UnknownFamily.
    const std::vector<std::string>& family_tokens(const std::string& family) const;
    /// Family names in manifest order.
    const std::vector<std::string>& family_names() const { return family_order_; }

    /// Embedding of a token, or the zero vector if absent.
    Eigen::VectorXd embedding_or_zero(const std::string& token) const;

    /// Dot-product similarity. With unit-normalized inputs this is cosine.
    static double similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

    /// Highest-similarity concept, optionally restricted to one family.
    /// Ties break by ascending token order.
    std::pair<const Concept*, double> nearest(const Eigen::VectorXd& query,
                                              const std::optional<std::string>& family = std::nullopt) const;

    const std::optional<Eigen::VectorXd>& null_concept() const { return null_concept_; }
    const EmbeddingTable* word_table() const { return word_table_ ? &*word_table_ : nullptr; }

    /// Writes `<dir>/manifest.json` + `<dir>/embeddings.txt` such that
    /// load_dir round-trips to bit-identical embeddings.
    void save_dir(const std::string& dir) const;

private:
    int dim_ = 0;
    bool normalized_ = false;
    std::vector<Concept> entries_;
    std::unordered_map<std::string, std::size_t> index_;
    std::map<std::string, std::vector<std::string>> families_;
    std::vector<std::string> family_order_;
    std::optional<Eigen::VectorXd> null_concept_;
    std::optional<std::string> null_token_;
    std::optional<EmbeddingTable> word_table_;  // raw word vectors, for soft alignment
};

}  // namespace r2g
