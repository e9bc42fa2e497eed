#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "r2g/relations.hpp"
#include "r2g/scene.hpp"
#include "r2g/vocab.hpp"

namespace r2g {

struct GraphConfig {
    RelationConfig relations;
    /// Attribute family order (s^1..s^L); s^0 is always the category.
    std::vector<std::string> attribute_families = default_attribute_families();

    static std::vector<std::string> default_attribute_families();
    std::size_t property_count() const { return attribute_families.size() + 1; }  // L + 1
};

/// Reference RGB per named color concept.
const std::vector<std::pair<std::string, Eigen::Vector3d>>& named_colors();

struct NodeState {
    std::string object_id;
    std::vector<Eigen::VectorXd> embeddings;             // s^0 .. s^L
    std::vector<std::map<std::string, double>> meta;     // per family: token -> weight
};

struct GraphEdge {
    std::string source;  // z
    std::string target;  // x
    std::map<std::string, double> relation_probs;  // token -> R^j
    Eigen::VectorXd embedding;                     // e = sum_j R^j e^j
};

struct SceneGraph {
    std::vector<NodeState> nodes;
    std::vector<GraphEdge> edges;
    int dim = 0;
    std::vector<std::string> family_order;  // ["category", attr families...]
    std::unordered_map<std::string, std::size_t> node_index;

    const NodeState& node(const std::string& id) const;
    /// Edges incoming to the given target node.
    std::vector<const GraphEdge*> incoming(const std::string& target) const;
};

/// s^0 per the weighted-summation rule: sum_k P(k) c_k.
Eigen::VectorXd category_embedding(const ObjectProposal& proposal, const ConceptVocabulary& vocab);

/// Nearest named color to mean_rgb (Euclidean RGB, ties lexicographic);
/// zero vector if the chosen color token is absent from the vocabulary.
Eigen::VectorXd color_embedding(const ObjectProposal& proposal, const ConceptVocabulary& vocab);
std::string nearest_color_token(const Eigen::Vector3d& rgb);

/// Weighted sum over the shape family; zero vector when shape_dist absent.
Eigen::VectorXd shape_embedding(const ObjectProposal& proposal, const ConceptVocabulary& vocab);

/// Superlative attribute slot: each token of the family weighted by its
/// size_superlative_probability.
Eigen::VectorXd superlative_attr_embedding(const Scene& scene, const ObjectProposal& proposal,
                                           const ConceptVocabulary& vocab, const std::string& family, int top_k);

SceneGraph build_scene_graph(const Scene& scene, const ConceptVocabulary& vocab, const GraphConfig& config);

/// Graph JSON (the golden-file format for graph tests).
std::string graph_to_json(const SceneGraph& graph, bool include_embeddings = false);

}  // namespace r2g
