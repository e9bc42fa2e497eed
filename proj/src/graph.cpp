#include "r2g/graph.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

namespace r2g {

using nlohmann::json;

std::vector<std::string> GraphConfig::default_attribute_families() {
    return {"attr:color",  "attr:shape",    "attr:size",     "attr:height", "attr:length",
            "attr:width",  "attr:material", "attr:position", "attr:relsize"};
}

const std::vector<std::pair<std::string, Eigen::Vector3d>>& named_colors() {
    static const std::vector<std::pair<std::string, Eigen::Vector3d>> colors = {
        {"black", {0.0, 0.0, 0.0}},     {"blue", {0.0, 0.0, 1.0}},       {"brown", {0.55, 0.27, 0.07}},
        {"gray", {0.5, 0.5, 0.5}},      {"green", {0.0, 1.0, 0.0}},      {"orange", {1.0, 0.65, 0.0}},
        {"purple", {0.5, 0.0, 0.5}},    {"red", {1.0, 0.0, 0.0}},        {"white", {1.0, 1.0, 1.0}},
        {"yellow", {1.0, 1.0, 0.0}},
    };
    return colors;
}

const NodeState& SceneGraph::node(const std::string& id) const {
    auto it = node_index.find(id);
    if (it == node_index.end()) fail("UnknownId", "'" + id + "' not in graph");
    return nodes[it->second];
}

std::vector<const GraphEdge*> SceneGraph::incoming(const std::string& target) const {
    std::vector<const GraphEdge*> out;
    for (const auto& e : edges)
        if (e.target == target) out.push_back(&e);
    return out;
}

Eigen::VectorXd category_embedding(const ObjectProposal& proposal, const ConceptVocabulary& vocab) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(vocab.dim());
    for (const auto& [token, p] : proposal.category_dist) {
        const Concept* c = vocab.find(token);
        if (!c || c->family != kCategoryFamily) fail("UnknownCategoryToken", "'" + token + "'");
        sum += p * c->embedding;
    }
    return sum;
}

std::string nearest_color_token(const Eigen::Vector3d& rgb) {
    std::string best;
    double best_d = 0.0;
    for (const auto& [token, ref] : named_colors()) {
        double d = (rgb - ref).norm();
        if (best.empty() || d < best_d) {  // table sorted by token, so ties keep the first
            best = token;
            best_d = d;
        }
    }
    return best;
}

Eigen::VectorXd color_embedding(const ObjectProposal& proposal, const ConceptVocabulary& vocab) {
    return vocab.embedding_or_zero(nearest_color_token(proposal.mean_rgb));
}

Eigen::VectorXd shape_embedding(const ObjectProposal& proposal, const ConceptVocabulary& vocab) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(vocab.dim());
    if (!proposal.shape_dist) return sum;
    for (const auto& [token, p] : *proposal.shape_dist) {
        const Concept* c = vocab.find(token);
        if (!c) fail("UnknownShapeToken", "'" + token + "'");
        sum += p * c->embedding;
    }
    return sum;
}

Eigen::VectorXd superlative_attr_embedding(const Scene& scene, const ObjectProposal& proposal,
                                           const ConceptVocabulary& vocab, const std::string& family, int top_k) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(vocab.dim());
    if (!vocab.has_family(family)) return sum;
    for (const auto& token : vocab.family_tokens(family)) {
        SizeKind kind = parse_size_kind(token);
        sum += size_superlative_probability(scene, proposal.id, kind, top_k) * vocab.at(token).embedding;
    }
    return sum;
}

namespace {

std::string argmax_category(const ObjectProposal& p) {
    std::string best;
    double best_p = -1.0;
    for (const auto& [token, prob] : p.category_dist)
        if (prob > best_p) {
            best = token;
            best_p = prob;
        }
    return best;
}

/// "corner" when the object's center is within a quarter of the scene's
/// bounding-rectangle diagonal of some rect corner, else "middle".
std::string room_position_token(const Scene& scene, const ObjectProposal& p) {
    double min_x = 1e300, max_x = -1e300, min_y = 1e300, max_y = -1e300;
    for (const auto& o : scene.proposals)
        for (const auto& c : o.box.footprint()) {
            min_x = std::min(min_x, c.x());
            max_x = std::max(max_x, c.x());
            min_y = std::min(min_y, c.y());
            max_y = std::max(max_y, c.y());
        }
    double diag = std::hypot(max_x - min_x, max_y - min_y);
    Eigen::Vector2d center(p.box.center.x(), p.box.center.y());
    double best = 1e300;
    for (double cx : {min_x, max_x})
        for (double cy : {min_y, max_y}) best = std::min(best, (center - Eigen::Vector2d(cx, cy)).norm());
    return best <= 0.25 * diag ? "corner" : "middle";
}

/// large/small relative to the per-category (argmax) median volume.
std::string relative_size_token(const Scene& scene, const ObjectProposal& p) {
    std::string cat = argmax_category(p);
    std::vector<double> volumes;
    for (const auto& o : scene.proposals)
        if (argmax_category(o) == cat) volumes.push_back(o.box.volume());
    std::sort(volumes.begin(), volumes.end());
    std::size_t n = volumes.size();
    double median = n % 2 == 1 ? volumes[n / 2] : 0.5 * (volumes[n / 2 - 1] + volumes[n / 2]);
    double v = p.box.volume();
    if (v > median) return "large";
    if (v < median) return "small";
    return "";  // at the median: no evidence
}

struct FamilyResult {
    Eigen::VectorXd embedding;
    std::map<std::string, double> meta;
};

FamilyResult attribute_slot(const Scene& scene, const ObjectProposal& p, const ConceptVocabulary& vocab,
                            const std::string& family, int top_k) {
    FamilyResult r{Eigen::VectorXd::Zero(vocab.dim()), {}};
    const std::string name = family.rfind("attr:", 0) == 0 ? family.substr(5) : family;

    if (name == "color") {
        std::string token = nearest_color_token(p.mean_rgb);
        r.embedding = vocab.embedding_or_zero(token);
        r.meta[token] = 1.0;
    } else if (name == "shape") {
        r.embedding = shape_embedding(p, vocab);
        if (p.shape_dist) r.meta = *p.shape_dist;
    } else if (name == "size" || name == "height" || name == "length" || name == "width") {
        if (vocab.has_family(family)) {
            for (const auto& token : vocab.family_tokens(family)) {
                double w = size_superlative_probability(scene, p.id, parse_size_kind(token), top_k);
                r.embedding += w * vocab.at(token).embedding;
                r.meta[token] = w;
            }
        }
    } else if (name == "position") {
        std::string token = room_position_token(scene, p);
        r.embedding = vocab.embedding_or_zero(token);
        r.meta[token] = 1.0;
    } else if (name == "relsize") {
        std::string token = relative_size_token(scene, p);
        if (!token.empty()) {
            r.embedding = vocab.embedding_or_zero(token);
            r.meta[token] = 1.0;
        }
    } else {
        // pass-through attribute (e.g. material) from the input document
        auto it = p.extra_attrs.find(name);
        if (it != p.extra_attrs.end()) {
            r.embedding = vocab.embedding_or_zero(it->second);
            r.meta[it->second] = 1.0;
        }
    }
    return r;
}

}  // namespace

SceneGraph build_scene_graph(const Scene& scene, const ConceptVocabulary& vocab, const GraphConfig& config) {
    config.relations.validate();
    SceneGraph graph;
    graph.dim = vocab.dim();
    graph.family_order.push_back(kCategoryFamily);
    for (const auto& f : config.attribute_families) graph.family_order.push_back(f);

    for (const auto& p : scene.proposals) {
        NodeState node;
        node.object_id = p.id;
        node.embeddings.push_back(category_embedding(p, vocab));
        node.meta.push_back(p.category_dist);
        for (const auto& family : config.attribute_families) {
            FamilyResult r = attribute_slot(scene, p, vocab, family, config.relations.top_k);
            node.embeddings.push_back(std::move(r.embedding));
            node.meta.push_back(std::move(r.meta));
        }
        graph.node_index[p.id] = graph.nodes.size();
        graph.nodes.push_back(std::move(node));
    }

    const bool has_farthest = std::count(config.relations.relation_set.begin(),
                                         config.relations.relation_set.end(), "farthest") > 0;
    const bool has_closest = std::count(config.relations.relation_set.begin(),
                                        config.relations.relation_set.end(), "closest") > 0;
    for (const auto& z : scene.proposals) {
        for (const auto& x : scene.proposals) {
            if (z.id == x.id) continue;
            GraphEdge edge;
            edge.source = z.id;
            edge.target = x.id;
            edge.relation_probs = geometric_relations(scene, config.relations, z.id, x.id);
            if (scene.size() >= 2) {
                if (has_farthest)
                    edge.relation_probs["farthest"] =
                        superlative_probability(scene, z.id, x.id, DistanceKind::Farther, config.relations.top_k);
                if (has_closest)
                    edge.relation_probs["closest"] =
                        superlative_probability(scene, z.id, x.id, DistanceKind::Closer, config.relations.top_k);
            }
            edge.embedding = Eigen::VectorXd::Zero(vocab.dim());
            bool any = false;
            for (const auto& [token, prob] : edge.relation_probs) {
                if (prob > 0.0) any = true;
                edge.embedding += prob * vocab.embedding_or_zero(token);
            }
            if (any) graph.edges.push_back(std::move(edge));
        }
    }
    return graph;
}

std::string graph_to_json(const SceneGraph& graph, bool include_embeddings) {
    json doc;
    doc["dim"] = graph.dim;
    doc["families"] = graph.family_order;
    doc["nodes"] = json::array();
    for (const auto& n : graph.nodes) {
        json jn;
        jn["id"] = n.object_id;
        json props = json::object();
        for (std::size_t j = 0; j < graph.family_order.size(); ++j) {
            json weights = json::object();
            for (const auto& [token, w] : n.meta[j]) weights[token] = w;
            props[graph.family_order[j]] = weights;
        }
        jn["properties"] = props;
        if (include_embeddings) {
            json embs = json::array();
            for (const auto& e : n.embeddings) embs.push_back(std::vector<double>(e.data(), e.data() + e.size()));
            jn["embeddings"] = embs;
        }
        doc["nodes"].push_back(std::move(jn));
    }
    doc["edges"] = json::array();
    for (const auto& e : graph.edges) {
        json je;
        je["source"] = e.source;
        je["target"] = e.target;
        json probs = json::object();
        for (const auto& [token, p] : e.relation_probs) probs[token] = p;
        je["relations"] = probs;
        if (include_embeddings)
            je["embedding"] = std::vector<double>(e.embedding.data(), e.embedding.data() + e.embedding.size());
        doc["edges"].push_back(std::move(je));
    }
    return doc.dump(2);
}

}  // namespace r2g
