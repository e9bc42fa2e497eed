#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "r2g/graph.hpp"
#include "r2g/scene.hpp"
#include "r2g/vocab.hpp"

namespace r2g::testing {

/// One-hot vocabulary over a small fixed inventory shared by most tests:
/// categories, relations (the default set), and a color family.
inline ConceptVocabulary small_vocab() {
    return ConceptVocabulary::one_hot({
        {kCategoryFamily, {"bag", "chair", "couch", "lamp", "table"}},
        {"attr:color", {"black", "red", "white"}},
        {kRelationFamily, RelationConfig::default_relation_set()},
    });
}

inline ObjectProposal make_object(std::string id, Eigen::Vector3d center, Eigen::Vector3d extents,
                                  std::map<std::string, double> dist, double yaw = 0.0) {
    ObjectProposal p;
    p.id = std::move(id);
    p.box.center = std::move(center);
    p.box.extents = std::move(extents);
    p.box.yaw = yaw;
    p.category_dist = dist;
    double best = -1.0;
    for (const auto& [token, prob] : dist)
        if (prob > best) {
            best = prob;
            p.gt_category = token;
        }
    return p;
}

inline Scene make_scene(std::string id, std::vector<ObjectProposal> objects) {
    Scene scene;
    scene.id = std::move(id);
    scene.proposals = std::move(objects);
    return scene;
}

/// Bag box resting on a couch box: vertical gap 0.01 m, horizontal
/// footprint IoU 0.6. The canonical support-relation fixture.
inline Scene couch_bag_scene() {
    auto couch = make_object("couch_1", {0, 0, 0.4}, {2.0, 0.9, 0.8}, {{"couch", 1.0}});
    auto bag = make_object("bag_1", {0, 0, 0.81 + 0.15}, {1.5, 0.72, 0.3}, {{"bag", 1.0}});
    return make_scene("couch_bag", {couch, bag});
}

}  // namespace r2g::testing
