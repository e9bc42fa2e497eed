#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "r2g/errors.hpp"

namespace r2g {

/// Gravity-aligned oriented box: z is up, orientation is yaw-only.
struct BoundingBox {
    Eigen::Vector3d center{0, 0, 0};
    Eigen::Vector3d extents{1, 1, 1};  // full side lengths, meters
    double yaw = 0.0;                  // radians, in [-pi, pi]

    double bottom() const { return center.z() - 0.5 * extents.z(); }
    double top() const { return center.z() + 0.5 * extents.z(); }
    double volume() const { return extents.x() * extents.y() * extents.z(); }
    double diagonal() const { return extents.norm(); }
    /// Footprint corners in the xy plane, counter-clockwise.
    std::array<Eigen::Vector2d, 4> footprint() const;
};

struct ObjectProposal {
    std::string id;
    BoundingBox box;
    Eigen::Vector3d mean_rgb{0.5, 0.5, 0.5};        // each in [0,1]
    std::map<std::string, double> category_dist;     // token -> probability
    std::optional<std::map<std::string, double>> shape_dist;
    std::map<std::string, std::string> extra_attrs;  // family name -> token (e.g. material)
    std::optional<std::string> gt_category;
};

struct Scene {
    std::string id;
    std::vector<ObjectProposal> proposals;

    const ObjectProposal& proposal(const std::string& id) const;
    int index_of(const std::string& id) const;  // -1 if absent
    std::size_t size() const { return proposals.size(); }
    bool has_full_ground_truth() const;

    /// Sorted union of category tokens seen in distributions and GT labels.
    std::vector<std::string> category_universe() const;
};

/// Parses and validates a scene JSON document. Distributions within 1e-6
/// of unit mass are renormalized, anything further off is rejected.
Scene load_scene_json(const std::string& document);
Scene load_scene_file(const std::string& path);

std::string scene_to_json(const Scene& scene);
void save_scene_file(const Scene& scene, const std::string& path);

/// GT-proportion ablation: a seeded random floor(p*N + 0.5)-sized subset of
/// proposals gets a one-hot distribution at its GT category; the rest get a
/// one-hot at a uniformly random wrong category.
Scene apply_ground_truth(const Scene& scene, double proportion, std::uint64_t seed);

}  // namespace r2g
