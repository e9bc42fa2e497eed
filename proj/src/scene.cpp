#include "r2g/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "r2g/rng.hpp"

namespace r2g {

using nlohmann::json;

namespace {

constexpr double kDistTolerance = 1e-6;

Eigen::Vector3d parse_vec3(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3) fail("SchemaViolation", path + " must be a 3-array");
    Eigen::Vector3d v;
    for (int i = 0; i < 3; ++i) {
        if (!j[i].is_number()) fail("SchemaViolation", path + " must be numeric");
        v[i] = j[i].get<double>();
    }
    return v;
}

std::map<std::string, double> parse_dist(const json& j, const std::string& object_id, const std::string& path) {
    if (!j.is_object()) fail("SchemaViolation", path + " must be an object");
    std::map<std::string, double> dist;
    double sum = 0.0;
    for (const auto& [token, prob] : j.items()) {
        if (!prob.is_number()) fail("SchemaViolation", path + "." + token + " must be numeric");
        double p = prob.get<double>();
        if (p < 0.0 || !std::isfinite(p)) fail("DistributionInvalid", object_id);
        dist[token] = p;
        sum += p;
    }
    if (std::abs(sum - 1.0) > kDistTolerance) fail("DistributionInvalid", object_id);
    if (sum > 0.0)
        for (auto& [_, p] : dist) p /= sum;
    return dist;
}

json dist_to_json(const std::map<std::string, double>& dist) {
    json j = json::object();
    for (const auto& [token, p] : dist) j[token] = p;
    return j;
}

}  // namespace

std::array<Eigen::Vector2d, 4> BoundingBox::footprint() const {
    double c = std::cos(yaw), s = std::sin(yaw);
    double hx = 0.5 * extents.x(), hy = 0.5 * extents.y();
    std::array<Eigen::Vector2d, 4> corners;
    const double sx[4] = {+1, -1, -1, +1};
    const double sy[4] = {+1, +1, -1, -1};
    for (int i = 0; i < 4; ++i) {
        double lx = sx[i] * hx, ly = sy[i] * hy;
        corners[i] = Eigen::Vector2d(center.x() + c * lx - s * ly, center.y() + s * lx + c * ly);
    }
    return corners;
}

const ObjectProposal& Scene::proposal(const std::string& pid) const {
    int i = index_of(pid);
    if (i < 0) fail("UnknownId", "'" + pid + "' not in scene " + id);
    return proposals[static_cast<std::size_t>(i)];
}

int Scene::index_of(const std::string& pid) const {
    for (std::size_t i = 0; i < proposals.size(); ++i)
        if (proposals[i].id == pid) return static_cast<int>(i);
    return -1;
}

bool Scene::has_full_ground_truth() const {
    return std::all_of(proposals.begin(), proposals.end(),
                       [](const ObjectProposal& p) { return p.gt_category.has_value(); });
}

std::vector<std::string> Scene::category_universe() const {
    std::set<std::string> tokens;
    for (const auto& p : proposals) {
        for (const auto& [token, _] : p.category_dist) tokens.insert(token);
        if (p.gt_category) tokens.insert(*p.gt_category);
    }
    return {tokens.begin(), tokens.end()};
}

Scene load_scene_json(const std::string& document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        fail("SchemaViolation", e.what());
    }
    if (!doc.is_object() || !doc.contains("objects") || !doc["objects"].is_array())
        fail("SchemaViolation", "scene document must contain an 'objects' array");

    Scene scene;
    scene.id = doc.value("id", "");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < doc["objects"].size(); ++i) {
        const json& o = doc["objects"][i];
        std::string path = "objects[" + std::to_string(i) + "]";
        if (!o.is_object()) fail("SchemaViolation", path);
        ObjectProposal p;
        p.id = o.value("id", "");
        if (p.id.empty()) fail("SchemaViolation", path + ".id missing");
        if (!ids.insert(p.id).second) fail("DuplicateProposalId", p.id);

        p.box.center = parse_vec3(o.at("center"), path + ".center");
        p.box.extents = parse_vec3(o.at("extents"), path + ".extents");
        if ((p.box.extents.array() <= 0.0).any()) fail("SchemaViolation", path + ".extents must be positive");
        p.box.yaw = o.value("yaw", 0.0);
        if (p.box.yaw < -M_PI - 1e-12 || p.box.yaw > M_PI + 1e-12)
            fail("SchemaViolation", path + ".yaw must lie in [-pi, pi]");
        if (o.contains("mean_rgb")) {
            p.mean_rgb = parse_vec3(o["mean_rgb"], path + ".mean_rgb");
            if ((p.mean_rgb.array() < 0.0).any() || (p.mean_rgb.array() > 1.0).any())
                fail("SchemaViolation", path + ".mean_rgb components must lie in [0,1]");
        }
        p.category_dist = parse_dist(o.at("category_dist"), p.id, path + ".category_dist");
        if (o.contains("shape_dist")) p.shape_dist = parse_dist(o["shape_dist"], p.id, path + ".shape_dist");
        if (o.contains("attrs"))
            for (const auto& [family, token] : o["attrs"].items()) p.extra_attrs[family] = token.get<std::string>();
        if (o.contains("gt_category")) p.gt_category = o["gt_category"].get<std::string>();
        scene.proposals.push_back(std::move(p));
    }
    if (scene.proposals.empty()) fail("SchemaViolation", "scene has no objects");
    return scene;
}

Scene load_scene_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("FileNotFound", path);
    std::ostringstream oss;
    oss << in.rdbuf();
    return load_scene_json(oss.str());
}

std::string scene_to_json(const Scene& scene) {
    json doc;
    doc["id"] = scene.id;
    doc["objects"] = json::array();
    for (const auto& p : scene.proposals) {
        json o;
        o["id"] = p.id;
        o["center"] = {p.box.center.x(), p.box.center.y(), p.box.center.z()};
        o["extents"] = {p.box.extents.x(), p.box.extents.y(), p.box.extents.z()};
        o["yaw"] = p.box.yaw;
        o["mean_rgb"] = {p.mean_rgb.x(), p.mean_rgb.y(), p.mean_rgb.z()};
        o["category_dist"] = dist_to_json(p.category_dist);
        if (p.shape_dist) o["shape_dist"] = dist_to_json(*p.shape_dist);
        if (!p.extra_attrs.empty()) {
            json attrs = json::object();
            for (const auto& [family, token] : p.extra_attrs) attrs[family] = token;
            o["attrs"] = attrs;
        }
        if (p.gt_category) o["gt_category"] = *p.gt_category;
        doc["objects"].push_back(std::move(o));
    }
    return doc.dump(2);
}

void save_scene_file(const Scene& scene, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("FileNotFound", path);
    out << scene_to_json(scene) << "\n";
}

Scene apply_ground_truth(const Scene& scene, double proportion, std::uint64_t seed) {
    if (!scene.has_full_ground_truth()) fail("MissingGroundTruth", "scene " + scene.id);
    if (proportion < 0.0 || proportion > 1.0) fail("SchemaViolation", "proportion must lie in [0,1]");

    const std::size_t n = scene.proposals.size();
    const auto n_correct = static_cast<std::size_t>(std::floor(proportion * static_cast<double>(n) + 0.5));
    std::vector<std::string> pool = scene.category_universe();

    Rng rng(seed);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);

    Scene out = scene;
    for (std::size_t rank = 0; rank < n; ++rank) {
        ObjectProposal& p = out.proposals[order[rank]];
        std::string token = *p.gt_category;
        if (rank >= n_correct) {
            // one-hot at a uniformly random wrong category
            std::vector<std::string> wrong;
            for (const auto& t : pool)
                if (t != token) wrong.push_back(t);
            if (!wrong.empty()) token = wrong[rng.index(wrong.size())];
        }
        p.category_dist = {{token, 1.0}};
    }
    return out;
}

}  // namespace r2g
