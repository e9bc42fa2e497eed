#include "r2g/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "r2g/rng.hpp"

namespace r2g {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kRoomHalf = 4.0;    // room is an 8 m square
constexpr double kStackGap = 0.01;   // meters between stacked surfaces
constexpr double kStackChance = 0.35;

json clues_to_meta_json(const ParsedClues& clues) {
    json j;
    j["target"] = json::object();
    for (const auto& [family, token] : clues.target_props) j["target"][family] = token;
    j["anchor"] = json::object();
    for (const auto& [family, token] : clues.anchor_props) j["anchor"][family] = token;
    if (clues.relation) j["relation"] = *clues.relation;
    return j;
}

ParsedClues clues_from_meta_json(const json& j) {
    ParsedClues clues;
    for (const auto& [family, token] : j.at("target").items()) clues.target_props[family] = token.get<std::string>();
    if (j.contains("anchor"))
        for (const auto& [family, token] : j["anchor"].items()) clues.anchor_props[family] = token.get<std::string>();
    if (j.contains("relation") && j["relation"].is_string()) clues.relation = j["relation"].get<std::string>();
    return clues;
}

std::vector<std::string> pool_categories(const GenConfig& config) {
    const auto& all = default_category_pool();
    std::size_t n = std::min(config.category_pool, all.size());
    return {all.begin(), all.begin() + static_cast<long>(n)};
}

/// GT view of a scene: every category distribution replaced by the one-hot
/// at its GT token.
Scene gt_view(const Scene& scene) {
    Scene out = scene;
    for (auto& p : out.proposals) {
        if (!p.gt_category) fail("MissingGroundTruth", p.id);
        p.category_dist = {{*p.gt_category, 1.0}};
    }
    return out;
}

std::string render_phrase(const std::string& relation_token) {
    const auto& table = relation_surface_phrases();
    auto it = table.find(relation_token);
    return it == table.end() ? relation_token : it->second.front();
}

}  // namespace

void GenConfig::validate() const {
    if (n_scenes == 0) fail("SchemaViolation", "n_scenes must be positive");
    if (min_objects < 1 || max_objects < min_objects) fail("SchemaViolation", "objects_per_scene range empty");
    if (category_pool < 2) fail("SchemaViolation", "category_pool must be >= 2");
}

GenConfig GenConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("FileNotFound", path);
    json doc = json::parse(in);
    GenConfig c;
    c.n_scenes = doc.value("n_scenes", c.n_scenes);
    c.min_objects = doc.value("min_objects", c.min_objects);
    c.max_objects = doc.value("max_objects", c.max_objects);
    c.category_pool = doc.value("category_pool", c.category_pool);
    c.ambiguity_guard = doc.value("ambiguity_guard", c.ambiguity_guard);
    c.attribute_mode = doc.value("attribute_mode", c.attribute_mode);
    c.noisy = doc.value("noisy", c.noisy);
    c.dirichlet_gt = doc.value("dirichlet_gt", c.dirichlet_gt);
    c.dirichlet_spread = doc.value("dirichlet_spread", c.dirichlet_spread);
    c.seed = doc.value("seed", c.seed);
    c.validate();
    return c;
}

const Scene& Dataset::scene(const std::string& id) const {
    for (const auto& s : scenes)
        if (s.id == id) return s;
    fail("UnknownId", "scene '" + id + "'");
}

const std::vector<std::string>& default_category_pool() {
    static const std::vector<std::string> pool = {"couch",  "table", "bag",   "chair",  "lamp",  "bed",
                                                  "desk",   "shelf", "pillow", "cabinet", "plant", "box",
                                                  "monitor", "bench", "door",  "bottle"};
    return pool;
}

ConceptVocabulary build_synthetic_vocabulary(const GenConfig& config) {
    std::vector<std::string> colors;
    for (const auto& [token, _] : named_colors()) colors.push_back(token);
    return ConceptVocabulary::one_hot({
        {kCategoryFamily, pool_categories(config)},
        {"attr:color", colors},
        {"attr:shape", {"round", "square"}},
        {"attr:size", {"biggest", "smallest"}},
        {"attr:height", {"tallest"}},
        {"attr:length", {"longest"}},
        {"attr:width", {"widest"}},
        {"attr:material", {"glass", "metal", "plastic", "wooden"}},
        {"attr:position", {"corner", "middle"}},
        {"attr:relsize", {"large", "small"}},
        {kRelationFamily, RelationConfig::default_relation_set()},
    });
}

Scene generate_scene(const GenConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(seed);
    const auto categories = pool_categories(config);
    const auto& colors = named_colors();

    Scene scene;
    const std::size_t n = config.min_objects + rng.index(config.max_objects - config.min_objects + 1);
    std::vector<std::size_t> floor_objects;
    std::set<std::size_t> used_bases;
    for (std::size_t i = 0; i < n; ++i) {
        ObjectProposal p;
        p.id = "obj_" + std::to_string(i);
        p.gt_category = categories[rng.index(categories.size())];
        const auto& color = colors[rng.index(colors.size())];
        p.mean_rgb = color.second;

        bool stacked = false;
        std::vector<std::size_t> free_bases;
        for (std::size_t fi : floor_objects)
            if (!used_bases.count(fi)) free_bases.push_back(fi);
        if (!free_bases.empty() && rng.uniform() < kStackChance) {
            // place on top of an unused floor object, footprint inside the
            // base and large enough to keep IoU above the support threshold
            std::size_t base_index = free_bases[rng.index(free_bases.size())];
            used_bases.insert(base_index);
            const ObjectProposal& base = scene.proposals[base_index];
            double fx = rng.uniform(0.6, 0.85), fy = rng.uniform(0.6, 0.85);
            p.box.extents = {base.box.extents.x() * fx, base.box.extents.y() * fy, rng.uniform(0.15, 0.5)};
            double ox = rng.uniform(-0.05, 0.05) * base.box.extents.x();
            double oy = rng.uniform(-0.05, 0.05) * base.box.extents.y();
            p.box.center = {base.box.center.x() + ox, base.box.center.y() + oy,
                            base.box.top() + kStackGap + 0.5 * p.box.extents.z()};
            stacked = true;
        }
        if (!stacked) {
            p.box.extents = {rng.uniform(0.4, 1.4), rng.uniform(0.4, 1.4), rng.uniform(0.3, 1.2)};
            bool placed = false;
            for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
                double hx = 0.5 * p.box.extents.x(), hy = 0.5 * p.box.extents.y();
                p.box.center = {rng.uniform(-kRoomHalf + hx, kRoomHalf - hx),
                                rng.uniform(-kRoomHalf + hy, kRoomHalf - hy), 0.5 * p.box.extents.z()};
                placed = true;
                for (std::size_t fi : floor_objects)
                    if (footprint_iou(p.box, scene.proposals[fi].box) > 0.0) {
                        placed = false;
                        break;
                    }
            }
            if (!placed) fail("PlacementFailed", "could not place object " + p.id);
            floor_objects.push_back(i);
        }
        scene.proposals.push_back(std::move(p));
    }

    const auto universe = pool_categories(config);
    for (auto& p : scene.proposals) {
        if (config.noisy) {
            std::vector<double> alpha(universe.size(), config.dirichlet_spread);
            for (std::size_t k = 0; k < universe.size(); ++k)
                if (universe[k] == *p.gt_category) alpha[k] = config.dirichlet_gt;
            auto weights = rng.dirichlet(alpha);
            p.category_dist.clear();
            for (std::size_t k = 0; k < universe.size(); ++k) p.category_dist[universe[k]] = weights[k];
        } else {
            p.category_dist = {{*p.gt_category, 1.0}};
        }
    }
    return scene;
}

std::optional<RefExample> generate_utterance(const Scene& scene, const GenConfig& config, std::uint64_t seed,
                                             const RelationConfig& relations) {
    const Scene gt = gt_view(scene);
    const std::size_t n = gt.size();

    std::map<std::string, std::size_t> category_count;
    for (const auto& p : gt.proposals) ++category_count[*p.gt_category];

    // R(z, x) = 1 per relation token, on the GT one-hot view
    struct Candidate {
        std::size_t anchor, target;
        std::string relation;
    };
    std::vector<Candidate> candidates;
    auto holds = [&](const std::string& token, const std::string& z, const std::string& x) {
        if (token == "farthest")
            return n >= 2 && superlative_probability(gt, z, x, DistanceKind::Farther, 1) > 0.999999;
        if (token == "closest")
            return n >= 2 && superlative_probability(gt, z, x, DistanceKind::Closer, 1) > 0.999999;
        auto rels = geometric_relations(gt, relations, z, x);
        auto it = rels.find(token);
        return it != rels.end() && it->second == 1.0;
    };
    for (std::size_t zi = 0; zi < n; ++zi) {
        const auto& z = gt.proposals[zi];
        if (category_count[*z.gt_category] != 1) continue;  // anchor must be category-unique
        for (std::size_t xi = 0; xi < n; ++xi) {
            if (xi == zi) continue;
            const auto& x = gt.proposals[xi];
            if (*x.gt_category == *z.gt_category) continue;
            for (const auto& token : relations.relation_set) {
                if (!holds(token, z.id, x.id)) continue;
                if (config.ambiguity_guard) {
                    std::size_t satisfying = 0;
                    for (std::size_t wi = 0; wi < n; ++wi) {
                        if (wi == zi) continue;
                        const auto& w = gt.proposals[wi];
                        if (*w.gt_category == *x.gt_category && holds(token, z.id, w.id)) ++satisfying;
                    }
                    if (satisfying != 1) continue;
                }
                candidates.push_back({zi, xi, token});
            }
        }
    }
    if (candidates.empty()) return std::nullopt;

    Rng rng(seed);
    const Candidate& pick = candidates[rng.index(candidates.size())];
    const auto& anchor = gt.proposals[pick.anchor];
    const auto& target = gt.proposals[pick.target];

    RefExample ex;
    ex.scene_id = scene.id;
    ex.target_id = target.id;
    ex.clues.anchor_props["category"] = *anchor.gt_category;
    ex.clues.target_props["category"] = *target.gt_category;
    ex.clues.relation = pick.relation;

    std::string attrs;
    if (config.attribute_mode && rng.uniform() < 0.5) {
        std::string color = nearest_color_token(target.mean_rgb);
        ex.clues.target_props["attr:color"] = color;
        attrs = color + " ";
    }
    ex.utterance = "the " + attrs + *target.gt_category + " " + render_phrase(pick.relation) + " the " +
                   *anchor.gt_category;
    return ex;
}

Dataset generate_dataset(const GenConfig& config) {
    config.validate();
    Dataset dataset;
    dataset.meta = config;
    Rng seeder(config.seed);
    RelationConfig relations;  // defaults
    for (std::size_t i = 0; i < config.n_scenes; ++i) {
        for (int attempt = 0;; ++attempt) {
            if (attempt >= 50) fail("NoUnambiguousTriple", "scene " + std::to_string(i));
            std::uint64_t scene_seed = seeder.next();
            Scene scene;
            try {
                scene = generate_scene(config, scene_seed);
            } catch (const Error&) {
                continue;  // PlacementFailed: resample
            }
            char buf[16];
            std::snprintf(buf, sizeof(buf), "scene_%04zu", i);
            scene.id = buf;
            auto ref = generate_utterance(scene, config, seeder.next(), relations);
            if (!ref) continue;
            ref->scene_id = scene.id;
            dataset.scenes.push_back(std::move(scene));
            dataset.refs.push_back(std::move(*ref));
            break;
        }
    }
    return dataset;
}

void save_dataset(const Dataset& dataset, const ConceptVocabulary& vocab, const std::string& dir) {
    fs::create_directories(fs::path(dir) / "scenes");
    for (const auto& scene : dataset.scenes) save_scene_file(scene, (fs::path(dir) / "scenes" / (scene.id + ".json")).string());

    std::ofstream refs((fs::path(dir) / "refs.jsonl").string());
    for (const auto& ex : dataset.refs) {
        json line;
        line["scene_id"] = ex.scene_id;
        line["utterance"] = ex.utterance;
        line["target_id"] = ex.target_id;
        line["clues"] = clues_to_meta_json(ex.clues);
        refs << line.dump() << "\n";
    }

    json meta;
    meta["n_scenes"] = dataset.meta.n_scenes;
    meta["min_objects"] = dataset.meta.min_objects;
    meta["max_objects"] = dataset.meta.max_objects;
    meta["category_pool"] = dataset.meta.category_pool;
    meta["ambiguity_guard"] = dataset.meta.ambiguity_guard;
    meta["attribute_mode"] = dataset.meta.attribute_mode;
    meta["noisy"] = dataset.meta.noisy;
    meta["dirichlet_gt"] = dataset.meta.dirichlet_gt;
    meta["dirichlet_spread"] = dataset.meta.dirichlet_spread;
    meta["seed"] = dataset.meta.seed;
    std::ofstream mout((fs::path(dir) / "meta.json").string());
    mout << meta.dump(2) << "\n";

    vocab.save_dir((fs::path(dir) / "vocab").string());
}

Dataset load_dataset(const std::string& dir) {
    Dataset dataset;
    std::ifstream min((fs::path(dir) / "meta.json").string());
    if (min) {
        json meta = json::parse(min);
        dataset.meta.n_scenes = meta.value("n_scenes", dataset.meta.n_scenes);
        dataset.meta.min_objects = meta.value("min_objects", dataset.meta.min_objects);
        dataset.meta.max_objects = meta.value("max_objects", dataset.meta.max_objects);
        dataset.meta.category_pool = meta.value("category_pool", dataset.meta.category_pool);
        dataset.meta.ambiguity_guard = meta.value("ambiguity_guard", true);
        dataset.meta.attribute_mode = meta.value("attribute_mode", false);
        dataset.meta.noisy = meta.value("noisy", false);
        dataset.meta.dirichlet_gt = meta.value("dirichlet_gt", 5.0);
        dataset.meta.dirichlet_spread = meta.value("dirichlet_spread", 0.5);
        dataset.meta.seed = meta.value("seed", 1);
    }

    std::vector<fs::path> scene_files;
    for (const auto& entry : fs::directory_iterator(fs::path(dir) / "scenes"))
        if (entry.path().extension() == ".json") scene_files.push_back(entry.path());
    std::sort(scene_files.begin(), scene_files.end());
    for (const auto& path : scene_files) dataset.scenes.push_back(load_scene_file(path.string()));

    std::ifstream refs((fs::path(dir) / "refs.jsonl").string());
    if (!refs) fail("FileNotFound", dir + "/refs.jsonl");
    std::string line;
    while (std::getline(refs, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        RefExample ex;
        ex.scene_id = j.at("scene_id").get<std::string>();
        ex.utterance = j.at("utterance").get<std::string>();
        ex.target_id = j.at("target_id").get<std::string>();
        ex.clues = clues_from_meta_json(j.at("clues"));
        dataset.refs.push_back(std::move(ex));
    }
    return dataset;
}

EvalReport evaluate(const Dataset& dataset, const ConceptVocabulary& vocab, const EngineConfig& engine) {
    if (dataset.refs.empty()) fail("SchemaViolation", "empty dataset");
    const ProgramMode mode =
        engine.mode.value_or(dataset.meta.attribute_mode ? ProgramMode::Attribute : ProgramMode::RelationOnly);
    const std::size_t n_props = mode == ProgramMode::Attribute ? engine.graph.property_count() : 1;
    const WeightBundle weights =
        engine.weights ? *engine.weights : WeightBundle::symbolic_default(vocab.dim(), n_props);

    std::map<std::string, SceneGraph> graphs;
    for (const auto& scene : dataset.scenes) graphs.emplace(scene.id, build_scene_graph(scene, vocab, engine.graph));

    EvalReport report;
    double loss_sum = 0.0;
    for (const auto& ex : dataset.refs) {
        ExampleRecord rec;
        rec.scene_id = ex.scene_id;
        rec.utterance = ex.utterance;
        rec.gt_id = ex.target_id;
        rec.relation = ex.clues.relation.value_or("(none)");
        const SceneGraph& graph = graphs.at(ex.scene_id);
        try {
            ParsedClues clues = parse_template(ex.utterance, vocab);
            InstructionProgram program =
                clues_to_instructions(clues, vocab, mode, engine.graph.attribute_families);
            GroundingResult result = ground(graph, program, weights);
            rec.predicted_id = result.selected;
            rec.correct = result.selected == ex.target_id;
            rec.ref_loss = reference_loss(graph, result.trace.rounds.back().attention_out, ex.target_id);
        } catch (const Error& e) {
            rec.parse_error = true;
            rec.correct = false;
            rec.predicted_id = "";
            rec.ref_loss = std::log(static_cast<double>(graph.nodes.size()));
        }
        loss_sum += rec.ref_loss;
        auto& [correct, total] = report.per_relation[rec.relation];
        ++total;
        if (rec.correct) {
            ++correct;
            ++report.n_correct;
        }
        report.records.push_back(std::move(rec));
    }
    std::stable_sort(report.records.begin(), report.records.end(), [](const auto& a, const auto& b) {
        if (a.scene_id != b.scene_id) return a.scene_id < b.scene_id;
        return a.utterance < b.utterance;
    });
    report.n_examples = report.records.size();
    report.accuracy = static_cast<double>(report.n_correct) / static_cast<double>(report.n_examples);
    report.mean_reference_loss = loss_sum / static_cast<double>(report.n_examples);
    return report;
}

std::string report_to_json(const EvalReport& report) {
    json doc;
    doc["n_examples"] = report.n_examples;
    doc["n_correct"] = report.n_correct;
    doc["accuracy"] = report.accuracy;
    doc["mean_reference_loss"] = report.mean_reference_loss;
    json per = json::object();
    for (const auto& [relation, counts] : report.per_relation) {
        per[relation] = {{"correct", counts.first},
                         {"total", counts.second},
                         {"accuracy", static_cast<double>(counts.first) / static_cast<double>(counts.second)}};
    }
    doc["per_relation"] = per;
    doc["records"] = json::array();
    for (const auto& rec : report.records) {
        json jr;
        jr["scene_id"] = rec.scene_id;
        jr["utterance"] = rec.utterance;
        jr["predicted_id"] = rec.predicted_id;
        jr["gt_id"] = rec.gt_id;
        jr["correct"] = rec.correct;
        if (rec.parse_error) jr["parse_error"] = true;
        jr["reference_loss"] = rec.ref_loss;
        doc["records"].push_back(std::move(jr));
    }
    return doc.dump(2);
}

std::vector<SweepPoint> sweep_gt_proportion(const Dataset& dataset, const ConceptVocabulary& vocab,
                                            const EngineConfig& engine, const std::vector<double>& proportions,
                                            std::uint64_t seed) {
    std::vector<SweepPoint> curve;
    for (std::size_t pi = 0; pi < proportions.size(); ++pi) {
        Dataset adjusted = dataset;
        for (std::size_t si = 0; si < adjusted.scenes.size(); ++si)
            adjusted.scenes[si] = apply_ground_truth(adjusted.scenes[si], proportions[pi], seed + si);
        curve.push_back({proportions[pi], evaluate(adjusted, vocab, engine).accuracy});
    }
    return curve;
}

std::vector<SweepPoint> sweep_top_k(const Dataset& dataset, const ConceptVocabulary& vocab,
                                    const EngineConfig& engine, const std::vector<int>& ks) {
    std::vector<SweepPoint> table;
    for (int k : ks) {
        EngineConfig variant = engine;
        variant.graph.relations.top_k = k;
        table.push_back({static_cast<double>(k), evaluate(dataset, vocab, variant).accuracy});
    }
    return table;
}

std::string sweep_to_csv(const std::vector<SweepPoint>& points, const std::string& x_name) {
    std::ostringstream oss;
    oss << x_name << ",accuracy\n";
    for (const auto& p : points) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6g,%.6g\n", p.x, p.accuracy);
        oss << buf;
    }
    return oss.str();
}

}  // namespace r2g
