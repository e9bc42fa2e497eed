#include <doctest.h>

#include <filesystem>
#include <set>

#include "helpers.hpp"
#include "r2g/harness.hpp"

using namespace r2g;
using namespace r2g::testing;

namespace {

GenConfig small_config(std::uint64_t seed, std::size_t n_scenes = 5) {
    GenConfig config;
    config.n_scenes = n_scenes;
    config.min_objects = 4;
    config.max_objects = 8;
    config.seed = seed;
    return config;
}

/// Exhaustive consistency scan: objects of the target category (GT view)
/// satisfying the clue relation to the anchor.
std::vector<std::string> satisfying_targets(const Scene& scene, const RefExample& ex,
                                            const RelationConfig& relations) {
    const std::string& target_cat = ex.clues.target_props.at("category");
    const std::string& anchor_cat = ex.clues.anchor_props.at("category");
    std::string anchor_id;
    for (const auto& p : scene.proposals)
        if (p.gt_category == anchor_cat) anchor_id = p.id;
    std::vector<std::string> hits;
    for (const auto& p : scene.proposals) {
        if (p.gt_category != target_cat || p.id == anchor_id) continue;
        const std::string& rel = *ex.clues.relation;
        double v = 0.0;
        if (rel == "farthest" || rel == "closest") {
            v = superlative_probability(scene, anchor_id, p.id,
                                        rel == "farthest" ? DistanceKind::Farther : DistanceKind::Closer,
                                        relations.top_k);
        } else {
            v = geometric_relations(scene, relations, anchor_id, p.id).at(rel);
        }
        if (v > 0.5) hits.push_back(p.id);
    }
    return hits;
}

}  // namespace

TEST_CASE("generated scenes validate and are reproducible") {
    GenConfig config = small_config(1);
    Scene a = generate_scene(config, 11);
    Scene b = generate_scene(config, 11);
    CHECK(scene_to_json(a) == scene_to_json(b));
    CHECK(a.size() >= config.min_objects);
    CHECK(a.size() <= config.max_objects);
    for (const auto& p : a.proposals) CHECK(p.gt_category.has_value());
    // serialization round-trips through the scene validator
    Scene reloaded = load_scene_json(scene_to_json(a));
    CHECK(reloaded.size() == a.size());
}

TEST_CASE("generated boxes do not interpenetrate in the horizontal plane") {
    GenConfig config = small_config(5);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Scene scene = generate_scene(config, seed);
        for (std::size_t i = 0; i < scene.size(); ++i)
            for (std::size_t j = i + 1; j < scene.size(); ++j) {
                const auto& a = scene.proposals[i].box;
                const auto& b = scene.proposals[j].box;
                bool vertical_overlap = std::min(a.top(), b.top()) - std::max(a.bottom(), b.bottom()) > 1e-9;
                if (vertical_overlap) CHECK(footprint_iou(a, b) < 1e-9);
            }
    }
}

TEST_CASE("dataset generation round-trips through parse_template") {
    GenConfig config = small_config(42, 30);
    Dataset dataset = generate_dataset(config);
    auto vocab = build_synthetic_vocabulary(config);
    REQUIRE(dataset.refs.size() == dataset.scenes.size());
    for (const auto& ex : dataset.refs) {
        ParsedClues reparsed = parse_template(ex.utterance, vocab);
        CHECK(reparsed == ex.clues);
    }
}

TEST_CASE("ambiguity guard: gold target is the unique satisfying object") {
    GenConfig config = small_config(7, 25);
    Dataset dataset = generate_dataset(config);
    RelationConfig relations;
    for (const auto& ex : dataset.refs) {
        auto hits = satisfying_targets(dataset.scene(ex.scene_id), ex, relations);
        REQUIRE(hits.size() == 1);
        CHECK(hits[0] == ex.target_id);
    }
}

TEST_CASE("dataset save and load round-trip") {
    auto dir = std::filesystem::temp_directory_path() / "r2g_ds_rt";
    std::filesystem::remove_all(dir);
    GenConfig config = small_config(3);
    Dataset dataset = generate_dataset(config);
    save_dataset(dataset, build_synthetic_vocabulary(config), dir.string());
    Dataset reloaded = load_dataset(dir.string());
    REQUIRE(reloaded.scenes.size() == dataset.scenes.size());
    REQUIRE(reloaded.refs.size() == dataset.refs.size());
    for (std::size_t i = 0; i < dataset.refs.size(); ++i) {
        CHECK(reloaded.refs[i].utterance == dataset.refs[i].utterance);
        CHECK(reloaded.refs[i].target_id == dataset.refs[i].target_id);
        CHECK(reloaded.refs[i].clues == dataset.refs[i].clues);
    }
    for (const auto& scene : dataset.scenes)
        CHECK(scene_to_json(reloaded.scene(scene.id)) == scene_to_json(scene));
    std::filesystem::remove_all(dir);
}

TEST_CASE("evaluate: solved dataset scores 1.0 with a full report") {
    GenConfig config = small_config(9, 10);
    Dataset dataset = generate_dataset(config);
    auto vocab = build_synthetic_vocabulary(config);
    EvalReport report = evaluate(dataset, vocab, EngineConfig{});
    CHECK(report.n_examples == 10);
    CHECK(report.accuracy == 1.0);
    CHECK(report.n_correct == 10);
    CHECK(report.records.size() == 10);
    std::size_t per_rel_total = 0;
    for (const auto& [rel, counts] : report.per_relation) per_rel_total += counts.second;
    CHECK(per_rel_total == report.n_examples);
    for (const auto& rec : report.records) {
        CHECK(rec.correct);
        CHECK(!rec.parse_error);
        CHECK(rec.predicted_id == rec.gt_id);
    }
}

TEST_CASE("evaluate flags unparseable utterances as incorrect") {
    GenConfig config = small_config(13, 2);
    Dataset dataset = generate_dataset(config);
    dataset.refs[0].utterance = "zzz qqq www";
    auto vocab = build_synthetic_vocabulary(config);
    EvalReport report = evaluate(dataset, vocab, EngineConfig{});
    CHECK(report.n_correct == 1);
    int flagged = 0;
    for (const auto& rec : report.records)
        if (rec.parse_error) {
            ++flagged;
            CHECK(!rec.correct);
        }
    CHECK(flagged == 1);
}

TEST_CASE("evaluation is deterministic") {
    GenConfig config = small_config(17, 8);
    config.noisy = true;
    Dataset dataset = generate_dataset(config);
    auto vocab = build_synthetic_vocabulary(config);
    auto r1 = report_to_json(evaluate(dataset, vocab, EngineConfig{}));
    auto r2 = report_to_json(evaluate(dataset, vocab, EngineConfig{}));
    CHECK(r1 == r2);
}

TEST_CASE("gt sweep: proportion 1.0 matches the plain evaluation") {
    GenConfig config = small_config(23, 12);
    config.noisy = true;
    Dataset dataset = generate_dataset(config);
    auto vocab = build_synthetic_vocabulary(config);
    auto curve = sweep_gt_proportion(dataset, vocab, EngineConfig{}, {0.0, 0.5, 1.0}, 99);
    REQUIRE(curve.size() == 3);
    CHECK(curve[2].accuracy >= curve[0].accuracy);

    // proportion 1.0 restores one-hot GT, so it equals the GT-suite run
    GenConfig clean = config;
    clean.noisy = false;
    Dataset gt_dataset = generate_dataset(clean);
    EvalReport gt_report = evaluate(gt_dataset, vocab, EngineConfig{});
    CHECK(curve[2].accuracy == doctest::Approx(gt_report.accuracy));

    auto again = sweep_gt_proportion(dataset, vocab, EngineConfig{}, {0.0, 0.5, 1.0}, 99);
    for (std::size_t i = 0; i < curve.size(); ++i) CHECK(curve[i].accuracy == again[i].accuracy);
}

TEST_CASE("top-k sweep: one-hot dataset is K-invariant") {
    GenConfig config = small_config(29, 10);
    Dataset dataset = generate_dataset(config);
    auto vocab = build_synthetic_vocabulary(config);
    auto table = sweep_top_k(dataset, vocab, EngineConfig{}, {1, 2, 4});
    REQUIRE(table.size() == 3);
    CHECK(table[0].accuracy == table[1].accuracy);
    CHECK(table[1].accuracy == table[2].accuracy);
    std::string csv = sweep_to_csv(table, "K");
    CHECK(csv.find("K,accuracy") == 0);
}

TEST_CASE("gen config validation") {
    GenConfig config;
    config.min_objects = 9;
    config.max_objects = 4;
    CHECK_THROWS_AS(config.validate(), Error);
    GenConfig zero;
    zero.n_scenes = 0;
    CHECK_THROWS_AS(zero.validate(), Error);
}
