#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "r2g/graph.hpp"
#include "r2g/parser.hpp"
#include "r2g/reasoning.hpp"
#include "r2g/scene.hpp"
#include "r2g/vocab.hpp"

namespace r2g {

struct GenConfig {
    std::size_t n_scenes = 10;
    std::size_t min_objects = 4;
    std::size_t max_objects = 12;
    std::size_t category_pool = 8;  // drawn from default_category_pool()
    bool ambiguity_guard = true;    // unique consistent target guaranteed
    bool attribute_mode = false;    // color attributes rendered into utterances
    bool noisy = false;             // Dirichlet-perturbed category distributions
    double dirichlet_gt = 5.0;
    double dirichlet_spread = 0.5;
    std::uint64_t seed = 1;

    void validate() const;
    static GenConfig from_json_file(const std::string& path);
};

struct RefExample {
    std::string scene_id;
    std::string utterance;
    std::string target_id;
    ParsedClues clues;
};

struct Dataset {
    std::vector<Scene> scenes;
    std::vector<RefExample> refs;
    GenConfig meta;

    const Scene& scene(const std::string& id) const;
};

const std::vector<std::string>& default_category_pool();

/// Orthonormal one-hot vocabulary over the harness concept inventory
/// (categories, colors, shapes, superlatives, materials, positions,
/// relative sizes, relations).
ConceptVocabulary build_synthetic_vocabulary(const GenConfig& config);

/// Places axis-aligned boxes on a ground plane without interpenetration
/// (rejection sampling, <= 1000 attempts per object), occasionally stacking
/// one object on another, and assigns GT categories and colors.
Scene generate_scene(const GenConfig& config, std::uint64_t seed);

/// Template utterance for the scene. With the ambiguity guard on, the
/// chosen (anchor, relation, target) triple has a category-unique anchor
/// and exactly one relation-satisfying object of the target category.
/// Returns nullopt when no such triple exists (NoUnambiguousTriple).
std::optional<RefExample> generate_utterance(const Scene& scene, const GenConfig& config, std::uint64_t seed,
                                             const RelationConfig& relations);

Dataset generate_dataset(const GenConfig& config);

/// Layout: <dir>/meta.json, <dir>/scenes/<id>.json, <dir>/refs.jsonl,
/// <dir>/vocab/{manifest.json, embeddings.txt}.
void save_dataset(const Dataset& dataset, const ConceptVocabulary& vocab, const std::string& dir);
Dataset load_dataset(const std::string& dir);

struct EngineConfig {
    GraphConfig graph;
    std::optional<WeightBundle> weights;  // symbolic defaults when absent
    std::optional<ProgramMode> mode;      // from dataset meta when absent
};

struct ExampleRecord {
    std::string scene_id;
    std::string utterance;
    std::string predicted_id;
    std::string gt_id;
    bool correct = false;
    bool parse_error = false;
    std::string relation;  // "(none)" when the utterance has no relation clue
    double ref_loss = 0.0;
};

struct EvalReport {
    std::size_t n_examples = 0;
    std::size_t n_correct = 0;
    double accuracy = 0.0;
    double mean_reference_loss = 0.0;
    std::map<std::string, std::pair<std::size_t, std::size_t>> per_relation;  // correct / total
    std::vector<ExampleRecord> records;
};

EvalReport evaluate(const Dataset& dataset, const ConceptVocabulary& vocab, const EngineConfig& engine);

std::string report_to_json(const EvalReport& report);

struct SweepPoint {
    double x = 0.0;  // proportion or K
    double accuracy = 0.0;
};

/// GT-proportion ablation: apply_ground_truth at each proportion, then
/// evaluate.
std::vector<SweepPoint> sweep_gt_proportion(const Dataset& dataset, const ConceptVocabulary& vocab,
                                            const EngineConfig& engine, const std::vector<double>& proportions,
                                            std::uint64_t seed);

/// Top-K ablation: rebuild graphs at each K and evaluate.
std::vector<SweepPoint> sweep_top_k(const Dataset& dataset, const ConceptVocabulary& vocab,
                                    const EngineConfig& engine, const std::vector<int>& ks);

std::string sweep_to_csv(const std::vector<SweepPoint>& points, const std::string& x_name);

}  // namespace r2g
