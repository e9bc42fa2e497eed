#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "r2g/harness.hpp"
#include "r2g/llm_client.hpp"

namespace {

using namespace r2g;

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) fail("FileNotFound", path);
    out << content;
}

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    std::istringstream iss(csv);
    std::string item;
    while (std::getline(iss, item, ',')) out.push_back(std::stoi(item));
    return out;
}

ParsedClues parse_any(const std::string& utterance, const std::string& mode, const ConceptVocabulary& vocab,
                      std::vector<std::string>* warnings) {
    if (mode == "llm") {
        LlmParser parser(LlmConfig::from_env());
        return parser.parse(utterance, vocab, warnings);
    }
    return parse_template(utterance, vocab);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"reasoning-based 3D referential grounding over concept scene graphs"};
    app.require_subcommand(1);

    // ---- oracle ----
    auto* oracle = app.add_subcommand("oracle", "superlative relation probability evaluators");
    std::string o_scene, o_anchor, o_target, o_kind = "farthest", o_method = "product";
    std::size_t o_samples = 100000;
    std::uint64_t o_seed = 1;
    int o_topk = 0;  // 0 = untruncated
    oracle->add_option("--scene", o_scene)->required();
    oracle->add_option("--anchor", o_anchor)->required();
    oracle->add_option("--target", o_target)->required();
    oracle->add_option("--kind", o_kind)->check(CLI::IsMember({"farthest", "closest"}));
    oracle->add_option("--method", o_method)->check(CLI::IsMember({"product", "enumerate", "mc"}));
    oracle->add_option("--samples", o_samples);
    oracle->add_option("--seed", o_seed);
    oracle->add_option("--top-k", o_topk);

    // ---- graph ----
    auto* graph_cmd = app.add_subcommand("graph", "build and emit the scene graph as JSON");
    std::string g_scene, g_vocab, g_out;
    bool g_embeddings = false;
    int g_topk = 2;
    graph_cmd->add_option("--scene", g_scene)->required();
    graph_cmd->add_option("--vocab", g_vocab)->required();
    graph_cmd->add_option("--out", g_out)->required();
    graph_cmd->add_flag("--embeddings", g_embeddings);
    graph_cmd->add_option("--top-k", g_topk);

    // ---- parse ----
    auto* parse_cmd = app.add_subcommand("parse", "parse an utterance into clues and instructions");
    std::string p_utterance, p_vocab, p_mode = "template", p_emit;
    bool p_attr_mode = false;
    parse_cmd->add_option("--utterance", p_utterance)->required();
    parse_cmd->add_option("--vocab", p_vocab)->required();
    parse_cmd->add_option("--mode", p_mode)->check(CLI::IsMember({"template", "llm"}));
    parse_cmd->add_option("--emit-program", p_emit);
    parse_cmd->add_flag("--attribute-mode", p_attr_mode);

    // ---- ground ----
    auto* ground_cmd = app.add_subcommand("ground", "localize the referred object in a scene");
    std::string gr_scene, gr_utterance, gr_vocab, gr_mode = "template", gr_weights, gr_trace;
    bool gr_attr_mode = false;
    int gr_topk = 2;
    ground_cmd->add_option("--scene", gr_scene)->required();
    ground_cmd->add_option("--utterance", gr_utterance)->required();
    ground_cmd->add_option("--vocab", gr_vocab)->required();
    ground_cmd->add_option("--mode", gr_mode)->check(CLI::IsMember({"template", "llm"}));
    ground_cmd->add_option("--weights", gr_weights);
    ground_cmd->add_option("--trace", gr_trace);
    ground_cmd->add_flag("--attribute-mode", gr_attr_mode);
    ground_cmd->add_option("--top-k", gr_topk);

    // ---- gen ----
    auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic scene/utterance dataset");
    std::string gen_config, gen_out;
    gen_cmd->add_option("--config", gen_config)->required();
    gen_cmd->add_option("--out", gen_out)->required();

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "evaluate grounding accuracy over a dataset");
    std::string e_dataset, e_vocab, e_weights, e_report;
    int e_topk = 2;
    eval_cmd->add_option("--dataset", e_dataset)->required();
    eval_cmd->add_option("--vocab", e_vocab);
    eval_cmd->add_option("--weights", e_weights);
    eval_cmd->add_option("--report", e_report)->required();
    eval_cmd->add_option("--top-k", e_topk);

    // ---- sweep-gt ----
    auto* sgt_cmd = app.add_subcommand("sweep-gt", "accuracy vs GT-category proportion");
    std::string sgt_dataset, sgt_vocab, sgt_out;
    int sgt_points = 11;
    std::uint64_t sgt_seed = 7;
    sgt_cmd->add_option("--dataset", sgt_dataset)->required();
    sgt_cmd->add_option("--vocab", sgt_vocab);
    sgt_cmd->add_option("--points", sgt_points);
    sgt_cmd->add_option("--seed", sgt_seed);
    sgt_cmd->add_option("--out", sgt_out)->required();

    // ---- sweep-k ----
    auto* sk_cmd = app.add_subcommand("sweep-k", "accuracy vs top-K category truncation");
    std::string sk_dataset, sk_vocab, sk_out, sk_ks = "1,2";
    sk_cmd->add_option("--dataset", sk_dataset)->required();
    sk_cmd->add_option("--vocab", sk_vocab);
    sk_cmd->add_option("--ks", sk_ks);
    sk_cmd->add_option("--out", sk_out)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (oracle->parsed()) {
            Scene scene = load_scene_file(o_scene);
            int k = o_topk > 0 ? o_topk : static_cast<int>(scene.category_universe().size());
            DistanceKind kind = parse_distance_kind(o_kind);
            if (o_method == "product") {
                std::printf("%.12g\n", superlative_probability(scene, o_anchor, o_target, kind, k));
            } else if (o_method == "enumerate") {
                std::printf("%.12g\n", superlative_probability_enumerated(scene, o_anchor, o_target, kind, k));
            } else {
                auto mc = superlative_probability_montecarlo(scene, o_anchor, o_target, kind, o_samples, o_seed);
                std::printf("%.12g %.12g\n", mc.estimate, mc.stderr_);
            }
        } else if (graph_cmd->parsed()) {
            Scene scene = load_scene_file(g_scene);
            ConceptVocabulary vocab = ConceptVocabulary::load_dir(g_vocab);
            GraphConfig config;
            config.relations.top_k = g_topk;
            write_file(g_out, graph_to_json(build_scene_graph(scene, vocab, config), g_embeddings) + "\n");
        } else if (parse_cmd->parsed()) {
            ConceptVocabulary vocab = ConceptVocabulary::load_dir(p_vocab);
            std::vector<std::string> warnings;
            ParsedClues clues = parse_any(p_utterance, p_mode, vocab, &warnings);
            GraphConfig gc;
            auto mode = p_attr_mode ? ProgramMode::Attribute : ProgramMode::RelationOnly;
            InstructionProgram program = clues_to_instructions(clues, vocab, mode, gc.attribute_families, &warnings);
            std::string doc = program_to_json(program);
            std::cout << doc << "\n";
            for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
            if (!p_emit.empty()) write_file(p_emit, doc + "\n");
        } else if (ground_cmd->parsed()) {
            Scene scene = load_scene_file(gr_scene);
            ConceptVocabulary vocab = ConceptVocabulary::load_dir(gr_vocab);
            GraphConfig config;
            config.relations.top_k = gr_topk;
            SceneGraph graph = build_scene_graph(scene, vocab, config);
            ParsedClues clues = parse_any(gr_utterance, gr_mode, vocab, nullptr);
            auto mode = gr_attr_mode ? ProgramMode::Attribute : ProgramMode::RelationOnly;
            InstructionProgram program = clues_to_instructions(clues, vocab, mode, config.attribute_families);
            WeightBundle weights = gr_weights.empty()
                                       ? WeightBundle::symbolic_default(vocab.dim(), config.property_count())
                                       : WeightBundle::load_file(gr_weights);
            GroundingResult result = ground(graph, program, weights);
            std::printf("%s %.12g\n", result.selected.c_str(), result.score);
            if (!gr_trace.empty()) write_file(gr_trace, trace_to_json(result.trace) + "\n");
        } else if (gen_cmd->parsed()) {
            GenConfig config = GenConfig::from_json_file(gen_config);
            Dataset dataset = generate_dataset(config);
            save_dataset(dataset, build_synthetic_vocabulary(config), gen_out);
            std::printf("wrote %zu scenes to %s\n", dataset.scenes.size(), gen_out.c_str());
        } else if (eval_cmd->parsed()) {
            Dataset dataset = load_dataset(e_dataset);
            ConceptVocabulary vocab = ConceptVocabulary::load_dir(e_vocab.empty() ? e_dataset + "/vocab" : e_vocab);
            EngineConfig engine;
            engine.graph.relations.top_k = e_topk;
            if (!e_weights.empty()) engine.weights = WeightBundle::load_file(e_weights);
            EvalReport report = evaluate(dataset, vocab, engine);
            write_file(e_report, report_to_json(report) + "\n");
            std::printf("accuracy %.4f over %zu examples\n", report.accuracy, report.n_examples);
        } else if (sgt_cmd->parsed()) {
            Dataset dataset = load_dataset(sgt_dataset);
            ConceptVocabulary vocab =
                ConceptVocabulary::load_dir(sgt_vocab.empty() ? sgt_dataset + "/vocab" : sgt_vocab);
            std::vector<double> proportions;
            for (int i = 0; i < sgt_points; ++i)
                proportions.push_back(sgt_points == 1 ? 1.0 : static_cast<double>(i) / (sgt_points - 1));
            auto curve = sweep_gt_proportion(dataset, vocab, EngineConfig{}, proportions, sgt_seed);
            write_file(sgt_out, sweep_to_csv(curve, "proportion"));
            for (const auto& pt : curve) std::printf("proportion %.2f accuracy %.4f\n", pt.x, pt.accuracy);
        } else if (sk_cmd->parsed()) {
            Dataset dataset = load_dataset(sk_dataset);
            ConceptVocabulary vocab = ConceptVocabulary::load_dir(sk_vocab.empty() ? sk_dataset + "/vocab" : sk_vocab);
            auto table = sweep_top_k(dataset, vocab, EngineConfig{}, parse_int_list(sk_ks));
            write_file(sk_out, sweep_to_csv(table, "K"));
            for (const auto& pt : table) std::printf("K %d accuracy %.4f\n", static_cast<int>(pt.x), pt.accuracy);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
