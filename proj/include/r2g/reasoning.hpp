#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "r2g/graph.hpp"
#include "r2g/parser.hpp"

namespace r2g {

/// Attention over graph nodes, stored in node order. Valid distributions
/// are non-negative and sum to 1 within 1e-9.
using Attention = Eigen::VectorXd;

bool attention_valid(const Attention& a, double tol = 1e-9);

struct WeightBundle {
    Eigen::RowVectorXd W_s;               // 1 x d
    std::vector<Eigen::MatrixXd> W_prop;  // d x d per property family j = 0..L
    Eigen::RowVectorXd W_r;               // 1 x d
    Eigen::MatrixXd W_e;                  // d x d
    enum class Sigma { Identity, Relu } sigma = Sigma::Identity;
    double beta_merge = 50.0;
    double beta_transfer = 50.0;

    /// Untrained symbolic defaults: all-ones rows, identity matrices,
    /// identity nonlinearity. Property-round scores reduce to r . s^j and
    /// transfer scores to r . e'.
    static WeightBundle symbolic_default(int dim, std::size_t property_count);
    static WeightBundle load_json(const std::string& document);
    static WeightBundle load_file(const std::string& path);
    std::string to_json() const;

    Eigen::VectorXd apply_sigma(Eigen::VectorXd v) const;
};

struct ReasoningRound {
    std::string role;                       // "anchor-property" | "relation" | "target-property"
    int family = -1;
    std::optional<std::string> clue;
    Attention attention_in;
    Attention attention_out;
    std::map<std::string, double> scores;   // property: node -> b; relation: "src->dst" -> transferred mass
};

struct ReasoningTrace {
    std::vector<std::string> node_ids;
    std::vector<ReasoningRound> rounds;
    std::string selected;
    double score = 0.0;
};

Attention init_attention(std::size_t n);

/// One property reasoning round: b = softmax(beta (W_s sigma(r o W^j s^j))),
/// a_out = softmax(beta (b + a_prev)).
std::pair<Attention, Eigen::VectorXd> property_round(const SceneGraph& graph, const Attention& a_prev,
                                                     const Instruction& instr, const WeightBundle& weights,
                                                     int family);

/// One relation round: per node, incoming transferred mass
/// sum over edges (s',s) of a_prev(s') * (W_r sigma(r o W_e e')), then
/// softmax with beta_transfer. Nodes without incoming edges get logit 0.
std::pair<Attention, std::map<std::string, double>> relation_round(const SceneGraph& graph,
                                                                   const Attention& a_prev,
                                                                   const Instruction& instr,
                                                                   const WeightBundle& weights);

struct GroundingResult {
    std::string selected;
    double score = 0.0;
    ReasoningTrace trace;
};

/// Runs the full I-round schedule (anchor properties, one relation round,
/// target properties) and selects the final argmax, ties broken by
/// ascending object id.
GroundingResult ground(const SceneGraph& graph, const InstructionProgram& program, const WeightBundle& weights);

std::string trace_to_json(const ReasoningTrace& trace);

/// -ln(attention at gt); +infinity when that mass is exactly 0.
double reference_loss(const SceneGraph& graph, const Attention& final_attention, const std::string& gt_id);

struct LossBreakdown {
    double total = 0.0;
    double l_ref = 0.0;
    double l_target = 0.0;
    double l_anchor = 0.0;
    double l_relation = 0.0;
    std::vector<std::string> skipped;  // "MissingClue: ..." entries
};

/// Reference loss plus the three auxiliary cross-entropy terms at weights
/// 0.2/0.2/0.2, computed as evaluation metrics (no gradients).
LossBreakdown combined_loss(const SceneGraph& graph, const Attention& final_attention, const std::string& gt_id,
                            const InstructionProgram& program, const ParsedClues& gt_clues,
                            const ConceptVocabulary& vocab, const WeightBundle& weights);

}  // namespace r2g
