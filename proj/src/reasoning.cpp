#include "r2g/reasoning.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

namespace r2g {

using nlohmann::json;

namespace {

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
    return e / e.sum();
}

std::string role_name(InstructionRole role) {
    switch (role) {
        case InstructionRole::AnchorProperty: return "anchor-property";
        case InstructionRole::Relation: return "relation";
        case InstructionRole::TargetProperty: return "target-property";
    }
    return "?";
}

Eigen::MatrixXd parse_matrix(const json& j, int d, const std::string& name) {
    if (!j.is_array() || static_cast<int>(j.size()) != d) fail("SchemaViolation", name + " must be " + std::to_string(d) + " rows");
    Eigen::MatrixXd m(d, d);
    for (int r = 0; r < d; ++r) {
        if (!j[r].is_array() || static_cast<int>(j[r].size()) != d)
            fail("SchemaViolation", name + " row " + std::to_string(r));
        for (int c = 0; c < d; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

bool attention_valid(const Attention& a, double tol) {
    if (a.size() == 0) return false;
    if ((a.array() < 0.0).any()) return false;
    return std::abs(a.sum() - 1.0) <= tol;
}

WeightBundle WeightBundle::symbolic_default(int dim, std::size_t property_count) {
    WeightBundle w;
    w.W_s = Eigen::RowVectorXd::Ones(dim);
    w.W_r = Eigen::RowVectorXd::Ones(dim);
    w.W_e = Eigen::MatrixXd::Identity(dim, dim);
    w.W_prop.assign(property_count, Eigen::MatrixXd::Identity(dim, dim));
    return w;
}

Eigen::VectorXd WeightBundle::apply_sigma(Eigen::VectorXd v) const {
    if (sigma == Sigma::Relu) v = v.cwiseMax(0.0);
    return v;
}

WeightBundle WeightBundle::load_json(const std::string& document) {
    json doc = json::parse(document);
    int d = doc.at("dim").get<int>();
    WeightBundle w;
    auto row = [&](const char* key) {
        const json& j = doc.at(key);
        if (!j.is_array() || static_cast<int>(j.size()) != d) fail("SchemaViolation", std::string(key));
        Eigen::RowVectorXd v(d);
        for (int i = 0; i < d; ++i) v[i] = j[i].get<double>();
        return v;
    };
    w.W_s = row("W_s");
    w.W_r = row("W_r");
    w.W_e = parse_matrix(doc.at("W_e"), d, "W_e");
    for (const auto& m : doc.at("W_prop")) w.W_prop.push_back(parse_matrix(m, d, "W_prop"));
    std::string sig = doc.value("sigma", "identity");
    if (sig == "relu")
        w.sigma = Sigma::Relu;
    else if (sig != "identity")
        fail("SchemaViolation", "sigma must be identity or relu");
    w.beta_merge = doc.value("beta_merge", 50.0);
    w.beta_transfer = doc.value("beta_transfer", 50.0);
    if (w.beta_merge <= 0.0 || w.beta_transfer <= 0.0) fail("SchemaViolation", "temperatures must be positive");
    return w;
}

WeightBundle WeightBundle::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("FileNotFound", path);
    std::ostringstream oss;
    oss << in.rdbuf();
    return load_json(oss.str());
}

std::string WeightBundle::to_json() const {
    json doc;
    int d = static_cast<int>(W_s.size());
    doc["dim"] = d;
    doc["W_s"] = std::vector<double>(W_s.data(), W_s.data() + d);
    doc["W_r"] = std::vector<double>(W_r.data(), W_r.data() + d);
    doc["W_e"] = matrix_to_json(W_e);
    json props = json::array();
    for (const auto& m : W_prop) props.push_back(matrix_to_json(m));
    doc["W_prop"] = props;
    doc["sigma"] = sigma == Sigma::Relu ? "relu" : "identity";
    doc["beta_merge"] = beta_merge;
    doc["beta_transfer"] = beta_transfer;
    return doc.dump(2);
}

Attention init_attention(std::size_t n) {
    if (n == 0) fail("EmptyScene", "cannot initialize attention over zero nodes");
    return Eigen::VectorXd::Constant(static_cast<long>(n), 1.0 / static_cast<double>(n));
}

std::pair<Attention, Eigen::VectorXd> property_round(const SceneGraph& graph, const Attention& a_prev,
                                                     const Instruction& instr, const WeightBundle& weights,
                                                     int family) {
    const long n = static_cast<long>(graph.nodes.size());
    if (a_prev.size() != n) fail("DimensionMismatch", "attention size vs node count");
    if (family < 0 || static_cast<std::size_t>(family) >= weights.W_prop.size())
        fail("FamilyOutOfRange", std::to_string(family));
    if (instr.vector.size() != graph.dim) fail("DimensionMismatch", "instruction dim vs graph dim");

    Eigen::VectorXd raw(n);
    for (long i = 0; i < n; ++i) {
        const Eigen::VectorXd& s_j = graph.nodes[static_cast<std::size_t>(i)].embeddings[static_cast<std::size_t>(family)];
        raw[i] = weights.W_s * weights.apply_sigma(
                                   instr.vector.cwiseProduct(weights.W_prop[static_cast<std::size_t>(family)] * s_j));
    }
    Eigen::VectorXd b = softmax(weights.beta_merge * raw);
    Attention a_out = softmax(weights.beta_merge * (b + a_prev));
    return {a_out, b};
}

std::pair<Attention, std::map<std::string, double>> relation_round(const SceneGraph& graph,
                                                                   const Attention& a_prev,
                                                                   const Instruction& instr,
                                                                   const WeightBundle& weights) {
    const long n = static_cast<long>(graph.nodes.size());
    if (a_prev.size() != n) fail("DimensionMismatch", "attention size vs node count");
    if (instr.vector.size() != graph.dim) fail("DimensionMismatch", "instruction dim vs graph dim");

    Eigen::VectorXd logits = Eigen::VectorXd::Zero(n);
    std::map<std::string, double> transferred;
    for (const auto& edge : graph.edges) {
        std::size_t src = graph.node_index.at(edge.source);
        std::size_t dst = graph.node_index.at(edge.target);
        double t = weights.W_r * weights.apply_sigma(instr.vector.cwiseProduct(weights.W_e * edge.embedding));
        double mass = a_prev[static_cast<long>(src)] * t;
        logits[static_cast<long>(dst)] += mass;
        if (mass != 0.0) transferred[edge.source + "->" + edge.target] = mass;
    }
    return {softmax(weights.beta_transfer * logits), transferred};
}

GroundingResult ground(const SceneGraph& graph, const InstructionProgram& program, const WeightBundle& weights) {
    if (weights.W_prop.size() < program.property_count)
        fail("FamilyOutOfRange", "weight bundle covers " + std::to_string(weights.W_prop.size()) +
                                     " property families, program needs " + std::to_string(program.property_count));
    ReasoningTrace trace;
    for (const auto& node : graph.nodes) trace.node_ids.push_back(node.object_id);

    Attention a = init_attention(graph.nodes.size());
    for (const auto& instr : program.instructions) {
        ReasoningRound round;
        round.role = role_name(instr.role);
        round.family = instr.family;
        round.clue = instr.clue;
        round.attention_in = a;
        if (instr.role == InstructionRole::Relation) {
            auto [a_out, transferred] = relation_round(graph, a, instr, weights);
            a = a_out;
            round.scores = std::move(transferred);
        } else {
            auto [a_out, b] = property_round(graph, a, instr, weights, instr.family);
            a = a_out;
            for (long i = 0; i < b.size(); ++i) round.scores[trace.node_ids[static_cast<std::size_t>(i)]] = b[i];
        }
        round.attention_out = a;
        trace.rounds.push_back(std::move(round));
    }

    long best = 0;
    for (long i = 1; i < a.size(); ++i) {
        if (a[i] > a[best] ||
            (a[i] == a[best] && trace.node_ids[static_cast<std::size_t>(i)] < trace.node_ids[static_cast<std::size_t>(best)]))
            best = i;
    }
    trace.selected = trace.node_ids[static_cast<std::size_t>(best)];
    trace.score = a[best];
    return {trace.selected, trace.score, std::move(trace)};
}

std::string trace_to_json(const ReasoningTrace& trace) {
    json doc;
    doc["nodes"] = trace.node_ids;
    doc["rounds"] = json::array();
    for (const auto& r : trace.rounds) {
        json jr;
        jr["role"] = r.role;
        if (r.family >= 0) jr["family"] = r.family;
        if (r.clue) jr["clue"] = *r.clue;
        jr["attention_in"] = std::vector<double>(r.attention_in.data(), r.attention_in.data() + r.attention_in.size());
        jr["attention_out"] =
            std::vector<double>(r.attention_out.data(), r.attention_out.data() + r.attention_out.size());
        json scores = json::object();
        for (const auto& [key, v] : r.scores) scores[key] = v;
        jr["scores"] = scores;
        doc["rounds"].push_back(std::move(jr));
    }
    doc["selected"] = trace.selected;
    doc["score"] = trace.score;
    return doc.dump(2);
}

double reference_loss(const SceneGraph& graph, const Attention& final_attention, const std::string& gt_id) {
    auto it = graph.node_index.find(gt_id);
    if (it == graph.node_index.end()) fail("UnknownId", "'" + gt_id + "' not in graph");
    double p = final_attention[static_cast<long>(it->second)];
    if (p <= 0.0) return std::numeric_limits<double>::infinity();
    return -std::log(p);
}

namespace {

/// Cross-entropy of softmax(beta * sim(instruction, family concepts))
/// against the GT token. Returns nullopt when the token misses the family.
std::optional<double> auxiliary_term(const Eigen::VectorXd& instr, const std::string& gt_token,
                                     const std::string& family, const ConceptVocabulary& vocab, double beta) {
    if (!vocab.has_family(family)) return std::nullopt;
    const auto& tokens = vocab.family_tokens(family);
    Eigen::VectorXd logits(static_cast<long>(tokens.size()));
    long gt_index = -1;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        logits[static_cast<long>(i)] = beta * vocab.at(tokens[i]).embedding.dot(instr);
        if (tokens[i] == gt_token) gt_index = static_cast<long>(i);
    }
    if (gt_index < 0) return std::nullopt;
    Eigen::VectorXd p = softmax(logits);
    double mass = p[gt_index];
    return mass <= 0.0 ? std::numeric_limits<double>::infinity() : -std::log(mass);
}

const Instruction* find_instruction(const InstructionProgram& program, InstructionRole role, int family) {
    for (const auto& instr : program.instructions)
        if (instr.role == role && instr.family == family) return &instr;
    return nullptr;
}

}  // namespace

LossBreakdown combined_loss(const SceneGraph& graph, const Attention& final_attention, const std::string& gt_id,
                            const InstructionProgram& program, const ParsedClues& gt_clues,
                            const ConceptVocabulary& vocab, const WeightBundle& weights) {
    constexpr double kAlpha = 0.2;
    LossBreakdown out;
    out.l_ref = reference_loss(graph, final_attention, gt_id);
    out.total = out.l_ref;

    auto add_term = [&](const char* name, const Instruction* instr, const std::optional<std::string>& gt_token,
                        const std::string& family, double& slot) {
        if (!instr || !gt_token) {
            out.skipped.push_back(std::string("MissingClue: ") + name);
            return;
        }
        auto term = auxiliary_term(instr->vector, *gt_token, family, vocab, weights.beta_merge);
        if (!term) {
            out.skipped.push_back(std::string("MissingClue: ") + name);
            return;
        }
        slot = *term;
        out.total += kAlpha * slot;
    };

    auto clue_of = [](const std::map<std::string, std::string>& props) -> std::optional<std::string> {
        auto it = props.find("category");
        if (it == props.end()) return std::nullopt;
        return it->second;
    };

    add_term("target", find_instruction(program, InstructionRole::TargetProperty, 0),
             clue_of(gt_clues.target_props), kCategoryFamily, out.l_target);
    add_term("anchor", find_instruction(program, InstructionRole::AnchorProperty, 0),
             clue_of(gt_clues.anchor_props), kCategoryFamily, out.l_anchor);
    add_term("relation", find_instruction(program, InstructionRole::Relation, -1), gt_clues.relation,
             kRelationFamily, out.l_relation);
    return out;
}

}  // namespace r2g
