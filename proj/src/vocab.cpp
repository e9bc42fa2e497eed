#include "r2g/vocab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace r2g {

using nlohmann::json;

namespace {

std::vector<std::string> split_words(const std::string& token) {
    std::vector<std::string> words;
    std::istringstream iss(token);
    std::string w;
    while (iss >> w) words.push_back(w);
    return words;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("FileNotFound", path);
    std::ostringstream oss;
    oss << in.rdbuf();
    return oss.str();
}

void check_finite(const Eigen::VectorXd& v, const std::string& token) {
    if (!v.allFinite()) fail("NonFiniteEmbedding", "token '" + token + "' has non-finite components");
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace

EmbeddingTable EmbeddingTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("FileNotFound", path);
    EmbeddingTable table;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream iss(line);
        std::string token;
        iss >> token;
        std::vector<double> values;
        double v;
        while (iss >> v) values.push_back(v);
        if (values.empty()) fail("DimensionMismatch", "no values for token '" + token + "' in " + path);
        if (table.dim_ == 0) table.dim_ = static_cast<int>(values.size());
        if (static_cast<int>(values.size()) != table.dim_)
            fail("DimensionMismatch", "token '" + token + "' has " + std::to_string(values.size()) +
                                          " values, expected " + std::to_string(table.dim_));
        Eigen::VectorXd vec = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<long>(values.size()));
        check_finite(vec, token);
        table.vectors_[token] = std::move(vec);
    }
    return table;
}

EmbeddingTable EmbeddingTable::from_map(std::unordered_map<std::string, Eigen::VectorXd> vectors, int dim) {
    EmbeddingTable table;
    table.vectors_ = std::move(vectors);
    table.dim_ = dim;
    return table;
}

const Eigen::VectorXd& EmbeddingTable::word(const std::string& w) const {
    auto it = vectors_.find(w);
    if (it == vectors_.end()) fail("MissingEmbedding", "'" + w + "'");
    return it->second;
}

bool EmbeddingTable::resolvable(const std::string& token) const {
    auto words = split_words(token);
    if (words.empty()) return false;
    return std::all_of(words.begin(), words.end(), [&](const std::string& w) { return contains(w); });
}

Eigen::VectorXd EmbeddingTable::resolve(const std::string& token) const {
    auto words = split_words(token);
    if (words.empty()) fail("MissingEmbedding", "empty token");
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim_);
    for (const auto& w : words) sum += word(w);
    return sum / static_cast<double>(words.size());
}

ConceptVocabulary ConceptVocabulary::from_manifest_json(const std::string& manifest_json,
                                                        const EmbeddingTable& table, bool normalize) {
    json doc = json::parse(manifest_json);
    if (!doc.contains("families") || !doc["families"].is_object())
        fail("SchemaViolation", "manifest missing 'families' object");

    ConceptVocabulary vocab;
    vocab.dim_ = doc.value("dim", table.dim());
    if (vocab.dim_ <= 0) fail("SchemaViolation", "manifest dim must be positive");
    if (vocab.dim_ != table.dim())
        fail("DimensionMismatch", "manifest dim " + std::to_string(vocab.dim_) + " vs embedding dim " +
                                      std::to_string(table.dim()));
    vocab.normalized_ = normalize;

    for (const auto& [family, tokens] : doc["families"].items()) {
        if (!tokens.is_array() || tokens.empty()) fail("EmptyFamily", family);
        vocab.family_order_.push_back(family);
        for (const auto& t : tokens) {
            std::string token = t.get<std::string>();
            if (token.empty()) fail("SchemaViolation", "empty token in family " + family);
            if (vocab.index_.count(token)) fail("DuplicateToken", token);
            if (!table.resolvable(token)) fail("MissingEmbedding", "'" + token + "'");
            Eigen::VectorXd emb = table.resolve(token);
            check_finite(emb, token);
            if (normalize) {
                double n = emb.norm();
                // skip when already unit so save/load round-trips bit-exactly
                if (n > 0.0 && std::abs(n - 1.0) > 1e-12) emb /= n;
            }
            vocab.index_[token] = vocab.entries_.size();
            vocab.entries_.push_back(Concept{token, family, std::move(emb)});
            vocab.families_[family].push_back(token);
        }
    }
    if (doc.contains("null_concept")) {
        std::string token = doc["null_concept"].get<std::string>();
        Eigen::VectorXd emb = table.resolve(token);
        if (normalize) {
            double n = emb.norm();
            if (n > 0.0 && std::abs(n - 1.0) > 1e-12) emb /= n;
        }
        vocab.null_token_ = token;
        vocab.null_concept_ = std::move(emb);
    }
    vocab.word_table_ = table;
    return vocab;
}

ConceptVocabulary ConceptVocabulary::load_dir(const std::string& dir, bool normalize) {
    EmbeddingTable table = EmbeddingTable::load(dir + "/embeddings.txt");
    return from_manifest_json(read_file(dir + "/manifest.json"), table, normalize);
}

ConceptVocabulary ConceptVocabulary::one_hot(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& families) {
    std::size_t total = 0;
    for (const auto& [_, tokens] : families) total += tokens.size();

    std::unordered_map<std::string, Eigen::VectorXd> vectors;
    json manifest;
    manifest["dim"] = total;
    std::size_t i = 0;
    for (const auto& [family, tokens] : families) {
        manifest["families"][family] = tokens;
        for (const auto& token : tokens) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<long>(total));
            e[static_cast<long>(i++)] = 1.0;
            // multi-word tokens share one basis vector per word
            for (const auto& w : split_words(token))
                if (!vectors.count(w)) vectors[w] = e;
            vectors[token] = e;
        }
    }
    EmbeddingTable table = EmbeddingTable::from_map(std::move(vectors), static_cast<int>(total));
    // one-hot tokens bypass multi-word averaging: insert directly
    ConceptVocabulary vocab = from_manifest_json(manifest.dump(), table, true);
    for (auto& entry : vocab.entries_) entry.embedding = table.vectors().at(entry.token);
    return vocab;
}

const Concept* ConceptVocabulary::find(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? nullptr : &entries_[it->second];
}

const Concept& ConceptVocabulary::at(const std::string& token) const {
    const Concept* c = find(token);
    if (!c) fail("UnknownToken", "'" + token + "'");
    return *c;
}

const std::vector<std::string>& ConceptVocabulary::family_tokens(const std::string& family) const {
    auto it = families_.find(family);
    if (it == families_.end()) fail("UnknownFamily", family);
    return it->second;
}

Eigen::VectorXd ConceptVocabulary::embedding_or_zero(const std::string& token) const {
    const Concept* c = find(token);
    return c ? c->embedding : Eigen::VectorXd::Zero(dim_);
}

double ConceptVocabulary::similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size())
        fail("DimensionMismatch", std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    return a.dot(b);
}

std::pair<const Concept*, double> ConceptVocabulary::nearest(const Eigen::VectorXd& query,
                                                             const std::optional<std::string>& family) const {
    if (entries_.empty()) fail("EmptyVocabulary", "no concepts loaded");
    if (query.size() != dim_)
        fail("DimensionMismatch", "query dim " + std::to_string(query.size()) + " vs " + std::to_string(dim_));
    const Concept* best = nullptr;
    double best_score = 0.0;
    auto consider = [&](const Concept& c) {
        double s = c.embedding.dot(query);
        if (!best || s > best_score || (s == best_score && c.token < best->token)) {
            best = &c;
            best_score = s;
        }
    };
    if (family) {
        for (const auto& token : family_tokens(*family)) consider(at(token));
    } else {
        for (const auto& c : entries_) consider(c);
    }
    return {best, best_score};
}

void ConceptVocabulary::save_dir(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    json manifest;
    manifest["dim"] = dim_;
    for (const auto& family : family_order_) manifest["families"][family] = families_.at(family);
    if (null_token_) manifest["null_concept"] = *null_token_;
    std::ofstream mout(dir + "/manifest.json");
    mout << manifest.dump(2) << "\n";

    std::ofstream eout(dir + "/embeddings.txt");
    for (const auto& c : entries_) {
        // every word of a multi-word token gets the full concept vector,
        // so the loader's per-word mean reproduces it bit-exactly
        for (const auto& w : split_words(c.token)) {
            eout << w;
            for (long i = 0; i < c.embedding.size(); ++i) eout << " " << format_double(c.embedding[i]);
            eout << "\n";
        }
    }
    if (null_token_ && !index_.count(*null_token_)) {
        for (const auto& w : split_words(*null_token_)) {
            eout << w;
            for (long i = 0; i < null_concept_->size(); ++i) eout << " " << format_double((*null_concept_)[i]);
            eout << "\n";
        }
    }
}

}  // namespace r2g
