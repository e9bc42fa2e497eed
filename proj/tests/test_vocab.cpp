#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "r2g/vocab.hpp"

using namespace r2g;

namespace {

EmbeddingTable tiny_table() {
    std::unordered_map<std::string, Eigen::VectorXd> vecs;
    auto v = [](double a, double b, double c) {
        Eigen::VectorXd x(3);
        x << a, b, c;
        return x;
    };
    vecs["couch"] = v(1.0, 0.1, 0.0);
    vecs["sofa"] = v(0.9, 0.2, 0.0);
    vecs["table"] = v(0.0, 1.0, 0.2);
    vecs["next"] = v(0.0, 0.0, 1.0);
    vecs["to"] = v(0.0, 0.2, 0.8);
    vecs["red"] = v(0.3, 0.3, 0.3);
    return EmbeddingTable::from_map(std::move(vecs), 3);
}

constexpr const char* kManifest = R"({
  "dim": 3,
  "families": {
    "category": ["couch", "table"],
    "attr:color": ["red"],
    "relation": ["next to"]
  }
})";

}  // namespace

TEST_CASE("manifest load resolves every token") {
    auto vocab = ConceptVocabulary::from_manifest_json(kManifest, tiny_table());
    CHECK(vocab.dim() == 3);
    CHECK(vocab.size() == 4);
    CHECK(vocab.find("couch") != nullptr);
    CHECK(vocab.find("next to") != nullptr);
    CHECK(vocab.family_tokens("category") == std::vector<std::string>{"couch", "table"});
}

TEST_CASE("multi-word token embeds as mean of word vectors") {
    auto table = tiny_table();
    auto vocab = ConceptVocabulary::from_manifest_json(kManifest, table, false);
    Eigen::VectorXd expected = 0.5 * (table.word("next") + table.word("to"));
    CHECK((vocab.at("next to").embedding - expected).norm() == doctest::Approx(0.0));
}

TEST_CASE("missing embedding is rejected") {
    const char* manifest = R"({"dim": 3, "families": {"category": ["couch", "wardrobe"]}})";
    CHECK_THROWS_WITH_AS(ConceptVocabulary::from_manifest_json(manifest, tiny_table()), doctest::Contains("wardrobe"),
                         Error);
}

TEST_CASE("duplicate and empty-family manifests are rejected") {
    CHECK_THROWS_AS(ConceptVocabulary::from_manifest_json(
                        R"({"dim": 3, "families": {"category": ["couch", "couch"]}})", tiny_table()),
                    Error);
    CHECK_THROWS_AS(
        ConceptVocabulary::from_manifest_json(R"({"dim": 3, "families": {"category": []}})", tiny_table()), Error);
}

TEST_CASE("one-hot vocabulary is orthonormal") {
    auto vocab = ConceptVocabulary::one_hot({{"category", {"a", "b", "c"}}});
    CHECK(vocab.dim() == 3);
    for (const auto& x : vocab.entries())
        for (const auto& y : vocab.entries()) {
            double expected = x.token == y.token ? 1.0 : 0.0;
            CHECK(ConceptVocabulary::similarity(x.embedding, y.embedding) == doctest::Approx(expected));
        }
}

TEST_CASE("similarity is the dot product and zero padding is neutral") {
    Eigen::VectorXd a(3), b(3), zero = Eigen::VectorXd::Zero(3);
    a << 1, 2, 3;
    b << 4, 5, 6;
    CHECK(ConceptVocabulary::similarity(a, b) == doctest::Approx(32.0));
    CHECK(ConceptVocabulary::similarity(a, zero) == 0.0);
    Eigen::VectorXd c(2);
    CHECK_THROWS_AS(ConceptVocabulary::similarity(a, c), Error);
}

TEST_CASE("nearest concept: exact hit, family filter, tie-break") {
    auto vocab = ConceptVocabulary::one_hot({{"category", {"b", "c"}}, {"relation", {"a"}}});
    auto [hit, score] = vocab.nearest(vocab.at("c").embedding);
    CHECK(hit->token == "c");
    CHECK(score == doctest::Approx(1.0));

    auto [rel, rel_score] = vocab.nearest(vocab.at("c").embedding, std::string("relation"));
    CHECK(rel->token == "a");
    CHECK(rel_score == doctest::Approx(0.0));

    // Equidistant query: lexicographically smaller token wins.
    Eigen::VectorXd mix = vocab.at("b").embedding + vocab.at("c").embedding;
    auto [tie, tie_score] = vocab.nearest(mix, std::string("category"));
    CHECK(tie->token == "b");
    CHECK_THROWS_AS(vocab.nearest(mix, std::string("nope")), Error);
}

TEST_CASE("nearest concept maps sofa to couch on a real-valued table") {
    auto table = tiny_table();
    auto vocab = ConceptVocabulary::from_manifest_json(kManifest, table);
    auto [hit, score] = vocab.nearest(table.word("sofa"), std::string("category"));
    CHECK(hit->token == "couch");
    // Oracle: exhaustive dot products over the loaded table.
    Eigen::VectorXd q = table.word("sofa");
    for (const auto& entry : vocab.entries())
        if (entry.family == "category") CHECK(score >= ConceptVocabulary::similarity(q, entry.embedding) - 1e-12);
}

TEST_CASE("nearest concept is scale-invariant in normalized mode") {
    auto table = tiny_table();
    auto vocab = ConceptVocabulary::from_manifest_json(kManifest, table);
    Eigen::VectorXd q = table.word("sofa");
    auto a = vocab.nearest(q).first->token;
    auto b = vocab.nearest(Eigen::VectorXd(10.0 * q)).first->token;
    CHECK(a == b);
}

TEST_CASE("save and load round-trip to bit-identical embeddings") {
    auto dir = std::filesystem::temp_directory_path() / "r2g_vocab_rt";
    std::filesystem::remove_all(dir);
    auto vocab = ConceptVocabulary::from_manifest_json(kManifest, tiny_table());
    vocab.save_dir(dir.string());
    auto reloaded = ConceptVocabulary::load_dir(dir.string());
    REQUIRE(reloaded.size() == vocab.size());
    for (const auto& entry : vocab.entries()) {
        const auto& other = reloaded.at(entry.token);
        REQUIRE(other.embedding.size() == entry.embedding.size());
        for (int i = 0; i < entry.embedding.size(); ++i) CHECK(other.embedding[i] == entry.embedding[i]);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("embedding table parses GloVe text format") {
    auto path = std::filesystem::temp_directory_path() / "r2g_glove.txt";
    {
        std::ofstream out(path);
        out << "couch 1.0 0.5 -0.25\n";
        out << "table 0 1 0\n";
    }
    auto table = EmbeddingTable::load(path.string());
    CHECK(table.dim() == 3);
    CHECK(table.word("couch")[2] == doctest::Approx(-0.25));
    CHECK_THROWS_AS(table.word("chair"), Error);
    std::filesystem::remove(path.string());
}
