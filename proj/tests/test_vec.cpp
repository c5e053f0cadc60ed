#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "memdrift/embedder.hpp"
#include "memdrift/error.hpp"
#include "memdrift/vec_index.hpp"
#include "support.hpp"

using memdrift::cosine;
using memdrift::VecIndex;

namespace {

VecIndex make_index(const std::vector<std::pair<std::string, std::vector<float>>>& entries,
                    std::uint32_t dims_hint = 0) {
    std::vector<std::string> ids;
    std::vector<std::vector<float>> vecs;
    for (const auto& [id, v] : entries) {
        ids.push_back(id);
        vecs.push_back(v);
    }
    return VecIndex::build(ids, vecs, dims_hint);
}

std::vector<float> rand_vec(std::mt19937_64& rng, std::size_t dims) {
    std::uniform_real_distribution<float> d(-1.0f, 1.0f);
    std::vector<float> v(dims);
    for (auto& x : v) x = d(rng);
    return v;
}

}  // namespace

TEST_CASE("cosine on known vectors") {
    CHECK(cosine({1, 0}, {0, 1}) == doctest::Approx(0.0));
    CHECK(cosine({1, 2}, {2, 4}) == doctest::Approx(1.0));
    CHECK(cosine({1, 0}, {-1, 0}) == doctest::Approx(-1.0));
    CHECK(cosine({3, 4}, {4, 3}) == doctest::Approx(24.0 / 25.0));
}

TEST_CASE("cosine rejects mismatched or zero-norm input") {
    CHECK_THROWS_AS(static_cast<void>(cosine({1, 0}, {1, 0, 0})), memdrift::Error);
    CHECK_THROWS_AS(static_cast<void>(cosine({0, 0}, {1, 0})), memdrift::Error);
}

TEST_CASE("top-k orders by similarity then id") {
    const std::vector<std::pair<std::string, std::vector<float>>> entries{
        {"far", {0.0f, 1.0f}},
        {"mid", {1.0f, 1.0f}},
        {"near", {1.0f, 0.01f}},
    };
    const auto idx = make_index(entries);
    const auto hits = idx.top_k({1.0f, 0.0f}, 2);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].id == "near");
    CHECK(hits[1].id == "mid");
}

TEST_CASE("identical vectors tie toward the lower id") {
    const std::vector<std::pair<std::string, std::vector<float>>> entries{
        {"b", {1.0f, 0.0f}}, {"a", {1.0f, 0.0f}}, {"c", {1.0f, 0.0f}}};
    const auto hits = make_index(entries).top_k({1.0f, 0.0f}, 3);
    REQUIRE(hits.size() == 3);
    CHECK(hits[0].id == "a");
    CHECK(hits[1].id == "b");
    CHECK(hits[2].id == "c");
}

TEST_CASE("no similarity floor: anti-correlated vectors still return") {
    const std::vector<std::pair<std::string, std::vector<float>>> entries{{"neg", {-1.0f, 0.0f}}};
    const auto hits = make_index(entries).top_k({1.0f, 0.0f}, 3);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].score == doctest::Approx(-1.0));
}

TEST_CASE("empty index returns no hits and keeps the hinted dims") {
    const auto idx = make_index({}, 256);
    CHECK(idx.size() == 0);
    CHECK(idx.dims() == 256);
    CHECK(idx.top_k(std::vector<float>(256, 1.0f), 3).empty());
}

TEST_CASE("vector lookup and membership") {
    const std::vector<std::pair<std::string, std::vector<float>>> entries{{"x", {1.0f, 2.0f}}};
    const auto idx = make_index(entries);
    CHECK(idx.contains("x"));
    CHECK(!idx.contains("y"));
    CHECK(idx.vector_of("x") == std::vector<float>{1.0f, 2.0f});
    CHECK_THROWS_AS(static_cast<void>(idx.vector_of("y")), memdrift::Error);
}

TEST_CASE("mismatched row widths are rejected") {
    CHECK_THROWS_AS(VecIndex::build({"a", "b"}, {{1.0f, 0.0f}, {1.0f, 0.0f, 0.0f}}, 0),
                    memdrift::Error);
}

TEST_CASE("matches the reference scorer on random vectors") {
    std::mt19937_64 rng(55);
    std::uniform_int_distribution<std::size_t> dn(1, 40);
    std::uniform_int_distribution<std::size_t> dk(1, 8);
    for (int iter = 0; iter < 25; ++iter) {
        std::vector<std::pair<std::string, std::vector<float>>> entries;
        const std::size_t n = dn(rng);
        for (std::size_t i = 0; i < n; ++i) {
            entries.emplace_back("v" + std::to_string(i), rand_vec(rng, 16));
        }
        const auto idx = make_index(entries);
        const auto q = rand_vec(rng, 16);
        const std::size_t k = dk(rng);
        const auto expect = oracle::vec_topk(entries, q, k);
        const auto got = idx.top_k(q, k);
        REQUIRE(got.size() == expect.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].id == expect[i].id);
            CHECK(got[i].score == doctest::Approx(expect[i].score).epsilon(1e-9));
        }
    }
}

TEST_CASE("cosine of embeddings matches the reference in double precision") {
    const auto a = memdrift::embed_hash("clean PII columns", 64, 42);
    const auto b = memdrift::embed_hash("strip personal data columns", 64, 42);
    CHECK(cosine(a, b) == doctest::Approx(oracle::cosine(a, b)).epsilon(1e-12));
}
