#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cmath>
#include <random>

#include "adlab/metrics.hpp"
#include "adlab/validate.hpp"
#include "helpers.hpp"

using namespace adlab;
using testutil::benign;
using testutil::make_matrix;
using testutil::poison;

namespace {

const MetricConfig kCosine{MetricKind::ContinuousCosine, 0.8};
const MetricConfig kBinary{MetricKind::BinaryLabel, 0.8};

Embedding emb(std::vector<float> v) { return Embedding(std::move(v)); }

}  // namespace

TEST_CASE("cosine distance of identical nonzero vectors is exactly zero") {
    const Embedding a = emb({1.0f, 2.0f, -3.0f});
    CHECK(pairwise_distance(a, a, PairKind::ImageImage, kCosine) == 0.0);
}

TEST_CASE("cosine distance of orthogonal vectors is exactly one half") {
    const Embedding a = emb({1.0f, 0.0f});
    const Embedding b = emb({0.0f, 2.0f});
    CHECK(pairwise_distance(a, b, PairKind::ImageImage, kCosine) == 0.5);
}

TEST_CASE("cosine distance of v and -v is exactly one") {
    const Embedding a = emb({0.3f, -1.5f, 2.0f});
    const Embedding b = emb({-0.3f, 1.5f, -2.0f});
    CHECK(pairwise_distance(a, b, PairKind::TextText, kCosine) == 1.0);
}

TEST_CASE("cosine distance rejects bad inputs") {
    CHECK_THROWS_AS(cosine_distance(std::vector<float>{0.0f, 0.0f},
                                    std::vector<float>{1.0f, 0.0f}),
                    InvalidInput);
    CHECK_THROWS_AS(cosine_distance(std::vector<float>{1.0f},
                                    std::vector<float>{1.0f, 2.0f}),
                    InvalidInput);
    const Embedding nan_vec = emb({1.0f, std::numeric_limits<float>::quiet_NaN()});
    CHECK_THROWS_AS(pairwise_distance(nan_vec, nan_vec, PairKind::ImageImage, kCosine),
                    InvalidInput);
    // label operands under the cosine metric and vice versa
    CHECK_THROWS_AS(pairwise_distance(ConceptId{0}, ConceptId{1}, PairKind::ImageImage, kCosine),
                    InvalidInput);
    CHECK_THROWS_AS(
        pairwise_distance(emb({1.0f}), emb({1.0f}), PairKind::ImageImage, kBinary),
        InvalidInput);
}

TEST_CASE("cosine distance is symmetric and lands in [0,1]") {
    std::mt19937_64 rng(11);
    std::normal_distribution<float> g(0.0f, 1.0f);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<float> a(8), b(8);
        for (auto& x : a) x = g(rng);
        for (auto& x : b) x = g(rng);
        const double dab = cosine_distance(a, b);
        const double dba = cosine_distance(b, a);
        CHECK(dab == dba);
        CHECK(dab >= 0.0);
        CHECK(dab <= 1.0);
    }
}

TEST_CASE("binary label distances follow the same-concept rule") {
    CHECK(pairwise_distance(ConceptId{3}, ConceptId{3}, PairKind::ImageImage, kBinary) == 0.0);
    CHECK(pairwise_distance(ConceptId{3}, ConceptId{4}, PairKind::TextText, kBinary) == 1.0);

    // cross-domain: a benign sample is correctly labeled, a poison one is not
    const Sample b = benign(0, 2, 0, 0);
    const Sample p = poison(1, 2, 5, 1, 1);
    CHECK(pairwise_distance(image_concept_of(b), b.concept_id, PairKind::CrossDomain, kBinary) ==
          0.0);
    CHECK(pairwise_distance(image_concept_of(p), p.concept_id, PairKind::CrossDomain, kBinary) ==
          1.0);
}

TEST_CASE("semantic distance: identical embeddings") {
    const Embedding a = emb({0.5f, -2.0f, 1.0f});
    const auto r = concept_semantic_distance(a, a);
    CHECK(r.distance == 0.0);
    CHECK_FALSE(r.unrelated);
}

TEST_CASE("semantic distance: 5.0 in one coordinate crosses the threshold") {
    const Embedding a = emb({1.0f, 7.0f});
    const Embedding b = emb({1.0f, 2.0f});
    const auto r = concept_semantic_distance(a, b);
    CHECK(r.distance == 5.0);
    CHECK(r.unrelated);
}

TEST_CASE("semantic distance: exactly 4.8 stays related (strict inequality)") {
    // Components chosen so the left-to-right double accumulation of squared
    // differences produces a sum whose square root is bit-exactly 4.8.
    const Embedding a = emb({std::bit_cast<float>(0x403851ECu), std::bit_cast<float>(0x4075C28Eu),
                             std::bit_cast<float>(0x3AB145F7u), std::bit_cast<float>(0x38337895u)});
    const Embedding zero = emb({0.0f, 0.0f, 0.0f, 0.0f});
    const auto r = concept_semantic_distance(a, zero);
    CHECK(r.distance == 4.8);
    CHECK_FALSE(r.unrelated);

    // one ulp above the threshold flips the flag
    const auto above = concept_semantic_distance(
        emb({std::nextafter(4.8f, 5.0f)}), emb({0.0f}));
    CHECK(above.distance > 4.8);
    CHECK(above.unrelated);
}

TEST_CASE("semantic distance rejects dimension mismatch") {
    CHECK_THROWS_AS(concept_semantic_distance(emb({1.0f}), emb({1.0f, 2.0f})), InvalidInput);
}

TEST_CASE("validate: well-formed two-sample benign dataset is clean") {
    Dataset d({benign(0, 0, 0, 0), benign(1, 1, 1, 1)},
              make_matrix({{1.0f, 0.0f}, {0.0f, 1.0f}}),
              make_matrix({{1.0f, 0.0f}, {0.0f, 1.0f}}));
    CHECK(validate_dataset(d, kCosine).ok());
    CHECK(validate_dataset(d, kBinary).ok());
    CHECK_NOTHROW(require_valid(d, kCosine));
}

TEST_CASE("validate: poison sample with target equal to its concept") {
    Dataset d({benign(0, 0, 0, 0), poison(1, 0, 0, 1, 1), benign(2, 0, 2, 2)},
              make_matrix({{1.0f, 0.0f}, {0.0f, 1.0f}, {1.0f, 1.0f}}),
              make_matrix({{1.0f, 0.0f}, {0.0f, 1.0f}, {1.0f, 1.0f}}));
    const auto report = validate_dataset(d, kBinary);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].find("target equals") != std::string::npos);
}

TEST_CASE("validate: fully poisoned concept violates m < n") {
    Dataset d({poison(0, 0, 1, 0, 0), benign(1, 1, 1, 1)},
              make_matrix({{1.0f, 0.0f}, {0.0f, 1.0f}}),
              make_matrix({{1.0f, 0.0f}, {0.0f, 1.0f}}));
    const auto report = validate_dataset(d, kBinary);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].find("fully poisoned") != std::string::npos);
}

TEST_CASE("validate: row ranges, zero norms, dim mismatch, empty dataset") {
    Dataset out_of_range({benign(0, 0, 5, 0)}, make_matrix({{1.0f, 0.0f}}),
                         make_matrix({{1.0f, 0.0f}}));
    CHECK_FALSE(validate_dataset(out_of_range, kBinary).ok());

    Dataset zero_norm({benign(0, 0, 0, 0)}, make_matrix({{0.0f, 0.0f}}),
                      make_matrix({{1.0f, 0.0f}}));
    CHECK_FALSE(validate_dataset(zero_norm, kCosine).ok());
    CHECK(validate_dataset(zero_norm, kBinary).ok());  // binary ignores norms

    Dataset mismatched({benign(0, 0, 0, 0)}, make_matrix({{1.0f, 0.0f, 0.0f}}),
                       make_matrix({{1.0f, 0.0f}}));
    CHECK_FALSE(validate_dataset(mismatched, kCosine).ok());
    CHECK(validate_dataset(mismatched, kBinary).ok());

    Dataset empty;
    CHECK_FALSE(validate_dataset(empty, kBinary).ok());

    Dataset bad_alpha({benign(0, 0, 0, 0)}, make_matrix({{1.0f, 0.0f}}),
                      make_matrix({{1.0f, 0.0f}}));
    CHECK_FALSE(validate_dataset(bad_alpha, MetricConfig{MetricKind::BinaryLabel, 1.5}).ok());
}

TEST_CASE("validate: benign sample with a target is flagged") {
    Sample s = benign(0, 0, 0, 0);
    s.target_concept = ConceptId{1};
    Dataset d({s, benign(1, 1, 1, 1)}, make_matrix({{1.0f, 0.0f}, {0.0f, 1.0f}}),
              make_matrix({{1.0f, 0.0f}, {0.0f, 1.0f}}));
    CHECK_FALSE(validate_dataset(d, kBinary).ok());
}

TEST_CASE("dataset derives concept counts and poison totals") {
    Dataset d({benign(0, 0, 0, 0), poison(1, 0, 2, 1, 1), benign(2, 0, 2, 2), benign(3, 2, 3, 3)},
              make_matrix({{1.0f, 0.0f}, {0.0f, 1.0f}, {1.0f, 1.0f}, {1.0f, 2.0f}}),
              make_matrix({{1.0f, 0.0f}, {0.0f, 1.0f}, {1.0f, 1.0f}, {1.0f, 2.0f}}));
    CHECK(d.concept_count() == 3);
    CHECK(d.poison_count() == 1);
    CHECK(d.per_concept_counts()[0].total == 3);
    CHECK(d.per_concept_counts()[0].poisoned == 1);
    CHECK(d.per_concept_counts()[2].total == 1);
    CHECK(image_concept_of(d.sample(1)) == ConceptId{2});
}
