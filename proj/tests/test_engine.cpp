#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "adlab/engine.hpp"
#include "adlab/synth.hpp"
#include "adlab/theory.hpp"
#include "helpers.hpp"

using namespace adlab;
using testutil::benign;
using testutil::make_matrix;
using testutil::poison;

namespace {

const MetricConfig kCosine{MetricKind::ContinuousCosine, 0.8};
const MetricConfig kBinary{MetricKind::BinaryLabel, 0.8};

// The appendix's smallest worked world: two concepts, two samples each,
// concept 0 poisoned into concept 1 with m=1.
Dataset tiny_binary_world() {
    theory::BinaryWorldSpec spec;
    spec.concepts = 2;
    spec.per_concept = 2;
    spec.poisoned_concepts = 1;
    spec.poison_per_concept = 1;
    spec.target_map = {{{ConceptId{0}, ConceptId{1}}}};
    return synth::gen_binary_world(spec);
}

Dataset random_gaussian(std::uint32_t concepts, std::uint64_t per_concept, std::uint32_t dim,
                        std::uint64_t seed, bool poisoned = false) {
    synth::GaussianWorldSpec g;
    g.concepts = concepts;
    g.per_concept = per_concept;
    g.dim = dim;
    g.seed = seed;
    Dataset world = synth::gen_gaussian_world(g);
    if (poisoned) {
        synth::PoisonScenario sc;
        sc.poisoned_concepts = std::max<std::uint32_t>(1, concepts / 3);
        sc.poison_per_concept = std::max<std::uint64_t>(1, per_concept / 5);
        sc.seed = seed + 1;
        world = synth::inject_poison(world, sc);
    }
    return world;
}

bool reports_close(const ADReport& a, const ADReport& b, double tol) {
    if (std::abs(a.feature_ad - b.feature_ad) > tol) return false;
    if (std::abs(a.structure_ad - b.structure_ad) > tol) return false;
    for (const auto& [alpha, value] : a.combined) {
        auto it = b.combined.find(alpha);
        if (it == b.combined.end() || std::abs(value - it->second) > tol) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("feature AD: all-benign binary world is exactly zero") {
    theory::BinaryWorldSpec spec;
    spec.concepts = 5;
    spec.per_concept = 4;
    const Dataset world = synth::gen_binary_world(spec);
    CHECK(feature_ad(world, kBinary) == 0.0);
}

TEST_CASE("feature AD: binary world N=100, C_P=2, m=5 gives 0.1") {
    theory::BinaryWorldSpec spec;
    spec.concepts = 10;
    spec.per_concept = 10;
    spec.poisoned_concepts = 2;
    spec.poison_per_concept = 5;
    spec.seed = 42;
    const Dataset world = synth::gen_binary_world(spec);
    CHECK(feature_ad(world, kBinary) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("feature AD: hand-built cosine pair distances 0.2 and 0.4 average to 0.3") {
    // cos = 0.6 -> distance 0.2; cos = 0.2 -> distance 0.4
    Dataset d({benign(0, 0, 0, 0), benign(1, 1, 1, 1)},
              make_matrix({{1.0f, 0.0f}, {1.0f, 0.0f}}),
              make_matrix({{0.6f, 0.8f}, {0.2f, float(std::sqrt(0.96))}}));
    CHECK(feature_ad(d, kCosine) == doctest::Approx(0.3).epsilon(1e-6));
}

TEST_CASE("structure AD: single-sample dataset is zero") {
    Dataset d({benign(0, 0, 0, 0)}, make_matrix({{1.0f, 0.0f}}), make_matrix({{0.0f, 1.0f}}));
    CHECK(structure_ad(d, kCosine).value == 0.0);
}

TEST_CASE("structure AD: benign binary world is exactly zero") {
    theory::BinaryWorldSpec spec;
    spec.concepts = 4;
    spec.per_concept = 6;
    const Dataset world = synth::gen_binary_world(spec);
    CHECK(structure_ad(world, kBinary).value == 0.0);
}

TEST_CASE("structure AD: appendix C=2,n=2 world gives 6/16") {
    const Dataset world = tiny_binary_world();
    const auto s = structure_ad(world, kBinary);
    CHECK(s.value == doctest::Approx(0.375).epsilon(1e-15));
    CHECK(s.info.mode == EstimatorMode::Exact);
}

TEST_CASE("combined AD arithmetic reproduces the reported feature/structure pairs") {
    // (feature, structure, combined at 0.8, combined at 0.5)
    const double rows[7][4] = {
        {0.514, 0.1493, 0.441, 0.331}, {0.551, 0.1475, 0.470, 0.349},
        {0.608, 0.1463, 0.515, 0.377}, {0.703, 0.1440, 0.592, 0.424},
        {0.520, 0.1478, 0.446, 0.334}, {0.531, 0.1445, 0.453, 0.338},
        {0.547, 0.1369, 0.465, 0.342},
    };
    for (const auto& row : rows) {
        CHECK(std::abs(combine_ad(row[0], row[1], 0.8) - row[2]) <= 0.001);
        CHECK(std::abs(combine_ad(row[0], row[1], 0.5) - row[3]) <= 0.001);
    }
    CHECK(combine_ad(0.514, 0.1493, 1.0) == 0.514);  // alpha=1 is the feature term exactly
}

TEST_CASE("combined AD report satisfies the alpha identity and linearity") {
    const Dataset world = random_gaussian(4, 10, 8, 5, true);
    const double alphas[] = {0.0, 0.25, 0.5, 0.8, 1.0};
    const ADReport r = combined_ad(world, kCosine, alphas);
    CHECK(r.pair_count == 40ull * 40ull);
    for (double a : alphas)
        CHECK(r.combined.at(a) == a * r.feature_ad + (1.0 - a) * r.structure_ad);
    CHECK(r.combined.at(1.0) == r.feature_ad);
    CHECK(r.combined.at(0.0) == r.structure_ad);
    // linear in alpha with slope feature - structure
    const double slope = (r.combined.at(0.8) - r.combined.at(0.5)) / 0.3;
    CHECK(slope == doctest::Approx(r.feature_ad - r.structure_ad).epsilon(1e-9));
    CHECK_THROWS_AS(combined_ad(world, kCosine, std::vector<double>{1.5}), InvalidInput);
}

TEST_CASE("finetune AD blends base and fine-tune values") {
    CHECK(finetune_ad(0.3, 0.9, 1.0) == 0.9);
    CHECK(finetune_ad(0.3, 0.9, 0.0) == 0.3);
    CHECK(finetune_ad(0.441, 0.592, 0.5) == doctest::Approx(0.5165).epsilon(1e-15));
    CHECK_THROWS_AS(finetune_ad(-0.1, 0.5, 0.5), InvalidInput);
    CHECK_THROWS_AS(finetune_ad(0.5, 1.0001, 0.5), InvalidInput);
    CHECK_THROWS_AS(finetune_ad(0.5, 0.5, 1.5), InvalidInput);
}

TEST_CASE("per-sample scores on a single benign binary sample are zero") {
    Dataset d({benign(0, 0, 0, 0)}, make_matrix({{1.0f, 0.0f}}), make_matrix({{1.0f, 0.0f}}));
    const auto scores = per_sample_scores(d, kBinary);
    REQUIRE(scores.size() == 1);
    CHECK(scores[0].cross_distance == 0.0);
    CHECK(scores[0].structure_share == 0.0);
    CHECK(scores[0].combined == 0.0);
}

TEST_CASE("per-sample scores on the appendix C=2,n=2 world") {
    const Dataset world = tiny_binary_world();
    const auto scores = per_sample_scores(world, kBinary);
    REQUIRE(scores.size() == 4);
    // sample 0 is the poison sample
    CHECK(scores[0].cross_distance == 1.0);
    CHECK(scores[0].structure_share == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(scores[0].combined == doctest::Approx(0.95).epsilon(1e-15));
    // sample 1 is the benign sample of the poisoned concept
    CHECK(scores[1].cross_distance == 0.0);
    CHECK(scores[1].structure_share == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(scores[1].combined == doctest::Approx(0.05).epsilon(1e-15));
}

TEST_CASE("mean of per-sample combined scores equals dataset AD") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const Dataset world = random_gaussian(5, 24, 16, seed, seed != 1);
        const ADReport report = combined_ad(world, kCosine, {});
        const auto scores = per_sample_scores(world, kCosine);
        double mean = 0.0;
        for (const auto& s : scores) mean += s.combined;
        mean /= static_cast<double>(scores.size());
        CHECK(std::abs(mean - report.combined.at(0.8)) <= 1e-9);
    }
}

TEST_CASE("oracle equivalence on randomized binary and gaussian worlds") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        theory::BinaryWorldSpec spec;
        spec.concepts = 2 + static_cast<std::uint32_t>(rng() % 7);
        spec.per_concept = 2 + rng() % 12;
        spec.poisoned_concepts = static_cast<std::uint32_t>(rng() % (spec.concepts + 1));
        spec.poison_per_concept = spec.poisoned_concepts ? 1 + rng() % (spec.per_concept - 1) : 0;
        spec.seed = rng();
        const Dataset world = synth::gen_binary_world(spec);
        const ADReport engine = combined_ad(world, kBinary, {});
        const ADReport oracle = brute_force_ad(world, kBinary);
        CHECK(reports_close(engine, oracle, 1e-9));
    }
    for (std::uint64_t seed : {7u, 8u}) {
        const Dataset world = random_gaussian(4, 12, 8, seed, true);
        const ADReport engine = combined_ad(world, kCosine, {});
        const ADReport oracle = brute_force_ad(world, kCosine);
        CHECK(reports_close(engine, oracle, 1e-9));
    }
}

TEST_CASE("oracle: appendix C=2,n=2 world combined value") {
    const ADReport oracle = brute_force_ad(tiny_binary_world(), kBinary);
    CHECK(oracle.feature_ad == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(oracle.structure_ad == doctest::Approx(0.375).epsilon(1e-15));
    CHECK(oracle.combined.at(0.8) == doctest::Approx(0.275).epsilon(1e-15));
}

TEST_CASE("oracle refuses datasets above its cap") {
    const Dataset world = random_gaussian(2, 10, 4, 3);
    CHECK_THROWS_AS(brute_force_ad(world, kCosine, {}, 10), InvalidInput);
}

TEST_CASE("permutation invariance of exact AD") {
    const Dataset world = random_gaussian(4, 15, 8, 21, true);
    const ADReport before = combined_ad(world, kCosine, {});

    std::vector<Sample> shuffled = world.samples();
    std::mt19937_64 rng(5);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const Dataset permuted(std::move(shuffled), world.image_matrix(), world.text_matrix());
    const ADReport after = combined_ad(permuted, kCosine, {});

    CHECK(std::abs(before.feature_ad - after.feature_ad) <= 1e-12);
    CHECK(std::abs(before.structure_ad - after.structure_ad) <= 1e-12);
    CHECK(std::abs(before.combined.at(0.8) - after.combined.at(0.8)) <= 1e-12);
}

TEST_CASE("exact AD is bit-identical across worker counts") {
    const Dataset world = random_gaussian(6, 80, 16, 13, true);  // N=480 spans several tiles
    const ADReport w1 = combined_ad(world, kCosine, {}, {}, 1);
    const ADReport w2 = combined_ad(world, kCosine, {}, {}, 2);
    const ADReport w4 = combined_ad(world, kCosine, {}, {}, 4);
    CHECK(w1.feature_ad == w2.feature_ad);
    CHECK(w1.structure_ad == w2.structure_ad);
    CHECK(w1.feature_ad == w4.feature_ad);
    CHECK(w1.structure_ad == w4.structure_ad);
    CHECK(w1.combined.at(0.8) == w4.combined.at(0.8));

    const auto s1 = per_sample_scores(world, kCosine, 1);
    const auto s4 = per_sample_scores(world, kCosine, 4);
    REQUIRE(s1.size() == s4.size());
    for (std::size_t i = 0; i < s1.size(); ++i) {
        CHECK(s1[i].structure_share == s4[i].structure_share);
        CHECK(s1[i].combined == s4[i].combined);
    }
}

TEST_CASE("sampling plan validation") {
    const Dataset world = random_gaussian(3, 10, 4, 1);
    CHECK_THROWS_AS(structure_ad(world, kCosine, SamplingPlan{0, 1}), InvalidInput);
    CHECK_THROWS_AS(structure_ad(world, kCosine, SamplingPlan{30ull * 30ull + 1ull, 1}),
                    InvalidInput);
}

TEST_CASE("sampled structure AD is unbiased across seeds") {
    const Dataset world = random_gaussian(5, 30, 8, 77, true);  // N=150
    const double exact = structure_ad(world, kCosine).value;

    const int seeds = 120;
    std::vector<double> estimates;
    estimates.reserve(seeds);
    for (int s = 0; s < seeds; ++s) {
        const auto r = structure_ad(world, kCosine, SamplingPlan{4000, 1000 + s});
        CHECK(r.info.mode == EstimatorMode::Sampled);
        CHECK(r.info.pair_budget == 4000);
        CHECK(r.info.stderr_estimate > 0.0);
        estimates.push_back(r.value);
    }
    double mean = 0.0;
    for (double e : estimates) mean += e;
    mean /= seeds;
    double var = 0.0;
    for (double e : estimates) var += (e - mean) * (e - mean);
    var /= (seeds - 1);
    const double se_of_mean = std::sqrt(var / seeds);
    CHECK(std::abs(mean - exact) <= 3.0 * se_of_mean);
}

TEST_CASE("sampled mode is deterministic for a fixed plan") {
    const Dataset world = random_gaussian(4, 25, 8, 31, true);
    const auto a = structure_ad(world, kCosine, SamplingPlan{5000, 9}, 1);
    const auto b = structure_ad(world, kCosine, SamplingPlan{5000, 9}, 4);
    CHECK(a.value == b.value);
    CHECK(a.info.stderr_estimate == b.info.stderr_estimate);
}

TEST_CASE("engine rejects invalid datasets") {
    Dataset zero_norm({benign(0, 0, 0, 0), benign(1, 1, 1, 1)},
                      make_matrix({{0.0f, 0.0f}, {1.0f, 0.0f}}),
                      make_matrix({{1.0f, 0.0f}, {0.0f, 1.0f}}));
    CHECK_THROWS_AS(feature_ad(zero_norm, kCosine), InvalidInput);
    CHECK_THROWS_AS(structure_ad(zero_norm, kCosine), InvalidInput);
    CHECK_THROWS_AS(per_sample_scores(zero_norm, kCosine), InvalidInput);
    CHECK_THROWS_AS(brute_force_ad(zero_norm, kCosine), InvalidInput);
}
