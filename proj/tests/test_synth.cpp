#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "adlab/engine.hpp"
#include "adlab/metrics.hpp"
#include "adlab/synth.hpp"
#include "adlab/theory.hpp"
#include "adlab/validate.hpp"

using namespace adlab;
using synth::GaussianWorldSpec;
using synth::PoisonMode;
using synth::PoisonScenario;
using theory::BinaryWorldSpec;

namespace {

const MetricConfig kCosine{MetricKind::ContinuousCosine, 0.8};
const MetricConfig kBinary{MetricKind::BinaryLabel, 0.8};

GaussianWorldSpec gauss(std::uint32_t c, std::uint64_t n, std::uint32_t dim, std::uint64_t seed) {
    GaussianWorldSpec g;
    g.concepts = c;
    g.per_concept = n;
    g.dim = dim;
    g.seed = seed;
    return g;
}

}  // namespace

TEST_CASE("source selection is seeded, distinct, ascending") {
    const auto a = synth::select_poison_sources(20, 5, 123);
    const auto b = synth::select_poison_sources(20, 5, 123);
    CHECK(a == b);
    CHECK(a.size() == 5);
    CHECK(std::is_sorted(a.begin(), a.end()));
    std::set<std::uint32_t> uniq;
    for (auto c : a) uniq.insert(c.value);
    CHECK(uniq.size() == 5);
    CHECK_THROWS_AS(synth::select_poison_sources(3, 4, 1), InvalidInput);
}

TEST_CASE("random distinct targets are injective and avoid sources") {
    const auto sources = synth::select_poison_sources(10, 6, 9);
    const auto map = synth::random_distinct_targets(sources, 10, 9);
    REQUIRE(map.size() == 6);
    std::set<std::uint32_t> targets;
    for (const auto& [src, tgt] : map) {
        CHECK(src != tgt);
        targets.insert(tgt.value);
    }
    CHECK(targets.size() == 6);
}

TEST_CASE("random distinct targets: full derangement when every concept is poisoned") {
    std::vector<ConceptId> all;
    for (std::uint32_t c = 0; c < 5; ++c) all.push_back(ConceptId{c});
    const auto map = synth::random_distinct_targets(all, 5, 77);
    REQUIRE(map.size() == 5);
    std::set<std::uint32_t> targets;
    for (const auto& [src, tgt] : map) {
        CHECK(src != tgt);
        targets.insert(tgt.value);
    }
    CHECK(targets.size() == 5);
}

TEST_CASE("binary world: benign generation") {
    BinaryWorldSpec spec;
    spec.concepts = 10;
    spec.per_concept = 100;
    const Dataset world = synth::gen_binary_world(spec);
    CHECK(world.size() == 1000);
    CHECK(world.poison_count() == 0);
    CHECK(validate_dataset(world, kBinary).ok());
    CHECK(validate_dataset(world, kCosine).ok());  // angle-encoded rows are unit vectors
}

TEST_CASE("binary world: poisoned generation has C_P*m poisons and distinct targets") {
    BinaryWorldSpec spec;
    spec.concepts = 10;
    spec.per_concept = 100;
    spec.poisoned_concepts = 3;
    spec.poison_per_concept = 10;
    spec.seed = 17;
    const Dataset world = synth::gen_binary_world(spec);
    CHECK(world.size() == 1000);
    CHECK(world.poison_count() == 30);
    CHECK(validate_dataset(world, kBinary).ok());

    std::set<std::uint32_t> sources, targets;
    for (const auto& s : world.samples())
        if (s.role == Role::Poison) {
            sources.insert(s.concept_id.value);
            targets.insert(s.target_concept->value);
        }
    CHECK(sources.size() == 3);
    CHECK(targets.size() == 3);

    const Dataset again = synth::gen_binary_world(spec);
    CHECK(world == again);
}

TEST_CASE("gaussian world: determinism and cluster geometry") {
    const GaussianWorldSpec spec = gauss(5, 50, 64, 31);
    const Dataset a = synth::gen_gaussian_world(spec);
    const Dataset b = synth::gen_gaussian_world(spec);
    CHECK(a == b);
    CHECK(a.size() == 250);
    CHECK(validate_dataset(a, kCosine).ok());

    // mean intra-concept image distance < mean inter-concept image distance
    double intra = 0.0, inter = 0.0;
    std::size_t intra_n = 0, inter_n = 0;
    for (std::size_t i = 0; i < a.size(); i += 3) {
        for (std::size_t k = i + 1; k < a.size(); k += 3) {
            const double d = cosine_distance(a.image_matrix().row(a.sample(i).image_row),
                                             a.image_matrix().row(a.sample(k).image_row));
            if (a.sample(i).concept_id == a.sample(k).concept_id) {
                intra += d;
                ++intra_n;
            } else {
                inter += d;
                ++inter_n;
            }
        }
    }
    REQUIRE(intra_n > 0);
    REQUIRE(inter_n > 0);
    CHECK(intra / intra_n < inter / inter_n);
}

TEST_CASE("gaussian world: vanishing spread drives benign structure AD to zero") {
    GaussianWorldSpec spec = gauss(4, 30, 16, 7);
    spec.spread = 1e-6;
    const Dataset world = synth::gen_gaussian_world(spec);
    CHECK(structure_ad(world, kCosine).value < 0.01);
}

TEST_CASE("gaussian world input validation") {
    CHECK_THROWS_AS(synth::gen_gaussian_world(gauss(0, 10, 8, 1)), InvalidInput);
    CHECK_THROWS_AS(synth::gen_gaussian_world(gauss(2, 10, 1, 1)), InvalidInput);
    GaussianWorldSpec bad = gauss(2, 10, 8, 1);
    bad.spread = 0.0;
    CHECK_THROWS_AS(synth::gen_gaussian_world(bad), InvalidInput);
    GaussianWorldSpec one = gauss(1, 1, 8, 1);
    CHECK_THROWS_AS(synth::gen_gaussian_world(one), InvalidInput);
}

TEST_CASE("inject: poison count, unchanged text and untouched image rows") {
    const Dataset benign = synth::gen_gaussian_world(gauss(6, 20, 16, 3));
    PoisonScenario sc;
    sc.poisoned_concepts = 2;
    sc.poison_per_concept = 5;
    sc.seed = 11;
    const Dataset poisoned = synth::inject_poison(benign, sc);

    CHECK(poisoned.size() == benign.size());
    CHECK(poisoned.concept_count() == benign.concept_count());
    CHECK(poisoned.poison_count() == 10);
    CHECK(poisoned.text_matrix() == benign.text_matrix());
    CHECK(validate_dataset(poisoned, kCosine).ok());

    for (std::size_t i = 0; i < poisoned.size(); ++i) {
        const Sample& s = poisoned.sample(i);
        CHECK(s.text_row == benign.sample(i).text_row);
        if (s.role == Role::Benign) {
            const auto original = benign.image_matrix().row(benign.sample(i).image_row);
            const auto current = poisoned.image_matrix().row(s.image_row);
            CHECK(std::equal(original.begin(), original.end(), current.begin()));
        }
    }

    const Dataset again = synth::inject_poison(benign, sc);
    CHECK(poisoned == again);
}

TEST_CASE("inject: preconditions and budget errors") {
    const Dataset benign = synth::gen_gaussian_world(gauss(3, 4, 8, 5));
    PoisonScenario sc;
    sc.poisoned_concepts = 1;
    sc.poison_per_concept = 4;  // m == n
    sc.seed = 2;
    CHECK_THROWS_AS(synth::inject_poison(benign, sc), InvalidInput);

    sc.poison_per_concept = 1;
    const Dataset poisoned = synth::inject_poison(benign, sc);
    CHECK_THROWS_AS(synth::inject_poison(poisoned, sc), InvalidInput);  // not all-benign

    PoisonScenario bad_gamma = sc;
    bad_gamma.mode = PoisonMode::CleanLabel;
    bad_gamma.gamma = 0.0;
    CHECK_THROWS_AS(synth::inject_poison(benign, bad_gamma), InvalidInput);

    PoisonScenario bad_map = sc;
    bad_map.target_rule = synth::TargetRule::Explicit;
    bad_map.explicit_targets = {{ConceptId{0}, ConceptId{0}}};
    CHECK_THROWS_AS(synth::inject_poison(benign, bad_map), InvalidInput);
}

TEST_CASE("inject: C_P=0 returns the dataset unchanged") {
    const Dataset benign = synth::gen_gaussian_world(gauss(3, 5, 8, 5));
    PoisonScenario sc;
    sc.poisoned_concepts = 0;
    sc.poison_per_concept = 0;
    const Dataset out = synth::inject_poison(benign, sc);
    CHECK(out == benign);
}

TEST_CASE("inject: dirty-label on the binary C=2,n=2 world reproduces the worked AD") {
    BinaryWorldSpec spec;
    spec.concepts = 2;
    spec.per_concept = 2;
    const Dataset benign = synth::gen_binary_world(spec);

    PoisonScenario sc;
    sc.poisoned_concepts = 1;
    sc.poison_per_concept = 1;
    sc.mode = PoisonMode::DirtyLabel;
    sc.seed = 4;
    const Dataset poisoned = synth::inject_poison(benign, sc);
    const ADReport report = combined_ad(poisoned, kBinary, {});
    CHECK(report.feature_ad == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(report.structure_ad == doctest::Approx(0.375).epsilon(1e-15));
    CHECK(report.combined.at(0.8) == doctest::Approx(0.275).epsilon(1e-15));
}

TEST_CASE("inject: clean-label gamma=1 matches dirty-label AD under cosine") {
    const Dataset benign = synth::gen_gaussian_world(gauss(5, 20, 16, 21));
    PoisonScenario dirty;
    dirty.poisoned_concepts = 2;
    dirty.poison_per_concept = 4;
    dirty.mode = PoisonMode::DirtyLabel;
    dirty.seed = 8;
    PoisonScenario clean = dirty;
    clean.mode = PoisonMode::CleanLabel;
    clean.gamma = 1.0;

    const double ad_dirty =
        combined_ad(synth::inject_poison(benign, dirty), kCosine, {}).combined.at(0.8);
    const double ad_clean =
        combined_ad(synth::inject_poison(benign, clean), kCosine, {}).combined.at(0.8);
    CHECK(ad_clean == doctest::Approx(ad_dirty).epsilon(1e-7));
}

TEST_CASE("inject: dataset AD rises with the clean-label blend factor") {
    const double gammas[] = {0.25, 0.5, 0.75, 1.0};
    double mean_ad[4] = {0, 0, 0, 0};
    double mean_dirty = 0.0;
    const int seeds = 20;
    for (int s = 0; s < seeds; ++s) {
        const Dataset benign = synth::gen_gaussian_world(gauss(6, 40, 32, 100 + s));
        PoisonScenario sc;
        sc.poisoned_concepts = 3;
        sc.poison_per_concept = 10;
        sc.seed = 500 + s;
        sc.mode = PoisonMode::DirtyLabel;
        mean_dirty += combined_ad(synth::inject_poison(benign, sc), kCosine, {}).combined.at(0.8);
        sc.mode = PoisonMode::CleanLabel;
        for (int gi = 0; gi < 4; ++gi) {
            sc.gamma = gammas[gi];
            mean_ad[gi] +=
                combined_ad(synth::inject_poison(benign, sc), kCosine, {}).combined.at(0.8);
        }
    }
    for (int gi = 1; gi < 4; ++gi) CHECK(mean_ad[gi] >= mean_ad[gi - 1]);
    CHECK(mean_ad[1] / seeds < mean_dirty / seeds);  // gamma=0.5 stays below dirty-label
}
