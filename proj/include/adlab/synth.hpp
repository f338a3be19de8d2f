#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "adlab/theory.hpp"
#include "adlab/types.hpp"

namespace adlab::synth {

// Continuous stand-in for well-separated concepts: per concept, one image
// cluster center and an independently drawn text cluster center. Centers are
// mutually orthogonal directions (while C <= dim) scaled so two centers sit
// `center_separation` apart; samples scatter around them with `spread`.
struct GaussianWorldSpec {
    std::uint32_t concepts = 0;      // C
    std::uint64_t per_concept = 0;   // n
    std::uint32_t dim = 0;
    double center_separation = 1.0;
    double spread = 0.05;
    std::uint64_t seed = 0;
};

enum class PoisonMode : std::uint8_t { DirtyLabel, CleanLabel };
enum class TargetRule : std::uint8_t { RandomDistinct, Explicit };

struct PoisonScenario {
    std::uint32_t poisoned_concepts = 0;   // C_P
    std::uint64_t poison_per_concept = 0;  // m
    PoisonMode mode = PoisonMode::DirtyLabel;
    double gamma = 1.0;                    // CleanLabel blend factor in (0,1]
    TargetRule target_rule = TargetRule::RandomDistinct;
    std::vector<std::pair<ConceptId, ConceptId>> explicit_targets;  // Explicit only
    std::uint64_t seed = 0;
};

// Materializes the appendix's analytical setting; poison image rows carry the
// target concept's identity. Deterministic in the spec's seed.
Dataset gen_binary_world(const theory::BinaryWorldSpec& spec);

// Gaussian-cluster world for the cosine metric. Deterministic in the seed.
Dataset gen_gaussian_world(const GaussianWorldSpec& spec);

// Replaces m image rows per poisoned concept. DirtyLabel resamples image
// embeddings from the target concept's rows; CleanLabel blends toward a
// sampled target embedding: normalize((1-gamma)*x_p + gamma*x_t). Text rows,
// N, and concepts never change; role/target metadata is set on the chosen
// samples. Total poison count is C_P*m.
Dataset inject_poison(const Dataset& benign, const PoisonScenario& scenario);

// Seeded choice of C_P distinct source concepts, ascending.
std::vector<ConceptId> select_poison_sources(std::uint32_t concepts, std::uint32_t poisoned,
                                             std::uint64_t seed);

// Seeded injective assignment of targets with target != source throughout.
std::vector<std::pair<ConceptId, ConceptId>> random_distinct_targets(
    std::span<const ConceptId> sources, std::uint32_t concepts, std::uint64_t seed);

}  // namespace adlab::synth
