#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "adlab/types.hpp"

namespace adlab::theory {

// Inputs for the single-concept poisoning bound.
struct SingleConceptBoundInputs {
    double alpha = 0.8;
    double rho = 0.0;              // m_p / N
    double delta_feature = 1.0;    // max per-sample feature increase, <= 1
    double delta_structure = 1.0;  // max per-sample structure increase, <= 1
    std::uint64_t n_p = 0;         // samples of the poisoned concept
    std::uint64_t n_t = 0;         // samples of the target concept
    std::uint64_t total = 0;       // N
};

// Maximum AD change from poisoning one concept:
// alpha*rho*delta_f + 2(1-alpha)*rho*((n_p+n_t)/N - rho)*delta_s.
double single_concept_bound(const SingleConceptBoundInputs& inputs);

// Inputs for the multi-concept lower bound.
struct MultiConceptBoundInputs {
    double alpha = 0.8;
    std::uint64_t poison_per_concept = 0;  // m
    std::uint64_t per_concept = 0;         // n, benign-plus-poison samples per concept
    std::uint64_t total = 0;               // N
    std::uint32_t poisoned_concepts = 0;   // C_P
};

// Closed-form lower bound on the AD of a poisoned binary world:
// alpha*m*C_P/N + (2(1-a)m(n-m)/N^2 + 2(1-a)m(n-m)/N^2)*C_P. Linear in C_P.
double multi_concept_lower_bound(const MultiConceptBoundInputs& inputs);

// Analytical world with C equally sized concepts under binary distances.
// When target_map is absent, sources and injective distinct targets are
// drawn deterministically from the seed.
struct BinaryWorldSpec {
    std::uint32_t concepts = 0;                 // C
    std::uint64_t per_concept = 0;              // n
    std::uint32_t poisoned_concepts = 0;        // C_P
    std::uint64_t poison_per_concept = 0;       // m
    std::optional<std::vector<std::pair<ConceptId, ConceptId>>> target_map;
    std::uint64_t seed = 0;
};

// The concrete source->target assignment the spec denotes, sorted by source.
std::vector<std::pair<ConceptId, ConceptId>> resolve_target_map(const BinaryWorldSpec& spec);

struct BinaryAd {
    double feature = 0.0;
    double structure = 0.0;
    double combined = 0.0;
};

// Exact AD of the binary world (not the lower bound): the inter-concept term
// distinguishes whether a source's target is itself poisoned.
BinaryAd binary_world_exact_ad(const BinaryWorldSpec& spec, double alpha);

struct MonotonicityReport {
    std::vector<std::uint32_t> cp_values;
    std::vector<double> ad_values;
    bool strictly_increasing = false;
};

// Materializes the world at each C_P, measures exact AD with the engine, and
// reports whether the sequence strictly increases.
MonotonicityReport check_theorem_monotonicity(const BinaryWorldSpec& base,
                                              std::span<const std::uint32_t> cp_values,
                                              double alpha);

struct BoundValidityReport {
    double bound = 0.0;
    double exact = 0.0;
    bool holds = false;
};

// Compares the closed-form lower bound against engine-measured AD of the
// materialized world (holds within an additive 1e-12).
BoundValidityReport check_bound_validity(const BinaryWorldSpec& spec, double alpha);

}  // namespace adlab::theory
