#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adlab/synth.hpp"
#include "adlab/types.hpp"

namespace adlab::attack {

struct TargetMapping {
    std::vector<std::pair<ConceptId, ConceptId>> pairs;  // poisoned concept -> target
    bool distinct_targets = true;
};

enum class Strategy : std::uint8_t { Greedy, GreedyPlusSwap };

struct PlannerConfig {
    Strategy strategy = Strategy::Greedy;
    std::uint64_t iteration_budget = 0;        // swap attempts, GreedyPlusSwap only
    std::vector<ConceptId> candidate_targets;  // empty = every concept
    std::uint64_t seed = 0;
};

struct TraceEntry {
    std::string phase;  // "greedy", "swap-accept", "swap-reject"
    TargetMapping mapping;
    double ad = 0.0;
};

struct PlanResult {
    TargetMapping mapping;
    double achieved_ad = 0.0;
    std::vector<TraceEntry> trace;
};

// AD of the benign dataset poisoned under the scenario with this explicit
// mapping (injection keyed by the scenario seed, so results are comparable
// across mappings).
double mapping_ad(const Dataset& benign, const synth::PoisonScenario& scenario,
                  const TargetMapping& mapping, const MetricConfig& config,
                  std::size_t workers = 0);

// Chooses targets for the scenario's seeded source concepts. Greedy assigns
// each source (ascending id) the unused target with the largest exact AD
// increment, ties to the lowest id; GreedyPlusSwap then tries pairwise target
// swaps while AD strictly improves, within the iteration budget.
PlanResult optimize_targets(const Dataset& benign, const synth::PoisonScenario& scenario,
                            const MetricConfig& config, const PlannerConfig& planner,
                            std::size_t workers = 0);

}  // namespace adlab::attack
