#include "adlab/attack.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <unordered_set>

#include "adlab/engine.hpp"

namespace adlab::attack {

namespace {

double evaluate_mapping(const Dataset& benign, const synth::PoisonScenario& scenario,
                        const std::vector<std::pair<ConceptId, ConceptId>>& pairs,
                        const MetricConfig& config, std::size_t workers) {
    synth::PoisonScenario s = scenario;
    s.target_rule = synth::TargetRule::Explicit;
    s.explicit_targets = pairs;
    s.poisoned_concepts = static_cast<std::uint32_t>(pairs.size());
    const Dataset poisoned = synth::inject_poison(benign, s);
    return combined_ad(poisoned, config, {}, {}, workers).combined.at(config.alpha);
}

}  // namespace

double mapping_ad(const Dataset& benign, const synth::PoisonScenario& scenario,
                  const TargetMapping& mapping, const MetricConfig& config, std::size_t workers) {
    if (mapping.pairs.size() != scenario.poisoned_concepts)
        throw InvalidInput("mapping_ad: mapping size must equal the scenario's C_P");
    return evaluate_mapping(benign, scenario, mapping.pairs, config, workers);
}

PlanResult optimize_targets(const Dataset& benign, const synth::PoisonScenario& scenario,
                            const MetricConfig& config, const PlannerConfig& planner,
                            std::size_t workers) {
    const std::uint32_t concepts = benign.concept_count();
    const std::uint32_t cp = scenario.poisoned_concepts;
    if (concepts < 2) throw InvalidInput("optimize_targets: need at least two concepts");
    if (cp == 0) throw InvalidInput("optimize_targets: scenario poisons no concepts");
    if (cp > concepts - 1)
        throw InvalidInput("optimize_targets: distinct targets are infeasible with C_P > C-1");

    const auto sources = synth::select_poison_sources(concepts, cp, scenario.seed);

    std::vector<ConceptId> candidates = planner.candidate_targets;
    if (candidates.empty()) {
        candidates.reserve(concepts);
        for (std::uint32_t c = 0; c < concepts; ++c) candidates.push_back(ConceptId{c});
    } else {
        std::sort(candidates.begin(), candidates.end());
        candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
        for (ConceptId c : candidates)
            if (c.value >= concepts)
                throw InvalidInput("optimize_targets: candidate target out of range");
    }

    PlanResult result;
    std::vector<std::pair<ConceptId, ConceptId>> current;
    std::unordered_set<std::uint32_t> used;
    double current_ad = 0.0;

    for (const ConceptId src : sources) {
        double best_ad = -std::numeric_limits<double>::infinity();
        ConceptId best_target{};
        bool found = false;
        for (const ConceptId t : candidates) {  // ascending: ties keep the lowest id
            if (t == src || used.contains(t.value)) continue;
            auto trial = current;
            trial.emplace_back(src, t);
            const double ad = evaluate_mapping(benign, scenario, trial, config, workers);
            if (ad > best_ad) {
                best_ad = ad;
                best_target = t;
                found = true;
            }
        }
        if (!found)
            throw InvalidInput("optimize_targets: no feasible target for concept " +
                               std::to_string(src.value));
        current.emplace_back(src, best_target);
        used.insert(best_target.value);
        current_ad = best_ad;
    }
    result.trace.push_back(TraceEntry{"greedy", TargetMapping{current, true}, current_ad});

    if (planner.strategy == Strategy::GreedyPlusSwap && current.size() >= 2) {
        std::uint64_t attempts = 0;
        bool improved = true;
        while (improved && attempts < planner.iteration_budget) {
            improved = false;
            for (std::size_t a = 0; a + 1 < current.size() && !improved; ++a) {
                for (std::size_t b = a + 1; b < current.size() && !improved; ++b) {
                    if (attempts >= planner.iteration_budget) break;
                    auto trial = current;
                    std::swap(trial[a].second, trial[b].second);
                    if (trial[a].second == trial[a].first || trial[b].second == trial[b].first)
                        continue;
                    ++attempts;
                    const double ad = evaluate_mapping(benign, scenario, trial, config, workers);
                    const bool accept = ad > current_ad;
                    result.trace.push_back(TraceEntry{accept ? "swap-accept" : "swap-reject",
                                                      TargetMapping{trial, true}, ad});
                    if (accept) {
                        current = std::move(trial);
                        current_ad = ad;
                        improved = true;
                    }
                }
            }
        }
    }

    result.mapping = TargetMapping{std::move(current), true};
    result.achieved_ad = current_ad;
    return result;
}

}  // namespace adlab::attack
