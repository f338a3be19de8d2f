#include "adlab/theory.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "adlab/engine.hpp"
#include "adlab/synth.hpp"

namespace adlab::theory {

namespace {

void check_alpha(double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidInput("alpha must lie in [0,1]");
}

void check_spec(const BinaryWorldSpec& spec) {
    if (spec.concepts == 0) throw InvalidInput("binary world: concepts must be positive");
    if (spec.per_concept == 0) throw InvalidInput("binary world: per_concept must be positive");
    if (spec.poisoned_concepts > spec.concepts)
        throw InvalidInput("binary world: C_P exceeds concept count");
    if (spec.poisoned_concepts > 0) {
        if (spec.concepts < 2)
            throw InvalidInput("binary world: poisoning needs at least two concepts");
        if (spec.poison_per_concept >= spec.per_concept)
            throw InvalidInput("binary world: m < n required");
    }
    if (spec.target_map) {
        if (spec.target_map->size() != spec.poisoned_concepts)
            throw InvalidInput("binary world: target_map size must equal C_P");
        std::unordered_set<std::uint32_t> sources, targets;
        for (const auto& [src, tgt] : *spec.target_map) {
            if (src.value >= spec.concepts || tgt.value >= spec.concepts)
                throw InvalidInput("binary world: target_map references unknown concept");
            if (src == tgt) throw InvalidInput("binary world: target must differ from source");
            if (!sources.insert(src.value).second)
                throw InvalidInput("binary world: duplicate source in target_map");
            if (!targets.insert(tgt.value).second)
                throw InvalidInput("binary world: target_map must be injective");
        }
    }
}

}  // namespace

double single_concept_bound(const SingleConceptBoundInputs& in) {
    check_alpha(in.alpha);
    if (!(in.delta_feature >= 0.0 && in.delta_feature <= 1.0))
        throw InvalidInput("delta_feature must lie in [0,1]");
    if (!(in.delta_structure >= 0.0 && in.delta_structure <= 1.0))
        throw InvalidInput("delta_structure must lie in [0,1]");
    if (in.total == 0) throw InvalidInput("total sample count must be positive");
    if (in.n_p + in.n_t > in.total) throw InvalidInput("n_p + n_t must not exceed N");
    const double n = static_cast<double>(in.total);
    if (!(in.rho >= 0.0) || in.rho > static_cast<double>(in.n_p) / n)
        throw InvalidInput("rho must lie in [0, n_p/N]");
    const double share = (static_cast<double>(in.n_p) + static_cast<double>(in.n_t)) / n;
    return in.alpha * in.rho * in.delta_feature +
           2.0 * (1.0 - in.alpha) * in.rho * (share - in.rho) * in.delta_structure;
}

double multi_concept_lower_bound(const MultiConceptBoundInputs& in) {
    check_alpha(in.alpha);
    if (in.per_concept == 0) throw InvalidInput("per_concept must be positive");
    if (in.poison_per_concept >= in.per_concept) throw InvalidInput("m < n required");
    if (in.total == 0) throw InvalidInput("total sample count must be positive");
    if (static_cast<std::uint64_t>(in.poisoned_concepts) * in.per_concept > in.total)
        throw InvalidInput("C_P * n must not exceed N");
    const double m = static_cast<double>(in.poison_per_concept);
    const double n = static_cast<double>(in.per_concept);
    const double N = static_cast<double>(in.total);
    const double cp = static_cast<double>(in.poisoned_concepts);
    const double intra = 2.0 * (1.0 - in.alpha) * m * (n - m) / (N * N);
    const double inter = 2.0 * (1.0 - in.alpha) * m * (n - m) / (N * N);
    return in.alpha * m * cp / N + (intra + inter) * cp;
}

std::vector<std::pair<ConceptId, ConceptId>> resolve_target_map(const BinaryWorldSpec& spec) {
    check_spec(spec);
    if (spec.target_map) {
        auto map = *spec.target_map;
        std::sort(map.begin(), map.end());
        return map;
    }
    if (spec.poisoned_concepts == 0) return {};
    const auto sources =
        synth::select_poison_sources(spec.concepts, spec.poisoned_concepts, spec.seed);
    return synth::random_distinct_targets(sources, spec.concepts, spec.seed);
}

BinaryAd binary_world_exact_ad(const BinaryWorldSpec& spec, double alpha) {
    check_alpha(alpha);
    const auto map = resolve_target_map(spec);

    const double n = static_cast<double>(spec.per_concept);
    const double m = static_cast<double>(spec.poison_per_concept);
    const double N = static_cast<double>(spec.concepts) * n;

    std::unordered_set<std::uint32_t> poisoned;
    for (const auto& [src, tgt] : map) poisoned.insert(src.value);

    // Per poisoned concept: m*(n-m) mismatched intra-concept pairs plus
    // m*(n - m*[target poisoned]) mismatched pairs against the target.
    double pair_total = 0.0;
    for (const auto& [src, tgt] : map) {
        pair_total += m * (n - m);
        pair_total += m * (n - (poisoned.contains(tgt.value) ? m : 0.0));
    }

    BinaryAd ad;
    ad.feature = map.empty() ? 0.0 : m * static_cast<double>(map.size()) / N;
    ad.structure = map.empty() ? 0.0 : (2.0 * pair_total) / (N * N);
    ad.combined = alpha * ad.feature + (1.0 - alpha) * ad.structure;
    return ad;
}

MonotonicityReport check_theorem_monotonicity(const BinaryWorldSpec& base,
                                              std::span<const std::uint32_t> cp_values,
                                              double alpha) {
    check_alpha(alpha);
    MonotonicityReport report;
    report.cp_values.assign(cp_values.begin(), cp_values.end());
    const MetricConfig config{MetricKind::BinaryLabel, alpha};
    for (std::uint32_t cp : cp_values) {
        BinaryWorldSpec spec = base;
        spec.poisoned_concepts = cp;
        spec.target_map.reset();
        const Dataset world = synth::gen_binary_world(spec);
        const ADReport ad = combined_ad(world, config, {});
        report.ad_values.push_back(ad.combined.at(alpha));
    }
    report.strictly_increasing = true;
    for (std::size_t i = 1; i < report.ad_values.size(); ++i)
        if (!(report.ad_values[i] > report.ad_values[i - 1])) {
            report.strictly_increasing = false;
            break;
        }
    return report;
}

BoundValidityReport check_bound_validity(const BinaryWorldSpec& spec, double alpha) {
    check_alpha(alpha);
    check_spec(spec);
    BoundValidityReport report;
    report.bound = multi_concept_lower_bound(MultiConceptBoundInputs{
        alpha, spec.poison_per_concept, spec.per_concept,
        static_cast<std::uint64_t>(spec.concepts) * spec.per_concept, spec.poisoned_concepts});
    const Dataset world = synth::gen_binary_world(spec);
    const MetricConfig config{MetricKind::BinaryLabel, alpha};
    report.exact = combined_ad(world, config, {}).combined.at(alpha);
    report.holds = report.bound <= report.exact + 1e-12;
    return report;
}

}  // namespace adlab::theory
