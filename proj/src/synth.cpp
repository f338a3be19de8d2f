#include "adlab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <unordered_set>

#include "adlab/rng.hpp"

namespace adlab::synth {

namespace {

constexpr std::uint64_t kSourceTag = 0x5355524345ULL;   // stream tag: source pick
constexpr std::uint64_t kTargetTag = 0x5441524745ULL;   // stream tag: target pick
constexpr std::uint64_t kWorldTag = 0x574F524C44ULL;    // stream tag: world draws
constexpr std::uint64_t kInjectTag = 0x504F49534EULL;   // stream tag: injection

}  // namespace

std::vector<ConceptId> select_poison_sources(std::uint32_t concepts, std::uint32_t poisoned,
                                             std::uint64_t seed) {
    if (poisoned > concepts) throw InvalidInput("cannot poison more concepts than exist");
    std::vector<std::uint32_t> ids(concepts);
    std::iota(ids.begin(), ids.end(), 0u);
    std::mt19937_64 rng(mix64(seed, kSourceTag));
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(poisoned);
    std::sort(ids.begin(), ids.end());
    std::vector<ConceptId> out;
    out.reserve(poisoned);
    for (std::uint32_t id : ids) out.push_back(ConceptId{id});
    return out;
}

std::vector<std::pair<ConceptId, ConceptId>> random_distinct_targets(
    std::span<const ConceptId> sources, std::uint32_t concepts, std::uint64_t seed) {
    if (sources.empty()) return {};
    if (concepts < 2) throw InvalidInput("distinct targets need at least two concepts");
    if (sources.size() > concepts)
        throw InvalidInput("more sources than concepts");

    std::mt19937_64 rng(mix64(seed, kTargetTag));
    std::vector<std::uint32_t> pool(concepts);
    std::iota(pool.begin(), pool.end(), 0u);

    // Greedy assignment over a shuffled pool; reshuffle on the rare dead end.
    for (int attempt = 0; attempt < 10000; ++attempt) {
        std::shuffle(pool.begin(), pool.end(), rng);
        std::vector<std::pair<ConceptId, ConceptId>> map;
        std::unordered_set<std::uint32_t> used;
        map.reserve(sources.size());
        bool ok = true;
        for (const ConceptId src : sources) {
            bool assigned = false;
            for (std::uint32_t cand : pool) {
                if (cand == src.value || used.contains(cand)) continue;
                map.emplace_back(src, ConceptId{cand});
                used.insert(cand);
                assigned = true;
                break;
            }
            if (!assigned) {
                ok = false;
                break;
            }
        }
        if (ok) {
            std::sort(map.begin(), map.end());
            return map;
        }
    }
    throw InvalidInput("no injective target assignment exists for these sources");
}

Dataset gen_binary_world(const theory::BinaryWorldSpec& spec) {
    const auto map = theory::resolve_target_map(spec);  // validates the spec

    const std::uint64_t n = spec.per_concept;
    const std::uint64_t total = static_cast<std::uint64_t>(spec.concepts) * n;

    std::vector<std::optional<ConceptId>> target_of(spec.concepts);
    for (const auto& [src, tgt] : map) target_of[src.value] = tgt;

    std::vector<Sample> samples;
    samples.reserve(total);
    EmbeddingMatrix image(total, 2);
    EmbeddingMatrix text(total, 2);

    const double step = 2.0 * std::numbers::pi / static_cast<double>(spec.concepts);
    auto encode = [&](std::span<float> row, std::uint32_t concept_value) {
        const double theta = step * static_cast<double>(concept_value);
        row[0] = static_cast<float>(std::cos(theta));
        row[1] = static_cast<float>(std::sin(theta));
    };

    std::uint64_t idx = 0;
    for (std::uint32_t c = 0; c < spec.concepts; ++c) {
        for (std::uint64_t j = 0; j < n; ++j, ++idx) {
            Sample s;
            s.id = idx;
            s.concept_id = ConceptId{c};
            s.image_row = idx;
            s.text_row = idx;
            const bool poisoned = target_of[c].has_value() && j < spec.poison_per_concept;
            if (poisoned) {
                s.role = Role::Poison;
                s.target_concept = target_of[c];
            }
            encode(image.row(idx), poisoned ? target_of[c]->value : c);
            encode(text.row(idx), c);
            samples.push_back(std::move(s));
        }
    }
    return Dataset(std::move(samples), std::move(image), std::move(text));
}

Dataset gen_gaussian_world(const GaussianWorldSpec& spec) {
    if (spec.concepts == 0) throw InvalidInput("gaussian world: concepts must be positive");
    if (spec.per_concept == 0) throw InvalidInput("gaussian world: per_concept must be positive");
    if (spec.dim < 2) throw InvalidInput("gaussian world: dim must be at least 2");
    if (!(spec.spread > 0.0)) throw InvalidInput("gaussian world: spread must be positive");
    if (!(spec.center_separation > 0.0))
        throw InvalidInput("gaussian world: center_separation must be positive");
    if (static_cast<std::uint64_t>(spec.concepts) * spec.per_concept < 2)
        throw InvalidInput("gaussian world: needs at least two samples");

    std::mt19937_64 rng(mix64(spec.seed, kWorldTag));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::size_t d = spec.dim;

    // Mutually orthogonal unit directions while C <= dim (random unit
    // directions beyond that), so well-separated clusters see each other at
    // a common angle in both domains.
    auto draw_directions = [&](std::uint32_t count) {
        std::vector<std::vector<double>> dirs;
        dirs.reserve(count);
        while (dirs.size() < count) {
            std::vector<double> v(d);
            for (double& x : v) x = gauss(rng);
            if (dirs.size() < d) {
                for (const auto& u : dirs) {
                    double proj = 0.0;
                    for (std::size_t j = 0; j < d; ++j) proj += v[j] * u[j];
                    for (std::size_t j = 0; j < d; ++j) v[j] -= proj * u[j];
                }
            }
            double norm = 0.0;
            for (double x : v) norm += x * x;
            norm = std::sqrt(norm);
            if (norm < 1e-9) continue;  // redraw a degenerate residual
            for (double& x : v) x /= norm;
            dirs.push_back(std::move(v));
        }
        return dirs;
    };

    const auto img_dirs = draw_directions(spec.concepts);
    const auto txt_dirs = draw_directions(spec.concepts);

    // Orthogonal centers of norm r sit r*sqrt(2) apart.
    const double radius = spec.center_separation / std::sqrt(2.0);
    const std::uint64_t total = static_cast<std::uint64_t>(spec.concepts) * spec.per_concept;

    std::vector<Sample> samples;
    samples.reserve(total);
    EmbeddingMatrix image(total, d);
    EmbeddingMatrix text(total, d);

    std::uint64_t idx = 0;
    for (std::uint32_t c = 0; c < spec.concepts; ++c) {
        for (std::uint64_t j = 0; j < spec.per_concept; ++j, ++idx) {
            Sample s;
            s.id = idx;
            s.concept_id = ConceptId{c};
            s.image_row = idx;
            s.text_row = idx;
            auto img_row = image.row(idx);
            for (std::size_t k = 0; k < d; ++k)
                img_row[k] =
                    static_cast<float>(radius * img_dirs[c][k] + spec.spread * gauss(rng));
            auto txt_row = text.row(idx);
            for (std::size_t k = 0; k < d; ++k)
                txt_row[k] =
                    static_cast<float>(radius * txt_dirs[c][k] + spec.spread * gauss(rng));
            samples.push_back(std::move(s));
        }
    }
    return Dataset(std::move(samples), std::move(image), std::move(text));
}

Dataset inject_poison(const Dataset& benign, const PoisonScenario& scenario) {
    if (benign.poison_count() != 0)
        throw InvalidInput("inject_poison: dataset must be all-benign");
    if (benign.size() == 0) throw InvalidInput("inject_poison: empty dataset");
    if (scenario.mode == PoisonMode::CleanLabel &&
        !(scenario.gamma > 0.0 && scenario.gamma <= 1.0))
        throw InvalidInput("inject_poison: clean-label gamma must lie in (0,1]");

    const std::uint32_t concepts = benign.concept_count();

    std::vector<std::pair<ConceptId, ConceptId>> map;
    if (scenario.target_rule == TargetRule::RandomDistinct) {
        const auto sources =
            select_poison_sources(concepts, scenario.poisoned_concepts, scenario.seed);
        map = random_distinct_targets(sources, concepts, scenario.seed);
    } else {
        map = scenario.explicit_targets;
        if (map.size() != scenario.poisoned_concepts)
            throw InvalidInput("inject_poison: explicit target map size must equal C_P");
        std::unordered_set<std::uint32_t> seen;
        for (const auto& [src, tgt] : map) {
            if (src.value >= concepts || tgt.value >= concepts)
                throw InvalidInput("inject_poison: mapping references unknown concept");
            if (src == tgt) throw InvalidInput("inject_poison: target must differ from source");
            if (!seen.insert(src.value).second)
                throw InvalidInput("inject_poison: duplicate source concept");
        }
        std::sort(map.begin(), map.end());
    }
    if (map.empty()) return benign;

    std::vector<std::vector<std::size_t>> by_concept(concepts);
    for (std::size_t i = 0; i < benign.size(); ++i)
        by_concept[benign.sample(i).concept_id.value].push_back(i);

    std::vector<Sample> samples = benign.samples();
    EmbeddingMatrix image = benign.image_matrix();
    const std::size_t d = image.cols();

    std::mt19937_64 rng(mix64(scenario.seed, kInjectTag));
    const std::uint64_t m = scenario.poison_per_concept;

    for (const auto& [src, tgt] : map) {
        const auto& src_rows = by_concept[src.value];
        const auto& tgt_rows = by_concept[tgt.value];
        if (m >= src_rows.size())
            throw InvalidInput("inject_poison: poison budget m=" + std::to_string(m) +
                               " meets or exceeds concept " + std::to_string(src.value) +
                               " size " + std::to_string(src_rows.size()));
        if (tgt_rows.empty())
            throw InvalidInput("inject_poison: target concept " + std::to_string(tgt.value) +
                               " has no samples");

        std::vector<std::size_t> chosen = src_rows;
        std::shuffle(chosen.begin(), chosen.end(), rng);
        chosen.resize(m);
        std::sort(chosen.begin(), chosen.end());

        std::uniform_int_distribution<std::size_t> pick(0, tgt_rows.size() - 1);
        for (std::size_t si : chosen) {
            const std::size_t donor = tgt_rows[pick(rng)];
            auto dst = image.row(samples[si].image_row);
            const auto donor_row = benign.image_matrix().row(benign.sample(donor).image_row);
            if (scenario.mode == PoisonMode::DirtyLabel) {
                std::copy(donor_row.begin(), donor_row.end(), dst.begin());
            } else {
                const auto src_row = benign.image_matrix().row(samples[si].image_row);
                std::vector<double> blend(d);
                double norm2 = 0.0;
                for (std::size_t k = 0; k < d; ++k) {
                    blend[k] = (1.0 - scenario.gamma) * static_cast<double>(src_row[k]) +
                               scenario.gamma * static_cast<double>(donor_row[k]);
                    norm2 += blend[k] * blend[k];
                }
                if (norm2 == 0.0)
                    throw InvalidInput("inject_poison: degenerate clean-label blend");
                const double inv = 1.0 / std::sqrt(norm2);
                for (std::size_t k = 0; k < d; ++k)
                    dst[k] = static_cast<float>(blend[k] * inv);
            }
            samples[si].role = Role::Poison;
            samples[si].target_concept = tgt;
        }
    }

    return Dataset(std::move(samples), std::move(image), benign.text_matrix(),
                   benign.concept_names());
}

}  // namespace adlab::synth
