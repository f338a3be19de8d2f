// adlab: alignment-difficulty analytics for labeled embedding datasets.
//
// Subcommand groups: ad, synth, poison, theory, defense, attack, finetune-ad.
// Exit codes: 0 success, 2 invalid input, 3 parse/io error, 1 anything else.
// ADLAB_THREADS caps the worker count (default: all cores).

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "adlab/attack.hpp"
#include "adlab/defense.hpp"
#include "adlab/engine.hpp"
#include "adlab/io.hpp"
#include "adlab/synth.hpp"
#include "adlab/theory.hpp"
#include "adlab/validate.hpp"

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<double> parse_alpha_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    if (out.empty()) throw adlab::InvalidInput("at least one alpha is required");
    return out;
}

adlab::MetricConfig metric_from(const std::string& metric, double alpha) {
    adlab::MetricConfig config;
    if (metric == "cosine")
        config.kind = adlab::MetricKind::ContinuousCosine;
    else if (metric == "binary")
        config.kind = adlab::MetricKind::BinaryLabel;
    else
        throw adlab::InvalidInput("metric must be cosine or binary, got \"" + metric + "\"");
    config.alpha = alpha;
    return config;
}

adlab::defense::ScoreKind score_kind_from(const std::string& kind) {
    if (kind == "alignment") return adlab::defense::ScoreKind::AlignmentScore;
    if (kind == "persample-ad") return adlab::defense::ScoreKind::PerSampleAD;
    if (kind == "structure") return adlab::defense::ScoreKind::StructureShare;
    throw adlab::InvalidInput("kind must be alignment, persample-ad, or structure");
}

std::vector<std::pair<adlab::ConceptId, adlab::ConceptId>> read_target_file(
    const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw adlab::io::ParseError(adlab::io::ParseError::Kind::Io, "cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw adlab::io::ParseError(adlab::io::ParseError::Kind::Schema,
                                    path + ": " + e.what());
    }
    const json& pairs = doc.is_object() && doc.contains("pairs") ? doc["pairs"] : doc;
    if (!pairs.is_array())
        throw adlab::io::ParseError(adlab::io::ParseError::Kind::Schema,
                                    path + ": expected an array of [source, target] pairs");
    std::vector<std::pair<adlab::ConceptId, adlab::ConceptId>> map;
    for (const auto& entry : pairs) {
        if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number_unsigned() ||
            !entry[1].is_number_unsigned())
            throw adlab::io::ParseError(adlab::io::ParseError::Kind::Schema,
                                        path + ": each pair must be [source, target]");
        map.emplace_back(adlab::ConceptId{entry[0].get<std::uint32_t>()},
                         adlab::ConceptId{entry[1].get<std::uint32_t>()});
    }
    return map;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw adlab::io::ParseError(adlab::io::ParseError::Kind::Io, "cannot write " + path);
    out << content;
    if (!out)
        throw adlab::io::ParseError(adlab::io::ParseError::Kind::Io, "write failed for " + path);
}

// ----- ad -----

struct AdComputeOpts {
    std::string manifest, image_embf, text_embf, metric, alphas = "0.8", out;
    std::uint64_t sample_pairs = 0;
    std::uint64_t seed = 0;
    bool have_seed = false;
};

int run_ad_compute(const AdComputeOpts& opt) {
    const auto alphas = parse_alpha_list(opt.alphas);
    const adlab::MetricConfig config = metric_from(opt.metric, alphas.front());
    const adlab::Dataset dataset =
        adlab::io::read_world(opt.manifest, opt.image_embf, opt.text_embf);

    std::optional<adlab::SamplingPlan> plan;
    if (opt.sample_pairs > 0) {
        if (!opt.have_seed)
            throw adlab::InvalidInput("--sample-pairs requires --seed");
        plan = adlab::SamplingPlan{opt.sample_pairs, opt.seed};
    }

    const auto t0 = std::chrono::steady_clock::now();
    const adlab::ADReport report = adlab::combined_ad(dataset, config, alphas, plan);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    adlab::io::ReportInputs inputs;
    inputs.manifest_digest = adlab::io::fnv1a64_file(opt.manifest);
    inputs.image_digest = adlab::io::fnv1a64_file(opt.image_embf);
    inputs.text_digest = adlab::io::fnv1a64_file(opt.text_embf);
    adlab::io::write_report(opt.out, adlab::io::report_document(report, config, inputs, wall));

    std::cout << "feature_ad=" << fmt_double(report.feature_ad)
              << " structure_ad=" << fmt_double(report.structure_ad)
              << " combined[" << fmt_double(config.alpha)
              << "]=" << fmt_double(report.combined.at(config.alpha)) << "\n";
    return 0;
}

struct AdScoresOpts {
    std::string manifest, image_embf, text_embf, metric, kind, out;
    double alpha = 0.8;
};

int run_ad_scores(const AdScoresOpts& opt) {
    const adlab::MetricConfig config = metric_from(opt.metric, opt.alpha);
    const adlab::Dataset dataset =
        adlab::io::read_world(opt.manifest, opt.image_embf, opt.text_embf);
    const auto kind = score_kind_from(opt.kind);
    const auto scores = adlab::defense::sample_scores(dataset, config, kind);

    std::string csv = "id,concept,role,score\n";
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const adlab::Sample& s = dataset.sample(i);
        csv += std::to_string(s.id) + "," + std::to_string(s.concept_id.value) + "," +
               (s.role == adlab::Role::Poison ? "poison" : "benign") + "," +
               fmt_double(scores[i]) + "\n";
    }
    write_text_file(opt.out, csv);
    return 0;
}

// ----- synth / poison -----

struct SynthBinaryOpts {
    std::uint32_t concepts = 0, poisoned = 0;
    std::uint64_t per_concept = 0, poison_per = 0, seed = 0;
    std::string targets = "distinct-random", out;
};

int run_synth_binary(const SynthBinaryOpts& opt) {
    adlab::theory::BinaryWorldSpec spec;
    spec.concepts = opt.concepts;
    spec.per_concept = opt.per_concept;
    spec.poisoned_concepts = opt.poisoned;
    spec.poison_per_concept = opt.poison_per;
    spec.seed = opt.seed;
    if (opt.targets != "distinct-random") spec.target_map = read_target_file(opt.targets);
    const adlab::Dataset world = adlab::synth::gen_binary_world(spec);
    adlab::io::write_world(world, opt.out);
    std::cout << "wrote " << world.size() << " samples to " << opt.out << "\n";
    return 0;
}

struct SynthGaussianOpts {
    std::uint32_t concepts = 0, dim = 0;
    std::uint64_t per_concept = 0, seed = 0;
    double separation = 1.0, spread = 0.05;
    std::string out;
};

int run_synth_gaussian(const SynthGaussianOpts& opt) {
    adlab::synth::GaussianWorldSpec spec;
    spec.concepts = opt.concepts;
    spec.per_concept = opt.per_concept;
    spec.dim = opt.dim;
    spec.center_separation = opt.separation;
    spec.spread = opt.spread;
    spec.seed = opt.seed;
    const adlab::Dataset world = adlab::synth::gen_gaussian_world(spec);
    adlab::io::write_world(world, opt.out);
    std::cout << "wrote " << world.size() << " samples to " << opt.out << "\n";
    return 0;
}

struct PoisonInjectOpts {
    std::string world, mode, out, targets;
    double gamma = 1.0;
    std::uint32_t poisoned = 0;
    std::uint64_t poison_per = 0, seed = 0;
};

int run_poison_inject(const PoisonInjectOpts& opt) {
    const adlab::Dataset benign = adlab::io::read_world_dir(opt.world);
    adlab::synth::PoisonScenario scenario;
    scenario.poisoned_concepts = opt.poisoned;
    scenario.poison_per_concept = opt.poison_per;
    scenario.seed = opt.seed;
    scenario.gamma = opt.gamma;
    if (opt.mode == "dirty")
        scenario.mode = adlab::synth::PoisonMode::DirtyLabel;
    else if (opt.mode == "clean")
        scenario.mode = adlab::synth::PoisonMode::CleanLabel;
    else
        throw adlab::InvalidInput("mode must be dirty or clean");
    if (!opt.targets.empty()) {
        scenario.target_rule = adlab::synth::TargetRule::Explicit;
        scenario.explicit_targets = read_target_file(opt.targets);
    }
    const adlab::Dataset poisoned = adlab::synth::inject_poison(benign, scenario);
    adlab::io::write_world(poisoned, opt.out);
    std::cout << "wrote " << poisoned.size() << " samples (" << poisoned.poison_count()
              << " poison) to " << opt.out << "\n";
    return 0;
}

// ----- theory -----

struct TheoryOpts {
    double alpha = 0.8, rho = 0.0, delta_feature = 1.0, delta_structure = 1.0;
    std::uint64_t n_p = 0, n_t = 0, total = 0, per_concept = 0, poison_per = 0, seed = 0;
    std::uint32_t concepts = 0, poisoned = 0;
    std::string cp_list, targets;
};

adlab::theory::BinaryWorldSpec binary_spec_from(const TheoryOpts& opt) {
    adlab::theory::BinaryWorldSpec spec;
    spec.concepts = opt.concepts;
    spec.per_concept = opt.per_concept;
    spec.poisoned_concepts = opt.poisoned;
    spec.poison_per_concept = opt.poison_per;
    spec.seed = opt.seed;
    if (!opt.targets.empty()) spec.target_map = read_target_file(opt.targets);
    return spec;
}

int run_theory_bound_single(const TheoryOpts& opt) {
    adlab::theory::SingleConceptBoundInputs in;
    in.alpha = opt.alpha;
    in.rho = opt.rho;
    in.delta_feature = opt.delta_feature;
    in.delta_structure = opt.delta_structure;
    in.n_p = opt.n_p;
    in.n_t = opt.n_t;
    in.total = opt.total;
    ordered_json out{{"bound", adlab::theory::single_concept_bound(in)}};
    std::cout << out.dump() << "\n";
    return 0;
}

int run_theory_bound_multi(const TheoryOpts& opt) {
    adlab::theory::MultiConceptBoundInputs in;
    in.alpha = opt.alpha;
    in.poison_per_concept = opt.poison_per;
    in.per_concept = opt.per_concept;
    in.total = opt.total;
    in.poisoned_concepts = opt.poisoned;
    ordered_json out{{"bound", adlab::theory::multi_concept_lower_bound(in)}};
    std::cout << out.dump() << "\n";
    return 0;
}

int run_theory_exact_binary(const TheoryOpts& opt) {
    const auto ad = adlab::theory::binary_world_exact_ad(binary_spec_from(opt), opt.alpha);
    ordered_json out{{"feature_ad", ad.feature},
                     {"structure_ad", ad.structure},
                     {"combined", ad.combined}};
    std::cout << out.dump() << "\n";
    return 0;
}

int run_theory_check_monotone(const TheoryOpts& opt) {
    std::vector<std::uint32_t> cps;
    std::stringstream ss(opt.cp_list);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) cps.push_back(static_cast<std::uint32_t>(std::stoul(item)));
    if (cps.empty()) throw adlab::InvalidInput("--cp-list must name at least one C_P value");
    const auto report =
        adlab::theory::check_theorem_monotonicity(binary_spec_from(opt), cps, opt.alpha);
    ordered_json out{{"cp_values", report.cp_values},
                     {"ad_values", report.ad_values},
                     {"strictly_increasing", report.strictly_increasing}};
    std::cout << out.dump() << "\n";
    return 0;
}

int run_theory_check_bound(const TheoryOpts& opt) {
    const auto report = adlab::theory::check_bound_validity(binary_spec_from(opt), opt.alpha);
    ordered_json out{
        {"bound", report.bound}, {"exact", report.exact}, {"holds", report.holds}};
    std::cout << out.dump() << "\n";
    return 0;
}

// ----- defense -----

struct DefenseOpts {
    std::string world, metric, kind, out, out_world, quantiles;
    double alpha = 0.8, threshold = 0.0;
    std::size_t grid_points = 100;
};

int run_defense_cdf(const DefenseOpts& opt) {
    const adlab::MetricConfig config = metric_from(opt.metric, opt.alpha);
    const adlab::Dataset dataset = adlab::io::read_world_dir(opt.world);
    const auto table = adlab::defense::score_cdf(dataset, config, score_kind_from(opt.kind),
                                                 opt.grid_points);
    std::string csv = "# benign_count=" + std::to_string(table.benign_count) +
                      " poison_count=" + std::to_string(table.poison_count) + "\n";
    csv += "grid,benign_cdf,poison_cdf\n";
    for (std::size_t j = 0; j < table.grid.size(); ++j) {
        csv += fmt_double(table.grid[j]) + ",";
        csv += table.benign_cdf.empty() ? "" : fmt_double(table.benign_cdf[j]);
        csv += ",";
        csv += table.poison_cdf.empty() ? "" : fmt_double(table.poison_cdf[j]);
        csv += "\n";
    }
    write_text_file(opt.out, csv);
    return 0;
}

std::string stats_csv_header() {
    return "threshold,removed_poison_fraction,removed_benign_fraction,remaining_count\n";
}

std::string stats_csv_row(const adlab::defense::FilterStats& s) {
    return fmt_double(s.threshold) + "," + fmt_double(s.removed_poison_fraction) + "," +
           fmt_double(s.removed_benign_fraction) + "," + std::to_string(s.remaining_count) + "\n";
}

int run_defense_filter(const DefenseOpts& opt) {
    const adlab::MetricConfig config = metric_from(opt.metric, opt.alpha);
    const adlab::Dataset dataset = adlab::io::read_world_dir(opt.world);
    const auto result = adlab::defense::threshold_filter(dataset, config,
                                                         score_kind_from(opt.kind), opt.threshold);
    write_text_file(opt.out, stats_csv_header() + stats_csv_row(result.stats));
    if (!opt.out_world.empty()) {
        if (!result.remaining)
            throw adlab::InvalidInput("filter removed every sample; no world to write");
        adlab::io::write_world(*result.remaining, opt.out_world);
    }
    return 0;
}

int run_defense_tradeoff(const DefenseOpts& opt) {
    const adlab::MetricConfig config = metric_from(opt.metric, opt.alpha);
    const adlab::Dataset dataset = adlab::io::read_world_dir(opt.world);
    std::vector<double> qs;
    std::stringstream ss(opt.quantiles);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) qs.push_back(std::stod(item));
    if (qs.empty()) throw adlab::InvalidInput("--quantiles must name at least one value");
    const auto curve =
        adlab::defense::tradeoff_curve(dataset, config, score_kind_from(opt.kind), qs);
    std::string csv =
        "quantile,threshold,removed_poison_fraction,removed_benign_fraction,remaining_count\n";
    for (std::size_t i = 0; i < curve.size(); ++i) {
        csv += fmt_double(qs[i]) + "," + fmt_double(curve[i].threshold) + "," +
               fmt_double(curve[i].removed_poison_fraction) + "," +
               fmt_double(curve[i].removed_benign_fraction) + "," +
               std::to_string(curve[i].remaining_count) + "\n";
    }
    write_text_file(opt.out, csv);
    return 0;
}

// ----- attack -----

struct AttackOpts {
    std::string world, metric, mode = "dirty", strategy = "greedy", out;
    double alpha = 0.8, gamma = 1.0;
    std::uint32_t poisoned = 0;
    std::uint64_t poison_per = 0, budget = 0, seed = 0;
};

int run_attack_optimize(const AttackOpts& opt) {
    const adlab::MetricConfig config = metric_from(opt.metric, opt.alpha);
    const adlab::Dataset benign = adlab::io::read_world_dir(opt.world);

    adlab::synth::PoisonScenario scenario;
    scenario.poisoned_concepts = opt.poisoned;
    scenario.poison_per_concept = opt.poison_per;
    scenario.seed = opt.seed;
    scenario.gamma = opt.gamma;
    scenario.mode = opt.mode == "clean" ? adlab::synth::PoisonMode::CleanLabel
                                        : adlab::synth::PoisonMode::DirtyLabel;

    adlab::attack::PlannerConfig planner;
    planner.seed = opt.seed;
    planner.iteration_budget = opt.budget;
    if (opt.strategy == "greedy")
        planner.strategy = adlab::attack::Strategy::Greedy;
    else if (opt.strategy == "greedy-swap")
        planner.strategy = adlab::attack::Strategy::GreedyPlusSwap;
    else
        throw adlab::InvalidInput("strategy must be greedy or greedy-swap");

    const auto plan = adlab::attack::optimize_targets(benign, scenario, config, planner);

    ordered_json pairs = ordered_json::array();
    for (const auto& [src, tgt] : plan.mapping.pairs)
        pairs.push_back(ordered_json::array({src.value, tgt.value}));
    ordered_json trace = ordered_json::array();
    for (const auto& entry : plan.trace) {
        ordered_json tp = ordered_json::array();
        for (const auto& [src, tgt] : entry.mapping.pairs)
            tp.push_back(ordered_json::array({src.value, tgt.value}));
        trace.push_back(ordered_json{{"phase", entry.phase}, {"pairs", tp}, {"ad", entry.ad}});
    }
    ordered_json doc{{"pairs", pairs},
                     {"achieved_ad", plan.achieved_ad},
                     {"strategy", opt.strategy},
                     {"trace", trace}};
    write_text_file(opt.out, doc.dump(2) + "\n");
    std::cout << "achieved_ad=" << fmt_double(plan.achieved_ad) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"alignment-difficulty analytics for labeled embedding datasets"};
    app.require_subcommand(1);

    // ad
    auto* ad = app.add_subcommand("ad", "compute AD reports and per-sample scores");
    ad->require_subcommand(1);

    AdComputeOpts adc;
    auto* ad_compute = ad->add_subcommand("compute", "dataset AD report");
    ad_compute->add_option("--manifest", adc.manifest)->required();
    ad_compute->add_option("--image-embf", adc.image_embf)->required();
    ad_compute->add_option("--text-embf", adc.text_embf)->required();
    ad_compute->add_option("--metric", adc.metric)->required();
    ad_compute->add_option("--alpha", adc.alphas, "comma-separated alphas; first is primary");
    ad_compute->add_option("--sample-pairs", adc.sample_pairs,
                           "Monte Carlo pair budget (0 = exact)");
    auto* seed_opt = ad_compute->add_option("--seed", adc.seed);
    ad_compute->add_option("--out", adc.out)->required();
    ad_compute->callback([&] {
        adc.have_seed = seed_opt->count() > 0;
    });

    AdScoresOpts ads;
    auto* ad_scores = ad->add_subcommand("scores", "per-sample score CSV");
    ad_scores->add_option("--manifest", ads.manifest)->required();
    ad_scores->add_option("--image-embf", ads.image_embf)->required();
    ad_scores->add_option("--text-embf", ads.text_embf)->required();
    ad_scores->add_option("--metric", ads.metric)->required();
    ad_scores->add_option("--alpha", ads.alpha);
    ad_scores->add_option("--kind", ads.kind, "alignment|persample-ad|structure")->required();
    ad_scores->add_option("--out", ads.out)->required();

    // synth
    auto* synth = app.add_subcommand("synth", "generate synthetic worlds");
    synth->require_subcommand(1);

    SynthBinaryOpts sb;
    auto* synth_binary = synth->add_subcommand("binary", "analytical binary world");
    synth_binary->add_option("--concepts", sb.concepts)->required();
    synth_binary->add_option("--per-concept", sb.per_concept)->required();
    synth_binary->add_option("--poisoned", sb.poisoned)->required();
    synth_binary->add_option("--poison-per", sb.poison_per)->required();
    synth_binary->add_option("--targets", sb.targets, "distinct-random or a mapping file");
    synth_binary->add_option("--seed", sb.seed)->required();
    synth_binary->add_option("--out", sb.out)->required();

    SynthGaussianOpts sg;
    auto* synth_gauss = synth->add_subcommand("gaussian", "Gaussian-cluster world");
    synth_gauss->add_option("--concepts", sg.concepts)->required();
    synth_gauss->add_option("--per-concept", sg.per_concept)->required();
    synth_gauss->add_option("--dim", sg.dim)->required();
    synth_gauss->add_option("--separation", sg.separation)->required();
    synth_gauss->add_option("--spread", sg.spread)->required();
    synth_gauss->add_option("--seed", sg.seed)->required();
    synth_gauss->add_option("--out", sg.out)->required();

    // poison
    auto* poison = app.add_subcommand("poison", "inject poison into a benign world");
    poison->require_subcommand(1);

    PoisonInjectOpts pi;
    auto* poison_inject = poison->add_subcommand("inject", "dirty- or clean-label injection");
    poison_inject->add_option("--world", pi.world)->required();
    poison_inject->add_option("--mode", pi.mode, "dirty|clean")->required();
    poison_inject->add_option("--gamma", pi.gamma, "clean-label blend factor in (0,1]");
    poison_inject->add_option("--poisoned", pi.poisoned)->required();
    poison_inject->add_option("--poison-per", pi.poison_per)->required();
    poison_inject->add_option("--targets", pi.targets, "explicit mapping file");
    poison_inject->add_option("--seed", pi.seed)->required();
    poison_inject->add_option("--out", pi.out)->required();

    // theory
    auto* theory = app.add_subcommand("theory", "closed-form bounds and checkers");
    theory->require_subcommand(1);
    TheoryOpts th;

    auto* t_single = theory->add_subcommand("bound-single", "single-concept AD change bound");
    t_single->add_option("--alpha", th.alpha);
    t_single->add_option("--rho", th.rho)->required();
    t_single->add_option("--delta-feature", th.delta_feature);
    t_single->add_option("--delta-structure", th.delta_structure);
    t_single->add_option("--np", th.n_p)->required();
    t_single->add_option("--nt", th.n_t)->required();
    t_single->add_option("--total", th.total)->required();

    auto* t_multi = theory->add_subcommand("bound-multi", "multi-concept AD lower bound");
    t_multi->add_option("--alpha", th.alpha);
    t_multi->add_option("--poison-per", th.poison_per)->required();
    t_multi->add_option("--per-concept", th.per_concept)->required();
    t_multi->add_option("--total", th.total)->required();
    t_multi->add_option("--poisoned", th.poisoned)->required();

    auto* t_exact = theory->add_subcommand("exact-binary", "exact binary-world AD");
    t_exact->add_option("--alpha", th.alpha);
    t_exact->add_option("--concepts", th.concepts)->required();
    t_exact->add_option("--per-concept", th.per_concept)->required();
    t_exact->add_option("--poisoned", th.poisoned)->required();
    t_exact->add_option("--poison-per", th.poison_per)->required();
    t_exact->add_option("--targets", th.targets, "explicit mapping file");
    t_exact->add_option("--seed", th.seed)->required();

    auto* t_mono = theory->add_subcommand("check-monotone", "AD monotonicity in C_P");
    t_mono->add_option("--alpha", th.alpha);
    t_mono->add_option("--concepts", th.concepts)->required();
    t_mono->add_option("--per-concept", th.per_concept)->required();
    t_mono->add_option("--poison-per", th.poison_per)->required();
    t_mono->add_option("--cp-list", th.cp_list, "comma-separated C_P values")->required();
    t_mono->add_option("--seed", th.seed)->required();

    auto* t_bound = theory->add_subcommand("check-bound", "lower bound vs measured AD");
    t_bound->add_option("--alpha", th.alpha);
    t_bound->add_option("--concepts", th.concepts)->required();
    t_bound->add_option("--per-concept", th.per_concept)->required();
    t_bound->add_option("--poisoned", th.poisoned)->required();
    t_bound->add_option("--poison-per", th.poison_per)->required();
    t_bound->add_option("--seed", th.seed)->required();

    // defense
    auto* defense = app.add_subcommand("defense", "filtering defenses");
    defense->require_subcommand(1);
    DefenseOpts de;

    auto* d_cdf = defense->add_subcommand("cdf", "benign/poison score CDFs");
    d_cdf->add_option("--world", de.world)->required();
    d_cdf->add_option("--metric", de.metric)->required();
    d_cdf->add_option("--alpha", de.alpha);
    d_cdf->add_option("--kind", de.kind)->required();
    d_cdf->add_option("--grid-points", de.grid_points);
    d_cdf->add_option("--out", de.out)->required();

    auto* d_filter = defense->add_subcommand("filter", "threshold filter");
    d_filter->add_option("--world", de.world)->required();
    d_filter->add_option("--metric", de.metric)->required();
    d_filter->add_option("--alpha", de.alpha);
    d_filter->add_option("--kind", de.kind)->required();
    d_filter->add_option("--threshold", de.threshold)->required();
    d_filter->add_option("--out", de.out)->required();
    d_filter->add_option("--out-world", de.out_world, "write the filtered world here");

    auto* d_trade = defense->add_subcommand("tradeoff", "poison-recall quantile curve");
    d_trade->add_option("--world", de.world)->required();
    d_trade->add_option("--metric", de.metric)->required();
    d_trade->add_option("--alpha", de.alpha);
    d_trade->add_option("--kind", de.kind)->required();
    d_trade->add_option("--quantiles", de.quantiles, "comma-separated, each in (0,1)")->required();
    d_trade->add_option("--out", de.out)->required();

    // attack
    auto* attack = app.add_subcommand("attack", "AD-maximizing target planning");
    attack->require_subcommand(1);
    AttackOpts at;

    auto* a_opt = attack->add_subcommand("optimize", "choose a source->target mapping");
    a_opt->add_option("--world", at.world)->required();
    a_opt->add_option("--metric", at.metric)->required();
    a_opt->add_option("--alpha", at.alpha);
    a_opt->add_option("--poisoned", at.poisoned)->required();
    a_opt->add_option("--poison-per", at.poison_per)->required();
    a_opt->add_option("--mode", at.mode, "dirty|clean");
    a_opt->add_option("--gamma", at.gamma);
    a_opt->add_option("--strategy", at.strategy, "greedy|greedy-swap")->required();
    a_opt->add_option("--budget", at.budget, "swap attempts for greedy-swap");
    a_opt->add_option("--seed", at.seed)->required();
    a_opt->add_option("--out", at.out)->required();

    // finetune-ad
    double ft_base = 0.0, ft_ft = 0.0, ft_lambda = 0.0;
    auto* finetune = app.add_subcommand("finetune-ad", "fine-tuning AD combination");
    finetune->add_option("--ad-base", ft_base)->required();
    finetune->add_option("--ad-finetune", ft_ft)->required();
    finetune->add_option("--lambda", ft_lambda)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (ad_compute->parsed()) return run_ad_compute(adc);
        if (ad_scores->parsed()) return run_ad_scores(ads);
        if (synth_binary->parsed()) return run_synth_binary(sb);
        if (synth_gauss->parsed()) return run_synth_gaussian(sg);
        if (poison_inject->parsed()) return run_poison_inject(pi);
        if (t_single->parsed()) return run_theory_bound_single(th);
        if (t_multi->parsed()) return run_theory_bound_multi(th);
        if (t_exact->parsed()) return run_theory_exact_binary(th);
        if (t_mono->parsed()) return run_theory_check_monotone(th);
        if (t_bound->parsed()) return run_theory_check_bound(th);
        if (d_cdf->parsed()) return run_defense_cdf(de);
        if (d_filter->parsed()) return run_defense_filter(de);
        if (d_trade->parsed()) return run_defense_tradeoff(de);
        if (a_opt->parsed()) return run_attack_optimize(at);
        if (finetune->parsed()) {
            ordered_json out{{"finetune_ad", adlab::finetune_ad(ft_base, ft_ft, ft_lambda)}};
            std::cout << out.dump() << "\n";
            return 0;
        }
    } catch (const adlab::io::ParseError& e) {
        std::cerr << "error: " << adlab::io::ParseError::kind_name(e.kind()) << ": " << e.what()
                  << "\n";
        return 3;
    } catch (const adlab::InvalidInput& e) {
        std::cerr << "error: invalid-input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: invalid-input: no subcommand\n";
    return 2;
}
