#include "adlab/engine.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>

#include "adlab/metrics.hpp"
#include "adlab/parallel.hpp"
#include "adlab/rng.hpp"
#include "adlab/validate.hpp"

namespace adlab {

namespace {

using RowMajorMatrixXd =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr std::size_t kTile = 256;
constexpr std::size_t kRowChunk = 4096;
constexpr std::uint64_t kDrawChunk = 1u << 16;

// Neumaier compensated accumulator.
struct KahanSum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double v) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }
    double get() const { return sum + comp; }
};

double cos_to_distance(double dot) {
    dot = std::clamp(dot, -1.0, 1.0);
    return 0.5 * (1.0 - dot);
}

// Metric state the bulk paths run on: unit-normalized double rows for the
// cosine metric, concept labels for the binary one.
struct Prepared {
    MetricKind kind = MetricKind::ContinuousCosine;
    std::size_t n = 0;
    RowMajorMatrixXd img_unit, txt_unit;
    std::vector<std::uint32_t> img_label, txt_label;
};

RowMajorMatrixXd unit_rows(const Dataset& dataset, const EmbeddingMatrix& m,
                           bool image_side) {
    const std::size_t n = dataset.size();
    const std::size_t d = m.cols();
    RowMajorMatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i) {
        const Sample& s = dataset.sample(i);
        const auto row = m.row(image_side ? s.image_row : s.text_row);
        double norm2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double v = row[j];
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            norm2 += v * v;
        }
        const double inv = 1.0 / std::sqrt(norm2);
        out.row(static_cast<Eigen::Index>(i)) *= inv;
    }
    return out;
}

Prepared prepare(const Dataset& dataset, const MetricConfig& config) {
    Prepared p;
    p.kind = config.kind;
    p.n = dataset.size();
    if (config.kind == MetricKind::ContinuousCosine) {
        p.img_unit = unit_rows(dataset, dataset.image_matrix(), true);
        p.txt_unit = unit_rows(dataset, dataset.text_matrix(), false);
    } else {
        p.img_label.reserve(p.n);
        p.txt_label.reserve(p.n);
        for (const Sample& s : dataset.samples()) {
            p.img_label.push_back(image_concept_of(s).value);
            p.txt_label.push_back(s.concept_id.value);
        }
    }
    return p;
}

double cross_distance_at(const Prepared& p, std::size_t i) {
    if (p.kind == MetricKind::ContinuousCosine) {
        const auto idx = static_cast<Eigen::Index>(i);
        return cos_to_distance(p.img_unit.row(idx).dot(p.txt_unit.row(idx)));
    }
    return p.img_label[i] != p.txt_label[i] ? 1.0 : 0.0;
}

double structure_term_at(const Prepared& p, std::size_t i, std::size_t k) {
    if (p.kind == MetricKind::ContinuousCosine) {
        const auto ii = static_cast<Eigen::Index>(i);
        const auto kk = static_cast<Eigen::Index>(k);
        const double d_img = cos_to_distance(p.img_unit.row(ii).dot(p.img_unit.row(kk)));
        const double d_txt = cos_to_distance(p.txt_unit.row(ii).dot(p.txt_unit.row(kk)));
        return std::abs(d_img - d_txt);
    }
    const double d_img = p.img_label[i] != p.img_label[k] ? 1.0 : 0.0;
    const double d_txt = p.txt_label[i] != p.txt_label[k] ? 1.0 : 0.0;
    return std::abs(d_img - d_txt);
}

double feature_from(const Prepared& p, std::size_t workers) {
    const std::size_t n = p.n;
    const std::size_t chunks = (n + kRowChunk - 1) / kRowChunk;
    std::vector<double> partials(chunks, 0.0);
    parallel_chunks(chunks, workers, [&](std::size_t c) {
        const std::size_t lo = c * kRowChunk;
        const std::size_t hi = std::min(lo + kRowChunk, n);
        KahanSum acc;
        for (std::size_t i = lo; i < hi; ++i) acc.add(cross_distance_at(p, i));
        partials[c] = acc.get();
    });
    KahanSum total;
    for (double v : partials) total.add(v);
    return total.get() / static_cast<double>(n);
}

// Exact structure sum over ordered pairs. The summand is symmetric and zero
// on the diagonal, so only tiles with block-column >= block-row are computed
// and the off-diagonal half is doubled. Tile partials are reduced in tile
// order, which makes the result independent of the worker count.
double structure_exact_from(const Prepared& p, std::size_t workers) {
    const std::size_t n = p.n;
    const double nd = static_cast<double>(n);
    const std::size_t blocks = (n + kTile - 1) / kTile;
    const std::size_t tiles = blocks * (blocks + 1) / 2;

    std::vector<double> partials(tiles, 0.0);

    auto tile_coords = [&](std::size_t t) {
        // row-major walk of the upper-triangular block grid
        std::size_t bi = 0;
        std::size_t remaining = t;
        std::size_t row_len = blocks;
        while (remaining >= row_len) {
            remaining -= row_len;
            ++bi;
            --row_len;
        }
        return std::pair<std::size_t, std::size_t>{bi, bi + remaining};
    };

    parallel_chunks(tiles, workers, [&](std::size_t t) {
        const auto [bi, bk] = tile_coords(t);
        const std::size_t r0 = bi * kTile, r1 = std::min(r0 + kTile, n);
        const std::size_t c0 = bk * kTile, c1 = std::min(c0 + kTile, n);
        const auto rn = static_cast<Eigen::Index>(r1 - r0);
        const auto cn = static_cast<Eigen::Index>(c1 - c0);

        KahanSum acc;
        if (p.kind == MetricKind::ContinuousCosine) {
            const Eigen::MatrixXd g_img =
                p.img_unit.middleRows(static_cast<Eigen::Index>(r0), rn) *
                p.img_unit.middleRows(static_cast<Eigen::Index>(c0), cn).transpose();
            const Eigen::MatrixXd g_txt =
                p.txt_unit.middleRows(static_cast<Eigen::Index>(r0), rn) *
                p.txt_unit.middleRows(static_cast<Eigen::Index>(c0), cn).transpose();
            for (std::size_t i = r0; i < r1; ++i) {
                const std::size_t k_start = (bi == bk) ? i + 1 : c0;
                for (std::size_t k = k_start; k < c1; ++k) {
                    const double d_img = cos_to_distance(
                        g_img(static_cast<Eigen::Index>(i - r0), static_cast<Eigen::Index>(k - c0)));
                    const double d_txt = cos_to_distance(
                        g_txt(static_cast<Eigen::Index>(i - r0), static_cast<Eigen::Index>(k - c0)));
                    acc.add(std::abs(d_img - d_txt));
                }
            }
        } else {
            for (std::size_t i = r0; i < r1; ++i) {
                const std::size_t k_start = (bi == bk) ? i + 1 : c0;
                for (std::size_t k = k_start; k < c1; ++k)
                    acc.add(structure_term_at(p, i, k));
            }
        }
        partials[t] = acc.get();
    });

    KahanSum half;
    for (double v : partials) half.add(v);
    return (2.0 * half.get()) / (nd * nd);
}

StructureResult structure_sampled_from(const Prepared& p, const SamplingPlan& plan,
                                       std::size_t workers) {
    const std::uint64_t n = p.n;
    const std::uint64_t budget = plan.pair_budget;
    const std::uint64_t chunks = (budget + kDrawChunk - 1) / kDrawChunk;

    std::vector<double> part_sum(chunks, 0.0);
    std::vector<double> part_sumsq(chunks, 0.0);

    parallel_chunks(static_cast<std::size_t>(chunks), workers, [&](std::size_t c) {
        const std::uint64_t lo = static_cast<std::uint64_t>(c) * kDrawChunk;
        const std::uint64_t hi = std::min(lo + kDrawChunk, budget);
        KahanSum acc, acc2;
        for (std::uint64_t j = lo; j < hi; ++j) {
            const std::size_t i = static_cast<std::size_t>(mix64(plan.seed, 2 * j) % n);
            const std::size_t k = static_cast<std::size_t>(mix64(plan.seed, 2 * j + 1) % n);
            const double v = structure_term_at(p, i, k);
            acc.add(v);
            acc2.add(v * v);
        }
        part_sum[c] = acc.get();
        part_sumsq[c] = acc2.get();
    });

    KahanSum sum, sumsq;
    for (std::uint64_t c = 0; c < chunks; ++c) {
        sum.add(part_sum[c]);
        sumsq.add(part_sumsq[c]);
    }
    const double bd = static_cast<double>(budget);
    const double mean = sum.get() / bd;
    double stderr_estimate = 0.0;
    if (budget > 1) {
        const double variance = std::max(0.0, (sumsq.get() - bd * mean * mean) / (bd - 1.0));
        stderr_estimate = std::sqrt(variance / bd);
    }
    StructureResult result;
    result.value = mean;
    result.info = EstimatorInfo{EstimatorMode::Sampled, budget, plan.seed, stderr_estimate};
    return result;
}

void check_plan(const SamplingPlan& plan, std::size_t n) {
    if (plan.pair_budget == 0) throw InvalidInput("sampling plan: pair_budget must be positive");
    const double n2 = static_cast<double>(n) * static_cast<double>(n);
    if (static_cast<double>(plan.pair_budget) > n2)
        throw InvalidInput("sampling plan: pair_budget exceeds N^2");
}

}  // namespace

double feature_ad(const Dataset& dataset, const MetricConfig& config, std::size_t workers) {
    require_valid(dataset, config);
    const Prepared p = prepare(dataset, config);
    return feature_from(p, worker_count(workers));
}

StructureResult structure_ad(const Dataset& dataset, const MetricConfig& config,
                             std::optional<SamplingPlan> plan, std::size_t workers) {
    require_valid(dataset, config);
    if (plan) check_plan(*plan, dataset.size());
    const Prepared p = prepare(dataset, config);
    const std::size_t w = worker_count(workers);
    if (plan) return structure_sampled_from(p, *plan, w);
    return StructureResult{structure_exact_from(p, w), EstimatorInfo{}};
}

ADReport combined_ad(const Dataset& dataset, const MetricConfig& config,
                     std::span<const double> alphas, std::optional<SamplingPlan> plan,
                     std::size_t workers) {
    require_valid(dataset, config);
    if (plan) check_plan(*plan, dataset.size());
    for (double a : alphas)
        if (!(a >= 0.0 && a <= 1.0))
            throw InvalidInput("combined_ad: alpha must lie in [0,1]");

    const Prepared p = prepare(dataset, config);
    const std::size_t w = worker_count(workers);
    const std::uint64_t n = dataset.size();

    ADReport report;
    report.feature_ad = feature_from(p, w);
    if (plan) {
        const StructureResult s = structure_sampled_from(p, *plan, w);
        report.structure_ad = s.value;
        report.estimator = s.info;
        report.pair_count = plan->pair_budget;
    } else {
        report.structure_ad = structure_exact_from(p, w);
        report.estimator = EstimatorInfo{};
        report.pair_count = n * n;
    }
    report.combined[config.alpha] = combine_ad(report.feature_ad, report.structure_ad, config.alpha);
    for (double a : alphas)
        report.combined[a] = combine_ad(report.feature_ad, report.structure_ad, a);
    return report;
}

double finetune_ad(double ad_base, double ad_finetune, double lambda) {
    if (!(ad_base >= 0.0 && ad_base <= 1.0))
        throw InvalidInput("finetune_ad: ad_base must lie in [0,1]");
    if (!(ad_finetune >= 0.0 && ad_finetune <= 1.0))
        throw InvalidInput("finetune_ad: ad_finetune must lie in [0,1]");
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw InvalidInput("finetune_ad: lambda must lie in [0,1]");
    return (1.0 - lambda) * ad_base + lambda * ad_finetune;
}

std::vector<PerSampleScore> per_sample_scores(const Dataset& dataset, const MetricConfig& config,
                                              std::size_t workers) {
    require_valid(dataset, config);
    const Prepared p = prepare(dataset, config);
    const std::size_t n = dataset.size();
    const double alpha = config.alpha;

    std::vector<PerSampleScore> scores(n);
    const std::size_t row_chunk = 128;
    const std::size_t chunks = (n + row_chunk - 1) / row_chunk;

    parallel_chunks(chunks, worker_count(workers), [&](std::size_t c) {
        const std::size_t lo = c * row_chunk;
        const std::size_t hi = std::min(lo + row_chunk, n);
        for (std::size_t i = lo; i < hi; ++i) {
            KahanSum acc;
            if (p.kind == MetricKind::ContinuousCosine) {
                const auto ii = static_cast<Eigen::Index>(i);
                for (std::size_t k0 = 0; k0 < n; k0 += kTile) {
                    const std::size_t k1 = std::min(k0 + kTile, n);
                    const auto kn = static_cast<Eigen::Index>(k1 - k0);
                    const Eigen::VectorXd g_img =
                        p.img_unit.middleRows(static_cast<Eigen::Index>(k0), kn) *
                        p.img_unit.row(ii).transpose();
                    const Eigen::VectorXd g_txt =
                        p.txt_unit.middleRows(static_cast<Eigen::Index>(k0), kn) *
                        p.txt_unit.row(ii).transpose();
                    for (std::size_t k = k0; k < k1; ++k) {
                        const double d_img =
                            cos_to_distance(g_img(static_cast<Eigen::Index>(k - k0)));
                        const double d_txt =
                            cos_to_distance(g_txt(static_cast<Eigen::Index>(k - k0)));
                        acc.add(std::abs(d_img - d_txt));
                    }
                }
            } else {
                for (std::size_t k = 0; k < n; ++k) acc.add(structure_term_at(p, i, k));
            }
            PerSampleScore& s = scores[i];
            s.sample_id = dataset.sample(i).id;
            s.cross_distance = cross_distance_at(p, i);
            s.structure_share = acc.get() / static_cast<double>(n);
            s.combined = alpha * s.cross_distance + (1.0 - alpha) * s.structure_share;
        }
    });
    return scores;
}

ADReport brute_force_ad(const Dataset& dataset, const MetricConfig& config,
                        std::span<const double> alphas, std::size_t oracle_cap) {
    require_valid(dataset, config);
    const std::size_t n = dataset.size();
    if (n > oracle_cap)
        throw InvalidInput("brute_force_ad: dataset exceeds the oracle cap of " +
                           std::to_string(oracle_cap));

    const bool cosine = config.kind == MetricKind::ContinuousCosine;
    const auto& img = dataset.image_matrix();
    const auto& txt = dataset.text_matrix();

    auto raw_cosine = [](std::span<const float> a, std::span<const float> b) {
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) {
            dot += static_cast<double>(a[j]) * static_cast<double>(b[j]);
            na += static_cast<double>(a[j]) * static_cast<double>(a[j]);
            nb += static_cast<double>(b[j]) * static_cast<double>(b[j]);
        }
        double cos = dot / (std::sqrt(na) * std::sqrt(nb));
        if (cos > 1.0) cos = 1.0;
        if (cos < -1.0) cos = -1.0;
        return 0.5 * (1.0 - cos);
    };

    double feature_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Sample& s = dataset.sample(i);
        if (cosine) {
            feature_sum += raw_cosine(img.row(s.image_row), txt.row(s.text_row));
        } else {
            const std::uint32_t visual =
                s.role == Role::Poison ? s.target_concept->value : s.concept_id.value;
            feature_sum += visual != s.concept_id.value ? 1.0 : 0.0;
        }
    }

    double structure_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Sample& si = dataset.sample(i);
        for (std::size_t k = 0; k < n; ++k) {
            const Sample& sk = dataset.sample(k);
            double d_img, d_txt;
            if (cosine) {
                d_img = raw_cosine(img.row(si.image_row), img.row(sk.image_row));
                d_txt = raw_cosine(txt.row(si.text_row), txt.row(sk.text_row));
            } else {
                const std::uint32_t vi =
                    si.role == Role::Poison ? si.target_concept->value : si.concept_id.value;
                const std::uint32_t vk =
                    sk.role == Role::Poison ? sk.target_concept->value : sk.concept_id.value;
                d_img = vi != vk ? 1.0 : 0.0;
                d_txt = si.concept_id.value != sk.concept_id.value ? 1.0 : 0.0;
            }
            structure_sum += std::abs(d_img - d_txt);
        }
    }

    const double nd = static_cast<double>(n);
    ADReport report;
    report.feature_ad = feature_sum / nd;
    report.structure_ad = structure_sum / (nd * nd);
    report.pair_count = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n);
    report.estimator = EstimatorInfo{};
    report.combined[config.alpha] = combine_ad(report.feature_ad, report.structure_ad, config.alpha);
    for (double a : alphas) {
        if (!(a >= 0.0 && a <= 1.0))
            throw InvalidInput("brute_force_ad: alpha must lie in [0,1]");
        report.combined[a] = combine_ad(report.feature_ad, report.structure_ad, a);
    }
    return report;
}

}  // namespace adlab
