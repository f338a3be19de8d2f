#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "adlab/engine.hpp"
#include "adlab/types.hpp"

namespace adlab::defense {

enum class ScoreKind : std::uint8_t {
    AlignmentScore,  // 1 - D_img:txt(x,y); low scores are suspicious
    PerSampleAD,     // per-sample AD(x,y); high scores are suspicious
    StructureShare,  // D_s(x,y); high scores are suspicious
};

// True when filtering removes samples scoring *below* the threshold.
inline bool removes_low_scores(ScoreKind kind) { return kind == ScoreKind::AlignmentScore; }

// Per-sample score under the given kind, in dataset order.
std::vector<double> sample_scores(const Dataset& dataset, const MetricConfig& config,
                                  ScoreKind kind, std::size_t workers = 0);

struct CdfTable {
    std::vector<double> grid;     // ascending score values
    std::vector<double> benign_cdf;
    std::vector<double> poison_cdf;  // empty when the cohort is empty
    std::uint64_t benign_count = 0;
    std::uint64_t poison_count = 0;
};

// Empirical benign/poison CDFs on a uniform grid over the observed range.
CdfTable score_cdf(const Dataset& dataset, const MetricConfig& config, ScoreKind kind,
                   std::size_t grid_points, std::size_t workers = 0);

struct FilterStats {
    double threshold = 0.0;
    double removed_poison_fraction = 0.0;
    double removed_benign_fraction = 0.0;
    std::uint64_t remaining_count = 0;
};

struct FilterResult {
    std::optional<Dataset> remaining;  // absent when everything was removed
    FilterStats stats;
};

// Removes samples with score < threshold (AlignmentScore) or > threshold
// (the high-score kinds). Samples scoring exactly the threshold are kept.
FilterResult threshold_filter(const Dataset& dataset, const MetricConfig& config, ScoreKind kind,
                              double threshold, std::size_t workers = 0);

// For each poison-cohort quantile q, the filter stats at the tightest
// threshold that removes at least fraction q of the poison samples.
std::vector<FilterStats> tradeoff_curve(const Dataset& dataset, const MetricConfig& config,
                                        ScoreKind kind, std::span<const double> quantiles,
                                        std::size_t workers = 0);

struct PostFilterAd {
    FilterStats stats;
    ADReport before;
    ADReport after;
};

// threshold_filter composed with AD measurement of both datasets.
PostFilterAd post_filter_ad(const Dataset& dataset, const MetricConfig& config, ScoreKind kind,
                            double threshold, std::span<const double> alphas,
                            std::size_t workers = 0);

}  // namespace adlab::defense
