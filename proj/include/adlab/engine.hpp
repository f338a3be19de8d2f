#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "adlab/types.hpp"

namespace adlab {

// Plan for the Monte Carlo structure estimator: `pair_budget` ordered pairs
// drawn uniformly with replacement from a counter-based stream keyed by seed.
struct SamplingPlan {
    std::uint64_t pair_budget = 0;
    std::uint64_t seed = 0;
};

enum class EstimatorMode : std::uint8_t { Exact, Sampled };

struct EstimatorInfo {
    EstimatorMode mode = EstimatorMode::Exact;
    std::uint64_t pair_budget = 0;     // Sampled only
    std::uint64_t seed = 0;            // Sampled only
    double stderr_estimate = 0.0;      // Sampled only
};

struct StructureResult {
    double value = 0.0;
    EstimatorInfo info;
};

struct ADReport {
    double feature_ad = 0.0;
    double structure_ad = 0.0;
    std::map<double, double> combined;  // alpha -> alpha*feature + (1-alpha)*structure
    std::uint64_t pair_count = 0;       // ordered pairs in the structure term
    EstimatorInfo estimator;
};

struct PerSampleScore {
    std::uint64_t sample_id = 0;
    double cross_distance = 0.0;   // D_img:txt(x,y)
    double structure_share = 0.0;  // D_s(x,y) = (1/N) sum_k |D_img(x,x_k) - D_txt(y,y_k)|
    double combined = 0.0;         // alpha*cross + (1-alpha)*share
};

inline double combine_ad(double feature, double structure, double alpha) {
    return alpha * feature + (1.0 - alpha) * structure;
}

// Mean cross-domain distance over labeled pairs (unweighted feature term).
double feature_ad(const Dataset& dataset, const MetricConfig& config, std::size_t workers = 0);

// Mean |D_img - D_txt| over all N^2 ordered pairs, self-pairs included
// (they contribute zero). Without a plan the sum is exact and bitwise
// reproducible across worker counts; with a plan it is an unbiased sampled
// estimate with a standard-error estimate.
StructureResult structure_ad(const Dataset& dataset, const MetricConfig& config,
                             std::optional<SamplingPlan> plan = {}, std::size_t workers = 0);

// Feature and structure terms computed once, combined for every requested
// alpha plus the config's alpha.
ADReport combined_ad(const Dataset& dataset, const MetricConfig& config,
                     std::span<const double> alphas, std::optional<SamplingPlan> plan = {},
                     std::size_t workers = 0);

// AD estimate for fine-tuning a benign base model:
// (1-lambda)*ad_base + lambda*ad_finetune.
double finetune_ad(double ad_base, double ad_finetune, double lambda);

// One score per sample; the mean of `combined` equals the dataset AD.
std::vector<PerSampleScore> per_sample_scores(const Dataset& dataset, const MetricConfig& config,
                                              std::size_t workers = 0);

// Independent test oracle: sequential double loops over raw rows, plain
// summation, no tiling and no code shared with the paths above. Refuses
// datasets larger than `oracle_cap`.
ADReport brute_force_ad(const Dataset& dataset, const MetricConfig& config,
                        std::span<const double> alphas = {}, std::size_t oracle_cap = 2000);

}  // namespace adlab
