#include "adlab/defense.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "adlab/metrics.hpp"
#include "adlab/validate.hpp"

namespace adlab::defense {

namespace {

std::vector<double> cross_distances(const Dataset& dataset, const MetricConfig& config) {
    std::vector<double> out(dataset.size());
    const bool cosine = config.kind == MetricKind::ContinuousCosine;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const Sample& s = dataset.sample(i);
        if (cosine)
            out[i] = cosine_distance(dataset.image_matrix().row(s.image_row),
                                     dataset.text_matrix().row(s.text_row));
        else
            out[i] = image_concept_of(s) == s.concept_id ? 0.0 : 1.0;
    }
    return out;
}

}  // namespace

std::vector<double> sample_scores(const Dataset& dataset, const MetricConfig& config,
                                  ScoreKind kind, std::size_t workers) {
    require_valid(dataset, config);
    if (kind == ScoreKind::AlignmentScore) {
        std::vector<double> scores = cross_distances(dataset, config);
        for (double& s : scores) s = 1.0 - s;
        return scores;
    }
    const auto per_sample = per_sample_scores(dataset, config, workers);
    std::vector<double> scores(per_sample.size());
    for (std::size_t i = 0; i < per_sample.size(); ++i)
        scores[i] = kind == ScoreKind::PerSampleAD ? per_sample[i].combined
                                                   : per_sample[i].structure_share;
    return scores;
}

CdfTable score_cdf(const Dataset& dataset, const MetricConfig& config, ScoreKind kind,
                   std::size_t grid_points, std::size_t workers) {
    if (grid_points < 2) throw InvalidInput("score_cdf: need at least two grid points");
    const std::vector<double> scores = sample_scores(dataset, config, kind, workers);

    std::vector<double> benign, poison;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (dataset.sample(i).role == Role::Poison)
            poison.push_back(scores[i]);
        else
            benign.push_back(scores[i]);
    }
    std::sort(benign.begin(), benign.end());
    std::sort(poison.begin(), poison.end());

    const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
    const double lo = *lo_it;
    const double hi = *hi_it;

    CdfTable table;
    table.benign_count = benign.size();
    table.poison_count = poison.size();
    table.grid.resize(grid_points);
    for (std::size_t j = 0; j < grid_points; ++j)
        table.grid[j] =
            lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(grid_points - 1);
    table.grid.back() = hi;  // exact upper end so both CDFs reach 1

    auto cdf_of = [&](const std::vector<double>& sorted) {
        std::vector<double> cdf;
        if (sorted.empty()) return cdf;
        cdf.resize(grid_points);
        for (std::size_t j = 0; j < grid_points; ++j) {
            const auto le =
                std::upper_bound(sorted.begin(), sorted.end(), table.grid[j]) - sorted.begin();
            cdf[j] = static_cast<double>(le) / static_cast<double>(sorted.size());
        }
        return cdf;
    };
    table.benign_cdf = cdf_of(benign);
    table.poison_cdf = cdf_of(poison);
    return table;
}

FilterResult threshold_filter(const Dataset& dataset, const MetricConfig& config, ScoreKind kind,
                              double threshold, std::size_t workers) {
    const std::vector<double> scores = sample_scores(dataset, config, kind, workers);
    const bool low = removes_low_scores(kind);

    std::vector<std::size_t> keep;
    std::uint64_t benign_total = 0, poison_total = 0, benign_removed = 0, poison_removed = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool is_poison = dataset.sample(i).role == Role::Poison;
        (is_poison ? poison_total : benign_total) += 1;
        const bool removed = low ? scores[i] < threshold : scores[i] > threshold;
        if (removed)
            (is_poison ? poison_removed : benign_removed) += 1;
        else
            keep.push_back(i);
    }

    FilterResult result;
    result.stats.threshold = threshold;
    result.stats.removed_benign_fraction =
        benign_total ? static_cast<double>(benign_removed) / static_cast<double>(benign_total)
                     : 0.0;
    result.stats.removed_poison_fraction =
        poison_total ? static_cast<double>(poison_removed) / static_cast<double>(poison_total)
                     : 0.0;
    result.stats.remaining_count = keep.size();
    if (keep.empty()) return result;

    const std::size_t d_img = dataset.image_matrix().cols();
    const std::size_t d_txt = dataset.text_matrix().cols();
    std::vector<Sample> samples;
    samples.reserve(keep.size());
    EmbeddingMatrix image(keep.size(), d_img);
    EmbeddingMatrix text(keep.size(), d_txt);
    for (std::size_t pos = 0; pos < keep.size(); ++pos) {
        Sample s = dataset.sample(keep[pos]);
        const auto src_img = dataset.image_matrix().row(s.image_row);
        const auto src_txt = dataset.text_matrix().row(s.text_row);
        std::copy(src_img.begin(), src_img.end(), image.row(pos).begin());
        std::copy(src_txt.begin(), src_txt.end(), text.row(pos).begin());
        s.image_row = pos;
        s.text_row = pos;
        samples.push_back(std::move(s));
    }
    result.remaining = Dataset(std::move(samples), std::move(image), std::move(text),
                               dataset.concept_names());
    return result;
}

std::vector<FilterStats> tradeoff_curve(const Dataset& dataset, const MetricConfig& config,
                                        ScoreKind kind, std::span<const double> quantiles,
                                        std::size_t workers) {
    const std::vector<double> scores = sample_scores(dataset, config, kind, workers);
    std::vector<double> poison;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (dataset.sample(i).role == Role::Poison) poison.push_back(scores[i]);
    if (poison.empty()) throw InvalidInput("tradeoff_curve: dataset has no poison samples");
    for (double q : quantiles)
        if (!(q > 0.0 && q < 1.0)) throw InvalidInput("tradeoff_curve: quantiles must lie in (0,1)");

    const bool low = removes_low_scores(kind);
    if (low)
        std::sort(poison.begin(), poison.end());
    else
        std::sort(poison.begin(), poison.end(), std::greater<double>());

    std::vector<FilterStats> curve;
    curve.reserve(quantiles.size());
    for (double q : quantiles) {
        const auto p = static_cast<double>(poison.size());
        std::size_t k = static_cast<std::size_t>(std::ceil(q * p));
        k = std::clamp<std::size_t>(k, 1, poison.size());
        const double cut = poison[k - 1];
        // Tightest threshold whose strict-inequality removal covers the cut.
        const double threshold = low
                                     ? std::nextafter(cut, std::numeric_limits<double>::infinity())
                                     : std::nextafter(cut, -std::numeric_limits<double>::infinity());
        curve.push_back(threshold_filter(dataset, config, kind, threshold, workers).stats);
    }
    return curve;
}

PostFilterAd post_filter_ad(const Dataset& dataset, const MetricConfig& config, ScoreKind kind,
                            double threshold, std::span<const double> alphas,
                            std::size_t workers) {
    PostFilterAd out;
    out.before = combined_ad(dataset, config, alphas, {}, workers);
    FilterResult filtered = threshold_filter(dataset, config, kind, threshold, workers);
    out.stats = filtered.stats;
    if (!filtered.remaining)
        throw InvalidInput("post_filter_ad: filter removed every sample");
    out.after = combined_ad(*filtered.remaining, config, alphas, {}, workers);
    return out;
}

}  // namespace adlab::defense
