#include "adlab/validate.hpp"

#include <cmath>
#include <string>

namespace adlab {

namespace {

std::string at_sample(std::size_t i) {
    return " (sample index " + std::to_string(i) + ")";
}

}  // namespace

ValidationReport validate_dataset(const Dataset& dataset, const MetricConfig& config) {
    ValidationReport report;
    auto flag = [&](std::string msg) { report.violations.push_back(std::move(msg)); };

    if (!(config.alpha >= 0.0 && config.alpha <= 1.0))
        flag("alpha must lie in [0,1], got " + std::to_string(config.alpha));

    const std::size_t n = dataset.size();
    if (n == 0) {
        flag("dataset is empty (N >= 1 required)");
        return report;
    }

    const auto& img = dataset.image_matrix();
    const auto& txt = dataset.text_matrix();

    for (std::size_t i = 0; i < n; ++i) {
        const Sample& s = dataset.sample(i);
        if (s.image_row >= img.rows())
            flag("image_row " + std::to_string(s.image_row) + " out of range" + at_sample(i));
        if (s.text_row >= txt.rows())
            flag("text_row " + std::to_string(s.text_row) + " out of range" + at_sample(i));
        if (s.role == Role::Poison) {
            if (!s.target_concept)
                flag("poison sample lacks target_concept" + at_sample(i));
            else if (*s.target_concept == s.concept_id)
                flag("poison target equals its source concept" + at_sample(i));
        } else if (s.target_concept) {
            flag("benign sample carries target_concept" + at_sample(i));
        }
    }

    const auto& counts = dataset.per_concept_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c].poisoned > 0 && counts[c].poisoned >= counts[c].total)
            flag("concept " + std::to_string(c) + " is fully poisoned (m=" +
                 std::to_string(counts[c].poisoned) + ", n=" + std::to_string(counts[c].total) +
                 "); m < n required");
    }

    if (config.kind == MetricKind::ContinuousCosine) {
        if (img.cols() != txt.cols())
            flag("cosine metric requires d_img == d_txt, got " + std::to_string(img.cols()) +
                 " vs " + std::to_string(txt.cols()));
        auto check_matrix = [&](const EmbeddingMatrix& m, const char* name) {
            for (std::size_t r = 0; r < m.rows(); ++r) {
                double norm2 = 0.0;
                bool finite = true;
                for (float x : m.row(r)) {
                    if (!std::isfinite(x)) finite = false;
                    norm2 += static_cast<double>(x) * static_cast<double>(x);
                }
                if (!finite)
                    flag(std::string(name) + " row " + std::to_string(r) +
                         " has non-finite components");
                else if (norm2 == 0.0)
                    flag(std::string(name) + " row " + std::to_string(r) +
                         " has zero norm (cosine undefined)");
            }
        };
        check_matrix(img, "image matrix");
        check_matrix(txt, "text matrix");
    } else {
        auto check_finite_only = [&](const EmbeddingMatrix& m, const char* name) {
            for (std::size_t r = 0; r < m.rows(); ++r)
                for (float x : m.row(r))
                    if (!std::isfinite(x)) {
                        flag(std::string(name) + " row " + std::to_string(r) +
                             " has non-finite components");
                        break;
                    }
        };
        check_finite_only(img, "image matrix");
        check_finite_only(txt, "text matrix");
    }

    return report;
}

void require_valid(const Dataset& dataset, const MetricConfig& config) {
    ValidationReport report = validate_dataset(dataset, config);
    if (!report.ok())
        throw InvalidInput("invalid dataset: " + report.violations.front() +
                           (report.violations.size() > 1
                                ? " (+" + std::to_string(report.violations.size() - 1) + " more)"
                                : ""));
}

}  // namespace adlab
