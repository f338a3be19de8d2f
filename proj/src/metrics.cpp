#include "adlab/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace adlab {

namespace {

void check_finite(std::span<const float> v, const char* side) {
    for (float x : v) {
        if (!std::isfinite(x))
            throw InvalidInput(std::string("non-finite component in ") + side + " embedding");
    }
}

}  // namespace

double cosine_distance(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw InvalidInput("cosine distance: dimension mismatch");
    if (a.empty()) throw InvalidInput("cosine distance: empty embedding");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i];
        const double y = b[i];
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na == 0.0 || nb == 0.0) throw InvalidInput("cosine distance: zero-norm embedding");
    // dot/sqrt(na*nb) keeps d(v,v) == 0 and d(v,-v) == 1 exact in floating point
    double cos = dot / std::sqrt(na * nb);
    cos = std::clamp(cos, -1.0, 1.0);
    return (1.0 - cos) * 0.5;
}

double pairwise_distance(const Embedding& a, const Embedding& b, PairKind which,
                         const MetricConfig& config) {
    (void)which;  // the cosine rule is identical for all three pair kinds
    if (config.kind != MetricKind::ContinuousCosine)
        throw InvalidInput("pairwise_distance: embedding operands require the cosine metric");
    check_finite(a.values(), "left");
    check_finite(b.values(), "right");
    return cosine_distance(a.values(), b.values());
}

double pairwise_distance(ConceptId a, ConceptId b, PairKind which, const MetricConfig& config) {
    (void)which;  // same-concept intra-domain and correct-labeling cross-domain coincide
    if (config.kind != MetricKind::BinaryLabel)
        throw InvalidInput("pairwise_distance: label operands require the binary metric");
    return a == b ? 0.0 : 1.0;
}

SemanticDistance concept_semantic_distance(const Embedding& text_a, const Embedding& text_b) {
    if (text_a.dim() != text_b.dim())
        throw InvalidInput("concept_semantic_distance: dimension mismatch");
    check_finite(text_a.values(), "left");
    check_finite(text_b.values(), "right");
    // Left-to-right accumulation in double; callers rely on the exact result
    // when probing the threshold boundary.
    double acc = 0.0;
    const auto a = text_a.values();
    const auto b = text_b.values();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc = acc + d * d;
    }
    const double dist = std::sqrt(acc);
    return SemanticDistance{dist, dist > kSemanticUnrelatedThreshold};
}

}  // namespace adlab
