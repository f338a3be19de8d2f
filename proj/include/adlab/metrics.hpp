#pragma once

#include <span>

#include "adlab/types.hpp"

namespace adlab {

enum class PairKind : std::uint8_t { CrossDomain, ImageImage, TextText };

// L2 distance above which two concepts count as semantically unrelated.
inline constexpr double kSemanticUnrelatedThreshold = 4.8;

// Cosine distance normalized to [0,1]: (1 - cos(a,b)) / 2.
// Throws InvalidInput on dimension mismatch or a zero-norm vector.
double cosine_distance(std::span<const float> a, std::span<const float> b);

// Pairwise distance between two embeddings under ContinuousCosine.
// BinaryLabel configs must use the label overload.
double pairwise_distance(const Embedding& a, const Embedding& b, PairKind which,
                         const MetricConfig& config);

// Pairwise distance between two labels under BinaryLabel: 0 when the labels
// agree (same concept intra-domain, correct labeling cross-domain), else 1.
double pairwise_distance(ConceptId a, ConceptId b, PairKind which, const MetricConfig& config);

struct SemanticDistance {
    double distance = 0.0;
    bool unrelated = false;
};

// Euclidean distance between two textual embeddings, flagged unrelated when
// strictly above kSemanticUnrelatedThreshold.
SemanticDistance concept_semantic_distance(const Embedding& text_a, const Embedding& text_b);

}  // namespace adlab
