#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace adlab {

// Thrown when an operation's preconditions are violated by its inputs.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Dense concept identity: 0..C-1 within one dataset.
struct ConceptId {
    std::uint32_t value = 0;

    friend constexpr bool operator==(ConceptId, ConceptId) = default;
    friend constexpr auto operator<=>(ConceptId, ConceptId) = default;
};

enum class Role : std::uint8_t { Benign, Poison };

// One labeled text/image pair. Poison samples keep their textual concept but
// their image row carries the target concept's visual content.
struct Sample {
    std::uint64_t id = 0;
    ConceptId concept_id;
    Role role = Role::Benign;
    std::optional<ConceptId> target_concept;  // present iff role == Poison
    std::size_t image_row = 0;
    std::size_t text_row = 0;

    friend bool operator==(const Sample&, const Sample&) = default;
};

// Visual identity of a sample's image: the target concept for poison samples,
// the label concept otherwise.
inline ConceptId image_concept_of(const Sample& s) {
    return s.role == Role::Poison && s.target_concept ? *s.target_concept : s.concept_id;
}

// A single embedding vector, 32-bit float components.
class Embedding {
public:
    Embedding() = default;
    explicit Embedding(std::vector<float> components) : components_(std::move(components)) {}

    std::size_t dim() const { return components_.size(); }
    std::span<const float> values() const { return components_; }
    const std::vector<float>& vec() const { return components_; }

private:
    std::vector<float> components_;
};

// Row-major matrix of float32 embedding rows.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;
    EmbeddingMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {}
    EmbeddingMatrix(std::size_t rows, std::size_t cols, std::vector<float> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_)
            throw InvalidInput("embedding matrix payload size does not match rows*cols");
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    std::span<const float> row(std::size_t i) const {
        return std::span<const float>(data_.data() + i * cols_, cols_);
    }
    std::span<float> row(std::size_t i) {
        return std::span<float>(data_.data() + i * cols_, cols_);
    }

    const std::vector<float>& data() const { return data_; }
    std::vector<float>& data() { return data_; }

    friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<float> data_;
};

enum class MetricKind : std::uint8_t {
    ContinuousCosine,  // (1 - cos)/2 on embedding rows; needs d_img == d_txt cross-domain
    BinaryLabel,       // 0/1 from concept labels; embeddings unused
};

struct MetricConfig {
    MetricKind kind = MetricKind::ContinuousCosine;
    double alpha = 0.8;  // weight on the feature term
};

struct ConceptCount {
    std::uint64_t total = 0;
    std::uint64_t poisoned = 0;
};

// Immutable collection of samples plus their embedding matrices.
// Construction tolerates semantically broken data so validate_dataset can
// report violations; operations check validity before doing real work.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<Sample> samples, EmbeddingMatrix image, EmbeddingMatrix text,
            std::vector<std::string> concept_names = {});

    std::size_t size() const { return samples_.size(); }
    const std::vector<Sample>& samples() const { return samples_; }
    const Sample& sample(std::size_t i) const { return samples_[i]; }

    const EmbeddingMatrix& image_matrix() const { return image_; }
    const EmbeddingMatrix& text_matrix() const { return text_; }

    // Number of concept ids in use: max referenced id + 1.
    std::uint32_t concept_count() const { return concept_count_; }
    // Indexed by concept id; recomputed at construction.
    const std::vector<ConceptCount>& per_concept_counts() const { return counts_; }
    std::uint64_t poison_count() const { return poison_count_; }

    const std::vector<std::string>& concept_names() const { return concept_names_; }

    friend bool operator==(const Dataset& a, const Dataset& b) {
        return a.samples_ == b.samples_ && a.image_ == b.image_ && a.text_ == b.text_ &&
               a.concept_names_ == b.concept_names_;
    }

private:
    std::vector<Sample> samples_;
    EmbeddingMatrix image_;
    EmbeddingMatrix text_;
    std::vector<std::string> concept_names_;
    std::vector<ConceptCount> counts_;
    std::uint32_t concept_count_ = 0;
    std::uint64_t poison_count_ = 0;
};

}  // namespace adlab
