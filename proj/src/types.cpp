#include "adlab/types.hpp"

#include <algorithm>

namespace adlab {

Dataset::Dataset(std::vector<Sample> samples, EmbeddingMatrix image, EmbeddingMatrix text,
                 std::vector<std::string> concept_names)
    : samples_(std::move(samples)),
      image_(std::move(image)),
      text_(std::move(text)),
      concept_names_(std::move(concept_names)) {
    std::uint32_t max_id = 0;
    bool any = false;
    for (const Sample& s : samples_) {
        any = true;
        max_id = std::max(max_id, s.concept_id.value);
        if (s.target_concept) max_id = std::max(max_id, s.target_concept->value);
    }
    concept_count_ = any ? max_id + 1 : 0;
    counts_.assign(concept_count_, ConceptCount{});
    for (const Sample& s : samples_) {
        ConceptCount& c = counts_[s.concept_id.value];
        c.total += 1;
        if (s.role == Role::Poison) {
            c.poisoned += 1;
            poison_count_ += 1;
        }
    }
}

}  // namespace adlab
