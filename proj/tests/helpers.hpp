#pragma once

#include <initializer_list>
#include <vector>

#include "adlab/types.hpp"

namespace testutil {

inline adlab::EmbeddingMatrix make_matrix(std::initializer_list<std::vector<float>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<float> data;
    data.reserve(r * c);
    for (const auto& row : rows) data.insert(data.end(), row.begin(), row.end());
    return adlab::EmbeddingMatrix(r, c, std::move(data));
}

inline adlab::Sample benign(std::uint64_t id, std::uint32_t concept_value, std::size_t img,
                            std::size_t txt) {
    adlab::Sample s;
    s.id = id;
    s.concept_id = adlab::ConceptId{concept_value};
    s.image_row = img;
    s.text_row = txt;
    return s;
}

inline adlab::Sample poison(std::uint64_t id, std::uint32_t concept_value,
                            std::uint32_t target_value, std::size_t img, std::size_t txt) {
    adlab::Sample s = benign(id, concept_value, img, txt);
    s.role = adlab::Role::Poison;
    s.target_concept = adlab::ConceptId{target_value};
    return s;
}

}  // namespace testutil
