#pragma once

#include <cstdint>
#include <vector>

#include "vseg/volume.hpp"

namespace vseg {

// Connected-component partition of a binary mask. Labels run 1..K in
// first-encounter scan order (x fastest); 0 is background. sizes is sorted
// by voxel count descending, ties broken by smaller label.
struct ComponentSet {
    std::array<std::int64_t, 3> dims{0, 0, 0};
    std::array<float, 3> spacing_mm{1.0f, 1.0f, 1.0f};
    std::vector<std::int32_t> labels;
    std::vector<std::pair<std::int32_t, std::int64_t>> sizes;
};

// connectivity: 6 (faces), 18 (faces+edges) or 26 (full neighborhood).
ComponentSet label_components(const Volume& mask, int connectivity = 26);

// Union of the k largest components (all of them if fewer exist). A
// non-empty keep_labels overrides the size ranking — the manual-selection
// fallback; unknown labels are rejected with the available ones listed.
Volume keep_largest(const ComponentSet& components, int k = 2,
                    const std::vector<std::int32_t>& keep_labels = {});

// prob > threshold -> 1. Used to binarize probability maps before labeling.
Volume threshold_volume(const Volume& prob, double threshold = 0.5);

}  // namespace vseg
