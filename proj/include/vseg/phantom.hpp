#pragma once

#include <cstdint>

#include "vseg/rng.hpp"
#include "vseg/volume.hpp"

namespace vseg {

// Synthetic stand-in for a contrast-enhanced joint scan: two dark bone
// plates separated by a curved gap, a bright contrast sheet pooled in two
// contact disks, and small bright distractor flecks elsewhere on the same
// surface.
struct PhantomConfig {
    std::array<std::int64_t, 3> dims{64, 64, 64};
    std::array<float, 3> spacing_mm{0.2f, 0.2f, 0.2f};
    int sheet_thickness_vox = 3;               // bright slab thickness in the image
    double target_positive_fraction = 0.0018;  // of the 1-voxel-thin truth surface
    double noise_sigma = 0.03;
    int distractor_count = 8;
    std::uint64_t seed = 0;

    void validate() const;
};

// Fixed clean intensities; noise is added on top. The sheet sits far enough
// above background that 3*noise_sigma can never close the gap (enforced by
// PhantomConfig::validate).
inline constexpr float kBoneIntensity = 0.12f;
inline constexpr float kBackgroundIntensity = 0.30f;
inline constexpr float kSheetIntensity = 0.92f;

struct PhantomPair {
    Volume image;        // gray_f32
    Volume truth;        // mask_u8: 1-voxel-thin central surface of each contact sheet
    Volume distractors;  // mask_u8: the bright fleck voxels, for removal audits
};

// Deterministic given config.seed. Throws if the dims cannot host the two
// contact disks or if the achieved positive fraction leaves [0.5x, 2x] of
// the target.
PhantomPair generate_phantom(const PhantomConfig& config);

}  // namespace vseg
