#pragma once

#include <cstdint>
#include <vector>

#include "vseg/rng.hpp"
#include "vseg/volume.hpp"

namespace vseg {

enum class PatchKind { positive_centered, all_negative, tiling };
enum class Rotation { none, r90, r180, r270 };

struct PatchSpec {
    std::array<std::int64_t, 3> origin{0, 0, 0};
    std::int64_t size = 0;  // cubic edge
    PatchKind kind = PatchKind::tiling;
    Rotation rotation = Rotation::none;
    int rotation_axis = 0;  // 0=x, 1=y, 2=z
};

struct TrainingPatch {
    PatchSpec spec;
    Volume image;
    Volume truth;
};

// Copies the spec's cube out of the volume. Tiling specs may reach past the
// volume bounds; those voxels are padded with 0 for masks and the volume's
// minimum intensity for gray images, so padding never fakes foreground.
Volume extract_patch(const Volume& volume, const PatchSpec& spec);

// Imbalance-aware sampler: each patch is independently centered on a
// uniformly random positive voxel with probability positive_ratio (origin
// clamped at borders, chosen voxel always inside), otherwise rejection-
// sampled until it contains zero positives (1000-retry bound). Per-patch
// sub-streams are seeded up front so extraction order can't change results.
std::vector<TrainingPatch> sample_training_patches(const Volume& image, const Volume& truth,
                                                   int count, std::int64_t patch_size,
                                                   double positive_ratio, Rng& rng);

// Voxel-exact quarter-turn rotation of a cubic volume about one axis.
Volume rotate_volume(const Volume& patch, Rotation rotation, int axis);

// Rotates image and truth identically and records the rotation in the spec.
TrainingPatch rotate_patch(const TrainingPatch& patch, Rotation rotation, int axis = 0);

// Disjoint cover of the volume padded up to the next multiple of patch_size.
std::vector<PatchSpec> tile_volume(const Volume& volume, std::int64_t patch_size);

// Writes each tile back into place and crops the padding. Rejects patch
// lists that do not cover the padded grid exactly once.
Volume stitch_patches(const std::vector<PatchSpec>& specs, const std::vector<Volume>& patches,
                      std::array<std::int64_t, 3> dims, std::array<float, 3> spacing_mm,
                      VoxelType dtype);

}  // namespace vseg
