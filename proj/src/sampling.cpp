#include "vseg/sampling.hpp"

#include <algorithm>
#include <iostream>
#include <stdexcept>

namespace vseg {

namespace {

std::int64_t clamp_origin(std::int64_t center, std::int64_t size, std::int64_t dim) {
    return std::clamp<std::int64_t>(center - size / 2, 0, dim - size);
}

bool patch_has_positive(const Volume& truth, const std::array<std::int64_t, 3>& origin,
                        std::int64_t size) {
    for (std::int64_t z = origin[2]; z < origin[2] + size; ++z)
        for (std::int64_t y = origin[1]; y < origin[1] + size; ++y)
            for (std::int64_t x = origin[0]; x < origin[0] + size; ++x)
                if (truth.at(x, y, z) != 0.0f) return true;
    return false;
}

}  // namespace

Volume extract_patch(const Volume& volume, const PatchSpec& spec) {
    if (spec.size < 1) throw std::invalid_argument("extract_patch: size must be positive");
    const bool padded = spec.kind == PatchKind::tiling;
    for (int a = 0; a < 3; ++a) {
        if (spec.origin[a] < 0)
            throw std::invalid_argument("extract_patch: negative origin");
        if (!padded && spec.origin[a] + spec.size > volume.dims[a])
            throw std::invalid_argument("extract_patch: patch exceeds volume bounds");
    }

    float pad_value = 0.0f;
    if (padded && volume.dtype == VoxelType::gray_f32 && !volume.voxels.empty())
        pad_value = *std::min_element(volume.voxels.begin(), volume.voxels.end());

    Volume out = make_volume({spec.size, spec.size, spec.size}, volume.spacing_mm, volume.dtype);
    if (padded && pad_value != 0.0f) std::fill(out.voxels.begin(), out.voxels.end(), pad_value);
    const std::int64_t x1 = std::min(spec.origin[0] + spec.size, volume.dims[0]);
    const std::int64_t y1 = std::min(spec.origin[1] + spec.size, volume.dims[1]);
    const std::int64_t z1 = std::min(spec.origin[2] + spec.size, volume.dims[2]);
    for (std::int64_t z = spec.origin[2]; z < z1; ++z)
        for (std::int64_t y = spec.origin[1]; y < y1; ++y)
            for (std::int64_t x = spec.origin[0]; x < x1; ++x)
                out.at(x - spec.origin[0], y - spec.origin[1], z - spec.origin[2]) =
                    volume.at(x, y, z);
    return out;
}

std::vector<TrainingPatch> sample_training_patches(const Volume& image, const Volume& truth,
                                                   int count, std::int64_t patch_size,
                                                   double positive_ratio, Rng& rng) {
    image.validate();
    truth.validate();
    if (image.dims != truth.dims)
        throw std::invalid_argument("sampler: image and truth dims differ");
    if (count < 0) throw std::invalid_argument("sampler: count must be >= 0");
    if (positive_ratio < 0.0 || positive_ratio > 1.0)
        throw std::invalid_argument("sampler: positive_ratio must be in [0,1]");
    for (int a = 0; a < 3; ++a)
        if (patch_size < 1 || patch_size > image.dims[a])
            throw std::invalid_argument("sampler: patch_size must be in [1, min dim]");

    std::vector<std::int64_t> positives;
    for (std::int64_t i = 0; i < truth.numel(); ++i)
        if (truth.voxels[static_cast<std::size_t>(i)] != 0.0f) positives.push_back(i);

    // Per-patch seeds drawn sequentially up front; everything after is a pure
    // function of the seed, so patches could be extracted in any order.
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(count));
    for (auto& s : seeds) s = rng.next_u64();

    std::vector<TrainingPatch> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        Rng sub(seeds[static_cast<std::size_t>(i)]);
        bool want_positive = sub.uniform() < positive_ratio;
        if (want_positive && positives.empty()) {
            std::cerr << "warning: sampler: no positive voxels; falling back to all-negative\n";
            want_positive = false;
        }

        PatchSpec spec;
        spec.size = patch_size;
        if (want_positive) {
            const std::int64_t pick = positives[static_cast<std::size_t>(
                sub.uniform_int(0, static_cast<std::int64_t>(positives.size()) - 1))];
            const std::int64_t px = pick % image.dims[0];
            const std::int64_t py = (pick / image.dims[0]) % image.dims[1];
            const std::int64_t pz = pick / (image.dims[0] * image.dims[1]);
            spec.origin = {clamp_origin(px, patch_size, image.dims[0]),
                           clamp_origin(py, patch_size, image.dims[1]),
                           clamp_origin(pz, patch_size, image.dims[2])};
            spec.kind = PatchKind::positive_centered;
        } else {
            bool found = false;
            for (int attempt = 0; attempt < 1000 && !found; ++attempt) {
                spec.origin = {sub.uniform_int(0, image.dims[0] - patch_size),
                               sub.uniform_int(0, image.dims[1] - patch_size),
                               sub.uniform_int(0, image.dims[2] - patch_size)};
                found = !patch_has_positive(truth, spec.origin, patch_size);
            }
            if (!found)
                throw std::runtime_error(
                    "sampler: could not find an all-negative patch in 1000 attempts");
            spec.kind = PatchKind::all_negative;
        }
        out.push_back({spec, extract_patch(image, spec), extract_patch(truth, spec)});
    }
    return out;
}

Volume rotate_volume(const Volume& patch, Rotation rotation, int axis) {
    if (patch.dims[0] != patch.dims[1] || patch.dims[1] != patch.dims[2])
        throw std::invalid_argument("rotate: patch must be cubic");
    if (axis < 0 || axis > 2) throw std::invalid_argument("rotate: axis must be 0, 1 or 2");
    const std::int64_t n = patch.dims[0];
    const int quarters = rotation == Rotation::none   ? 0
                         : rotation == Rotation::r90  ? 1
                         : rotation == Rotation::r180 ? 2
                                                      : 3;
    Volume cur = patch;
    for (int q = 0; q < quarters; ++q) {
        Volume next = cur;
        for (std::int64_t z = 0; z < n; ++z)
            for (std::int64_t y = 0; y < n; ++y)
                for (std::int64_t x = 0; x < n; ++x) {
                    // quarter turn in the plane orthogonal to the axis
                    std::int64_t sx = x, sy = y, sz = z;
                    if (axis == 0) {
                        sy = z;
                        sz = n - 1 - y;
                    } else if (axis == 1) {
                        sx = z;
                        sz = n - 1 - x;
                    } else {
                        sx = y;
                        sy = n - 1 - x;
                    }
                    next.at(x, y, z) = cur.at(sx, sy, sz);
                }
        cur = std::move(next);
    }
    return cur;
}

TrainingPatch rotate_patch(const TrainingPatch& patch, Rotation rotation, int axis) {
    TrainingPatch out;
    out.spec = patch.spec;
    out.spec.rotation = rotation;
    out.spec.rotation_axis = axis;
    out.image = rotate_volume(patch.image, rotation, axis);
    out.truth = rotate_volume(patch.truth, rotation, axis);
    return out;
}

std::vector<PatchSpec> tile_volume(const Volume& volume, std::int64_t patch_size) {
    if (patch_size < 1) throw std::invalid_argument("tile: patch_size must be positive");
    std::array<std::int64_t, 3> tiles{};
    for (int a = 0; a < 3; ++a) tiles[a] = (volume.dims[a] + patch_size - 1) / patch_size;
    std::vector<PatchSpec> specs;
    specs.reserve(static_cast<std::size_t>(tiles[0] * tiles[1] * tiles[2]));
    for (std::int64_t tz = 0; tz < tiles[2]; ++tz)
        for (std::int64_t ty = 0; ty < tiles[1]; ++ty)
            for (std::int64_t tx = 0; tx < tiles[0]; ++tx) {
                PatchSpec spec;
                spec.origin = {tx * patch_size, ty * patch_size, tz * patch_size};
                spec.size = patch_size;
                spec.kind = PatchKind::tiling;
                specs.push_back(spec);
            }
    return specs;
}

Volume stitch_patches(const std::vector<PatchSpec>& specs, const std::vector<Volume>& patches,
                      std::array<std::int64_t, 3> dims, std::array<float, 3> spacing_mm,
                      VoxelType dtype) {
    if (specs.size() != patches.size())
        throw std::invalid_argument("stitch: spec and patch counts differ");
    if (specs.empty()) throw std::invalid_argument("stitch: empty patch list");
    const std::int64_t size = specs[0].size;

    std::array<std::int64_t, 3> padded{};
    for (int a = 0; a < 3; ++a) padded[a] = (dims[a] + size - 1) / size * size;
    Volume buffer = make_volume(padded, spacing_mm, VoxelType::gray_f32);
    std::vector<std::uint8_t> covered(buffer.voxels.size(), 0);

    for (std::size_t i = 0; i < specs.size(); ++i) {
        const PatchSpec& spec = specs[i];
        if (spec.size != size)
            throw std::invalid_argument("stitch: mixed patch sizes");
        if (patches[i].dims != std::array<std::int64_t, 3>{size, size, size})
            throw std::invalid_argument("stitch: patch dims do not match spec size");
        for (int a = 0; a < 3; ++a)
            if (spec.origin[a] < 0 || spec.origin[a] % size != 0 ||
                spec.origin[a] + size > padded[a])
                throw std::invalid_argument("stitch: patch list inconsistent with dims");
        for (std::int64_t z = 0; z < size; ++z)
            for (std::int64_t y = 0; y < size; ++y)
                for (std::int64_t x = 0; x < size; ++x) {
                    const std::int64_t idx =
                        buffer.index(spec.origin[0] + x, spec.origin[1] + y, spec.origin[2] + z);
                    buffer.voxels[static_cast<std::size_t>(idx)] = patches[i].at(x, y, z);
                    ++covered[static_cast<std::size_t>(idx)];
                }
    }
    for (std::uint8_t c : covered)
        if (c != 1)
            throw std::invalid_argument("stitch: patch list does not cover the grid exactly once");

    Volume out = make_volume(dims, spacing_mm, dtype);
    for (std::int64_t z = 0; z < dims[2]; ++z)
        for (std::int64_t y = 0; y < dims[1]; ++y)
            for (std::int64_t x = 0; x < dims[0]; ++x) out.at(x, y, z) = buffer.at(x, y, z);
    return out;
}

}  // namespace vseg
