#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace vseg {

enum class VoxelType : std::uint32_t { mask_u8 = 0, gray_f32 = 1 };

// Dense 3D scalar grid with physical spacing; carrier for images, masks and
// probability maps. Voxels are stored as float regardless of dtype; dtype
// controls on-disk encoding and the binary invariant for masks.
struct Volume {
    std::array<std::int64_t, 3> dims{0, 0, 0};       // dx, dy, dz
    std::array<float, 3> spacing_mm{1.0f, 1.0f, 1.0f};
    VoxelType dtype = VoxelType::gray_f32;
    std::vector<float> voxels;  // x-fastest order

    std::int64_t numel() const { return dims[0] * dims[1] * dims[2]; }
    std::int64_t index(std::int64_t x, std::int64_t y, std::int64_t z) const {
        return (z * dims[1] + y) * dims[0] + x;
    }
    float at(std::int64_t x, std::int64_t y, std::int64_t z) const {
        return voxels[static_cast<std::size_t>(index(x, y, z))];
    }
    float& at(std::int64_t x, std::int64_t y, std::int64_t z) {
        return voxels[static_cast<std::size_t>(index(x, y, z))];
    }

    // Positive dims/spacing, voxel count matches dims, masks are exactly 0/1.
    void validate() const;
};

Volume make_volume(std::array<std::int64_t, 3> dims, std::array<float, 3> spacing_mm,
                   VoxelType dtype);

// On-disk layout (little-endian throughout): bytes 0-7 magic "VVOL0001",
// bytes 8-19 three u32 dims, bytes 20-31 three f32 spacings in mm,
// bytes 32-35 u32 dtype code (0=mask_u8, 1=gray_f32), then the payload in
// x-fastest order (one u8 per mask voxel, one f32 per gray voxel).
Volume read_volume(const std::string& path);
void write_volume(const Volume& volume, const std::string& path);

}  // namespace vseg
