#include "vseg/volume.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace vseg {

namespace {

constexpr char kMagic[8] = {'V', 'V', 'O', 'L', '0', '0', '0', '1'};
constexpr std::size_t kHeaderBytes = 36;

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

std::uint32_t get_u32(const std::string& in, std::size_t off) {
    auto b = [&](std::size_t i) {
        return static_cast<std::uint32_t>(static_cast<unsigned char>(in[off + i]));
    };
    return b(0) | (b(1) << 8) | (b(2) << 16) | (b(3) << 24);
}

float get_f32(const std::string& in, std::size_t off) {
    const std::uint32_t bits = get_u32(in, off);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

void Volume::validate() const {
    for (int a = 0; a < 3; ++a) {
        if (dims[a] <= 0)
            throw std::invalid_argument("volume: dims must be positive, got dim[" +
                                        std::to_string(a) + "]=" + std::to_string(dims[a]));
        if (!(spacing_mm[a] > 0.0f))
            throw std::invalid_argument("volume: spacing must be positive");
    }
    if (static_cast<std::int64_t>(voxels.size()) != numel())
        throw std::invalid_argument("volume: voxel count " + std::to_string(voxels.size()) +
                                    " does not match dims product " + std::to_string(numel()));
    if (dtype == VoxelType::mask_u8)
        for (float v : voxels)
            if (v != 0.0f && v != 1.0f)
                throw std::invalid_argument("volume: mask voxel outside {0,1}");
}

Volume make_volume(std::array<std::int64_t, 3> dims, std::array<float, 3> spacing_mm,
                   VoxelType dtype) {
    Volume v;
    v.dims = dims;
    v.spacing_mm = spacing_mm;
    v.dtype = dtype;
    const std::int64_t n = dims[0] * dims[1] * dims[2];
    if (n <= 0) throw std::invalid_argument("volume: dims must be positive");
    v.voxels.assign(static_cast<std::size_t>(n), 0.0f);
    return v;
}

Volume read_volume(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("vvol: cannot open " + path);
    std::string data((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());

    if (data.size() < kHeaderBytes)
        throw std::runtime_error("vvol: truncated header in " + path + " (" +
                                 std::to_string(data.size()) + " bytes, need 36)");
    if (std::memcmp(data.data(), kMagic, 8) != 0)
        throw std::runtime_error("vvol: bad magic \"" + data.substr(0, 8) + "\" in " + path +
                                 " (expected \"VVOL0001\")");

    Volume v;
    for (int a = 0; a < 3; ++a) v.dims[a] = get_u32(data, 8 + 4 * static_cast<std::size_t>(a));
    for (int a = 0; a < 3; ++a) v.spacing_mm[a] = get_f32(data, 20 + 4 * static_cast<std::size_t>(a));
    const std::uint32_t code = get_u32(data, 32);
    if (code > 1)
        throw std::runtime_error("vvol: unknown dtype code " + std::to_string(code) + " in " + path);
    v.dtype = static_cast<VoxelType>(code);
    if (v.dims[0] <= 0 || v.dims[1] <= 0 || v.dims[2] <= 0)
        throw std::runtime_error("vvol: non-positive dims in " + path);

    const std::int64_t n = v.numel();
    const std::size_t voxel_bytes = v.dtype == VoxelType::mask_u8 ? 1 : 4;
    const std::size_t expect = kHeaderBytes + static_cast<std::size_t>(n) * voxel_bytes;
    if (data.size() != expect)
        throw std::runtime_error("vvol: payload size mismatch in " + path + " (expected " +
                                 std::to_string(expect) + " bytes for dims " +
                                 std::to_string(v.dims[0]) + "x" + std::to_string(v.dims[1]) +
                                 "x" + std::to_string(v.dims[2]) + ", found " +
                                 std::to_string(data.size()) + ")");

    v.voxels.resize(static_cast<std::size_t>(n));
    if (v.dtype == VoxelType::mask_u8) {
        for (std::int64_t i = 0; i < n; ++i) {
            const auto b = static_cast<unsigned char>(data[kHeaderBytes + static_cast<std::size_t>(i)]);
            if (b > 1)
                throw std::runtime_error("vvol: mask voxel value " + std::to_string(+b) +
                                         " outside {0,1} in " + path);
            v.voxels[static_cast<std::size_t>(i)] = static_cast<float>(b);
        }
    } else {
        for (std::int64_t i = 0; i < n; ++i)
            v.voxels[static_cast<std::size_t>(i)] =
                get_f32(data, kHeaderBytes + 4 * static_cast<std::size_t>(i));
    }
    return v;
}

void write_volume(const Volume& volume, const std::string& path) {
    volume.validate();
    std::string data;
    const std::size_t voxel_bytes = volume.dtype == VoxelType::mask_u8 ? 1 : 4;
    data.reserve(kHeaderBytes + volume.voxels.size() * voxel_bytes);
    data.append(kMagic, 8);
    for (int a = 0; a < 3; ++a) put_u32(data, static_cast<std::uint32_t>(volume.dims[a]));
    for (int a = 0; a < 3; ++a) put_f32(data, volume.spacing_mm[a]);
    put_u32(data, static_cast<std::uint32_t>(volume.dtype));
    if (volume.dtype == VoxelType::mask_u8) {
        for (float v : volume.voxels) data.push_back(v == 1.0f ? char(1) : char(0));
    } else {
        for (float v : volume.voxels) put_f32(data, v);
    }

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw std::runtime_error("vvol: cannot write " + path);
    file.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!file) throw std::runtime_error("vvol: short write to " + path);
}

}  // namespace vseg
