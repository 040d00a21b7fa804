#include "vseg/phantom.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace vseg {

namespace {

constexpr double kPi = 3.14159265358979323846;

}  // namespace

void PhantomConfig::validate() const {
    for (int a = 0; a < 3; ++a)
        if (dims[a] < 16)
            throw std::invalid_argument("phantom: dims too small to host the sheet (need >= 16)");
    if (sheet_thickness_vox < 1)
        throw std::invalid_argument("phantom: sheet_thickness_vox must be >= 1");
    if (!(target_positive_fraction > 0.0) || target_positive_fraction > 0.02)
        throw std::invalid_argument("phantom: target_positive_fraction must be in (0, 0.02]");
    const double max_sigma = (kSheetIntensity - kBackgroundIntensity) / 3.0;
    if (noise_sigma < 0.0 || noise_sigma > max_sigma)
        throw std::invalid_argument("phantom: noise_sigma must be in [0, " +
                                    std::to_string(max_sigma) + "]");
    if (distractor_count < 0)
        throw std::invalid_argument("phantom: distractor_count must be >= 0");
}

PhantomPair generate_phantom(const PhantomConfig& config) {
    config.validate();
    const std::int64_t DX = config.dims[0], DY = config.dims[1], DZ = config.dims[2];
    const double total = static_cast<double>(DX) * static_cast<double>(DY) * static_cast<double>(DZ);

    const int t = config.sheet_thickness_vox;
    const std::int64_t slab_lo = (t - 1) / 2, slab_hi = t / 2;  // slab = [zr-lo, zr+hi]
    const std::int64_t bone_gap = t + 2;  // bone starts this far from the surface center

    // Curved sheet surface z = zs(x, y). The surface lives in the lower
    // z-third (slab top <= 0.43*DZ + 2) so that volumes at least ~1.75x the
    // patch edge always contain sheet-free windows for all-negative patches.
    Rng geo(derive_seed(config.seed, 0));
    const double zc = (0.28 + 0.05 * geo.uniform()) * static_cast<double>(DZ);
    const double ax = (0.025 + 0.025 * geo.uniform()) * static_cast<double>(DZ);
    const double ay = (0.025 + 0.025 * geo.uniform()) * static_cast<double>(DZ);
    const double phx = 2.0 * kPi * geo.uniform();
    const double phy = 2.0 * kPi * geo.uniform();
    const double wx = (1.0 + 0.5 * geo.uniform()) * static_cast<double>(DX);
    const double wy = (1.0 + 0.5 * geo.uniform()) * static_cast<double>(DY);
    auto surface = [&](std::int64_t x, std::int64_t y) {
        return zc + ax * std::sin(2.0 * kPi * static_cast<double>(x) / wx + phx) +
               ay * std::cos(2.0 * kPi * static_cast<double>(y) / wy + phy);
    };
    const double z_reach = ax + ay;
    if (zc - z_reach - static_cast<double>(slab_lo + bone_gap) < 1.0 ||
        zc + z_reach + static_cast<double>(slab_hi + bone_gap) > static_cast<double>(DZ) - 2.0)
        throw std::invalid_argument("phantom: dims too small to host the sheet in z");

    // Two contact disks sized so the 1-voxel truth surface hits the target
    // fraction: 2 * pi * r^2 ~= fraction * total.
    const double radius = std::sqrt(config.target_positive_fraction * total / (2.0 * kPi));
    const double cx1 = (0.30 + 0.02 * (geo.uniform() - 0.5)) * static_cast<double>(DX);
    const double cx2 = (0.70 + 0.02 * (geo.uniform() - 0.5)) * static_cast<double>(DX);
    const double cy1 = (0.50 + 0.06 * (geo.uniform() - 0.5)) * static_cast<double>(DY);
    const double cy2 = (0.50 + 0.06 * (geo.uniform() - 0.5)) * static_cast<double>(DY);
    if (radius < 1.5 || cx1 - radius < 1.0 || cx2 + radius > static_cast<double>(DX) - 2.0 ||
        cy1 - radius < 1.0 || cy1 + radius > static_cast<double>(DY) - 2.0 ||
        cy2 - radius < 1.0 || cy2 + radius > static_cast<double>(DY) - 2.0 ||
        cx2 - cx1 < 2.0 * radius + 4.0)
        throw std::invalid_argument(
            "phantom: dims too small to host the contact disks (radius " +
            std::to_string(radius) + "); lower target_positive_fraction or enlarge dims");

    Volume image = make_volume(config.dims, config.spacing_mm, VoxelType::gray_f32);
    Volume truth = make_volume(config.dims, config.spacing_mm, VoxelType::mask_u8);
    Volume distractors = make_volume(config.dims, config.spacing_mm, VoxelType::mask_u8);

    for (std::int64_t y = 0; y < DY; ++y) {
        for (std::int64_t x = 0; x < DX; ++x) {
            const double zs = surface(x, y);
            const std::int64_t zr = std::llround(zs);
            const double dx1 = static_cast<double>(x) - cx1, dy1 = static_cast<double>(y) - cy1;
            const double dx2 = static_cast<double>(x) - cx2, dy2 = static_cast<double>(y) - cy2;
            const bool in_disk = dx1 * dx1 + dy1 * dy1 <= radius * radius ||
                                 dx2 * dx2 + dy2 * dy2 <= radius * radius;
            for (std::int64_t z = 0; z < DZ; ++z) {
                float v = kBackgroundIntensity;
                if (z <= zr - bone_gap || z >= zr + bone_gap) v = kBoneIntensity;
                if (in_disk && z >= zr - slab_lo && z <= zr + slab_hi) v = kSheetIntensity;
                image.at(x, y, z) = v;
            }
            if (in_disk) truth.at(x, y, zr) = 1.0f;
        }
    }

    // Distractor flecks: tiny contact patches on the same surface, matching
    // the real disks in intensity, thickness and clearance profile, so a
    // local window cannot tell them from the sheet. Only lateral extent
    // (<= 3 columns vs the full disk) separates them, and the spacing rule
    // keeps every fleck a small component disjoint from the contacts.
    struct Spot {
        double x, y, r;
    };
    std::vector<Spot> flecks;
    for (int i = 0; i < config.distractor_count; ++i) {
        Rng drng(derive_seed(config.seed, 1, static_cast<std::uint64_t>(i)));
        bool placed = false;
        for (int attempt = 0; attempt < 500 && !placed; ++attempt) {
            const double fr = 1.0 + 0.6 * drng.uniform();  // <= 9 columns -> <= 3^3 voxels
            const std::int64_t fx = drng.uniform_int(3, DX - 4);
            const std::int64_t fy = drng.uniform_int(3, DY - 4);

            // Disks get the wider berth so a response halo around a fleck can
            // never bridge into a contact component; fleck-to-fleck spacing
            // only has to keep the flecks themselves disjoint.
            auto blocked = [&](double cx, double cy, double cr, double margin) {
                const double dx = static_cast<double>(fx) - cx;
                const double dy = static_cast<double>(fy) - cy;
                const double gap = cr + fr + margin;
                return dx * dx + dy * dy < gap * gap;
            };
            if (blocked(cx1, cy1, radius, 6.0) || blocked(cx2, cy2, radius, 6.0)) continue;
            bool clear = true;
            for (const Spot& s : flecks)
                if (blocked(s.x, s.y, s.r, 4.0)) clear = false;
            if (!clear) continue;

            for (std::int64_t y = fy - 2; y <= fy + 2; ++y)
                for (std::int64_t x = fx - 2; x <= fx + 2; ++x) {
                    const double dx = static_cast<double>(x - fx);
                    const double dy = static_cast<double>(y - fy);
                    if (dx * dx + dy * dy > fr * fr) continue;
                    const std::int64_t zr = std::llround(surface(x, y));
                    for (std::int64_t z = zr - slab_lo; z <= zr + slab_hi; ++z) {
                        image.at(x, y, z) = kSheetIntensity;
                        distractors.at(x, y, z) = 1.0f;
                    }
                }
            flecks.push_back({static_cast<double>(fx), static_cast<double>(fy), fr});
            placed = true;
        }
        if (!placed)
            throw std::runtime_error("phantom: could not place distractor " + std::to_string(i) +
                                     " after 500 attempts");
    }

    if (config.noise_sigma > 0.0) {
        Rng noise(derive_seed(config.seed, 2));
        for (float& v : image.voxels)
            v += static_cast<float>(noise.normal(0.0, config.noise_sigma));
    }

    double positives = 0.0;
    for (float v : truth.voxels) positives += v;
    const double fraction = positives / total;
    if (fraction < 0.5 * config.target_positive_fraction ||
        fraction > 2.0 * config.target_positive_fraction)
        throw std::runtime_error("phantom: achieved positive fraction " + std::to_string(fraction) +
                                 " outside [0.5x, 2x] of target " +
                                 std::to_string(config.target_positive_fraction));

    return {std::move(image), std::move(truth), std::move(distractors)};
}

}  // namespace vseg
