#include "vseg/postproc.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace vseg {

namespace {

struct UnionFind {
    std::vector<std::int64_t> parent;

    explicit UnionFind(std::size_t n) : parent(n) {
        for (std::size_t i = 0; i < n; ++i) parent[i] = static_cast<std::int64_t>(i);
    }
    std::int64_t find(std::int64_t a) {
        while (parent[static_cast<std::size_t>(a)] != a) {
            parent[static_cast<std::size_t>(a)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
            a = parent[static_cast<std::size_t>(a)];
        }
        return a;
    }
    void unite(std::int64_t a, std::int64_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    }
};

}  // namespace

ComponentSet label_components(const Volume& mask, int connectivity) {
    if (mask.dtype != VoxelType::mask_u8)
        throw std::invalid_argument("components: input must be a binary mask (mask_u8)");
    mask.validate();
    if (connectivity != 6 && connectivity != 18 && connectivity != 26)
        throw std::invalid_argument("components: connectivity must be 6, 18 or 26");

    // Offsets to lexicographically earlier neighbors only; the forward scan
    // has already visited those.
    std::vector<std::array<std::int64_t, 3>> offsets;
    for (std::int64_t dz = -1; dz <= 1; ++dz)
        for (std::int64_t dy = -1; dy <= 1; ++dy)
            for (std::int64_t dx = -1; dx <= 1; ++dx) {
                const bool earlier = dz < 0 || (dz == 0 && dy < 0) || (dz == 0 && dy == 0 && dx < 0);
                if (!earlier) continue;
                const std::int64_t manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
                if (connectivity == 6 && manhattan != 1) continue;
                if (connectivity == 18 && manhattan > 2) continue;
                offsets.push_back({dx, dy, dz});
            }

    const auto& d = mask.dims;
    UnionFind uf(mask.voxels.size());
    for (std::int64_t z = 0; z < d[2]; ++z)
        for (std::int64_t y = 0; y < d[1]; ++y)
            for (std::int64_t x = 0; x < d[0]; ++x) {
                if (mask.at(x, y, z) == 0.0f) continue;
                const std::int64_t here = mask.index(x, y, z);
                for (const auto& off : offsets) {
                    const std::int64_t nx = x + off[0], ny = y + off[1], nz = z + off[2];
                    if (nx < 0 || ny < 0 || nz < 0 || nx >= d[0] || ny >= d[1] || nz >= d[2])
                        continue;
                    if (mask.at(nx, ny, nz) != 0.0f) uf.unite(here, mask.index(nx, ny, nz));
                }
            }

    ComponentSet set;
    set.dims = d;
    set.spacing_mm = mask.spacing_mm;
    set.labels.assign(mask.voxels.size(), 0);
    std::unordered_map<std::int64_t, std::int32_t> root_label;
    std::vector<std::int64_t> counts;
    for (std::int64_t i = 0; i < mask.numel(); ++i) {
        if (mask.voxels[static_cast<std::size_t>(i)] == 0.0f) continue;
        const std::int64_t root = uf.find(i);
        auto [it, fresh] =
            root_label.emplace(root, static_cast<std::int32_t>(root_label.size() + 1));
        if (fresh) counts.push_back(0);
        set.labels[static_cast<std::size_t>(i)] = it->second;
        ++counts[static_cast<std::size_t>(it->second - 1)];
    }
    for (std::size_t i = 0; i < counts.size(); ++i)
        set.sizes.emplace_back(static_cast<std::int32_t>(i + 1), counts[i]);
    std::sort(set.sizes.begin(), set.sizes.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    return set;
}

Volume keep_largest(const ComponentSet& components, int k,
                    const std::vector<std::int32_t>& keep_labels) {
    if (k < 1) throw std::invalid_argument("components: k must be >= 1");

    std::unordered_set<std::int32_t> chosen;
    if (!keep_labels.empty()) {
        for (std::int32_t want : keep_labels) {
            const bool known = std::any_of(components.sizes.begin(), components.sizes.end(),
                                           [&](const auto& s) { return s.first == want; });
            if (!known) {
                std::string msg = "components: label " + std::to_string(want) +
                                  " not present; available:";
                for (const auto& s : components.sizes)
                    msg += " " + std::to_string(s.first) + "(size " + std::to_string(s.second) + ")";
                throw std::invalid_argument(msg);
            }
            chosen.insert(want);
        }
    } else {
        for (std::size_t i = 0; i < components.sizes.size() && i < static_cast<std::size_t>(k); ++i)
            chosen.insert(components.sizes[i].first);
    }

    Volume out = make_volume(components.dims, components.spacing_mm, VoxelType::mask_u8);
    for (std::size_t i = 0; i < components.labels.size(); ++i)
        if (components.labels[i] != 0 && chosen.count(components.labels[i])) out.voxels[i] = 1.0f;
    return out;
}

Volume threshold_volume(const Volume& prob, double threshold) {
    Volume out = make_volume(prob.dims, prob.spacing_mm, VoxelType::mask_u8);
    for (std::size_t i = 0; i < prob.voxels.size(); ++i)
        out.voxels[i] = static_cast<double>(prob.voxels[i]) > threshold ? 1.0f : 0.0f;
    return out;
}

}  // namespace vseg
