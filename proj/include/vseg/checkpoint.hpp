#pragma once

#include <optional>
#include <string>

#include "vseg/optim.hpp"
#include "vseg/vnet.hpp"

namespace vseg {

// Binary snapshot of the network (config + named parameters, f32
// little-endian) with an optional optimizer section for resumable training.
// write(read(f)) reproduces f byte-for-byte.
struct Checkpoint {
    NetworkParameters params;
    std::optional<OptimizerState> optimizer;
};

void write_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace vseg
