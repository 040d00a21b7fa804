#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vseg/volume.hpp"

namespace vseg {

// Voxel-wise confusion counts plus derived rates. A rate whose denominator
// is zero is left unset rather than coerced to 0 or 1; the skipped_* fields
// say how many such entries a macro aggregate dropped.
struct EvalReport {
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
    std::optional<double> accuracy, precision, recall, dice;
    int skipped_precision = 0, skipped_recall = 0, skipped_dice = 0;
};

EvalReport evaluate(const Volume& pred, const Volume& truth);

enum class AggregateMode { macro, micro };

// macro: unweighted mean of per-volume rates, undefined entries skipped and
// counted. micro: rates recomputed from the summed confusion counts.
EvalReport aggregate(const std::vector<EvalReport>& reports, AggregateMode mode);

// One-line "tp=... fp=... accuracy=... dice=..." record; undefined rates
// print as "undefined".
std::string format_report(const EvalReport& report);

}  // namespace vseg
