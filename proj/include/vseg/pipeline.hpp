#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vseg/checkpoint.hpp"
#include "vseg/losses.hpp"
#include "vseg/metrics.hpp"
#include "vseg/optim.hpp"
#include "vseg/phantom.hpp"
#include "vseg/vnet.hpp"
#include "vseg/volume.hpp"

namespace vseg {

// Everything one experiment needs, flattened. Loaded from key=value lines
// (# comments, blank lines ignored); every key has a default so an empty
// config trains the desk-scale experiment.
struct RunConfig {
    // dataset
    int volumes = 40;
    std::int64_t volume_size = 64;
    double spacing_mm = 0.2;
    int sheet_thickness = 3;
    double positive_fraction = 0.0018;
    double noise_sigma = 0.03;
    int distractors = 8;
    double train_fraction = 0.7;
    double val_fraction = 0.1;
    double test_fraction = 0.2;
    // sampler
    int patches_per_volume = 4;
    std::int64_t patch_size = 32;
    double positive_ratio = 0.7;
    bool augment = true;
    int rotation_axis = 0;
    // model / loss / optimizer
    NetworkConfig network;
    TverskyParams tversky;
    AmsGradParams optim;
    // training
    int epochs = 50;
    int batch_size = 2;
    double threshold = 0.5;
    std::uint64_t seed = 1;
    int workers = 1;
    std::string data_dir = "data";
    std::string run_dir = "run";

    // Syncs network.input_patch_size with patch_size, then validates.
    void finalize();
};

RunConfig load_run_config(const std::string& path);
void apply_override(RunConfig& config, const std::string& assignment);  // "key=value"
std::string run_config_to_string(const RunConfig& config);

// (image - mean) / std over the whole volume; applied identically before
// training and inference.
Volume standardize_volume(const Volume& image);

// dataset generation: volumes written to config.data_dir as VVOL pairs plus
// manifest.json (seed, config echo, per-volume split/subject assignment).
void cmd_gen(const RunConfig& config);

struct DatasetEntry {
    int index = 0;
    std::string subject;
    std::string split;  // train | val | test
    std::string image_path;
    std::string truth_path;
    std::string distractors_path;
};

std::vector<DatasetEntry> read_manifest(const std::string& data_dir);

struct TrainResult {
    int best_epoch = 0;
    double best_val_index = 0.0;
    double final_train_loss = 0.0;
    std::string best_checkpoint;
    std::string final_checkpoint;
};

// Patch-oversampled training with per-epoch validation; saves the best and
// final checkpoints under config.run_dir and a deterministic line-oriented
// log to run_dir/train_log.txt (echoed to `echo` with wall times appended).
TrainResult cmd_train(const RunConfig& config, std::ostream* echo = nullptr);

struct PredictResult {
    Volume prob;  // gray_f32 in (0,1)
    Volume mask;  // prob > threshold
};

PredictResult predict_volume(const Checkpoint& checkpoint, const Volume& image,
                             double threshold);
void cmd_predict(const std::string& checkpoint_path, const std::string& volume_path,
                 const std::string& prob_path, const std::string& mask_path, double threshold);

// Threshold (gray inputs only) -> label -> keep k largest (or the explicit
// selection). Returns the kept mask.
Volume postprocess_mask(const Volume& input, int keep, int connectivity,
                        const std::vector<std::int32_t>& select_labels, double threshold);

struct EvalPair {
    std::string pred_path;
    std::string truth_path;
};

// Per-pair reports plus macro and micro aggregates, printed to `out` as
// line-oriented records.
std::vector<EvalReport> cmd_eval(const std::vector<EvalPair>& pairs, std::ostream& out);

struct OverlayCounts {
    std::int64_t truth_only = 0;
    std::int64_t pred_only = 0;
    std::int64_t overlap = 0;
};

// Per-z-slice PPM images (truth-only red, pred-only blue, overlap magenta
// over the grayscale image) plus a coded VVOL (0 none, 1 truth-only,
// 2 pred-only, 3 overlap) written as gray_f32.
OverlayCounts cmd_overlay(const std::string& image_path, const std::string& truth_path,
                          const std::string& pred_path, const std::string& out_dir);

}  // namespace vseg
