#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vseg/pipeline.hpp"
#include "vseg/postproc.hpp"

namespace {

struct GlobalOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    bool seed_set = false;
    std::uint64_t seed = 0;
    bool workers_set = false;
    int workers = 1;
};

vseg::RunConfig resolve_config(const GlobalOpts& opts) {
    vseg::RunConfig config;
    if (!opts.config_path.empty()) config = vseg::load_run_config(opts.config_path);
    for (const auto& assignment : opts.overrides) vseg::apply_override(config, assignment);
    if (opts.seed_set) config.seed = opts.seed;
    if (opts.workers_set) config.workers = opts.workers;
    return config;
}

std::vector<std::int32_t> parse_labels(const std::string& csv) {
    std::vector<std::int32_t> labels;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        const auto comma = csv.find(',', pos);
        const std::string part = csv.substr(pos, comma == std::string::npos ? csv.npos : comma - pos);
        if (!part.empty()) labels.push_back(static_cast<std::int32_t>(std::stol(part)));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return labels;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Thin bright-sheet segmentation in 3D volumes: phantom data, training, "
                 "tiled inference, component filtering, evaluation"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOpts opts;
    app.add_option("--config", opts.config_path, "key=value config file");
    app.add_option("--set", opts.overrides, "config override key=value (repeatable)");
    app.add_option("--seed", opts.seed, "override the global seed")
        ->each([&](const std::string&) { opts.seed_set = true; });
    app.add_option("--workers", opts.workers, "parallel data workers (1 = bit-deterministic)")
        ->each([&](const std::string&) { opts.workers_set = true; });

    auto* gen = app.add_subcommand("gen", "generate the phantom dataset and manifest");
    auto* train = app.add_subcommand("train", "train on the generated dataset");

    auto* predict = app.add_subcommand("predict", "tiled inference over a volume");
    std::string checkpoint_path, input_path, prob_path, mask_path;
    double pred_threshold = 0.5;
    predict->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    predict->add_option("--input", input_path, "gray_f32 volume")->required();
    predict->add_option("--prob", prob_path, "output probability VVOL")->required();
    predict->add_option("--mask", mask_path, "output binary VVOL")->required();
    predict->add_option("--threshold", pred_threshold, "binarization threshold (default 0.5)");

    auto* post = app.add_subcommand("postprocess", "keep the largest connected components");
    std::string post_input, post_output, select_csv;
    int keep = 2, connectivity = 26;
    double post_threshold = 0.5;
    post->add_option("--input", post_input, "mask or probability VVOL")->required();
    post->add_option("--output", post_output, "output mask VVOL")->required();
    post->add_option("--keep", keep, "components to keep (default 2)");
    post->add_option("--connectivity", connectivity, "6, 18 or 26 (default 26)");
    post->add_option("--select-labels", select_csv, "comma-separated labels overriding size rank");
    post->add_option("--threshold", post_threshold, "binarization threshold for gray inputs");

    auto* eval = app.add_subcommand("eval", "voxel metrics for prediction/truth pairs");
    std::vector<std::string> pred_paths, truth_paths;
    eval->add_option("--pred", pred_paths, "prediction mask (repeatable)")->required();
    eval->add_option("--truth", truth_paths, "truth mask (repeatable, paired in order)")->required();

    auto* overlay = app.add_subcommand("overlay", "per-slice overlay images and coded volume");
    std::string ov_image, ov_truth, ov_pred, ov_out;
    overlay->add_option("--image", ov_image, "gray_f32 volume")->required();
    overlay->add_option("--truth", ov_truth, "truth mask")->required();
    overlay->add_option("--pred", ov_pred, "prediction mask")->required();
    overlay->add_option("--out", ov_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            vseg::cmd_gen(resolve_config(opts));
            std::cout << "event=gen_done data_dir=" << resolve_config(opts).data_dir << "\n";
        } else if (train->parsed()) {
            const vseg::TrainResult result = vseg::cmd_train(resolve_config(opts), &std::cout);
            std::cout << "event=done best_checkpoint=" << result.best_checkpoint
                      << " final_checkpoint=" << result.final_checkpoint << "\n";
        } else if (predict->parsed()) {
            if (!opts.config_path.empty()) {
                const vseg::RunConfig config = resolve_config(opts);
                const vseg::Checkpoint ck = vseg::read_checkpoint(checkpoint_path);
                if (config.patch_size != ck.params.config().input_patch_size)
                    throw std::invalid_argument(
                        "predict: config patch_size " + std::to_string(config.patch_size) +
                        " does not match checkpoint patch size " +
                        std::to_string(ck.params.config().input_patch_size));
            }
            vseg::cmd_predict(checkpoint_path, input_path, prob_path, mask_path, pred_threshold);
            std::cout << "event=predict_done prob=" << prob_path << " mask=" << mask_path << "\n";
        } else if (post->parsed()) {
            const vseg::Volume input = vseg::read_volume(post_input);
            const vseg::Volume kept = vseg::postprocess_mask(input, keep, connectivity,
                                                             parse_labels(select_csv),
                                                             post_threshold);
            vseg::write_volume(kept, post_output);
            std::int64_t voxels = 0;
            for (float v : kept.voxels) voxels += v != 0.0f;
            std::cout << "event=postprocess_done output=" << post_output
                      << " foreground=" << voxels << "\n";
        } else if (eval->parsed()) {
            if (pred_paths.size() != truth_paths.size())
                throw std::invalid_argument("eval: --pred and --truth counts differ");
            std::vector<vseg::EvalPair> pairs;
            for (std::size_t i = 0; i < pred_paths.size(); ++i)
                pairs.push_back({pred_paths[i], truth_paths[i]});
            vseg::cmd_eval(pairs, std::cout);
        } else if (overlay->parsed()) {
            const vseg::OverlayCounts counts = vseg::cmd_overlay(ov_image, ov_truth, ov_pred, ov_out);
            std::cout << "event=overlay_done truth_only=" << counts.truth_only
                      << " pred_only=" << counts.pred_only << " overlap=" << counts.overlap
                      << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
