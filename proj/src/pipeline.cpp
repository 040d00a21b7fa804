#include "vseg/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "vseg/ops.hpp"
#include "vseg/postproc.hpp"
#include "vseg/sampling.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace vseg {

// ---------------------------------------------------------------------------
// Config plumbing
// ---------------------------------------------------------------------------

namespace {

// Every config key visits exactly one field; load, override and echo all run
// through this single table.
template <class Config, class F>
void visit_config(Config& c, F&& f) {
    f("volumes", c.volumes);
    f("volume_size", c.volume_size);
    f("spacing_mm", c.spacing_mm);
    f("sheet_thickness", c.sheet_thickness);
    f("positive_fraction", c.positive_fraction);
    f("noise_sigma", c.noise_sigma);
    f("distractors", c.distractors);
    f("train_fraction", c.train_fraction);
    f("val_fraction", c.val_fraction);
    f("test_fraction", c.test_fraction);
    f("patches_per_volume", c.patches_per_volume);
    f("patch_size", c.patch_size);
    f("positive_ratio", c.positive_ratio);
    f("augment", c.augment);
    f("rotation_axis", c.rotation_axis);
    f("stages", c.network.stages);
    f("base_channels", c.network.base_channels);
    f("convs_per_stage", c.network.convs_per_stage);
    f("kernel_size", c.network.kernel_size);
    f("dropout", c.network.dropout_rate);
    f("tversky_alpha", c.tversky.alpha);
    f("tversky_beta", c.tversky.beta);
    f("tversky_epsilon", c.tversky.epsilon);
    f("learning_rate", c.optim.lr);
    f("beta1", c.optim.beta1);
    f("beta2", c.optim.beta2);
    f("adam_epsilon", c.optim.epsilon);
    f("epochs", c.epochs);
    f("batch_size", c.batch_size);
    f("threshold", c.threshold);
    f("seed", c.seed);
    f("workers", c.workers);
    f("data_dir", c.data_dir);
    f("run_dir", c.run_dir);
}

void parse_into(const std::string& key, const std::string& text, int& field) {
    field = std::stoi(text);
}
void parse_into(const std::string& key, const std::string& text, std::int64_t& field) {
    field = std::stoll(text);
}
void parse_into(const std::string& key, const std::string& text, std::uint64_t& field) {
    field = std::stoull(text);
}
void parse_into(const std::string& key, const std::string& text, double& field) {
    field = std::stod(text);
}
void parse_into(const std::string& key, const std::string& text, std::string& field) {
    field = text;
}
void parse_into(const std::string& key, const std::string& text, bool& field) {
    if (text == "true" || text == "1")
        field = true;
    else if (text == "false" || text == "0")
        field = false;
    else
        throw std::invalid_argument("config: key " + key + " expects true/false, got " + text);
}

std::string field_text(int v) { return std::to_string(v); }
std::string field_text(std::int64_t v) { return std::to_string(v); }
std::string field_text(std::uint64_t v) { return std::to_string(v); }
std::string field_text(bool v) { return v ? "true" : "false"; }
std::string field_text(const std::string& v) { return v; }
std::string field_text(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

void set_key(RunConfig& config, const std::string& key, const std::string& value) {
    bool found = false;
    visit_config(config, [&](const char* name, auto& field) {
        if (key == name) {
            found = true;
            try {
                parse_into(key, value, field);
            } catch (const std::invalid_argument&) {
                throw std::invalid_argument("config: cannot parse value \"" + value +
                                            "\" for key " + key);
            } catch (const std::out_of_range&) {
                throw std::invalid_argument("config: value out of range for key " + key);
            }
        }
    });
    if (!found) throw std::invalid_argument("config: unknown key " + key);
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

void RunConfig::finalize() {
    network.input_patch_size = static_cast<int>(patch_size);
    if (volumes < 1) throw std::invalid_argument("config: volumes must be >= 1");
    if (volume_size < 16) throw std::invalid_argument("config: volume_size must be >= 16");
    if (patch_size > volume_size)
        throw std::invalid_argument("config: patch_size must not exceed volume_size");
    if (train_fraction < 0 || val_fraction < 0 || test_fraction < 0 ||
        std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9)
        throw std::invalid_argument("config: split fractions must be nonnegative and sum to 1");
    if (patches_per_volume < 1)
        throw std::invalid_argument("config: patches_per_volume must be >= 1");
    if (positive_ratio < 0.0 || positive_ratio > 1.0)
        throw std::invalid_argument("config: positive_ratio must be in [0,1]");
    if (rotation_axis < 0 || rotation_axis > 2)
        throw std::invalid_argument("config: rotation_axis must be 0, 1 or 2");
    if (epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
    if (threshold <= 0.0 || threshold >= 1.0)
        throw std::invalid_argument("config: threshold must be in (0,1)");
    if (workers < 1) throw std::invalid_argument("config: workers must be >= 1");
    network.validate();
    tversky.validate();
    optim.validate();
}

RunConfig load_run_config(const std::string& path) {
    RunConfig config;
    std::ifstream file(path);
    if (!file) throw std::runtime_error("config: cannot open " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(file, line)) {
        ++line_no;
        const std::string stripped = trim(line.substr(0, line.find('#')));
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                        " is not key=value: " + stripped);
        set_key(config, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
    return config;
}

void apply_override(RunConfig& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("config: override is not key=value: " + assignment);
    set_key(config, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string run_config_to_string(const RunConfig& config) {
    std::string out;
    visit_config(config, [&](const char* name, const auto& field) {
        out += name;
        out += "=";
        out += field_text(field);
        out += "\n";
    });
    return out;
}

// ---------------------------------------------------------------------------
// Dataset generation
// ---------------------------------------------------------------------------

Volume standardize_volume(const Volume& image) {
    double sum = 0.0, sq = 0.0;
    for (float v : image.voxels) {
        sum += v;
        sq += static_cast<double>(v) * v;
    }
    const double n = static_cast<double>(image.voxels.size());
    const double mean = sum / n;
    const double var = std::max(sq / n - mean * mean, 1e-12);
    const double inv = 1.0 / std::sqrt(var);
    Volume out = image;
    for (float& v : out.voxels) v = static_cast<float>((v - mean) * inv);
    return out;
}

namespace {

std::string volume_name(int index, const char* kind) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "vol_%03d_%s.vvol", index, kind);
    return buf;
}

json config_echo(const RunConfig& config) {
    json echo = json::object();
    visit_config(config, [&](const char* name, const auto& field) { echo[name] = field_text(field); });
    return echo;
}

}  // namespace

void cmd_gen(const RunConfig& config0) {
    RunConfig config = config0;
    config.finalize();
    fs::create_directories(config.data_dir);

    const int n_train = static_cast<int>(std::llround(config.volumes * config.train_fraction));
    const int n_val = static_cast<int>(std::llround(config.volumes * config.val_fraction));
    if (n_train + n_val > config.volumes)
        throw std::invalid_argument("config: split fractions leave no room for a test set");

    json manifest;
    manifest["seed"] = config.seed;
    manifest["config"] = config_echo(config);
    json entries = json::array();
    for (int v = 0; v < config.volumes; ++v) {
        PhantomConfig pc;
        pc.dims = {config.volume_size, config.volume_size, config.volume_size};
        const float sp = static_cast<float>(config.spacing_mm);
        pc.spacing_mm = {sp, sp, sp};
        pc.sheet_thickness_vox = config.sheet_thickness;
        pc.target_positive_fraction = config.positive_fraction;
        pc.noise_sigma = config.noise_sigma;
        pc.distractor_count = config.distractors;
        pc.seed = derive_seed(config.seed, 100, static_cast<std::uint64_t>(v));
        const PhantomPair pair = generate_phantom(pc);

        const std::string image_name = volume_name(v, "image");
        const std::string truth_name = volume_name(v, "truth");
        const std::string distract_name = volume_name(v, "distractors");
        write_volume(pair.image, (fs::path(config.data_dir) / image_name).string());
        write_volume(pair.truth, (fs::path(config.data_dir) / truth_name).string());
        write_volume(pair.distractors, (fs::path(config.data_dir) / distract_name).string());

        double positives = 0.0;
        for (float t : pair.truth.voxels) positives += t;

        char subject[32];
        std::snprintf(subject, sizeof subject, "subj_%03d", v);
        json entry;
        entry["index"] = v;
        entry["subject"] = subject;
        entry["split"] = v < n_train ? "train" : (v < n_train + n_val ? "val" : "test");
        entry["image"] = image_name;
        entry["truth"] = truth_name;
        entry["distractors"] = distract_name;
        entry["positive_fraction"] = positives / static_cast<double>(pair.truth.numel());
        entries.push_back(entry);
    }
    manifest["entries"] = entries;

    std::ofstream out(fs::path(config.data_dir) / "manifest.json", std::ios::trunc);
    if (!out) throw std::runtime_error("gen: cannot write manifest in " + config.data_dir);
    out << manifest.dump(2) << "\n";
}

std::vector<DatasetEntry> read_manifest(const std::string& data_dir) {
    const std::string path = (fs::path(data_dir) / "manifest.json").string();
    std::ifstream file(path);
    if (!file) throw std::runtime_error("manifest: cannot open " + path);
    json manifest;
    try {
        file >> manifest;
    } catch (const json::exception& e) {
        throw std::runtime_error("manifest: parse error in " + path + ": " + e.what());
    }
    std::vector<DatasetEntry> out;
    for (const auto& entry : manifest.at("entries")) {
        DatasetEntry d;
        d.index = entry.at("index").get<int>();
        d.subject = entry.at("subject").get<std::string>();
        d.split = entry.at("split").get<std::string>();
        d.image_path = (fs::path(data_dir) / entry.at("image").get<std::string>()).string();
        d.truth_path = (fs::path(data_dir) / entry.at("truth").get<std::string>()).string();
        d.distractors_path =
            (fs::path(data_dir) / entry.at("distractors").get<std::string>()).string();
        out.push_back(std::move(d));
    }
    if (out.empty()) throw std::runtime_error("manifest: no entries in " + path);
    return out;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

Tensor stack_patches(const std::vector<TrainingPatch>& patches, std::size_t lo, std::size_t hi,
                     bool truth) {
    const std::int64_t p = patches[lo].spec.size;
    const std::int64_t batch = static_cast<std::int64_t>(hi - lo);
    std::vector<float> data;
    data.reserve(static_cast<std::size_t>(batch * p * p * p));
    for (std::size_t i = lo; i < hi; ++i) {
        const Volume& v = truth ? patches[i].truth : patches[i].image;
        data.insert(data.end(), v.voxels.begin(), v.voxels.end());
    }
    return Tensor::from_values({batch, 1, p, p, p}, std::move(data), false);
}

double validation_index(const NetworkParameters& params,
                        const std::vector<TrainingPatch>& val_patches, const RunConfig& config) {
    GradPause pause;
    Rng dummy(0);
    double sum = 0.0;
    for (std::size_t lo = 0; lo < val_patches.size();
         lo += static_cast<std::size_t>(config.batch_size)) {
        const std::size_t hi =
            std::min(val_patches.size(), lo + static_cast<std::size_t>(config.batch_size));
        const Tensor x = stack_patches(val_patches, lo, hi, false);
        const Tensor g = stack_patches(val_patches, lo, hi, true);
        const Tensor pred = network_forward(params, x, false, dummy);
        const double loss = tversky_loss_batch(pred, g, config.tversky).item();
        sum += (1.0 - loss) * static_cast<double>(hi - lo);
    }
    return sum / static_cast<double>(val_patches.size());
}

}  // namespace

TrainResult cmd_train(const RunConfig& config0, std::ostream* echo) {
    RunConfig config = config0;
    config.finalize();
    const auto entries = read_manifest(config.data_dir);

    std::vector<Volume> train_images, train_truths, val_images, val_truths;
    for (const auto& e : entries) {
        if (e.split == "test") continue;
        Volume image = standardize_volume(read_volume(e.image_path));
        Volume truth = read_volume(e.truth_path);
        if (e.split == "train") {
            train_images.push_back(std::move(image));
            train_truths.push_back(std::move(truth));
        } else {
            val_images.push_back(std::move(image));
            val_truths.push_back(std::move(truth));
        }
    }
    if (train_images.empty()) throw std::runtime_error("train: manifest has no training volumes");
    if (val_images.empty()) throw std::runtime_error("train: manifest has no validation volumes");

    fs::create_directories(config.run_dir);
    const std::string log_path = (fs::path(config.run_dir) / "train_log.txt").string();
    std::ofstream log_file(log_path, std::ios::trunc);
    if (!log_file) throw std::runtime_error("train: cannot write " + log_path);
    // The file log carries only deterministic fields so that equal seeds
    // produce byte-equal logs; wall time goes to the echo stream.
    auto log = [&](const std::string& record, const std::string& timing) {
        log_file << record << "\n";
        log_file.flush();
        if (echo) *echo << record << timing << "\n";
    };

    Rng init_rng(derive_seed(config.seed, 1));
    NetworkParameters params = build_network<float>(config.network, init_rng);
    OptimizerState state = make_optimizer_state(params);

    std::vector<TrainingPatch> val_patches;
    for (std::size_t vi = 0; vi < val_images.size(); ++vi) {
        Rng r(derive_seed(config.seed, 2, vi));
        auto ps = sample_training_patches(val_images[vi], val_truths[vi],
                                          config.patches_per_volume, config.patch_size,
                                          config.positive_ratio, r);
        for (auto& p : ps) val_patches.push_back(std::move(p));
    }

    log("event=train_start train_volumes=" + std::to_string(train_images.size()) +
            " val_volumes=" + std::to_string(val_images.size()) +
            " parameters=" + std::to_string(params.total_parameter_count()) +
            " epochs=" + std::to_string(config.epochs),
        "");

    TrainResult result;
    double best = -1.0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();

        std::vector<std::vector<TrainingPatch>> per_volume(train_images.size());
        std::exception_ptr extraction_error;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(config.workers)
#endif
        for (std::size_t ti = 0; ti < train_images.size(); ++ti) {
            try {
                Rng r(derive_seed(config.seed, 3, static_cast<std::uint64_t>(epoch), ti));
                auto ps = sample_training_patches(train_images[ti], train_truths[ti],
                                                  config.patches_per_volume, config.patch_size,
                                                  config.positive_ratio, r);
                if (config.augment)
                    for (auto& p : ps) {
                        const auto rot = static_cast<Rotation>(r.uniform_int(0, 3));
                        if (rot != Rotation::none) p = rotate_patch(p, rot, config.rotation_axis);
                    }
                per_volume[ti] = std::move(ps);
            } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
                if (!extraction_error) extraction_error = std::current_exception();
            }
        }
        if (extraction_error) std::rethrow_exception(extraction_error);
        std::vector<TrainingPatch> patches;
        for (auto& ps : per_volume)
            for (auto& p : ps) patches.push_back(std::move(p));
        std::mt19937_64 shuffler(derive_seed(config.seed, 4, static_cast<std::uint64_t>(epoch)));
        std::shuffle(patches.begin(), patches.end(), shuffler);

        double loss_sum = 0.0;
        int batches = 0;
        for (std::size_t lo = 0; lo < patches.size();
             lo += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t hi =
                std::min(patches.size(), lo + static_cast<std::size_t>(config.batch_size));
            const Tensor x = stack_patches(patches, lo, hi, false);
            const Tensor g = stack_patches(patches, lo, hi, true);
            Rng dropout_rng(derive_seed(config.seed, 5, static_cast<std::uint64_t>(epoch),
                                        static_cast<std::uint64_t>(batches)));
            Tensor pred = network_forward(params, x, true, dropout_rng);
            Tensor loss = tversky_loss_batch(pred, g, config.tversky);
            const double loss_value = loss.item();
            if (!std::isfinite(loss_value))
                throw std::runtime_error("train: non-finite loss at epoch " +
                                         std::to_string(epoch) + " batch " +
                                         std::to_string(batches));
            loss.backward();
            optimizer_step(params, state, config.optim);
            loss_sum += loss_value;
            ++batches;
        }
        const double train_loss = loss_sum / std::max(batches, 1);
        const double val_index = validation_index(params, val_patches, config);

        const bool is_best = val_index > best;
        if (is_best) {
            best = val_index;
            result.best_epoch = epoch;
            result.best_val_index = val_index;
            result.best_checkpoint = (fs::path(config.run_dir) / "checkpoint_best.ckpt").string();
            Checkpoint ck;
            ck.params = params;
            ck.optimizer = state;
            write_checkpoint(ck, result.best_checkpoint);
        }
        result.final_train_loss = train_loss;

        const auto t1 = std::chrono::steady_clock::now();
        const double seconds = std::chrono::duration<double>(t1 - t0).count();
        log("event=epoch epoch=" + std::to_string(epoch) + " train_loss=" + fmt6(train_loss) +
                " val_index=" + fmt6(val_index) + " best=" + (is_best ? "1" : "0"),
            " seconds=" + fmt6(seconds));
    }

    result.final_checkpoint = (fs::path(config.run_dir) / "checkpoint_final.ckpt").string();
    Checkpoint ck;
    ck.params = params;
    ck.optimizer = state;
    write_checkpoint(ck, result.final_checkpoint);

    log("event=train_end best_epoch=" + std::to_string(result.best_epoch) +
            " best_val_index=" + fmt6(result.best_val_index) + " final_train_loss=" +
            fmt6(result.final_train_loss),
        "");
    return result;
}

// ---------------------------------------------------------------------------
// Inference
// ---------------------------------------------------------------------------

PredictResult predict_volume(const Checkpoint& checkpoint, const Volume& image,
                             double threshold) {
    if (image.dtype != VoxelType::gray_f32)
        throw std::invalid_argument("predict: volume must be gray_f32");
    image.validate();
    const Volume standardized = standardize_volume(image);
    const std::int64_t p = checkpoint.params.config().input_patch_size;

    const auto specs = tile_volume(standardized, p);
    std::vector<Volume> tiles;
    tiles.reserve(specs.size());
    GradPause pause;
    Rng dummy(0);
    for (const auto& spec : specs) {
        const Volume cut = extract_patch(standardized, spec);
        Tensor x = Tensor::from_values({1, 1, p, p, p}, std::vector<float>(cut.voxels), false);
        const Tensor out = network_forward(checkpoint.params, x, false, dummy);
        Volume tile = make_volume({p, p, p}, image.spacing_mm, VoxelType::gray_f32);
        tile.voxels = out.values();
        tiles.push_back(std::move(tile));
    }

    PredictResult result;
    result.prob = stitch_patches(specs, tiles, image.dims, image.spacing_mm, VoxelType::gray_f32);
    result.mask = threshold_volume(result.prob, threshold);
    return result;
}

void cmd_predict(const std::string& checkpoint_path, const std::string& volume_path,
                 const std::string& prob_path, const std::string& mask_path, double threshold) {
    const Checkpoint checkpoint = read_checkpoint(checkpoint_path);
    const Volume image = read_volume(volume_path);
    const PredictResult result = predict_volume(checkpoint, image, threshold);
    write_volume(result.prob, prob_path);
    write_volume(result.mask, mask_path);
}

// ---------------------------------------------------------------------------
// Post-processing / evaluation / overlay
// ---------------------------------------------------------------------------

Volume postprocess_mask(const Volume& input, int keep, int connectivity,
                        const std::vector<std::int32_t>& select_labels, double threshold) {
    const Volume mask =
        input.dtype == VoxelType::gray_f32 ? threshold_volume(input, threshold) : input;
    const ComponentSet components = label_components(mask, connectivity);
    return keep_largest(components, keep, select_labels);
}

std::vector<EvalReport> cmd_eval(const std::vector<EvalPair>& pairs, std::ostream& out) {
    if (pairs.empty()) throw std::invalid_argument("eval: no prediction/truth pairs given");
    std::vector<EvalReport> reports;
    for (const auto& pair : pairs) {
        const Volume pred = read_volume(pair.pred_path);
        const Volume truth = read_volume(pair.truth_path);
        reports.push_back(evaluate(pred, truth));
        out << "volume=" << pair.pred_path << " " << format_report(reports.back()) << "\n";
    }
    const EvalReport macro = aggregate(reports, AggregateMode::macro);
    const EvalReport micro = aggregate(reports, AggregateMode::micro);
    out << "aggregate=macro " << format_report(macro) << " skipped_precision="
        << macro.skipped_precision << " skipped_recall=" << macro.skipped_recall
        << " skipped_dice=" << macro.skipped_dice << "\n";
    out << "aggregate=micro " << format_report(micro) << "\n";
    return reports;
}

namespace {

void write_ppm(const std::string& path, std::int64_t width, std::int64_t height,
               const std::vector<unsigned char>& rgb) {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw std::runtime_error("overlay: cannot write " + path);
    file << "P6\n" << width << " " << height << "\n255\n";
    file.write(reinterpret_cast<const char*>(rgb.data()),
               static_cast<std::streamsize>(rgb.size()));
}

}  // namespace

OverlayCounts cmd_overlay(const std::string& image_path, const std::string& truth_path,
                          const std::string& pred_path, const std::string& out_dir) {
    const Volume image = read_volume(image_path);
    const Volume truth = read_volume(truth_path);
    const Volume pred = read_volume(pred_path);
    if (truth.dtype != VoxelType::mask_u8 || pred.dtype != VoxelType::mask_u8)
        throw std::invalid_argument("overlay: truth and prediction must be masks");
    if (image.dims != truth.dims || image.dims != pred.dims)
        throw std::invalid_argument("overlay: volume dims differ");
    fs::create_directories(out_dir);

    float lo = image.voxels.empty() ? 0.0f : image.voxels[0], hi = lo;
    for (float v : image.voxels) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const float scale = hi > lo ? 255.0f / (hi - lo) : 0.0f;

    Volume coded = make_volume(image.dims, image.spacing_mm, VoxelType::gray_f32);
    OverlayCounts counts;
    const auto& d = image.dims;
    for (std::int64_t z = 0; z < d[2]; ++z) {
        std::vector<unsigned char> rgb(static_cast<std::size_t>(d[0] * d[1] * 3));
        for (std::int64_t y = 0; y < d[1]; ++y)
            for (std::int64_t x = 0; x < d[0]; ++x) {
                const bool g = truth.at(x, y, z) != 0.0f;
                const bool p = pred.at(x, y, z) != 0.0f;
                const auto gray =
                    static_cast<unsigned char>((image.at(x, y, z) - lo) * scale);
                unsigned char r = gray, gg = gray, b = gray;
                float code = 0.0f;
                if (g && p) {
                    r = 255, gg = 0, b = 255;  // overlap: magenta
                    code = 3.0f;
                    ++counts.overlap;
                } else if (g) {
                    r = 255, gg = 0, b = 0;  // truth-only: red
                    code = 1.0f;
                    ++counts.truth_only;
                } else if (p) {
                    r = 0, gg = 0, b = 255;  // prediction-only: blue
                    code = 2.0f;
                    ++counts.pred_only;
                }
                coded.at(x, y, z) = code;
                const std::size_t px = static_cast<std::size_t>((y * d[0] + x) * 3);
                rgb[px] = r;
                rgb[px + 1] = gg;
                rgb[px + 2] = b;
            }
        char name[32];
        std::snprintf(name, sizeof name, "slice_%03lld.ppm", static_cast<long long>(z));
        write_ppm((fs::path(out_dir) / name).string(), d[0], d[1], rgb);
    }
    write_volume(coded, (fs::path(out_dir) / "coded.vvol").string());
    return counts;
}

}  // namespace vseg
