#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "vseg/checkpoint.hpp"
#include "vseg/optim.hpp"
#include "vseg/rng.hpp"
#include "vseg/vnet.hpp"

using vseg::Checkpoint;
using vseg::NetworkConfig;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "vseg_checkpoint_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

Checkpoint small_checkpoint(bool with_optimizer) {
    NetworkConfig cfg;
    cfg.stages = 1;
    cfg.base_channels = 2;
    cfg.convs_per_stage = 1;
    cfg.input_patch_size = 8;
    cfg.dropout_rate = 0.25;
    vseg::Rng rng(77);
    Checkpoint ck;
    ck.params = vseg::build_network<float>(cfg, rng);
    if (with_optimizer) {
        auto state = vseg::make_optimizer_state(ck.params);
        vseg::Rng grads(78);
        for (int step = 0; step < 3; ++step) {
            for (auto& p : ck.params.items())
                for (auto& g : p.tensor.mutable_grad()) g = static_cast<float>(grads.normal());
            vseg::optimizer_step(ck.params, state, vseg::AmsGradParams{});
        }
        ck.optimizer = std::move(state);
    }
    return ck;
}

}  // namespace

TEST_CASE("round trip preserves config, names, shapes and exact values") {
    Checkpoint ck = small_checkpoint(true);
    const auto path = temp_file("full.ckpt");
    vseg::write_checkpoint(ck, path.string());
    Checkpoint back = vseg::read_checkpoint(path.string());

    CHECK(back.params.config().stages == 1);
    CHECK(back.params.config().base_channels == 2);
    CHECK(back.params.config().convs_per_stage == 1);
    CHECK(back.params.config().kernel_size == 3);
    CHECK(back.params.config().dropout_rate == 0.25);
    CHECK(back.params.config().input_patch_size == 8);

    REQUIRE(back.params.size() == ck.params.size());
    for (std::size_t i = 0; i < ck.params.size(); ++i) {
        CHECK(back.params.items()[i].name == ck.params.items()[i].name);
        CHECK(back.params.items()[i].tensor.shape() == ck.params.items()[i].tensor.shape());
        CHECK(back.params.items()[i].tensor.values() == ck.params.items()[i].tensor.values());
        CHECK(back.params.items()[i].tensor.requires_grad());
    }

    REQUIRE(back.optimizer.has_value());
    CHECK(back.optimizer->step_count == 3);
    CHECK(back.optimizer->m == ck.optimizer->m);
    CHECK(back.optimizer->v == ck.optimizer->v);
    CHECK(back.optimizer->v_hat == ck.optimizer->v_hat);
}

TEST_CASE("write(read(f)) reproduces f byte-for-byte") {
    for (bool with_optimizer : {false, true}) {
        Checkpoint ck = small_checkpoint(with_optimizer);
        const auto p1 = temp_file("bytes1.ckpt");
        const auto p2 = temp_file("bytes2.ckpt");
        vseg::write_checkpoint(ck, p1.string());
        Checkpoint back = vseg::read_checkpoint(p1.string());
        vseg::write_checkpoint(back, p2.string());
        CHECK(slurp(p1) == slurp(p2));
    }
}

TEST_CASE("the optimizer section is optional") {
    Checkpoint ck = small_checkpoint(false);
    const auto path = temp_file("bare.ckpt");
    vseg::write_checkpoint(ck, path.string());
    Checkpoint back = vseg::read_checkpoint(path.string());
    CHECK_FALSE(back.optimizer.has_value());
    // a checkpoint without moments is still fully trainable from step 0
    auto fresh = vseg::make_optimizer_state(back.params);
    CHECK(fresh.step_count == 0);
}

TEST_CASE("corrupt files are rejected with distinct diagnostics") {
    Checkpoint ck = small_checkpoint(false);
    const auto good = temp_file("good.ckpt");
    vseg::write_checkpoint(ck, good.string());
    const std::string bytes = slurp(good);

    auto spit = [](const std::filesystem::path& p, const std::string& data) {
        std::ofstream f(p, std::ios::binary);
        f.write(data.data(), static_cast<std::streamsize>(data.size()));
    };

    const auto missing = temp_file("missing.ckpt");
    std::filesystem::remove(missing);
    CHECK_THROWS_WITH_AS(vseg::read_checkpoint(missing.string()),
                         doctest::Contains("cannot open"), std::runtime_error);

    std::string corrupted = bytes;
    corrupted[0] = 'X';
    const auto bad_magic = temp_file("bad_magic.ckpt");
    spit(bad_magic, corrupted);
    CHECK_THROWS_WITH_AS(vseg::read_checkpoint(bad_magic.string()),
                         doctest::Contains("bad magic"), std::runtime_error);

    const auto truncated = temp_file("truncated.ckpt");
    spit(truncated, bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_WITH_AS(vseg::read_checkpoint(truncated.string()),
                         doctest::Contains("truncated"), std::runtime_error);

    const auto trailing = temp_file("trailing.ckpt");
    spit(trailing, bytes + "x");
    CHECK_THROWS_WITH_AS(vseg::read_checkpoint(trailing.string()),
                         doctest::Contains("trailing bytes"), std::runtime_error);
}

TEST_CASE("a mismatched optimizer state cannot be written") {
    Checkpoint ck = small_checkpoint(false);
    vseg::OptimizerState bogus;  // no per-parameter buffers at all
    bogus.step_count = 1;
    ck.optimizer = bogus;
    const auto path = temp_file("mismatch.ckpt");
    CHECK_THROWS_AS(vseg::write_checkpoint(ck, path.string()), std::invalid_argument);
}
