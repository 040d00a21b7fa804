#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "vseg/ops.hpp"
#include "vseg/rng.hpp"
#include "vseg/tensor.hpp"

using vseg::Tensor;
using vseg::TensorD;

namespace {

std::vector<double> random_values(std::int64_t n, vseg::Rng& rng) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& e : v) e = rng.normal();
    return v;
}

}  // namespace

TEST_CASE("conv3d single-voxel hand case") {
    auto in = TensorD::from_values({1, 1, 1, 1, 1}, {2.0});
    auto k = TensorD::from_values({1, 1, 1, 1, 1}, {3.0});
    auto b = TensorD::from_values({1}, {0.5});
    auto out = vseg::conv3d(in, k, b, 1, 0);
    REQUIRE(out.shape() == vseg::Shape{1, 1, 1, 1, 1});
    CHECK(out.item() == doctest::Approx(6.5).epsilon(1e-15));
}

TEST_CASE("conv3d output extents follow floor((D+2p-k)/s)+1") {
    auto b1 = TensorD::zeros({1});
    auto in = TensorD::zeros({1, 1, 5, 6, 7});
    auto k3 = TensorD::zeros({1, 1, 3, 3, 3});
    CHECK(vseg::conv3d(in, k3, b1, 1, 1).shape() == vseg::Shape{1, 1, 5, 6, 7});
    CHECK(vseg::conv3d(in, k3, b1, 1, 0).shape() == vseg::Shape{1, 1, 3, 4, 5});
    CHECK(vseg::conv3d(in, k3, b1, 2, 0).shape() == vseg::Shape{1, 1, 2, 2, 3});
    CHECK(vseg::conv3d(in, k3, b1, 2, 1).shape() == vseg::Shape{1, 1, 3, 3, 4});
    auto k1 = TensorD::zeros({4, 1, 1, 1, 1});
    auto b4 = TensorD::zeros({4});
    CHECK(vseg::conv3d(in, k1, b4, 1, 0).shape() == vseg::Shape{1, 4, 5, 6, 7});
}

TEST_CASE("conv3d matches the reference over 200 random configurations") {
    vseg::Rng rng(777);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::int64_t N = rng.uniform_int(1, 2);
        const std::int64_t C = rng.uniform_int(1, 3);
        const std::int64_t K = rng.uniform_int(1, 3);
        const std::int64_t stride = rng.uniform_int(1, 3);
        const std::int64_t padding = rng.uniform_int(0, 2);
        const std::int64_t kd = 2 * rng.uniform_int(0, 2) + 1;  // 1, 3 or 5
        const std::int64_t kh = 2 * rng.uniform_int(0, 2) + 1;
        const std::int64_t kw = 2 * rng.uniform_int(0, 2) + 1;
        const std::int64_t D = rng.uniform_int(std::max<std::int64_t>(1, kd - 2 * padding), 8);
        const std::int64_t H = rng.uniform_int(std::max<std::int64_t>(1, kh - 2 * padding), 8);
        const std::int64_t W = rng.uniform_int(std::max<std::int64_t>(1, kw - 2 * padding), 8);

        vseg::Shape in_shape{N, C, D, H, W};
        vseg::Shape k_shape{K, C, kd, kh, kw};
        auto in_vals = random_values(vseg::shape_numel(in_shape), rng);
        auto k_vals = random_values(vseg::shape_numel(k_shape), rng);
        auto b_vals = random_values(K, rng);

        auto out = vseg::conv3d(TensorD::from_values(in_shape, in_vals),
                                TensorD::from_values(k_shape, k_vals),
                                TensorD::from_values({K}, b_vals), stride, padding);
        vseg::Shape ref_shape;
        auto ref = oracle::conv3d_reference(in_vals, in_shape, k_vals, k_shape, b_vals, stride,
                                            padding, ref_shape);
        REQUIRE(out.shape() == ref_shape);
        REQUIRE(out.values().size() == ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i)
            worst = std::max(worst, std::abs(out.values()[i] - ref[i]));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("conv3d ignores kernel taps that start beyond the row") {
    // w=2 with a 5-wide kernel at padding 2 and stride 2: the kw=4 tap starts
    // one column past the row end and must contribute nothing
    vseg::Rng rng(778);
    const vseg::Shape in_shape{1, 1, 2, 2, 2};
    const vseg::Shape k_shape{1, 1, 5, 5, 5};
    auto in_vals = random_values(vseg::shape_numel(in_shape), rng);
    auto k_vals = random_values(vseg::shape_numel(k_shape), rng);
    std::vector<double> b_vals{0.25};

    auto out = vseg::conv3d(TensorD::from_values(in_shape, in_vals),
                            TensorD::from_values(k_shape, k_vals),
                            TensorD::from_values({1}, b_vals), 2, 2);
    vseg::Shape ref_shape;
    auto ref =
        oracle::conv3d_reference(in_vals, in_shape, k_vals, k_shape, b_vals, 2, 2, ref_shape);
    REQUIRE(out.shape() == ref_shape);
    for (std::size_t i = 0; i < ref.size(); ++i)
        CHECK(std::abs(out.values()[i] - ref[i]) <= 1e-12);

    TensorD x = TensorD::from_values(in_shape, in_vals, true);
    TensorD k = TensorD::from_values(k_shape, k_vals, true);
    TensorD b = TensorD::from_values({1}, b_vals, true);
    auto r = oracle::gradcheck({x, k, b}, [&] {
        auto y = vseg::conv3d(x, k, b, 2, 2);
        return vseg::sum(vseg::mul(y, y));
    });
    CHECK(r.checked == 8 + 125 + 1);
    CHECK(r.failed == 0);
}

TEST_CASE("conv3d float path is run-to-run deterministic") {
    vseg::Rng rng(31);
    vseg::Shape in_shape{2, 2, 6, 6, 6};
    vseg::Shape k_shape{3, 2, 3, 3, 3};
    std::vector<float> in_vals(static_cast<std::size_t>(vseg::shape_numel(in_shape)));
    std::vector<float> k_vals(static_cast<std::size_t>(vseg::shape_numel(k_shape)));
    for (auto& v : in_vals) v = static_cast<float>(rng.normal());
    for (auto& v : k_vals) v = static_cast<float>(rng.normal());
    std::vector<float> b_vals{0.1f, -0.2f, 0.3f};

    auto run = [&] {
        return vseg::conv3d(Tensor::from_values(in_shape, in_vals),
                            Tensor::from_values(k_shape, k_vals),
                            Tensor::from_values({3}, b_vals), 1, 1);
    };
    auto a = run();
    auto b = run();
    REQUIRE(a.values().size() == b.values().size());
    for (std::size_t i = 0; i < a.values().size(); ++i) CHECK(a.values()[i] == b.values()[i]);
}

TEST_CASE("conv3d rejects malformed arguments") {
    auto in = TensorD::zeros({1, 2, 4, 4, 4});
    auto k = TensorD::zeros({3, 2, 3, 3, 3});
    auto b = TensorD::zeros({3});
    CHECK_THROWS_AS(vseg::conv3d(TensorD::zeros({2, 4, 4, 4}), k, b, 1, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(vseg::conv3d(in, TensorD::zeros({3, 2, 3, 3}), b, 1, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(vseg::conv3d(in, TensorD::zeros({3, 1, 3, 3, 3}), b, 1, 0),
                    std::invalid_argument);  // channel disagreement
    CHECK_THROWS_AS(vseg::conv3d(in, k, TensorD::zeros({2}), 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(vseg::conv3d(in, k, b, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(vseg::conv3d(in, k, b, 1, -1), std::invalid_argument);
    CHECK_THROWS_AS(vseg::conv3d(in, TensorD::zeros({3, 2, 5, 5, 5}), b, 1, 0),
                    std::invalid_argument);  // kernel exceeds padded input
}

TEST_CASE("gradcheck: conv3d stride 1 padding 1") {
    vseg::Rng rng(555);
    auto in = TensorD::from_values({1, 2, 3, 3, 3}, random_values(54, rng), true);
    auto k = TensorD::from_values({2, 2, 3, 3, 3}, random_values(108, rng), true);
    auto b = TensorD::from_values({2}, random_values(2, rng), true);
    auto r = oracle::gradcheck({in, k, b}, [&] {
        return vseg::sum(vseg::mul(vseg::conv3d(in, k, b, 1, 1), vseg::conv3d(in, k, b, 1, 1)));
    });
    CHECK(r.checked == 164);
    CHECK(r.failed == 0);
    if (r.failed) MESSAGE(r.worst_where);
}

TEST_CASE("gradcheck: conv3d stride 2 padding 0") {
    vseg::Rng rng(556);
    auto in = TensorD::from_values({2, 1, 5, 5, 5}, random_values(250, rng), true);
    auto k = TensorD::from_values({2, 1, 3, 3, 3}, random_values(54, rng), true);
    auto b = TensorD::from_values({2}, random_values(2, rng), true);
    auto r = oracle::gradcheck({in, k, b}, [&] {
        return vseg::mean(vseg::selu(vseg::conv3d(in, k, b, 2, 0)));
    });
    CHECK(r.failed == 0);
    if (r.failed) MESSAGE(r.worst_where);
}

TEST_CASE("conv3d_transposed scatter hand case") {
    // one input voxel broadcast through a 2x2x2 kernel
    auto in = TensorD::from_values({1, 1, 1, 1, 1}, {2.0});
    auto k = TensorD::from_values({1, 1, 2, 2, 2}, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0});
    auto out = vseg::conv3d_transposed(in, k, 2);
    REQUIRE(out.shape() == vseg::Shape{1, 1, 2, 2, 2});
    for (int i = 0; i < 8; ++i)
        CHECK(out.values()[i] == doctest::Approx(2.0 * (i + 1)).epsilon(1e-15));
}

TEST_CASE("conv3d_transposed matches the scatter reference over random cases") {
    vseg::Rng rng(888);
    double worst = 0.0;
    for (int trial = 0; trial < 60; ++trial) {
        const std::int64_t N = rng.uniform_int(1, 2);
        const std::int64_t C = rng.uniform_int(1, 3);
        const std::int64_t K = rng.uniform_int(1, 3);
        const std::int64_t s = rng.uniform_int(1, 3);
        const std::int64_t D = rng.uniform_int(1, 5);
        const std::int64_t H = rng.uniform_int(1, 5);
        const std::int64_t W = rng.uniform_int(1, 5);
        vseg::Shape in_shape{N, C, D, H, W};
        vseg::Shape k_shape{C, K, s, s, s};
        auto in_vals = random_values(vseg::shape_numel(in_shape), rng);
        auto k_vals = random_values(vseg::shape_numel(k_shape), rng);
        auto out = vseg::conv3d_transposed(TensorD::from_values(in_shape, in_vals),
                                           TensorD::from_values(k_shape, k_vals), s);
        vseg::Shape ref_shape;
        auto ref = oracle::conv3d_transposed_reference(in_vals, in_shape, k_vals, k_shape, s,
                                                       ref_shape);
        REQUIRE(out.shape() == ref_shape);
        for (std::size_t i = 0; i < ref.size(); ++i)
            worst = std::max(worst, std::abs(out.values()[i] - ref[i]));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("conv3d_transposed rejects kernels whose extent is not the stride") {
    auto in = TensorD::zeros({1, 2, 3, 3, 3});
    CHECK_THROWS_AS(vseg::conv3d_transposed(in, TensorD::zeros({2, 1, 3, 3, 3}), 2),
                    std::invalid_argument);
    CHECK_THROWS_AS(vseg::conv3d_transposed(in, TensorD::zeros({1, 1, 2, 2, 2}), 2),
                    std::invalid_argument);  // channel disagreement
    CHECK_THROWS_AS(vseg::conv3d_transposed(in, TensorD::zeros({2, 1, 2, 2, 2}), 0),
                    std::invalid_argument);
}

TEST_CASE("gradcheck: conv3d_transposed") {
    vseg::Rng rng(557);
    auto in = TensorD::from_values({1, 2, 2, 2, 2}, random_values(16, rng), true);
    auto k = TensorD::from_values({2, 3, 2, 2, 2}, random_values(48, rng), true);
    auto r = oracle::gradcheck({in, k}, [&] {
        auto y = vseg::conv3d_transposed(in, k, 2);
        return vseg::sum(vseg::mul(y, y));
    });
    CHECK(r.checked == 64);
    CHECK(r.failed == 0);
    if (r.failed) MESSAGE(r.worst_where);
}
