#include <doctest.h>

#include <cmath>

#include "cgcv/config.hpp"
#include "cgcv/tensor.hpp"
#include "oracles.hpp"

using namespace cgcv;

TEST_CASE("inner_product: orthonormal one-hot channels") {
    FeatureMap<double> a(4, 1, 1), b(4, 1, 1);
    a.at(2, 0, 0) = 1.0;
    b.at(2, 0, 0) = 1.0;
    CHECK(inner_product(a, b, 0, 0, 0, 0, 0.5) == doctest::Approx(0.5));
    // orthogonal vectors
    b.at(2, 0, 0) = 0.0;
    b.at(1, 0, 0) = 1.0;
    CHECK(inner_product(a, b, 0, 0, 0, 0, 1.0) == 0.0);
}

TEST_CASE("inner_product: random 8-channel vs scalar loop") {
    auto a = oracle::random_map<double>(8, 3, 3, 11);
    auto b = oracle::random_map<double>(8, 3, 3, 12);
    const double scale = 1.0 / std::sqrt(8.0);
    const double got = inner_product(a, b, 1, 2, 0, 1, scale);
    const double want = scale * oracle::dot_pixels(a, 1, 2, b, 0, 1);
    CHECK(std::abs(got - want) <= 1e-6 * std::abs(want));
}

TEST_CASE("inner_product: matches oracle in both precisions up to 256 channels") {
    for (int ch : {16, 64, 256}) {
        auto af = oracle::random_map<float>(ch, 2, 2, 100 + ch);
        auto bf = oracle::random_map<float>(ch, 2, 2, 200 + ch);
        auto ad = oracle::widen(af);
        auto bd = oracle::widen(bf);
        const double want = oracle::dot_pixels(ad, 1, 0, bd, 0, 1) / std::sqrt(ch);
        const float got_f =
            inner_product(af, bf, 1, 0, 0, 1, 1.0f / std::sqrt(float(ch)));
        const double got_d =
            inner_product(ad, bd, 1, 0, 0, 1, 1.0 / std::sqrt(double(ch)));
        CHECK(std::abs(got_f - want) <=
              Tolerances::oracle_rel_single * std::max(1.0, std::abs(want)));
        CHECK(std::abs(got_d - want) <=
              Tolerances::oracle_rel_double * std::max(1.0, std::abs(want)));
    }
}

TEST_CASE("inner_product: contract violations") {
    FeatureMap<double> a(4, 2, 2), b(4, 2, 2), c(3, 2, 2);
    CHECK_THROWS_AS(inner_product(a, b, 2, 0, 0, 0, 1.0), ContractViolation);
    CHECK_THROWS_AS(inner_product(a, b, 0, 0, 0, -1, 1.0), ContractViolation);
    CHECK_THROWS_AS(inner_product(a, c, 0, 0, 0, 0, 1.0), DimensionError);
}

TEST_CASE("map_sigmoid: fixed points and saturation") {
    CorrVolume4<double> v(1, 1, 2, 2);
    v.data = {0.0, 100.0, -1.5, -1000.0};
    auto s = map_sigmoid(v);
    CHECK(s.data[0] == 0.5);
    CHECK(s.data[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.data[2] == doctest::Approx(1.0 / (1.0 + std::exp(1.5))).epsilon(1e-14));
    for (double x : s.data) {
        CHECK(x > 0.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("map_sigmoid: output strictly inside (0,1) on random volumes") {
    for (uint32_t seed = 0; seed < 5; ++seed) {
        auto v = oracle::random_volume<float>(3, 3, 4, 4, seed, -60.0, 60.0);
        auto s = map_sigmoid(v);
        for (float x : s.data) {
            CHECK(x > 0.0f);
            CHECK(x < 1.0f);
        }
    }
}

TEST_CASE("map_softmax_lastdims: constant plane is uniform") {
    CorrVolume4<double> v(2, 2, 4, 4);
    std::fill(v.data.begin(), v.data.end(), 3.25);
    auto s = map_softmax_lastdims(v);
    for (double x : s.data) CHECK(x == doctest::Approx(1.0 / 16).epsilon(1e-12));
}

TEST_CASE("map_softmax_lastdims: dominant entry saturates") {
    CorrVolume4<double> v(1, 1, 3, 3);
    std::fill(v.data.begin(), v.data.end(), 0.0);
    v.at(0, 0, 1, 2) = 50.0;
    auto s = map_softmax_lastdims(v);
    CHECK(s.at(0, 0, 1, 2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("map_softmax_lastdims: random planes match two-pass oracle and sum to 1") {
    auto v = oracle::random_volume<double>(3, 2, 5, 4, 42);
    auto s = map_softmax_lastdims(v);
    for (int j = 0; j < v.h1; ++j)
        for (int i = 0; i < v.w1; ++i) {
            std::vector<double> plane(v.plane(i, j), v.plane(i, j) + v.plane_size());
            auto want = oracle::softmax_plane(plane);
            double sum = 0.0;
            for (size_t n = 0; n < want.size(); ++n) {
                CHECK(s.plane(i, j)[n] == doctest::Approx(want[n]).epsilon(1e-12));
                sum += s.plane(i, j)[n];
            }
            CHECK(std::abs(sum - 1.0) < Tolerances::softmax_plane_sum);
        }
}

TEST_CASE("avg_pool_target: constants, block mean, odd dims") {
    CorrVolume4<double> v(1, 1, 2, 2);
    SUBCASE("constant volume") {
        std::fill(v.data.begin(), v.data.end(), 7.5);
        auto p = avg_pool_target(v);
        CHECK(p.h2 == 1);
        CHECK(p.w2 == 1);
        CHECK(p.data[0] == 7.5);
    }
    SUBCASE("2x2 block {1,2,3,4}") {
        v.data = {1, 2, 3, 4};
        CHECK(avg_pool_target(v).data[0] == doctest::Approx(2.5));
    }
    SUBCASE("odd target dims rejected") {
        CorrVolume4<double> odd(1, 1, 3, 4);
        CHECK_THROWS_AS(avg_pool_target(odd), DimensionError);
    }
}

TEST_CASE("avg_pool_target: random 4x4 planes match block-loop oracle exactly") {
    auto v = oracle::random_volume<double>(2, 3, 4, 4, 77);
    auto got = avg_pool_target(v);
    auto want = oracle::pool_target(v);
    for (size_t n = 0; n < want.data.size(); ++n)
        CHECK(got.data[n] == want.data[n]);
}

TEST_CASE("avg_pool_target: preserves per-plane mean within 1e-6") {
    auto v = oracle::random_volume<double>(2, 2, 8, 8, 5);
    auto p = avg_pool_target(v);
    for (int j = 0; j < v.h1; ++j)
        for (int i = 0; i < v.w1; ++i) {
            double m0 = 0.0, m1 = 0.0;
            for (size_t n = 0; n < v.plane_size(); ++n) m0 += v.plane(i, j)[n];
            for (size_t n = 0; n < p.plane_size(); ++n) m1 += p.plane(i, j)[n];
            m0 /= static_cast<double>(v.plane_size());
            m1 /= static_cast<double>(p.plane_size());
            CHECK(std::abs(m0 - m1) < Tolerances::pool_mean_drift);
        }
}

TEST_CASE("bilinear_sample_plane: nodes, midpoints, zero padding") {
    std::vector<double> plane = {1, 2, 3,
                                 4, 5, 6,
                                 7, 8, 9};
    std::span<const double> sp(plane);
    CHECK(bilinear_sample_plane(sp, 3, 3, 1.0, 2.0) == 8.0);
    CHECK(bilinear_sample_plane(sp, 3, 3, 0.5, 0.0) == doctest::Approx(1.5));
    CHECK(bilinear_sample_plane(sp, 3, 3, 0.0, 1.5) == doctest::Approx(5.5));
    CHECK(bilinear_sample_plane(sp, 3, 3, -5.0, -5.0) == 0.0);
    // straddling the border: only in-range corners contribute
    CHECK(bilinear_sample_plane(sp, 3, 3, -0.5, 0.0) == doctest::Approx(0.5));
}

TEST_CASE("bilinear_sample_plane: linear along grid axes") {
    auto grid = oracle::random_volume<double>(1, 1, 5, 5, 9);
    std::span<const double> sp(grid.data);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> alpha(0.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        const int x0 = rep % 4, y = (rep / 4) % 5;
        const double a = alpha(rng);
        const double left = bilinear_sample_plane(sp, 5, 5, double(x0), double(y));
        const double right =
            bilinear_sample_plane(sp, 5, 5, double(x0 + 1), double(y));
        const double mid = bilinear_sample_plane(sp, 5, 5, x0 + a, double(y));
        CHECK(mid == doctest::Approx((1 - a) * left + a * right).epsilon(1e-12));
    }
}

TEST_CASE("finiteness helpers") {
    FeatureMap<double> m(1, 2, 2);
    CHECK(all_finite(m));
    m.data[3] = std::nan("");
    CHECK_FALSE(all_finite(m));
}
