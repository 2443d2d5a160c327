#include <doctest.h>

#include <cmath>

#include "cgcv/config.hpp"
#include "cgcv/corr.hpp"
#include "cgcv/counters.hpp"
#include "oracles.hpp"

using namespace cgcv;

TEST_CASE("build_all_pairs: orthonormal one-hot features, n=4") {
    // per-pixel one-hot feature, channel = pixel parity
    FeatureMap<double> g(4, 1, 2);
    g.at(0, 0, 0) = 1.0;
    g.at(1, 0, 1) = 1.0;
    auto c = build_all_pairs(g, g);
    CHECK(c.at(0, 0, 0, 0) == doctest::Approx(0.5));  // 1/sqrt(4)
    CHECK(c.at(1, 0, 1, 0) == doctest::Approx(0.5));
    CHECK(c.at(0, 0, 1, 0) == 0.0);
    CHECK(c.at(1, 0, 0, 0) == 0.0);
}

TEST_CASE("build_all_pairs: channel mismatch rejected") {
    FeatureMap<float> a(4, 2, 2), b(5, 2, 2);
    CHECK_THROWS_AS(build_all_pairs(a, b), DimensionError);
}

TEST_CASE("build_all_pairs: 1x1 grids equal scaled scalar dot") {
    auto a = oracle::random_map<double>(16, 1, 1, 21);
    auto b = oracle::random_map<double>(16, 1, 1, 22);
    auto c = build_all_pairs(a, b);
    const double want = oracle::dot_pixels(a, 0, 0, b, 0, 0) / 4.0;
    CHECK(c.at(0, 0, 0, 0) == doctest::Approx(want).epsilon(1e-6));
}

TEST_CASE("build_all_pairs: matches quadruple-loop oracle") {
    auto g1f = oracle::random_map<float>(12, 4, 5, 31);
    auto g2f = oracle::random_map<float>(12, 3, 6, 32);
    auto got = build_all_pairs(g1f, g2f);
    auto want =
        oracle::all_pairs(oracle::widen(g1f), oracle::widen(g2f),
                          1.0 / std::sqrt(12.0));
    CHECK(oracle::rel_error(got.data, want.data) < Tolerances::oracle_rel_single);
}

TEST_CASE("build_all_pairs: frame swap symmetry") {
    auto g1 = oracle::random_map<float>(8, 3, 4, 41);
    auto g2 = oracle::random_map<float>(8, 4, 3, 42);
    auto c12 = build_all_pairs(g1, g2);
    auto c21 = build_all_pairs(g2, g1);
    for (int j = 0; j < c12.h1; ++j)
        for (int i = 0; i < c12.w1; ++i)
            for (int l = 0; l < c12.h2; ++l)
                for (int k = 0; k < c12.w2; ++k)
                    CHECK(std::abs(c12.at(i, j, k, l) - c21.at(k, l, i, j)) <
                          Tolerances::frame_swap_symmetry);
}

TEST_CASE("build_pyramid: identity, constants, oracle level") {
    auto v = oracle::random_volume<double>(2, 2, 4, 4, 51);
    SUBCASE("single level is the input") {
        auto p = build_pyramid(v, 1);
        CHECK(p.num_levels() == 1);
        CHECK(p.levels[0].data == v.data);
    }
    SUBCASE("constant volume stays constant across levels") {
        CorrVolume4<double> c(1, 1, 8, 8);
        std::fill(c.data.begin(), c.data.end(), -1.25);
        auto p = build_pyramid(c, 4);
        for (const auto& lvl : p.levels)
            for (double x : lvl.data) CHECK(x == doctest::Approx(-1.25));
    }
    SUBCASE("level 1 equals direct block averaging") {
        auto p = build_pyramid(v, 2);
        auto want = oracle::pool_target(v);
        for (size_t n = 0; n < want.data.size(); ++n)
            CHECK(p.levels[1].data[n] == want.data[n]);
    }
    SUBCASE("indivisible dims rejected") {
        CorrVolume4<double> bad(1, 1, 6, 6);
        CHECK_THROWS_AS(build_pyramid(bad, 3), DimensionError);
    }
}

TEST_CASE("build_pyramid: global mean is stable across levels") {
    auto v = oracle::random_volume<double>(2, 2, 8, 8, 52);
    auto p = build_pyramid(v, 4);
    auto mean = [](const CorrVolume4<double>& x) {
        double acc = 0.0;
        for (double e : x.data) acc += e;
        return acc / static_cast<double>(x.data.size());
    };
    const double m0 = mean(p.levels[0]);
    for (int t = 1; t < 4; ++t)
        CHECK(std::abs(mean(p.levels[t]) - m0) < Tolerances::pyramid_mean_drift);
}

TEST_CASE("lookup: zero flow, radius 0, single level reads the diagonal") {
    auto v = oracle::random_volume<float>(3, 4, 3, 4, 61);
    auto p = build_pyramid(v, 1);
    FlowField<float> flow(3, 4);
    CorrFeatures<float> feats = lookup(p, flow, LookupConfig{0, 1});
    CHECK(feats.length == 1);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 4; ++x)
            CHECK(feats.at(x, y, 0) == v.at(x, y, x, y));
}

TEST_CASE("lookup: integer flow, radius 0 equals direct indexing") {
    auto v = oracle::random_volume<float>(4, 4, 4, 4, 62);
    auto p = build_pyramid(v, 1);
    FlowField<float> flow(4, 4);
    for (size_t n = 0; n < flow.size(); ++n) {
        flow.u[n] = 1.0f;
        flow.v[n] = -1.0f;
    }
    CorrFeatures<float> feats = lookup(p, flow, LookupConfig{0, 1});
    for (int y = 1; y < 4; ++y)
        for (int x = 0; x < 3; ++x)
            CHECK(feats.at(x, y, 0) == v.at(x, y, x + 1, y - 1));
}

TEST_CASE("lookup: random flow matches naive sampling oracle") {
    auto vf = oracle::random_volume<float>(4, 4, 8, 8, 63);
    auto pf = build_pyramid(vf, 2);
    std::mt19937 rng(64);
    std::uniform_real_distribution<double> d(-2.5, 2.5);
    FlowField<float> flow(4, 4);
    for (size_t n = 0; n < flow.size(); ++n) {
        flow.u[n] = static_cast<float>(d(rng));
        flow.v[n] = static_cast<float>(d(rng));
    }
    const LookupConfig cfg{1, 2};
    CorrFeatures<float> feats = lookup(pf, flow, cfg);
    CHECK(feats.length == 2 * 9);

    std::vector<CorrVolume4<double>> levels = {oracle::widen(pf.levels[0]),
                                               oracle::widen(pf.levels[1])};
    FlowField<double> dflow(4, 4);
    for (size_t n = 0; n < flow.size(); ++n) {
        dflow.u[n] = flow.u[n];
        dflow.v[n] = flow.v[n];
    }
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
            auto want = oracle::lookup_cell(levels, dflow, x, y, cfg.radius);
            for (int f = 0; f < feats.length; ++f)
                CHECK(std::abs(feats.at(x, y, f) - want[f]) <=
                      1e-5 * std::max(1.0, std::abs(want[f])));
        }
}

TEST_CASE("lookup: dimension guards") {
    auto v = oracle::random_volume<float>(3, 3, 4, 4, 65);
    auto p = build_pyramid(v, 1);
    FlowField<float> bad(2, 2);
    CHECK_THROWS_AS(lookup(p, bad, LookupConfig{1, 1}), DimensionError);
    FlowField<float> ok(3, 3);
    CHECK_THROWS_AS(lookup(p, ok, LookupConfig{1, 2}), DimensionError);
}

TEST_CASE("argmax_plane: unique max, tie break, oracle scan") {
    CorrVolume4<double> v(1, 1, 4, 4);
    SUBCASE("unique maximum") {
        std::fill(v.data.begin(), v.data.end(), 0.0);
        v.at(0, 0, 2, 3) = 5.0;
        auto [k, l] = argmax_plane(v, 0, 0);
        CHECK(k == 2);
        CHECK(l == 3);
    }
    SUBCASE("constant plane breaks ties at (0,0)") {
        std::fill(v.data.begin(), v.data.end(), 1.0);
        auto [k, l] = argmax_plane(v, 0, 0);
        CHECK(k == 0);
        CHECK(l == 0);
    }
    SUBCASE("random plane matches exhaustive scan") {
        auto r = oracle::random_volume<double>(3, 3, 5, 7, 66);
        for (int j = 0; j < 3; ++j)
            for (int i = 0; i < 3; ++i)
                CHECK(argmax_plane(r, i, j) == oracle::argmax_scan(r, i, j));
    }
    SUBCASE("out-of-range query") {
        CHECK_THROWS_AS(argmax_plane(v, 5, 0), ContractViolation);
    }
}

TEST_CASE("integer translation: per-pixel argmax recovers the shift") {
    const int h = 8, w = 8, sx = 2, sy = 1, n = 32;
    auto g1 = oracle::random_map<double>(n, h, w, 71);
    FeatureMap<double> g2(n, h, w);
    for (int c = 0; c < n; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                g2.at(c, y, x) = g1.at(c, (y - sy + h) % h, (x - sx + w) % w);
    auto corr = build_all_pairs(g1, g2);
    int interior = 0, recovered = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (x + sx >= w || y + sy >= h) continue;  // wrapped cells excluded
            ++interior;
            if (argmax_plane(corr, x, y) == std::pair{x + sx, y + sy}) ++recovered;
        }
    CHECK(interior > 0);
    CHECK(static_cast<double>(recovered) >= 0.99 * interior);
}

TEST_CASE("build_all_pairs bumps its invocation counter") {
    auto g = oracle::random_map<float>(4, 2, 2, 81);
    counters::reset();
    (void)build_all_pairs(g, g);
    (void)build_all_pairs(g, g);
    CHECK(counters::snapshot().build_all_pairs == 2);
    counters::reset();
}
