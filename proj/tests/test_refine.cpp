#include <doctest.h>

#include <cmath>

#include "cgcv/counters.hpp"
#include "cgcv/refine.hpp"
#include "oracles.hpp"

using namespace cgcv;

namespace {

ModelConfig tiny_cfg(GateMode mode = GateMode::Sigmoid) {
    ModelConfig cfg;
    cfg.match_channels = 6;
    cfg.context_channels = 8;
    cfg.qk_channels = 4;
    cfg.enc_hidden = {4, 6};
    cfg.radius = 1;
    cfg.levels = 1;
    cfg.iterations = 3;
    cfg.gate_mode = mode;
    return cfg;
}

ImagePair<float> tiny_pair(uint32_t seed) {
    return {oracle::random_map<float>(3, 16, 16, seed, 0.0, 1.0),
            oracle::random_map<float>(3, 16, 16, seed + 1, 0.0, 1.0)};
}

}  // namespace

TEST_CASE("init_state: tanh of net1, zero flow, saturation") {
    ContextBundle<double> ctx;
    ctx.net1 = FeatureMap<double>(2, 2, 2);
    SUBCASE("zero net gives zero hidden") {
        GRUState<double> s;
        FlowField<double> f;
        init_state(ctx, s, f);
        for (double v : s.hidden.data) CHECK(v == 0.0);
        for (double v : f.u) CHECK(v == 0.0);
        for (double v : f.v) CHECK(v == 0.0);
    }
    SUBCASE("large net saturates toward 1") {
        std::fill(ctx.net1.data.begin(), ctx.net1.data.end(), 40.0);
        GRUState<double> s;
        FlowField<double> f;
        init_state(ctx, s, f);
        for (double v : s.hidden.data) CHECK(v == doctest::Approx(1.0));
    }
}

TEST_CASE("gru_step: zero flow head leaves the flow unchanged") {
    ModelConfig cfg = tiny_cfg();
    auto model = make_model<float>(cfg);
    std::fill(model.gru.flow_head.weight.begin(),
              model.gru.flow_head.weight.end(), 0.0f);
    std::fill(model.gru.flow_head.bias.begin(), model.gru.flow_head.bias.end(),
              0.0f);
    auto flows = model_forward(tiny_pair(30), model, 2);
    for (const auto& f : flows) {
        for (float v : f.u) CHECK(v == 0.0f);
        for (float v : f.v) CHECK(v == 0.0f);
    }
}

TEST_CASE("gru_step: hidden stays strictly inside (-1, 1)") {
    ModelConfig cfg = tiny_cfg();
    auto model = make_model<double>(cfg);
    ModelTrace<double> trace;
    (void)model_forward<double>(ImagePair<double>{
                                    oracle::random_map<double>(3, 16, 16, 31, 0, 1),
                                    oracle::random_map<double>(3, 16, 16, 32, 0, 1)},
                                model, 4, &trace);
    for (const auto& step : trace.steps)
        for (double v : step.hidden_out.data) {
            CHECK(v > -1.0);
            CHECK(v < 1.0);
        }
}

TEST_CASE("gru_step: single-pixel grid matches hand-computed arithmetic") {
    // 1x1 grid: a 3x3 conv sees only its center tap, so the update reduces
    // to scalar GRU equations we can evaluate by hand. With radius 0 the
    // soft-argmax summary is identically (0, 0).
    const int t = 1;
    GruWeights<double> w;
    const int x_ch = 1 + 2 + t + 2;  // corr | soft-argmax | inp | flow
    w.wz = ConvLayer<double>(t + x_ch, t, 3, 1, 1);
    w.wr = ConvLayer<double>(t + x_ch, t, 3, 1, 1);
    w.wh = ConvLayer<double>(t + x_ch, t, 3, 1, 1);
    w.flow_head = ConvLayer<double>(t + 2, 2, 3, 1, 1);
    auto set_center = [](ConvLayer<double>& c, int oc, int ic, double v) {
        c.weight[((static_cast<size_t>(oc) * c.in_channels + ic) * 3 + 1) * 3 + 1] = v;
    };
    // channel map of hx: 0 h | 1 corr | 2,3 soft-argmax | 4 inp | 5,6 flow
    // wz: 0.5*h + 0.3*corr; wr: -0.4*h + 0.2*inp; wh: 0.7*rh + 0.6*u
    set_center(w.wz, 0, 0, 0.5);
    set_center(w.wz, 0, 1, 0.3);
    set_center(w.wr, 0, 0, -0.4);
    set_center(w.wr, 0, 4, 0.2);
    set_center(w.wh, 0, 0, 0.7);
    set_center(w.wh, 0, 5, 0.6);
    w.wz.bias[0] = 0.1;
    set_center(w.flow_head, 0, 0, 1.5);
    set_center(w.flow_head, 1, 0, -2.0);
    w.flow_head.bias[1] = 0.05;

    GRUState<double> state;
    state.hidden = FeatureMap<double>(1, 1, 1);
    state.hidden.data[0] = 0.4;
    CorrFeatures<double> corr(1, 1, 1);
    corr.data[0] = 0.8;
    FeatureMap<double> inp(1, 1, 1);
    inp.data[0] = -0.6;
    FlowField<double> flow(1, 1);
    flow.u[0] = 0.25;
    flow.v[0] = -0.5;

    GRUState<double> out;
    FlowField<double> flow_out;
    gru_step(w, state, corr, inp, flow, 0, out, flow_out);

    const double z = 1.0 / (1.0 + std::exp(-(0.5 * 0.4 + 0.3 * 0.8 + 0.1)));
    const double r = 1.0 / (1.0 + std::exp(-(-0.4 * 0.4 + 0.2 * (-0.6))));
    const double cand = std::tanh(0.7 * (r * 0.4) + 0.6 * 0.25);
    const double h_new = (1.0 - z) * 0.4 + z * cand;
    CHECK(out.hidden.data[0] == doctest::Approx(h_new).epsilon(1e-12));
    CHECK(flow_out.u[0] == doctest::Approx(0.25 + 1.5 * h_new).epsilon(1e-12));
    CHECK(flow_out.v[0] ==
          doctest::Approx(-0.5 - 2.0 * h_new + 0.05).epsilon(1e-12));
}

TEST_CASE("soft_argmax_offsets: uniform window and dominant peak") {
    CorrFeatures<double> corr(1, 1, 9);  // radius 1 window
    SUBCASE("constant window gives (0,0)") {
        std::fill(corr.data.begin(), corr.data.end(), 0.7);
        auto sa = soft_argmax_offsets(corr, 1);
        CHECK(sa.data[0] == doctest::Approx(0.0));
        CHECK(sa.data[1] == doctest::Approx(0.0));
    }
    SUBCASE("strong peak pulls the expectation to its offset") {
        std::fill(corr.data.begin(), corr.data.end(), 0.0);
        corr.data[5] = 30.0;  // window index 5 = (dx, dy) = (+1, 0)
        auto sa = soft_argmax_offsets(corr, 1);
        CHECK(sa.data[0] == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(sa.data[1] == doctest::Approx(0.0).epsilon(1e-6));
    }
}

TEST_CASE("model_forward: volume kernels run once regardless of iterations") {
    ModelConfig cfg = tiny_cfg();
    auto model = make_model<float>(cfg);
    auto pair = tiny_pair(33);
    counters::KernelCounts per_iter[3];
    const int iter_counts[3] = {1, 4, 9};
    for (int n = 0; n < 3; ++n) {
        counters::reset();
        (void)model_forward(pair, model, iter_counts[n]);
        per_iter[n] = counters::snapshot();
    }
    CHECK(per_iter[0] == per_iter[1]);
    CHECK(per_iter[1] == per_iter[2]);
    CHECK(per_iter[0].build_all_pairs == 1);
    CHECK(per_iter[0].assemble == 1);
    CHECK(per_iter[0].context_correlation == 1);
    counters::reset();
}

TEST_CASE("upsample_flow_x8: aligned points carry 8x the coarse value") {
    FlowField<float> coarse(2, 3);
    std::mt19937 rng(34);
    std::uniform_real_distribution<float> d(-2.0f, 2.0f);
    for (size_t n = 0; n < coarse.size(); ++n) {
        coarse.u[n] = d(rng);
        coarse.v[n] = d(rng);
    }
    auto full = upsample_flow_x8(coarse, 16, 24);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 3; ++x) {
            CHECK(full.u_at(8 * x, 8 * y) == doctest::Approx(8 * coarse.u_at(x, y)));
            CHECK(full.v_at(8 * x, 8 * y) == doctest::Approx(8 * coarse.v_at(x, y)));
        }
    // constant fields upsample to the constant
    FlowField<float> flat(2, 2);
    std::fill(flat.u.begin(), flat.u.end(), 0.5f);
    auto up = upsample_flow_x8(flat, 16, 16);
    for (float v : up.u) CHECK(v == doctest::Approx(4.0f));
}

TEST_CASE("run_refinement: crops to the pre-pad size") {
    ModelConfig cfg = tiny_cfg();
    auto model = make_model<float>(cfg);
    auto img = oracle::random_map<float>(3, 13, 19, 35, 0.0, 1.0);
    auto padded = pad_to_grid(img);
    auto g1 = encode_matching(padded.image, model.match_enc);
    auto g2 = encode_matching(padded.image, model.match_enc);
    ImagePair<float> pair{padded.image, padded.image};
    auto ctx = encode_context(pair, model.ctx_enc);
    RefineConfig rcfg{2, cfg.net_channels()};
    auto flow = run_refinement(g1, g2, ctx, model, rcfg, padded.pad, 13, 19);
    CHECK(flow.height == 13);
    CHECK(flow.width == 19);
    CHECK(all_finite(std::span<const float>(flow.u)));
    CHECK(all_finite(std::span<const float>(flow.v)));
}

TEST_CASE("run_refinement: hidden-channel mismatch rejected") {
    ModelConfig cfg = tiny_cfg();
    auto model = make_model<float>(cfg);
    auto pair = tiny_pair(36);
    auto g1 = encode_matching(pair.reference, model.match_enc);
    auto g2 = encode_matching(pair.target, model.match_enc);
    auto ctx = encode_context(pair, model.ctx_enc);
    RefineConfig bad{2, cfg.net_channels() + 1};
    CHECK_THROWS_AS(run_refinement(g1, g2, ctx, model, bad, PadRecord{}, 16, 16),
                    DimensionError);
}
