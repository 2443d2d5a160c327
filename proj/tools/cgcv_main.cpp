#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cgcv/gradcheck.hpp"
#include "cgcv/io.hpp"
#include "cgcv/synth.hpp"
#include "cgcv/viz.hpp"

namespace fs = std::filesystem;
using namespace cgcv;

namespace {

struct VolumeOptions {
    std::string ckpt;
    std::string gate = "sigmoid";
    std::string lift = "on";
    int radius = 4;
    int levels = 4;
    int iters = 8;
    uint32_t seed = 0;
};

void add_model_options(CLI::App* cmd, VolumeOptions& opt) {
    cmd->add_option("--ckpt", opt.ckpt, "checkpoint (.cgck); omit for seeded random weights");
    cmd->add_option("--gate", opt.gate, "attention gate: sigmoid|softmax|none")
        ->check(CLI::IsMember({"sigmoid", "softmax", "none"}));
    cmd->add_option("--lift", opt.lift, "context-correlation lift: on|off")
        ->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--radius", opt.radius, "lookup radius in cells");
    cmd->add_option("--levels", opt.levels, "pyramid levels");
    cmd->add_option("--iters", opt.iters, "refinement iterations");
    cmd->add_option("--seed", opt.seed, "seed for default-initialized weights");
}

Model<float> resolve_model(const VolumeOptions& opt) {
    const GateMode mode = gate_mode_from_string(opt.gate);
    const bool lift = opt.lift == "on";
    if (!opt.ckpt.empty())
        return load_checkpoint<float>(opt.ckpt, mode, lift, opt.radius,
                                      opt.levels, opt.iters, opt.seed);
    ModelConfig cfg;
    cfg.gate_mode = mode;
    cfg.lift_enabled = lift;
    cfg.radius = opt.radius;
    cfg.levels = opt.levels;
    cfg.iterations = opt.iters;
    cfg.seed = opt.seed;
    return make_model<float>(cfg);
}

struct EncodedPair {
    FeatureMap<float> g1, g2;
    ContextBundle<float> ctx;
    PadRecord pad;
    int full_h = 0, full_w = 0;
};

EncodedPair encode_pair(const std::string& ref_path, const std::string& tgt_path,
                        const Model<float>& model) {
    FeatureMap<float> ref = read_image(ref_path);
    FeatureMap<float> tgt = read_image(tgt_path);
    if (ref.height != tgt.height || ref.width != tgt.width)
        throw DimensionError("reference and target images have different sizes");
    EncodedPair out;
    out.full_h = ref.height;
    out.full_w = ref.width;
    PaddedImage<float> pref = pad_to_grid(ref);
    PaddedImage<float> ptgt = pad_to_grid(tgt);
    out.pad = pref.pad;
    out.g1 = encode_matching(pref.image, model.match_enc);
    out.g2 = encode_matching(ptgt.image, model.match_enc);
    ImagePair<float> pair{pref.image, ptgt.image};
    out.ctx = encode_context(pair, model.ctx_enc);
    return out;
}

int run_flow(const std::string& ref, const std::string& tgt,
             const std::string& out_flo, const std::string& out_png,
             const VolumeOptions& opt) {
    Model<float> model = resolve_model(opt);
    EncodedPair enc = encode_pair(ref, tgt, model);
    RefineConfig rcfg{opt.iters, model.cfg.net_channels()};
    FlowField<float> flow = run_refinement(enc.g1, enc.g2, enc.ctx, model, rcfg,
                                           enc.pad, enc.full_h, enc.full_w);
    if (!out_flo.empty()) {
        write_flo(flow, out_flo);
        std::printf("wrote %s (%dx%d)\n", out_flo.c_str(), flow.width, flow.height);
    }
    if (!out_png.empty()) {
        std::vector<uint8_t> rgb = flow_to_rgb(flow);
        write_png_rgb(rgb, flow.height, flow.width, out_png);
        std::printf("wrote %s\n", out_png.c_str());
    }
    return 0;
}

int run_volume(const std::string& ref, const std::string& tgt,
               const std::string& query, const std::string& which,
               const std::string& out_pgm, const std::string& out_raw,
               const VolumeOptions& opt) {
    int qx = 0, qy = 0;
    if (std::sscanf(query.c_str(), "%d,%d", &qx, &qy) != 2)
        throw ConfigError("--query wants 'i,j' (reference cell coordinates)");
    Model<float> model = resolve_model(opt);
    EncodedPair enc = encode_pair(ref, tgt, model);
    const VolumeSource src = volume_source_from_string(which);

    CorrVolume4<float> c = build_all_pairs(enc.g1, enc.g2);
    CorrVolume4<float> vol;
    switch (src) {
        case VolumeSource::C: vol = std::move(c); break;
        case VolumeSource::A:
            vol = cross_attention(project_qk(enc.ctx, model.gate),
                                  model.gate.gate_mode);
            break;
        case VolumeSource::M:
            vol = gate(c, cross_attention(project_qk(enc.ctx, model.gate),
                                          model.gate.gate_mode));
            break;
        case VolumeSource::S: vol = context_correlation(enc.ctx); break;
        case VolumeSource::V: vol = assemble(c, enc.ctx, model.gate); break;
    }
    if (!out_pgm.empty()) {
        std::vector<uint8_t> gray = dump_plane(vol, qx, qy);
        write_pgm(gray, vol.h2, vol.w2, out_pgm);
        std::printf("wrote %s (%s plane at %d,%d)\n", out_pgm.c_str(),
                    which.c_str(), qx, qy);
    }
    if (!out_raw.empty()) {
        write_volume(vol, out_raw);
        std::printf("wrote %s (%dx%dx%dx%d)\n", out_raw.c_str(), vol.h1, vol.w1,
                    vol.h2, vol.w2);
    }
    return 0;
}

int run_features(const std::string& img_path, const std::string& which,
                 const std::string& out_dir, const VolumeOptions& opt) {
    Model<float> model = resolve_model(opt);
    FeatureMap<float> img = read_image(img_path);
    PaddedImage<float> padded = pad_to_grid(img);
    FeatureMap<float> feat;
    if (which == "matching") {
        feat = encode_matching(padded.image, model.match_enc);
    } else {
        ImagePair<float> pair{padded.image, padded.image};
        ContextBundle<float> ctx = encode_context(pair, model.ctx_enc);
        feat = which == "net" ? std::move(ctx.net1) : std::move(ctx.inp1);
    }
    fs::create_directories(out_dir);
    for (int c = 0; c < feat.channels; ++c) {
        std::vector<uint8_t> gray =
            normalize_gray({feat.plane(c), feat.plane_size()});
        char name[64];
        std::snprintf(name, sizeof(name), "%s_c%03d.pgm", which.c_str(), c);
        write_pgm(gray, feat.height, feat.width, (fs::path(out_dir) / name).string());
    }
    std::printf("wrote %d channel dumps to %s\n", feat.channels, out_dir.c_str());
    return 0;
}

int run_synth(const std::string& spec_path, const std::string& out_dir) {
    std::ifstream in(spec_path);
    if (!in) throw ConfigError("cannot open spec file " + spec_path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    SynthSpec spec = parse_synth_spec(text);
    fs::create_directories(out_dir);
    for (int i = 0; i < spec.count; ++i) {
        SynthPair<float> sp = synth_pair<float>(spec, static_cast<uint32_t>(i));
        char stem[32];
        std::snprintf(stem, sizeof(stem), "pair_%03d", i);
        const fs::path base = fs::path(out_dir) / stem;
        write_ppm(sp.pair.reference, base.string() + "_ref.ppm");
        write_ppm(sp.pair.target, base.string() + "_tgt.ppm");
        write_flo(sp.gt, base.string() + "_gt.flo");
    }
    std::printf("wrote %d pair(s) to %s\n", spec.count, out_dir.c_str());
    return 0;
}

int run_gradcheck(uint32_t seed, const std::string& gate) {
    std::vector<GateMode> modes;
    if (gate == "all")
        modes = {GateMode::Sigmoid, GateMode::Softmax, GateMode::None};
    else
        modes = {gate_mode_from_string(gate)};
    bool ok = true;
    for (GateMode mode : modes) {
        std::printf("# gate mode: %s\n", to_string(mode).c_str());
        auto reports = check_all(gradcheck_config(mode), seed);
        for (const auto& r : reports) std::printf("%s\n", format_report(r).c_str());
        ok = ok && all_pass(reports);
    }
    if (!ok) {
        std::fprintf(stderr, "gradcheck: FAIL\n");
        return 1;
    }
    std::printf("gradcheck: all parameters PASS\n");
    return 0;
}

std::vector<TrainSample> load_dataset(const std::string& dir) {
    std::vector<TrainSample> samples;
    std::vector<fs::path> refs;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.size() > 8 && name.substr(name.size() - 8) == "_ref.ppm")
            refs.push_back(entry.path());
    }
    std::sort(refs.begin(), refs.end());
    for (const fs::path& ref : refs) {
        std::string stem = ref.string();
        stem.erase(stem.size() - 8);
        TrainSample s;
        FeatureMap<float> r = read_image(ref.string());
        FeatureMap<float> t = read_image(stem + "_tgt.ppm");
        FlowField<float> gt = read_flo(stem + "_gt.flo");
        if (r.height % 8 != 0 || r.width % 8 != 0)
            throw DimensionError("train-toy: image dims must be multiples of 8");
        s.pair.reference = convert_map<double>(r);
        s.pair.target = convert_map<double>(t);
        s.gt_full = convert_flow<double>(gt);
        samples.push_back(std::move(s));
    }
    if (samples.empty())
        throw ConfigError("train-toy: no pair_*_ref.ppm files in " + dir);
    return samples;
}

int run_train(const std::string& data_dir, int epochs, double lr,
              const std::string& out_ckpt, const VolumeOptions& opt,
              double gamma, double clip) {
    std::vector<TrainSample> samples = load_dataset(data_dir);
    ModelConfig cfg = ModelConfig::toy();
    cfg.gate_mode = gate_mode_from_string(opt.gate);
    cfg.lift_enabled = opt.lift == "on";
    cfg.radius = opt.radius;
    cfg.levels = opt.levels;
    cfg.iterations = opt.iters;
    cfg.seed = opt.seed;

    std::printf("training on %zu pairs, %d epochs, lr %g\n", samples.size(),
                epochs, lr);
    TrainResult res = train_toy(samples, cfg, epochs, lr, gamma, clip,
                                [&](int epoch, double loss) {
                                    if (epoch % 10 == 0 || epoch == epochs - 1)
                                        std::printf("epoch %4d  loss %.6f\n",
                                                    epoch, loss);
                                });
    const double epe = evaluate_epe(res.model, samples);
    std::printf("final mean EPE on training set: %.4f px\n", epe);
    std::printf("trained lambda: %.6g\n",
                static_cast<double>(res.model.gate.lambda));
    save_checkpoint(res.model, out_ckpt);
    std::printf("wrote %s\n", out_ckpt.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"context-guided correlation volumes for optical flow"};
    app.set_config("--config", "", "read options from a key = value file");
    app.require_subcommand(1);

    // flow
    auto* flow_cmd = app.add_subcommand("flow", "estimate flow for an image pair");
    std::string flow_ref, flow_tgt, flow_out, flow_png;
    VolumeOptions flow_opt;
    flow_cmd->add_option("ref", flow_ref, "reference frame (PPM/PGM)")->required();
    flow_cmd->add_option("tgt", flow_tgt, "target frame (PPM/PGM)")->required();
    flow_cmd->add_option("--out", flow_out, "output .flo path");
    flow_cmd->add_option("--png", flow_png, "color-wheel visualization (PNG)");
    add_model_options(flow_cmd, flow_opt);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate synthetic pairs");
    std::string synth_spec, synth_dir;
    synth_cmd->add_option("--spec", synth_spec, "spec file (key = value)")->required();
    synth_cmd->add_option("--out-dir", synth_dir, "output directory")->required();

    // volume
    auto* vol_cmd = app.add_subcommand("volume", "dump a correlation plane");
    std::string vol_ref, vol_tgt, vol_query = "0,0", vol_which = "V";
    std::string vol_out, vol_raw;
    VolumeOptions vol_opt;
    vol_cmd->add_option("ref", vol_ref)->required();
    vol_cmd->add_option("tgt", vol_tgt)->required();
    vol_cmd->add_option("--query", vol_query, "reference cell 'i,j'");
    vol_cmd->add_option("--which", vol_which, "C|A|M|S|V")
        ->check(CLI::IsMember({"C", "A", "M", "S", "V"}));
    vol_cmd->add_option("--out", vol_out, "normalized plane (PGM)");
    vol_cmd->add_option("--raw", vol_raw, "full 4D volume dump (.cgcv)");
    add_model_options(vol_cmd, vol_opt);

    // gradcheck
    auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference gradient check");
    uint32_t gc_seed = 0;
    std::string gc_gate = "all";
    gc_cmd->add_option("--seed", gc_seed, "random seed");
    gc_cmd->add_option("--gate", gc_gate, "all|sigmoid|softmax|none")
        ->check(CLI::IsMember({"all", "sigmoid", "softmax", "none"}));

    // train-toy
    auto* tr_cmd = app.add_subcommand("train-toy", "desk-scale training run");
    std::string tr_data, tr_out = "weights.cgck";
    int tr_epochs = 200;
    double tr_lr = 0.2, tr_gamma = 0.8, tr_clip = 1.0;
    VolumeOptions tr_opt;
    tr_opt.radius = 2;
    tr_opt.levels = 2;
    tr_opt.iters = 4;
    tr_cmd->add_option("--data", tr_data, "directory from `synth`")->required();
    tr_cmd->add_option("--epochs", tr_epochs, "training epochs");
    tr_cmd->add_option("--lr", tr_lr, "learning rate");
    tr_cmd->add_option("--gamma", tr_gamma, "iteration loss decay");
    tr_cmd->add_option("--clip", tr_clip, "gradient norm cap (0 disables)");
    tr_cmd->add_option("--out", tr_out, "output checkpoint (.cgck)");
    add_model_options(tr_cmd, tr_opt);

    // features
    auto* ft_cmd = app.add_subcommand("features", "dump per-channel feature images");
    std::string ft_img, ft_which = "matching", ft_dir = "features";
    VolumeOptions ft_opt;
    ft_cmd->add_option("img", ft_img, "input image (PPM/PGM)")->required();
    ft_cmd->add_option("--which", ft_which, "matching|net|inp")
        ->check(CLI::IsMember({"matching", "net", "inp"}));
    ft_cmd->add_option("--out-dir", ft_dir, "output directory");
    add_model_options(ft_cmd, ft_opt);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(flow_cmd))
            return run_flow(flow_ref, flow_tgt, flow_out, flow_png, flow_opt);
        if (app.got_subcommand(synth_cmd)) return run_synth(synth_spec, synth_dir);
        if (app.got_subcommand(vol_cmd))
            return run_volume(vol_ref, vol_tgt, vol_query, vol_which, vol_out,
                              vol_raw, vol_opt);
        if (app.got_subcommand(gc_cmd)) return run_gradcheck(gc_seed, gc_gate);
        if (app.got_subcommand(tr_cmd))
            return run_train(tr_data, tr_epochs, tr_lr, tr_out, tr_opt,
                             tr_gamma, tr_clip);
        if (app.got_subcommand(ft_cmd)) return run_features(ft_img, ft_which, ft_dir, ft_opt);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
