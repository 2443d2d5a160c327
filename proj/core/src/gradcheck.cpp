#include "cgcv/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "cgcv/config.hpp"

namespace cgcv {

std::string format_report(const GradReport& r) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-24s %.3e %.3e %s", r.name.c_str(),
                  r.max_rel, r.max_abs, r.pass ? "PASS" : "FAIL");
    return buf;
}

std::vector<double> finite_diff(const std::function<double()>& loss,
                                double* param, size_t count, double step) {
    if (step <= 0.0) throw ConfigError("finite_diff: step must be positive");
    std::vector<double> grad(count);
    for (size_t n = 0; n < count; ++n) {
        const double saved = param[n];
        param[n] = saved + step;
        const double up = loss();
        param[n] = saved - step;
        const double down = loss();
        param[n] = saved;
        if (!std::isfinite(up) || !std::isfinite(down))
            throw EvaluationError("finite_diff: loss is not finite");
        grad[n] = (up - down) / (2.0 * step);
    }
    return grad;
}

GradReport compare_grads(const std::string& name,
                         const std::vector<double>& analytic,
                         const std::vector<double>& numeric) {
    GradReport r;
    r.name = name;
    r.pass = true;
    for (size_t n = 0; n < analytic.size(); ++n) {
        const double a = analytic[n];
        const double f = numeric[n];
        const double abs_err = std::abs(a - f);
        r.max_abs = std::max(r.max_abs, abs_err);
        if (std::abs(a) < Tolerances::gradcheck_small_grad) {
            if (abs_err > Tolerances::gradcheck_abs) r.pass = false;
        } else {
            const double rel = abs_err / std::max(std::abs(a), std::abs(f));
            r.max_rel = std::max(r.max_rel, rel);
            if (rel > Tolerances::gradcheck_rel) r.pass = false;
        }
    }
    return r;
}

bool all_pass(const std::vector<GradReport>& reports) {
    return std::all_of(reports.begin(), reports.end(),
                       [](const GradReport& r) { return r.pass; });
}

ModelConfig gradcheck_config(GateMode mode) {
    ModelConfig cfg;
    cfg.match_channels = 6;
    cfg.context_channels = 8;
    cfg.qk_channels = 4;
    cfg.enc_hidden = {4, 6};
    cfg.radius = 1;
    cfg.levels = 1;
    cfg.iterations = 2;
    cfg.gate_mode = mode;
    cfg.lift_enabled = true;
    return cfg;
}

namespace {

FeatureMap<double> random_image(int h, int w, std::mt19937& rng) {
    FeatureMap<double> img(3, h, w);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (double& v : img.data) v = dist(rng);
    return img;
}

struct CheckProblem {
    ImagePair<double> pair;
    FlowField<double> gt;         // coarse-grid target
    FlowField<double> init_flow;  // off-lattice start
};

// The bilinear lookup is piecewise linear with kinks on the integer lattice,
// where central differences are ill-defined; the probe therefore starts the
// flow off-lattice and drives it toward an off-lattice target.
CheckProblem make_check_problem(uint32_t seed, int img) {
    std::mt19937 rng(seed * 7919u + 13u);
    CheckProblem p;
    p.pair.reference = random_image(img, img, rng);
    p.pair.target = random_image(img, img, rng);
    const int gh = img / 8, gw = img / 8;
    p.gt = FlowField<double>(gh, gw);
    p.init_flow = FlowField<double>(gh, gw);
    std::uniform_real_distribution<double> disp(-1.25, 1.25);
    std::uniform_real_distribution<double> start(0.15, 0.85);
    for (size_t n = 0; n < p.gt.u.size(); ++n) {
        p.gt.u[n] = disp(rng);
        p.gt.v[n] = disp(rng);
        p.init_flow.u[n] = start(rng);
        p.init_flow.v[n] = start(rng);
    }
    return p;
}

}  // namespace

std::pair<double, std::vector<FlowField<double>>> sequence_loss(
    const std::vector<FlowField<double>>& flows, const FlowField<double>& gt,
    double gamma) {
    const int n_iters = static_cast<int>(flows.size());
    const double eps = 1e-12;
    double loss = 0.0;
    std::vector<FlowField<double>> grads(n_iters);
    for (int i = 0; i < n_iters; ++i) {
        const FlowField<double>& f = flows[i];
        if (f.height != gt.height || f.width != gt.width)
            throw DimensionError("sequence_loss: flow/gt dims mismatch");
        const double w = std::pow(gamma, n_iters - 1 - i);
        const double inv_cells = 1.0 / static_cast<double>(f.size());
        grads[i] = FlowField<double>(f.height, f.width);
        for (size_t n = 0; n < f.size(); ++n) {
            const double du = f.u[n] - gt.u[n];
            const double dv = f.v[n] - gt.v[n];
            const double dist = std::sqrt(du * du + dv * dv + eps);
            loss += w * inv_cells * dist;
            grads[i].u[n] = w * inv_cells * du / dist;
            grads[i].v[n] = w * inv_cells * dv / dist;
        }
    }
    return {loss, std::move(grads)};
}

std::vector<GradReport> check_all(const ModelConfig& cfg, uint32_t seed) {
    return check_all_sized(cfg, seed, 16);  // 2x2 coarse grid
}

std::vector<GradReport> check_all_sized(const ModelConfig& cfg, uint32_t seed,
                                        int image_size) {
    Model<double> model = make_model<double>(cfg);
    CheckProblem prob = make_check_problem(seed, image_size);
    const double gamma = 0.8;

    auto loss_fn = [&]() {
        std::vector<FlowField<double>> flows = model_forward<double>(
            prob.pair, model, cfg.iterations, nullptr, &prob.init_flow);
        return sequence_loss(flows, prob.gt, gamma).first;
    };

    ModelTrace<double> trace;
    std::vector<FlowField<double>> flows = model_forward(
        prob.pair, model, cfg.iterations, &trace, &prob.init_flow);
    auto [loss, grad_flows] = sequence_loss(flows, prob.gt, gamma);
    (void)loss;
    Model<double> analytic = model_backward(model, trace, grad_flows);

    std::vector<GradReport> reports;
    auto params = param_refs(model);
    auto agrads = param_refs(analytic);
    for (size_t i = 0; i < params.size(); ++i) {
        std::vector<double> numeric = finite_diff(
            loss_fn, params[i].data, params[i].size, Tolerances::fd_step);
        std::vector<double> a(agrads[i].data, agrads[i].data + agrads[i].size);
        reports.push_back(compare_grads(params[i].name, a, numeric));
    }
    return reports;
}

FlowField<double> downsample_gt(const FlowField<double>& gt_full) {
    if (gt_full.height % 8 != 0 || gt_full.width % 8 != 0)
        throw DimensionError("downsample_gt: dims must be multiples of 8");
    const int gh = gt_full.height / 8;
    const int gw = gt_full.width / 8;
    FlowField<double> out(gh, gw);
    for (int y = 0; y < gh; ++y)
        for (int x = 0; x < gw; ++x) {
            double su = 0.0, sv = 0.0;
            for (int by = 0; by < 8; ++by)
                for (int bx = 0; bx < 8; ++bx) {
                    su += gt_full.u_at(8 * x + bx, 8 * y + by);
                    sv += gt_full.v_at(8 * x + bx, 8 * y + by);
                }
            // mean displacement, rescaled to coarse cells
            out.u_at(x, y) = su / 64.0 / 8.0;
            out.v_at(x, y) = sv / 64.0 / 8.0;
        }
    return out;
}

double mean_epe(const FlowField<double>& flow, const FlowField<double>& gt) {
    if (flow.height != gt.height || flow.width != gt.width)
        throw DimensionError("mean_epe: dims mismatch");
    double acc = 0.0;
    for (size_t n = 0; n < flow.size(); ++n) {
        const double du = flow.u[n] - gt.u[n];
        const double dv = flow.v[n] - gt.v[n];
        acc += std::sqrt(du * du + dv * dv);
    }
    return acc / static_cast<double>(flow.size());
}

double evaluate_epe(const Model<double>& model,
                    const std::vector<TrainSample>& samples) {
    double acc = 0.0;
    RefineConfig rcfg{model.cfg.iterations, model.cfg.net_channels()};
    for (const TrainSample& s : samples) {
        FeatureMap<double> g1 = encode_matching(s.pair.reference, model.match_enc);
        FeatureMap<double> g2 = encode_matching(s.pair.target, model.match_enc);
        ContextBundle<double> ctx = encode_context(s.pair, model.ctx_enc);
        FlowField<double> flow =
            run_refinement(g1, g2, ctx, model, rcfg, PadRecord{},
                           s.pair.reference.height, s.pair.reference.width);
        acc += mean_epe(flow, s.gt_full);
    }
    return acc / static_cast<double>(samples.size());
}

TrainResult train_toy(const std::vector<TrainSample>& samples,
                      const ModelConfig& cfg, int epochs, double lr,
                      double gamma, double clip_norm,
                      std::function<void(int, double)> on_epoch) {
    if (samples.empty()) throw ConfigError("train_toy: empty dataset");
    TrainResult res;
    res.model = make_model<double>(cfg);
    res.loss_trace.reserve(epochs);
    const double inv_n = 1.0 / static_cast<double>(samples.size());

    std::vector<FlowField<double>> gts_coarse;
    gts_coarse.reserve(samples.size());
    for (const TrainSample& s : samples) gts_coarse.push_back(downsample_gt(s.gt_full));

    for (int epoch = 0; epoch < epochs; ++epoch) {
        Model<double> grads = make_zero_like(res.model);
        double epoch_loss = 0.0;
        for (size_t i = 0; i < samples.size(); ++i) {
            ModelTrace<double> trace;
            std::vector<FlowField<double>> flows = model_forward(
                samples[i].pair, res.model, cfg.iterations, &trace);
            auto [loss, grad_flows] = sequence_loss(flows, gts_coarse[i], gamma);
            if (!std::isfinite(loss))
                throw EvaluationError("train_toy: loss diverged (NaN/Inf) at epoch " +
                                      std::to_string(epoch));
            epoch_loss += loss;
            Model<double> g = model_backward(res.model, trace, grad_flows);
            axpy_params(grads, g, 1.0);
        }
        scale_params(grads, inv_n);
        if (clip_norm > 0.0) {
            double norm2 = 0.0;
            for (const auto& r : param_refs(grads))
                for (size_t n = 0; n < r.size; ++n)
                    norm2 += r.data[n] * r.data[n];
            const double norm = std::sqrt(norm2);
            if (norm > clip_norm) scale_params(grads, clip_norm / norm);
        }
        axpy_params(res.model, grads, -lr);
        epoch_loss *= inv_n;
        res.loss_trace.push_back(epoch_loss);
        if (on_epoch) on_epoch(epoch, epoch_loss);
    }
    return res;
}

}  // namespace cgcv
