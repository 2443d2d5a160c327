#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cgcv/refine.hpp"

namespace cgcv {

struct GradReport {
    std::string name;
    double max_rel = 0.0;
    double max_abs = 0.0;
    bool pass = false;
};

// "name max_rel max_abs PASS|FAIL"
std::string format_report(const GradReport& r);

// Central differences (f(x+h) - f(x-h)) / 2h per coordinate. The parameter
// is restored after each probe. Double precision only.
std::vector<double> finite_diff(const std::function<double()>& loss,
                                double* param, size_t count, double step);

// Applies the pass rule: rel <= 1e-4 wherever gradients are sizeable, and
// abs <= 1e-7 wherever the analytic gradient lies below 1e-6.
GradReport compare_grads(const std::string& name,
                         const std::vector<double>& analytic,
                         const std::vector<double>& numeric);

// Desk-scale configuration for the harness (2x2 grid, <= 16 channels).
ModelConfig gradcheck_config(GateMode mode);

// Sweeps every learnable tensor of a freshly seeded model under the full
// forward pipeline and an endpoint-error style loss.
std::vector<GradReport> check_all(const ModelConfig& cfg, uint32_t seed);

// As check_all with an explicit probe image size (a multiple of 8).
std::vector<GradReport> check_all_sized(const ModelConfig& cfg, uint32_t seed,
                                        int image_size);

bool all_pass(const std::vector<GradReport>& reports);

// --- toy training -----------------------------------------------------

struct TrainSample {
    ImagePair<double> pair;     // aligned (multiple-of-8) dims
    FlowField<double> gt_full;  // full-resolution ground truth
};

struct TrainResult {
    Model<double> model;
    std::vector<double> loss_trace;  // one entry per epoch
};

// Block-means the full-resolution field onto the coarse grid, in cells.
FlowField<double> downsample_gt(const FlowField<double>& gt_full);

// Iteration-weighted endpoint-error loss (weights gamma^(N-1-i)) and its
// gradient on every iteration's coarse flow.
std::pair<double, std::vector<FlowField<double>>> sequence_loss(
    const std::vector<FlowField<double>>& flows, const FlowField<double>& gt,
    double gamma);

// Plain gradient descent on the sequence loss, batched over all samples.
// The batch gradient's global norm is capped at clip_norm; descent keeps
// its direction and the cap only engages away from the stable regime.
TrainResult train_toy(const std::vector<TrainSample>& samples,
                      const ModelConfig& cfg, int epochs, double lr,
                      double gamma = 0.8, double clip_norm = 1.0,
                      std::function<void(int, double)> on_epoch = {});

// Mean full-resolution endpoint error of the refined flow over a dataset.
double evaluate_epe(const Model<double>& model,
                    const std::vector<TrainSample>& samples);

double mean_epe(const FlowField<double>& flow, const FlowField<double>& gt);

}  // namespace cgcv
