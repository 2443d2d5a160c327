#pragma once

namespace cgcv {

enum class Precision { Single, Double };

// Every tolerance and threshold used by the library and its test oracles,
// kept in one record so single/double expectations stay consistent.
struct Tolerances {
    // kernel-vs-oracle agreement
    static constexpr double oracle_rel_single = 1e-5;
    static constexpr double oracle_rel_double = 1e-12;

    // gradient checking (double precision only)
    static constexpr double gradcheck_rel = 1e-4;
    static constexpr double gradcheck_abs = 1e-7;
    static constexpr double gradcheck_small_grad = 1e-6;
    static constexpr double fd_step = 1e-5;

    // structural checks
    static constexpr double softmax_plane_sum = 1e-5;
    static constexpr double pool_mean_drift = 1e-6;
    static constexpr double pyramid_mean_drift = 1e-5;
    static constexpr double frame_swap_symmetry = 1e-6;
};

}  // namespace cgcv
