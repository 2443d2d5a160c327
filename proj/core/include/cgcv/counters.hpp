#pragma once

#include <cstdint>

namespace cgcv::counters {

// Invocation counts of the volume-construction kernels. The refinement loop
// must never touch these after its initial forward pass; tests pin that down
// by comparing snapshots across iteration counts.
struct KernelCounts {
    uint64_t build_all_pairs = 0;
    uint64_t project_qk = 0;
    uint64_t cross_attention = 0;
    uint64_t gate = 0;
    uint64_t context_correlation = 0;
    uint64_t assemble = 0;

    friend bool operator==(const KernelCounts&, const KernelCounts&) = default;
};

KernelCounts snapshot();
void reset();

namespace detail {
void bump_build_all_pairs();
void bump_project_qk();
void bump_cross_attention();
void bump_gate();
void bump_context_correlation();
void bump_assemble();
}  // namespace detail

}  // namespace cgcv::counters
