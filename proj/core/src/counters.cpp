#include "cgcv/counters.hpp"

#include <atomic>

namespace cgcv::counters {

namespace {
std::atomic<uint64_t> g_build_all_pairs{0};
std::atomic<uint64_t> g_project_qk{0};
std::atomic<uint64_t> g_cross_attention{0};
std::atomic<uint64_t> g_gate{0};
std::atomic<uint64_t> g_context_correlation{0};
std::atomic<uint64_t> g_assemble{0};
}  // namespace

KernelCounts snapshot() {
    KernelCounts c;
    c.build_all_pairs = g_build_all_pairs.load();
    c.project_qk = g_project_qk.load();
    c.cross_attention = g_cross_attention.load();
    c.gate = g_gate.load();
    c.context_correlation = g_context_correlation.load();
    c.assemble = g_assemble.load();
    return c;
}

void reset() {
    g_build_all_pairs = 0;
    g_project_qk = 0;
    g_cross_attention = 0;
    g_gate = 0;
    g_context_correlation = 0;
    g_assemble = 0;
}

namespace detail {
void bump_build_all_pairs() { g_build_all_pairs.fetch_add(1); }
void bump_project_qk() { g_project_qk.fetch_add(1); }
void bump_cross_attention() { g_cross_attention.fetch_add(1); }
void bump_gate() { g_gate.fetch_add(1); }
void bump_context_correlation() { g_context_correlation.fetch_add(1); }
void bump_assemble() { g_assemble.fetch_add(1); }
}  // namespace detail

}  // namespace cgcv::counters
