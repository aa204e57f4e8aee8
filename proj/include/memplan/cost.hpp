#pragma once

#include <cstdint>
#include <vector>

#include "memplan/hardware.hpp"
#include "memplan/layout.hpp"
#include "memplan/trace.hpp"

namespace memplan {

struct CostOptions {
  // Fragmentation headroom applied to the full peak-memory sum.
  double alpha = 1.05;
};

// Bytes a persistent chunk occupies on the device: fp16 params + fp16 grads
// + fp32 params/momentum/variance, i.e. 8x the fp16 chunk payload. A chunk
// buffer only hosts the gathered fp16 working copy.
std::int64_t persistent_chunk_bytes(std::int64_t s_chunk);
inline std::int64_t buffer_chunk_bytes(std::int64_t s_chunk) { return s_chunk; }

// One pipeline stage of the forward or backward sum. `chosen` is the max of
// the competing terms.
struct StageTerm {
  int chunk = 0;  // 1-based; 0 marks a boundary stage
  double comp = 0;
  double recomp = 0;
  double prefetch = 0;
  double reduce_offload = 0;
  double chosen = 0;
};

struct PeakMemoryBreakdown {
  std::int64_t replay_peak = 0;        // residual + activation replay
  std::int64_t model_state_bytes = 0;  // persistent chunks + buffers
  std::int64_t before_alpha = 0;       // replay_peak + model_state_bytes
  std::int64_t total = 0;              // after the fragmentation factor
};

struct CostEstimate {
  double t_fwd = 0;
  double t_bwd = 0;
  double t_gpu_optim = 0;
  double t_cpu_optim = 0;
  double t_iter = 0;
  std::int64_t m_peak = 0;
  std::int64_t m_peak_before_alpha = 0;
  std::vector<StageTerm> fwd_stages;
  std::vector<StageTerm> bwd_stages;
};

// Forward runtime: sum over stages of max(compute of the previous chunk,
// prefetch of the next). Prefetch is gather + upload of the rank's shard;
// uploads whose stage window overlaps an in-flight activation swap-out run
// at half H2D bandwidth.
double estimate_fwd(const ModelTrace& trace, const ChunkLayout& layout,
                    const BlockSchedule& schedule, const PlanConfig& config,
                    const HardwareProfile& hw,
                    std::vector<StageTerm>* stages = nullptr);

// Backward runtime: chunks are visited in reverse; each stage takes the max
// of compute-plus-recompute, the next chunk's prefetch (zero for chunks
// still buffered from the forward pass), and the previous chunk's gradient
// reduce/offload. The final stage carries the last drain.
double estimate_bwd(const ModelTrace& trace, const ChunkLayout& layout,
                    const BlockSchedule& schedule, const PlanConfig& config,
                    const HardwareProfile& hw,
                    std::vector<StageTerm>* stages = nullptr);

// GPU update time for persistent parameters, CPU update time for the rest.
std::pair<double, double> estimate_optim(const ChunkLayout& layout,
                                         const PlanConfig& config,
                                         const HardwareProfile& hw);

// Backward-replay peak-memory estimate. Starts from the end-of-forward
// state with swap/checkpoint savings applied, replays operators in reverse
// applying the profiled deltas, adds the checkpoint recompute bump at each
// checkpointed block's first replayed operator, then adds model states and
// the fragmentation factor.
PeakMemoryBreakdown estimate_peak_memory(const ModelTrace& trace,
                                         const BlockSchedule& schedule,
                                         const PlanConfig& config,
                                         const HardwareProfile& hw,
                                         const CostOptions& opts = {});

CostEstimate estimate_iteration(const ModelTrace& trace,
                                const ChunkLayout& layout,
                                const BlockSchedule& schedule,
                                const PlanConfig& config,
                                const HardwareProfile& hw,
                                const CostOptions& opts = {});

// Mean per-block savings used by the peak-memory model (floored means over
// all blocks).
std::int64_t mean_block_act_bytes(const ModelTrace& trace);
std::int64_t mean_block_boundary_bytes(const ModelTrace& trace);

}  // namespace memplan
