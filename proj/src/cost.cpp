#include "memplan/cost.hpp"

#include <algorithm>
#include <cmath>

#include "memplan/errors.hpp"

namespace memplan {

std::int64_t persistent_chunk_bytes(std::int64_t s_chunk) { return 8 * s_chunk; }

namespace {

struct Window {
  double begin = 0;
  double end = 0;
  bool overlaps(const Window& o) const { return begin < o.end && o.begin < end; }
};

std::int64_t shard_bytes(std::int64_t bytes, int world_size) {
  return bytes / world_size;
}

// Per-chunk compute times from the chunk spans (spans partition all ops, so
// zero-parameter operators are charged to their enclosing chunk).
std::vector<double> chunk_times(const ModelTrace& trace,
                                const ChunkLayout& layout, bool backward) {
  std::vector<double> t(layout.chunks.size() + 1, 0.0);  // 1-based
  for (const auto& c : layout.chunks) {
    double s = 0;
    for (int i = c.first_op; i <= c.last_op; ++i)
      s += backward ? trace.ops[i].t_bwd : trace.ops[i].t_fwd;
    t[c.chunk_id + 1] = s;
  }
  return t;
}

// Forward completion time of each block on the pure compute timeline.
std::vector<double> block_fwd_end(const ModelTrace& trace) {
  std::vector<double> end(trace.n_blocks, 0.0);
  double cum = 0;
  for (const auto& op : trace.ops) {
    cum += op.t_fwd;
    if (op.block_id) end[*op.block_id] = cum;
  }
  return end;
}

// Backward start time of each block on the pure (recompute-free) reverse
// compute timeline.
std::vector<double> block_bwd_start(const ModelTrace& trace) {
  std::vector<double> start(trace.n_blocks, 0.0);
  double cum = 0;
  for (auto it = trace.ops.rbegin(); it != trace.ops.rend(); ++it) {
    if (it->block_id) start[*it->block_id] = cum;
    cum += it->t_bwd;
  }
  return start;
}

std::vector<std::int64_t> per_block_act(const ModelTrace& trace) {
  std::vector<std::int64_t> act(trace.n_blocks, 0);
  for (const auto& op : trace.ops)
    if (op.block_id) act[*op.block_id] += op.act_bytes;
  return act;
}

}  // namespace

std::int64_t mean_block_act_bytes(const ModelTrace& trace) {
  if (trace.n_blocks == 0) return 0;
  std::int64_t total = 0;
  for (const auto& op : trace.ops)
    if (op.block_id) total += op.act_bytes;
  return total / trace.n_blocks;
}

std::int64_t mean_block_boundary_bytes(const ModelTrace& trace) {
  if (trace.n_blocks == 0) return 0;
  std::int64_t total = 0;
  int seen = -1;
  for (const auto& op : trace.ops) {
    if (op.block_id && *op.block_id != seen) {
      total += op.act_bytes;
      seen = *op.block_id;
    }
  }
  return total / trace.n_blocks;
}

double estimate_fwd(const ModelTrace& trace, const ChunkLayout& layout,
                    const BlockSchedule& schedule, const PlanConfig& config,
                    const HardwareProfile& hw, std::vector<StageTerm>* stages) {
  config.validate();
  const int n = layout.n_chunk();
  const auto comp = chunk_times(trace, layout, /*backward=*/false);

  // Swap-out windows on the compute timeline: a swap block's activations
  // leave via D2H starting at that block's forward completion.
  std::vector<Window> swap_out;
  const auto fwd_end = block_fwd_end(trace);
  const auto acts = per_block_act(trace);
  for (int b = 0; b < static_cast<int>(schedule.strategies.size()); ++b) {
    if (schedule.strategies[b] != BlockStrategy::Swap) continue;
    const double dur = transfer_time(acts[b], hw.d2h_bw);
    swap_out.push_back({fwd_end[b], fwd_end[b] + dur});
  }

  // Cumulative compute gives each prefetch its stage window: chunk i is
  // fetched while chunk i-1 computes.
  std::vector<double> cum(n + 1, 0.0);
  for (int i = 1; i <= n; ++i) cum[i] = cum[i - 1] + comp[i];

  double total = 0;
  if (stages) stages->clear();
  for (int s = 1; s <= n + 1; ++s) {
    const double c = (s - 1 >= 1) ? comp[s - 1] : 0.0;
    double pf = 0;
    if (s > config.n_persist && s <= n) {
      const Window win{s >= 2 ? cum[s - 2] : 0.0, s >= 2 ? cum[s - 1] : 0.0};
      bool contended = false;
      for (const auto& w : swap_out) contended = contended || win.overlaps(w);
      const double h2d =
          contended ? contended_bandwidth(hw.h2d_bw, 2) : hw.h2d_bw;
      const std::int64_t bytes = layout.chunks[s - 1].used_bytes;
      pf = gather_time(bytes, hw) +
           transfer_time(shard_bytes(bytes, hw.world_size), h2d);
    }
    const double chosen = std::max(c, pf);
    total += chosen;
    if (stages) stages->push_back({s - 1, c, 0, pf, 0, chosen});
  }
  return total;
}

double estimate_bwd(const ModelTrace& trace, const ChunkLayout& layout,
                    const BlockSchedule& schedule, const PlanConfig& config,
                    const HardwareProfile& hw, std::vector<StageTerm>* stages) {
  config.validate();
  const int n = layout.n_chunk();
  const auto comp = chunk_times(trace, layout, /*backward=*/true);

  // Recompute cost per chunk: each checkpointed block charges its forward
  // time to the chunk holding its parameters.
  std::vector<double> block_fwd(trace.n_blocks, 0.0);
  for (const auto& op : trace.ops)
    if (op.block_id) block_fwd[*op.block_id] += op.t_fwd;
  std::vector<double> recomp(n + 1, 0.0);
  for (const auto& c : layout.chunks)
    for (int b : c.block_ids)
      if (schedule.strategies[b] == BlockStrategy::Checkpoint)
        recomp[c.chunk_id + 1] += block_fwd[b];

  // Swap-in windows on the reverse compute timeline: a swapped block's
  // activations return just ahead of its backward computation.
  std::vector<Window> swap_in;
  const auto bwd_start = block_bwd_start(trace);
  const auto acts = per_block_act(trace);
  for (int b = 0; b < static_cast<int>(schedule.strategies.size()); ++b) {
    if (schedule.strategies[b] != BlockStrategy::Swap) continue;
    const double dur = transfer_time(acts[b], hw.h2d_bw);
    swap_in.push_back({std::max(0.0, bwd_start[b] - dur), bwd_start[b]});
  }

  // Reverse cumulative compute: rev[c] = time spent before chunk c's
  // backward begins.
  std::vector<double> rev(n + 2, 0.0);
  for (int c = n; c >= 1; --c) rev[c] = rev[c + 1] + comp[c];

  const auto prefetch = [&](int c) -> double {
    if (c < 1 || c > n) return 0.0;
    if (c <= config.n_persist) return 0.0;
    if (c > n - config.n_buffer) return 0.0;  // still buffered from forward
    const Window win{rev[c + 2], rev[c + 1]};  // spans chunk c+1's stage
    bool contended = false;
    for (const auto& w : swap_in) contended = contended || win.overlaps(w);
    const double h2d = contended ? contended_bandwidth(hw.h2d_bw, 2) : hw.h2d_bw;
    const std::int64_t bytes = layout.chunks[c - 1].used_bytes;
    return gather_time(bytes, hw) +
           transfer_time(shard_bytes(bytes, hw.world_size), h2d);
  };
  const auto reduce_offload = [&](int c) -> double {
    if (c < 1 || c > n) return 0.0;
    const std::int64_t bytes = layout.chunks[c - 1].used_bytes;
    double t = reduce_time(bytes, hw);
    if (c > config.n_persist)
      t += transfer_time(shard_bytes(bytes, hw.world_size), hw.d2h_bw);
    return t;
  };

  double total = 0;
  if (stages) stages->clear();
  for (int p = 1; p <= n + 1; ++p) {
    const int c = n + 1 - p;  // chunk computed at this stage (0 = boundary)
    const double comp_c = c >= 1 ? comp[c] : 0.0;
    const double rc = c >= 1 ? recomp[c] : 0.0;
    const double pf = prefetch(c - 1);
    const double ro = reduce_offload(c + 1);
    const double chosen = std::max({comp_c + rc, pf, ro});
    total += chosen;
    if (stages) stages->push_back({c, comp_c, rc, pf, ro, chosen});
  }
  return total;
}

std::pair<double, double> estimate_optim(const ChunkLayout& layout,
                                         const PlanConfig& config,
                                         const HardwareProfile& hw) {
  std::int64_t persist_bytes = 0;
  for (int i = 0; i < config.n_persist && i < layout.n_chunk(); ++i)
    persist_bytes += layout.chunks[i].used_bytes;
  const std::int64_t total_bytes = layout.used_total();
  const double persist_params =
      static_cast<double>(persist_bytes) / layout.bytes_per_param;
  const double offload_params =
      static_cast<double>(total_bytes - persist_bytes) / layout.bytes_per_param;
  return {persist_params / hw.gpu_optim_rate,
          offload_params / hw.cpu_optim_rate};
}

PeakMemoryBreakdown estimate_peak_memory(const ModelTrace& trace,
                                         const BlockSchedule& schedule,
                                         const PlanConfig& config,
                                         const HardwareProfile& hw,
                                         const CostOptions& opts) {
  (void)hw;
  config.validate();
  if (static_cast<int>(schedule.strategies.size()) != trace.n_blocks)
    throw InvariantViolation("schedule size does not match trace block count");
  if (schedule.n_swap() != config.n_swap ||
      schedule.n_checkpoint() != config.n_checkpoint)
    throw InvariantViolation("schedule strategy counts disagree with config");

  const std::int64_t m_swap = mean_block_act_bytes(trace);
  const std::int64_t m_ckpt = m_swap - mean_block_boundary_bytes(trace);

  std::int64_t cur = trace.m_fwd + trace.total_act_bytes() -
                     m_swap * config.n_swap - m_ckpt * config.n_checkpoint;
  std::int64_t peak = cur;

  const auto strategy = [&](const OperatorRecord& op) {
    if (!op.block_id) return BlockStrategy::None;
    return schedule.strategies[*op.block_id];
  };

  // Reverse replay; the recompute bump lands on the first operator of each
  // checkpointed block encountered in replay order (the block's backward
  // entry point).
  int pending_block = -1;
  for (auto it = trace.ops.rbegin(); it != trace.ops.rend(); ++it) {
    const OperatorRecord& op = *it;
    std::int64_t bump = 0;
    if (op.block_id && strategy(op) == BlockStrategy::Checkpoint &&
        *op.block_id != pending_block) {
      bump = m_ckpt;
    }
    if (op.block_id) pending_block = *op.block_id;

    peak = std::max(peak, cur + op.d_peak_prior);
    peak = std::max(peak, cur + op.d_cur_prior + op.d_peak_op + bump);
    cur += op.d_cur_prior + op.d_cur_op;
    if (strategy(op) == BlockStrategy::None) cur -= op.act_bytes;
  }

  PeakMemoryBreakdown out;
  out.replay_peak = peak;
  out.model_state_bytes =
      persistent_chunk_bytes(config.s_chunk) * config.n_persist +
      buffer_chunk_bytes(config.s_chunk) * config.n_buffer;
  out.before_alpha = out.replay_peak + out.model_state_bytes;
  out.total = static_cast<std::int64_t>(
      std::llround(opts.alpha * static_cast<double>(out.before_alpha)));
  return out;
}

CostEstimate estimate_iteration(const ModelTrace& trace,
                                const ChunkLayout& layout,
                                const BlockSchedule& schedule,
                                const PlanConfig& config,
                                const HardwareProfile& hw,
                                const CostOptions& opts) {
  CostEstimate e;
  e.t_fwd = estimate_fwd(trace, layout, schedule, config, hw, &e.fwd_stages);
  e.t_bwd = estimate_bwd(trace, layout, schedule, config, hw, &e.bwd_stages);
  std::tie(e.t_gpu_optim, e.t_cpu_optim) = estimate_optim(layout, config, hw);
  e.t_iter = e.t_fwd + std::max(e.t_bwd + e.t_gpu_optim, e.t_cpu_optim);
  const auto mem = estimate_peak_memory(trace, schedule, config, hw, opts);
  e.m_peak = mem.total;
  e.m_peak_before_alpha = mem.before_alpha;
  return e;
}

}  // namespace memplan
