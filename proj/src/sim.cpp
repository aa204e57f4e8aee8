#include "memplan/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <ostream>

#include <json.hpp>

#include "memplan/errors.hpp"

namespace memplan {

namespace {

constexpr std::int64_t kInfTime = std::numeric_limits<std::int64_t>::max();

std::int64_t to_ns(double seconds) {
  return std::llround(seconds * 1e9);
}

// Equal-share (processor-sharing) link. All active transfers progress at
// bw / n_active; membership changes re-balance the shares.
class Link {
 public:
  Link(std::string name, double bw) : name_(std::move(name)), bw_(bw) {}

  const std::string& name() const { return name_; }

  void advance(std::int64_t now_ns) {
    if (now_ns <= last_ns_) {
      last_ns_ = std::max(last_ns_, now_ns);
      return;
    }
    if (!xfers_.empty()) {
      const double elapsed = static_cast<double>(now_ns - last_ns_) * 1e-9;
      const double share = bw_ / static_cast<double>(xfers_.size());
      for (auto& x : xfers_) x.remaining = std::max(0.0, x.remaining - elapsed * share);
    }
    last_ns_ = now_ns;
  }

  void add(int id, double bytes) { xfers_.push_back({id, std::max(0.0, bytes)}); }

  void remove(int id) {
    xfers_.erase(std::remove_if(xfers_.begin(), xfers_.end(),
                                [&](const Xfer& x) { return x.id == id; }),
                 xfers_.end());
  }

  // Earliest completion (time, id); id ties go to the lower id.
  std::optional<std::pair<std::int64_t, int>> next_completion() const {
    if (xfers_.empty()) return std::nullopt;
    const double share = bw_ / static_cast<double>(xfers_.size());
    double best_t = std::numeric_limits<double>::infinity();
    int best_id = -1;
    for (const auto& x : xfers_) {
      const double t = x.remaining / share;
      if (t < best_t || (t == best_t && x.id < best_id)) {
        best_t = t;
        best_id = x.id;
      }
    }
    return std::make_pair(last_ns_ + to_ns(best_t), best_id);
  }

  bool busy() const { return !xfers_.empty(); }

 private:
  struct Xfer {
    int id;
    double remaining;
  };
  std::string name_;
  double bw_;
  std::vector<Xfer> xfers_;
  std::int64_t last_ns_ = 0;
};

enum class ChunkState { OffDevice, Fetching, Resident, Draining };

enum class XferKind { Gather, Upload, Reduce, Offload, SwapOut, SwapIn };

const char* xfer_name(XferKind k) {
  switch (k) {
    case XferKind::Gather: return "gather";
    case XferKind::Upload: return "upload";
    case XferKind::Reduce: return "reduce";
    case XferKind::Offload: return "offload";
    case XferKind::SwapOut: return "swap_out";
    case XferKind::SwapIn: return "swap_in";
  }
  return "?";
}

struct Sim {
  const ModelTrace& trace;
  const ChunkLayout& layout;
  const BlockSchedule& schedule;
  const PlanConfig& cfg;
  const HardwareProfile& hw;

  explicit Sim(const ModelTrace& t, const ChunkLayout& l,
               const BlockSchedule& s, const PlanConfig& c,
               const HardwareProfile& h)
      : trace(t), layout(l), schedule(s), cfg(c), hw(h),
        h2d("h2d", h.h2d_bw), d2h("d2h", h.d2h_bw), coll("coll", h.coll_bw) {}

  // --- static structure -----------------------------------------------
  int n_ops = 0, n_chunks = 0, n_blocks = 0;
  std::vector<int> chunk_of_op;           // 1-based
  std::vector<std::int64_t> chunk_used;   // 1-based
  std::vector<std::int64_t> block_act;    // per block
  std::vector<int> block_first_op, block_last_op;

  struct Task {
    enum Kind { FwdOp, BwdOp, Recompute, GpuOptim } kind;
    int op = -1;
    int block = -1;
    int chunk = 0;
    double dur = 0;
    int position = 0;
  };
  std::vector<Task> tasks;
  std::size_t next_task = 0;

  int position_of_chunk_fwd(int c) const { return c; }
  int position_of_chunk_bwd(int c) const { return 2 * n_chunks - c + 1; }
  int chunk_at_position(int p) const {
    return p <= n_chunks ? p : 2 * n_chunks - p + 1;
  }

  BlockStrategy strategy_of(const OperatorRecord& op) const {
    if (!op.block_id) return BlockStrategy::None;
    return schedule.strategies[*op.block_id];
  }

  // --- dynamic state ----------------------------------------------------
  std::int64_t now = 0;
  Link h2d, d2h, coll;

  std::vector<ChunkState> cstate;  // 1-based
  int free_slots = 0;
  std::vector<int> gpu_work_left;    // per chunk, bwd-phase tasks
  std::vector<bool> reduce_done;     // per chunk (persistent gate)
  std::deque<int> want_fetch;        // chunks awaiting prefetch, need order
  int fetch_in_flight = 0;           // chunk id, 0 = none
  int considered_pos = 0;

  // transfer bookkeeping
  struct Transfer {
    XferKind kind;
    int chunk = 0;   // for chunk transfers
    int block = -1;  // for swaps
    int op = -1;     // for swap sub-transfers
    double bytes = 0;
  };
  std::map<int, Transfer> transfers;
  int next_xfer_id = 1;
  // latency stage before a collective joins the link: (ready_ns, id)
  std::vector<std::pair<std::int64_t, int>> latency_wait;

  // swap state
  std::vector<bool> swap_out_done, swap_in_issued;
  std::vector<char> act_present;  // per op, swap blocks only
  int lowest_block_entered = std::numeric_limits<int>::max();
  bool bwd_started = false;

  // gpu / cpu
  bool gpu_running = false;
  std::int64_t gpu_done_at = kInfTime;
  std::deque<std::pair<int, double>> cpu_queue;  // chunk, duration
  bool cpu_running = false;
  int cpu_chunk = 0;
  std::int64_t cpu_done_at = kInfTime;
  std::int64_t first_cpu_start = -1, last_cpu_end = 0;
  std::int64_t last_fwd_end = 0, last_bwd_end = 0, last_gpu_end = 0;

  // ledger
  std::int64_t cur = 0, peak = 0;
  std::vector<MemSample> mem;
  std::vector<TimelineEvent> timeline;

  void log(const std::string& res, const std::string& ev, const std::string& subj) {
    timeline.push_back({now, res, ev, subj});
  }

  void ledger_add(std::int64_t d) {
    cur += d;
    if (cur < 0) throw LedgerUnderflow("allocated bytes went negative");
    peak = std::max(peak, cur);
    if (!mem.empty() && mem.back().time_ns == now)
      mem.back().bytes = cur;
    else
      mem.push_back({now, cur});
  }

  void ledger_touch(std::int64_t extra) { peak = std::max(peak, cur + extra); }

  // --- construction -----------------------------------------------------
  void build() {
    n_ops = static_cast<int>(trace.ops.size());
    n_chunks = layout.n_chunk();
    n_blocks = trace.n_blocks;

    chunk_of_op.assign(n_ops, 0);
    for (int i = 0; i < n_ops; ++i) chunk_of_op[i] = layout.chunk_of_op(i);
    chunk_used.assign(n_chunks + 1, 0);
    for (const auto& c : layout.chunks) chunk_used[c.chunk_id + 1] = c.used_bytes;

    block_act.assign(std::max(1, n_blocks), 0);
    block_first_op.assign(std::max(1, n_blocks), -1);
    block_last_op.assign(std::max(1, n_blocks), -1);
    for (const auto& op : trace.ops) {
      if (!op.block_id) continue;
      const int b = *op.block_id;
      block_act[b] += op.act_bytes;
      if (block_first_op[b] < 0) block_first_op[b] = op.index;
      block_last_op[b] = op.index;
    }

    std::vector<double> block_fwd_time(std::max(1, n_blocks), 0.0);
    for (const auto& op : trace.ops)
      if (op.block_id) block_fwd_time[*op.block_id] += op.t_fwd;

    for (int i = 0; i < n_ops; ++i) {
      tasks.push_back({Task::FwdOp, i, trace.ops[i].block_id.value_or(-1),
                       chunk_of_op[i], trace.ops[i].t_fwd,
                       position_of_chunk_fwd(chunk_of_op[i])});
    }
    for (int i = n_ops - 1; i >= 0; --i) {
      const auto& op = trace.ops[i];
      if (op.block_id && strategy_of(op) == BlockStrategy::Checkpoint &&
          i == block_last_op[*op.block_id]) {
        tasks.push_back({Task::Recompute, -1, *op.block_id, chunk_of_op[i],
                         block_fwd_time[*op.block_id],
                         position_of_chunk_bwd(chunk_of_op[i])});
      }
      tasks.push_back({Task::BwdOp, i, op.block_id.value_or(-1), chunk_of_op[i],
                       op.t_bwd, position_of_chunk_bwd(chunk_of_op[i])});
    }
    for (int c = 1; c <= cfg.n_persist; ++c) {
      tasks.push_back({Task::GpuOptim, -1, -1, c,
                       static_cast<double>(chunk_used[c]) /
                           layout.bytes_per_param / hw.gpu_optim_rate,
                       2 * n_chunks + 1});
    }

    cstate.assign(n_chunks + 1, ChunkState::OffDevice);
    for (int c = 1; c <= cfg.n_persist; ++c) cstate[c] = ChunkState::Resident;
    free_slots = cfg.n_buffer;

    gpu_work_left.assign(n_chunks + 1, 0);
    for (const auto& t : tasks)
      if (t.kind == Task::BwdOp || t.kind == Task::Recompute)
        gpu_work_left[t.chunk]++;
    reduce_done.assign(n_chunks + 1, false);

    swap_out_done.assign(std::max(1, n_blocks), false);
    swap_in_issued.assign(std::max(1, n_blocks), false);
    act_present.assign(n_ops, 0);

    // model states + residual floor are resident for the whole iteration
    const std::int64_t states =
        persistent_chunk_bytes(cfg.s_chunk) * cfg.n_persist +
        buffer_chunk_bytes(cfg.s_chunk) * cfg.n_buffer;
    ledger_add(states + trace.m_fwd);

    consider_up_to(1);
  }

  // --- prefetch machinery -----------------------------------------------
  bool queued_for_fetch(int c) const {
    return std::find(want_fetch.begin(), want_fetch.end(), c) != want_fetch.end();
  }

  void consider_up_to(int pos) {
    for (int p = considered_pos + 1; p <= std::min(pos, 2 * n_chunks); ++p) {
      const int c = chunk_at_position(p);
      if (cstate[c] == ChunkState::OffDevice && !queued_for_fetch(c))
        want_fetch.push_back(c);
    }
    considered_pos = std::max(considered_pos, std::min(pos, 2 * n_chunks));
  }

  int current_position() const {
    return next_task < tasks.size() ? tasks[next_task].position
                                    : 2 * n_chunks + 2;
  }

  int next_use_position(int c) const {
    const int p = current_position();
    if (position_of_chunk_fwd(c) >= p) return position_of_chunk_fwd(c);
    if (position_of_chunk_bwd(c) >= p) return position_of_chunk_bwd(c);
    return std::numeric_limits<int>::max();
  }

  int protected_chunk() const {
    return next_task < tasks.size() ? tasks[next_task].chunk : 0;
  }

  // Try to place the head of the fetch queue. One prefetch in flight at a
  // time: the pipeline targets exactly the next chunk the GPU will need.
  bool try_issue_prefetch() {
    if (fetch_in_flight != 0 || want_fetch.empty()) return false;
    const int c = want_fetch.front();
    if (cstate[c] != ChunkState::OffDevice) {
      want_fetch.pop_front();
      return true;
    }
    if (free_slots == 0) {
      // farthest-next-use eviction among idle resident chunks
      int victim = 0, victim_use = -1;
      for (int v = cfg.n_persist + 1; v <= n_chunks; ++v) {
        if (cstate[v] != ChunkState::Resident) continue;
        if (v == protected_chunk()) continue;
        const int use = next_use_position(v);
        if (use > victim_use) {
          victim_use = use;
          victim = v;
        }
      }
      if (victim == 0 || victim_use <= next_use_position(c)) return false;
      cstate[victim] = ChunkState::OffDevice;
      ++free_slots;
      log("gpu", "evict", "chunk=" + std::to_string(victim));
    }
    want_fetch.pop_front();
    --free_slots;
    cstate[c] = ChunkState::Fetching;
    fetch_in_flight = c;
    if (hw.world_size > 1) {
      begin_collective(XferKind::Gather, c,
                       static_cast<double>(chunk_used[c]) *
                           (hw.world_size - 1) / hw.world_size);
    } else {
      begin_upload(c);
    }
    return true;
  }

  void begin_collective(XferKind kind, int c, double bytes) {
    const int id = next_xfer_id++;
    transfers[id] = {kind, c, -1, -1, bytes};
    log("coll", std::string(xfer_name(kind)) + "_start", "chunk=" + std::to_string(c));
    latency_wait.push_back({now + to_ns(hw.coll_alpha), id});
  }

  void begin_upload(int c) {
    const int id = next_xfer_id++;
    const double bytes =
        static_cast<double>(chunk_used[c] / hw.world_size);
    transfers[id] = {XferKind::Upload, c, -1, -1, bytes};
    log("h2d", "upload_start", "chunk=" + std::to_string(c));
    h2d.add(id, bytes);
  }

  void begin_offload(int c) {
    const int id = next_xfer_id++;
    const double bytes =
        static_cast<double>(chunk_used[c] / hw.world_size);
    transfers[id] = {XferKind::Offload, c, -1, -1, bytes};
    log("d2h", "offload_start", "chunk=" + std::to_string(c));
    d2h.add(id, bytes);
  }

  // --- swap machinery -----------------------------------------------------
  // Sequential per-operator sub-transfers: the out chain walks the block's
  // ops in forward order, the in chain in reverse (consumption) order.
  void swap_out_step(int b, int i) {
    while (i <= block_last_op[b] && trace.ops[i].act_bytes == 0) ++i;
    if (i > block_last_op[b]) {
      swap_out_done[b] = true;
      log("d2h", "swap_out_done", "block=" + std::to_string(b));
      return;
    }
    const int id = next_xfer_id++;
    transfers[id] = {XferKind::SwapOut, 0, b, i,
                     static_cast<double>(trace.ops[i].act_bytes)};
    d2h.add(id, static_cast<double>(trace.ops[i].act_bytes));
    log("d2h", "swap_out_start",
        "block=" + std::to_string(b) + " op=" + std::to_string(i));
  }

  void swap_in_step(int b, int i) {
    while (i >= block_first_op[b] && trace.ops[i].act_bytes == 0) {
      act_present[i] = 1;
      --i;
    }
    if (i < block_first_op[b]) {
      log("h2d", "swap_in_done", "block=" + std::to_string(b));
      return;
    }
    const int id = next_xfer_id++;
    transfers[id] = {XferKind::SwapIn, 0, b, i,
                     static_cast<double>(trace.ops[i].act_bytes)};
    h2d.add(id, static_cast<double>(trace.ops[i].act_bytes));
    log("h2d", "swap_in_start",
        "block=" + std::to_string(b) + " op=" + std::to_string(i));
  }

  bool swap_in_imminent(int b) const {
    if (next_task >= tasks.size()) return false;
    const Task& t = tasks[next_task];
    return t.kind == Task::BwdOp && t.block == b;
  }

  void maybe_issue_swap_ins() {
    for (int b = 0; b < n_blocks; ++b) {
      if (schedule.strategies[b] != BlockStrategy::Swap) continue;
      if (swap_in_issued[b] || !swap_out_done[b]) continue;
      const int entered = bwd_started
                              ? std::min(lowest_block_entered, n_blocks)
                              : std::numeric_limits<int>::max();
      const bool near = entered <= b + cfg.n_interval;
      const bool headroom = (peak - cur) >= block_act[b];
      if ((near && headroom) || swap_in_imminent(b)) {
        swap_in_issued[b] = true;
        swap_in_step(b, block_last_op[b]);
      }
    }
  }

  // --- drains ------------------------------------------------------------
  void start_drain(int c) {
    if (hw.world_size > 1) {
      begin_collective(XferKind::Reduce, c,
                       static_cast<double>(chunk_used[c]) *
                           (hw.world_size - 1) / hw.world_size);
    } else {
      after_reduce(c);
    }
  }

  void after_reduce(int c) {
    if (c <= cfg.n_persist) {
      reduce_done[c] = true;
      return;
    }
    begin_offload(c);
  }

  void finish_drain(int c) {
    cstate[c] = ChunkState::OffDevice;
    ++free_slots;
    cpu_queue.push_back({c, static_cast<double>(chunk_used[c]) /
                                layout.bytes_per_param / hw.cpu_optim_rate});
  }

  // --- GPU ----------------------------------------------------------------
  bool task_ready(const Task& t) const {
    switch (t.kind) {
      case Task::FwdOp:
      case Task::Recompute:
        return cstate[t.chunk] == ChunkState::Resident ||
               cstate[t.chunk] == ChunkState::Draining;
      case Task::BwdOp: {
        if (cstate[t.chunk] != ChunkState::Resident &&
            cstate[t.chunk] != ChunkState::Draining)
          return false;
        if (t.block >= 0 &&
            schedule.strategies[t.block] == BlockStrategy::Swap &&
            trace.ops[t.op].act_bytes > 0 && !act_present[t.op])
          return false;
        return true;
      }
      case Task::GpuOptim:
        return reduce_done[t.chunk];
    }
    return false;
  }

  bool try_start_gpu() {
    if (gpu_running || next_task >= tasks.size()) return false;
    Task& t = tasks[next_task];
    if (!task_ready(t)) return false;

    consider_up_to(t.position + 1);
    if (t.kind == Task::BwdOp || t.kind == Task::Recompute) {
      bwd_started = true;
      if (t.block >= 0)
        lowest_block_entered = std::min(lowest_block_entered, t.block);
    }
    if (t.kind == Task::Recompute) {
      const std::int64_t boundary = trace.ops[block_first_op[t.block]].act_bytes;
      ledger_add(block_act[t.block] - boundary);
      log("gpu", "recompute_start", "block=" + std::to_string(t.block));
    } else if (t.kind == Task::BwdOp) {
      const auto& op = trace.ops[t.op];
      ledger_touch(op.d_peak_prior);
      if (op.d_cur_prior != 0) ledger_add(op.d_cur_prior);
      ledger_touch(op.d_peak_op);
      log("gpu", "bwd_start", "op=" + std::to_string(t.op));
    } else if (t.kind == Task::FwdOp) {
      log("gpu", "fwd_start", "op=" + std::to_string(t.op));
    } else {
      log("gpu", "optim_start", "chunk=" + std::to_string(t.chunk));
    }
    gpu_running = true;
    gpu_done_at = now + to_ns(t.dur);
    return true;
  }

  void finish_gpu_task() {
    Task& t = tasks[next_task];
    gpu_running = false;
    gpu_done_at = kInfTime;
    ++next_task;
    last_gpu_end = now;

    if (t.kind == Task::FwdOp) {
      const auto& op = trace.ops[t.op];
      const BlockStrategy s = strategy_of(op);
      const bool boundary =
          op.block_id && t.op == block_first_op[*op.block_id];
      const bool retain =
          s == BlockStrategy::None || s == BlockStrategy::Swap ||
          (s == BlockStrategy::Checkpoint && boundary);
      if (retain && op.act_bytes > 0) ledger_add(op.act_bytes);
      if (op.block_id && t.op == block_last_op[*op.block_id] &&
          s == BlockStrategy::Swap)
        swap_out_step(*op.block_id, block_first_op[*op.block_id]);
      log("gpu", "fwd_end", "op=" + std::to_string(t.op));
      last_fwd_end = now;
    } else if (t.kind == Task::BwdOp) {
      const auto& op = trace.ops[t.op];
      if (op.d_cur_op != 0) ledger_add(op.d_cur_op);
      // None/non-block acts were held since forward; checkpoint acts were
      // re-materialized by the recompute; swap acts arrived via swap-in.
      if (op.act_bytes > 0) ledger_add(-op.act_bytes);
      log("gpu", "bwd_end", "op=" + std::to_string(t.op));
      last_bwd_end = now;
      if (--gpu_work_left[t.chunk] == 0) chunk_gpu_work_done(t.chunk);
    } else if (t.kind == Task::Recompute) {
      log("gpu", "recompute_end", "block=" + std::to_string(t.block));
      last_bwd_end = now;
      if (--gpu_work_left[t.chunk] == 0) chunk_gpu_work_done(t.chunk);
    } else {
      log("gpu", "optim_end", "chunk=" + std::to_string(t.chunk));
    }
  }

  void chunk_gpu_work_done(int c) {
    if (c > cfg.n_persist) cstate[c] = ChunkState::Draining;
    start_drain(c);
  }

  // --- CPU ----------------------------------------------------------------
  bool try_start_cpu() {
    if (cpu_running || cpu_queue.empty()) return false;
    auto [c, dur] = cpu_queue.front();
    cpu_queue.pop_front();
    cpu_running = true;
    cpu_chunk = c;
    cpu_done_at = now + to_ns(dur);
    if (first_cpu_start < 0) first_cpu_start = now;
    log("cpu", "update_start", "chunk=" + std::to_string(c));
    return true;
  }

  // --- transfer completions ------------------------------------------------
  void complete_transfer(int id) {
    const Transfer tr = transfers.at(id);
    transfers.erase(id);
    switch (tr.kind) {
      case XferKind::Gather:
        coll.remove(id);
        log("coll", "gather_end", "chunk=" + std::to_string(tr.chunk));
        begin_upload(tr.chunk);
        break;
      case XferKind::Upload:
        h2d.remove(id);
        log("h2d", "upload_end", "chunk=" + std::to_string(tr.chunk));
        cstate[tr.chunk] = ChunkState::Resident;
        if (fetch_in_flight == tr.chunk) fetch_in_flight = 0;
        break;
      case XferKind::Reduce:
        coll.remove(id);
        log("coll", "reduce_end", "chunk=" + std::to_string(tr.chunk));
        after_reduce(tr.chunk);
        break;
      case XferKind::Offload:
        d2h.remove(id);
        log("d2h", "offload_end", "chunk=" + std::to_string(tr.chunk));
        finish_drain(tr.chunk);
        break;
      case XferKind::SwapOut:
        d2h.remove(id);
        ledger_add(-trace.ops[tr.op].act_bytes);
        log("d2h", "swap_out_end",
            "block=" + std::to_string(tr.block) + " op=" + std::to_string(tr.op));
        swap_out_step(tr.block, tr.op + 1);
        break;
      case XferKind::SwapIn:
        h2d.remove(id);
        ledger_add(trace.ops[tr.op].act_bytes);
        act_present[tr.op] = 1;
        log("h2d", "swap_in_end",
            "block=" + std::to_string(tr.block) + " op=" + std::to_string(tr.op));
        swap_in_step(tr.block, tr.op - 1);
        break;
    }
  }

  // --- main loop ------------------------------------------------------------
  SimulationResult run() {
    build();

    while (true) {
      // settle all zero-time actions
      bool changed = true;
      while (changed) {
        changed = false;
        changed |= try_start_gpu();
        changed |= try_start_cpu();
        changed |= try_issue_prefetch();
        maybe_issue_swap_ins();
      }

      // choose the next event: compute first, then transfer completions,
      // then latency expiries; subject id breaks remaining ties
      std::int64_t best = kInfTime;
      int klass = -1, subject = -1;
      const auto offer = [&](std::int64_t t, int k, int s) {
        if (t < best || (t == best && (k < klass || (k == klass && s < subject)))) {
          best = t;
          klass = k;
          subject = s;
        }
      };
      if (gpu_running) offer(gpu_done_at, 0, 0);
      if (cpu_running) offer(cpu_done_at, 1, cpu_chunk);
      for (Link* link : {&h2d, &d2h, &coll})
        if (auto c = link->next_completion()) offer(c->first, 2, c->second);
      for (const auto& [t, id] : latency_wait) offer(t, 3, id);

      if (best == kInfTime) {
        if (next_task >= tasks.size() && cpu_queue.empty() && !cpu_running &&
            transfers.empty())
          break;
        throw DeadlockDetected(
            "no runnable event with the iteration incomplete (next task " +
            std::to_string(next_task) + "/" + std::to_string(tasks.size()) + ")");
      }

      h2d.advance(best);
      d2h.advance(best);
      coll.advance(best);
      now = best;

      if (klass == 0) {
        finish_gpu_task();
      } else if (klass == 1) {
        cpu_running = false;
        cpu_done_at = kInfTime;
        last_cpu_end = now;
        log("cpu", "update_end", "chunk=" + std::to_string(cpu_chunk));
      } else if (klass == 2) {
        complete_transfer(subject);
      } else {
        auto it = std::find_if(latency_wait.begin(), latency_wait.end(),
                               [&](const auto& p) { return p.second == subject; });
        const int id = it->second;
        latency_wait.erase(it);
        coll.add(id, transfers.at(id).bytes);
      }
    }

    SimulationResult r;
    r.t_fwd = static_cast<double>(last_fwd_end) * 1e-9;
    r.t_bwd = static_cast<double>(std::max<std::int64_t>(0, last_bwd_end - last_fwd_end)) * 1e-9;
    r.t_iter = static_cast<double>(std::max(last_gpu_end, last_cpu_end)) * 1e-9;
    r.t_cpu_optim_span =
        first_cpu_start >= 0
            ? static_cast<double>(last_cpu_end - first_cpu_start) * 1e-9
            : 0.0;
    r.m_peak = peak;
    r.timeline = std::move(timeline);
    r.mem_trace = std::move(mem);
    return r;
  }
};

}  // namespace

SimulationResult simulate(const ModelTrace& trace, const ChunkLayout& layout,
                          const BlockSchedule& schedule,
                          const PlanConfig& config, const HardwareProfile& hw) {
  hw.validate();
  if (static_cast<int>(schedule.strategies.size()) != trace.n_blocks)
    throw InvariantViolation("schedule size does not match trace block count");
  if (config.n_chunk != layout.n_chunk())
    throw InvariantViolation("config n_chunk does not match layout");
  Sim sim(trace, layout, schedule, config, hw);
  return sim.run();
}

ValidationReport validate(const ModelTrace& trace, const ChunkLayout& layout,
                          const HardwareProfile& hw,
                          const std::vector<PlanConfig>& configs,
                          const CostOptions& opts) {
  if (configs.empty())
    throw InvariantViolation("validate requires at least one config");
  ValidationReport report;
  std::vector<double> t_errs;
  for (const auto& cfg : configs) {
    ValidationRow row;
    row.config = cfg;
    try {
      const auto schedule = build_block_schedule(cfg.n_block, cfg.n_swap,
                                                 cfg.n_checkpoint, cfg.n_interval);
      const auto est = estimate_iteration(trace, layout, schedule, cfg, hw, opts);
      const auto sim = simulate(trace, layout, schedule, cfg, hw);
      row.est_t_iter = est.t_iter;
      row.sim_t_iter = sim.t_iter;
      row.t_rel_err = sim.t_iter > 0
                          ? std::abs(est.t_iter - sim.t_iter) / sim.t_iter
                          : 0.0;
      row.est_m_peak = est.m_peak;
      row.sim_m_peak = sim.m_peak;
      row.m_ratio = sim.m_peak > 0 ? static_cast<double>(est.m_peak) /
                                         static_cast<double>(sim.m_peak)
                                   : 0.0;
      t_errs.push_back(row.t_rel_err);
    } catch (const Error& e) {
      row.failed = true;
      row.error = e.name();
    }
    report.rows.push_back(std::move(row));
  }
  if (!t_errs.empty()) {
    report.max_t_rel_err = *std::max_element(t_errs.begin(), t_errs.end());
    std::vector<double> sorted = t_errs;
    std::sort(sorted.begin(), sorted.end());
    report.median_t_rel_err = sorted[sorted.size() / 2];
  }
  report.max_m_ratio = 0;
  report.min_m_ratio = std::numeric_limits<double>::infinity();
  for (const auto& r : report.rows) {
    if (r.failed) continue;
    report.max_m_ratio = std::max(report.max_m_ratio, r.m_ratio);
    report.min_m_ratio = std::min(report.min_m_ratio, r.m_ratio);
  }
  return report;
}

void ValidationReport::to_csv(std::ostream& out) const {
  out << "n_persist,n_buffer,n_swap,n_checkpoint,est_t_iter,sim_t_iter,"
         "t_rel_err,est_m_peak,sim_m_peak,m_ratio,status\n";
  for (const auto& r : rows) {
    out << r.config.n_persist << ',' << r.config.n_buffer << ','
        << r.config.n_swap << ',' << r.config.n_checkpoint << ',';
    if (r.failed) {
      out << ",,,,,," << r.error << "\n";
    } else {
      out << r.est_t_iter << ',' << r.sim_t_iter << ',' << r.t_rel_err << ','
          << r.est_m_peak << ',' << r.sim_m_peak << ',' << r.m_ratio << ",ok\n";
    }
  }
}

void timeline_to_csv(const std::vector<TimelineEvent>& timeline,
                     std::ostream& out) {
  out << "time_ns,resource,event,subject\n";
  for (const auto& e : timeline)
    out << e.time_ns << ',' << e.resource << ',' << e.event << ",\"" << e.subject
        << "\"\n";
}

void timeline_to_chrome_trace(const std::vector<TimelineEvent>& timeline,
                              std::ostream& out) {
  // Instant events are enough for timeline viewers; durations are implied
  // by the paired _start/_end markers.
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  std::map<std::string, int> tids;
  for (const auto& e : timeline) {
    if (!tids.count(e.resource))
      tids[e.resource] = static_cast<int>(tids.size()) + 1;
    nlohmann::ordered_json ev;
    ev["name"] = e.event + " " + e.subject;
    ev["ph"] = "i";
    ev["ts"] = static_cast<double>(e.time_ns) / 1000.0;
    ev["pid"] = 1;
    ev["tid"] = tids[e.resource];
    ev["s"] = "t";
    arr.push_back(std::move(ev));
  }
  out << arr.dump(1) << "\n";
}

void mem_trace_to_csv(const std::vector<MemSample>& samples, std::ostream& out) {
  out << "time_ns,bytes\n";
  for (const auto& s : samples) out << s.time_ns << ',' << s.bytes << "\n";
}

}  // namespace memplan
