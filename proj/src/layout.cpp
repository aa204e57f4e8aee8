#include "memplan/layout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "memplan/errors.hpp"

namespace memplan {

void PlanConfig::validate() const {
  if (s_chunk <= 0) throw InvariantViolation("s_chunk must be positive");
  if (n_chunk <= 0) throw InvariantViolation("n_chunk must be positive");
  if (n_persist < 0 || n_persist > n_chunk)
    throw InvariantViolation("n_persist must lie in [0, n_chunk]");
  if (n_buffer < 0 || n_buffer > n_chunk - n_persist)
    throw InvariantViolation("n_buffer must lie in [0, n_chunk - n_persist]");
  if (n_persist < n_chunk && n_buffer < 1)
    throw InvariantViolation("n_buffer must be >= 1 when any chunk is non-persistent");
  if (n_block < 0) throw InvariantViolation("n_block must be non-negative");
  if (n_interval < 1) throw InvariantViolation("n_interval must be >= 1");
  if (n_swap < 0 || n_checkpoint < 0)
    throw InvariantViolation("n_swap and n_checkpoint must be non-negative");
  if (n_swap + n_checkpoint > n_block)
    throw InvariantViolation("n_swap + n_checkpoint must not exceed n_block");
}

std::int64_t ChunkLayout::used_total() const {
  std::int64_t s = 0;
  for (const auto& c : chunks) s += c.used_bytes;
  return s;
}

int ChunkLayout::chunk_of_op(int op_index) const {
  for (const auto& c : chunks)
    if (op_index >= c.first_op && op_index <= c.last_op) return c.chunk_id + 1;
  throw OutOfRange("operator index " + std::to_string(op_index) +
                   " outside all chunk spans");
}

int BlockSchedule::n_swap() const {
  return static_cast<int>(
      std::count(strategies.begin(), strategies.end(), BlockStrategy::Swap));
}

int BlockSchedule::n_checkpoint() const {
  return static_cast<int>(std::count(strategies.begin(), strategies.end(),
                                     BlockStrategy::Checkpoint));
}

namespace {

// A packing unit: one whole transformer block, or one block-less
// parameter-carrying operator. first/last delimit the op span the unit
// covers (including trailing zero-parameter ops like attention cores).
struct PackUnit {
  std::int64_t param_bytes = 0;
  int first_op = 0;
  int last_op = 0;
  int block_id = -1;  // -1 for non-block units
};

std::vector<PackUnit> pack_units(const ModelTrace& trace) {
  std::vector<PackUnit> units;
  int i = 0;
  const int n = static_cast<int>(trace.ops.size());
  while (i < n) {
    const auto& op = trace.ops[i];
    PackUnit u;
    u.first_op = i;
    if (op.block_id) {
      const int b = *op.block_id;
      u.block_id = b;
      while (i < n && trace.ops[i].block_id && *trace.ops[i].block_id == b) {
        u.param_bytes += trace.ops[i].param_bytes;
        u.last_op = i;
        ++i;
      }
    } else {
      u.param_bytes = op.param_bytes;
      u.last_op = i;
      ++i;
      // absorb following zero-parameter non-block operators (loss etc.)
      while (i < n && !trace.ops[i].block_id && trace.ops[i].param_bytes == 0) {
        u.last_op = i;
        ++i;
      }
    }
    units.push_back(u);
  }
  return units;
}

std::int64_t max_unit_bytes(const ModelTrace& trace) {
  std::int64_t m = 0;
  for (const auto& u : pack_units(trace)) m = std::max(m, u.param_bytes);
  return m;
}

}  // namespace

ChunkLayout pack_chunks(const ModelTrace& trace, std::int64_t s_chunk) {
  trace.validate();
  if (s_chunk <= 0) throw ChunkTooSmall("s_chunk must be positive");
  const auto units = pack_units(trace);
  for (const auto& u : units) {
    if (u.param_bytes > s_chunk)
      throw ChunkTooSmall("packing unit of " + std::to_string(u.param_bytes) +
                          " bytes exceeds s_chunk " + std::to_string(s_chunk));
  }

  ChunkLayout layout;
  layout.s_chunk = s_chunk;
  layout.bytes_per_param = trace.dtype_bytes();

  Chunk cur;
  bool open = false;
  const auto seal = [&]() {
    if (!open) return;
    cur.chunk_id = static_cast<int>(layout.chunks.size());
    layout.chunks.push_back(cur);
    open = false;
  };
  for (const auto& u : units) {
    if (open && cur.used_bytes + u.param_bytes > s_chunk) seal();
    if (!open) {
      cur = Chunk{};
      cur.first_op = u.first_op;
      open = true;
    }
    cur.used_bytes += u.param_bytes;
    cur.last_op = u.last_op;
    if (u.block_id >= 0) cur.block_ids.push_back(u.block_id);
  }
  seal();

  // Spans partition the full operator range.
  if (!layout.chunks.empty()) {
    layout.chunks.front().first_op = 0;
    for (std::size_t i = 0; i + 1 < layout.chunks.size(); ++i)
      layout.chunks[i].last_op = layout.chunks[i + 1].first_op - 1;
    layout.chunks.back().last_op = static_cast<int>(trace.ops.size()) - 1;
  }

  layout.waste_bytes = static_cast<std::int64_t>(layout.chunks.size()) * s_chunk -
                       layout.used_total();
  return layout;
}

std::pair<std::int64_t, ChunkLayout> chunk_size_search(
    const ModelTrace& trace, const std::vector<std::int64_t>& grid) {
  if (grid.empty()) throw NoFeasibleChunkSize("empty candidate grid");
  bool found = false;
  std::int64_t best_size = 0;
  ChunkLayout best;
  for (std::int64_t cand : grid) {
    ChunkLayout l;
    try {
      l = pack_chunks(trace, cand);
    } catch (const ChunkTooSmall&) {
      continue;
    }
    if (!found || l.waste_bytes < best.waste_bytes ||
        (l.waste_bytes == best.waste_bytes && cand < best_size)) {
      found = true;
      best_size = cand;
      best = std::move(l);
    }
  }
  if (!found)
    throw NoFeasibleChunkSize("no grid candidate can hold the largest block");
  return {best_size, std::move(best)};
}

std::vector<std::int64_t> default_size_grid(const ModelTrace& trace) {
  const std::int64_t lo = 16ll << 20;
  const std::int64_t hi = 1ll << 30;
  std::int64_t clamp = std::max(lo, max_unit_bytes(trace));
  std::int64_t first = lo;
  while (first < clamp) first <<= 1;
  std::vector<std::int64_t> grid;
  for (std::int64_t c = first; c <= std::max(hi, first); c <<= 1) {
    grid.push_back(c);
    if (c >= hi) break;
  }
  return grid;
}

std::vector<bool> assign_persistent(const ChunkLayout& layout, int n_persist) {
  if (n_persist < 0 || n_persist > layout.n_chunk())
    throw OutOfRange("n_persist outside [0, n_chunk]");
  std::vector<bool> persistent(layout.chunks.size(), false);
  for (int i = 0; i < n_persist; ++i) persistent[i] = true;
  return persistent;
}

int compute_interval(const ModelTrace& trace, const HardwareProfile& hw) {
  if (trace.n_blocks < 1)
    throw InvariantViolation("compute_interval requires at least one block");
  if (hw.d2h_bw <= 0) throw ZeroBandwidth("d2h_bw must be positive");

  double compute = 0;
  std::int64_t act = 0;
  for (const auto& op : trace.ops) {
    if (!op.block_id) continue;
    compute += op.t_fwd;
    act += op.act_bytes;
  }
  const double avg_compute = compute / trace.n_blocks;
  const double avg_act = static_cast<double>(act) / trace.n_blocks;
  const double swap_out = avg_act / hw.d2h_bw;
  if (avg_compute <= 0) return trace.n_blocks;
  int k = static_cast<int>(std::ceil(swap_out / avg_compute));
  k = std::max(k, 1);
  return std::min(k, trace.n_blocks);
}

BlockSchedule build_block_schedule(int n_block, int n_swap, int n_checkpoint,
                                   int n_interval) {
  if (n_block < 0) throw InvariantViolation("n_block must be non-negative");
  if (n_interval < 1) throw InvariantViolation("n_interval must be >= 1");
  if (n_swap < 0 || n_checkpoint < 0)
    throw InvariantViolation("n_swap and n_checkpoint must be non-negative");
  if (n_swap + n_checkpoint > n_block)
    throw InvariantViolation("n_swap + n_checkpoint must not exceed n_block");

  BlockSchedule sched;
  sched.strategies.assign(n_block, BlockStrategy::None);
  if (n_swap > 0) {
    const int last_swap_pos = (n_swap - 1) * (n_interval + 1);
    if (last_swap_pos >= n_block)
      throw InfeasibleLayout("swap positions exceed the block count");
    // Every position up to the last swap must be covered by the optimized
    // prefix, otherwise an unoptimized block would sit between swap blocks.
    if (last_swap_pos + 1 > n_swap + n_checkpoint)
      throw InfeasibleLayout(
          "swap spacing requires more checkpoint blocks than requested");
    for (int j = 0; j < n_swap; ++j)
      sched.strategies[j * (n_interval + 1)] = BlockStrategy::Swap;
  }
  int placed = 0;
  for (int b = 0; b < n_block && placed < n_checkpoint; ++b) {
    if (sched.strategies[b] == BlockStrategy::None) {
      sched.strategies[b] = BlockStrategy::Checkpoint;
      ++placed;
    }
  }
  return sched;
}

const char* to_string(BlockStrategy s) {
  switch (s) {
    case BlockStrategy::Swap: return "swap";
    case BlockStrategy::Checkpoint: return "checkpoint";
    case BlockStrategy::None: return "none";
  }
  return "none";
}

BlockStrategy block_strategy_from_string(const std::string& s) {
  if (s == "swap") return BlockStrategy::Swap;
  if (s == "checkpoint") return BlockStrategy::Checkpoint;
  if (s == "none") return BlockStrategy::None;
  throw MalformedTrace("unknown block strategy: " + s);
}

}  // namespace memplan
