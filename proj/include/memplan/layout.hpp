#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memplan/hardware.hpp"
#include "memplan/trace.hpp"

namespace memplan {

// The tunable plan vector. s_chunk / n_chunk / n_block / n_interval are fixed
// before the configuration search; the remaining four are searched.
struct PlanConfig {
  std::int64_t s_chunk = 0;
  int n_chunk = 0;
  int n_persist = 0;
  int n_buffer = 0;
  int n_block = 0;
  int n_interval = 1;
  int n_swap = 0;
  int n_checkpoint = 0;

  void validate() const;  // throws InvariantViolation
};

struct Chunk {
  int chunk_id = 0;
  std::int64_t used_bytes = 0;
  int first_op = 0;  // op_index_span, inclusive
  int last_op = 0;   // op_index_span, inclusive
  std::vector<int> block_ids;
};

// Execution-order packing of parameters into fixed-size chunks. Chunk spans
// partition the whole operator range, so zero-parameter operators are
// attributed to the chunk that is live at their position.
struct ChunkLayout {
  std::vector<Chunk> chunks;
  std::int64_t s_chunk = 0;
  std::int64_t waste_bytes = 0;
  int bytes_per_param = 2;  // carried over from the trace meta

  int n_chunk() const { return static_cast<int>(chunks.size()); }
  std::int64_t used_total() const;
  // 1-based chunk id for an operator index (matches the cost-model
  // indexing where chunks run 1..N_chunk).
  int chunk_of_op(int op_index) const;
};

enum class BlockStrategy { Swap, Checkpoint, None };

// Per-block activation strategy. Swap blocks sit first, spaced n_interval
// non-swap blocks apart; Checkpoint blocks fill the rest of the optimized
// prefix; unoptimized blocks form the tail.
struct BlockSchedule {
  std::vector<BlockStrategy> strategies;

  int n_swap() const;
  int n_checkpoint() const;
};

// Greedy first-fit in execution order. Units are whole transformer blocks
// and individual non-block parameter operators; a unit never splits across
// chunks. Throws ChunkTooSmall if any unit exceeds s_chunk.
ChunkLayout pack_chunks(const ModelTrace& trace, std::int64_t s_chunk);

// Waste-minimizing grid search; ties go to the smaller candidate.
std::pair<std::int64_t, ChunkLayout> chunk_size_search(
    const ModelTrace& trace, const std::vector<std::int64_t>& grid);

// Powers of two from 16 MiB to 1 GiB, clamped below by the largest packing
// unit (the grid is never empty: an oversized unit yields a single
// next-power-of-two candidate).
std::vector<std::int64_t> default_size_grid(const ModelTrace& trace);

// Chunks 0..n_persist-1 persistent, the rest non-persistent.
// Returned vector has one bool per chunk.
std::vector<bool> assign_persistent(const ChunkLayout& layout, int n_persist);

// Smallest k >= 1 such that k average-block forward compute >= one
// average-block swap-out; capped at n_block.
int compute_interval(const ModelTrace& trace, const HardwareProfile& hw);

BlockSchedule build_block_schedule(int n_block, int n_swap, int n_checkpoint,
                                   int n_interval);

const char* to_string(BlockStrategy s);
BlockStrategy block_strategy_from_string(const std::string& s);

}  // namespace memplan
