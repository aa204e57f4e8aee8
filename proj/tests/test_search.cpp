#include <doctest.h>

#include <cmath>
#include <random>

#include "memplan/errors.hpp"
#include "memplan/presets.hpp"
#include "memplan/search.hpp"

using namespace memplan;

namespace {

ModelTrace random_small_trace(std::mt19937_64& rng) {
  ModelTrace t;
  t.n_blocks = 2 + static_cast<int>(rng() % 7);  // <= 8
  t.m_fwd = rng() % 1000;
  for (int b = 0; b < t.n_blocks; ++b) {
    OperatorRecord op;
    op.index = b;
    op.name = "block" + std::to_string(b);
    op.block_id = b;
    op.param_bytes = 1'000'000 + rng() % 9'000'000;
    op.t_fwd = (1 + rng() % 50) * 1e-3;
    op.t_bwd = 2 * op.t_fwd;
    op.act_bytes = rng() % 5'000'000;
    op.d_peak_op = rng() % 500'000;
    t.ops.push_back(op);
  }
  t.validate();
  return t;
}

HardwareProfile random_hw(std::mt19937_64& rng) {
  HardwareProfile hw;
  hw.h2d_bw = 1e9 * (1 + rng() % 30);
  hw.d2h_bw = 1e9 * (1 + rng() % 30);
  hw.coll_alpha = (rng() % 50) * 1e-6;
  hw.coll_bw = 1e9 * (1 + rng() % 300);
  hw.world_size = 1 + static_cast<int>(rng() % 4);
  hw.cpu_mem = 1ll << 42;
  hw.cpu_optim_rate = 1e8 * (1 + rng() % 20);
  hw.gpu_optim_rate = 1e9 * (1 + rng() % 20);
  hw.gpu_mem = 1;  // set by the caller
  return hw;
}

}  // namespace

TEST_CASE("candidate stream contains the all-persistent config") {
  const ModelTrace t = synthesize_trace(get_model("gpt2-1b"));
  const auto [size, l] = chunk_size_search(t, default_size_grid(t));
  const HardwareProfile hw = get_hardware("a100x4");
  const auto stream = enumerate_candidates(l, t, hw);
  bool found = false;
  for (const auto& c : stream)
    found = found || (c.n_persist == l.n_chunk() && c.n_buffer == 0 &&
                      c.n_swap == 0 && c.n_checkpoint == 0);
  CHECK(found);
}

TEST_CASE("swap count respects the interval bound") {
  // eight blocks, interval forced to 2 -> at most floor(7/3)+1 = 3 swaps
  ModelTrace t;
  t.n_blocks = 8;
  for (int b = 0; b < 8; ++b) {
    OperatorRecord op;
    op.index = b;
    op.name = "b" + std::to_string(b);
    op.block_id = b;
    op.param_bytes = 1'000'000;
    op.t_fwd = 10e-3;
    op.t_bwd = 20e-3;
    op.act_bytes = 18'000'000;  // swap-out 18 ms at 1e9 B/s
    t.ops.push_back(op);
  }
  t.validate();
  HardwareProfile hw = get_hardware("a100x1");
  hw.d2h_bw = 1e9;
  hw.h2d_bw = 1e9;
  REQUIRE(compute_interval(t, hw) == 2);

  const ChunkLayout l = pack_chunks(t, 2'000'000);
  int max_swap = 0;
  for (const auto& c : enumerate_candidates(l, t, hw))
    max_swap = std::max(max_swap, c.n_swap);
  CHECK(max_swap <= 3);
}

TEST_CASE("candidate stream is ordered by non-decreasing peak memory") {
  const ModelTrace t = synthesize_trace(get_model("gpt2-1b"));
  const auto [size, l] = chunk_size_search(t, default_size_grid(t));
  const HardwareProfile hw = get_hardware("rtx3090x4");
  const auto stream = enumerate_candidates(l, t, hw);
  REQUIRE(!stream.empty());

  std::int64_t prev = -1;
  for (const auto& c : stream) {
    const auto sched =
        build_block_schedule(c.n_block, c.n_swap, c.n_checkpoint, c.n_interval);
    const auto mem = estimate_peak_memory(t, sched, c, hw);
    CHECK(mem.total >= prev);
    prev = mem.total;
  }
}

TEST_CASE("unlimited memory yields the zero-overhead configuration") {
  ModelSpec spec = get_model("gpt2-1b");
  spec.batch_size = 2;
  const ModelTrace t = synthesize_trace(spec);
  const auto [size, l] = chunk_size_search(t, default_size_grid(t));
  HardwareProfile hw = get_hardware("a100x4");
  hw.gpu_mem = 1ll << 50;

  const auto outcome = find_optimal(t, l, hw);
  CHECK(outcome.best.n_persist == l.n_chunk());
  CHECK(outcome.best.n_buffer == 0);
  CHECK(outcome.best.n_swap == 0);
  CHECK(outcome.best.n_checkpoint == 0);
  CHECK(outcome.n_evaluated + outcome.n_pruned ==
        static_cast<std::int64_t>(enumerate_candidates(l, t, hw).size()));
}

TEST_CASE("search is deterministic") {
  ModelSpec spec = get_model("gpt2-1b");
  spec.batch_size = 4;
  const ModelTrace t = synthesize_trace(spec);
  const auto [size, l] = chunk_size_search(t, default_size_grid(t));
  const HardwareProfile hw = get_hardware("rtx3090x4");
  const auto a = find_optimal(t, l, hw);
  const auto b = find_optimal(t, l, hw);
  CHECK(a.best.n_persist == b.best.n_persist);
  CHECK(a.best.n_buffer == b.best.n_buffer);
  CHECK(a.best.n_swap == b.best.n_swap);
  CHECK(a.best.n_checkpoint == b.best.n_checkpoint);
  CHECK(a.estimate.t_iter == b.estimate.t_iter);
  CHECK(a.n_evaluated == b.n_evaluated);
  CHECK(a.n_pruned == b.n_pruned);
}

TEST_CASE("returned config always fits device memory") {
  ModelSpec spec = get_model("gpt2-1b");
  spec.batch_size = 8;
  const ModelTrace t = synthesize_trace(spec);
  const auto [size, l] = chunk_size_search(t, default_size_grid(t));
  HardwareProfile hw = get_hardware("rtx3090x4");
  hw.gpu_mem = 14'000'000'000;
  const auto outcome = find_optimal(t, l, hw);
  CHECK(outcome.estimate.m_peak < hw.gpu_mem);
}

TEST_CASE("impossible budgets raise NoFeasibleConfig") {
  const ModelTrace t = synthesize_trace(get_model("gpt2-1b"));
  const auto [size, l] = chunk_size_search(t, default_size_grid(t));
  HardwareProfile hw = get_hardware("rtx3090x4");
  hw.gpu_mem = 1'000'000;
  CHECK_THROWS_AS(find_optimal(t, l, hw), NoFeasibleConfig);
}

// Brute force over the same candidate space, no ordering, no early stop.
// The ranges re-derive the documented rules rather than calling
// enumerate_candidates.
namespace {

struct BruteResult {
  bool found = false;
  PlanConfig best;
  double t_iter = 0;
  std::int64_t m_peak = 0;
};

BruteResult brute_force(const ModelTrace& t, const ChunkLayout& l,
                        const HardwareProfile& hw) {
  const CostOptions opts;
  const int n = l.n_chunk();
  const int interval = compute_interval(t, hw);
  const int struct_max = (t.n_blocks - 1) / (interval + 1) + 1;
  double block_compute = 0;
  std::int64_t block_act = 0;
  for (const auto& op : t.ops) {
    if (!op.block_id) continue;
    block_compute += op.t_fwd;
    block_act += op.act_bytes;
  }
  const std::int64_t mean_act = block_act / t.n_blocks;
  int bw_cap = t.n_blocks;
  if (mean_act > 0)
    bw_cap = static_cast<int>(std::floor(
        block_compute / (static_cast<double>(mean_act) / (hw.d2h_bw / 2))));
  const int swap_max = std::min({struct_max, bw_cap, t.n_blocks});

  BruteResult best;
  for (int np = 0; np <= n; ++np) {
    const int blo = np == n ? 0 : std::min(3, n - np);
    const int bhi = np == n ? 0 : n - np;
    for (int nb = blo; nb <= bhi; ++nb) {
      for (int ns = 0; ns <= swap_max; ++ns) {
        const int nc_lo = ns > 1 ? (ns - 1) * interval : 0;
        for (int nc = nc_lo; nc <= t.n_blocks - ns; ++nc) {
          PlanConfig c;
          c.s_chunk = l.s_chunk;
          c.n_chunk = n;
          c.n_persist = np;
          c.n_buffer = nb;
          c.n_block = t.n_blocks;
          c.n_interval = interval;
          c.n_swap = ns;
          c.n_checkpoint = nc;
          BlockSchedule sched;
          try {
            c.validate();
            sched = build_block_schedule(t.n_blocks, ns, nc, interval);
          } catch (const Error&) {
            continue;
          }
          const auto est = estimate_iteration(t, l, sched, c, hw, opts);
          if (!config_feasible(t, c, est.m_peak, hw)) continue;
          if (!best.found || config_preferred(est.t_iter, c, est.m_peak,
                                              best.t_iter, best.best,
                                              best.m_peak)) {
            best.found = true;
            best.best = c;
            best.t_iter = est.t_iter;
            best.m_peak = est.m_peak;
          }
        }
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("search equals brute force on random small instances") {
  std::mt19937_64 rng(0);
  int tested = 0;
  while (tested < 20) {
    const ModelTrace t = random_small_trace(rng);
    std::int64_t max_param = 0;
    for (const auto& op : t.ops) max_param = std::max(max_param, op.param_bytes);
    const std::int64_t s_chunk = max_param * (1 + static_cast<int>(rng() % 3));
    const ChunkLayout l = pack_chunks(t, s_chunk);
    if (l.n_chunk() > 6) continue;

    HardwareProfile hw = random_hw(rng);
    hw.gpu_mem = (1 + static_cast<std::int64_t>(rng() % 100)) * 2'000'000'000;

    const auto want = brute_force(t, l, hw);
    if (!want.found) {
      CHECK_THROWS_AS(find_optimal(t, l, hw), NoFeasibleConfig);
      continue;
    }
    const auto got = find_optimal(t, l, hw);
    CHECK(got.estimate.t_iter == want.t_iter);
    CHECK(got.best.n_persist == want.best.n_persist);
    CHECK(got.best.n_buffer == want.best.n_buffer);
    CHECK(got.best.n_swap == want.best.n_swap);
    CHECK(got.best.n_checkpoint == want.best.n_checkpoint);
    ++tested;
  }
  CHECK(tested == 20);
}
