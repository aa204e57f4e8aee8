#include "memplan/search.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "memplan/errors.hpp"

namespace memplan {

namespace {

int structural_swap_max(int n_block, int n_interval) {
  if (n_block <= 0) return 0;
  return (n_block - 1) / (n_interval + 1) + 1;
}

// Swap-outs must fit inside the forward compute window at contended D2H
// bandwidth, otherwise departing activations pile up on the device.
int bandwidth_swap_cap(const ModelTrace& trace, const HardwareProfile& hw) {
  const std::int64_t mean_act = mean_block_act_bytes(trace);
  if (mean_act <= 0) return trace.n_blocks;
  double block_compute = 0;
  for (const auto& op : trace.ops)
    if (op.block_id) block_compute += op.t_fwd;
  const double per_swap =
      static_cast<double>(mean_act) / contended_bandwidth(hw.d2h_bw, 2);
  if (per_swap <= 0) return trace.n_blocks;
  return static_cast<int>(std::floor(block_compute / per_swap));
}

std::int64_t max_block_act_bytes(const ModelTrace& trace) {
  std::vector<std::int64_t> act(std::max(1, trace.n_blocks), 0);
  for (const auto& op : trace.ops)
    if (op.block_id) act[*op.block_id] += op.act_bytes;
  return act.empty() ? 0 : *std::max_element(act.begin(), act.end());
}

struct Candidate {
  PlanConfig config;
  std::int64_t m_peak = 0;
  std::int64_t m_peak_before_alpha = 0;
};

std::vector<Candidate> enumerate_impl(const ChunkLayout& layout,
                                      const ModelTrace& trace,
                                      const HardwareProfile& hw,
                                      const CostOptions& opts) {
  const int n_chunk = layout.n_chunk();
  const int n_block = trace.n_blocks;
  const int n_interval = compute_interval(trace, hw);
  const int swap_max = std::min(structural_swap_max(n_block, n_interval),
                                bandwidth_swap_cap(trace, hw));

  // The activation replay depends only on the block schedule; cache it per
  // (n_swap, n_checkpoint) and add the state terms per config.
  std::map<std::pair<int, int>, std::int64_t> replay_cache;
  const auto replay_peak = [&](int ns, int nc) {
    const auto key = std::make_pair(ns, nc);
    auto it = replay_cache.find(key);
    if (it != replay_cache.end()) return it->second;
    PlanConfig probe;
    probe.s_chunk = layout.s_chunk;
    probe.n_chunk = n_chunk;
    probe.n_persist = n_chunk;
    probe.n_buffer = 0;
    probe.n_block = n_block;
    probe.n_interval = n_interval;
    probe.n_swap = ns;
    probe.n_checkpoint = nc;
    const auto sched = build_block_schedule(n_block, ns, nc, n_interval);
    const std::int64_t v =
        estimate_peak_memory(trace, sched, probe, hw, opts).replay_peak;
    replay_cache.emplace(key, v);
    return v;
  };

  std::vector<Candidate> out;
  for (int np = 0; np <= n_chunk; ++np) {
    int nb_lo, nb_hi;
    if (np == n_chunk) {
      nb_lo = nb_hi = 0;
    } else {
      nb_lo = std::min(3, n_chunk - np);
      nb_hi = n_chunk - np;
    }
    for (int nb = nb_lo; nb <= nb_hi; ++nb) {
      for (int ns = 0; ns <= std::min(swap_max, n_block); ++ns) {
        const int nc_lo = ns > 1 ? (ns - 1) * n_interval : 0;
        for (int nc = nc_lo; nc <= n_block - ns; ++nc) {
          Candidate c;
          c.config.s_chunk = layout.s_chunk;
          c.config.n_chunk = n_chunk;
          c.config.n_persist = np;
          c.config.n_buffer = nb;
          c.config.n_block = n_block;
          c.config.n_interval = n_interval;
          c.config.n_swap = ns;
          c.config.n_checkpoint = nc;
          const std::int64_t states =
              persistent_chunk_bytes(layout.s_chunk) * np +
              buffer_chunk_bytes(layout.s_chunk) * nb;
          c.m_peak_before_alpha = replay_peak(ns, nc) + states;
          c.m_peak = static_cast<std::int64_t>(std::llround(
              opts.alpha * static_cast<double>(c.m_peak_before_alpha)));
          out.push_back(c);
        }
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    if (a.m_peak != b.m_peak) return a.m_peak < b.m_peak;
    if (a.config.n_persist != b.config.n_persist)
      return a.config.n_persist < b.config.n_persist;
    if (a.config.n_buffer != b.config.n_buffer)
      return a.config.n_buffer < b.config.n_buffer;
    if (a.config.n_swap != b.config.n_swap) return a.config.n_swap < b.config.n_swap;
    return a.config.n_checkpoint < b.config.n_checkpoint;
  });
  return out;
}

}  // namespace

std::vector<PlanConfig> enumerate_candidates(const ChunkLayout& layout,
                                             const ModelTrace& trace,
                                             const HardwareProfile& hw,
                                             const CostOptions& opts) {
  std::vector<PlanConfig> configs;
  for (const auto& c : enumerate_impl(layout, trace, hw, opts))
    configs.push_back(c.config);
  return configs;
}

bool config_feasible(const ModelTrace& trace, const PlanConfig& config,
                     std::int64_t m_peak, const HardwareProfile& hw) {
  if (m_peak >= hw.gpu_mem) return false;
  if (config.n_swap > 0 &&
      hw.gpu_mem - m_peak < max_block_act_bytes(trace))
    return false;
  const std::int64_t host_states =
      persistent_chunk_bytes(config.s_chunk) *
      (config.n_chunk - config.n_persist);
  return host_states <= hw.cpu_mem;
}

bool config_preferred(double t_iter_a, const PlanConfig& a, std::int64_t peak_a,
                      double t_iter_b, const PlanConfig& b, std::int64_t peak_b) {
  if (t_iter_a != t_iter_b) return t_iter_a < t_iter_b;
  if (a.n_swap != b.n_swap) return a.n_swap < b.n_swap;
  if (a.n_checkpoint != b.n_checkpoint) return a.n_checkpoint < b.n_checkpoint;
  if (a.n_persist != b.n_persist) return a.n_persist > b.n_persist;
  if (a.n_buffer != b.n_buffer) return a.n_buffer > b.n_buffer;
  return peak_a < peak_b;
}

SearchOutcome find_optimal(const ModelTrace& trace, const ChunkLayout& layout,
                           const HardwareProfile& hw, const CostOptions& opts) {
  hw.validate();
  const auto candidates = enumerate_impl(layout, trace, hw, opts);

  std::map<std::pair<int, int>, BlockSchedule> schedules;
  const auto schedule_for = [&](const PlanConfig& c) -> const BlockSchedule& {
    const auto key = std::make_pair(c.n_swap, c.n_checkpoint);
    auto it = schedules.find(key);
    if (it == schedules.end())
      it = schedules
               .emplace(key, build_block_schedule(c.n_block, c.n_swap,
                                                  c.n_checkpoint, c.n_interval))
               .first;
    return it->second;
  };

  SearchOutcome outcome;
  bool have_best = false;
  double best_t = 0;
  std::int64_t best_peak = 0;
  std::vector<std::pair<PlanConfig, double>> feasible;

  std::size_t i = 0;
  for (; i < candidates.size(); ++i) {
    const Candidate& cand = candidates[i];
    // Candidates are memory-ordered: past capacity everything else is
    // infeasible too.
    if (cand.m_peak >= hw.gpu_mem) break;
    if (!config_feasible(trace, cand.config, cand.m_peak, hw)) {
      ++outcome.n_pruned;
      continue;
    }
    const auto& sched = schedule_for(cand.config);
    CostEstimate est;
    est.t_fwd = estimate_fwd(trace, layout, sched, cand.config, hw);
    est.t_bwd = estimate_bwd(trace, layout, sched, cand.config, hw);
    std::tie(est.t_gpu_optim, est.t_cpu_optim) =
        estimate_optim(layout, cand.config, hw);
    est.t_iter = est.t_fwd + std::max(est.t_bwd + est.t_gpu_optim, est.t_cpu_optim);
    est.m_peak = cand.m_peak;
    est.m_peak_before_alpha = cand.m_peak_before_alpha;
    ++outcome.n_evaluated;
    feasible.push_back({cand.config, est.t_iter});

    if (!have_best || config_preferred(est.t_iter, cand.config, cand.m_peak,
                                       best_t, outcome.best, best_peak)) {
      have_best = true;
      best_t = est.t_iter;
      best_peak = cand.m_peak;
      outcome.best = cand.config;
      outcome.estimate = est;
    }
  }
  outcome.n_pruned += static_cast<std::int64_t>(candidates.size() - i);

  if (!have_best)
    throw NoFeasibleConfig(
        "even the maximum-savings configuration exceeds device memory");

  std::sort(feasible.begin(), feasible.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });
  if (feasible.size() > 16) feasible.resize(16);
  outcome.frontier = std::move(feasible);

  // Recompute the winner's full estimate with stage breakdowns.
  outcome.estimate = estimate_iteration(trace, layout, schedule_for(outcome.best),
                                        outcome.best, hw, opts);
  return outcome;
}

}  // namespace memplan
