#pragma once

#include <cstdint>
#include <vector>

#include "memplan/cost.hpp"
#include "memplan/hardware.hpp"
#include "memplan/layout.hpp"
#include "memplan/trace.hpp"

namespace memplan {

struct SearchOutcome {
  PlanConfig best;
  CostEstimate estimate;
  std::int64_t n_evaluated = 0;
  std::int64_t n_pruned = 0;
  std::vector<std::pair<PlanConfig, double>> frontier;  // (config, t_iter)
};

// Candidate stream, ordered by ascending estimated peak memory. The swap
// count is capped both by the interval layout and by how many block
// swap-outs fit inside the forward compute at contended D2H bandwidth.
std::vector<PlanConfig> enumerate_candidates(const ChunkLayout& layout,
                                             const ModelTrace& trace,
                                             const HardwareProfile& hw,
                                             const CostOptions& opts = {});

// A config is feasible when its estimated peak fits the device, swap
// configs keep one block of activation headroom for timely swap-ins, and
// the offloaded model states fit host memory.
bool config_feasible(const ModelTrace& trace, const PlanConfig& config,
                     std::int64_t m_peak, const HardwareProfile& hw);

// Total preference order used by the search: shorter t_iter, then fewer
// swap blocks, fewer checkpoint blocks, more persistent chunks, more
// buffers, smaller peak. Ties on runtime therefore resolve toward the
// least-intrusive plan.
bool config_preferred(double t_iter_a, const PlanConfig& a, std::int64_t peak_a,
                      double t_iter_b, const PlanConfig& b, std::int64_t peak_b);

// Exhaustive search with memory-ordered early stopping; returns the
// feasible configuration with the shortest estimated iteration.
SearchOutcome find_optimal(const ModelTrace& trace, const ChunkLayout& layout,
                           const HardwareProfile& hw,
                           const CostOptions& opts = {});

}  // namespace memplan
