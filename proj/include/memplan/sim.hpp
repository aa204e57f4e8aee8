#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "memplan/cost.hpp"
#include "memplan/hardware.hpp"
#include "memplan/layout.hpp"
#include "memplan/trace.hpp"

namespace memplan {

struct TimelineEvent {
  std::int64_t time_ns = 0;
  std::string resource;
  std::string event;
  std::string subject;
};

struct MemSample {
  std::int64_t time_ns = 0;
  std::int64_t bytes = 0;
};

struct SimulationResult {
  double t_iter = 0;
  double t_fwd = 0;
  double t_bwd = 0;
  double t_cpu_optim_span = 0;
  std::int64_t m_peak = 0;
  std::vector<TimelineEvent> timeline;
  std::vector<MemSample> mem_trace;
};

// Event-driven execution of one iteration under the given plan.
//
// Resources: a serial GPU queue, full-duplex H2D/D2H links and a collective
// link (all equal-share under contention), and a serial CPU optimizer.
// Non-persistent chunks are prefetched one ahead of execution into
// pre-allocated buffers, evicted farthest-next-use first, and drained
// (reduce, then shard offload) after their backward slice; their CPU
// updates overlap remaining GPU work. Swap blocks move activations out
// after their forward pass and back in under a free-memory gate during the
// backward pass. Checkpoint blocks recompute their forward before their
// backward slice.
SimulationResult simulate(const ModelTrace& trace, const ChunkLayout& layout,
                          const BlockSchedule& schedule,
                          const PlanConfig& config, const HardwareProfile& hw);

struct ValidationRow {
  PlanConfig config;
  double est_t_iter = 0;
  double sim_t_iter = 0;
  double t_rel_err = 0;  // |est - sim| / sim
  std::int64_t est_m_peak = 0;
  std::int64_t sim_m_peak = 0;
  double m_ratio = 0;  // est / sim
  bool failed = false;
  std::string error;
};

struct ValidationReport {
  std::vector<ValidationRow> rows;
  double max_t_rel_err = 0;
  double median_t_rel_err = 0;
  double max_m_ratio = 0;
  double min_m_ratio = 0;

  void to_csv(std::ostream& out) const;
};

// Analytic estimate vs. simulation for every config.
ValidationReport validate(const ModelTrace& trace, const ChunkLayout& layout,
                          const HardwareProfile& hw,
                          const std::vector<PlanConfig>& configs,
                          const CostOptions& opts = {});

void timeline_to_csv(const std::vector<TimelineEvent>& timeline,
                     std::ostream& out);
void timeline_to_chrome_trace(const std::vector<TimelineEvent>& timeline,
                              std::ostream& out);
void mem_trace_to_csv(const std::vector<MemSample>& samples, std::ostream& out);

}  // namespace memplan
