#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "memplan/cost.hpp"
#include "memplan/layout.hpp"
#include "memplan/search.hpp"
#include "memplan/sim.hpp"

namespace memplan {

// Runs the command-line interface. Returns the process exit code:
// 0 success, 1 domain error (error name on err), 2 usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

// Plan-file serialization (consumed by estimate/simulate and tests).
std::string plan_to_json(const PlanConfig& config, const ChunkLayout& layout,
                         const BlockSchedule& schedule,
                         const SearchOutcome* outcome = nullptr);
PlanConfig plan_config_from_json(std::istream& in);

std::string estimate_to_json(const CostEstimate& est);
std::string simulation_to_json(const SimulationResult& result);

// Deterministic sample of feasible configurations (Fisher-Yates over the
// feasible candidate stream with the given seed).
std::vector<PlanConfig> sample_feasible_configs(const ModelTrace& trace,
                                                const ChunkLayout& layout,
                                                const HardwareProfile& hw,
                                                int n_samples,
                                                unsigned long long seed,
                                                const CostOptions& opts = {});

}  // namespace memplan
