#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace memplan {

// Testbed description used by the cost models and the simulator.
// Bandwidths are bytes/second, rates are parameters/second.
//
// The optimizer rates are calibration parameters: they are not measurable
// from a trace and should be adjusted per machine (see README). The shipped
// presets carry conservative defaults for the two reference testbeds.
struct HardwareProfile {
  double h2d_bw = 0;         // host-to-device bandwidth, B/s
  double d2h_bw = 0;         // device-to-host bandwidth, B/s
  double coll_alpha = 0;     // collective launch latency, s
  double coll_bw = 0;        // collective effective bandwidth, B/s
  int world_size = 1;        // data-parallel ranks
  std::int64_t gpu_mem = 0;  // device memory capacity, bytes
  std::int64_t cpu_mem = 0;  // host memory capacity, bytes
  double cpu_optim_rate = 0; // CPU optimizer throughput, params/s
  double gpu_optim_rate = 0; // GPU optimizer throughput, params/s

  void validate() const;  // throws InvariantViolation
};

// bytes / bw. Throws ZeroBandwidth when bw <= 0 (bytes = 0 still requires a
// valid bandwidth).
double transfer_time(std::int64_t bytes, double bw);

// Ring all-gather cost: coll_alpha + bytes * (w-1) / (w * coll_bw).
// A single rank has nothing to gather and pays nothing.
double gather_time(std::int64_t chunk_bytes, const HardwareProfile& hw);

// Gradient reduction across ranks, same latency/bandwidth model as gather.
double reduce_time(std::int64_t chunk_bytes, const HardwareProfile& hw);

// Equal-share contention: n_streams concurrent transfers in one direction
// each see base_bw / n_streams. Directions do not contend with each other.
double contended_bandwidth(double base_bw, int n_streams);

HardwareProfile load_profile(std::istream& in);
void save_profile(const HardwareProfile& hw, std::ostream& out);

}  // namespace memplan
