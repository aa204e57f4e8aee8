#include "memplan/hardware.hpp"

#include <istream>
#include <ostream>

#include <json.hpp>

#include "memplan/errors.hpp"

namespace memplan {

void HardwareProfile::validate() const {
  if (h2d_bw <= 0) throw InvariantViolation("h2d_bw must be positive");
  if (d2h_bw <= 0) throw InvariantViolation("d2h_bw must be positive");
  if (coll_bw <= 0) throw InvariantViolation("coll_bw must be positive");
  if (coll_alpha < 0) throw InvariantViolation("coll_alpha must be non-negative");
  if (world_size < 1) throw InvariantViolation("world_size must be >= 1");
  if (gpu_mem <= 0) throw InvariantViolation("gpu_mem must be positive");
  if (cpu_mem <= 0) throw InvariantViolation("cpu_mem must be positive");
  if (cpu_optim_rate <= 0) throw InvariantViolation("cpu_optim_rate must be positive");
  if (gpu_optim_rate <= 0) throw InvariantViolation("gpu_optim_rate must be positive");
}

double transfer_time(std::int64_t bytes, double bw) {
  if (bw <= 0) throw ZeroBandwidth("transfer bandwidth must be positive");
  return static_cast<double>(bytes) / bw;
}

double gather_time(std::int64_t chunk_bytes, const HardwareProfile& hw) {
  if (hw.world_size <= 1) return 0.0;
  const double w = static_cast<double>(hw.world_size);
  return hw.coll_alpha +
         static_cast<double>(chunk_bytes) * (w - 1.0) / (w * hw.coll_bw);
}

double reduce_time(std::int64_t chunk_bytes, const HardwareProfile& hw) {
  return gather_time(chunk_bytes, hw);
}

double contended_bandwidth(double base_bw, int n_streams) {
  if (n_streams < 1) throw InvariantViolation("n_streams must be >= 1");
  return base_bw / static_cast<double>(n_streams);
}

namespace {

const char* const kFields[] = {"h2d_bw",     "d2h_bw",   "coll_alpha",
                               "coll_bw",    "world_size", "gpu_mem",
                               "cpu_mem",    "cpu_optim_rate",
                               "gpu_optim_rate"};

}  // namespace

HardwareProfile load_profile(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedTrace(std::string("profile parse failure: ") + e.what());
  }
  for (auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* f : kFields) known = known || key == f;
    if (!known) throw MalformedTrace("unknown profile key: " + key);
  }
  HardwareProfile hw;
  try {
    hw.h2d_bw = j.at("h2d_bw").get<double>();
    hw.d2h_bw = j.at("d2h_bw").get<double>();
    hw.coll_alpha = j.at("coll_alpha").get<double>();
    hw.coll_bw = j.at("coll_bw").get<double>();
    hw.world_size = j.at("world_size").get<int>();
    hw.gpu_mem = j.at("gpu_mem").get<std::int64_t>();
    hw.cpu_mem = j.at("cpu_mem").get<std::int64_t>();
    hw.cpu_optim_rate = j.at("cpu_optim_rate").get<double>();
    hw.gpu_optim_rate = j.at("gpu_optim_rate").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw MalformedTrace(std::string("profile field error: ") + e.what());
  }
  hw.validate();
  return hw;
}

void save_profile(const HardwareProfile& hw, std::ostream& out) {
  nlohmann::ordered_json j;
  j["h2d_bw"] = hw.h2d_bw;
  j["d2h_bw"] = hw.d2h_bw;
  j["coll_alpha"] = hw.coll_alpha;
  j["coll_bw"] = hw.coll_bw;
  j["world_size"] = hw.world_size;
  j["gpu_mem"] = hw.gpu_mem;
  j["cpu_mem"] = hw.cpu_mem;
  j["cpu_optim_rate"] = hw.cpu_optim_rate;
  j["gpu_optim_rate"] = hw.gpu_optim_rate;
  out << j.dump(2) << "\n";
}

}  // namespace memplan
