#pragma once

#include <string>
#include <vector>

#include "memplan/hardware.hpp"
#include "memplan/trace.hpp"

namespace memplan {

// Named model and hardware configurations for the reference experiments.
// Lookup throws UnknownPreset for anything not listed.
struct PresetCatalog {
  static ModelSpec model(const std::string& name);
  static HardwareProfile hardware(const std::string& name);
  static std::vector<std::string> model_names();
  static std::vector<std::string> hardware_names();
};

ModelSpec get_model(const std::string& name);
HardwareProfile get_hardware(const std::string& name);

}  // namespace memplan
