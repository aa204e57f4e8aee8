#include "memplan/presets.hpp"

#include <map>

#include "memplan/errors.hpp"

namespace memplan {

namespace {

ModelSpec gpt2(int hidden, int blocks, int heads) {
  ModelSpec s;
  s.hidden_size = hidden;
  s.n_blocks = blocks;
  s.n_heads = heads;
  return s;
}

ModelSpec opt(int hidden, int blocks, int heads) {
  // OPT keeps the GPT-2 shape (4h MLP with biases, learned positions).
  return gpt2(hidden, blocks, heads);
}

ModelSpec llama(int hidden, int blocks, int heads, int ffn, int kv_heads) {
  ModelSpec s;
  s.hidden_size = hidden;
  s.n_blocks = blocks;
  s.n_heads = heads;
  s.vocab_size = 32000;
  s.ffn_hidden = ffn;
  s.n_kv_heads = kv_heads;
  s.gated_mlp = true;
  s.bias = false;
  s.tied_embeddings = false;
  s.learned_pos_embedding = false;
  return s;
}

const std::map<std::string, ModelSpec>& model_catalog() {
  static const std::map<std::string, ModelSpec> catalog = {
      {"gpt2-1b", gpt2(1536, 32, 16)},
      {"mistral-7b", llama(4096, 32, 32, 14336, 8)},
      {"gpt2-10b", gpt2(4096, 48, 32)},
      {"opt-13b", opt(5120, 40, 40)},
      {"llama-13b", llama(5120, 40, 40, 13824, 40)},
      {"gpt2-15b", gpt2(8192, 18, 64)},
      {"gpt2-20b", gpt2(8192, 24, 64)},
      {"gpt2-30b", gpt2(8192, 36, 64)},
      {"gpt2-40b", gpt2(8192, 50, 64)},
      {"opt-30b", opt(7168, 48, 56)},
      {"llama-34b", llama(8192, 48, 64, 22016, 8)},
  };
  return catalog;
}

// The two reference testbeds. PCIe bandwidths and memory capacities follow
// the testbed descriptions; collective bandwidth on the 3090 box reflects
// measured NCCL throughput over PCIe 3.0 without NVLink, on the A100 box
// the NVLink fabric. Optimizer rates require per-machine calibration; the
// defaults assume a vectorized CPU Adam at 0.5e9 params/s and a fused GPU
// Adam at 1e10 params/s.
const std::map<std::string, HardwareProfile>& hardware_catalog() {
  static const std::map<std::string, HardwareProfile> catalog = [] {
    HardwareProfile rtx;
    rtx.h2d_bw = 15.8e9;
    rtx.d2h_bw = 15.8e9;
    rtx.coll_alpha = 20e-6;
    rtx.coll_bw = 4e9;
    rtx.world_size = 4;
    rtx.gpu_mem = 24e9;
    rtx.cpu_mem = 384e9;
    rtx.cpu_optim_rate = 0.5e9;
    rtx.gpu_optim_rate = 1e10;

    HardwareProfile a100;
    a100.h2d_bw = 31.5e9;
    a100.d2h_bw = 31.5e9;
    a100.coll_alpha = 20e-6;
    a100.coll_bw = 300e9;
    a100.world_size = 4;
    a100.gpu_mem = 80e9;
    a100.cpu_mem = 1000e9;
    a100.cpu_optim_rate = 0.5e9;
    a100.gpu_optim_rate = 1e10;

    HardwareProfile rtx1 = rtx;
    rtx1.world_size = 1;
    HardwareProfile a1001 = a100;
    a1001.world_size = 1;

    return std::map<std::string, HardwareProfile>{
        {"rtx3090x4", rtx},
        {"rtx3090x1", rtx1},
        {"a100x4", a100},
        {"a100x1", a1001},
    };
  }();
  return catalog;
}

}  // namespace

ModelSpec PresetCatalog::model(const std::string& name) {
  auto it = model_catalog().find(name);
  if (it == model_catalog().end())
    throw UnknownPreset("no model preset named '" + name + "'");
  return it->second;
}

HardwareProfile PresetCatalog::hardware(const std::string& name) {
  auto it = hardware_catalog().find(name);
  if (it == hardware_catalog().end())
    throw UnknownPreset("no hardware preset named '" + name + "'");
  return it->second;
}

std::vector<std::string> PresetCatalog::model_names() {
  std::vector<std::string> names;
  for (const auto& [k, _] : model_catalog()) names.push_back(k);
  return names;
}

std::vector<std::string> PresetCatalog::hardware_names() {
  std::vector<std::string> names;
  for (const auto& [k, _] : hardware_catalog()) names.push_back(k);
  return names;
}

ModelSpec get_model(const std::string& name) { return PresetCatalog::model(name); }

HardwareProfile get_hardware(const std::string& name) {
  return PresetCatalog::hardware(name);
}

}  // namespace memplan
