#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace memplan {

// One hooked operator of the profiled iteration, in forward execution order.
//
// Byte quantities are exact integers. The four deltas describe the
// backward-phase memory behaviour around this operator: d_cur_prior /
// d_peak_prior cover the gap before it (unhookable operators), d_cur_op /
// d_peak_op cover the operator body. act_bytes is what the operator retains
// for its own backward computation.
struct OperatorRecord {
  int index = 0;
  std::string name;
  std::optional<int> block_id;  // absent for embedding/head/loss operators
  double t_fwd = 0;             // seconds
  double t_bwd = 0;             // seconds
  std::int64_t param_bytes = 0;
  std::int64_t act_bytes = 0;
  std::int64_t d_cur_prior = 0;
  std::int64_t d_peak_prior = 0;
  std::int64_t d_cur_op = 0;
  std::int64_t d_peak_op = 0;
};

// A full training-iteration trace. Immutable after construction.
//
// m_fwd is the residual allocation floor at the end of the forward pass:
// everything that is neither model states nor retained activations
// (workspaces, reserved pools). Retained activations are reconstructed from
// the per-operator act_bytes, so they are deliberately not folded into
// m_fwd; folding them in would double-count them in the peak-memory model.
struct ModelTrace {
  std::vector<OperatorRecord> ops;
  std::int64_t m_fwd = 0;
  int n_blocks = 0;
  std::map<std::string, std::string> meta;

  void validate() const;  // throws InvariantViolation with the first failure

  // dtype_bytes recorded at synthesis time (meta key "dtype_bytes"), 2 if
  // absent. Needed to convert parameter bytes to parameter counts.
  int dtype_bytes() const;

  std::int64_t total_param_bytes() const;
  std::int64_t total_act_bytes() const;
  double total_fwd_time() const;
  double total_bwd_time() const;
};

// Architecture description for trace synthesis. The defaults describe a
// GPT-2 style decoder; the extra knobs cover gated-MLP / grouped-KV
// families so the named presets land on their published parameter counts.
struct ModelSpec {
  int hidden_size = 0;
  int n_blocks = 0;
  int n_heads = 0;
  int vocab_size = 50257;
  int seq_len = 1024;
  int batch_size = 8;
  int dtype_bytes = 2;

  int ffn_hidden = 0;      // 0 -> 4 * hidden_size
  int n_kv_heads = 0;      // 0 -> n_heads
  bool gated_mlp = false;  // three MLP matrices instead of two
  bool bias = true;        // linear/norm bias terms
  bool tied_embeddings = true;
  bool learned_pos_embedding = true;

  void validate() const;
  std::int64_t params_per_block() const;  // elements
  std::int64_t total_params() const;      // elements
};

// Knobs that turn an architecture into concrete times and sizes.
struct CalibrationConstants {
  double flops_per_second = 42e12;     // effective fp16 throughput
  double act_coeff = 1.0;              // scales every act_bytes
  double temp_spike_frac = 0.25;       // d_peak_op as a fraction of output
  std::int64_t residual_bytes = 256ll << 20;  // m_fwd floor
};

// Parse + validate a trace file (JSON, unknown keys rejected).
ModelTrace load_trace(std::istream& in);
void save_trace(const ModelTrace& trace, std::ostream& out);

// Deterministic synthetic trace: embedding, a fixed per-block operator
// sequence, head, and loss. Backward time is 2x forward per operator.
ModelTrace synthesize_trace(const ModelSpec& spec,
                            const CalibrationConstants& calib = {});

// Sum of act_bytes over operators of one transformer block.
std::int64_t block_activation_bytes(const ModelTrace& trace, int block);

}  // namespace memplan
