#include "memplan/trace.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "memplan/errors.hpp"

namespace memplan {

namespace {

std::string at_index(int i) { return " (operator index " + std::to_string(i) + ")"; }

}  // namespace

void ModelTrace::validate() const {
  if (ops.empty()) throw InvariantViolation("trace has no operators");
  if (m_fwd < 0) throw InvariantViolation("m_fwd must be non-negative");
  if (n_blocks < 0) throw InvariantViolation("n_blocks must be non-negative");
  int prev_block = -1;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const OperatorRecord& op = ops[i];
    const int idx = static_cast<int>(i);
    if (op.index != idx)
      throw InvariantViolation("indices must be contiguous 0..len-1" + at_index(idx));
    if (op.t_fwd < 0) throw InvariantViolation("t_fwd must be >= 0" + at_index(idx));
    if (op.t_bwd < 0) throw InvariantViolation("t_bwd must be >= 0" + at_index(idx));
    if (op.param_bytes < 0)
      throw InvariantViolation("param_bytes must be >= 0" + at_index(idx));
    if (op.act_bytes < 0)
      throw InvariantViolation("act_bytes must be >= 0" + at_index(idx));
    if (op.d_peak_op < std::max<std::int64_t>(0, op.d_cur_op))
      throw InvariantViolation("d_peak_op must be >= max(0, d_cur_op)" + at_index(idx));
    if (op.d_peak_prior < std::max<std::int64_t>(0, op.d_cur_prior))
      throw InvariantViolation("d_peak_prior must be >= max(0, d_cur_prior)" +
                               at_index(idx));
    if (op.block_id) {
      if (*op.block_id < 0 || *op.block_id >= n_blocks)
        throw InvariantViolation("block_id outside [0, n_blocks)" + at_index(idx));
      if (*op.block_id < prev_block)
        throw InvariantViolation("block_id values must be non-decreasing" +
                                 at_index(idx));
      prev_block = *op.block_id;
    }
  }
}

int ModelTrace::dtype_bytes() const {
  auto it = meta.find("dtype_bytes");
  if (it == meta.end()) return 2;
  try {
    int v = std::stoi(it->second);
    return v > 0 ? v : 2;
  } catch (...) {
    return 2;
  }
}

std::int64_t ModelTrace::total_param_bytes() const {
  std::int64_t s = 0;
  for (const auto& op : ops) s += op.param_bytes;
  return s;
}

std::int64_t ModelTrace::total_act_bytes() const {
  std::int64_t s = 0;
  for (const auto& op : ops) s += op.act_bytes;
  return s;
}

double ModelTrace::total_fwd_time() const {
  double s = 0;
  for (const auto& op : ops) s += op.t_fwd;
  return s;
}

double ModelTrace::total_bwd_time() const {
  double s = 0;
  for (const auto& op : ops) s += op.t_bwd;
  return s;
}

std::int64_t block_activation_bytes(const ModelTrace& trace, int block) {
  if (block < 0 || block >= trace.n_blocks)
    throw BlockOutOfRange("block " + std::to_string(block) + " outside [0, " +
                          std::to_string(trace.n_blocks) + ")");
  std::int64_t s = 0;
  for (const auto& op : trace.ops)
    if (op.block_id && *op.block_id == block) s += op.act_bytes;
  return s;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

const char* const kTopKeys[] = {"meta", "m_fwd", "n_blocks", "ops"};
const char* const kOpKeys[] = {"index",       "name",       "block_id",
                               "t_fwd",       "t_bwd",      "param_bytes",
                               "act_bytes",   "d_cur_prior", "d_peak_prior",
                               "d_cur_op",    "d_peak_op"};

void reject_unknown(const nlohmann::json& j, const char* const* keys,
                    std::size_t n, const std::string& where) {
  for (auto& [key, _] : j.items()) {
    bool known = false;
    for (std::size_t i = 0; i < n; ++i) known = known || key == keys[i];
    if (!known) throw MalformedTrace("unknown key '" + key + "' in " + where);
  }
}

}  // namespace

ModelTrace load_trace(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedTrace(std::string("parse failure: ") + e.what());
  }
  if (!j.is_object()) throw MalformedTrace("top level must be an object");
  reject_unknown(j, kTopKeys, std::size(kTopKeys), "trace");

  ModelTrace t;
  try {
    t.m_fwd = j.at("m_fwd").get<std::int64_t>();
    t.n_blocks = j.at("n_blocks").get<int>();
    if (j.contains("meta")) {
      for (auto& [k, v] : j.at("meta").items())
        t.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
    const auto& ops = j.at("ops");
    if (!ops.is_array()) throw MalformedTrace("ops must be an array");
    for (const auto& jo : ops) {
      reject_unknown(jo, kOpKeys, std::size(kOpKeys), "operator record");
      OperatorRecord op;
      op.index = jo.at("index").get<int>();
      op.name = jo.at("name").get<std::string>();
      if (jo.contains("block_id") && !jo.at("block_id").is_null())
        op.block_id = jo.at("block_id").get<int>();
      op.t_fwd = jo.at("t_fwd").get<double>();
      op.t_bwd = jo.at("t_bwd").get<double>();
      op.param_bytes = jo.at("param_bytes").get<std::int64_t>();
      op.act_bytes = jo.at("act_bytes").get<std::int64_t>();
      op.d_cur_prior = jo.at("d_cur_prior").get<std::int64_t>();
      op.d_peak_prior = jo.at("d_peak_prior").get<std::int64_t>();
      op.d_cur_op = jo.at("d_cur_op").get<std::int64_t>();
      op.d_peak_op = jo.at("d_peak_op").get<std::int64_t>();
      t.ops.push_back(std::move(op));
    }
  } catch (const nlohmann::json::exception& e) {
    throw MalformedTrace(std::string("field error: ") + e.what());
  }
  t.validate();
  return t;
}

void save_trace(const ModelTrace& trace, std::ostream& out) {
  nlohmann::ordered_json j;
  j["meta"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : trace.meta) j["meta"][k] = v;
  j["m_fwd"] = trace.m_fwd;
  j["n_blocks"] = trace.n_blocks;
  j["ops"] = nlohmann::ordered_json::array();
  for (const auto& op : trace.ops) {
    nlohmann::ordered_json jo;
    jo["index"] = op.index;
    jo["name"] = op.name;
    if (op.block_id)
      jo["block_id"] = *op.block_id;
    else
      jo["block_id"] = nullptr;
    jo["t_fwd"] = op.t_fwd;
    jo["t_bwd"] = op.t_bwd;
    jo["param_bytes"] = op.param_bytes;
    jo["act_bytes"] = op.act_bytes;
    jo["d_cur_prior"] = op.d_cur_prior;
    jo["d_peak_prior"] = op.d_peak_prior;
    jo["d_cur_op"] = op.d_cur_op;
    jo["d_peak_op"] = op.d_peak_op;
    j["ops"].push_back(std::move(jo));
  }
  out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Synthesis

void ModelSpec::validate() const {
  if (hidden_size <= 0 || n_blocks <= 0 || n_heads <= 0 || vocab_size <= 0 ||
      seq_len <= 0 || batch_size <= 0 || dtype_bytes <= 0)
    throw InvariantViolation("all ModelSpec fields must be positive");
  if (hidden_size % n_heads != 0)
    throw InvariantViolation("hidden_size must be divisible by n_heads");
  if (n_kv_heads != 0 && n_heads % n_kv_heads != 0)
    throw InvariantViolation("n_heads must be divisible by n_kv_heads");
}

namespace {

struct OpShape {
  const char* name;
  std::int64_t params;      // elements
  double flops;             // forward
  std::int64_t act_bytes;   // retained for backward
};

std::vector<OpShape> block_ops(const ModelSpec& s) {
  const std::int64_t h = s.hidden_size;
  const std::int64_t f = s.ffn_hidden > 0 ? s.ffn_hidden : 4 * h;
  const std::int64_t kv = s.n_kv_heads > 0
                              ? (h / s.n_heads) * s.n_kv_heads
                              : h;
  const std::int64_t mlp_in = s.gated_mlp ? 2 * f : f;
  const std::int64_t norm_p = s.bias ? 2 * h : h;
  const double bsh = static_cast<double>(s.batch_size) * s.seq_len * h;
  const double bs = static_cast<double>(s.batch_size) * s.seq_len;
  const std::int64_t tok_bytes =
      static_cast<std::int64_t>(s.batch_size) * s.seq_len * s.dtype_bytes;

  std::vector<OpShape> ops;
  ops.push_back({"attn_norm", norm_p, 8 * bsh, tok_bytes * h});
  ops.push_back({"attn_qkv", h * (h + 2 * kv) + (s.bias ? h + 2 * kv : 0),
                 2 * bsh * static_cast<double>(h + 2 * kv),
                 tok_bytes * (h + 2 * kv)});
  ops.push_back({"attn_core", 0, 4 * bs * static_cast<double>(s.seq_len) * h,
                 tok_bytes * h});
  ops.push_back({"attn_out", h * h + (s.bias ? h : 0),
                 2 * bsh * static_cast<double>(h), tok_bytes * h});
  ops.push_back({"mlp_norm", norm_p, 8 * bsh, tok_bytes * h});
  ops.push_back({"mlp_up", h * mlp_in + (s.bias ? mlp_in : 0),
                 2 * bsh * static_cast<double>(mlp_in), tok_bytes * mlp_in});
  ops.push_back({"mlp_act", 0, 4 * bs * static_cast<double>(f), tok_bytes * f});
  ops.push_back({"mlp_down", f * h + (s.bias ? h : 0),
                 2 * bsh * static_cast<double>(f), tok_bytes * h});
  return ops;
}

}  // namespace

std::int64_t ModelSpec::params_per_block() const {
  std::int64_t total = 0;
  for (const auto& op : block_ops(*this)) total += op.params;
  return total;
}

std::int64_t ModelSpec::total_params() const {
  std::int64_t emb = static_cast<std::int64_t>(vocab_size) * hidden_size;
  if (learned_pos_embedding) emb += static_cast<std::int64_t>(seq_len) * hidden_size;
  std::int64_t head =
      tied_embeddings ? 0 : static_cast<std::int64_t>(vocab_size) * hidden_size;
  return emb + head + static_cast<std::int64_t>(n_blocks) * params_per_block();
}

ModelTrace synthesize_trace(const ModelSpec& spec,
                            const CalibrationConstants& calib) {
  spec.validate();
  if (calib.flops_per_second <= 0)
    throw InvariantViolation("calibration throughput must be positive");
  if (calib.act_coeff <= 0)
    throw InvariantViolation("activation coefficient must be positive");
  if (calib.temp_spike_frac < 0)
    throw InvariantViolation("temp spike fraction must be non-negative");
  if (calib.residual_bytes < 0)
    throw InvariantViolation("residual bytes must be non-negative");

  ModelTrace t;
  t.n_blocks = spec.n_blocks;
  t.m_fwd = calib.residual_bytes;
  t.meta["generator"] = "synthesize_trace";
  t.meta["hidden_size"] = std::to_string(spec.hidden_size);
  t.meta["n_heads"] = std::to_string(spec.n_heads);
  t.meta["vocab_size"] = std::to_string(spec.vocab_size);
  t.meta["seq_len"] = std::to_string(spec.seq_len);
  t.meta["batch_size"] = std::to_string(spec.batch_size);
  t.meta["dtype_bytes"] = std::to_string(spec.dtype_bytes);
  t.meta["flops_per_second"] = std::to_string(calib.flops_per_second);

  const auto scaled_act = [&](std::int64_t raw) {
    return static_cast<std::int64_t>(std::floor(calib.act_coeff *
                                                static_cast<double>(raw)));
  };
  const auto spike = [&](std::int64_t output_bytes) {
    return static_cast<std::int64_t>(std::floor(
        calib.temp_spike_frac * static_cast<double>(output_bytes)));
  };

  int idx = 0;
  const auto push = [&](const std::string& name, std::optional<int> block,
                        std::int64_t param_elems, double flops,
                        std::int64_t act_raw, std::int64_t spike_basis) {
    OperatorRecord op;
    op.index = idx++;
    op.name = name;
    op.block_id = block;
    op.param_bytes = param_elems * spec.dtype_bytes;
    op.t_fwd = flops / calib.flops_per_second;
    op.t_bwd = 2.0 * op.t_fwd;
    op.act_bytes = scaled_act(act_raw);
    op.d_cur_prior = 0;
    op.d_peak_prior = 0;
    op.d_cur_op = 0;
    op.d_peak_op = spike(spike_basis != 0 ? spike_basis : op.act_bytes);
    t.ops.push_back(std::move(op));
  };

  const double bs = static_cast<double>(spec.batch_size) * spec.seq_len;
  const std::int64_t tok_bytes = static_cast<std::int64_t>(spec.batch_size) *
                                 spec.seq_len * spec.dtype_bytes;

  std::int64_t emb_params =
      static_cast<std::int64_t>(spec.vocab_size) * spec.hidden_size;
  if (spec.learned_pos_embedding)
    emb_params += static_cast<std::int64_t>(spec.seq_len) * spec.hidden_size;
  push("embedding", std::nullopt, emb_params, 2 * bs * spec.hidden_size,
       tok_bytes * spec.hidden_size, 0);

  for (int b = 0; b < spec.n_blocks; ++b) {
    for (const auto& shape : block_ops(spec)) {
      push(std::string(shape.name) + "." + std::to_string(b), b, shape.params,
           shape.flops, shape.act_bytes, 0);
    }
  }

  const std::int64_t logits_bytes = static_cast<std::int64_t>(spec.batch_size) *
                                    spec.seq_len * spec.vocab_size *
                                    spec.dtype_bytes;
  push("lm_head", std::nullopt,
       spec.tied_embeddings
           ? 0
           : static_cast<std::int64_t>(spec.vocab_size) * spec.hidden_size,
       2 * bs * static_cast<double>(spec.hidden_size) * spec.vocab_size,
       logits_bytes, 0);
  push("cross_entropy", std::nullopt, 0,
       5 * bs * static_cast<double>(spec.vocab_size), 0, logits_bytes);

  t.validate();
  return t;
}

}  // namespace memplan
