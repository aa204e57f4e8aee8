#include <doctest.h>

#include <sstream>

#include "memplan/errors.hpp"
#include "memplan/presets.hpp"
#include "memplan/trace.hpp"

using namespace memplan;

namespace {

std::string minimal_trace_json() {
  return R"({
    "meta": {},
    "m_fwd": 0,
    "n_blocks": 0,
    "ops": [
      {"index": 0, "name": "op", "block_id": null, "t_fwd": 0.0, "t_bwd": 0.0,
       "param_bytes": 0, "act_bytes": 0, "d_cur_prior": 0, "d_peak_prior": 0,
       "d_cur_op": 0, "d_peak_op": 0}
    ]
  })";
}

}  // namespace

TEST_CASE("minimal one-op trace loads") {
  std::istringstream in(minimal_trace_json());
  const ModelTrace t = load_trace(in);
  CHECK(t.ops.size() == 1);
  CHECK(t.m_fwd == 0);
}

TEST_CASE("peak delta below net delta is rejected with the operator index") {
  ModelTrace t;
  t.n_blocks = 0;
  for (int i = 0; i < 5; ++i) {
    OperatorRecord op;
    op.index = i;
    op.name = "op" + std::to_string(i);
    t.ops.push_back(op);
  }
  t.ops[3].d_cur_op = 10;
  t.ops[3].d_peak_op = 5;
  std::ostringstream buf;
  save_trace(t, buf);
  std::istringstream in(buf.str());
  try {
    load_trace(in);
    FAIL("expected InvariantViolation");
  } catch (const InvariantViolation& e) {
    CHECK(std::string(e.what()).find("index 3") != std::string::npos);
  }
}

TEST_CASE("unknown keys are rejected") {
  std::string s = minimal_trace_json();
  s.insert(s.rfind('}'), R"(, "extra": 1)");
  std::istringstream in(s);
  CHECK_THROWS_AS(load_trace(in), MalformedTrace);
}

TEST_CASE("malformed text is MalformedTrace") {
  std::istringstream in("not json");
  CHECK_THROWS_AS(load_trace(in), MalformedTrace);
}

TEST_CASE("save/load round-trip is identity") {
  const ModelTrace t = synthesize_trace(get_model("gpt2-1b"));
  std::ostringstream buf;
  save_trace(t, buf);
  std::istringstream in(buf.str());
  const ModelTrace u = load_trace(in);
  REQUIRE(u.ops.size() == t.ops.size());
  CHECK(u.m_fwd == t.m_fwd);
  CHECK(u.n_blocks == t.n_blocks);
  CHECK(u.meta == t.meta);
  for (std::size_t i = 0; i < t.ops.size(); ++i) {
    CHECK(u.ops[i].name == t.ops[i].name);
    CHECK(u.ops[i].block_id == t.ops[i].block_id);
    CHECK(u.ops[i].t_fwd == doctest::Approx(t.ops[i].t_fwd));
    CHECK(u.ops[i].param_bytes == t.ops[i].param_bytes);
    CHECK(u.ops[i].act_bytes == t.ops[i].act_bytes);
    CHECK(u.ops[i].d_peak_op == t.ops[i].d_peak_op);
  }
}

TEST_CASE("block ids must be non-decreasing") {
  ModelTrace t;
  t.n_blocks = 2;
  OperatorRecord a, b;
  a.index = 0;
  a.name = "a";
  a.block_id = 1;
  b.index = 1;
  b.name = "b";
  b.block_id = 0;
  t.ops = {a, b};
  CHECK_THROWS_AS(t.validate(), InvariantViolation);
}

TEST_CASE("synthesized parameter totals match the named sizes") {
  ModelSpec ten = get_model("gpt2-10b");
  CHECK(std::abs(ten.total_params() / 10e9 - 1.0) < 0.10);
  ModelSpec forty = get_model("gpt2-40b");
  CHECK(std::abs(forty.total_params() / 40e9 - 1.0) < 0.10);

  const ModelTrace t = synthesize_trace(ten);
  CHECK(t.total_param_bytes() == ten.total_params() * ten.dtype_bytes);
}

TEST_CASE("per-block parameter bytes follow the GPT-2 decomposition") {
  const ModelSpec spec = get_model("gpt2-10b");
  const std::int64_t h = spec.hidden_size;
  CHECK(spec.params_per_block() == 12 * h * h + 13 * h);
  const ModelTrace t = synthesize_trace(spec);
  std::int64_t block0 = 0;
  for (const auto& op : t.ops)
    if (op.block_id == 0) block0 += op.param_bytes;
  CHECK(block0 == spec.params_per_block() * spec.dtype_bytes);
}

TEST_CASE("doubling the batch doubles activations and keeps parameters") {
  ModelSpec spec = get_model("gpt2-1b");
  spec.batch_size = 4;
  const ModelTrace a = synthesize_trace(spec);
  spec.batch_size = 8;
  const ModelTrace b = synthesize_trace(spec);
  REQUIRE(a.ops.size() == b.ops.size());
  for (std::size_t i = 0; i < a.ops.size(); ++i) {
    CHECK(b.ops[i].act_bytes == 2 * a.ops[i].act_bytes);
    CHECK(b.ops[i].param_bytes == a.ops[i].param_bytes);
  }
}

TEST_CASE("synthesis is deterministic") {
  const ModelSpec spec = get_model("gpt2-1b");
  std::ostringstream a, b;
  save_trace(synthesize_trace(spec), a);
  save_trace(synthesize_trace(spec), b);
  CHECK(a.str() == b.str());
}

TEST_CASE("block activation sums partition the block-attributed total") {
  const ModelTrace t = synthesize_trace(get_model("gpt2-1b"));
  std::int64_t by_block = 0;
  for (int b = 0; b < t.n_blocks; ++b) by_block += block_activation_bytes(t, b);
  std::int64_t non_block = 0;
  for (const auto& op : t.ops)
    if (!op.block_id) non_block += op.act_bytes;
  CHECK(by_block + non_block == t.total_act_bytes());
}

TEST_CASE("block_activation_bytes range checking") {
  const ModelTrace t = synthesize_trace(get_model("gpt2-1b"));
  CHECK_THROWS_AS(block_activation_bytes(t, -1), BlockOutOfRange);
  CHECK_THROWS_AS(block_activation_bytes(t, t.n_blocks), BlockOutOfRange);
}

TEST_CASE("hand-built two-op block sums") {
  ModelTrace t;
  t.n_blocks = 1;
  OperatorRecord a, b, c;
  a.index = 0;
  a.name = "x";
  a.block_id = 0;
  a.act_bytes = 5;
  b.index = 1;
  b.name = "y";
  b.block_id = 0;
  b.act_bytes = 7;
  c.index = 2;
  c.name = "loss";
  t.ops = {a, b, c};
  t.validate();
  CHECK(block_activation_bytes(t, 0) == 12);
}
