#include <doctest.h>

#include <random>
#include <sstream>

#include "memplan/errors.hpp"
#include "memplan/hardware.hpp"
#include "memplan/presets.hpp"

using namespace memplan;

TEST_CASE("transfer_time basics") {
  CHECK(transfer_time(0, 1e9) == 0.0);
  CHECK(transfer_time(15'800'000'000, 15.8e9) == doctest::Approx(1.0));
  CHECK(transfer_time(31'500'000'000, 31.5e9) == doctest::Approx(1.0));
  CHECK_THROWS_AS(transfer_time(1, 0.0), ZeroBandwidth);
}

TEST_CASE("gather_time single rank and formula") {
  HardwareProfile hw = get_hardware("a100x4");
  hw.world_size = 1;
  CHECK(gather_time(123456789, hw) == 0.0);

  hw.world_size = 4;
  hw.coll_alpha = 0;
  hw.coll_bw = 1e9;
  CHECK(gather_time(1'000'000'000, hw) == doctest::Approx(0.75));
}

TEST_CASE("gather_time monotone in bytes") {
  HardwareProfile hw = get_hardware("rtx3090x4");
  std::mt19937_64 rng(0);
  for (int i = 0; i < 200; ++i) {
    const std::int64_t a = rng() % (1ll << 32);
    const std::int64_t b = a + rng() % (1ll << 30);
    CHECK(gather_time(a, hw) <= gather_time(b, hw));
  }
}

TEST_CASE("contended bandwidth equal share") {
  CHECK(contended_bandwidth(16e9, 1) == 16e9);
  CHECK(contended_bandwidth(16e9, 2) == 8e9);
  CHECK_THROWS_AS(contended_bandwidth(1e9, 0), InvariantViolation);
}

TEST_CASE("profile save/load round-trip") {
  const HardwareProfile hw = get_hardware("rtx3090x4");
  std::ostringstream buf;
  save_profile(hw, buf);
  std::istringstream in(buf.str());
  const HardwareProfile back = load_profile(in);
  CHECK(back.h2d_bw == hw.h2d_bw);
  CHECK(back.coll_bw == hw.coll_bw);
  CHECK(back.world_size == hw.world_size);
  CHECK(back.gpu_mem == hw.gpu_mem);
}

TEST_CASE("profile unknown keys rejected") {
  std::istringstream in(R"({"h2d_bw": 1, "oops": 2})");
  CHECK_THROWS_AS(load_profile(in), MalformedTrace);
}

TEST_CASE("profile invariants enforced") {
  HardwareProfile hw = get_hardware("a100x4");
  hw.world_size = 0;
  CHECK_THROWS_AS(hw.validate(), InvariantViolation);
}

TEST_CASE("gather_time at zero bytes is the bare latency") {
  HardwareProfile hw = get_hardware("a100x4");
  hw.coll_alpha = 12e-6;
  CHECK(gather_time(0, hw) == doctest::Approx(12e-6));
  hw.world_size = 1;
  CHECK(gather_time(0, hw) == 0.0);
}
