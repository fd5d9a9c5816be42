#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "onn/device.hpp"
#include "onn/error.hpp"

using namespace onn;

TEST_CASE("Ohmic current in each state") {
  DeviceParams p;
  p.r_met = 10e3;
  p.r_ins = 1e6;
  CHECK(device_current(1.0, DeviceState::kMetallic, p) == doctest::Approx(100e-6));
  CHECK(device_current(1.0, DeviceState::kInsulating, p) == doctest::Approx(1e-6));
}

TEST_CASE("switching happens at the thresholds, inclusive") {
  const DeviceParams p;
  CHECK(switch_state(p.v_high, DeviceState::kInsulating, p) == DeviceState::kMetallic);
  CHECK(switch_state(std::nextafter(p.v_high, 0.0), DeviceState::kInsulating, p) == DeviceState::kInsulating);
  CHECK(switch_state(p.v_low, DeviceState::kMetallic, p) == DeviceState::kInsulating);
  CHECK(switch_state(std::nextafter(p.v_low, 10.0), DeviceState::kMetallic, p) == DeviceState::kMetallic);
}

TEST_CASE("parameter validation") {
  DeviceParams p;
  p.r_met = p.r_ins;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.v_low = p.v_high;
  CHECK_FALSE(p.valid());
  CHECK(DeviceParams{}.valid());
}

TEST_CASE("current is strictly increasing in voltage for a fixed state") {
  const DeviceParams p;
  for (auto s : {DeviceState::kInsulating, DeviceState::kMetallic}) {
    double prev = -1e9;
    for (int k = -50; k <= 50; ++k) {
      const double i = device_current(0.1 * k, s, p);
      CHECK(i > prev);
      prev = i;
    }
  }
}

TEST_CASE("random voltage paths never switch on the wrong side of a threshold") {
  const DeviceParams p;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.5, 2.5);
  DeviceState s = DeviceState::kInsulating;
  for (int k = 0; k < 20000; ++k) {
    const double v = u(rng);
    const DeviceState next = switch_state(v, s, p);
    if (s == DeviceState::kInsulating && next == DeviceState::kMetallic) REQUIRE(v >= p.v_high);
    if (s == DeviceState::kMetallic && next == DeviceState::kInsulating) REQUIRE(v <= p.v_low);
    s = next;
  }
}

TEST_CASE("IV sweep: branches, loop and resistance contrast") {
  DeviceParams p;
  p.r_ins = 1e6;
  p.r_met = 1e4;
  p.v_low = 0.01;  // metallic state must survive the jump: v_low < v_high * r_met / r_ins
  CurrentRamp ramp;
  ramp.i_max = 4e-6;  // above v_high / r_ins
  const auto iv = iv_sweep(p, ramp);
  REQUIRE(iv.size() > 10);
  double r_up = 0.0;
  double r_down = 0.0;
  for (const auto& pt : iv) {
    if (pt.current <= 0.0) continue;
    const double r = pt.voltage / pt.current;
    if (pt.up && pt.state == DeviceState::kInsulating && r_up == 0.0) r_up = r;
    if (!pt.up && pt.state == DeviceState::kMetallic) r_down = r;
  }
  CHECK(r_up / r_down == doctest::Approx(100.0));
  CHECK(iv_loop_area(iv) > 0.0);

  std::ostringstream os;
  write_iv_csv(os, iv);
  CHECK(os.str().rfind("i_a,v_v,state\n", 0) == 0);
}

TEST_CASE("up-branch voltage is not below the down branch at equal current") {
  DeviceParams p;
  p.r_ins = 1e6;
  p.r_met = 1e4;
  p.v_low = 0.01;
  CurrentRamp ramp;
  ramp.i_max = 4e-6;
  ramp.points_per_branch = 100;
  const auto iv = iv_sweep(p, ramp);
  std::vector<std::pair<double, double>> up, down;
  for (const auto& pt : iv) (pt.up ? up : down).emplace_back(pt.current, pt.voltage);
  for (const auto& [i, v] : up) {
    for (const auto& [j, w] : down) {
      if (i == j && i > 0.0) CHECK(v >= w);
    }
  }
}

TEST_CASE("ramp below the switching current is a single Ohmic branch") {
  DeviceParams p;
  CurrentRamp ramp;
  ramp.i_max = 0.5 * p.v_high / p.r_ins;
  ramp.require_switch = false;
  const auto iv = iv_sweep(p, ramp);
  for (const auto& pt : iv) CHECK(pt.state == DeviceState::kInsulating);
  CHECK(std::abs(iv_loop_area(iv)) < 1e-15);
  ramp.require_switch = true;
  try {
    iv_sweep(p, ramp);
    FAIL("expected RampTooShallow");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kRampTooShallow);
  }
}

TEST_CASE("variability: identity, determinism and spread") {
  const DeviceParams p;
  VariabilitySpec v;
  const auto same = sample_variability(p, v);
  CHECK(same.v_high == p.v_high);
  CHECK(same.r_ins == p.r_ins);

  v.sigma_threshold = 0.05;
  v.sigma_resistance = 0.05;
  v.seed = 42;
  const auto a = sample_variability(p, v);
  const auto b = sample_variability(p, v);
  CHECK(a.v_high == b.v_high);
  CHECK(a.v_low == b.v_low);
  CHECK(a.r_met == b.r_met);
  // one draw scales both thresholds
  CHECK(a.v_high / p.v_high == doctest::Approx(a.v_low / p.v_low));

  v.sigma_resistance = 0.0;
  double s = 0.0;
  double s2 = 0.0;
  const int n = 1000;
  for (int k = 0; k < n; ++k) {
    v.seed = static_cast<std::uint64_t>(k);
    const double rel = sample_variability(p, v).v_high / p.v_high - 1.0;
    s += rel;
    s2 += rel * rel;
  }
  const double sd = std::sqrt(s2 / n - (s / n) * (s / n));
  CHECK(sd > 0.045);
  CHECK(sd < 0.055);
}
