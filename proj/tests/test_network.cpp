#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "onn/conv.hpp"
#include "onn/error.hpp"
#include "onn/network.hpp"

using namespace onn;

namespace {

// Two first-order relaxations between the node voltages where the device
// switches; written out here rather than taken from the library.
double closed_form_period(const OscillatorUnit& u) {
  const double g_i = 1.0 / u.device.r_ins;
  const double g_m = 1.0 / u.device.r_met;
  const double hi = u.v_in - u.device.v_low;   // node voltage at metal -> insulator
  const double lo = u.v_in - u.device.v_high;  // node voltage at insulator -> metal
  const double vinf_i = u.v_in * g_i / (g_i + u.g_load);
  const double vinf_m = u.v_in * g_m / (g_m + u.g_load);
  const double t_fall = u.c_node / (g_i + u.g_load) * std::log((vinf_i - hi) / (vinf_i - lo));
  const double t_rise = u.c_node / (g_m + u.g_load) * std::log((vinf_m - lo) / (vinf_m - hi));
  return t_fall + t_rise;
}

NetworkConfig single(double steps = 2000.0) {
  NetworkConfig c;
  c.units.assign(1, OscillatorUnit{});
  c.coupling = CouplingSpec::none(1);
  return with_defaults(c, steps, 30.0);
}

NetworkConfig fig7(double steps = 2000.0) {
  NetworkConfig c;
  c.units.assign(4, OscillatorUnit{});
  c.coupling = program_coupling(hebbian(edge_patterns_2x2()), ResistanceMap{});
  return with_defaults(c, steps, 12.0);
}

}  // namespace

TEST_CASE("closed-form period agrees with the independent oracle") {
  const OscillatorUnit u;
  CHECK(relaxation_period(u) == doctest::Approx(closed_form_period(u)).epsilon(1e-12));
  CHECK(oscillates(u));
  OscillatorUnit dead = u;
  dead.g_load = 1e-6;  // node never falls to the switching level
  CHECK_FALSE(oscillates(dead));
  CHECK_THROWS_AS(relaxation_period(dead), Error);
}

TEST_CASE("simulated single-oscillator period") {
  const double oracle = closed_form_period(OscillatorUnit{});
  const auto w1 = simulate(single());
  const double p1 = estimate_period(w1, 0, 1.0);
  CHECK(std::abs(p1 / oracle - 1.0) < 0.005);
  const auto w2 = simulate(single(4000.0));
  const double p2 = estimate_period(w2, 0, 1.0);
  CHECK(std::abs(p2 / oracle - 1.0) < 0.002);
  CHECK(std::abs(p2 / p1 - 1.0) < 0.002);
}

TEST_CASE("capacitance matrix stamps") {
  NetworkConfig c;
  c.units.assign(1, OscillatorUnit{});
  c.coupling = CouplingSpec::none(1);
  c.dt = 1e-6;
  c.t_end = 1e-5;
  auto ctx = build_network(c);
  CHECK(ctx.m(0, 0) == OscillatorUnit{}.c_node);

  NetworkConfig d;
  d.units.assign(2, OscillatorUnit{});
  d.units[1].c_node = 3e-6;
  d.coupling = CouplingSpec::none(2);
  d.coupling.set(0, 1, 1e5, 2e-9);
  d.dt = 1e-6;
  d.t_end = 1e-5;
  ctx = build_network(d);
  CHECK(ctx.m(0, 0) == doctest::Approx(10e-6 + 2e-9));
  CHECK(ctx.m(1, 1) == doctest::Approx(3e-6 + 2e-9));
  CHECK(ctx.m(0, 1) == doctest::Approx(-2e-9));
  CHECK(ctx.m(1, 0) == ctx.m(0, 1));
}

TEST_CASE("four-oscillator capacitance matrix is positive definite") {
  const auto ctx = build_network(fig7());
  CHECK((ctx.m - ctx.m.transpose()).norm() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ctx.m);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("unpowered network stays at zero") {
  auto c = fig7();
  for (auto& u : c.units) u.delay = 2.0 * c.t_end;
  const auto w = simulate(c);
  for (const auto& tr : w.v) {
    for (double v : tr) CHECK(v == 0.0);
  }
  CHECK(w.events.empty());
}

TEST_CASE("zero horizon gives the initial sample only") {
  auto c = single();
  c.t_end = 0.0;
  const auto w = simulate(c);
  CHECK(w.t.size() == 1);
  CHECK(w.events.empty());
}

TEST_CASE("stored energy does not grow without supply") {
  auto c = fig7();
  for (auto& u : c.units) u.delay = 2.0 * c.t_end;
  auto ctx = build_network(c);
  ctx.v << 1.2, 0.3, -0.4, 0.9;
  double prev = stored_energy(ctx);
  for (int k = 0; k < 500; ++k) {
    step(ctx, c.dt);
    const double e = stored_energy(ctx);
    REQUIRE(e <= prev * (1.0 + 1e-12));
    prev = e;
  }
}

TEST_CASE("simulation is deterministic") {
  const auto a = simulate(fig7());
  const auto b = simulate(fig7());
  CHECK(a.t == b.t);
  CHECK(a.v == b.v);
}

TEST_CASE("permuting oscillators permutes the traces") {
  auto c = fig7();
  c.units[1].delay = 0.3 * nominal_period(c);
  c.units[2].delay = 0.1 * nominal_period(c);
  const std::vector<int> perm = {2, 0, 3, 1};
  NetworkConfig p = c;
  p.coupling = CouplingSpec::none(4);
  for (int i = 0; i < 4; ++i) {
    p.units[static_cast<std::size_t>(i)] = c.units[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    for (int j = i + 1; j < 4; ++j) {
      const int a = perm[static_cast<std::size_t>(i)];
      const int b = perm[static_cast<std::size_t>(j)];
      if (c.coupling.has_r(a, b) || c.coupling.c(a, b) > 0.0) p.coupling.set(i, j, c.coupling.r(a, b), c.coupling.c(a, b));
    }
  }
  const auto w = simulate(c);
  const auto wp = simulate(p);
  REQUIRE(w.t.size() == wp.t.size());
  for (int i = 0; i < 4; ++i) {
    const auto& x = wp.v[static_cast<std::size_t>(i)];
    const auto& y = w.v[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    double worst = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) worst = std::max(worst, std::abs(x[k] - y[k]));
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("coupled oscillators lock to one period") {
  const auto w = simulate(fig7());
  std::vector<double> p;
  for (int i = 0; i < 4; ++i) p.push_back(estimate_period(w, i, 1.0));
  const auto [lo, hi] = std::minmax_element(p.begin(), p.end());
  CHECK(*hi / *lo - 1.0 < 0.01);
}

TEST_CASE("sawtooth period estimate") {
  std::vector<double> t, v;
  const double dt = 1e-5;
  for (int k = 0; k <= 1000; ++k) {
    t.push_back(k * dt);
    v.push_back(1.0 - std::fmod(k * dt, 1e-3) / 1e-3);  // falls through 0.5 every 1 ms
  }
  Waveform w;
  w.t = t;
  w.v = {v};
  CHECK(std::abs(estimate_period(w, 0, 0.5) - 1e-3) <= dt);
}

TEST_CASE("invalid configurations are rejected") {
  NetworkConfig c;
  c.units.assign(2, OscillatorUnit{});
  c.coupling = CouplingSpec::none(3);
  c.dt = 1e-6;
  c.t_end = 1e-5;
  CHECK_THROWS_AS(c.validate(), Error);
  c.coupling = CouplingSpec::none(2);
  c.dt = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  CouplingSpec s = CouplingSpec::none(2);
  CHECK_THROWS_AS(s.set(0, 0, 1e5, 0.0), Error);
  s.set(0, 1, -5.0, 0.0);
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("trimming restores the period and keeps the switching window centred") {
  const OscillatorUnit nominal;
  for (double s : {0.9, 0.95, 1.05, 1.1}) {
    OscillatorUnit p = nominal;
    p.device.v_high *= s;
    p.device.v_low *= s;
    p.device.r_ins *= 2.0 - s;
    const OscillatorUnit t = trim_unit(p, nominal);
    CHECK(closed_form_period(t) == doctest::Approx(closed_form_period(nominal)).epsilon(1e-6));
    const double mid = t.v_in - 0.5 * (t.device.v_high + t.device.v_low);
    const double mid0 = nominal.v_in - 0.5 * (nominal.device.v_high + nominal.device.v_low);
    CHECK(mid == doctest::Approx(mid0).epsilon(1e-12));
  }
}
