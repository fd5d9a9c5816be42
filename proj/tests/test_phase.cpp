#include <cmath>
#include <sstream>

#include "doctest.h"
#include "onn/conv.hpp"
#include "onn/error.hpp"
#include "onn/phase.hpp"

using namespace onn;

namespace {

// Brute-force group rule, coded from the pixel-grid picture.
FeatureVector grid_oracle(const std::vector<int>& bits) {
  auto same = [&](std::initializer_list<int> idx) {
    const int first = bits[static_cast<std::size_t>(*idx.begin())];
    for (int i : idx) {
      if (bits[static_cast<std::size_t>(i)] != first) return false;
    }
    return true;
  };
  FeatureVector f{};
  f[kUniform] = same({0, 1, 2, 3, 4, 5, 6, 7, 8});
  if (!f[kUniform]) {
    f[kVertical] = same({1, 4, 7});
    f[kHorizontal] = same({3, 4, 5});
    f[kDiagMain] = same({0, 4, 8});
    f[kDiagAnti] = same({2, 4, 6});
  }
  return f;
}

}  // namespace

TEST_CASE("pixel delays") {
  const auto d = delays_from_pixels({1.0, -1.0, 0.0}, 8.0);
  CHECK(d[0] == 0.0);
  CHECK(d[1] == 4.0);
  CHECK(d[2] == 2.0);
  CHECK_THROWS_AS(delays_from_pixels({1.5}, 1.0), Error);
}

TEST_CASE("circular helpers") {
  CHECK(circular_distance(350.0, 10.0) == doctest::Approx(20.0));
  CHECK(circular_distance(0.0, 180.0) == doctest::Approx(180.0));
  CHECK(wrap360(-90.0) == doctest::Approx(270.0));
  CHECK(wrap360(720.0) == doctest::Approx(0.0));
}

TEST_CASE("phases from synthetic crossings") {
  CrossingLog log;
  log.t_end = 10.0;
  log.falling.resize(3);
  for (int k = 0; k < 10; ++k) {
    log.falling[0].push_back(k + 0.25);
    log.falling[1].push_back(k + 0.25);
    log.falling[2].push_back(k + 0.75);
  }
  const auto r = extract_phases(log, 5, 0);
  CHECK(r.period == doctest::Approx(1.0));
  CHECK(r.phase_deg[0] == 0.0);
  CHECK(r.phase_deg[1] == doctest::Approx(0.0));
  CHECK(r.phase_deg[2] == doctest::Approx(180.0));
  CHECK(r.all_locked());

  log.falling[2].resize(6);
  CHECK_THROWS_AS(extract_phases(log, 5, 0), Error);
}

TEST_CASE("binarize bands") {
  PhaseReadout r;
  r.phase_deg = {0.0, 180.0, 90.0, 350.0};
  r.locked = {true, true, true, true};
  const auto b = binarize(r, 60.0);
  CHECK(b[0] == Pixel::kWhite);
  CHECK(b[1] == Pixel::kBlack);
  CHECK(b[2] == Pixel::kAmbiguous);
  CHECK(b[3] == Pixel::kWhite);
}

TEST_CASE("feature examples") {
  auto f = detect_features(std::vector<double>(9, 0.0), 30.0);
  CHECK(f[kUniform]);
  CHECK_FALSE(f[kVertical]);

  std::vector<double> v(9, 180.0);
  v[1] = v[4] = v[7] = 0.0;
  f = detect_features(v, 30.0);
  CHECK(f[kVertical]);
  CHECK_FALSE(f[kHorizontal]);
  CHECK_FALSE(f[kDiagMain]);
  CHECK_FALSE(f[kDiagAnti]);
  CHECK_FALSE(f[kUniform]);

  std::vector<double> spread;
  for (int i = 0; i < 9; ++i) spread.push_back(40.0 * i);
  f = detect_features(spread, 30.0);
  for (bool x : f) CHECK_FALSE(x);

  CHECK_THROWS_AS(detect_features(std::vector<double>(5, 0.0), 30.0), Error);
}

TEST_CASE("exhaustive agreement with the grid oracle") {
  for (int m = 0; m < 512; ++m) {
    std::vector<int> bits(9);
    std::vector<double> ph(9);
    for (int i = 0; i < 9; ++i) {
      bits[static_cast<std::size_t>(i)] = (m >> i) & 1;
      ph[static_cast<std::size_t>(i)] = bits[static_cast<std::size_t>(i)] ? 180.0 : 0.0;
    }
    REQUIRE(detect_features(ph, 30.0) == grid_oracle(bits));
  }
}

TEST_CASE("global rotation leaves features unchanged") {
  for (int m = 0; m < 512; m += 7) {
    std::vector<double> ph(9);
    for (int i = 0; i < 9; ++i) ph[static_cast<std::size_t>(i)] = ((m >> i) & 1) ? 180.0 : 0.0;
    const auto base = detect_features(ph, 30.0);
    for (double rot : {17.0, 123.0, 300.0}) {
      std::vector<double> r = ph;
      for (auto& x : r) x = wrap360(x + rot);
      CHECK(detect_features(r, 30.0) == base);
    }
  }
}

TEST_CASE("uncoupled network reproduces the encoded delays") {
  NetworkConfig c;
  c.units.assign(4, OscillatorUnit{});
  c.coupling = CouplingSpec::none(4);
  const double t = relaxation_period(c.units[0]);
  const Pattern p = {1.0, -1.0, 0.0, 0.5};
  const auto d = delays_from_pixels(p, t);
  for (int i = 0; i < 4; ++i) c.units[static_cast<std::size_t>(i)].delay = d[static_cast<std::size_t>(i)];
  c = with_defaults(c, 2000.0, 12.0);
  const auto r = extract_phases(simulate(c), 1.0, 5, 0);
  for (int i = 0; i < 4; ++i) {
    CHECK(circular_distance(r.phase_deg[static_cast<std::size_t>(i)], 360.0 * d[static_cast<std::size_t>(i)] / t) < 5.0);
  }
}

TEST_CASE("programmed 2x2 network retrieves each stored pattern") {
  const auto pats = edge_patterns_2x2();
  for (const auto& p : pats) {
    auto c = default_filter(2);
    const auto d = delays_from_pixels(p, nominal_period(c));
    for (int i = 0; i < 4; ++i) c.units[static_cast<std::size_t>(i)].delay = d[static_cast<std::size_t>(i)];
    c = with_defaults(c, 2000.0, 12.0);
    const auto r = extract_phases(simulate(c), 1.0, 5, 0);
    const auto b = binarize(r, 60.0);
    for (int i = 0; i < 4; ++i) {
      const double want = p[static_cast<std::size_t>(i)] * p[0];  // relative to oscillator 0
      CHECK(static_cast<double>(b[static_cast<std::size_t>(i)]) == want);
    }
  }
}

TEST_CASE("phase readout JSON") {
  PhaseReadout r;
  r.period = 1e-3;
  r.phase_deg = {0.0, 180.0};
  r.locked = {true, false};
  std::ostringstream os;
  r.write_json(os);
  CHECK(os.str().find("\"locked\"") != std::string::npos);
}
