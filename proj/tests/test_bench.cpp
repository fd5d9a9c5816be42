#include <cmath>
#include <sstream>

#include "doctest.h"
#include "onn/bench.hpp"
#include "onn/error.hpp"

using namespace onn;

TEST_CASE("array size") {
  const auto s = onn_array_size(ArrayGeometry{});
  CHECK(s.n_onn == 2164);  // ceil(13*13*64 / 5)
  CHECK(s.n_osc == 2164 * 9);
  CHECK(s.n_mem == 2164 * 36);
}

TEST_CASE("energy per frame, written out") {
  const ArrayGeometry g;
  const auto e = onn_energy_per_frame(OnnTechParams::current(), g);
  const double t = 5.0 / 3e6;
  CHECK(e.frame_time == doctest::Approx(t));
  CHECK(e.e_osc == doctest::Approx(2164.0 * 9 * 20e-6 * t));
  CHECK(e.e_mem == doctest::Approx(2164.0 * 36 * 0.49 / 100e3 * t));

  const auto p = onn_energy_per_frame(OnnTechParams::projected(), g);
  CHECK(p.e_osc == doctest::Approx(4.87e-9).epsilon(0.01));
  CHECK(p.e_mem == doctest::Approx(1.75e-9).epsilon(0.01));
}

TEST_CASE("energy scales linearly in power and inversely in frequency") {
  const ArrayGeometry g;
  auto t = OnnTechParams::current();
  const auto base = onn_energy_per_frame(t, g);
  t.p_osc *= 3.0;
  CHECK(onn_energy_per_frame(t, g).e_osc == doctest::Approx(3.0 * base.e_osc));
  t = OnnTechParams::current();
  t.f *= 2.0;
  CHECK(onn_energy_per_frame(t, g).e_osc == doctest::Approx(0.5 * base.e_osc));
  CHECK(onn_energy_per_frame(t, g).e_mem == doctest::Approx(0.5 * base.e_mem));
  t = OnnTechParams::current();
  t.v_mem *= 2.0;
  CHECK(onn_energy_per_frame(t, g).e_mem == doctest::Approx(4.0 * base.e_mem));
}

TEST_CASE("digital baselines") {
  const double f = flops_per_frame(ArrayGeometry{});
  CHECK(f == 194688.0);
  CHECK(digital_energy_per_frame(f, DigitalPlatform::cpu()).energy == doctest::Approx(f / 1e12 * 95.0));
  CHECK(digital_energy_per_frame(f, DigitalPlatform::gpu()).energy == doctest::Approx(f / 120e12 * 300.0));
  DigitalPlatform bad = DigitalPlatform::cpu();
  bad.watts = 0.0;
  CHECK_THROWS_AS(digital_energy_per_frame(f, bad), Error);
}

TEST_CASE("report rows and flags") {
  const auto r = table2_report(BenchConfig{});
  REQUIRE(r.rows.size() == 4);
  CHECK(r.rows[0].frames_per_s == doctest::Approx(6e5));
  CHECK(r.rows[0].tflops_equiv == doctest::Approx(0.1168).epsilon(0.001));
  CHECK(r.rows[1].frames_per_s == doctest::Approx(4e6));
  CHECK_FALSE(r.rows[0].flags.empty());
  CHECK_FALSE(r.rows[1].flags.empty());
  std::ostringstream js;
  r.write_json(js);
  CHECK(js.str().find("\"frames_per_s\"") != std::string::npos);
  std::ostringstream tb;
  r.write_table(tb);
  CHECK(tb.str().find("GPU") != std::string::npos);
}

TEST_CASE("memristor calibration multiplies only the memristor term") {
  BenchConfig c;
  const auto a = table2_report(c);
  c.mem_calibration = 2.0;
  const auto b = table2_report(c);
  CHECK(b.current.e_mem == doctest::Approx(2.0 * a.current.e_mem));
  CHECK(b.current.e_osc == a.current.e_osc);
}
