#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace onn {

struct OnnTechParams {
  double p_osc = 20e-6;    // W per oscillator
  double f = 3e6;          // Hz
  double v_mem = 0.7;      // V across a coupling memristor
  double r_mem = 100e3;    // Ohm
  double settle_periods = 5.0;

  static OnnTechParams current() { return {}; }
  static OnnTechParams projected() { return {1e-6, 20e6, 0.3, 1e6, 5.0}; }
  void validate() const;
};

struct ArrayGeometry {
  int map_h = 13;
  int map_w = 13;
  int n_filters = 64;
  int features_per_onn = 5;
  int osc_per_onn = 9;
  int mem_per_onn = 36;
  int k = 3;  // digital filter size, for the FLOP count

  void validate() const;
};

struct DigitalPlatform {
  std::string name;
  double tflops = 1.0;
  double watts = 95.0;

  static DigitalPlatform cpu() { return {"CPU", 1.0, 95.0}; }
  static DigitalPlatform gpu() { return {"GPU", 120.0, 300.0}; }
  void validate() const;
};

struct ArraySize {
  long n_onn = 0;
  long n_osc = 0;
  long n_mem = 0;
};

struct OnnEnergy {
  double e_osc = 0.0;       // J per frame
  double e_mem = 0.0;       // J per frame
  double frame_time = 0.0;  // s
};

struct DigitalEnergy {
  double energy = 0.0;      // J per frame
  double frame_time = 0.0;  // s
};

ArraySize onn_array_size(const ArrayGeometry& g);
OnnEnergy onn_energy_per_frame(const OnnTechParams& t, const ArrayGeometry& g);
/// map_h * map_w * n_filters * k^2 multiply-accumulates, two FLOPs each.
double flops_per_frame(const ArrayGeometry& g);
DigitalEnergy digital_energy_per_frame(double flops, const DigitalPlatform& p);

struct BenchRow {
  std::string name;
  double frames_per_s = 0.0;
  double energy_per_frame_j = 0.0;
  double tflops_equiv = 0.0;
  double tflops_per_w = 0.0;
  std::vector<std::string> flags;
};

struct BenchConfig {
  OnnTechParams current = OnnTechParams::current();
  OnnTechParams projected = OnnTechParams::projected();
  ArrayGeometry geometry{};
  DigitalPlatform cpu = DigitalPlatform::cpu();
  DigitalPlatform gpu = DigitalPlatform::gpu();
  double mem_calibration = 1.0;  // multiplies the memristor energy
};

struct BenchReport {
  ArraySize size;
  OnnEnergy current;
  OnnEnergy projected;
  double flops = 0.0;
  std::vector<BenchRow> rows;  // current ONN, projected ONN, CPU, GPU

  void write_table(std::ostream& os) const;
  void write_json(std::ostream& os) const;
};

BenchReport table2_report(const BenchConfig& cfg);

}  // namespace onn
