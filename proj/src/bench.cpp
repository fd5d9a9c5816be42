#include "onn/bench.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "onn/error.hpp"

namespace onn {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
}

bool pos(double x) { return x > 0.0 && std::isfinite(x); }

}  // namespace

void OnnTechParams::validate() const {
  require(pos(p_osc) && pos(f) && pos(v_mem) && pos(r_mem) && pos(settle_periods),
          "ONN technology parameters must be positive");
}

void ArrayGeometry::validate() const {
  require(map_h > 0 && map_w > 0 && n_filters > 0 && features_per_onn > 0 && osc_per_onn > 0 && mem_per_onn > 0 && k > 0,
          "array geometry entries must be positive");
}

void DigitalPlatform::validate() const { require(pos(tflops) && pos(watts), "platform throughput and power must be positive"); }

ArraySize onn_array_size(const ArrayGeometry& g) {
  g.validate();
  const long maps = static_cast<long>(g.map_h) * g.map_w * g.n_filters;
  ArraySize s;
  s.n_onn = (maps + g.features_per_onn - 1) / g.features_per_onn;
  s.n_osc = s.n_onn * g.osc_per_onn;
  s.n_mem = s.n_onn * g.mem_per_onn;
  return s;
}

OnnEnergy onn_energy_per_frame(const OnnTechParams& t, const ArrayGeometry& g) {
  t.validate();
  const auto s = onn_array_size(g);
  OnnEnergy e;
  e.frame_time = t.settle_periods / t.f;
  e.e_osc = static_cast<double>(s.n_osc) * t.p_osc * e.frame_time;
  e.e_mem = static_cast<double>(s.n_mem) * (t.v_mem * t.v_mem / t.r_mem) * e.frame_time;
  return e;
}

double flops_per_frame(const ArrayGeometry& g) {
  g.validate();
  return 2.0 * g.map_h * g.map_w * g.n_filters * g.k * g.k;
}

DigitalEnergy digital_energy_per_frame(double flops, const DigitalPlatform& p) {
  require(pos(flops), "flops must be positive");
  p.validate();
  DigitalEnergy d;
  d.frame_time = flops / (p.tflops * 1e12);
  d.energy = p.watts * d.frame_time;
  return d;
}

BenchReport table2_report(const BenchConfig& cfg) {
  require(pos(cfg.mem_calibration), "memristor calibration factor must be positive");
  BenchReport r;
  r.size = onn_array_size(cfg.geometry);
  r.flops = flops_per_frame(cfg.geometry);
  r.current = onn_energy_per_frame(cfg.current, cfg.geometry);
  r.projected = onn_energy_per_frame(cfg.projected, cfg.geometry);
  r.current.e_mem *= cfg.mem_calibration;
  r.projected.e_mem *= cfg.mem_calibration;

  auto onn_row = [&](const char* name, const OnnTechParams& t, const OnnEnergy& e) {
    BenchRow row;
    row.name = name;
    row.frames_per_s = t.f / t.settle_periods;
    row.energy_per_frame_j = e.e_osc + e.e_mem;
    row.tflops_equiv = r.flops * row.frames_per_s / 1e12;
    const double power = row.energy_per_frame_j * row.frames_per_s;
    row.tflops_per_w = row.tflops_equiv / power;
    return row;
  };
  auto current = onn_row("ONN current", cfg.current, r.current);
  current.flags.push_back("memristor energy from V^2/R over the settling window; the quoted 3.4 uJ/frame is not reproduced");
  auto projected = onn_row("ONN projected", cfg.projected, r.projected);
  projected.flags.push_back("frames/s follows f/settle_periods; the quoted 20e6 frames/s contradicts its own 0.75 TFLOP/s");
  r.rows.push_back(std::move(current));
  r.rows.push_back(std::move(projected));

  for (const auto* p : {&cfg.cpu, &cfg.gpu}) {
    const auto d = digital_energy_per_frame(r.flops, *p);
    BenchRow row;
    row.name = p->name;
    row.frames_per_s = 1.0 / d.frame_time;
    row.energy_per_frame_j = d.energy;
    row.tflops_equiv = p->tflops;
    row.tflops_per_w = p->tflops / p->watts;
    r.rows.push_back(std::move(row));
  }
  return r;
}

void BenchReport::write_table(std::ostream& os) const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-14s %14s %18s %14s %14s\n", "platform", "frames/s", "energy/frame (J)", "TFLOP/s",
                "TFLOP/s/W");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-14s %14.4g %18.4g %14.4g %14.4g%s\n", r.name.c_str(), r.frames_per_s,
                  r.energy_per_frame_j, r.tflops_equiv, r.tflops_per_w, r.flags.empty() ? "" : "  *");
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "\nONNs %ld, oscillators %ld, memristors %ld, FLOP/frame %.6g\n", size.n_onn, size.n_osc,
                size.n_mem, flops);
  os << buf;
  std::snprintf(buf, sizeof buf, "current ONN: e_osc %.4g J, e_mem %.4g J; projected: e_osc %.4g J, e_mem %.4g J\n",
                current.e_osc, current.e_mem, projected.e_osc, projected.e_mem);
  os << buf;
  for (const auto& r : rows) {
    for (const auto& f : r.flags) os << "* " << r.name << ": " << f << '\n';
  }
}

namespace {

std::string json_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void BenchReport::write_json(std::ostream& os) const {
  std::ostringstream s;
  s.precision(17);
  s << "{\"n_onn\": " << size.n_onn << ", \"n_osc\": " << size.n_osc << ", \"n_mem\": " << size.n_mem
    << ", \"flops_per_frame\": " << flops << ", \"e_osc_current_j\": " << current.e_osc
    << ", \"e_mem_current_j\": " << current.e_mem << ", \"e_osc_projected_j\": " << projected.e_osc
    << ", \"e_mem_projected_j\": " << projected.e_mem << ", \"rows\": [";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    s << (i ? ", " : "") << "{\"name\": " << json_string(r.name) << ", \"frames_per_s\": " << r.frames_per_s
      << ", \"energy_per_frame_j\": " << r.energy_per_frame_j << ", \"tflops_equiv\": " << r.tflops_equiv
      << ", \"tflops_per_w\": " << r.tflops_per_w << ", \"flags\": [";
    for (std::size_t k = 0; k < r.flags.size(); ++k) s << (k ? ", " : "") << json_string(r.flags[k]);
    s << "]}";
  }
  s << "]}\n";
  os << s.str();
}

}  // namespace onn
