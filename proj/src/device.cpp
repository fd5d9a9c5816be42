#include "onn/device.hpp"

#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

#include "onn/error.hpp"
#include "onn/text.hpp"

namespace onn {

bool DeviceParams::valid() const noexcept {
  return std::isfinite(r_ins) && std::isfinite(r_met) && std::isfinite(v_high) &&
         std::isfinite(v_low) && r_ins > r_met && r_met > 0.0 && v_high > v_low && v_low > 0.0;
}

void DeviceParams::validate() const {
  if (!valid()) {
    std::ostringstream os;
    os << "device parameters must satisfy r_ins > r_met > 0 and v_high > v_low > 0 (got r_ins="
       << r_ins << ", r_met=" << r_met << ", v_high=" << v_high << ", v_low=" << v_low << ")";
    throw Error(ErrorCode::kInvariantViolated, os.str());
  }
}

void VariabilitySpec::validate() const {
  auto ok = [](double s) { return std::isfinite(s) && s >= 0.0 && s <= 0.5; };
  if (!ok(sigma_threshold) || !ok(sigma_resistance)) {
    throw Error(ErrorCode::kInvalidArgument, "variability sigmas must lie in [0, 0.5]");
  }
}

std::string_view to_string(DeviceState s) noexcept {
  return s == DeviceState::kMetallic ? "metallic" : "insulating";
}

DeviceState switch_state(double u, DeviceState s, const DeviceParams& p) noexcept {
  if (s == DeviceState::kInsulating && u >= p.v_high) return DeviceState::kMetallic;
  if (s == DeviceState::kMetallic && u <= p.v_low) return DeviceState::kInsulating;
  return s;
}

std::vector<IvPoint> iv_sweep(const DeviceParams& p, const CurrentRamp& ramp) {
  p.validate();
  if (!(ramp.i_max > 0.0) || ramp.points_per_branch < 2) {
    throw Error(ErrorCode::kInvalidArgument, "ramp needs i_max > 0 and at least 2 points per branch");
  }
  std::vector<IvPoint> out;
  DeviceState s = DeviceState::kInsulating;
  bool switched = false;
  const int n = ramp.points_per_branch;

  auto visit = [&](double i, bool up) {
    const double u = i * device_resistance(s, p);
    out.push_back({i, u, s, up});
    const DeviceState next = switch_state(u, s, p);
    if (next != s) {
      s = next;
      switched = true;
      out.push_back({i, i * device_resistance(s, p), s, up});
    }
  };

  for (int k = 0; k < n; ++k) visit(ramp.i_max * k / (n - 1), true);
  if (ramp.round_trip) {
    for (int k = n - 2; k >= 0; --k) visit(ramp.i_max * k / (n - 1), false);
  }
  if (ramp.require_switch && !switched) {
    throw Error(ErrorCode::kRampTooShallow, "current ramp never reaches a switching threshold");
  }
  return out;
}

double iv_loop_area(const std::vector<IvPoint>& curve) {
  // Path integral of V dI over the ordered points (up then down); positive
  // when the rising branch sits above the falling one.
  double area = 0.0;
  for (std::size_t k = 1; k < curve.size(); ++k) {
    const auto& a = curve[k - 1];
    const auto& b = curve[k];
    area += 0.5 * (a.voltage + b.voltage) * (b.current - a.current);
  }
  return area;
}

DeviceParams sample_variability(const DeviceParams& p, const VariabilitySpec& v) {
  p.validate();
  v.validate();
  if (v.sigma_threshold == 0.0 && v.sigma_resistance == 0.0) return p;

  std::mt19937_64 gen(v.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  constexpr int kMaxDraws = 32;
  for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
    const double e_thr = v.sigma_threshold * unit(gen);
    const double e_res = v.sigma_resistance * unit(gen);
    DeviceParams q = p;
    q.v_high *= 1.0 + e_thr;
    q.v_low *= 1.0 + e_thr;
    q.r_ins *= 1.0 + e_res;
    q.r_met *= 1.0 + e_res;
    if (q.valid()) return q;
  }
  throw Error(ErrorCode::kInvariantViolated, "variability draws keep breaking device ordering invariants");
}

void write_iv_csv(std::ostream& os, const std::vector<IvPoint>& curve) {
  os << "i_a,v_v,state\n";
  for (const auto& p : curve) os << format_double(p.current) << ',' << format_double(p.voltage) << ',' << to_string(p.state) << '\n';
}

}  // namespace onn
