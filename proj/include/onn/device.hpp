#pragma once

#include <cstdint>
#include <string_view>
#include <iosfwd>
#include <vector>

namespace onn {

/// Two-state behavioral VO2 device: Ohmic in each state, hysteretic switching
/// between them at the device-voltage thresholds.
struct DeviceParams {
  double r_ins = 1.0e4;   // Ohm, insulating state
  double r_met = 1.0e2;   // Ohm, metallic state
  double v_high = 1.5;    // V, insulator -> metal
  double v_low = 0.5;     // V, metal -> insulator

  /// Throws Error(kInvariantViolated) unless r_ins > r_met > 0 and v_high > v_low > 0.
  void validate() const;
  [[nodiscard]] bool valid() const noexcept;
};

enum class DeviceState : std::uint8_t { kInsulating = 0, kMetallic = 1 };

std::string_view to_string(DeviceState s) noexcept;

struct VariabilitySpec {
  double sigma_threshold = 0.0;  // relative std-dev of v_high / v_low
  double sigma_resistance = 0.0; // relative std-dev of r_ins / r_met
  std::uint64_t seed = 0;

  void validate() const;
};

[[nodiscard]] DeviceState switch_state(double u, DeviceState s, const DeviceParams& p) noexcept;

[[nodiscard]] inline double device_resistance(DeviceState s, const DeviceParams& p) noexcept {
  return s == DeviceState::kMetallic ? p.r_met : p.r_ins;
}

[[nodiscard]] inline double device_current(double u, DeviceState s, const DeviceParams& p) noexcept {
  return u / device_resistance(s, p);
}

struct CurrentRamp {
  double i_max = 1.0e-4;       // A, peak of the ramp
  int points_per_branch = 200;
  bool round_trip = true;      // ramp back down to zero after the peak
  bool require_switch = true;  // throw RampTooShallow if no switching event occurs
};

struct IvPoint {
  double current;  // A
  double voltage;  // V
  DeviceState state;
  bool up;         // true on the rising half of the ramp
};

/// Quasi-static current-driven sweep. At each ramp point the device voltage is
/// evaluated in the held state, the switching rule is applied once, and a
/// state change is recorded as a second point at the same current (the
/// vertical jump of the IV curve).
std::vector<IvPoint> iv_sweep(const DeviceParams& p, const CurrentRamp& ramp);

/// Signed area enclosed between the up and down branches, integrated over
/// current with the trapezoid rule (V*A).
double iv_loop_area(const std::vector<IvPoint>& curve);

/// CSV with header `i_a,v_v,state`.
void write_iv_csv(std::ostream& os, const std::vector<IvPoint>& curve);

/// Multiplicative seeded perturbation. Thresholds share one draw, resistances
/// share another. Redraws up to 32 times if an ordering invariant breaks.
DeviceParams sample_variability(const DeviceParams& p, const VariabilitySpec& v);

}  // namespace onn
