#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "onn/device.hpp"

namespace onn {

/// One relaxation oscillator: VO2 device from the supply to the node, load
/// conductance from the node to ground, capacitance on the node.
struct OscillatorUnit {
  DeviceParams device{};
  double c_node = 10e-6;   // F
  double g_load = 1.0e-3;  // S
  double v_in = 2.0;       // V
  double delay = 0.0;      // s, supply enabled at t = delay

  void validate() const;
};

/// Symmetric parallel R-C coupling. Absent resistive branches are stored as
/// +inf; a zero capacitance means no capacitive branch.
struct CouplingSpec {
  int n = 0;
  std::vector<double> r_c;  // n*n, row-major, Ohm
  std::vector<double> c_c;  // n*n, row-major, F

  static CouplingSpec none(int n);
  [[nodiscard]] double r(int i, int j) const { return r_c[static_cast<std::size_t>(i * n + j)]; }
  [[nodiscard]] double c(int i, int j) const { return c_c[static_cast<std::size_t>(i * n + j)]; }
  [[nodiscard]] bool has_r(int i, int j) const;
  void set(int i, int j, double r_ohm, double c_farad);
  void validate() const;
};

struct NetworkConfig {
  std::vector<OscillatorUnit> units;
  CouplingSpec coupling;
  double dt = 0.0;        // 0 selects (estimated period)/2000
  double t_end = 0.0;     // s
  int sample_every = 1;

  [[nodiscard]] int size() const noexcept { return static_cast<int>(units.size()); }
  void validate() const;
};

struct SwitchEvent {
  double t;
  int osc;
  DeviceState state;
};

struct Waveform {
  std::vector<double> t;
  std::vector<std::vector<double>> v;  // v[osc][sample]
  std::vector<SwitchEvent> events;
  bool non_oscillating = false;

  void write_csv(std::ostream& os) const;
  void write_events_csv(std::ostream& os) const;
};

/// Falling-edge crossings of a voltage threshold, located by linear
/// interpolation between consecutive solver points.
struct CrossingLog {
  double v_th = 1.0;
  double t_end = 0.0;
  std::vector<std::vector<double>> falling;  // per oscillator
  bool non_oscillating = false;
};

/// Per-state-mask step matrices for a fixed step size. Valid for any network
/// with the same capacitance matrix, conductances and step, so windows of a
/// convolution that only differ in their input delays can share one.
class StepCache;

struct SimContext {
  NetworkConfig cfg;
  Eigen::MatrixXd m;            // capacitance matrix
  Eigen::MatrixXd lap;          // coupling conductance Laplacian
  Eigen::LLT<Eigen::MatrixXd> m_llt;
  Eigen::VectorXd v;
  std::vector<DeviceState> s;
  double t = 0.0;
  double dt = 0.0;
  std::shared_ptr<StepCache> cache;
};

/// Closed-form period of one uncoupled oscillator from its two RC relaxation
/// segments. Throws kInvalidArgument if the bias admits no oscillation.
double relaxation_period(const OscillatorUnit& u);

/// True when both relaxation targets lie outside the switching window.
bool oscillates(const OscillatorUnit& u) noexcept;

/// Frequency trimming of a perturbed unit toward a nominal one: the supply is
/// scaled with the unit's threshold deviation, then g_load is solved (on the
/// branch nearest the nominal load) so the closed-form period matches.
OscillatorUnit trim_unit(const OscillatorUnit& perturbed, const OscillatorUnit& nominal);

/// Replaces each unit's device by a seeded variability draw (stream keyed by
/// seed and unit index) and optionally trims it back to the nominal period.
void apply_variability(NetworkConfig& cfg, const VariabilitySpec& v, bool trim);

/// Period estimate used to size dt and horizons: the mean of the
/// closed-form periods of all oscillating units.
double nominal_period(const NetworkConfig& cfg);

/// Fills dt (if zero) and t_end (if zero, 12 nominal periods plus the largest delay).
NetworkConfig with_defaults(NetworkConfig cfg, double steps_per_period = 2000.0, double periods = 12.0);

SimContext build_network(const NetworkConfig& cfg, std::shared_ptr<StepCache> cache = nullptr);
std::shared_ptr<StepCache> make_step_cache();

/// Advances by dt (trapezoid, states held), locating threshold crossings by
/// bisection and re-integrating the remainder after each switch. Switch events
/// are appended to `events` when non-null.
void step(SimContext& ctx, double dt, std::vector<SwitchEvent>* events = nullptr);

Waveform simulate(const NetworkConfig& cfg);
CrossingLog simulate_crossings(const NetworkConfig& cfg, double v_th, std::shared_ptr<StepCache> cache = nullptr);

/// Falling-edge crossing times of one trace (linear interpolation).
std::vector<double> falling_crossings(const std::vector<double>& t, const std::vector<double>& v, double v_th);

/// Mean interval between falling-edge crossings in the final half of the trace.
double estimate_period(const Waveform& w, int osc, double v_th);
double estimate_period(const std::vector<double>& crossings, double t_end);

/// Stored energy 1/2 v^T M v of the context.
double stored_energy(const SimContext& ctx);

}  // namespace onn
