#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "onn/network.hpp"
#include "onn/phase.hpp"

namespace onn {

/// Real symmetric Hebbian weight matrix, row-major n*n.
struct CouplingWeights {
  int n = 0;
  std::vector<double> c;

  [[nodiscard]] double at(int i, int j) const { return c[static_cast<std::size_t>(i * n + j)]; }
};

struct ResistanceMap {
  double r_strong = 82e3;   // Ohm
  double r_weak = 130e3;    // Ohm
  double c_thresh = 0.25;
  bool continuous = false;  // r proportional to 1/|c|, clamped to [r_strong, r_weak]
  double c_coupling = 5.6e-9;  // F, parallel capacitor on every branch

  void validate() const;
};

/// How phases are read out of a simulated network.
struct ReadoutSpec {
  double v_th = 1.0;
  int n_settle = 5;
  int ref = 0;
  double theta_tol = 30.0;
  double band_deg = 60.0;
};

struct TrainSpec {
  double eta = 2e-14;   // S^2/deg^2: step = eta * dC/dg
  int epochs = 20;
  double delta = 0.02;  // relative finite-difference perturbation
  double g_min = 1.0 / 1e6;
  double g_max = 1.0 / 10e3;
  ReadoutSpec readout{};
  int target_feature = -1;  // stop early once every instance shows it; -1 disables

  void validate() const;
};

CouplingWeights hebbian(const std::vector<Pattern>& patterns);

/// Per-pair resistances (Ohm) with +inf on the diagonal.
std::vector<double> weights_to_resistance(const CouplingWeights& c, const ResistanceMap& map);

/// Full coupling spec: mapped resistances plus the map's parallel capacitor.
CouplingSpec program_coupling(const CouplingWeights& c, const ResistanceMap& map);

/// Circular difference mapped into (-180, 180].
double wrapped_difference(double a_deg, double b_deg);

/// 1/2 sum of squared wrapped differences, in deg^2.
double phase_cost(const std::vector<double>& phi_out, const std::vector<double>& phi_train);

/// Simulates and reads out one network (threshold crossings only).
PhaseReadout run_readout(const NetworkConfig& cfg, const ReadoutSpec& spec,
                         std::shared_ptr<StepCache> cache = nullptr);

struct GradientResult {
  std::vector<double> grad;     // n*n symmetric, dC/dg_ij in deg^2/S
  std::vector<bool> flagged;    // n*n, perturbed point not locked
  double cost = 0.0;            // at the nominal point
};

/// Central finite differences of the summed cost over a batch of instances
/// that share one coupling matrix (each instance carries its own delays).
GradientResult fd_gradient(const std::vector<NetworkConfig>& batch, const std::vector<std::vector<double>>& phi_train,
                           const TrainSpec& spec);
GradientResult fd_gradient(const NetworkConfig& cfg, const std::vector<double>& phi_train, const TrainSpec& spec);

struct TrainResult {
  CouplingSpec coupling;
  std::vector<double> cost_history;  // cost before each update, then the final cost
  int epochs_run = 0;
  bool target_reached = false;
};

TrainResult train_onn(const std::vector<NetworkConfig>& batch, const std::vector<std::vector<double>>& phi_train,
                      const TrainSpec& spec);
TrainResult train_onn(const NetworkConfig& cfg, const std::vector<double>& phi_train, const TrainSpec& spec);

/// Ideal phases (deg, relative to `ref`) of a binary pattern.
std::vector<double> pattern_phases(const Pattern& p, int ref = 0);

void write_coupling(std::ostream& os, const CouplingSpec& c);
CouplingSpec read_coupling(std::istream& is);

/// One pattern per line, whitespace-separated values in [-1, 1].
std::vector<Pattern> read_patterns(std::istream& is);

}  // namespace onn
