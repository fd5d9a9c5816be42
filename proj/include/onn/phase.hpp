#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "onn/network.hpp"

namespace onn {

/// Pixel values in [-1, 1]; +1 is white (in phase with the reference), -1 black.
using Pattern = std::vector<double>;

void validate_pattern(const Pattern& p);

struct PhaseReadout {
  double period = 0.0;             // s, reference oscillator
  std::vector<double> phase_deg;   // [0, 360)
  std::vector<bool> locked;
  int ref = 0;

  [[nodiscard]] bool all_locked() const;
  void write_json(std::ostream& os) const;
};

enum class Pixel : std::int8_t { kBlack = -1, kAmbiguous = 0, kWhite = 1 };

enum Feature : int { kVertical = 0, kHorizontal = 1, kDiagMain = 2, kDiagAnti = 3, kUniform = 4 };
constexpr int kFeatureCount = 5;
using FeatureVector = std::array<bool, kFeatureCount>;

/// delay_i = ((1 - x_i)/2) * (T/2): white -> 0, black -> T/2, grey linear.
std::vector<double> delays_from_pixels(const Pattern& p, double period);

/// Circular distance in degrees, in [0, 180].
double circular_distance(double a_deg, double b_deg);
double wrap360(double deg);

PhaseReadout extract_phases(const Waveform& w, double v_th, int n_settle, int ref);
PhaseReadout extract_phases(const CrossingLog& log, int n_settle, int ref);

std::vector<Pixel> binarize(const PhaseReadout& r, double band_deg);

/// Key-oscillator groups (0-based). 3x3 row-major: vertical {1,4,7},
/// horizontal {3,4,5}, diag_main {0,4,8}, diag_anti {2,4,6}. 2x2 row-major:
/// vertical {0,2}, horizontal {0,1}, diag_main {0,3}, diag_anti {1,2}.
/// Uniform is every oscillator.
const std::vector<std::vector<int>>& feature_groups(int n);

FeatureVector detect_features(const std::vector<double>& phases_deg, double theta_tol);
inline FeatureVector detect_features(const PhaseReadout& r, double theta_tol) {
  return detect_features(r.phase_deg, theta_tol);
}

}  // namespace onn
