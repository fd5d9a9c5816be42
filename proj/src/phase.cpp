#include "onn/phase.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "onn/error.hpp"

namespace onn {

void validate_pattern(const Pattern& p) {
  for (double x : p) {
    if (!(x >= -1.0 && x <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "pattern entries must lie in [-1, 1]");
  }
}

bool PhaseReadout::all_locked() const {
  return std::all_of(locked.begin(), locked.end(), [](bool b) { return b; });
}

void PhaseReadout::write_json(std::ostream& os) const {
  std::ostringstream s;
  s.precision(17);
  s << "{\"period_s\": " << period << ", \"phases_deg\": [";
  for (std::size_t i = 0; i < phase_deg.size(); ++i) s << (i ? ", " : "") << phase_deg[i];
  s << "], \"locked\": [";
  for (std::size_t i = 0; i < locked.size(); ++i) s << (i ? ", " : "") << (locked[i] ? "true" : "false");
  s << "], \"ref\": " << ref << "}\n";
  os << s.str();
}

std::vector<double> delays_from_pixels(const Pattern& p, double period) {
  if (!(period > 0.0)) throw Error(ErrorCode::kInvalidArgument, "period must be positive");
  validate_pattern(p);
  std::vector<double> d(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) d[i] = ((1.0 - p[i]) / 2.0) * (period / 2.0);
  return d;
}

double wrap360(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  return r >= 360.0 ? 0.0 : r;
}

double circular_distance(double a, double b) {
  const double d = wrap360(a - b);
  return std::min(d, 360.0 - d);
}

namespace {

double mean_interval(const std::vector<double>& c) {
  return (c.back() - c.front()) / static_cast<double>(c.size() - 1);
}

PhaseReadout phases_from_crossings(const std::vector<std::vector<double>>& falling, double t_end, int n_settle,
                                   int ref) {
  const int n = static_cast<int>(falling.size());
  if (ref < 0 || ref >= n) throw Error(ErrorCode::kInvalidArgument, "reference index out of range");
  if (n_settle < 0) throw Error(ErrorCode::kInvalidArgument, "n_settle must be >= 0");
  const auto& rc = falling[static_cast<std::size_t>(ref)];
  if (rc.size() < 3) throw Error(ErrorCode::kInsufficientCrossings, "reference oscillator has < 3 falling-edge crossings");

  // Coarse reference period from the final half, then drop n_settle periods.
  const double t_cut = n_settle * estimate_period(rc, t_end);
  auto after_cut = [&](const std::vector<double>& c) {
    std::vector<double> out;
    for (double x : c) {
      if (x >= t_cut) out.push_back(x);
    }
    return out;
  };

  const auto ref_c = after_cut(rc);
  if (ref_c.size() < 3) {
    throw Error(ErrorCode::kInsufficientCrossings, "waveform too short for the settling window plus 3 reference periods");
  }
  PhaseReadout r;
  r.ref = ref;
  r.period = mean_interval(ref_c);
  r.phase_deg.assign(static_cast<std::size_t>(n), 0.0);
  r.locked.assign(static_cast<std::size_t>(n), true);

  for (int i = 0; i < n; ++i) {
    const auto c = after_cut(falling[static_cast<std::size_t>(i)]);
    if (c.size() < 3) {
      std::ostringstream os;
      os << "oscillator " << i << " has < 3 falling-edge crossings after settling";
      throw Error(ErrorCode::kInsufficientCrossings, os.str());
    }
    const double ti = mean_interval(c);
    r.locked[static_cast<std::size_t>(i)] = std::abs(ti - r.period) / r.period < 0.01;
    if (i == ref) continue;
    double sx = 0.0;
    double sy = 0.0;
    for (std::size_t k = c.size() - 3; k < c.size(); ++k) {
      // Nearest reference crossing at or before this one (or the first one).
      auto it = std::upper_bound(ref_c.begin(), ref_c.end(), c[k]);
      const double tr = it == ref_c.begin() ? ref_c.front() : *(it - 1);
      const double ph = 2.0 * std::numbers::pi * wrap360(360.0 * (c[k] - tr) / r.period) / 360.0;
      sx += std::cos(ph);
      sy += std::sin(ph);
    }
    r.phase_deg[static_cast<std::size_t>(i)] = wrap360(std::atan2(sy, sx) * 180.0 / std::numbers::pi);
  }
  return r;
}

}  // namespace

PhaseReadout extract_phases(const Waveform& w, double v_th, int n_settle, int ref) {
  if (w.t.empty()) throw Error(ErrorCode::kInsufficientCrossings, "empty waveform");
  std::vector<std::vector<double>> falling;
  falling.reserve(w.v.size());
  for (const auto& trace : w.v) falling.push_back(falling_crossings(w.t, trace, v_th));
  return phases_from_crossings(falling, w.t.back(), n_settle, ref);
}

PhaseReadout extract_phases(const CrossingLog& log, int n_settle, int ref) {
  return phases_from_crossings(log.falling, log.t_end, n_settle, ref);
}

std::vector<Pixel> binarize(const PhaseReadout& r, double band_deg) {
  if (!(band_deg > 0.0 && band_deg <= 90.0)) throw Error(ErrorCode::kInvalidArgument, "band_deg must lie in (0, 90]");
  std::vector<Pixel> out;
  out.reserve(r.phase_deg.size());
  for (double ph : r.phase_deg) {
    if (circular_distance(ph, 0.0) <= band_deg) {
      out.push_back(Pixel::kWhite);
    } else if (circular_distance(ph, 180.0) <= band_deg) {
      out.push_back(Pixel::kBlack);
    } else {
      out.push_back(Pixel::kAmbiguous);
    }
  }
  return out;
}

const std::vector<std::vector<int>>& feature_groups(int n) {
  static const std::vector<std::vector<int>> g4 = {{0, 2}, {0, 1}, {0, 3}, {1, 2}, {0, 1, 2, 3}};
  static const std::vector<std::vector<int>> g9 = {
      {1, 4, 7}, {3, 4, 5}, {0, 4, 8}, {2, 4, 6}, {0, 1, 2, 3, 4, 5, 6, 7, 8}};
  if (n == 4) return g4;
  if (n == 9) return g9;
  throw Error(ErrorCode::kUnsupportedSize, "feature detection supports 4 or 9 oscillators");
}

FeatureVector detect_features(const std::vector<double>& phases, double theta_tol) {
  const auto& groups = feature_groups(static_cast<int>(phases.size()));
  FeatureVector f{};
  for (int k = 0; k < kFeatureCount; ++k) {
    double spread = 0.0;
    const auto& g = groups[static_cast<std::size_t>(k)];
    for (std::size_t a = 0; a < g.size(); ++a) {
      for (std::size_t b = a + 1; b < g.size(); ++b) {
        spread = std::max(spread, circular_distance(phases[static_cast<std::size_t>(g[a])],
                                                    phases[static_cast<std::size_t>(g[b])]));
      }
    }
    f[static_cast<std::size_t>(k)] = spread <= theta_tol;
  }
  if (f[kUniform]) f[kVertical] = f[kHorizontal] = f[kDiagMain] = f[kDiagAnti] = false;
  return f;
}

}  // namespace onn
