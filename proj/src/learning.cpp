#include "onn/learning.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "onn/error.hpp"
#include "onn/parallel.hpp"
#include "onn/text.hpp"

namespace onn {

void ResistanceMap::validate() const {
  if (!(r_strong > 0.0) || !(r_weak > r_strong) || !(c_thresh >= 0.0) || !(c_coupling >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "resistance map needs 0 < r_strong < r_weak, c_thresh >= 0");
  }
}

void TrainSpec::validate() const {
  if (!(eta > 0.0) || epochs < 0 || !(delta > 0.0 && delta < 0.1) || !(g_min > 0.0) || !(g_min < g_max)) {
    throw Error(ErrorCode::kInvalidArgument, "train spec needs eta > 0, epochs >= 0, 0 < delta < 0.1, 0 < g_min < g_max");
  }
}

CouplingWeights hebbian(const std::vector<Pattern>& patterns) {
  if (patterns.empty()) throw Error(ErrorCode::kInvalidArgument, "hebbian needs at least one pattern");
  const auto n = patterns.front().size();
  for (const auto& p : patterns) {
    if (p.size() != n) throw Error(ErrorCode::kLengthMismatch, "patterns differ in length");
    validate_pattern(p);
  }
  CouplingWeights w;
  w.n = static_cast<int>(n);
  w.c.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (const auto& p : patterns) s += p[i] * p[j];
      w.c[i * n + j] = s / static_cast<double>(n);
    }
  }
  return w;
}

std::vector<double> weights_to_resistance(const CouplingWeights& c, const ResistanceMap& map) {
  map.validate();
  const int n = c.n;
  double c_max = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) c_max = std::max(c_max, std::abs(c.at(i, j)));
    }
  }
  std::vector<double> r(static_cast<std::size_t>(n * n), std::numeric_limits<double>::infinity());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double a = std::abs(c.at(i, j));
      double rij;
      if (map.continuous) {
        rij = a > 0.0 ? std::clamp(map.r_strong * c_max / a, map.r_strong, map.r_weak) : map.r_weak;
      } else {
        rij = a > map.c_thresh ? map.r_strong : map.r_weak;
      }
      r[static_cast<std::size_t>(i * n + j)] = rij;
    }
  }
  return r;
}

CouplingSpec program_coupling(const CouplingWeights& c, const ResistanceMap& map) {
  const auto r = weights_to_resistance(c, map);
  CouplingSpec spec = CouplingSpec::none(c.n);
  for (int i = 0; i < c.n; ++i) {
    for (int j = i + 1; j < c.n; ++j) spec.set(i, j, r[static_cast<std::size_t>(i * c.n + j)], map.c_coupling);
  }
  return spec;
}

double wrapped_difference(double a, double b) {
  double d = wrap360(a - b);
  if (d > 180.0) d -= 360.0;
  return d;
}

double phase_cost(const std::vector<double>& out, const std::vector<double>& train) {
  if (out.size() != train.size()) throw Error(ErrorCode::kLengthMismatch, "phase vectors differ in length");
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = wrapped_difference(out[i], train[i]);
    s += d * d;
  }
  return 0.5 * s;
}

std::vector<double> pattern_phases(const Pattern& p, int ref) {
  validate_pattern(p);
  std::vector<double> ph(p.size());
  const double r = p.at(static_cast<std::size_t>(ref));
  for (std::size_t i = 0; i < p.size(); ++i) ph[i] = (p[i] >= 0.0) == (r >= 0.0) ? 0.0 : 180.0;
  return ph;
}

PhaseReadout run_readout(const NetworkConfig& cfg, const ReadoutSpec& spec, std::shared_ptr<StepCache> cache) {
  return extract_phases(simulate_crossings(cfg, spec.v_th, std::move(cache)), spec.n_settle, spec.ref);
}

namespace {

double conductance(const CouplingSpec& c, int i, int j) { return c.has_r(i, j) ? 1.0 / c.r(i, j) : 0.0; }

void set_conductance(CouplingSpec& c, int i, int j, double g) {
  c.set(i, j, g > 0.0 ? 1.0 / g : std::numeric_limits<double>::infinity(), c.c(i, j));
}

struct BatchCost {
  double cost = 0.0;
  bool locked = true;
  int recognized = 0;
};

// Summed-over-oscillators cost, averaged over the batch.
BatchCost evaluate(const std::vector<NetworkConfig>& batch, const std::vector<std::vector<double>>& phi_train,
                   const TrainSpec& spec) {
  BatchCost out;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto r = run_readout(batch[b], spec.readout);
    out.cost += phase_cost(r.phase_deg, phi_train[b]);
    out.locked = out.locked && r.all_locked();
    if (spec.target_feature >= 0 &&
        detect_features(r, spec.readout.theta_tol)[static_cast<std::size_t>(spec.target_feature)]) {
      ++out.recognized;
    }
  }
  out.cost /= static_cast<double>(batch.size());
  return out;
}

std::vector<NetworkConfig> with_coupling(std::vector<NetworkConfig> batch, const CouplingSpec& c) {
  for (auto& cfg : batch) cfg.coupling = c;
  return batch;
}

void check_batch(const std::vector<NetworkConfig>& batch, const std::vector<std::vector<double>>& phi_train) {
  if (batch.empty() || batch.size() != phi_train.size()) {
    throw Error(ErrorCode::kLengthMismatch, "batch and target lists must be non-empty and equal in length");
  }
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (static_cast<int>(phi_train[b].size()) != batch[b].size()) {
      throw Error(ErrorCode::kLengthMismatch, "target phase vector length differs from oscillator count");
    }
  }
}

}  // namespace

GradientResult fd_gradient(const std::vector<NetworkConfig>& batch, const std::vector<std::vector<double>>& phi_train,
                           const TrainSpec& spec) {
  spec.validate();
  check_batch(batch, phi_train);
  const int n = batch.front().size();
  const CouplingSpec& base = batch.front().coupling;

  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  std::vector<double> g_pair(pairs.size());
  std::vector<BatchCost> plus(pairs.size());
  std::vector<BatchCost> minus(pairs.size());
  parallel_for(2 * pairs.size(), [&](std::size_t k) {
    const auto [i, j] = pairs[k / 2];
    const double g = std::max(conductance(base, i, j), spec.g_min);
    const double h = spec.delta * g;
    CouplingSpec c = base;
    const bool up = (k % 2) == 0;
    set_conductance(c, i, j, up ? g + h : g - h);
    (up ? plus : minus)[k / 2] = evaluate(with_coupling(batch, c), phi_train, spec);
    g_pair[k / 2] = g;
  });

  GradientResult res;
  res.grad.assign(static_cast<std::size_t>(n * n), 0.0);
  res.flagged.assign(static_cast<std::size_t>(n * n), false);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [i, j] = pairs[k];
    const auto a = static_cast<std::size_t>(i * n + j);
    const auto b = static_cast<std::size_t>(j * n + i);
    if (!plus[k].locked || !minus[k].locked) {
      res.flagged[a] = res.flagged[b] = true;
      continue;
    }
    const double d = (plus[k].cost - minus[k].cost) / (2.0 * spec.delta * g_pair[k]);
    res.grad[a] = res.grad[b] = d;
  }
  res.cost = evaluate(batch, phi_train, spec).cost;
  return res;
}

GradientResult fd_gradient(const NetworkConfig& cfg, const std::vector<double>& phi_train, const TrainSpec& spec) {
  return fd_gradient(std::vector<NetworkConfig>{cfg}, std::vector<std::vector<double>>{phi_train}, spec);
}

TrainResult train_onn(const std::vector<NetworkConfig>& batch_in, const std::vector<std::vector<double>>& phi_train,
                      const TrainSpec& spec) {
  spec.validate();
  check_batch(batch_in, phi_train);
  auto batch = batch_in;
  const int n = batch.front().size();
  TrainResult res;
  res.coupling = batch.front().coupling;

  auto recognized_all = [&](const std::vector<NetworkConfig>& bt) {
    if (spec.target_feature < 0) return false;
    return evaluate(bt, phi_train, spec).recognized == static_cast<int>(bt.size());
  };

  if (recognized_all(batch)) {
    res.target_reached = true;
    res.cost_history.push_back(evaluate(batch, phi_train, spec).cost);
    return res;
  }
  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    const auto g = fd_gradient(batch, phi_train, spec);
    res.cost_history.push_back(g.cost);
    if (g.cost == 0.0) break;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double gij = conductance(res.coupling, i, j);
        const double next = std::clamp(gij - spec.eta * g.grad[static_cast<std::size_t>(i * n + j)], spec.g_min, spec.g_max);
        if (next != gij) set_conductance(res.coupling, i, j, next);
      }
    }
    batch = with_coupling(batch, res.coupling);
    res.epochs_run = epoch + 1;
    if (recognized_all(batch)) {
      res.target_reached = true;
      break;
    }
  }
  res.cost_history.push_back(evaluate(batch, phi_train, spec).cost);
  return res;
}

TrainResult train_onn(const NetworkConfig& cfg, const std::vector<double>& phi_train, const TrainSpec& spec) {
  return train_onn(std::vector<NetworkConfig>{cfg}, std::vector<std::vector<double>>{phi_train}, spec);
}

void write_coupling(std::ostream& os, const CouplingSpec& c) {
  c.validate();
  os << "onn-coupling v1 n=" << c.n << '\n';
  for (int i = 0; i < c.n; ++i) {
    for (int j = i + 1; j < c.n; ++j) {
      os << (i + 1) << ' ' << (j + 1) << ' ' << format_double(c.r(i, j)) << ' ' << format_double(c.c(i, j)) << '\n';
    }
  }
}

CouplingSpec read_coupling(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::kTruncatedFile, "empty coupling file");
  int n = 0;
  if (std::sscanf(line.c_str(), "onn-coupling v1 n=%d", &n) != 1 || n < 1) {
    throw Error(ErrorCode::kBadMagic, "expected header 'onn-coupling v1 n=<n>'");
  }
  CouplingSpec c = CouplingSpec::none(n);
  int rows = 0;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    int i = 0;
    int j = 0;
    std::string rs;
    std::string cs;
    if (!(ls >> i >> j >> rs >> cs) || i < 1 || j < 1 || i > n || j > n || i == j) {
      throw Error(ErrorCode::kFormat, "malformed coupling row: " + line);
    }
    c.set(i - 1, j - 1, parse_double(rs), parse_double(cs));
    ++rows;
  }
  if (rows == 0 && n > 1) throw Error(ErrorCode::kTruncatedFile, "coupling file has no rows");
  c.validate();
  return c;
}

std::vector<Pattern> read_patterns(std::istream& is) {
  std::vector<Pattern> out;
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    Pattern p;
    std::string tok;
    while (ls >> tok) p.push_back(parse_double(tok));
    if (p.empty()) continue;
    validate_pattern(p);
    if (!out.empty() && p.size() != out.front().size()) throw Error(ErrorCode::kLengthMismatch, "patterns differ in length");
    out.push_back(std::move(p));
  }
  if (out.empty()) throw Error(ErrorCode::kFormat, "pattern file contains no patterns");
  return out;
}

}  // namespace onn
