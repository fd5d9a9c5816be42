#include "onn/network.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "onn/error.hpp"
#include "onn/rng.hpp"

namespace onn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct StepMatrices {
  Eigen::MatrixXd p;  // K^-1 (M/h - A/2)
  Eigen::MatrixXd q;  // K^-1
};

}  // namespace

class StepCache {
 public:
  std::vector<double> fingerprint;
  std::unordered_map<std::uint64_t, StepMatrices> entries;
};

std::shared_ptr<StepCache> make_step_cache() { return std::make_shared<StepCache>(); }

void OscillatorUnit::validate() const {
  device.validate();
  if (!(c_node > 0.0) || !(g_load > 0.0) || !(v_in > 0.0) || !(delay >= 0.0) || !std::isfinite(c_node) ||
      !std::isfinite(g_load) || !std::isfinite(v_in) || !std::isfinite(delay)) {
    throw Error(ErrorCode::kInvariantViolated, "oscillator unit needs c_node > 0, g_load > 0, v_in > 0, delay >= 0");
  }
}

CouplingSpec CouplingSpec::none(int n) {
  CouplingSpec c;
  c.n = n;
  c.r_c.assign(static_cast<std::size_t>(n * n), kInf);
  c.c_c.assign(static_cast<std::size_t>(n * n), 0.0);
  return c;
}

bool CouplingSpec::has_r(int i, int j) const { return std::isfinite(r(i, j)); }

void CouplingSpec::set(int i, int j, double r_ohm, double c_farad) {
  if (i == j || i < 0 || j < 0 || i >= n || j >= n) {
    throw Error(ErrorCode::kInvalidArgument, "coupling index out of range or on the diagonal");
  }
  const auto a = static_cast<std::size_t>(i * n + j);
  const auto b = static_cast<std::size_t>(j * n + i);
  r_c[a] = r_c[b] = r_ohm;
  c_c[a] = c_c[b] = c_farad;
}

void CouplingSpec::validate() const {
  const auto nn = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  if (n < 1 || r_c.size() != nn || c_c.size() != nn) {
    throw Error(ErrorCode::kInvariantViolated, "coupling matrices must be n x n with n >= 1");
  }
  for (int i = 0; i < n; ++i) {
    if (has_r(i, i) || c(i, i) != 0.0) {
      throw Error(ErrorCode::kInvariantViolated, "coupling diagonal must be absent");
    }
    for (int j = 0; j < n; ++j) {
      const double ri = r(i, j);
      const double ci = c(i, j);
      if (ri != r(j, i) && !(std::isnan(ri) && std::isnan(r(j, i)))) {
        throw Error(ErrorCode::kInvariantViolated, "coupling resistances must be symmetric");
      }
      if (ci != c(j, i)) throw Error(ErrorCode::kInvariantViolated, "coupling capacitances must be symmetric");
      if (std::isnan(ri) || !(ri > 0.0)) {
        throw Error(ErrorCode::kInvariantViolated, "coupling resistances must be positive (or absent)");
      }
      if (!(ci >= 0.0) || !std::isfinite(ci)) {
        throw Error(ErrorCode::kInvariantViolated, "coupling capacitances must be finite and >= 0");
      }
    }
  }
}

void NetworkConfig::validate() const {
  if (units.empty() || static_cast<int>(units.size()) != coupling.n) {
    throw Error(ErrorCode::kInvariantViolated, "unit count must equal coupling size and be >= 1");
  }
  for (const auto& u : units) u.validate();
  coupling.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::kInvariantViolated, "dt must be > 0");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw Error(ErrorCode::kInvariantViolated, "t_end must be >= 0");
  if (sample_every < 1) throw Error(ErrorCode::kInvariantViolated, "sample_every must be >= 1");
}

bool oscillates(const OscillatorUnit& u) noexcept {
  const auto& d = u.device;
  const double a = u.v_in - d.v_low;   // node voltage where metal -> insulator
  const double b = u.v_in - d.v_high;  // node voltage where insulator -> metal
  const double gi = 1.0 / d.r_ins;
  const double gm = 1.0 / d.r_met;
  const double vinf_i = u.v_in * gi / (gi + u.g_load);
  const double vinf_m = u.v_in * gm / (gm + u.g_load);
  return d.valid() && b > 0.0 && vinf_i < b && vinf_m > a;
}

double relaxation_period(const OscillatorUnit& u) {
  if (!oscillates(u)) {
    throw Error(ErrorCode::kInvalidArgument, "bias point does not sustain relaxation oscillation");
  }
  const auto& d = u.device;
  const double a = u.v_in - d.v_low;
  const double b = u.v_in - d.v_high;
  const double gi = 1.0 / d.r_ins;
  const double gm = 1.0 / d.r_met;
  const double vinf_i = u.v_in * gi / (gi + u.g_load);
  const double vinf_m = u.v_in * gm / (gm + u.g_load);
  const double tau_i = u.c_node / (gi + u.g_load);
  const double tau_m = u.c_node / (gm + u.g_load);
  return tau_i * std::log((vinf_i - a) / (vinf_i - b)) + tau_m * std::log((vinf_m - b) / (vinf_m - a));
}

double nominal_period(const NetworkConfig& cfg) {
  double sum = 0.0;
  int count = 0;
  for (const auto& u : cfg.units) {
    if (oscillates(u)) {
      sum += relaxation_period(u);
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorCode::kInvalidArgument, "no unit in the network is biased to oscillate");
  return sum / count;
}

OscillatorUnit trim_unit(const OscillatorUnit& perturbed, const OscillatorUnit& nominal) {
  const double target = relaxation_period(nominal);
  OscillatorUnit u = perturbed;
  // Shift the supply so the switching window stays centred where it was;
  // the phase readout threshold then cuts every unit at the same point.
  u.v_in = nominal.v_in + 0.5 * ((perturbed.device.v_high + perturbed.device.v_low) -
                                 (nominal.device.v_high + nominal.device.v_low));

  // Scan log(g) outward from the nominal load and take the nearest sign change.
  const double g0 = nominal.g_load;
  auto err = [&](double g) {
    OscillatorUnit t = u;
    t.g_load = g;
    return oscillates(t) ? relaxation_period(t) - target : std::numeric_limits<double>::quiet_NaN();
  };
  constexpr int kSteps = 400;
  constexpr double kSpan = 1.0;  // e-folds either side
  for (int k = 0; k < kSteps; ++k) {
    for (int sign : {1, -1}) {
      const double ga = g0 * std::exp(sign * kSpan * k / kSteps);
      const double gb = g0 * std::exp(sign * kSpan * (k + 1) / kSteps);
      double ea = err(ga);
      const double eb = err(gb);
      if (std::isnan(ea) || std::isnan(eb) || (ea > 0.0) == (eb > 0.0)) continue;
      double lo = ga;
      double hi = gb;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double em = err(mid);
        if ((em > 0.0) == (ea > 0.0)) {
          lo = mid;
          ea = em;
        } else {
          hi = mid;
        }
      }
      u.g_load = 0.5 * (lo + hi);
      return u;
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "no load conductance restores the nominal period for this unit");
}

void apply_variability(NetworkConfig& cfg, const VariabilitySpec& v, bool trim) {
  for (std::size_t i = 0; i < cfg.units.size(); ++i) {
    auto& u = cfg.units[i];
    const OscillatorUnit nominal = u;
    VariabilitySpec vi = v;
    vi.seed = mix_seed(v.seed, i);
    u.device = sample_variability(nominal.device, vi);
    if (trim) u = trim_unit(u, nominal);
  }
}

NetworkConfig with_defaults(NetworkConfig cfg, double steps_per_period, double periods) {
  if (cfg.dt == 0.0 || cfg.t_end == 0.0) {
    const double period = nominal_period(cfg);
    if (cfg.dt == 0.0) cfg.dt = period / steps_per_period;
    if (cfg.t_end == 0.0) {
      double max_delay = 0.0;
      for (const auto& u : cfg.units) max_delay = std::max(max_delay, u.delay);
      cfg.t_end = periods * period + max_delay;
    }
  }
  return cfg;
}

namespace {

Eigen::VectorXd g_dev(const SimContext& ctx, const std::vector<DeviceState>& s) {
  const int n = ctx.cfg.size();
  Eigen::VectorXd g(n);
  for (int i = 0; i < n; ++i) g[i] = 1.0 / device_resistance(s[static_cast<std::size_t>(i)], ctx.cfg.units[static_cast<std::size_t>(i)].device);
  return g;
}

// Supply vector held constant over a segment whose midpoint is t_mid.
Eigen::VectorXd supply(const SimContext& ctx, double t_mid) {
  const int n = ctx.cfg.size();
  Eigen::VectorXd vin(n);
  for (int i = 0; i < n; ++i) {
    const auto& u = ctx.cfg.units[static_cast<std::size_t>(i)];
    vin[i] = t_mid >= u.delay ? u.v_in : 0.0;
  }
  return vin;
}

Eigen::MatrixXd system_matrix(const SimContext& ctx, const Eigen::VectorXd& g) {
  Eigen::MatrixXd a = ctx.lap;
  for (int i = 0; i < a.rows(); ++i) a(i, i) += g[i] + ctx.cfg.units[static_cast<std::size_t>(i)].g_load;
  return a;
}

Eigen::VectorXd trap_uncached(const SimContext& ctx, const Eigen::VectorXd& g, const Eigen::VectorXd& b, double h) {
  const Eigen::MatrixXd a = system_matrix(ctx, g);
  const Eigen::MatrixXd mh = ctx.m / h;
  const Eigen::MatrixXd k = mh + 0.5 * a;
  const Eigen::VectorXd rhs = (mh - 0.5 * a) * ctx.v + b;
  return k.llt().solve(rhs);
}

std::uint64_t state_mask(const std::vector<DeviceState>& s) {
  std::uint64_t mask = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == DeviceState::kMetallic) mask |= (std::uint64_t{1} << i);
  }
  return mask;
}

std::vector<double> fingerprint(const SimContext& ctx) {
  std::vector<double> fp;
  const int n = ctx.cfg.size();
  fp.reserve(static_cast<std::size_t>(2 * n * n + 3 * n + 1));
  fp.push_back(ctx.dt);
  for (int i = 0; i < n * n; ++i) fp.push_back(ctx.m.data()[i]);
  for (int i = 0; i < n * n; ++i) fp.push_back(ctx.lap.data()[i]);
  for (const auto& u : ctx.cfg.units) {
    fp.push_back(u.g_load);
    fp.push_back(u.device.r_ins);
    fp.push_back(u.device.r_met);
  }
  return fp;
}

const StepMatrices& cached_matrices(SimContext& ctx, const Eigen::VectorXd& g) {
  auto& cache = *ctx.cache;
  const std::uint64_t key = state_mask(ctx.s);
  auto it = cache.entries.find(key);
  if (it != cache.entries.end()) return it->second;
  const Eigen::MatrixXd a = system_matrix(ctx, g);
  const Eigen::MatrixXd mh = ctx.m / ctx.dt;
  const Eigen::LLT<Eigen::MatrixXd> llt(mh + 0.5 * a);
  StepMatrices sm;
  sm.q = llt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
  sm.p = sm.q * (mh - 0.5 * a);
  return cache.entries.emplace(key, std::move(sm)).first->second;
}

// Devices that switch at node voltages v with supplies vin.
bool any_switch(const SimContext& ctx, const Eigen::VectorXd& v, const Eigen::VectorXd& vin) {
  for (int i = 0; i < v.size(); ++i) {
    const auto si = ctx.s[static_cast<std::size_t>(i)];
    if (switch_state(vin[i] - v[i], si, ctx.cfg.units[static_cast<std::size_t>(i)].device) != si) return true;
  }
  return false;
}

void commit_switches(SimContext& ctx, const Eigen::VectorXd& vin, std::vector<SwitchEvent>* events) {
  for (int i = 0; i < ctx.v.size(); ++i) {
    auto& si = ctx.s[static_cast<std::size_t>(i)];
    const auto next = switch_state(vin[i] - ctx.v[i], si, ctx.cfg.units[static_cast<std::size_t>(i)].device);
    if (next != si) {
      si = next;
      if (events) events->push_back({ctx.t, i, next});
    }
  }
}

using PointObserver = std::function<void(double t0, const Eigen::VectorXd& v0, double t1, const Eigen::VectorXd& v1)>;

void advance(SimContext& ctx, double h, std::vector<SwitchEvent>* events, const PointObserver* obs) {
  const double t_stop = ctx.t + h;
  const double tol = h * 1e-3;
  commit_switches(ctx, supply(ctx, ctx.t), events);
  int guard = 0;
  while (ctx.t < t_stop) {
    if (++guard > 100000) throw Error(ErrorCode::kStepRejected, "too many events inside one step");
    double seg = t_stop - ctx.t;
    bool supply_edge = false;
    for (const auto& u : ctx.cfg.units) {
      if (u.delay > ctx.t && u.delay < ctx.t + seg) {
        seg = u.delay - ctx.t;
        supply_edge = true;
      }
    }
    const Eigen::VectorXd vin = supply(ctx, ctx.t + 0.5 * seg);
    const Eigen::VectorXd g = g_dev(ctx, ctx.s);
    const Eigen::VectorXd b = g.cwiseProduct(vin);

    Eigen::VectorXd v_end;
    if (ctx.cache && seg == ctx.dt && ctx.cfg.size() < 64) {
      const auto& sm = cached_matrices(ctx, g);
      v_end = sm.p * ctx.v + sm.q * b;
    } else {
      v_end = trap_uncached(ctx, g, b, seg);
    }

    double taken = seg;
    if (any_switch(ctx, v_end, vin)) {
      double lo = 0.0;
      double hi = seg;
      Eigen::VectorXd v_hi = v_end;
      int it = 0;
      while (hi - lo > tol) {
        if (++it > 60) throw Error(ErrorCode::kStepRejected, "event bisection did not converge in 60 iterations");
        const double mid = 0.5 * (lo + hi);
        Eigen::VectorXd v_mid = trap_uncached(ctx, g, b, mid);
        if (any_switch(ctx, v_mid, vin)) {
          hi = mid;
          v_hi = std::move(v_mid);
        } else {
          lo = mid;
        }
      }
      taken = hi;
      v_end = std::move(v_hi);
    }

    const double t0 = ctx.t;
    const double t1 = (taken == seg) ? (supply_edge ? ctx.t + seg : t_stop) : ctx.t + taken;
    if (obs) (*obs)(t0, ctx.v, t1, v_end);
    ctx.v = std::move(v_end);
    ctx.t = t1;
    if (taken != seg) commit_switches(ctx, vin, events);
    if (ctx.t < t_stop || supply_edge) commit_switches(ctx, supply(ctx, ctx.t), events);
  }
  ctx.t = t_stop;
}

template <class Sink>
void run(const NetworkConfig& cfg, std::shared_ptr<StepCache> cache, std::vector<SwitchEvent>* events,
         const PointObserver* obs, Sink&& on_grid) {
  SimContext ctx = build_network(cfg, std::move(cache));
  on_grid(0, ctx);
  if (cfg.t_end <= 0.0) return;
  const auto steps = static_cast<long long>(std::ceil(cfg.t_end / cfg.dt - 1e-9));
  for (long long k = 1; k <= steps; ++k) {
    const double target = std::min(cfg.t_end, static_cast<double>(k) * cfg.dt);
    const double h = target - ctx.t;
    advance(ctx, h, events, obs);
    ctx.t = target;
    on_grid(k, ctx);
  }
}

bool flag_non_oscillating(const std::vector<SwitchEvent>& events, int n, double t_end) {
  std::vector<int> count(static_cast<std::size_t>(n), 0);
  for (const auto& e : events) {
    if (e.t > 0.5 * t_end) ++count[static_cast<std::size_t>(e.osc)];
  }
  return std::any_of(count.begin(), count.end(), [](int c) { return c < 3; });
}

}  // namespace

SimContext build_network(const NetworkConfig& cfg, std::shared_ptr<StepCache> cache) {
  cfg.validate();
  const int n = cfg.size();
  SimContext ctx;
  ctx.cfg = cfg;
  ctx.dt = cfg.dt;
  ctx.m = Eigen::MatrixXd::Zero(n, n);
  ctx.lap = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    ctx.m(i, i) = cfg.units[static_cast<std::size_t>(i)].c_node;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double c = cfg.coupling.c(i, j);
      ctx.m(i, i) += c;
      ctx.m(i, j) = -c;
      if (cfg.coupling.has_r(i, j)) {
        const double g = 1.0 / cfg.coupling.r(i, j);
        ctx.lap(i, i) += g;
        ctx.lap(i, j) = -g;
      }
    }
  }
  ctx.m_llt.compute(ctx.m);
  if (ctx.m_llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kSingularMatrix, "capacitance matrix is not positive definite");
  }
  ctx.v = Eigen::VectorXd::Zero(n);
  ctx.s.assign(static_cast<std::size_t>(n), DeviceState::kInsulating);
  if (cache) {
    auto fp = fingerprint(ctx);
    if (cache->fingerprint != fp) {
      cache->entries.clear();
      cache->fingerprint = std::move(fp);
    }
  }
  ctx.cache = std::move(cache);
  return ctx;
}

void step(SimContext& ctx, double dt, std::vector<SwitchEvent>* events) {
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "step size must be positive");
  advance(ctx, dt, events, nullptr);
}

double stored_energy(const SimContext& ctx) { return 0.5 * ctx.v.dot(ctx.m * ctx.v); }

Waveform simulate(const NetworkConfig& cfg) {
  Waveform w;
  const int n = cfg.size();
  w.v.assign(static_cast<std::size_t>(n), {});
  run(cfg, make_step_cache(), &w.events, nullptr, [&](long long k, const SimContext& ctx) {
    const bool last = ctx.t >= cfg.t_end;
    if (k % cfg.sample_every != 0 && !last) return;
    w.t.push_back(ctx.t);
    for (int i = 0; i < n; ++i) w.v[static_cast<std::size_t>(i)].push_back(ctx.v[i]);
  });
  if (cfg.t_end > 0.0) w.non_oscillating = flag_non_oscillating(w.events, n, cfg.t_end);
  return w;
}

CrossingLog simulate_crossings(const NetworkConfig& cfg, double v_th, std::shared_ptr<StepCache> cache) {
  CrossingLog log;
  const int n = cfg.size();
  log.v_th = v_th;
  log.t_end = cfg.t_end;
  log.falling.assign(static_cast<std::size_t>(n), {});
  std::vector<SwitchEvent> events;
  const PointObserver obs = [&](double t0, const Eigen::VectorXd& v0, double t1, const Eigen::VectorXd& v1) {
    for (int i = 0; i < n; ++i) {
      if (v0[i] > v_th && v1[i] <= v_th) {
        const double f = (v0[i] - v_th) / (v0[i] - v1[i]);
        log.falling[static_cast<std::size_t>(i)].push_back(t0 + f * (t1 - t0));
      }
    }
  };
  run(cfg, cache ? std::move(cache) : make_step_cache(), &events, &obs, [](long long, const SimContext&) {});
  if (cfg.t_end > 0.0) log.non_oscillating = flag_non_oscillating(events, n, cfg.t_end);
  return log;
}

std::vector<double> falling_crossings(const std::vector<double>& t, const std::vector<double>& v, double v_th) {
  if (t.size() != v.size()) throw Error(ErrorCode::kLengthMismatch, "time and voltage traces differ in length");
  std::vector<double> out;
  for (std::size_t k = 1; k < t.size(); ++k) {
    if (v[k - 1] > v_th && v[k] <= v_th) {
      const double f = (v[k - 1] - v_th) / (v[k - 1] - v[k]);
      out.push_back(t[k - 1] + f * (t[k] - t[k - 1]));
    }
  }
  return out;
}

double estimate_period(const std::vector<double>& crossings, double t_end) {
  std::vector<double> tail;
  for (double c : crossings) {
    if (c >= 0.5 * t_end) tail.push_back(c);
  }
  if (tail.size() < 3) {
    std::ostringstream os;
    os << "need >= 3 falling-edge crossings in the final half of the trace, found " << tail.size();
    throw Error(ErrorCode::kInsufficientCrossings, os.str());
  }
  return (tail.back() - tail.front()) / static_cast<double>(tail.size() - 1);
}

double estimate_period(const Waveform& w, int osc, double v_th) {
  if (osc < 0 || osc >= static_cast<int>(w.v.size())) throw Error(ErrorCode::kInvalidArgument, "oscillator index out of range");
  if (w.t.empty()) throw Error(ErrorCode::kInsufficientCrossings, "empty waveform");
  return estimate_period(falling_crossings(w.t, w.v[static_cast<std::size_t>(osc)], v_th), w.t.back());
}

void Waveform::write_csv(std::ostream& os) const {
  os << "t_s";
  for (std::size_t i = 0; i < v.size(); ++i) os << ",v" << (i + 1) << "_v";
  os << '\n';
  os.precision(17);
  for (std::size_t k = 0; k < t.size(); ++k) {
    os << t[k];
    for (const auto& trace : v) os << ',' << trace[k];
    os << '\n';
  }
}

void Waveform::write_events_csv(std::ostream& os) const {
  os << "t_s,osc,state\n";
  os.precision(17);
  for (const auto& e : events) os << e.t << ',' << e.osc << ',' << to_string(e.state) << '\n';
}

}  // namespace onn
