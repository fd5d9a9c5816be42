#include "onn/onn_c.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <new>
#include <sstream>

#include "onn/bench.hpp"
#include "onn/cnn.hpp"
#include "onn/config.hpp"
#include "onn/error.hpp"
#include "onn/pipeline.hpp"
#include "onn/text.hpp"

struct onn_config {
  onn::RunConfig cfg;
};

struct onn_network {
  onn::NetworkConfig cfg;
  std::shared_ptr<onn::StepCache> cache = onn::make_step_cache();
};

namespace {

int set_error(onn_error* err, int code, const char* msg) {
  if (err) {
    err->code = code;
    std::snprintf(err->message, sizeof err->message, "%s", msg);
  }
  return code;
}

template <class F>
int guarded(onn_error* err, F&& body) {
  if (err) {
    err->code = ONN_OK;
    err->message[0] = '\0';
  }
  try {
    body();
    return ONN_OK;
  } catch (const onn::Error& e) {
    return set_error(err, static_cast<int>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(err, ONN_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(err, ONN_INTERNAL, e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw onn::Error(onn::ErrorCode::kInvalidArgument, what);
}

onn::OscillatorUnit to_unit(const onn_unit* u) {
  require(u != nullptr, "unit is null");
  onn::OscillatorUnit o;
  o.device = {u->r_ins, u->r_met, u->v_high, u->v_low};
  o.c_node = u->c_node;
  o.g_load = u->g_load;
  o.v_in = u->v_in;
  o.validate();
  return o;
}

int parse_int(const char* v) {
  const double d = onn::parse_double(v);
  if (d != std::floor(d) || std::abs(d) > 1e9) throw onn::Error(onn::ErrorCode::kConfig, "expected an integer");
  return static_cast<int>(d);
}

std::string existing(const char* v) {
  if (!std::filesystem::exists(v)) throw onn::Error(onn::ErrorCode::kConfig, std::string("path does not exist: ") + v);
  return v;
}

}  // namespace

extern "C" {

const char* onn_version(void) { return onn::library_version(); }

const char* onn_status_name(int code) {
  if (code == ONN_INTERNAL) return "Internal";
  return onn::error_code_name(static_cast<onn::ErrorCode>(code));
}

int onn_config_load(const char* path, onn_config** out, onn_error* err) {
  return guarded(err, [&] {
    require(path && out, "null argument");
    *out = nullptr;
    auto* h = new onn_config{onn::load_config(path)};
    *out = h;
  });
}

void onn_config_free(onn_config* cfg) { delete cfg; }

int onn_config_set(onn_config* h, const char* key, const char* value, onn_error* err) {
  return guarded(err, [&] {
    require(h && key && value, "null argument");
    auto& c = h->cfg;
    const std::string k = key;
    if (k == "conv.images") c.conv.images = existing(value);
    else if (k == "conv.labels") c.conv.labels = existing(value);
    else if (k == "conv.k") c.conv.filter.k = parse_int(value);
    else if (k == "conv.stride") c.conv.filter.stride = parse_int(value);
    else if (k == "conv.n_train") c.conv.n_train = parse_int(value);
    else if (k == "conv.n_test") c.conv.n_test = parse_int(value);
    else if (k == "conv.fmap_dir") c.conv.fmap_dir = value;
    else if (k == "network.patterns_file") c.network.patterns_file = existing(value);
    else if (k == "output_dir") c.output_dir = value;
    else throw onn::Error(onn::ErrorCode::kConfig, "unknown override key " + k);
    if (c.conv.n_train < 0 || c.conv.n_test < 0) throw onn::Error(onn::ErrorCode::kConfig, "split sizes must be >= 0");
    // output_dir does not influence results, so it leaves the hash alone.
    if (k != "output_dir") c.hash = onn::fnv1a_hex(c.hash + "|" + k + "=" + value);
  });
}

int onn_config_hash(const onn_config* h, char* buf, size_t cap) {
  if (!h || !buf || cap < h->cfg.hash.size() + 1) return ONN_INVALID_ARGUMENT;
  std::memcpy(buf, h->cfg.hash.c_str(), h->cfg.hash.size() + 1);
  return ONN_OK;
}

int onn_run_stage(const onn_config* h, const char* stage, const char* out_dir, int resume, int* skipped, char* summary,
                  size_t summary_cap, onn_error* err) {
  return guarded(err, [&] {
    require(h && stage, "null argument");
    onn::StageOptions opt;
    opt.out_dir = out_dir ? out_dir : "";
    opt.resume = resume != 0;
    const std::string s = stage;
    onn::StageResult r;
    if (s == "simulate") r = onn::run_simulate(h->cfg, opt);
    else if (s == "program") r = onn::run_program(h->cfg, opt);
    else if (s == "train") r = onn::run_train(h->cfg, opt);
    else if (s == "filter") r = onn::run_filter(h->cfg, opt);
    else if (s == "hybrid") r = onn::run_hybrid(h->cfg, opt);
    else if (s == "bench") r = onn::run_bench(h->cfg, opt);
    else throw onn::Error(onn::ErrorCode::kInvalidArgument, "unknown stage " + s);
    if (skipped) *skipped = r.skipped ? 1 : 0;
    if (summary && summary_cap > 0) std::snprintf(summary, summary_cap, "%s", r.summary.c_str());
  });
}

int onn_bench_report(const onn_config* h, const char* format, char* buf, size_t cap, size_t* needed, onn_error* err) {
  return guarded(err, [&] {
    require(h && format, "null argument");
    const auto rep = onn::table2_report(h->cfg.bench);
    std::ostringstream os;
    const std::string f = format;
    if (f == "table") rep.write_table(os);
    else if (f == "json") rep.write_json(os);
    else throw onn::Error(onn::ErrorCode::kInvalidArgument, "format must be table or json");
    const std::string s = os.str();
    if (needed) *needed = s.size() + 1;
    if (buf && cap > 0) std::snprintf(buf, cap, "%s", s.c_str());
  });
}

void onn_unit_default(onn_unit* u) {
  if (!u) return;
  const onn::OscillatorUnit o;
  *u = {o.device.r_ins, o.device.r_met, o.device.v_high, o.device.v_low, o.c_node, o.g_load, o.v_in};
}

int onn_relaxation_period(const onn_unit* u, double* period, onn_error* err) {
  return guarded(err, [&] {
    require(period != nullptr, "null argument");
    *period = onn::relaxation_period(to_unit(u));
  });
}

int onn_network_create(int n, const onn_unit* unit, const double* r_c, const double* c_c, onn_network** out,
                       onn_error* err) {
  return guarded(err, [&] {
    require(out && r_c && c_c && n >= 1, "bad arguments");
    *out = nullptr;
    auto net = std::make_unique<onn_network>();
    net->cfg.units.assign(static_cast<std::size_t>(n), to_unit(unit));
    net->cfg.coupling = onn::CouplingSpec::none(n);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const auto a = static_cast<std::size_t>(i * n + j);
        const auto b = static_cast<std::size_t>(j * n + i);
        if (r_c[a] != r_c[b] || c_c[a] != c_c[b]) throw onn::Error(onn::ErrorCode::kInvariantViolated, "coupling must be symmetric");
        net->cfg.coupling.set(i, j, r_c[a], c_c[a]);
      }
    }
    net->cfg.coupling.validate();
    *out = net.release();
  });
}

int onn_network_program(int n, const onn_unit* unit, const double* patterns, int m, onn_network** out, onn_error* err) {
  return guarded(err, [&] {
    require(out && patterns && n >= 1 && m >= 1, "bad arguments");
    *out = nullptr;
    std::vector<onn::Pattern> pats(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) pats[static_cast<std::size_t>(k)].assign(patterns + k * n, patterns + (k + 1) * n);
    auto net = std::make_unique<onn_network>();
    net->cfg.units.assign(static_cast<std::size_t>(n), to_unit(unit));
    net->cfg.coupling = onn::program_coupling(onn::hebbian(pats), onn::ResistanceMap{});
    *out = net.release();
  });
}

void onn_network_free(onn_network* net) { delete net; }

int onn_network_size(const onn_network* net) { return net ? net->cfg.size() : 0; }

int onn_network_phases(onn_network* net, const double* pixels, double periods, double* phases_deg, int* locked,
                       onn_error* err) {
  return guarded(err, [&] {
    require(net && pixels && phases_deg && periods > 0.0, "bad arguments");
    onn::NetworkConfig cfg = net->cfg;
    const onn::Pattern p(pixels, pixels + cfg.size());
    const auto d = onn::delays_from_pixels(p, onn::nominal_period(cfg));
    for (std::size_t i = 0; i < d.size(); ++i) cfg.units[i].delay = d[i];
    cfg = onn::with_defaults(cfg, 2000.0, periods);
    const auto r = onn::run_readout(cfg, onn::ReadoutSpec{}, net->cache);
    for (int i = 0; i < cfg.size(); ++i) {
      phases_deg[i] = r.phase_deg[static_cast<std::size_t>(i)];
      if (locked) locked[i] = r.locked[static_cast<std::size_t>(i)] ? 1 : 0;
    }
  });
}

int onn_hebbian(const double* patterns, int m, int n, double* weights_out, onn_error* err) {
  return guarded(err, [&] {
    require(patterns && weights_out && m >= 1 && n >= 1, "bad arguments");
    std::vector<onn::Pattern> pats(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) pats[static_cast<std::size_t>(k)].assign(patterns + k * n, patterns + (k + 1) * n);
    const auto w = onn::hebbian(pats);
    std::copy(w.c.begin(), w.c.end(), weights_out);
  });
}

int onn_detect_features(const double* phases_deg, int n, double theta_tol, int* features_out, onn_error* err) {
  return guarded(err, [&] {
    require(phases_deg && features_out && n >= 1, "bad arguments");
    const auto f = onn::detect_features(std::vector<double>(phases_deg, phases_deg + n), theta_tol);
    for (int i = 0; i < onn::kFeatureCount; ++i) features_out[i] = f[static_cast<std::size_t>(i)] ? 1 : 0;
  });
}

double onn_count_params_reduction(int n_filters, int k) {
  try {
    return onn::count_params_reduction(n_filters, k);
  } catch (const onn::Error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // extern "C"
