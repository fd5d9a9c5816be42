#include "onn/config.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "onn/error.hpp"
#include "onn/rng.hpp"

namespace onn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::kConfig, msg); }

// Strict view of one JSON object: every key must be consumed before done().
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(where() + " must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  const json* raw(const char* key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  void num(const char* key, double& out) {
    if (const json* v = raw(key)) {
      if (!v->is_number()) fail(where(key) + " must be a number");
      out = v->get<double>();
    }
  }
  void integer(const char* key, int& out) {
    if (const json* v = raw(key)) {
      if (!v->is_number_integer()) fail(where(key) + " must be an integer");
      out = v->get<int>();
    }
  }
  void u64(const char* key, std::uint64_t& out) {
    if (const json* v = raw(key)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
        fail(where(key) + " must be a non-negative integer");
      }
      out = v->get<std::uint64_t>();
    }
  }
  void boolean(const char* key, bool& out) {
    if (const json* v = raw(key)) {
      if (!v->is_boolean()) fail(where(key) + " must be true or false");
      out = v->get<bool>();
    }
  }
  void str(const char* key, std::string& out) {
    if (const json* v = raw(key)) {
      if (!v->is_string()) fail(where(key) + " must be a string");
      out = v->get<std::string>();
    }
  }
  void nums(const char* key, std::vector<double>& out) {
    if (const json* v = raw(key)) out = to_nums(*v, where(key));
  }
  std::optional<Obj> sub(const char* key) {
    if (const json* v = raw(key)) return Obj(*v, where(key));
    return std::nullopt;
  }

  void done() const {
    for (const auto& [k, _] : j_.items()) {
      if (!seen_.count(k)) fail("unknown key " + where(k.c_str()));
    }
  }

  std::string where(const char* key = nullptr) const {
    std::string p = path_.empty() ? std::string("<root>") : path_;
    if (key) p = path_.empty() ? std::string(key) : path_ + "." + key;
    return p;
  }

  static std::vector<double> to_nums(const json& v, const std::string& where) {
    if (!v.is_array()) fail(where + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) fail(where + " must be an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string resolve(const std::string& base, const std::string& p, const std::string& key, bool must_exist) {
  if (p.empty()) return p;
  fs::path path(p);
  if (path.is_relative()) path = fs::path(base) / path;
  if (must_exist && !fs::exists(path)) fail(key + ": path does not exist: " + path.string());
  return path.lexically_normal().string();
}

int feature_from_name(const std::string& s) {
  static const char* names[] = {"vertical", "horizontal", "diag_main", "diag_anti", "uniform"};
  if (s == "none") return -1;
  for (int i = 0; i < kFeatureCount; ++i) {
    if (s == names[i]) return i;
  }
  fail("learning.target_feature must be one of vertical, horizontal, diag_main, diag_anti, uniform, none");
}

void read_device(Obj o, DeviceParams& d, NetworkBlock& n, bool& seeded) {
  o.num("r_ins_ohm", d.r_ins);
  o.num("r_met_ohm", d.r_met);
  o.num("v_high_v", d.v_high);
  o.num("v_low_v", d.v_low);
  o.num("sigma_threshold", n.variability.sigma_threshold);
  o.num("sigma_resistance", n.variability.sigma_resistance);
  seeded = o.has("seed");
  o.u64("seed", n.variability.seed);
  o.done();
}

void read_network(Obj o, NetworkBlock& n, const std::string& base) {
  o.integer("size", n.size);
  o.num("c_node_f", n.unit.c_node);
  o.num("g_load_s", n.unit.g_load);
  o.num("v_in_v", n.unit.v_in);
  o.num("steps_per_period", n.steps_per_period);
  o.num("periods", n.periods);
  o.integer("sample_every", n.sample_every);
  o.str("coupling_file", n.coupling_file);
  o.str("patterns_file", n.patterns_file);
  o.nums("pixels", n.pixels);
  o.boolean("trim", n.trim);
  o.done();
  n.coupling_file = resolve(base, n.coupling_file, "network.coupling_file", true);
  n.patterns_file = resolve(base, n.patterns_file, "network.patterns_file", true);
}

void read_codec(Obj o, ReadoutSpec& r) {
  o.num("v_th_v", r.v_th);
  o.integer("n_settle", r.n_settle);
  o.integer("ref", r.ref);
  o.num("theta_tol_deg", r.theta_tol);
  o.num("band_deg", r.band_deg);
  o.done();
}

void read_map(Obj o, ResistanceMap& m) {
  o.num("r_strong_ohm", m.r_strong);
  o.num("r_weak_ohm", m.r_weak);
  o.num("c_thresh", m.c_thresh);
  o.boolean("continuous", m.continuous);
  o.num("c_coupling_f", m.c_coupling);
  o.done();
}

void read_learning(Obj o, LearningBlock& l) {
  if (auto m = o.sub("map")) read_map(*m, l.map);
  o.num("eta_s2_per_deg2", l.train.eta);
  o.integer("epochs", l.train.epochs);
  o.num("delta", l.train.delta);
  o.num("g_min_s", l.train.g_min);
  o.num("g_max_s", l.train.g_max);
  std::string tf = "none";
  o.str("target_feature", tf);
  l.train.target_feature = feature_from_name(tf);
  if (const json* inst = o.raw("instances")) {
    if (!inst->is_array()) fail("learning.instances must be an array");
    for (std::size_t i = 0; i < inst->size(); ++i) {
      Obj e((*inst)[i], "learning.instances[" + std::to_string(i) + "]");
      TrainInstance t;
      e.nums("pixels", t.pixels);
      e.nums("target", t.target);
      e.done();
      if (t.pixels.empty() || t.pixels.size() != t.target.size()) {
        fail(e.where() + " needs equal-length, non-empty pixels and target");
      }
      l.instances.push_back(std::move(t));
    }
  }
  o.done();
}

void read_conv(Obj o, ConvBlock& c, const std::string& base) {
  o.integer("k", c.filter.k);
  o.integer("stride", c.filter.stride);
  o.num("steps_per_period", c.filter.steps_per_period);
  o.num("periods", c.filter.periods);
  o.boolean("per_window_variability", c.filter.per_window_variability);
  o.boolean("zero_unlocked", c.filter.zero_unlocked);
  o.str("images", c.images);
  o.str("labels", c.labels);
  o.str("fmap_dir", c.fmap_dir);
  o.integer("n_train", c.n_train);
  o.integer("n_test", c.n_test);
  o.done();
  c.images = resolve(base, c.images, "conv.images", true);
  c.labels = resolve(base, c.labels, "conv.labels", true);
  c.fmap_dir = resolve(base, c.fmap_dir, "conv.fmap_dir", false);
}

void read_cnn(Obj o, CnnBlock& c) {
  o.num("lr", c.hyper.lr);
  o.num("momentum", c.hyper.momentum);
  o.integer("batch", c.hyper.batch);
  o.integer("epochs", c.hyper.epochs);
  o.integer("n_calib", c.n_calib);
  o.boolean("control", c.control);
  o.done();
}

void read_tech(Obj o, OnnTechParams& t) {
  o.num("p_osc_w", t.p_osc);
  o.num("f_hz", t.f);
  o.num("v_mem_v", t.v_mem);
  o.num("r_mem_ohm", t.r_mem);
  o.num("settle_periods", t.settle_periods);
  o.done();
}

void read_platform(Obj o, DigitalPlatform& p) {
  o.str("name", p.name);
  o.num("tflops", p.tflops);
  o.num("watts", p.watts);
  o.done();
}

void read_bench(Obj o, BenchConfig& b) {
  if (auto s = o.sub("current")) read_tech(*s, b.current);
  if (auto s = o.sub("projected")) read_tech(*s, b.projected);
  if (auto s = o.sub("geometry")) {
    auto& g = b.geometry;
    s->integer("map_h", g.map_h);
    s->integer("map_w", g.map_w);
    s->integer("n_filters", g.n_filters);
    s->integer("features_per_onn", g.features_per_onn);
    s->integer("osc_per_onn", g.osc_per_onn);
    s->integer("mem_per_onn", g.mem_per_onn);
    s->integer("k", g.k);
    s->done();
  }
  if (auto s = o.sub("cpu")) read_platform(*s, b.cpu);
  if (auto s = o.sub("gpu")) read_platform(*s, b.gpu);
  o.num("mem_calibration", b.mem_calibration);
  o.done();
}

void validate_config(RunConfig& c, bool device_seeded) {
  c.device.validate();
  if (c.network.size < 1) fail("network.size must be >= 1");
  if (c.network.steps_per_period < 20.0 || c.network.periods <= 0.0 || c.network.sample_every < 1) {
    fail("network: steps_per_period >= 20, periods > 0 and sample_every >= 1 required");
  }
  if (!c.network.pixels.empty() && static_cast<int>(c.network.pixels.size()) != c.network.size) {
    fail("network.pixels must have network.size entries");
  }
  if (c.codec.n_settle < 0 || c.codec.ref < 0 || c.codec.ref >= c.network.size) fail("codec: bad n_settle or ref");
  c.network.variability.validate();
  c.learning.map.validate();
  c.learning.train.readout = c.codec;
  c.learning.train.validate();
  c.conv.filter.readout = c.codec;
  if (c.conv.n_train < 0 || c.conv.n_test < 0) fail("conv: n_train and n_test must be >= 0");
  if (c.cnn.n_calib < 1) fail("cnn.n_calib must be >= 1");
  c.cnn.hyper.seed = stage_seed(c.seed, "cnn");
  c.conv.filter.variability = c.network.variability;
  c.conv.filter.variability.seed = device_seeded ? c.network.variability.seed : stage_seed(c.seed, "conv");
  c.conv.filter.trim = c.network.trim;
  if (!device_seeded) c.network.variability.seed = stage_seed(c.seed, "network");
  for (const auto& inst : c.learning.instances) {
    validate_pattern(inst.pixels);
    validate_pattern(inst.target);
  }
  validate_pattern(c.network.pixels);
}

}  // namespace

std::uint64_t stage_seed(std::uint64_t seed, const std::string& stage) {
  return mix_seed(seed, std::stoull(fnv1a_hex(stage), nullptr, 16));
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Obj root(j, "");
  root.u64("seed", c.seed);
  root.str("output_dir", c.output_dir);
  bool device_seeded = false;
  if (auto o = root.sub("device")) read_device(*o, c.device, c.network, device_seeded);
  if (auto o = root.sub("network")) read_network(*o, c.network, base_dir);
  if (auto o = root.sub("codec")) read_codec(*o, c.codec);
  if (auto o = root.sub("learning")) read_learning(*o, c.learning);
  if (auto o = root.sub("conv")) read_conv(*o, c.conv, base_dir);
  if (auto o = root.sub("cnn")) read_cnn(*o, c.cnn);
  if (auto o = root.sub("bench")) read_bench(*o, c.bench);
  root.done();
  try {
    validate_config(c, device_seeded);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfig) throw;
    fail(e.what());
  }
  c.network.unit.device = c.device;
  c.hash = fnv1a_hex(j.dump());
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail("cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  const auto base = fs::path(path).parent_path();
  return parse_config(ss.str(), base.empty() ? "." : base.string());
}

NetworkConfig RunConfig::network_config() const {
  NetworkConfig cfg;
  OscillatorUnit u = network.unit;
  u.device = device;
  u.delay = 0.0;
  cfg.units.assign(static_cast<std::size_t>(network.size), u);
  if (!network.coupling_file.empty()) {
    std::ifstream f(network.coupling_file);
    if (!f) fail("cannot read " + network.coupling_file);
    cfg.coupling = read_coupling(f);
  } else {
    std::vector<Pattern> pats;
    if (!network.patterns_file.empty()) {
      std::ifstream f(network.patterns_file);
      if (!f) fail("cannot read " + network.patterns_file);
      pats = read_patterns(f);
    } else if (network.size == 4) {
      pats = edge_patterns_2x2();
    } else if (network.size == 9) {
      pats = edge_patterns_3x3();
    } else {
      fail("network.size other than 4 or 9 needs a coupling_file or patterns_file");
    }
    cfg.coupling = program_coupling(hebbian(pats), learning.map);
  }
  if (cfg.coupling.n != network.size) fail("coupling size differs from network.size");
  cfg.sample_every = network.sample_every;
  return cfg;
}

NetworkConfig RunConfig::filter_template() const {
  const int k = conv.filter.k;
  if (network.size != k * k) {
    OscillatorUnit u = network.unit;
    u.device = device;
    return default_filter(k, learning.map, u);
  }
  return network_config();
}

std::string manifest_timestamp() {
  std::time_t t = 0;
  if (const char* e = std::getenv("SOURCE_DATE_EPOCH")) {
    t = static_cast<std::time_t>(std::strtoll(e, nullptr, 10));
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const char* library_version() noexcept { return "1.0.0"; }

void RunManifest::write(const std::string& path) const {
  json j;
  j["config_hash"] = config_hash;
  j["version"] = version;
  j["stage"] = stage;
  j["started"] = started;
  j["finished"] = finished;
  j["outputs"] = outputs;
  j["warnings"] = warnings;
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + path);
  f << j.dump(2) << '\n';
}

std::optional<RunManifest> RunManifest::read(const std::string& path) {
  std::ifstream f(path);
  if (!f) return std::nullopt;
  try {
    json j = json::parse(f);
    RunManifest m;
    m.config_hash = j.at("config_hash").get<std::string>();
    m.version = j.at("version").get<std::string>();
    m.stage = j.at("stage").get<std::string>();
    m.started = j.at("started").get<std::string>();
    m.finished = j.at("finished").get<std::string>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    m.warnings = j.at("warnings").get<std::vector<std::string>>();
    return m;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

}  // namespace onn
