#include "onn/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "onn/error.hpp"
#include "onn/text.hpp"

namespace onn {

namespace fs = std::filesystem;

namespace {

struct Stage {
  const RunConfig& cfg;
  std::string name;
  fs::path dir;
  RunManifest manifest;

  Stage(const RunConfig& c, std::string n, const StageOptions& opt)
      : cfg(c), name(std::move(n)), dir(opt.out_dir.empty() ? c.output_dir : opt.out_dir) {
    manifest.config_hash = c.hash;
    manifest.version = library_version();
    manifest.stage = name;
  }

  [[nodiscard]] fs::path manifest_path() const { return dir / ("manifest_" + name + ".json"); }

  // A previous run of this stage with the same config and all outputs present.
  std::optional<RunManifest> reusable() const {
    auto m = RunManifest::read(manifest_path().string());
    if (!m || m->config_hash != cfg.hash || m->stage != name) return std::nullopt;
    for (const auto& f : m->outputs) {
      if (!fs::exists(dir / f)) return std::nullopt;
    }
    return m;
  }

  void begin() {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
    manifest.started = manifest_timestamp();
  }

  std::ofstream open(const std::string& file, bool binary = false) {
    std::ofstream f(dir / file, binary ? std::ios::binary : std::ios::out);
    if (!f) throw Error(ErrorCode::kIo, "cannot write " + (dir / file).string());
    manifest.outputs.push_back(file);
    return f;
  }

  void add_output(const std::string& file) { manifest.outputs.push_back(file); }

  StageResult finish(std::string summary) {
    manifest.finished = manifest_timestamp();
    manifest.write(manifest_path().string());
    return {false, manifest, std::move(summary)};
  }
};

std::optional<StageResult> try_resume(const Stage& st, const StageOptions& opt) {
  if (!opt.resume) return std::nullopt;
  if (auto m = st.reusable()) return StageResult{true, *m, st.name + ": outputs up to date, nothing recomputed"};
  return std::nullopt;
}

NetworkConfig with_pixels(NetworkConfig cfg, const Pattern& pixels) {
  const double period = nominal_period(cfg);
  if (!pixels.empty()) {
    if (pixels.size() != cfg.units.size()) throw Error(ErrorCode::kLengthMismatch, "pixel count differs from network size");
    const auto d = delays_from_pixels(pixels, period);
    for (std::size_t i = 0; i < d.size(); ++i) cfg.units[i].delay = d[i];
  }
  return cfg;
}

NetworkConfig prepared_network(const RunConfig& c, const Pattern& pixels) {
  NetworkConfig cfg = c.network_config();
  if (c.network.variability.sigma_threshold > 0.0 || c.network.variability.sigma_resistance > 0.0) {
    apply_variability(cfg, c.network.variability, c.network.trim);
  }
  cfg = with_pixels(std::move(cfg), pixels);
  return with_defaults(std::move(cfg), c.network.steps_per_period, c.network.periods);
}

Dataset load_mnist27(const RunConfig& c) {
  if (c.conv.images.empty() || c.conv.labels.empty()) {
    throw Error(ErrorCode::kConfig, "conv.images and conv.labels are required for this stage");
  }
  return prepare_27(load_mnist_idx(c.conv.images, c.conv.labels));
}

FilterSpec filter_spec(const RunConfig& c) {
  FilterSpec s = c.conv.filter;
  s.filter = c.filter_template();
  return s;
}

Dataset slice(const Dataset& ds, std::size_t from, std::size_t n, const char* split) {
  if (from + n > ds.size()) throw Error(ErrorCode::kInvalidArgument, "split exceeds dataset size");
  Dataset out;
  out.split = split;
  out.images.assign(ds.images.begin() + static_cast<std::ptrdiff_t>(from),
                    ds.images.begin() + static_cast<std::ptrdiff_t>(from + n));
  out.labels.assign(ds.labels.begin() + static_cast<std::ptrdiff_t>(from),
                    ds.labels.begin() + static_cast<std::ptrdiff_t>(from + n));
  return out;
}

}  // namespace

StageResult run_simulate(const RunConfig& c, const StageOptions& opt) {
  Stage st(c, "simulate", opt);
  if (auto r = try_resume(st, opt)) return *r;
  st.begin();
  const auto cfg = prepared_network(c, c.network.pixels);
  const auto w = simulate(cfg);
  {
    auto f = st.open("waveform.csv");
    w.write_csv(f);
  }
  {
    auto f = st.open("events.csv");
    w.write_events_csv(f);
  }
  if (w.non_oscillating) st.manifest.warnings.push_back("NonOscillating: an oscillator switched < 3 times in the final half");
  const auto r = extract_phases(w, c.codec.v_th, c.codec.n_settle, c.codec.ref);
  {
    auto f = st.open("phases.json");
    r.write_json(f);
  }
  if (!r.all_locked()) st.manifest.warnings.push_back("NotLocked: some oscillator periods differ from the reference by >= 1%");
  std::ostringstream s;
  s << "simulate: " << cfg.size() << " oscillators, phases";
  for (double p : r.phase_deg) s << ' ' << format_double(std::round(p * 10.0) / 10.0);
  return st.finish(s.str());
}

StageResult run_program(const RunConfig& c, const StageOptions& opt) {
  Stage st(c, "program", opt);
  if (auto r = try_resume(st, opt)) return *r;
  std::vector<Pattern> pats;
  if (!c.network.patterns_file.empty()) {
    std::ifstream f(c.network.patterns_file);
    if (!f) throw Error(ErrorCode::kConfig, "cannot read " + c.network.patterns_file);
    pats = read_patterns(f);
  } else {
    pats = c.network.size == 4 ? edge_patterns_2x2() : edge_patterns_3x3();
  }
  const auto w = hebbian(pats);
  const auto coupling = program_coupling(w, c.learning.map);
  st.begin();
  {
    auto f = st.open("coupling.txt");
    write_coupling(f, coupling);
  }
  {
    auto f = st.open("weights.csv");
    for (int i = 0; i < w.n; ++i) {
      for (int j = 0; j < w.n; ++j) f << (j ? "," : "") << format_double(w.at(i, j));
      f << '\n';
    }
  }
  return st.finish("program: " + std::to_string(pats.size()) + " patterns -> " + std::to_string(w.n) + "x" +
                   std::to_string(w.n) + " coupling");
}

StageResult run_train(const RunConfig& c, const StageOptions& opt) {
  Stage st(c, "train", opt);
  if (auto r = try_resume(st, opt)) return *r;
  if (c.learning.instances.empty()) throw Error(ErrorCode::kConfig, "learning.instances must list at least one instance");
  std::vector<NetworkConfig> batch;
  std::vector<std::vector<double>> targets;
  for (const auto& inst : c.learning.instances) {
    batch.push_back(prepared_network(c, inst.pixels));
    targets.push_back(pattern_phases(inst.target, c.codec.ref));
  }
  const auto& spec = c.learning.train;
  auto recognized = [&](const std::vector<NetworkConfig>& b) {
    int n = 0;
    for (const auto& cfg : b) {
      const auto r = run_readout(cfg, spec.readout);
      if (spec.target_feature >= 0 && detect_features(r, spec.readout.theta_tol)[static_cast<std::size_t>(spec.target_feature)]) ++n;
    }
    return n;
  };
  const int before = recognized(batch);
  const auto res = train_onn(batch, targets, spec);
  for (auto& cfg : batch) cfg.coupling = res.coupling;
  const int after = recognized(batch);

  st.begin();
  {
    auto f = st.open("coupling.txt");
    write_coupling(f, res.coupling);
  }
  {
    auto f = st.open("train_history.csv");
    f << "epoch,cost_deg2\n";
    for (std::size_t i = 0; i < res.cost_history.size(); ++i) f << i << ',' << format_double(res.cost_history[i]) << '\n';
  }
  {
    auto f = st.open("train_report.json");
    f << "{\"instances\": " << batch.size() << ", \"epochs_run\": " << res.epochs_run
      << ", \"target_reached\": " << (res.target_reached ? "true" : "false") << ", \"recognized_before\": " << before
      << ", \"recognized_after\": " << after << "}\n";
  }
  return st.finish("train: " + std::to_string(res.epochs_run) + " epochs, recognized " + std::to_string(before) + " -> " +
                   std::to_string(after) + " of " + std::to_string(batch.size()));
}

StageResult run_filter(const RunConfig& c, const StageOptions& opt) {
  Stage st(c, "filter", opt);
  if (auto r = try_resume(st, opt)) return *r;
  const auto ds = load_mnist27(c);
  const auto spec = filter_spec(c);
  const auto out = build_onn_dataset(ds, spec, c.conv.n_train, c.conv.n_test);
  st.begin();
  long failed_train = 0;
  long failed_test = 0;
  for (const auto& m : out.train.maps) failed_train += m.failed_windows;
  for (const auto& m : out.test.maps) failed_test += m.failed_windows;
  {
    auto f = st.open("train.fmap", true);
    write_fmaps(f, out.train);
  }
  {
    auto f = st.open("test.fmap", true);
    write_fmaps(f, out.test);
  }
  {
    auto f = st.open("filter_report.json");
    f << "{\"n_train\": " << out.train.maps.size() << ", \"n_test\": " << out.test.maps.size()
      << ", \"unlocked_windows_train\": " << failed_train << ", \"unlocked_windows_test\": " << failed_test << "}\n";
  }
  if (failed_train + failed_test > 0) {
    st.manifest.warnings.push_back("NotLocked: " + std::to_string(failed_train + failed_test) + " windows did not lock");
  }
  return st.finish("filter: " + std::to_string(out.train.maps.size()) + " train / " + std::to_string(out.test.maps.size()) +
                   " test feature maps");
}

StageResult run_hybrid(const RunConfig& c, const StageOptions& opt) {
  Stage st(c, "hybrid", opt);
  if (auto r = try_resume(st, opt)) return *r;
  const auto ds = load_mnist27(c);
  const auto n_train = static_cast<std::size_t>(c.conv.n_train);
  const auto n_test = static_cast<std::size_t>(c.conv.n_test);
  const auto train = slice(ds, 0, n_train, "train");
  const auto test = slice(ds, n_train, n_test, "test");

  OnnDataset onn_train;
  OnnDataset onn_test;
  const fs::path cache = c.conv.fmap_dir;
  if (!c.conv.fmap_dir.empty() && fs::exists(cache / "train.fmap") && fs::exists(cache / "test.fmap")) {
    onn_train = load_fmaps((cache / "train.fmap").string());
    onn_test = load_fmaps((cache / "test.fmap").string());
  } else {
    const auto out = build_onn_dataset(ds, filter_spec(c), c.conv.n_train, c.conv.n_test);
    onn_train = out.train;
    onn_test = out.test;
  }
  if (onn_train.maps.size() != n_train || onn_test.maps.size() != n_test || onn_train.labels != train.labels ||
      onn_test.labels != test.labels) {
    throw Error(ErrorCode::kCountMismatch, "cached feature maps do not match the configured split");
  }

  const auto ref = train_reference_cnn(train, test, desk_arch(), c.cnn.hyper);
  if (c.cnn.n_calib > c.conv.n_train) throw Error(ErrorCode::kConfig, "cnn.n_calib exceeds conv.n_train");
  const auto calib = slice(train, 0, static_cast<std::size_t>(c.cnn.n_calib), "calib");
  const auto plan = match_filters(ref.model, onn_train.maps, calib);
  const auto hybrid = substitute_and_retrain(ref.model, ref.stats.test_acc, plan, train, onn_train, test, onn_test,
                                             c.cnn.hyper);

  st.begin();
  {
    auto f = st.open("reference.cnn");
    write_checkpoint(f, ref.model);
  }
  {
    auto f = st.open("reference_report.json");
    f << "{\"train_acc\": " << format_double(ref.stats.train_acc) << ", \"test_acc\": " << format_double(ref.stats.test_acc)
      << ", \"epoch_loss\": [";
    for (std::size_t i = 0; i < ref.stats.epoch_loss.size(); ++i) f << (i ? ", " : "") << format_double(ref.stats.epoch_loss[i]);
    f << "]}\n";
  }
  {
    auto f = st.open("hybrid_report.json");
    hybrid.write_json(f);
  }
  if (c.cnn.control) {
    const auto control = substitute_and_retrain(ref.model, ref.stats.test_acc, SubstitutionPlan{}, train, onn_train, test,
                                                onn_test, c.cnn.hyper);
    auto f = st.open("control_report.json");
    control.write_json(f);
  }
  std::ostringstream s;
  s << "hybrid: baseline test " << ref.stats.test_acc << ", hybrid train " << hybrid.train_acc << ", hybrid test "
    << hybrid.test_acc;
  return st.finish(s.str());
}

StageResult run_bench(const RunConfig& c, const StageOptions& opt) {
  Stage st(c, "bench", opt);
  if (auto r = try_resume(st, opt)) return *r;
  const auto rep = table2_report(c.bench);
  st.begin();
  {
    auto f = st.open("bench.json");
    rep.write_json(f);
  }
  {
    auto f = st.open("bench.txt");
    rep.write_table(f);
  }
  return st.finish("bench: " + std::to_string(rep.size.n_onn) + " ONNs");
}

}  // namespace onn
