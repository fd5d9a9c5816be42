#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "onn/onn_c.h"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct Common {
  std::string config;
  std::string out;
  bool resume = false;
};

void add_common(CLI::App* sub, Common& c, const char* config_flag = "--config") {
  sub->add_option(config_flag, c.config, "run configuration (JSON)")->required();
  sub->add_option("--out", c.out, "output directory (default: the config's output_dir)");
  sub->add_flag("--resume", c.resume, "reuse outputs of a finished run with the same config hash");
}

int report(const onn_error& err) {
  std::fprintf(stderr, "error: %s\n", err.message);
  return err.code;
}

// Config and input-format problems are usage errors; everything else is a
// runtime failure.
bool usage_error(int code, const std::string& stage) {
  if (code == ONN_CONFIG) return true;
  if (stage == "program") return code == ONN_FORMAT || code == ONN_LENGTH_MISMATCH || code == ONN_INVALID_ARGUMENT;
  return false;
}

onn_config* load(const Common& c, onn_error& err) {
  onn_config* cfg = nullptr;
  if (onn_config_load(c.config.c_str(), &cfg, &err) != ONN_OK) return nullptr;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Oscillatory neural network simulator and pipelines"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(onn_version()));

  Common c;
  std::string patterns;
  std::string images;
  std::string labels;
  std::string fmap_dir;
  int k = 0;
  int stride = 0;
  int n_train = -1;
  int n_test = -1;
  std::string format = "table";

  auto* sim = app.add_subcommand("simulate", "simulate a network; writes waveform CSV, events and phase JSON");
  add_common(sim, c);
  auto* prog = app.add_subcommand("program", "Hebbian-program a coupling file from patterns");
  add_common(prog, c);
  prog->add_option("--patterns", patterns, "pattern file, one pattern per line");
  auto* train = app.add_subcommand("train", "finite-difference training of the coupling conductances");
  add_common(train, c);
  auto* filt = app.add_subcommand("filter", "convolve MNIST images with the programmed ONN filter");
  add_common(filt, c);
  filt->add_option("--images", images, "IDX image file");
  filt->add_option("--labels", labels, "IDX label file");
  filt->add_option("--k", k, "window size (2 or 3)");
  filt->add_option("--stride", stride, "window stride");
  filt->add_option("--train", n_train, "number of training images");
  filt->add_option("--test", n_test, "number of test images");
  auto* hyb = app.add_subcommand("hybrid", "reference CNN, filter matching, substitution and retraining");
  add_common(hyb, c);
  hyb->add_option("--images", images, "IDX image file");
  hyb->add_option("--labels", labels, "IDX label file");
  hyb->add_option("--fmaps", fmap_dir, "directory with cached train.fmap/test.fmap");
  auto* bench = app.add_subcommand("bench", "array-size, energy and throughput table");
  add_common(bench, c, "--params");
  bench->alias("benchmark");
  bench->add_option("--format", format, "table or json")->check(CLI::IsMember({"table", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string stage = chosen->get_name();

  onn_error err{};
  onn_config* cfg = load(c, err);
  if (!cfg) {
    report(err);
    return kExitUsage;
  }

  std::vector<std::pair<const char*, std::string>> overrides;
  if (!patterns.empty()) overrides.emplace_back("network.patterns_file", patterns);
  if (!images.empty()) overrides.emplace_back("conv.images", images);
  if (!labels.empty()) overrides.emplace_back("conv.labels", labels);
  if (!fmap_dir.empty()) overrides.emplace_back("conv.fmap_dir", fmap_dir);
  if (k > 0) overrides.emplace_back("conv.k", std::to_string(k));
  if (stride > 0) overrides.emplace_back("conv.stride", std::to_string(stride));
  if (n_train >= 0) overrides.emplace_back("conv.n_train", std::to_string(n_train));
  if (n_test >= 0) overrides.emplace_back("conv.n_test", std::to_string(n_test));
  for (const auto& [key, value] : overrides) {
    if (onn_config_set(cfg, key, value.c_str(), &err) != ONN_OK) {
      report(err);
      onn_config_free(cfg);
      return kExitUsage;
    }
  }

  int skipped = 0;
  char summary[512] = {0};
  const int rc = onn_run_stage(cfg, stage.c_str(), c.out.empty() ? nullptr : c.out.c_str(), c.resume ? 1 : 0, &skipped,
                               summary, sizeof summary, &err);
  if (rc != ONN_OK) {
    report(err);
    onn_config_free(cfg);
    return usage_error(rc, stage) ? kExitUsage : kExitRuntime;
  }
  if (stage == "bench") {
    size_t needed = 0;
    onn_bench_report(cfg, format.c_str(), nullptr, 0, &needed, &err);
    std::string buf(needed, '\0');
    if (onn_bench_report(cfg, format.c_str(), buf.data(), buf.size(), &needed, &err) != ONN_OK) {
      report(err);
      onn_config_free(cfg);
      return kExitRuntime;
    }
    std::fputs(buf.c_str(), stdout);
  } else {
    std::printf("%s\n", summary);
  }
  onn_config_free(cfg);
  return 0;
}
